"""Plain-text model and state definitions.

Model files hold one ``key = value`` per line; ``#`` starts a comment::

    k = 2
    omega = 1.0
    mu = 0.5
    lambda = 1.0        # broadcast to every slot
    lambda.1.2 = 4.0    # override slot (l=2, m=1): key is lambda.<m>.<l>

State strings are comma-separated ``key=value`` items with keys ``n_r``,
``n_alpha``, ``Lambda.<m>.<l>`` and ``n.<m>.<l>``; omitted entries are zero.
For ``k = 2`` the textbook names ``k, l, j, m, i, n12, n11, n21, n31`` are
also accepted.
"""

from __future__ import annotations

from pathlib import Path

from .model import ModelParams, ModelValidationError, ValidatedModel, slot_order, validate
from .quantum_numbers import StateIndex

__all__ = ["ConfigError", "ModelValidationError", "parse_model_text", "load_model", "parse_state"]


class ConfigError(ValueError):
    pass


def _pairs(text: str):
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value, got {raw!r}")
        key, value = (p.strip() for p in line.split("=", 1))
        yield lineno, key, value


def parse_model_text(text: str) -> ModelParams:
    """Parse a model definition without validating the physics."""
    seen: dict[str, str] = {}
    overrides: dict[tuple[int, int], float] = {}
    for lineno, key, value in _pairs(text):
        if key in seen:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        seen[key] = value
        if key.startswith("lambda."):
            parts = key.split(".")
            if len(parts) != 3:
                raise ConfigError(f"line {lineno}: slot keys look like lambda.<m>.<l>, got {key!r}")
            try:
                m, l = int(parts[1]), int(parts[2])
                overrides[(l, m)] = float(value)
            except ValueError:
                raise ConfigError(f"line {lineno}: bad slot override {key} = {value}") from None
        elif key not in ("k", "omega", "mu", "lambda"):
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
    for required in ("k", "omega", "mu"):
        if required not in seen:
            raise ConfigError(f"missing required key {required!r}")
    try:
        k = int(seen["k"])
        omega = float(seen["omega"])
        mu = float(seen["mu"])
        base = float(seen["lambda"]) if "lambda" in seen else None
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    if k < 1:
        raise ConfigError(f"k must be at least 1, got {k}")
    table = {s: base for s in slot_order(k)} if base is not None else {}
    table.update(overrides)
    return ModelParams(k=k, omega=omega, mu=mu, lam=table)


def load_model(path: str | Path) -> ValidatedModel:
    """Read and validate a model file; raises ConfigError or ModelValidationError."""
    params = parse_model_text(Path(path).read_text())
    return validate(params)


_K2_NAMES = {"k": "n_r", "l": "n_alpha", "j": ("Lambda", (1, 2)), "m": ("Lambda", (1, 1)),
             "i": ("Lambda", (2, 1)), "n12": ("n", (1, 2)), "n11": ("n", (1, 1)),
             "n21": ("n", (2, 1)), "n31": ("n", (3, 1))}


def parse_state(text: str, k: int) -> StateIndex:
    """Parse a state string such as ``"n_r=1, Lambda.2.1=1, n.2.1=2"``."""
    scalars = {"n_r": 0, "n_alpha": 0}
    lam: dict[tuple[int, int], int] = {}
    n: dict[tuple[int, int], int] = {}
    text = text.strip()
    if text in ("", "ground"):
        return StateIndex.ground(k)
    for item in text.split(","):
        if "=" not in item:
            raise ConfigError(f"bad state item {item!r}")
        key, value = (p.strip() for p in item.split("=", 1))
        try:
            v = int(value)
        except ValueError:
            raise ConfigError(f"quantum numbers are integers, got {key}={value}") from None
        if k == 2 and key in _K2_NAMES:
            target = _K2_NAMES[key]
            if isinstance(target, str):
                scalars[target] = v
            else:
                (lam if target[0] == "Lambda" else n)[target[1]] = v
        elif key in scalars:
            scalars[key] = v
        elif key.startswith(("Lambda.", "n.")):
            parts = key.split(".")
            if len(parts) != 3:
                raise ConfigError(f"slot keys look like {parts[0]}.<m>.<l>, got {key!r}")
            slot = (int(parts[2]), int(parts[1]))
            (lam if parts[0] == "Lambda" else n)[slot] = v
        else:
            raise ConfigError(f"unknown state key {key!r}")
    try:
        return StateIndex.from_slots(k, scalars["n_r"], scalars["n_alpha"], lam, n)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None

