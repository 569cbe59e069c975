"""Physical definition of the hierarchical N = 3^k model and its elementary maps.

Units are hbar = 2m = 1.  Couplings live on slots ``(l, m)`` with level
``m = 1..k`` and ``l = 1..3^(k-m)``; slot ``(l, 1)`` couples the particles of
first-level cluster ``l`` and slot ``(l, m)`` for ``m >= 2`` couples the three
centres of mass of the sub-clusters of cluster ``l`` at level ``m``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping

__all__ = [
    "ModelValidationError",
    "ModelParams",
    "ValidatedModel",
    "slot_order",
    "slot_count",
    "a_of",
    "b_of",
    "validate",
    "mu_lower_bound",
]

Slot = tuple[int, int]


class ModelValidationError(ValueError):
    """Raised when a model definition violates one or more conditions.

    ``problems`` lists every violated condition, not just the first one.
    """

    def __init__(self, problems: list[str]):
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


def slot_order(k: int) -> list[Slot]:
    """Slots in chain order: levels ``k, k-1, ..., 1``, ``l`` ascending within a level.

    The final entry ``(3^(k-1), 1)`` is the slot without an angle of its own in
    the hyperspherical tree.
    """
    return [(l, m) for m in range(k, 0, -1) for l in range(1, 3 ** (k - m) + 1)]


def slot_count(k: int) -> int:
    """Number of angular slots, ``(3^k - 1) / 2``."""
    return (3**k - 1) // 2


def a_of(lam: float) -> float:
    """``a = sqrt(1 + 2 lambda) / 2``, defined for ``lambda > -1/2``."""
    if not lam > -0.5:
        raise ValueError(f"coupling must exceed -1/2, got {lam!r}")
    return 0.5 * math.sqrt(1.0 + 2.0 * lam)


def b_of(n: int, a: float) -> float:
    """``b = 3 (n + 1/2 + a)``; the angular eigenvalue is ``B = b**2``."""
    return 3.0 * (n + 0.5 + a)


@dataclass(frozen=True)
class ModelParams:
    """Unvalidated model definition.

    ``lam`` maps every slot ``(l, m)`` to its coupling.  Use :meth:`uniform`
    for the common case of one coupling everywhere.
    """

    k: int
    omega: float
    mu: float
    lam: Mapping[Slot, float] = field(default_factory=dict)

    @classmethod
    def uniform(cls, k: int, omega: float = 1.0, mu: float = 0.0, lam: float = 0.0,
                overrides: Mapping[Slot, float] | None = None) -> "ModelParams":
        table = {s: float(lam) for s in slot_order(k)} if isinstance(k, int) and k >= 1 else {}
        if overrides:
            table.update({tuple(s): float(v) for s, v in overrides.items()})
        return cls(k=k, omega=float(omega), mu=float(mu), lam=table)


@dataclass(frozen=True)
class ValidatedModel:
    """Immutable, validated model carrying the derived couplings ``a``."""

    k: int
    omega: float
    mu: float
    lam: Mapping[Slot, float]
    a: Mapping[Slot, float]

    @property
    def n_particles(self) -> int:
        return 3**self.k

    @property
    def slots(self) -> list[Slot]:
        return slot_order(self.k)

    def a_chain(self) -> list[float]:
        """Derived couplings in chain order."""
        return [self.a[s] for s in slot_order(self.k)]

    def fingerprint(self) -> str:
        """Short stable identifier of the model definition."""
        import hashlib

        text = f"k={self.k};omega={self.omega!r};mu={self.mu!r};" + ";".join(
            f"{l},{m}={self.lam[(l, m)]!r}" for l, m in slot_order(self.k)
        )
        return hashlib.sha256(text.encode()).hexdigest()[:16]


def _ground_bracket(k: int, a: Mapping[Slot, float]) -> float:
    # all quantum numbers zero: sum of b plus one unit per chain angle, plus 1/2
    slots = slot_order(k)
    return sum(b_of(0, a[s]) for s in slots) + (len(slots) - 1) + 0.5


def validate(params: ModelParams) -> ValidatedModel:
    """Check every condition and return a :class:`ValidatedModel`.

    Raises :class:`ModelValidationError` listing all violations: bad ``k`` or
    ``omega``, missing or out-of-range couplings, and ``mu`` at or below
    :func:`mu_lower_bound`.
    """
    problems: list[str] = []
    k = params.k
    if not isinstance(k, int) or isinstance(k, bool) or k < 2:
        raise ModelValidationError([f"bad-k: k must be an integer >= 2, got {k!r}"])
    if not (math.isfinite(params.omega) and params.omega > 0):
        problems.append(f"bad-omega: omega must be a finite positive number, got {params.omega!r}")
    if not math.isfinite(params.mu):
        problems.append(f"bad-mu: mu must be finite, got {params.mu!r}")

    expected = set(slot_order(k))
    given = {tuple(s) for s in params.lam}
    for s in sorted(expected - given, key=lambda t: (t[1], t[0])):
        problems.append(f"coupling-missing: lambda{s}")
    for s in sorted(given - expected, key=lambda t: (t[1], t[0])):
        problems.append(f"coupling-unknown-slot: lambda{s} is not a slot for k={k}")

    a: dict[Slot, float] = {}
    for s in slot_order(k):
        if s not in params.lam:
            continue
        lam = params.lam[s]
        if not (math.isfinite(lam) and lam > -0.5):
            problems.append(f"coupling-out-of-range: lambda{s} = {lam!r} must exceed -1/2")
        else:
            a[s] = a_of(lam)

    if not problems:
        bound = -_ground_bracket(k, a) ** 2
        if not params.mu > bound:
            problems.append(f"mu-below-bound: mu = {params.mu!r} must exceed {bound!r}")
    if problems:
        raise ModelValidationError(problems)
    lam = {s: float(params.lam[s]) for s in slot_order(k)}
    return ValidatedModel(k=k, omega=float(params.omega), mu=float(params.mu), lam=lam, a=a)


def mu_lower_bound(model: ValidatedModel) -> float:
    """``-(bracket at the all-zero index)**2``; valid models have ``mu`` above it."""
    return -_ground_bracket(model.k, model.a) ** 2
