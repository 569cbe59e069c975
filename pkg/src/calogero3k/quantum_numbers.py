"""Quantum-number bookkeeping, closed-form energies and spectrum enumeration.

A state of the hyperspherical solution carries

* ``n_r``      radial quantum number,
* ``n_alpha``  quantum number of the ``alpha`` hyperangle,
* ``Lambda``   one integer per chain angle, i.e. every slot except the last
  one ``(3^(k-1), 1)``, stored in chain order (see :func:`model.slot_order`),
* ``n``        one integer per slot (trigonometric Calogero excitations).

For ``k = 2`` the textbook index names map as ``i <-> Lambda(2,1)``,
``m <-> Lambda(1,1)``, ``j <-> Lambda(1,2)``, ``l <-> n_alpha`` and
``k <-> n_r``.

The bracket ``kappa0 = eps(first slot) + n_alpha + 1/2`` fixes the energy
``E = 2 omega (2 n_r + 1 + sqrt(mu + kappa0**2))``.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import Iterator, Mapping, Sequence

from .model import ValidatedModel, b_of, slot_order

__all__ = [
    "StateIndex",
    "CartesianIndex",
    "Level",
    "SpectrumTable",
    "EquivalenceReport",
    "InfeasibleStateError",
    "epsilon",
    "epsilon_chain",
    "kappa0",
    "energy",
    "energy_k2_explicit",
    "energy_mu0_cartesian",
    "enumerate_states",
    "enumerate_spectrum",
    "enumerate_cartesian_spectrum",
    "spectra_equivalence_mu0",
]

MERGE_TOL = 1e-9


class InfeasibleStateError(ValueError):
    """The square-root argument ``mu + kappa0**2`` is not positive."""


@dataclass(frozen=True, order=True)
class StateIndex:
    """Complete multi-index of one hyperspherical eigenstate."""

    k: int
    n_r: int
    n_alpha: int
    Lambda: tuple[int, ...]
    n: tuple[int, ...]

    def __post_init__(self):
        s = (3**self.k - 1) // 2
        if len(self.Lambda) != s - 1 or len(self.n) != s:
            raise ValueError(
                f"k={self.k} needs {s - 1} Lambda and {s} n entries, "
                f"got {len(self.Lambda)} and {len(self.n)}"
            )
        values = (self.n_r, self.n_alpha, *self.Lambda, *self.n)
        if any(int(v) != v or v < 0 for v in values):
            raise ValueError(f"quantum numbers must be non-negative integers: {values}")

    @classmethod
    def ground(cls, k: int) -> "StateIndex":
        s = (3**k - 1) // 2
        return cls(k, 0, 0, (0,) * (s - 1), (0,) * s)

    @classmethod
    def from_slots(cls, k: int, n_r: int = 0, n_alpha: int = 0,
                   Lambda: Mapping[tuple[int, int], int] | None = None,
                   n: Mapping[tuple[int, int], int] | None = None) -> "StateIndex":
        """Build from slot-keyed maps; missing entries default to zero."""
        order = slot_order(k)
        Lambda = dict(Lambda or {})
        n = dict(n or {})
        last = order[-1]
        if Lambda.get(last, 0):
            raise ValueError(f"slot {last} carries no Lambda quantum number")
        unknown = (set(Lambda) | set(n)) - set(order)
        if unknown:
            raise ValueError(f"unknown slots for k={k}: {sorted(unknown)}")
        return cls(k, n_r, n_alpha, tuple(Lambda.get(s, 0) for s in order[:-1]),
                   tuple(n.get(s, 0) for s in order))

    @classmethod
    def from_k2(cls, k: int = 0, l: int = 0, j: int = 0, m: int = 0, i: int = 0,
                n12: int = 0, n1: Sequence[int] = (0, 0, 0)) -> "StateIndex":
        """Build a k = 2 state from the textbook index names ``(k, l, j, m, i, n12, n1)``."""
        n11, n21, n31 = n1
        return cls(2, k, l, (j, m, i), (n12, n11, n21, n31))

    def lambda_map(self) -> dict[tuple[int, int], int]:
        return dict(zip(slot_order(self.k)[:-1], self.Lambda))

    def n_map(self) -> dict[tuple[int, int], int]:
        return dict(zip(slot_order(self.k), self.n))

    def to_dict(self) -> dict:
        return {"n_r": self.n_r, "n_alpha": self.n_alpha,
                "Lambda": {f"{l},{m}": v for (l, m), v in self.lambda_map().items()},
                "n": {f"{l},{m}": v for (l, m), v in self.n_map().items()}}


@dataclass(frozen=True, order=True)
class CartesianIndex:
    """Multi-index of the separable ``mu = 0`` solution.

    ``M`` is the Hermite index of the top centre of mass; ``K`` and ``n`` hold
    one Laguerre and one angular index per slot, in chain order.
    """

    k: int
    M: int
    K: tuple[int, ...]
    n: tuple[int, ...]


def _check_state(model: ValidatedModel, state: StateIndex) -> None:
    if state.k != model.k:
        raise ValueError(f"state has k={state.k}, model has k={model.k}")


def epsilon_chain(model: ValidatedModel, state: StateIndex) -> list[float]:
    """Tail sums ``eps_p`` for every chain position ``p``.

    ``eps_last = b_last`` and ``eps_p = 2 Lambda_p + 1 + b_p + eps_(p+1)``.
    """
    _check_state(model, state)
    a = model.a_chain()
    s = len(a)
    eps = [0.0] * s
    eps[-1] = b_of(state.n[-1], a[-1])
    for p in range(s - 2, -1, -1):
        eps[p] = 2 * state.Lambda[p] + 1 + b_of(state.n[p], a[p]) + eps[p + 1]
    return eps


def epsilon(model: ValidatedModel, state: StateIndex, ell: int, m: int) -> float:
    """Tail sum anchored at slot ``(ell, m)``.

    At ``(1, k)`` this is the full sum entering the ``alpha`` equation; adding
    ``n_alpha + 1/2`` gives :func:`kappa0`.
    """
    order = slot_order(model.k)
    try:
        p = order.index((ell, m))
    except ValueError:
        raise ValueError(f"({ell}, {m}) is not a slot anchor for k={model.k}") from None
    return epsilon_chain(model, state)[p]


def kappa0(model: ValidatedModel, state: StateIndex) -> float:
    """Bracket ``eps(1, k) + n_alpha + 1/2``; equals ``kappa`` when ``mu = 0``."""
    return epsilon_chain(model, state)[0] + state.n_alpha + 0.5


def _energy_from_bracket(omega: float, mu: float, n_r: int, bracket: float) -> float:
    arg = mu + bracket * bracket
    if not arg > 0:
        raise InfeasibleStateError(f"mu + bracket^2 = {arg!r} is not positive")
    root = bracket if mu == 0 else math.sqrt(arg)
    return 2.0 * omega * (2 * n_r + 1 + root)


def energy(model: ValidatedModel, state: StateIndex) -> float:
    """``E = 2 omega (2 n_r + 1 + sqrt(mu + kappa0**2))``."""
    return _energy_from_bracket(model.omega, model.mu, state.n_r, kappa0(model, state))


def energy_k2_explicit(model: ValidatedModel, k: int, l: int, j: int, m: int, i: int,
                       n12: int, n1: Sequence[int]) -> float:
    """k = 2 energy written out with the textbook index names."""
    if model.k != 2:
        raise ValueError("energy_k2_explicit requires a k = 2 model")
    a = model.a
    bracket = (l + 2 * j + 2 * m + 2 * i + 3 * n12 + 3 * a[(1, 2)]
               + sum(3 * (n1[M - 1] + a[(M, 1)]) for M in (1, 2, 3)) + 9.5)
    return _energy_from_bracket(model.omega, model.mu, k, bracket)


def energy_mu0_cartesian(model: ValidatedModel, M: int, K: Mapping[tuple[int, int], int] | Sequence[int],
                         n: Mapping[tuple[int, int], int] | Sequence[int]) -> float:
    """Separable-solution energy ``2 omega (1/2 + M + sum_s [1 + 2 K_s + b_s])``.

    ``K`` and ``n`` are slot-keyed maps or chain-ordered sequences covering
    every slot (the Laguerre grid includes the slot without a chain angle).
    """
    if model.mu != 0:
        raise ValueError("the separable spectrum is only valid for mu = 0")
    order = slot_order(model.k)
    Kc = [K.get(s, 0) for s in order] if isinstance(K, Mapping) else list(K)
    nc = [n.get(s, 0) for s in order] if isinstance(n, Mapping) else list(n)
    if len(Kc) != len(order) or len(nc) != len(order):
        raise ValueError("K and n must cover every slot")
    total = 0.5 + M + sum(1 + 2 * Kc[p] + b_of(nc[p], model.a[s]) for p, s in enumerate(order))
    return 2.0 * model.omega * total


# --------------------------------------------------------------------------
# Enumeration
# --------------------------------------------------------------------------


def _budget_dfs(costs: Sequence[float], budget: float) -> Iterator[tuple[tuple[int, ...], float]]:
    """All non-negative integer vectors ``v`` with ``sum(costs * v) <= budget``."""
    n = len(costs)
    vec = [0] * n

    def rec(pos: int, left: float):
        if pos == n:
            yield tuple(vec), budget - left
            return
        c = costs[pos]
        q = 0
        while q * c <= left + 1e-9:
            vec[pos] = q
            yield from rec(pos + 1, left - q * c)
            q += 1
        vec[pos] = 0

    yield from rec(0, budget)


def enumerate_states(model: ValidatedModel, e_max: float) -> Iterator[tuple[StateIndex, float]]:
    """Yield every ``(state, energy)`` with ``energy <= e_max`` (plus merge tolerance).

    Exhaustive because the bracket grows by 1, 2 and 3 per unit of ``n_alpha``,
    ``Lambda`` and ``n`` respectively and the energy is increasing in it.
    """
    k, om, mu = model.k, model.omega, model.mu
    tol = MERGE_TOL * om
    half = e_max / (2.0 * om) - 1.0
    if half < 0:
        return
    kappa_max_sq = half * half - mu
    if kappa_max_sq <= 0:
        return
    kappa_max = math.sqrt(kappa_max_sq)
    s = (3**k - 1) // 2
    ground = StateIndex.ground(k)
    k00 = kappa0(model, ground)
    budget = kappa_max - k00 + 1e-9
    if budget < 0:
        return
    costs = [1.0] + [2.0] * (s - 1) + [3.0] * s
    for vec, _ in _budget_dfs(costs, budget):
        base = StateIndex(k, 0, vec[0], vec[1:s], vec[s:])
        bracket = kappa0(model, base)
        if mu + bracket * bracket <= 0:
            continue
        e0 = _energy_from_bracket(om, mu, 0, bracket)
        n_r = 0
        while e0 + 4.0 * om * n_r <= e_max + tol:
            st = base if n_r == 0 else StateIndex(k, n_r, base.n_alpha, base.Lambda, base.n)
            yield st, e0 + 4.0 * om * n_r
            n_r += 1


@dataclass
class Level:
    energy: float
    degeneracy: int
    representatives: list = field(default_factory=list)


@dataclass
class SpectrumTable:
    """Sorted energy levels with degeneracies.

    Levels are merged when consecutive energies differ by less than
    ``1e-9 * omega``.  Only the first ``max_representatives`` indices of each
    level are kept.
    """

    levels: list[Level]
    cutoff: float
    model_hash: str

    @property
    def total_states(self) -> int:
        return sum(lv.degeneracy for lv in self.levels)

    def pairs(self) -> list[tuple[float, int]]:
        return [(lv.energy, lv.degeneracy) for lv in self.levels]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["energy", "degeneracy"])
        for lv in self.levels:
            w.writerow([f"{lv.energy:.12g}", lv.degeneracy])
        return buf.getvalue()

    def to_json(self) -> str:
        doc = {
            "schema": "calogero3k.spectrum/1",
            "cutoff": self.cutoff,
            "model_hash": self.model_hash,
            "levels": [
                {
                    "energy": float(f"{lv.energy:.12g}"),
                    "degeneracy": lv.degeneracy,
                    "representatives": [r.to_dict() if hasattr(r, "to_dict") else r for r in lv.representatives],
                }
                for lv in self.levels
            ],
        }
        return json.dumps(doc, indent=2) + "\n"


def _group(items: list[tuple[float, object]], omega: float, cutoff: float, model_hash: str,
           max_representatives: int) -> SpectrumTable:
    items.sort(key=lambda t: (t[0], t[1]))
    levels: list[Level] = []
    for e, idx in items:
        if levels and e - levels[-1].energy <= MERGE_TOL * omega:
            lv = levels[-1]
            lv.degeneracy += 1
            if len(lv.representatives) < max_representatives:
                lv.representatives.append(idx)
        else:
            levels.append(Level(e, 1, [idx]))
    return SpectrumTable(levels, cutoff, model_hash)


def enumerate_spectrum(model: ValidatedModel, e_max: float, max_representatives: int = 8) -> SpectrumTable:
    """Group every state with ``energy <= e_max`` into levels."""
    items = [(e, st) for st, e in enumerate_states(model, e_max)]
    if not items:
        import warnings

        warnings.warn(f"cutoff {e_max} lies below the ground energy; empty table", stacklevel=2)
    return _group(items, model.omega, e_max, model.fingerprint(), max_representatives)


def enumerate_cartesian_spectrum(model: ValidatedModel, e_max: float,
                                 max_representatives: int = 8) -> SpectrumTable:
    """Levels of the separable ``mu = 0`` solution up to ``e_max``."""
    if model.mu != 0:
        raise ValueError("the separable spectrum is only valid for mu = 0")
    k, om = model.k, model.omega
    s = (3**k - 1) // 2
    zero = (0,) * s
    e_ground = energy_mu0_cartesian(model, 0, zero, zero)
    budget = (e_max - e_ground) / (2.0 * om) + 1e-9
    items: list[tuple[float, object]] = []
    if budget >= 0:
        costs = [1.0] + [2.0] * s + [3.0] * s
        for vec, _ in _budget_dfs(costs, budget):
            idx = CartesianIndex(k, vec[0], vec[1:s + 1], vec[s + 1:])
            e = energy_mu0_cartesian(model, idx.M, idx.K, idx.n)
            if e <= e_max + MERGE_TOL * om:
                items.append((e, idx))
    return _group(items, om, e_max, model.fingerprint(), max_representatives)


@dataclass
class EquivalenceReport:
    equal: bool
    hyperspherical: list[tuple[float, int]]
    cartesian: list[tuple[float, int]]
    first_discrepancy: dict | None = None

    def to_json(self) -> str:
        return json.dumps({
            "schema": "calogero3k.equivalence/1",
            "equal": self.equal,
            "levels": [{"energy": float(f"{e:.12g}"), "degeneracy": d} for e, d in self.hyperspherical],
            "first_discrepancy": self.first_discrepancy,
        }, indent=2) + "\n"


def spectra_equivalence_mu0(model: ValidatedModel, e_max: float) -> EquivalenceReport:
    """Compare hyperspherical and separable level multisets up to ``e_max``."""
    if model.mu != 0:
        raise ValueError("spectral equivalence is only claimed for mu = 0")
    hyp = enumerate_spectrum(model, e_max).pairs()
    cart = enumerate_cartesian_spectrum(model, e_max).pairs()
    tol = MERGE_TOL * model.omega
    for pos in range(max(len(hyp), len(cart))):
        h = hyp[pos] if pos < len(hyp) else None
        c = cart[pos] if pos < len(cart) else None
        if h is None or c is None or abs(h[0] - c[0]) > tol or h[1] != c[1]:
            return EquivalenceReport(False, hyp, cart, {"position": pos, "hyperspherical": h, "cartesian": c})
    return EquivalenceReport(True, hyp, cart)
