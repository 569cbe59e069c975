"""Independent numerical checks of the closed-form results.

* Finite-difference eigensolvers for each separated one-dimensional operator.
  Eigenvalues come from Sturm-sequence bisection on the symmetric tridiagonal
  matrix and are extrapolated over a ladder of doubled grids.
* Factorized Gauss quadrature for inner products of nine-body eigenfunctions.

Near an inverse-square endpoint the solution behaves like ``x**p`` and the
3-point discretization error is not a pure series in ``h**2``: it also
contains ``h**(2p-1)`` and its products with ``h**2``.  The extrapolation
therefore fits ``lambda(h) = lambda_0 + sum_e c_e h**e`` over the exponents
``{2, 4, 6}`` together with ``j*gamma + 2*i`` (``gamma = 2p - 1``) by least
squares, adding ``h**e log h`` where an exponent collides with an even one.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import Callable, Sequence

import numba
import numpy as np
from scipy.linalg import solve_banded

from .model import ValidatedModel, b_of
from .orthopoly import gauss_jacobi_rule, gauss_laguerre_rule, gegenbauer, jacobi_poly, laguerre
from .quantum_numbers import StateIndex

__all__ = [
    "Grid1D",
    "OracleReport",
    "RegimeError",
    "sturm_count",
    "tridiagonal_lowest",
    "fd_eigenvalues",
    "fd_eigenvector",
    "richardson_exponents",
    "extrapolate",
    "fd_eigen_angular",
    "fd_eigen_jacobi_type",
    "fd_eigen_gegenbauer_type",
    "fd_eigen_radial",
    "radial_rmax",
    "InnerProduct",
    "QuadratureError",
    "inner_product",
    "OrthogonalityReport",
    "orthogonality_sweep",
]

DEFAULT_BASE_INTERVALS = 256
DEFAULT_LEVELS = 8


class RegimeError(ValueError):
    """Operator parameters outside the regime covered by the closed form."""


class QuadratureError(RuntimeError):
    """Quadrature did not reproduce itself after escalating the order."""


@dataclass(frozen=True)
class Grid1D:
    """Uniform grid on ``[left, right]`` with ``intervals`` cells; Dirichlet at both ends."""

    left: float
    right: float
    intervals: int

    def __post_init__(self):
        if self.intervals - 1 < 32:
            raise ValueError(f"need at least 32 interior nodes, got {self.intervals - 1}")
        if not self.right > self.left:
            raise ValueError("empty interval")

    @property
    def h(self) -> float:
        return (self.right - self.left) / self.intervals

    @property
    def n_interior(self) -> int:
        return self.intervals - 1

    def nodes(self) -> np.ndarray:
        return self.left + self.h * np.arange(1, self.intervals)

    def refined(self, factor: int = 2) -> "Grid1D":
        return Grid1D(self.left, self.right, self.intervals * factor)


# --------------------------------------------------------------------------
# Symmetric tridiagonal eigenvalues by bisection
# --------------------------------------------------------------------------


@numba.njit(cache=True)
def _sturm_count(d, e2, shift):
    count = 0
    q = d[0] - shift
    if q < 0.0:
        count += 1
    for i in range(1, d.size):
        if q == 0.0:
            q = 1e-300
        q = d[i] - shift - e2[i - 1] / q
        if q < 0.0:
            count += 1
    return count


@numba.njit(cache=True)
def _bisect_lowest(d, e, count):
    n = d.size
    e2 = e * e
    lo = d[0] - abs(e[0])
    hi = d[0] + abs(e[0])
    for i in range(1, n):
        rad = abs(e[i - 1]) + (abs(e[i]) if i < n - 1 else 0.0)
        lo = min(lo, d[i] - rad)
        hi = max(hi, d[i] + rad)
    out = np.empty(count)
    left = lo
    for j in range(count):
        a = left
        b = hi
        for _ in range(200):
            mid = 0.5 * (a + b)
            if mid == a or mid == b:
                break
            if _sturm_count(d, e2, mid) > j:
                b = mid
            else:
                a = mid
        out[j] = 0.5 * (a + b)
        left = a
    return out


def sturm_count(diag, offdiag, shift: float) -> int:
    """Number of eigenvalues below ``shift`` of the symmetric tridiagonal matrix."""
    d = np.ascontiguousarray(diag, dtype=float)
    e = np.ascontiguousarray(offdiag, dtype=float)
    return int(_sturm_count(d, e * e, float(shift)))


def tridiagonal_lowest(diag, offdiag, count: int) -> np.ndarray:
    """Lowest ``count`` eigenvalues by Sturm-sequence bisection (ascending)."""
    d = np.ascontiguousarray(diag, dtype=float)
    e = np.ascontiguousarray(offdiag, dtype=float)
    if not 1 <= count <= d.size:
        raise ValueError("count out of range")
    if d.size == 1:
        return d.copy()
    return _bisect_lowest(d, e, int(count))


def _fd_matrix(potential: Callable, grid: Grid1D):
    x = grid.nodes()
    h = grid.h
    d = 2.0 / (h * h) + potential(x)
    e = np.full(x.size - 1, -1.0 / (h * h))
    return d, e


def fd_eigenvalues(potential: Callable, grid: Grid1D, count: int) -> np.ndarray:
    """Lowest eigenvalues of ``-d2/dx2 + V`` with the 3-point stencil on ``grid``."""
    if count > grid.n_interior // 4:
        raise ValueError(f"grid too coarse for {count} eigenvalues")
    d, e = _fd_matrix(potential, grid)
    return tridiagonal_lowest(d, e, count)


def fd_eigenvector(potential: Callable, grid: Grid1D, index: int = 0):
    """Eigenvalue and unit-L2 eigenvector (``sum v**2 h = 1``) by inverse iteration."""
    d, e = _fd_matrix(potential, grid)
    lam = tridiagonal_lowest(d, e, index + 1)[index]
    n = d.size
    shift = lam * (1.0 + 1e-12) + 1e-12
    ab = np.zeros((3, n))
    ab[0, 1:] = e
    ab[1] = d - shift
    ab[2, :-1] = e
    v = np.random.default_rng(0).normal(size=n)
    for _ in range(4):
        v = solve_banded((1, 1), ab, v)
        v /= np.linalg.norm(v)
    v /= math.sqrt(grid.h)
    return lam, v


# --------------------------------------------------------------------------
# Extrapolation
# --------------------------------------------------------------------------


def richardson_exponents(gammas: Sequence[float], n_terms: int, cutoff: float = 6.0):
    """Error-expansion terms ``(exponent, with_log)`` sorted by exponent."""
    plain = {2.0, 4.0, 6.0}
    extra = set()
    for g in gammas:
        for j in range(1, 8):
            for i in range(3):
                e = round(j * g + 2 * i, 10)
                if 0 < e < cutoff:
                    extra.add(e)
    terms = {(e, False) for e in plain | extra}
    for e in extra:
        if any(abs(e - q) < 1e-9 for q in plain) and any(abs(e - j * g) < 1e-9 for g in gammas for j in range(1, 8)):
            terms.add((e, True))
    return sorted(terms)[:n_terms]


def extrapolate(hs: np.ndarray, values: np.ndarray, terms) -> np.ndarray:
    """Least-squares fit of ``lambda(h)``; returns the ``h -> 0`` intercept per column."""
    hs = np.asarray(hs, dtype=float)
    cols = [np.ones_like(hs)]
    for e, with_log in terms:
        cols.append(hs**e * (np.log(hs) if with_log else 1.0))
    A = np.column_stack(cols)
    # scale columns for conditioning
    scale = np.abs(A).max(axis=0)
    coef, *_ = np.linalg.lstsq(A / scale, np.asarray(values, dtype=float), rcond=None)
    return coef[0] / scale[0]


@dataclass
class OracleReport:
    """Closed-form values against raw and extrapolated finite-difference values."""

    operator: str
    parameters: dict
    closed_form: list[float]
    fd_finest: list[float]
    extrapolated: list[float]
    relative_error: list[float]
    grids: list[int] = field(default_factory=list)
    notes: dict = field(default_factory=dict)

    @property
    def max_relative_error(self) -> float:
        return max(self.relative_error)

    def passed(self, tol: float) -> bool:
        return self.max_relative_error < tol

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps({"schema": "calogero3k.oracle/1", **asdict(self)}, indent=2) + "\n"


def _run_ladder(name: str, params: dict, potential: Callable, grid: Grid1D, count: int,
                gammas: Sequence[float], exact: Sequence[float], levels: int) -> OracleReport:
    grids = [grid.refined(2**j) if j else grid for j in range(levels)]
    vals = np.array([fd_eigenvalues(potential, g, count) for g in grids])
    hs = np.array([g.h for g in grids])
    terms = richardson_exponents(gammas, levels - 2)
    ext = extrapolate(hs, vals, terms)
    exact = np.asarray(exact, dtype=float)
    rel = np.abs(ext - exact) / np.abs(exact)
    return OracleReport(name, params, exact.tolist(), vals[-1].tolist(), ext.tolist(), rel.tolist(),
                        [g.intervals for g in grids],
                        {"expansion": [[e, w] for e, w in terms]})


def fd_eigen_angular(lam: float, count: int = 3, grid: Grid1D | None = None,
                     levels: int = DEFAULT_LEVELS) -> OracleReport:
    """``-d2/dphi2 + 9 lambda / (2 sin(3 phi)**2)`` on ``]0, pi/3[`` against ``9 (n + 1/2 + a)**2``."""
    if not lam > -0.5:
        raise RegimeError(f"coupling must exceed -1/2, got {lam!r}")
    a = 0.5 * math.sqrt(1.0 + 2.0 * lam)
    grid = grid or Grid1D(0.0, math.pi / 3, DEFAULT_BASE_INTERVALS)

    def V(x):
        return 9.0 * lam / (2.0 * np.sin(3.0 * x) ** 2)

    exact = [9.0 * (n + 0.5 + a) ** 2 for n in range(count)]
    gammas = [2.0 * a] if lam != 0 else []
    return _run_ladder("angular", {"lambda": lam, "a": a}, V, grid, count, gammas, exact, levels)


def fd_eigen_jacobi_type(A: float, B: float, count: int = 3, grid: Grid1D | None = None,
                         levels: int = DEFAULT_LEVELS) -> OracleReport:
    """``-d2/dx2 + (A - 1/4)/sin**2 + (B - 1/4)/cos**2`` on ``]0, pi/2[``.

    Closed form ``(2 i + 1 + sqrt(A) + sqrt(B))**2``; requires ``A, B > 1/4``.
    """
    if not (A > 0.25 and B > 0.25):
        raise RegimeError(f"need A > 1/4 and B > 1/4, got A={A!r}, B={B!r}")
    sa, sb = math.sqrt(A), math.sqrt(B)
    grid = grid or Grid1D(0.0, math.pi / 2, DEFAULT_BASE_INTERVALS)

    def V(x):
        return (A - 0.25) / np.sin(x) ** 2 + (B - 0.25) / np.cos(x) ** 2

    exact = [(2 * i + 1 + sa + sb) ** 2 for i in range(count)]
    return _run_ladder("jacobi_type", {"A": A, "B": B}, V, grid, count,
                       [2 * g for g, c in ((sa, A), (sb, B)) if c != 0.25], exact, levels)


def fd_eigen_gegenbauer_type(D: float, count: int = 3, grid: Grid1D | None = None,
                             levels: int = DEFAULT_LEVELS) -> OracleReport:
    """``-d2/dx2 + (D - 1/4)/sin**2`` on ``]0, pi[`` against ``(l + sqrt(D) + 1/2)**2``."""
    if not D > 0:
        raise RegimeError(f"need D > 0, got {D!r}")
    sd = math.sqrt(D)
    grid = grid or Grid1D(0.0, math.pi, DEFAULT_BASE_INTERVALS)

    def V(x):
        return (D - 0.25) / np.sin(x) ** 2

    exact = [(l + sd + 0.5) ** 2 for l in range(count)]
    return _run_ladder("gegenbauer_type", {"D": D}, V, grid, count,
                       [2 * sd] if D != 0.25 else [], exact, levels)


def radial_rmax(omega: float, kappa: float, n: int) -> float:
    """Truncation radius ``max(8, (kappa + 4 sqrt(2n + kappa + 1)) / sqrt(omega))``."""
    return max(8.0, (kappa + 4.0 * math.sqrt(2 * n + kappa + 1)) / math.sqrt(omega))


def fd_eigen_radial(omega: float, C: float, count: int = 3, r_max: float | None = None,
                    grid: Grid1D | None = None, levels: int = DEFAULT_LEVELS) -> OracleReport:
    """``-d2/dr2 + omega**2 r**2 + (C - 1/4)/r**2`` on ``]0, r_max[`` against ``2 omega (2n + kappa + 1)``.

    The report notes carry a tail check: the change of the coarsest-grid
    eigenvalues when ``r_max`` is doubled at fixed ``h``.
    """
    if not C > 0:
        raise RegimeError(f"need C = mu + A > 0, got {C!r}")
    if not omega > 0:
        raise RegimeError(f"need omega > 0, got {omega!r}")
    kappa = math.sqrt(C)
    r_max = r_max or radial_rmax(omega, kappa, count - 1)
    grid = grid or Grid1D(0.0, r_max, DEFAULT_BASE_INTERVALS)

    def V(r):
        return omega**2 * r * r + (C - 0.25) / (r * r)

    exact = [2 * omega * (2 * n + kappa + 1) for n in range(count)]
    rep = _run_ladder("radial", {"omega": omega, "C": C, "kappa": kappa, "r_max": grid.right},
                      V, grid, count, [2 * kappa], exact, levels)
    base = fd_eigenvalues(V, grid, count)
    doubled = fd_eigenvalues(V, Grid1D(grid.left, 2 * grid.right, 2 * grid.intervals), count)
    rep.notes["tail_check_max_relative_change"] = float(np.max(np.abs(doubled - base) / np.abs(base)))
    return rep


# --------------------------------------------------------------------------
# Factorized inner products (k = 2)
# --------------------------------------------------------------------------

FACTORS = ("radial", "alpha", "theta", "beta", "phi", "phi12", "phi11", "phi21", "phi31")


def _k2_factor_params(model: ValidatedModel, s: StateIndex):
    """Per-factor ``(family, parameters, degree)`` for the nine-body eigenfunction."""
    j, m, i = s.Lambda
    n12, n11, n21, n31 = s.n
    a = model.a
    b12, b11, b21, b31 = (b_of(n12, a[(1, 2)]), b_of(n11, a[(1, 1)]),
                          b_of(n21, a[(2, 1)]), b_of(n31, a[(3, 1)]))
    bracket = s.n_alpha + 2 * (i + j + m) + b12 + b11 + b21 + b31 + 3.5
    kappa = bracket if model.mu == 0 else math.sqrt(model.mu + bracket * bracket)
    d = 2 * (i + j + m) + b11 + b21 + b31 + b12 + 3
    c = 2 * i + 2 * m + 2 + b11 + b21 + b31
    ri = 2 * i + 1 + b21 + b31
    return {
        "radial": ("lag", (kappa,), s.n_r),
        "alpha": ("geg", (d - 3.0, d + 0.5), s.n_alpha),
        "theta": ("jac", (c - 2.0, b12, c, b12), j),
        "beta": ("jac", (ri - 1.0, b11, ri, b11), m),
        "phi": ("jac", (b21, b31, b21, b31), i),
        "phi12": ("ang", (a[(1, 2)],), n12),
        "phi11": ("ang", (a[(1, 1)],), n11),
        "phi21": ("ang", (a[(2, 1)],), n21),
        "phi31": ("ang", (a[(3, 1)],), n31),
    }


# measure factors: theta sin^5 cos, beta sin^3 cos, phi sin 2phi = 2 sin cos
_MEASURE = {"theta": (5, 1, 1.0), "beta": (3, 1, 1.0), "phi": (1, 1, 2.0)}


def _factor_overlap(name: str, fa, fb, omega: float, order: int) -> float:
    fam, pa, na = fa
    _, pb, nb = fb
    if fam == "lag":
        ka, kb = pa[0], pb[0]
        t, w = gauss_laguerre_rule(order, 0.5 * (ka + kb))
        pref = 0.5 * omega ** (-(ka + kb + 2.0) / 2.0)
        return pref * float(np.sum(w * laguerre(na, ka, t) * laguerre(nb, kb, t)))
    if fam == "geg":
        # sin(alpha)**(ea + eb) against sin(alpha)**7, x = cos(alpha)
        p = 0.5 * (pa[0] + pb[0] + 6.0)
        x, w = gauss_jacobi_rule(order, p, p)
        return float(np.sum(w * gegenbauer(na, pa[1], x) * gegenbauer(nb, pb[1], x)))
    if fam == "jac":
        ms, mc, c0 = _MEASURE[name]
        # sin**S cos**C dtheta with x = cos(2 theta): (1/4) sin**(S-1) cos**(C-1) dx
        A = 0.5 * (pa[0] + pb[0] + ms - 1)
        B = 0.5 * (pa[1] + pb[1] + mc - 1)
        x, w = gauss_jacobi_rule(order, A, B)
        pref = c0 * 0.25 * 2.0 ** (-(A + B))
        return pref * float(np.sum(w * jacobi_poly(na, pa[2], pa[3], x) * jacobi_poly(nb, pb[2], pb[3], x)))
    if fam == "ang":
        qa, qb = 0.5 + pa[0], 0.5 + pb[0]
        # |sin 3phi|**(qa+qb) dphi on ]0, pi/3[, x = cos 3phi
        p = 0.5 * (qa + qb) - 0.5
        x, w = gauss_jacobi_rule(order, p, p)
        return float(np.sum(w * gegenbauer(na, qa, x) * gegenbauer(nb, qb, x))) / 3.0
    raise ValueError(fam)


def _overlap_checked(name, fa, fb, omega, scale: float | None = None) -> float:
    """Factor overlap, re-evaluated at a higher order as an exactness check.

    Agreement is judged relative to ``scale`` (the geometric mean of the two
    self-overlaps) so that vanishing overlaps are accepted.  One escalation
    is attempted before giving up.
    """
    order = (fa[2] + fb[2] + 1) // 2 + 1 + 10
    v1 = _factor_overlap(name, fa, fb, omega, order)
    v2 = _factor_overlap(name, fa, fb, omega, order + 4)
    if scale is None:
        scale = max(abs(v1), abs(v2))
    if abs(v1 - v2) <= 1e-12 * scale:
        return v2
    if scale == max(abs(v1), abs(v2)):
        scale = math.sqrt(abs(_factor_overlap(name, fa, fa, omega, order))
                          * abs(_factor_overlap(name, fb, fb, omega, order)))
        if abs(v1 - v2) <= 1e-12 * scale:
            return v2
    v3 = _factor_overlap(name, fa, fb, omega, 2 * order + 4)
    if abs(v3 - v2) <= 1e-12 * scale:
        return v3
    raise QuadratureError(f"{name}: quadrature not converged ({v1!r}, {v2!r}, {v3!r})")


@dataclass
class InnerProduct:
    value: float
    normalized: float
    factors: dict


def inner_product(model: ValidatedModel, state_a: StateIndex, state_b: StateIndex) -> InnerProduct:
    """``<psi_a, psi_b>`` for ``k = 2`` as a product of nine 1D quadratures.

    The measure is ``r**8 sin(alpha)**7 sin(theta)**5 cos(theta)
    sin(beta)**3 cos(beta) sin(2 phi)`` with ``phi`` on ``]0, pi/2[`` and each
    slot angle on ``]0, pi/3[``.
    """
    if model.k != 2:
        raise ValueError("inner_product is implemented for k = 2")
    fa = _k2_factor_params(model, state_a)
    fb = _k2_factor_params(model, state_b)
    factors = {}
    value = 1.0
    norm_a = 1.0
    norm_b = 1.0
    for name in FACTORS:
        v = _overlap_checked(name, fa[name], fb[name], model.omega)
        factors[name] = v
        value *= v
        norm_a *= _overlap_checked(name, fa[name], fa[name], model.omega)
        norm_b *= _overlap_checked(name, fb[name], fb[name], model.omega)
    return InnerProduct(value, value / math.sqrt(norm_a * norm_b), factors)


@numba.njit(cache=True)
def _max_offdiag_product(ids, mats, offsets, sizes):
    n_states, n_fac = ids.shape
    best = 0.0
    bi = 0
    bj = 0
    for i in range(n_states):
        for j in range(i + 1, n_states):
            prod = 1.0
            for f in range(n_fac):
                prod *= abs(mats[offsets[f] + ids[i, f] * sizes[f] + ids[j, f]])
                if prod <= best:
                    break
            if prod > best:
                best = prod
                bi = i
                bj = j
    return best, bi, bj


@dataclass
class OrthogonalityReport:
    max_index: int
    n_states: int
    n_pairs: int
    max_normalized_overlap: float
    worst_pair: tuple
    unique_functions: dict

    def to_json(self) -> str:
        d = asdict(self)
        d["worst_pair"] = [s.to_dict() if hasattr(s, "to_dict") else s for s in self.worst_pair]
        return json.dumps({"schema": "calogero3k.orthogonality/1", **d}, indent=2) + "\n"


def orthogonality_sweep(model: ValidatedModel, max_index: int = 2) -> OrthogonalityReport:
    """Largest normalized overlap among all distinct ``k = 2`` states with indices ``<= max_index``.

    Each factor's normalized overlap matrix is built once over its distinct
    functions; the pair scan multiplies cached entries.
    """
    import itertools

    if model.k != 2:
        raise ValueError("orthogonality_sweep is implemented for k = 2")
    states = [StateIndex(2, c[0], c[1], c[2:5], c[5:9])
              for c in itertools.product(range(max_index + 1), repeat=9)]
    params = [_k2_factor_params(model, s) for s in states]
    ids = np.empty((len(states), len(FACTORS)), dtype=np.int64)
    mats, sizes, offsets, uniq = [], [], [], {}
    off = 0
    for f, name in enumerate(FACTORS):
        keys: dict = {}
        for s_i, p in enumerate(params):
            ids[s_i, f] = keys.setdefault(p[name], len(keys))
        funcs = list(keys)
        g = len(funcs)
        U = np.empty((g, g))
        for x in range(g):
            U[x, x] = _overlap_checked(name, funcs[x], funcs[x], model.omega)
        for x in range(g):
            for y in range(x + 1, g):
                scale = math.sqrt(abs(U[x, x] * U[y, y]))
                U[x, y] = U[y, x] = _overlap_checked(name, funcs[x], funcs[y], model.omega, scale)
        dg = np.sqrt(np.abs(np.diag(U)))
        Un = U / np.outer(dg, dg)
        mats.append(Un.ravel())
        sizes.append(g)
        offsets.append(off)
        off += g * g
        uniq[name] = g
    best, bi, bj = _max_offdiag_product(ids, np.concatenate(mats), np.array(offsets, dtype=np.int64),
                                        np.array(sizes, dtype=np.int64))
    n = len(states)
    return OrthogonalityReport(max_index, n, n * (n - 1) // 2, float(best),
                               (states[bi], states[bj]), uniq)
