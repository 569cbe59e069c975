"""Closed-form eigenfunctions, the potential, and Hamiltonian residual checks.

Eigenfunctions are evaluated as ``(log|psi|, sign)`` pairs so that large
exponents never overflow; :func:`eval_psi_general` and :func:`eval_psi_k2`
exponentiate only at the end.  Everything is vectorized over leading axes of
the configuration array ``x`` (last axis of length ``3**k``).
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass

import numpy as np

from . import coords
from .model import ValidatedModel, b_of, slot_order
from .orthopoly import gegenbauer, hermite, jacobi_poly, laguerre
from .quantum_numbers import CartesianIndex, StateIndex, energy, epsilon_chain, kappa0

__all__ = [
    "SingularConfigurationError",
    "SamplingError",
    "EvalPoint",
    "ResidualReport",
    "potential",
    "potential_polar",
    "log_psi_general",
    "eval_psi_general",
    "log_psi_k2",
    "eval_psi_k2",
    "log_psi_cartesian_mu0",
    "sample_configurations",
    "local_energy",
    "relative_residuals",
    "hamiltonian_residual",
]


class SingularConfigurationError(ValueError):
    """A configuration lies on a singular manifold of the potential."""


class SamplingError(RuntimeError):
    """No admissible configurations were found within the retry budget."""


@dataclass
class EvalPoint:
    """A configuration with its cached coordinate transforms."""

    x: np.ndarray
    hierarchy: coords.JacobiHierarchy
    polar: coords.PolarSector
    hyper: coords.HypersphericalPoint

    @classmethod
    def from_x(cls, x) -> "EvalPoint":
        x = np.asarray(x, dtype=float)
        h = coords.to_jacobi(x)
        p = coords.to_polar(h)
        return cls(x, h, p, coords.radii_to_hyperspherical(p))


# --------------------------------------------------------------------------
# Potential
# --------------------------------------------------------------------------


def _check_k(model: ValidatedModel, x: np.ndarray) -> None:
    if x.shape[-1] != 3**model.k:
        raise ValueError(f"configuration length {x.shape[-1]} does not match k={model.k}")


def potential(model: ValidatedModel, x) -> np.ndarray:
    """Raw Cartesian potential: trap, Calogero terms at every level, and ``mu / sum x**2``."""
    x = np.asarray(x, dtype=float)
    _check_k(model, x)
    k = model.k
    total = model.omega**2 * np.sum(x * x, axis=-1)
    cur = x
    for m in range(1, k + 1):
        t = cur.reshape(cur.shape[:-1] + (-1, 3))
        for name, (i, j) in (("01", (0, 1)), ("02", (0, 2)), ("12", (1, 2))):
            d = t[..., i] - t[..., j]
            if np.any(d == 0):
                ell = int(np.argwhere(np.broadcast_to(d == 0, d.shape))[0][-1]) + 1
                raise SingularConfigurationError(
                    f"coincidence in pair {name} of cluster ({ell}, {m})"
                )
        lam = np.array([model.lam[(l, m)] for l in range(1, t.shape[-2] + 1)])
        total = total + np.sum(lam * coords.cluster_pair_sum(t), axis=-1)
        cur = t.sum(axis=-1) / math.sqrt(3.0)
    r2 = np.sum(x * x, axis=-1)
    if model.mu != 0:
        if np.any(r2 == 0):
            raise SingularConfigurationError("configuration at the origin")
        total = total + model.mu / r2
    return total


def potential_polar(model: ValidatedModel, x) -> np.ndarray:
    """Same potential evaluated through the transformed (polar) expression."""
    p = EvalPoint.from_x(x)
    r2 = p.hyper.r ** 2
    total = model.omega**2 * r2 + model.mu / r2
    for l, m in slot_order(model.k):
        total = total + model.lam[(l, m)] * coords.polar_pair_sum(p.polar.r[m - 1][..., l - 1],
                                                                  p.polar.phi[m - 1][..., l - 1])
    return total


# --------------------------------------------------------------------------
# Eigenfunctions
# --------------------------------------------------------------------------


def _log_abs_sign(values):
    v = np.asarray(values, dtype=float)
    with np.errstate(divide="ignore"):
        return np.log(np.abs(v)), np.sign(v)


def _slot_geometry(x: np.ndarray, k: int):
    """Chain-ordered radii, sin(3 phi), cos(3 phi) and ``w_top``."""
    h = coords.to_jacobi(x)
    order = slot_order(k)
    u = np.stack([h.u[m - 1][..., l - 1] for l, m in order], axis=-1)
    v = np.stack([h.v[m - 1][..., l - 1] for l, m in order], axis=-1)
    r = np.hypot(u, v)
    r3 = r**3
    with np.errstate(invalid="ignore", divide="ignore"):
        s3 = (3.0 * u * v * v - u**3) / r3
        c3 = (v**3 - 3.0 * u * u * v) / r3
    return r, s3, c3, h.w_top


def _log_angular(model: ValidatedModel, n: tuple[int, ...], s3, c3):
    """Sum over slots of ``log(|sin 3phi|^p |C_n^(p)(cos 3phi)|)`` with ``p = 1/2 + a``."""
    la = np.zeros(s3.shape[:-1])
    sg = np.ones(s3.shape[:-1])
    for p, a in enumerate(model.a_chain()):
        q = 0.5 + a
        with np.errstate(divide="ignore"):
            la = la + q * np.log(np.abs(s3[..., p]))
        lc, sc = _log_abs_sign(gegenbauer(n[p], q, c3[..., p]))
        la = la + lc
        sg = sg * sc
    return la, sg


def _kappa(model: ValidatedModel, state: StateIndex) -> float:
    k0 = kappa0(model, state)
    return k0 if model.mu == 0 else math.sqrt(model.mu + k0 * k0)


def log_psi_general(model: ValidatedModel, state: StateIndex, x):
    """``(log|psi|, sign)`` of the general-k eigenfunction at ``x``.

    The function is the product of a hyperradial Laguerre factor, a
    Gegenbauer factor in ``alpha``, one Jacobi factor per chain angle and one
    trigonometric Calogero factor per slot.  With ``S`` slots, tail sums
    ``eps_p`` and ``d_p = S - p - 1`` the exponents are::

        R**(kappa + 1/2 - S) * exp(-omega R**2 / 2) * L_{n_r}^{kappa}(omega R**2)
        sin(alpha)**(eps_0 - S + 1) * C_{n_alpha}^{(eps_0 + 1/2)}(cos alpha)
        prod_p sin(beta_p)**(eps_{p+1} - d_p + 1) cos(beta_p)**b_p
               * P_{Lambda_p}^{(eps_{p+1}, b_p)}(cos 2 beta_p)
        prod_s |sin 3 phi_s|**(1/2 + a_s) C_{n_s}^{(1/2 + a_s)}(cos 3 phi_s)
    """
    x = np.asarray(x, dtype=float)
    _check_k(model, x)
    if state.k != model.k:
        raise ValueError(f"state has k={state.k}, model has k={model.k}")
    S = len(state.n)
    r, s3, c3, w = _slot_geometry(x, model.k)
    a = model.a_chain()
    b = [b_of(state.n[p], a[p]) for p in range(S)]
    eps = epsilon_chain(model, state)
    kap = _kappa(model, state)
    om = model.omega

    sq = r * r
    rho2 = np.cumsum(sq[..., ::-1], axis=-1)[..., ::-1]  # rho_p**2
    R2 = w * w + rho2[..., 0]
    with np.errstate(divide="ignore", invalid="ignore"):
        logR = 0.5 * np.log(R2)
        log_rho = 0.5 * np.log(rho2)
        log_r = np.log(r)

        la = (kap + 0.5 - S) * logR - 0.5 * om * R2
        lp, sg = _log_abs_sign(laguerre(state.n_r, kap, om * R2))
        la = la + lp

        cos_a = w / np.sqrt(R2)
        la = la + (eps[0] - S + 1) * (log_rho[..., 0] - logR)
        lp, sp = _log_abs_sign(gegenbauer(state.n_alpha, eps[0] + 0.5, cos_a))
        la, sg = la + lp, sg * sp

        for p in range(S - 1):
            d = S - p - 1
            log_sin = log_rho[..., p + 1] - log_rho[..., p]
            log_cos = log_r[..., p] - log_rho[..., p]
            cos2 = (sq[..., p] - rho2[..., p + 1]) / rho2[..., p]
            la = la + (eps[p + 1] - d + 1) * log_sin + b[p] * log_cos
            lp, sp = _log_abs_sign(jacobi_poly(state.Lambda[p], eps[p + 1], b[p], cos2))
            la, sg = la + lp, sg * sp

    lg, sgg = _log_angular(model, state.n, s3, c3)
    return la + lg, sg * sgg


def eval_psi_general(model: ValidatedModel, state: StateIndex, x) -> np.ndarray:
    """Un-normalized general-k eigenfunction at ``x``."""
    la, sg = log_psi_general(model, state, x)
    return sg * np.exp(la)


def log_psi_k2(model: ValidatedModel, state: StateIndex, x, as_printed: bool = False):
    """``(log|psi|, sign)`` of the nine-body eigenfunction in its textbook coordinates.

    Uses the hyperangles ``alpha, theta, beta, phi`` with ``cos theta = r12/rho1``,
    ``cos beta = r11/rho2`` and ``sin phi = r21/rho3``.  With
    ``as_printed=True`` the first Jacobi parameter of the ``beta`` factor omits
    the ``2 i`` term, reproducing a misprinted variant that is *not* an
    eigenfunction once ``i >= 1`` and ``m >= 1``.
    """
    if model.k != 2 or state.k != 2:
        raise ValueError("log_psi_k2 requires k = 2")
    x = np.asarray(x, dtype=float)
    _check_k(model, x)
    j, m, i = state.Lambda
    n12, n11, n21, n31 = state.n
    a = model.a
    b12 = b_of(n12, a[(1, 2)])
    b11 = b_of(n11, a[(1, 1)])
    b21 = b_of(n21, a[(2, 1)])
    b31 = b_of(n31, a[(3, 1)])
    ell, kr = state.n_alpha, state.n_r
    bracket = ell + 2 * j + 2 * m + 2 * i + b12 + b11 + b21 + b31 + 3.5
    kap = bracket if model.mu == 0 else math.sqrt(model.mu + bracket * bracket)
    d = 2 * (i + j + m) + b11 + b21 + b31 + b12 + 3
    c = 2 * i + 2 * m + 2 + b11 + b21 + b31
    ri = 2 * i + 1 + b21 + b31
    beta_a = (ri - 2 * i) if as_printed else ri

    r, s3, c3, w = _slot_geometry(x, 2)
    r12, r11, r21, r31 = (r[..., q] for q in range(4))
    rho3 = np.hypot(r21, r31)
    rho2 = np.hypot(r11, rho3)
    rho1 = np.hypot(r12, rho2)
    R = np.hypot(w, rho1)
    alpha = np.arctan2(rho1, w)
    theta = np.arctan2(rho2, r12)
    beta = np.arctan2(rho3, r11)
    phi = np.arctan2(r21, r31)
    om = model.omega

    with np.errstate(divide="ignore"):
        la = (kap - 3.5) * np.log(R) - 0.5 * om * R * R
        lp, sg = _log_abs_sign(laguerre(kr, kap, om * R * R))
        la = la + lp
        la = la + (d - 3) * np.log(np.sin(alpha))
        lp, sp = _log_abs_sign(gegenbauer(ell, d + 0.5, np.cos(alpha)))
        la, sg = la + lp, sg * sp
        la = la + (c - 2) * np.log(np.sin(theta)) + b12 * np.log(np.cos(theta))
        lp, sp = _log_abs_sign(jacobi_poly(j, c, b12, np.cos(2 * theta)))
        la, sg = la + lp, sg * sp
        la = la + (ri - 1) * np.log(np.sin(beta)) + b11 * np.log(np.cos(beta))
        lp, sp = _log_abs_sign(jacobi_poly(m, beta_a, b11, np.cos(2 * beta)))
        la, sg = la + lp, sg * sp
        la = la + b21 * np.log(np.sin(phi)) + b31 * np.log(np.cos(phi))
        lp, sp = _log_abs_sign(jacobi_poly(i, b21, b31, np.cos(2 * phi)))
        la, sg = la + lp, sg * sp
    lg, sgg = _log_angular(model, state.n, s3, c3)
    return la + lg, sg * sgg


def eval_psi_k2(model: ValidatedModel, state: StateIndex, x, as_printed: bool = False) -> np.ndarray:
    """Un-normalized nine-body eigenfunction at ``x``."""
    la, sg = log_psi_k2(model, state, x, as_printed=as_printed)
    return sg * np.exp(la)


def log_psi_cartesian_mu0(model: ValidatedModel, index: CartesianIndex, x):
    """``(log|psi|, sign)`` of the separable ``mu = 0`` solution.

    ``H_M(sqrt(omega) w_top) exp(-omega w_top**2/2)`` times, per slot,
    ``r**b L_K^{(b)}(omega r**2) exp(-omega r**2/2)`` and the angular factor.
    """
    if model.mu != 0:
        raise ValueError("separable solution requires mu = 0")
    x = np.asarray(x, dtype=float)
    _check_k(model, x)
    r, s3, c3, w = _slot_geometry(x, model.k)
    om = model.omega
    a = model.a_chain()
    lh, sg = _log_abs_sign(hermite(index.M, math.sqrt(om) * w))
    la = lh - 0.5 * om * w * w
    with np.errstate(divide="ignore"):
        for p in range(len(a)):
            b = b_of(index.n[p], a[p])
            rp = r[..., p]
            lp, sp = _log_abs_sign(laguerre(index.K[p], b, om * rp * rp))
            la = la + b * np.log(rp) - 0.5 * om * rp * rp + lp
            sg = sg * sp
    lg, sgg = _log_angular(model, index.n, s3, c3)
    return la + lg, sg * sgg


# --------------------------------------------------------------------------
# Residual test
# --------------------------------------------------------------------------


@dataclass
class ResidualReport:
    points_tested: int
    step: float
    max_relative_residual: float
    mean_relative_residual: float
    energy_used: float
    max_relative_residual_half_step: float | None = None
    reduction_factor: float | None = None
    sampling: str = "psi2"
    seed: int | None = None

    def to_json(self) -> str:
        return json.dumps({"schema": "calogero3k.residual/1", **asdict(self)}, indent=2) + "\n"


def _admissible(x: np.ndarray, k: int, min_sine: float, r_window) -> np.ndarray:
    """Boolean mask for the geometric cuts used to keep stencils away from singularities."""
    r, s3, _, w = _slot_geometry(x, k)
    ok = np.all(np.abs(s3) > min_sine, axis=-1)
    sq = r * r
    rho2 = np.cumsum(sq[..., ::-1], axis=-1)[..., ::-1]
    R2 = w * w + rho2[..., 0]
    with np.errstate(invalid="ignore", divide="ignore"):
        ok &= np.sqrt(rho2[..., 0] / R2) > min_sine
        ok &= np.all(np.sqrt(rho2[..., 1:] / rho2[..., :-1]) > min_sine, axis=-1)
    if r_window is not None:
        R = np.sqrt(R2)
        ok &= (R >= r_window[0]) & (R <= r_window[1])
    return ok & np.isfinite(R2)


def sample_configurations(model: ValidatedModel, state: StateIndex, n_points: int, seed: int = 0,
                          method: str = "psi2", min_sine: float = 0.2, r_window=None,
                          burn_in: int = 600, max_tries: int = 200) -> np.ndarray:
    """Draw admissible configurations.

    ``method="window"`` rejection-samples Gaussian configurations subject to
    the cuts ``|sin 3phi| > min_sine`` for every slot, every hyperspherical
    sine ``> min_sine`` and ``R`` inside ``r_window`` (in units of
    ``1/sqrt(omega)``, default ``(0.5, 2.5)``).

    ``method="psi2"`` (default) runs one Metropolis chain per point targeting
    ``|psi|**2`` restricted to the same cuts (``r_window`` optional), so the
    points sit where the eigenfunction actually lives.
    """
    rng = np.random.default_rng(seed)
    k = model.k
    N = 3**k
    om = model.omega
    scale = 1.0 / math.sqrt(om)
    if method == "window" and r_window is None:
        r_window = (0.5, 2.5)
    win = None if r_window is None else (r_window[0] * scale, r_window[1] * scale)

    def draw(count: int) -> np.ndarray:
        out = np.empty((0, N))
        for _ in range(max_tries):
            if method == "window":
                cand = rng.normal(size=(max(4 * count, 64), N))
                cand /= np.linalg.norm(cand, axis=-1, keepdims=True)
                cand *= rng.uniform(win[0], win[1], size=(cand.shape[0], 1))
            else:
                cand = rng.normal(scale=scale * math.sqrt(0.5 + kappa0(model, state) / N),
                                  size=(max(4 * count, 64), N))
            cand = cand[_admissible(cand, k, min_sine, win)]
            out = np.concatenate([out, cand])[:count]
            if len(out) == count:
                return out
        raise SamplingError(f"found {len(out)} of {count} admissible points after {max_tries} batches")

    x = draw(n_points)
    if method == "window":
        return x
    if method != "psi2":
        raise ValueError(f"unknown sampling method {method!r}")

    def logp(y):
        la, _ = log_psi_general(model, state, y)
        ok = _admissible(y, k, min_sine, win)
        return np.where(ok & np.isfinite(la), 2.0 * la, -np.inf)

    lp = logp(x)
    step = np.full(n_points, 0.3 * scale)
    accepted = np.zeros(n_points)
    for it in range(burn_in):
        prop = x + step[:, None] * rng.normal(size=x.shape)
        lq = logp(prop)
        acc = np.log(rng.uniform(size=n_points)) < lq - lp
        x = np.where(acc[:, None], prop, x)
        lp = np.where(acc, lq, lp)
        accepted += acc
        if (it + 1) % 50 == 0 and it < burn_in // 2:
            rate = accepted / 50.0
            step *= np.where(rate > 0.45, 1.5, np.where(rate < 0.2, 0.6, 1.0))
            accepted[:] = 0
    return x


def local_energy(model: ValidatedModel, log_psi, x: np.ndarray, h: float) -> np.ndarray:
    """``(H psi)/psi`` with a central-difference Laplacian of step ``h``.

    ``log_psi`` maps configurations to ``(log|psi|, sign)``; neighbour values
    enter only through ratios ``psi(x +- h e_i) / psi(x)``.
    """
    x = np.atleast_2d(np.asarray(x, dtype=float))
    P, N = x.shape
    eye = np.eye(N) * h
    stencil = np.concatenate([x[:, None, :], x[:, None, :] + eye, x[:, None, :] - eye], axis=1)
    la, sg = log_psi(stencil.reshape(-1, N))
    la = la.reshape(P, 2 * N + 1)
    sg = sg.reshape(P, 2 * N + 1)
    ratio = sg[:, 1:] * sg[:, :1] * np.exp(la[:, 1:] - la[:, :1])
    lap_over_psi = (ratio.sum(axis=1) - 2.0 * N) / (h * h)
    return -lap_over_psi + potential(model, x)


def relative_residuals(model: ValidatedModel, log_psi, x: np.ndarray, h: float, e: float) -> np.ndarray:
    """``|H psi - E psi| / (|E| |psi|)`` at each configuration."""
    return np.abs(local_energy(model, log_psi, x, h) - e) / abs(e)


def hamiltonian_residual(model: ValidatedModel, state: StateIndex, n_points: int = 100, h: float = 1e-3,
                         seed: int = 0, method: str = "psi2", min_sine: float = 0.2, r_window=None,
                         energy_shift: float = 0.0, check_halving: bool = True,
                         evaluator: str = "general") -> ResidualReport:
    """Check ``H psi = E psi`` with the raw Cartesian Hamiltonian.

    ``E`` is the closed-form energy plus ``energy_shift``.  With
    ``check_halving`` the residual is recomputed at ``h/2`` on the same points
    and the reduction factor reported.
    """
    if not h > 0:
        raise ValueError("step must be positive")
    if evaluator == "k2":
        def lp(y):
            return log_psi_k2(model, state, y)
    else:
        def lp(y):
            return log_psi_general(model, state, y)
    e = energy(model, state) + energy_shift
    x = sample_configurations(model, state, n_points, seed=seed, method=method,
                              min_sine=min_sine, r_window=r_window)
    res = relative_residuals(model, lp, x, h, e)
    report = ResidualReport(n_points, h, float(res.max()), float(res.mean()), e, sampling=method, seed=seed)
    if check_halving:
        res2 = relative_residuals(model, lp, x, h / 2, e)
        report.max_relative_residual_half_step = float(res2.max())
        report.reduction_factor = float(res.max() / res2.max())
    return report
