"""Coordinate cascade: hierarchical Jacobi transform, polar pairs, hyperspherical tree.

All functions act on the last axis and broadcast over any leading axes, so a
batch of configurations of shape ``(P, 3**k)`` is handled in one call.

Conventions
-----------
* Each triple ``(X0, X1, X2)`` maps to ``u = (X0 - X1)/sqrt2``,
  ``v = (X0 + X1 - 2 X2)/sqrt6`` and ``w = (X0 + X1 + X2)/sqrt3``; the ``w`` of
  one level are the inputs of the next.
* Polar form ``u = r sin(phi)``, ``v = r cos(phi)``, ``phi`` in ``[0, 2 pi)``.
* Hyperspherical form ``w_top = R cos(alpha)`` and the radii in chain order
  ``r_p = rho_p cos(beta_p)``, ``rho_(p+1) = rho_p sin(beta_p)``, with
  ``rho_0 = R sin(alpha)``; the last radius is ``rho_(S-1)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import slot_order

__all__ = [
    "JacobiHierarchy",
    "PolarSector",
    "HypersphericalPoint",
    "to_jacobi",
    "from_jacobi",
    "to_polar",
    "from_polar",
    "radii_to_hyperspherical",
    "hyperspherical_to_radii",
    "radii_to_levels",
    "cluster_pair_sum",
    "polar_pair_sum",
]

SQ2 = np.sqrt(2.0)
SQ3 = np.sqrt(3.0)
SQ6 = np.sqrt(6.0)


@dataclass
class JacobiHierarchy:
    """``u[m-1]``, ``v[m-1]`` have trailing length ``3**(k-m)``; ``w[m-1]`` are the
    level-``m`` centres of mass (``w[k-1]`` holds the single top value)."""

    k: int
    u: list[np.ndarray]
    v: list[np.ndarray]
    w_top: np.ndarray
    w: list[np.ndarray] | None = None


@dataclass
class PolarSector:
    k: int
    r: list[np.ndarray]
    phi: list[np.ndarray]
    w_top: np.ndarray

    def chain_radii(self) -> np.ndarray:
        """Radii stacked in chain order along a new last axis."""
        return np.stack([self.r[m - 1][..., l - 1] for l, m in slot_order(self.k)], axis=-1)

    def chain_phi(self) -> np.ndarray:
        return np.stack([self.phi[m - 1][..., l - 1] for l, m in slot_order(self.k)], axis=-1)


@dataclass
class HypersphericalPoint:
    """Hyperradius ``r``, ``alpha`` in ``[0, pi]`` and chain angles ``beta`` (length ``S - 1``)."""

    k: int
    r: np.ndarray
    alpha: np.ndarray
    beta: np.ndarray


def to_jacobi(x) -> JacobiHierarchy:
    """Apply the ternary Jacobi/centre-of-mass cascade to ``x`` (last axis ``3**k``)."""
    x = np.asarray(x, dtype=float)
    n = x.shape[-1]
    k = int(round(np.log(n) / np.log(3)))
    if 3**k != n or k < 1:
        raise ValueError(f"configuration length must be a power of 3, got {n}")
    us, vs, ws = [], [], []
    cur = x
    for _ in range(k):
        t = cur.reshape(cur.shape[:-1] + (-1, 3))
        x0, x1, x2 = t[..., 0], t[..., 1], t[..., 2]
        us.append((x0 - x1) / SQ2)
        vs.append((x0 + x1 - 2.0 * x2) / SQ6)
        cur = (x0 + x1 + x2) / SQ3
        ws.append(cur)
    return JacobiHierarchy(k, us, vs, cur[..., 0], ws)


def from_jacobi(h: JacobiHierarchy) -> np.ndarray:
    """Exact inverse of :func:`to_jacobi`."""
    k = h.k
    cur = np.asarray(h.w_top, dtype=float)[..., None]
    for m in range(k, 0, -1):
        u = np.asarray(h.u[m - 1], dtype=float)
        v = np.asarray(h.v[m - 1], dtype=float)
        if u.shape[-1] != 3 ** (k - m) or v.shape != u.shape or cur.shape[-1] != u.shape[-1]:
            raise ValueError(f"hierarchy shape mismatch at level {m}")
        x0 = cur / SQ3 + u / SQ2 + v / SQ6
        x1 = cur / SQ3 - u / SQ2 + v / SQ6
        x2 = cur / SQ3 - 2.0 * v / SQ6
        cur = np.stack([x0, x1, x2], axis=-1).reshape(cur.shape[:-1] + (-1,))
    return cur


def to_polar(h: JacobiHierarchy) -> PolarSector:
    """``r = hypot(u, v)``, ``phi = atan2(u, v)`` mod ``2 pi`` (``r = 0`` gives ``phi = 0``)."""
    r = [np.hypot(u, v) for u, v in zip(h.u, h.v)]
    phi = [np.mod(np.arctan2(u, v), 2.0 * np.pi) for u, v in zip(h.u, h.v)]
    return PolarSector(h.k, r, phi, np.asarray(h.w_top, dtype=float))


def from_polar(p: PolarSector) -> JacobiHierarchy:
    u = [r * np.sin(f) for r, f in zip(p.r, p.phi)]
    v = [r * np.cos(f) for r, f in zip(p.r, p.phi)]
    return JacobiHierarchy(p.k, u, v, p.w_top)


def _tail_norms(radii: np.ndarray) -> np.ndarray:
    """``rho_p = sqrt(sum_{q >= p} r_q**2)`` along the last axis."""
    sq = radii * radii
    return np.sqrt(np.cumsum(sq[..., ::-1], axis=-1)[..., ::-1])


def radii_to_hyperspherical(sector: PolarSector) -> HypersphericalPoint:
    """Hyperradius, ``alpha`` and the chain angles from the slot radii and ``w_top``."""
    radii = sector.chain_radii()
    if np.any(radii < 0):
        raise ValueError("radii must be non-negative")
    rho = _tail_norms(radii)
    w = sector.w_top
    r = np.hypot(w, rho[..., 0])
    alpha = np.arctan2(rho[..., 0], w)
    beta = np.arctan2(rho[..., 1:], radii[..., :-1])
    return HypersphericalPoint(sector.k, r, alpha, beta)


def hyperspherical_to_radii(p: HypersphericalPoint) -> tuple[np.ndarray, np.ndarray]:
    """Chain-ordered radii and ``w_top`` from a hyperspherical point."""
    r = np.asarray(p.r, dtype=float)
    alpha = np.asarray(p.alpha, dtype=float)
    beta = np.asarray(p.beta, dtype=float)
    w_top = r * np.cos(alpha)
    rho = r * np.sin(alpha)
    out = []
    for q in range(beta.shape[-1]):
        out.append(rho * np.cos(beta[..., q]))
        rho = rho * np.sin(beta[..., q])
    out.append(rho)
    return np.stack(out, axis=-1), w_top


def radii_to_levels(k: int, chain: np.ndarray) -> list[np.ndarray]:
    """Regroup chain-ordered values into per-level arrays."""
    levels = [np.empty(chain.shape[:-1] + (3 ** (k - m),)) for m in range(1, k + 1)]
    for p, (l, m) in enumerate(slot_order(k)):
        levels[m - 1][..., l - 1] = chain[..., p]
    return levels


def cluster_pair_sum(triple) -> np.ndarray:
    """``sum_{i<j} 1/(X_i - X_j)**2`` over the last axis of length 3."""
    t = np.asarray(triple, dtype=float)
    d01 = t[..., 0] - t[..., 1]
    d02 = t[..., 0] - t[..., 2]
    d12 = t[..., 1] - t[..., 2]
    return 1.0 / d01**2 + 1.0 / d02**2 + 1.0 / d12**2


def polar_pair_sum(r, phi) -> np.ndarray:
    """Closed form ``9 / (2 r**2 sin(3 phi)**2)`` of :func:`cluster_pair_sum`."""
    r = np.asarray(r, dtype=float)
    return 9.0 / (2.0 * r * r * np.sin(3.0 * np.asarray(phi, dtype=float)) ** 2)
