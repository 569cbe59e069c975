"""Classical orthogonal polynomials and Gauss rules.

Every family is evaluated with its forward three-term recurrence, which is
stable for the argument ranges that occur in the eigenfunctions
(``x`` in ``[-1, 1]`` for Gegenbauer and Jacobi, ``x >= 0`` for Laguerre).
All evaluators broadcast over array arguments.
"""

from __future__ import annotations

import functools
import math

import numpy as np
from scipy.linalg import eigh_tridiagonal

__all__ = [
    "ParameterDomainError",
    "gegenbauer",
    "jacobi_poly",
    "laguerre",
    "hermite",
    "jacobi_poly_derivative",
    "gauss_jacobi_rule",
    "gauss_laguerre_rule",
]

NEWTON_TOL = 1e-14


class ParameterDomainError(ValueError):
    """A polynomial parameter or degree is outside its admissible range."""


def _check_degree(n: int) -> int:
    if int(n) != n or n < 0:
        raise ParameterDomainError(f"degree must be a non-negative integer, got {n!r}")
    return int(n)


def gegenbauer(n: int, q: float, x):
    """Gegenbauer polynomial ``C_n^{(q)}(x)`` for ``q > 0``."""
    n = _check_degree(n)
    if not q > 0:
        raise ParameterDomainError(f"Gegenbauer parameter must be > 0, got {q!r}")
    x = np.asarray(x, dtype=float)
    prev = np.ones_like(x)
    if n == 0:
        return prev[()]
    cur = 2.0 * q * x
    for j in range(2, n + 1):
        prev, cur = cur, (2.0 * x * (j + q - 1.0) * cur - (j + 2.0 * q - 2.0) * prev) / j
    return cur[()]


def _jacobi_pair(n: int, a: float, b: float, x):
    """Return ``(P_{n-1}, P_n)`` for ``n >= 1``."""
    prev = np.ones_like(x)
    cur = (a + 1.0) + 0.5 * (a + b + 2.0) * (x - 1.0)
    for j in range(2, n + 1):
        s = 2.0 * j + a + b
        c1 = 2.0 * j * (j + a + b) * (s - 2.0)
        c2 = (s - 1.0) * (s * (s - 2.0) * x + a * a - b * b)
        c3 = 2.0 * (j + a - 1.0) * (j + b - 1.0) * s
        prev, cur = cur, (c2 * cur - c3 * prev) / c1
    return prev, cur


def jacobi_poly(n: int, a: float, b: float, x):
    """Jacobi polynomial ``P_n^{(a,b)}(x)`` for ``a, b > -1``."""
    n = _check_degree(n)
    if not (a > -1 and b > -1):
        raise ParameterDomainError(f"Jacobi parameters must be > -1, got a={a!r}, b={b!r}")
    x = np.asarray(x, dtype=float)
    if n == 0:
        return np.ones_like(x)[()]
    return _jacobi_pair(n, a, b, x)[1][()]


def jacobi_poly_derivative(n: int, a: float, b: float, x):
    """d/dx of ``P_n^{(a,b)}``, via ``(n+a+b+1)/2 * P_{n-1}^{(a+1,b+1)}``."""
    n = _check_degree(n)
    x = np.asarray(x, dtype=float)
    if n == 0:
        return np.zeros_like(x)[()]
    return 0.5 * (n + a + b + 1.0) * jacobi_poly(n - 1, a + 1.0, b + 1.0, x)


def laguerre(n: int, alpha: float, x):
    """Generalized Laguerre polynomial ``L_n^{(alpha)}(x)`` for ``alpha > -1``."""
    n = _check_degree(n)
    if not alpha > -1:
        raise ParameterDomainError(f"Laguerre parameter must be > -1, got {alpha!r}")
    x = np.asarray(x, dtype=float)
    prev = np.ones_like(x)
    if n == 0:
        return prev[()]
    cur = 1.0 + alpha - x
    for j in range(2, n + 1):
        prev, cur = cur, ((2.0 * j - 1.0 + alpha - x) * cur - (j - 1.0 + alpha) * prev) / j
    return cur[()]


def hermite(n: int, x):
    """Physicists' Hermite polynomial ``H_n(x)``."""
    n = _check_degree(n)
    x = np.asarray(x, dtype=float)
    prev = np.ones_like(x)
    if n == 0:
        return prev[()]
    cur = 2.0 * x
    for j in range(1, n):
        prev, cur = cur, 2.0 * x * cur - 2.0 * j * prev
    return cur[()]


# --------------------------------------------------------------------------
# Gauss rules
# --------------------------------------------------------------------------


def _jacobi_log_mu0(a: float, b: float) -> float:
    return (a + b + 1.0) * math.log(2.0) + math.lgamma(a + 1.0) + math.lgamma(b + 1.0) - math.lgamma(a + b + 2.0)


def _golub_welsch_jacobi(n: int, a: float, b: float):
    k = np.arange(n, dtype=float)
    s = 2.0 * k + a + b
    diag = np.empty(n)
    diag[0] = (b - a) / (a + b + 2.0)
    if n > 1:
        diag[1:] = (b * b - a * a) / (s[1:] * (s[1:] + 2.0))
    j = np.arange(1, n, dtype=float)
    sj = 2.0 * j + a + b
    off2 = 4.0 * j * (j + a) * (j + b) * (j + a + b) / (sj * sj * (sj + 1.0) * (sj - 1.0))
    if n > 1:
        # cancelled form for j = 1 survives a + b = -1
        off2[0] = 4.0 * (1.0 + a) * (1.0 + b) / ((2.0 + a + b) ** 2 * (3.0 + a + b))
    nodes, vecs = eigh_tridiagonal(diag, np.sqrt(off2))
    weights = math.exp(_jacobi_log_mu0(a, b)) * vecs[0, :] ** 2
    return nodes, weights


def _jacobi_scalar(n: int, a: float, b: float, x: float):
    """``(P_n(x), P_n'(x))`` for a scalar interior ``x`` and ``n >= 1``."""
    pm = 1.0
    p = (a + 1.0) + 0.5 * (a + b + 2.0) * (x - 1.0)
    for j in range(2, n + 1):
        s = 2.0 * j + a + b
        c1 = 2.0 * j * (j + a + b) * (s - 2.0)
        c2 = (s - 1.0) * (s * (s - 2.0) * x + a * a - b * b)
        c3 = 2.0 * (j + a - 1.0) * (j + b - 1.0) * s
        pm, p = p, (c2 * p - c3 * pm) / c1
    s = 2.0 * n + a + b
    dp = (n * (a - b - s * x) * p + 2.0 * (n + a) * (n + b) * pm) / (s * (1.0 - x * x))
    return p, dp


def _newton_jacobi_sequential(n: int, a: float, b: float, maxiter: int = 60):
    """Roots of ``P_n^{(a,b)}`` in descending order, one Newton solve per root.

    Each starting value extrapolates from the roots already converged
    (empirical formulas of Numerical Recipes, ``gaujac``).  Returns None if
    any solve fails to converge.
    """
    x = np.zeros(n)
    z = 0.0
    for i in range(n):
        if i == 0:
            an, bn = a / n, b / n
            r1 = (1.0 + a) * (2.78 / (4.0 + n * n) + 0.768 * an / n)
            r2 = 1.0 + 1.48 * an + 0.96 * bn + 0.452 * an * an + 0.83 * an * bn
            z = 1.0 - r1 / r2
        elif i == 1:
            r1 = (4.1 + a) / ((1.0 + a) * (1.0 + 0.156 * a))
            r2 = 1.0 + 0.06 * (n - 8.0) * (1.0 + 0.12 * a) / n
            r3 = 1.0 + 0.012 * b * (1.0 + 0.25 * abs(a)) / n
            z -= (1.0 - z) * r1 * r2 * r3
        elif i == 2:
            r1 = (1.67 + 0.28 * a) / (1.0 + 0.37 * a)
            r2 = 1.0 + 0.22 * (n - 8.0) / n
            r3 = 1.0 + 8.0 * b / ((6.28 + b) * n * n)
            z -= (x[0] - z) * r1 * r2 * r3
        elif i == n - 2:
            r1 = (1.0 + 0.235 * b) / (0.766 + 0.119 * b)
            r2 = 1.0 / (1.0 + 0.639 * (n - 4.0) / (1.0 + 0.71 * (n - 4.0)))
            r3 = 1.0 / (1.0 + 20.0 * a / ((7.5 + a) * n * n))
            z += (z - x[n - 4]) * r1 * r2 * r3
        elif i == n - 1:
            r1 = (1.0 + 0.37 * b) / (1.67 + 0.28 * b)
            r2 = 1.0 / (1.0 + 0.22 * (n - 8.0) / n)
            r3 = 1.0 / (1.0 + 8.0 * a / ((6.28 + a) * n * n))
            z += (z - x[n - 3]) * r1 * r2 * r3
        else:
            z = 3.0 * x[i - 1] - 3.0 * x[i - 2] + x[i - 3]
        for _ in range(maxiter):
            if not -1.0 < z < 1.0:
                return None
            p, dp = _jacobi_scalar(n, a, b, z)
            step = p / dp
            z -= step
            if abs(step) <= NEWTON_TOL * max(1.0, abs(z)):
                break
        else:
            return None
        x[i] = z
    return x


def _newton_jacobi(x0: np.ndarray, n: int, a: float, b: float, maxiter: int = 40):
    """Polish all roots at once; returns None if any root fails to converge."""
    x = np.array(x0, dtype=float)
    for _ in range(maxiter):
        p = jacobi_poly(n, a, b, x)
        dp = jacobi_poly_derivative(n, a, b, x)
        step = p / dp
        x = x - step
        if np.all(np.abs(step) <= NEWTON_TOL * np.maximum(1.0, np.abs(x))):
            return x
    return None


def _roots_acceptable(x, n: int) -> bool:
    if x is None or not np.all(np.isfinite(x)):
        return False
    xs = np.sort(x)
    if np.any(xs <= -1.0) or np.any(xs >= 1.0):
        return False
    return n == 1 or bool(np.all(np.diff(xs) > 1e-10))


def gauss_jacobi_rule(order: int, a: float, b: float, method: str = "auto"):
    """Nodes and weights for the weight ``(1-x)^a (1+x)^b`` on ``[-1, 1]``.

    The rule integrates polynomials of degree ``2*order - 1`` exactly.  Nodes
    come from Newton iteration on the recurrence; if it does not deliver
    ``order`` distinct interior roots, the Golub-Welsch eigenvalues are
    polished instead (``method="golub-welsch"`` forces that path).  Nodes are
    returned in ascending order.  Rules are cached; callers get copies.
    """
    if int(order) != order or order < 1:
        raise ParameterDomainError(f"order must be a positive integer, got {order!r}")
    if not (a > -1 and b > -1):
        raise ParameterDomainError(f"Jacobi parameters must be > -1, got a={a!r}, b={b!r}")
    if method not in ("auto", "newton", "golub-welsch"):
        raise ValueError(f"unknown method {method!r}")
    x, w = _gauss_jacobi_cached(int(order), float(a), float(b), method)
    return x.copy(), w.copy()


@functools.lru_cache(maxsize=4096)
def _gauss_jacobi_cached(n: int, a: float, b: float, method: str):
    if n == 1:
        x = np.array([(b - a) / (a + b + 2.0)])
    else:
        x = None
        if method != "golub-welsch" and n >= 4:
            x = _newton_jacobi_sequential(n, a, b)
            if not _roots_acceptable(x, n):
                x = None
        if x is None:
            if method == "newton" and n >= 4:
                raise RuntimeError("Newton iteration failed for Gauss-Jacobi nodes")
            gw, _ = _golub_welsch_jacobi(n, a, b)
            polished = _newton_jacobi(gw, n, a, b)
            x = polished if _roots_acceptable(polished, n) else gw
        x = np.sort(x)
    log_c = (
        (a + b + 1.0) * math.log(2.0)
        + math.lgamma(n + a + 1.0)
        + math.lgamma(n + b + 1.0)
        - math.lgamma(n + a + b + 1.0)
        - math.lgamma(n + 1.0)
    )
    dp = jacobi_poly_derivative(n, a, b, x)
    w = np.exp(log_c) / ((1.0 - x * x) * dp * dp)
    return x, w


def _newton_laguerre(x0: np.ndarray, n: int, alpha: float, maxiter: int = 40):
    x = np.array(x0, dtype=float)
    for _ in range(maxiter):
        p = laguerre(n, alpha, x)
        pm1 = laguerre(n - 1, alpha, x)
        dp = (n * p - (n + alpha) * pm1) / x
        step = p / dp
        x = x - step
        if np.all(np.abs(step) <= NEWTON_TOL * np.maximum(1.0, np.abs(x))):
            return x
    return None


def gauss_laguerre_rule(order: int, alpha: float):
    """Nodes and weights for ``x^alpha e^{-x}`` on ``[0, inf)``."""
    if int(order) != order or order < 1:
        raise ParameterDomainError(f"order must be a positive integer, got {order!r}")
    if not alpha > -1:
        raise ParameterDomainError(f"Laguerre parameter must be > -1, got {alpha!r}")
    x, w = _gauss_laguerre_cached(int(order), float(alpha))
    return x.copy(), w.copy()


@functools.lru_cache(maxsize=4096)
def _gauss_laguerre_cached(n: int, alpha: float):
    k = np.arange(n, dtype=float)
    diag = 2.0 * k + alpha + 1.0
    off = np.sqrt(k[1:] * (k[1:] + alpha))
    x0 = eigh_tridiagonal(diag, off, eigvals_only=True)
    x = _newton_laguerre(x0, n, alpha)
    if x is None or np.any(x <= 0):
        x = x0
    x = np.sort(x)
    log_c = math.lgamma(n + alpha + 1.0) - math.lgamma(n + 1.0)
    lnp1 = laguerre(n + 1, alpha, x)
    w = np.exp(log_c) * x / ((n + 1.0) ** 2 * lnp1 * lnp1)
    return x, w
