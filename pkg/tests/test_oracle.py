import json
import math

import numpy as np
import pytest
from scipy import integrate
from scipy.linalg import eigh_tridiagonal

from calogero3k import oracle
from calogero3k.coords import radii_to_hyperspherical, to_jacobi, to_polar
from calogero3k.model import ModelParams, a_of, validate
from calogero3k.oracle import (Grid1D, QuadratureError, RegimeError, fd_eigen_angular, fd_eigen_gegenbauer_type,
                               fd_eigen_jacobi_type, fd_eigen_radial, fd_eigenvalues, fd_eigenvector, inner_product,
                               orthogonality_sweep, sturm_count, tridiagonal_lowest)
from calogero3k.orthopoly import gegenbauer, jacobi_poly, laguerre
from calogero3k.quantum_numbers import StateIndex
from calogero3k.wavefunction import eval_psi_k2


def test_grid_contract():
    g = Grid1D(0.0, 1.0, 33)
    assert g.n_interior == 32 and g.h == pytest.approx(1 / 33)
    assert g.nodes()[0] == pytest.approx(g.h) and g.nodes()[-1] == pytest.approx(1 - g.h)
    with pytest.raises(ValueError):
        Grid1D(0.0, 1.0, 32)
    with pytest.raises(ValueError):
        Grid1D(1.0, 1.0, 64)
    with pytest.raises(ValueError):
        fd_eigenvalues(lambda x: 0 * x, Grid1D(0, 1, 40), 12)


def test_sturm_bisection_matches_scipy():
    rng = np.random.default_rng(0)
    d = rng.uniform(-3, 5, 300)
    e = rng.uniform(-1, 1, 299)
    ref = eigh_tridiagonal(d, e, eigvals_only=True)
    assert np.allclose(tridiagonal_lowest(d, e, 6), ref[:6], rtol=0, atol=1e-11)
    assert sturm_count(d, e, ref[10] + 1e-9) == 11


def test_particle_in_box_second_order():
    # exact discrete eigenvalues are known in closed form
    g = Grid1D(0.0, math.pi, 200)
    vals = fd_eigenvalues(lambda x: 0 * x, g, 3)
    exact = [(2 - 2 * math.cos(j * g.h)) / g.h**2 for j in (1, 2, 3)]
    assert np.allclose(vals, exact, rtol=1e-12)


@pytest.mark.parametrize("lam,count,tol", [(4.0, 1, 1e-6), (0.0, 3, 1e-6), (-0.4, 1, 1e-5), (1.0, 4, 1e-6)])
def test_angular_examples(lam, count, tol):
    rep = fd_eigen_angular(lam, count)
    a = a_of(lam)
    assert np.allclose(rep.closed_form, [9 * (n + 0.5 + a) ** 2 for n in range(count)], rtol=1e-15)
    assert rep.passed(tol), rep.relative_error


def test_angular_zero_coupling_values():
    rep = fd_eigen_angular(0.0, 3)
    assert rep.closed_form == [9.0, 36.0, 81.0]


def test_angular_regime():
    with pytest.raises(RegimeError):
        fd_eigen_angular(-0.5)


def test_jacobi_type_examples():
    rep = fd_eigen_jacobi_type(9, 9, 1)
    assert rep.closed_form == [49.0] and rep.passed(1e-6)
    rep = fd_eigen_jacobi_type(9, 36, 2)
    assert rep.closed_form == [100.0, 144.0] and rep.passed(1e-6)
    with pytest.raises(RegimeError):
        fd_eigen_jacobi_type(0.25, 0.25)


def test_gegenbauer_type_examples():
    rep = fd_eigen_gegenbauer_type(4, 2)
    assert rep.closed_form == [6.25, 12.25] and rep.passed(1e-6)
    d = 6.5
    rep = fd_eigen_gegenbauer_type(d * d, 1)
    assert rep.closed_form == [(d + 0.5) ** 2] and rep.passed(1e-6)
    with pytest.raises(RegimeError):
        fd_eigen_gegenbauer_type(0.0)


def test_gegenbauer_type_grid_halving():
    # with sqrt(D) = 2 the endpoint exponent is smooth enough that h**2 dominates
    def V(x):
        return (4 - 0.25) / np.sin(x) ** 2

    g = Grid1D(0, math.pi, 512)
    e1 = abs(fd_eigenvalues(V, g, 1)[0] - 6.25)
    e2 = abs(fd_eigenvalues(V, g.refined(), 1)[0] - 6.25)
    assert 3.5 < e1 / e2 < 4.5


@pytest.mark.parametrize("omega,C,count,r_max,expected", [
    (1.0, 240.25, 1, 8.0, [33.0]),
    (1.0, 40.25, 2, None, [2 * (math.sqrt(40.25) + 1), 2 * (2 + math.sqrt(40.25) + 1)]),
    (2.0, 1.0, 1, None, [8.0]),
])
def test_radial_examples(omega, C, count, r_max, expected):
    rep = fd_eigen_radial(omega, C, count, r_max)
    assert np.allclose(rep.closed_form, expected, rtol=1e-15)
    assert rep.passed(1e-6), rep.relative_error
    assert rep.notes["tail_check_max_relative_change"] < 1e-10


def test_radial_regime():
    with pytest.raises(RegimeError):
        fd_eigen_radial(1.0, 0.0)
    assert oracle.radial_rmax(1.0, 1.0, 0) == 8.0
    assert oracle.radial_rmax(1.0, 15.5, 2) == pytest.approx(15.5 + 4 * math.sqrt(20.5))


def test_richardson_terms():
    terms = oracle.richardson_exponents([], 6)
    assert terms == [(2.0, False), (4.0, False), (6.0, False)]
    terms = oracle.richardson_exponents([1.0], 6)
    assert (2.0, True) in terms and terms[0] == (1.0, False)


def test_report_json():
    doc = json.loads(fd_eigen_angular(1.0, 1, levels=4).to_json())
    assert doc["schema"] == "calogero3k.oracle/1" and doc["operator"] == "angular"
    assert len(doc["grids"]) == 4


@pytest.mark.parametrize("lam,n", [(1.0, 0), (1.0, 2), (4.0, 1)])
def test_angular_eigenvector_matches_gegenbauer(lam, n):
    a = a_of(lam)
    q = 0.5 + a
    g = Grid1D(0.0, math.pi / 3, 4097)

    def V(x):
        return 9.0 * lam / (2.0 * np.sin(3.0 * x) ** 2)

    _, v = fd_eigenvector(V, g, n)
    x = g.nodes()
    exact = np.abs(np.sin(3 * x)) ** q * gegenbauer(n, q, np.cos(3 * x))
    norm, _ = integrate.quad(lambda t: (np.sin(3 * t) ** q * gegenbauer(n, q, np.cos(3 * t))) ** 2, 0, math.pi / 3,
                             limit=200)
    exact /= math.sqrt(norm)
    v *= np.sign(np.dot(v, exact))
    assert math.sqrt(np.sum((v - exact) ** 2) * g.h) < 1e-4


# ---------------------------------------------------------------------------
# inner products
# ---------------------------------------------------------------------------

MODEL = validate(ModelParams.uniform(2, mu=0.5, lam=1.0, overrides={(1, 1): 4.0, (3, 1): 0.3}))


def _factor_function(spec, angle):
    fam, p, n = spec
    if fam == "geg":
        return np.sin(angle) ** p[0] * gegenbauer(n, p[1], np.cos(angle))
    if fam == "jac":
        return np.sin(angle) ** p[0] * np.cos(angle) ** p[1] * jacobi_poly(n, p[2], p[3], np.cos(2 * angle))
    if fam == "ang":
        q = 0.5 + p[0]
        return np.abs(np.sin(3 * angle)) ** q * gegenbauer(n, q, np.cos(3 * angle))
    raise ValueError(fam)


def _radial_function(spec, r, omega):
    _, (kappa,), n = spec
    return r ** (kappa - 3.5) * np.exp(-omega * r * r / 2) * laguerre(n, kappa, omega * r * r)


def test_factor_table_reproduces_eigenfunction():
    """Product of the nine factor functions is proportional to eval_psi_k2."""
    x = np.random.default_rng(3).normal(size=(20, 9))
    h = to_jacobi(x)
    pol = to_polar(h)
    hyp = radii_to_hyperspherical(pol)
    phis = pol.chain_phi()
    angles = {"alpha": hyp.alpha, "theta": hyp.beta[:, 0], "beta": hyp.beta[:, 1],
              "phi": math.pi / 2 - hyp.beta[:, 2], "phi12": phis[:, 0], "phi11": phis[:, 1],
              "phi21": phis[:, 2], "phi31": phis[:, 3]}
    for st in (StateIndex.ground(2), StateIndex.from_k2(1, 2, 1, 1, 2, 1, (0, 2, 1))):
        spec = oracle._k2_factor_params(MODEL, st)
        prod = _radial_function(spec["radial"], hyp.r, MODEL.omega)
        for name, ang in angles.items():
            prod = prod * _factor_function(spec[name], ang)
        ratio = prod / eval_psi_k2(MODEL, st, x)
        assert np.std(ratio) / abs(np.mean(ratio)) < 1e-9


_RANGES = {"alpha": (0, math.pi), "theta": (0, math.pi / 2), "beta": (0, math.pi / 2), "phi": (0, math.pi / 2),
           "phi12": (0, math.pi / 3), "phi11": (0, math.pi / 3), "phi21": (0, math.pi / 3),
           "phi31": (0, math.pi / 3)}
_WEIGHT = {"alpha": lambda t: np.sin(t) ** 7, "theta": lambda t: np.sin(t) ** 5 * np.cos(t),
           "beta": lambda t: np.sin(t) ** 3 * np.cos(t), "phi": lambda t: np.sin(2 * t)}


@pytest.mark.parametrize("pair", [
    (StateIndex.ground(2), StateIndex.ground(2)),
    (StateIndex.from_k2(j=1, n12=1), StateIndex.from_k2(j=1, n12=1)),
    (StateIndex.from_k2(k=1, l=1, j=1, m=1, i=1), StateIndex.from_k2(k=1, l=1, j=1, m=1, i=1, n1=(1, 0, 0))),
])
def test_factor_overlaps_against_adaptive_quadrature(pair):
    a, b = pair
    got = inner_product(MODEL, a, b).factors
    fa, fb = oracle._k2_factor_params(MODEL, a), oracle._k2_factor_params(MODEL, b)
    for name, (lo, hi) in _RANGES.items():
        w = _WEIGHT.get(name, lambda t: 1.0)
        scale = math.sqrt(abs(inner_product(MODEL, a, a).factors[name] * inner_product(MODEL, b, b).factors[name]))
        ref, _ = integrate.quad(lambda t: w(t) * _factor_function(fa[name], t) * _factor_function(fb[name], t),
                                lo, hi, epsabs=1e-12 * scale, epsrel=1e-12, limit=400)
        assert abs(got[name] - ref) <= 1e-9 * scale, name
    om = MODEL.omega
    ref, _ = integrate.quad(lambda r: r**8 * _radial_function(fa["radial"], r, om) * _radial_function(fb["radial"], r, om),
                            0, 30, epsabs=0, epsrel=1e-12, limit=400)
    assert got["radial"] == pytest.approx(ref, rel=1e-9)


def test_inner_product_examples():
    g = StateIndex.ground(2)
    ip = inner_product(MODEL, g, g)
    assert ip.value > 0 and ip.normalized == pytest.approx(1.0, rel=1e-12)
    assert set(ip.factors) == set(oracle.FACTORS)
    assert abs(inner_product(MODEL, g, StateIndex.from_k2(n12=1)).normalized) < 1e-8
    assert abs(inner_product(MODEL, g, StateIndex.from_k2(j=1)).normalized) < 1e-8


def test_inner_product_requires_k2():
    m3 = validate(ModelParams.uniform(3))
    with pytest.raises(ValueError):
        inner_product(m3, StateIndex.ground(3), StateIndex.ground(3))


def test_quadrature_escalation_error(monkeypatch):
    calls = iter([1.0, 2.0, 3.0, 4.0, 5.0, 6.0])
    monkeypatch.setattr(oracle, "_factor_overlap", lambda *a, **k: next(calls))
    with pytest.raises(QuadratureError):
        oracle._overlap_checked("phi11", ("ang", (0.5,), 0), ("ang", (0.5,), 1), 1.0, scale=1.0)


def test_orthogonality_sweep_small():
    rep = orthogonality_sweep(MODEL, max_index=1)
    assert rep.n_states == 2**9 and rep.n_pairs == 2**9 * (2**9 - 1) // 2
    assert rep.max_normalized_overlap < 1e-8
    doc = json.loads(rep.to_json())
    assert doc["schema"] == "calogero3k.orthogonality/1"


def test_sweep_detects_non_orthogonal_family():
    # same degree, different couplings: the angular factors overlap strongly
    g1 = oracle._k2_factor_params(MODEL, StateIndex.from_k2(n1=(1, 0, 0)))["phi11"]
    other = ("ang", (0.2,), 1)
    v = oracle._overlap_checked("phi11", g1, other, 1.0)
    n1 = oracle._overlap_checked("phi11", g1, g1, 1.0)
    n2 = oracle._overlap_checked("phi11", other, other, 1.0)
    assert abs(v) / math.sqrt(n1 * n2) > 0.5
