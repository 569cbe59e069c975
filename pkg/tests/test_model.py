import pytest
from hypothesis import given
from hypothesis import strategies as st

from calogero3k.config import ConfigError, parse_model_text, parse_state
from calogero3k.model import (ModelParams, ModelValidationError, a_of, b_of, mu_lower_bound, slot_count,
                              slot_order, validate)
from calogero3k.quantum_numbers import StateIndex, epsilon


def test_a_of_examples():
    assert a_of(0) == 0.5
    assert a_of(4) == 1.5
    assert a_of(-0.4) == pytest.approx(0.22360679774997896, rel=1e-15)


def test_a_of_domain():
    with pytest.raises(ValueError):
        a_of(-0.5)


@given(st.floats(-0.499, 50), st.floats(-0.499, 50))
def test_a_of_monotone(l1, l2):
    if l1 < l2:
        assert a_of(l1) <= a_of(l2)


def test_b_of_examples():
    assert b_of(0, 0.5) == 3.0 and b_of(0, 0.5) ** 2 == 9.0
    assert b_of(0, 1.5) == 6.0 and b_of(0, 1.5) ** 2 == 36.0
    assert b_of(2, 0.5) == 9.0


@given(st.integers(1, 40), st.floats(0, 10))
def test_b_of_step_is_three(n, a):
    assert b_of(n, a) - b_of(n - 1, a) == pytest.approx(3.0, abs=1e-12)


def test_slot_order_k2_and_counts():
    assert slot_order(2) == [(1, 2), (1, 1), (2, 1), (3, 1)]
    for k in (2, 3, 4):
        assert slot_count(k) == (3**k - 1) // 2
        assert len(set(slot_order(k))) == slot_count(k)


def test_validate_uniform_zero():
    m = validate(ModelParams.uniform(2))
    assert all(v == 0.5 for v in m.a.values())


def test_validate_collects_every_problem():
    params = ModelParams.uniform(2, omega=-1.0, lam=0.0, overrides={(1, 1): -0.6, (3, 1): -2.0})
    with pytest.raises(ModelValidationError) as exc:
        validate(params)
    text = str(exc.value)
    assert "coupling-out-of-range" in text and "(1, 1)" in text and "(3, 1)" in text
    assert "omega" in text


def test_validate_bad_k():
    with pytest.raises(ModelValidationError, match="bad-k"):
        validate(ModelParams.uniform(1))


def test_validate_missing_and_unknown_slots():
    lam = {s: 0.0 for s in slot_order(2)}
    del lam[(2, 1)]
    lam[(9, 1)] = 0.0
    with pytest.raises(ModelValidationError) as exc:
        validate(ModelParams(k=2, omega=1.0, mu=0.0, lam=lam))
    assert "coupling-missing" in str(exc.value) and "unknown-slot" in str(exc.value)


def test_mu_lower_bound_examples():
    assert mu_lower_bound(validate(ModelParams.uniform(2))) == -240.25
    # k = 3: epsilon at the all-zero index is 12 * 1 + 13 * 3 = 51
    assert mu_lower_bound(validate(ModelParams.uniform(3))) == -(51.5**2) == -2652.25
    # a -> 0 limit reproduces -(19/2)^2
    near = validate(ModelParams.uniform(2, lam=-0.5 + 1e-14))
    assert mu_lower_bound(near) == pytest.approx(-90.25, rel=1e-6)


def test_bound_matches_ground_epsilon():
    for k, lam in ((2, 0.0), (2, 1.7), (3, 0.3)):
        m = validate(ModelParams.uniform(k, lam=lam))
        eps = epsilon(m, StateIndex.ground(k), 1, k)
        assert mu_lower_bound(m) == pytest.approx(-(eps + 0.5) ** 2, rel=1e-15)


def test_mu_gate():
    assert validate(ModelParams.uniform(2, mu=-91.0)).mu == -91.0
    assert validate(ModelParams.uniform(2, mu=-240.25 + 1e-6)).mu == pytest.approx(-240.249999)
    for mu in (-240.25, -241.0):
        with pytest.raises(ModelValidationError, match="mu-below-bound"):
            validate(ModelParams.uniform(2, mu=mu))


@given(st.integers(2, 3), st.floats(-0.45, 10))
def test_any_valid_model_accepts_mu_zero(k, lam):
    m = validate(ModelParams.uniform(k, lam=lam))
    assert mu_lower_bound(m) < 0


def test_fingerprint_stable_and_sensitive():
    a = validate(ModelParams.uniform(2, lam=1.0))
    b = validate(ModelParams.uniform(2, lam=1.0))
    c = validate(ModelParams.uniform(2, lam=1.0, overrides={(1, 2): 2.0}))
    assert a.fingerprint() == b.fingerprint() != c.fingerprint()


def test_config_parsing():
    text = """
    # comment line
    k = 2
    omega = 2.0   # trailing comment
    mu = 0.5
    lambda = 1.0
    lambda.1.2 = 4.0
    """
    p = parse_model_text(text)
    assert p.k == 2 and p.omega == 2.0 and p.mu == 0.5
    assert p.lam[(2, 1)] == 4.0 and p.lam[(1, 2)] == 1.0


@pytest.mark.parametrize("text", [
    "k = 2\nomega = 1\n",
    "k = 2\nomega = 1\nmu = 0\nfoo = 3\n",
    "k = 2\nk = 3\nomega = 1\nmu = 0\n",
    "k = 2\nomega = 1\nmu = 0\nlambda.1 = 3\n",
    "k = two\nomega = 1\nmu = 0\n",
    "k 2\n",
])
def test_config_errors(text):
    with pytest.raises(ConfigError):
        parse_model_text(text)


def test_parse_state_forms():
    assert parse_state("ground", 2) == StateIndex.ground(2)
    a = parse_state("k=1, j=1, n12=2", 2)
    assert a == StateIndex.from_k2(k=1, j=1, n12=2)
    b = parse_state("n_r=1, Lambda.2.1=1, n.2.1=2", 2)
    assert b == a
    with pytest.raises(ConfigError):
        parse_state("bogus=1", 2)
    with pytest.raises(ConfigError):
        parse_state("n_r=1.5", 2)
