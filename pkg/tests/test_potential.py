import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from dirac_index.errors import ConfigError, InvariantViolation
from dirac_index.potential import (
    CutoffSpec,
    apply_cutoff,
    audit_hypothesis,
    constant,
    direct_sum,
    from_callable,
    from_json_spec,
    hedgehog,
    hedgehog_radial_limit,
    make_builtin,
    radial_extension,
    radial_limit,
    smoothstep,
    smoothstep_deriv,
)

S1 = np.array([[0, 1], [1, 0]], dtype=complex)
S2 = np.array([[0, -1j], [1j, 0]])
S3 = np.diag([1.0, -1.0]).astype(complex)


def sigma3_abs(scale=1.0):
    return from_callable(lambda x: scale * np.linalg.norm(x, axis=1)[:, None, None] * S3, 3, 2, family_id="s3abs")


def test_constant_field():
    f = constant(S3)
    np.testing.assert_array_equal(f.eval([1.0, 2.0, 3.0]), S3)
    assert f.eval(np.zeros((5, 3))).shape == (5, 2, 2)
    assert np.all(f.grad(np.ones(3)) == 0)
    np.testing.assert_array_equal(f.A0, S3)


def test_hedgehog_values():
    f = hedgehog()
    np.testing.assert_allclose(f.eval([1.0, 0, 0]), S1 / math.sqrt(2), atol=1e-15)
    np.testing.assert_allclose(f.eval([0, 0, 0]), 0, atol=0)
    np.testing.assert_allclose(f.eval([0, 0, 2.0]), S3 * 2 / math.sqrt(5), atol=1e-15)
    np.testing.assert_allclose(f.eval([0, -1.0, 0]), -S2 / math.sqrt(2), atol=1e-15)
    # A0 defaults to A(100 e1)
    np.testing.assert_allclose(f.A0, S1 * 100 / math.sqrt(1 + 1e4), atol=1e-15)


@given(st.lists(st.floats(-50, 50), min_size=3, max_size=3))
def test_hedgehog_gradient_matches_central_difference(x):
    f = hedgehog(scale=1.7, shift=[0.3, -0.2, 0.1])
    x = np.array(x)
    err = np.abs(f.grad(x) - f.fd_grad(x)).max()
    assert err <= 1e-7


def test_finite_difference_is_second_order():
    f = hedgehog()
    x = np.array([0.4, -0.7, 1.1])
    exact = f.grad(x)
    e1 = np.abs(f.fd_grad(x, h=1e-2) - exact).max()
    e2 = np.abs(f.fd_grad(x, h=5e-3) - exact).max()
    assert 3.5 <= e1 / e2 <= 4.5


def test_fd_fallback_when_no_gradient():
    f = from_callable(lambda x: np.sin(x[:, 0])[:, None, None] * S3, 3, 2)
    g = f.grad(np.array([0.3, 0, 0]))
    np.testing.assert_allclose(g[0], math.cos(0.3) * S3, atol=1e-8)
    np.testing.assert_allclose(g[1:], 0, atol=1e-12)


def test_non_hermitian_field_raises():
    f = from_callable(lambda x: np.broadcast_to(np.array([[0, 1], [0, 0]], dtype=complex), (len(x), 2, 2)), 3, 2, A0=S3)
    with pytest.raises(InvariantViolation):
        f.eval(np.zeros(3))


def test_bad_A0_shape():
    with pytest.raises(ConfigError):
        constant(S3).with_A0(np.eye(3))


def test_direct_sum_blocks():
    f = direct_sum(hedgehog(), constant(np.array([[2.0]])))
    A = f.eval([1.0, 0, 0])
    np.testing.assert_allclose(A[:2, :2], S1 / math.sqrt(2), atol=1e-15)
    assert A[2, 2] == 2.0 and np.all(A[:2, 2] == 0)
    assert f.grad(np.ones(3)).shape == (3, 3, 3)


def test_direct_sum_dimension_mismatch():
    with pytest.raises(ConfigError):
        direct_sum(hedgehog(), constant(S3, d=5))


# -- cutoff ---------------------------------------------------------------


def test_smoothstep_endpoints_and_derivative():
    u = np.linspace(-0.5, 1.5, 41)
    s = smoothstep(u)
    assert np.all(s[u <= 0] == 0) and np.all(s[u >= 1] == 1)
    assert smoothstep(0.5) == pytest.approx(0.5)
    h = 1e-6
    uu = np.linspace(0.05, 0.95, 10)
    np.testing.assert_allclose(smoothstep_deriv(uu), (smoothstep(uu + h) - smoothstep(uu - h)) / (2 * h), atol=1e-8)


def test_cutoff_identities():
    cut = CutoffSpec(2.0, 1.0)
    base = hedgehog()
    f = apply_cutoff(base, cut)
    rng = np.random.default_rng(0)
    inner = rng.normal(size=(20, 3))
    inner *= (1.9 * rng.random(20) / np.linalg.norm(inner, axis=1))[:, None]
    np.testing.assert_array_equal(f.eval(inner), np.broadcast_to(base.A0, (20, 2, 2)))
    np.testing.assert_array_equal(f.grad(inner), 0)
    outer = rng.normal(size=(20, 3))
    outer *= ((3.0 + 10 * rng.random(20)) / np.linalg.norm(outer, axis=1))[:, None]
    np.testing.assert_allclose(f.eval(outer), base.eval(outer), atol=1e-15)
    np.testing.assert_allclose(f.grad(outer), base.grad(outer), atol=1e-15)


def test_cutoff_hand_expansion():
    # at x = (2.5, 0, 0): u = 1/2, phi = 1/2, A = A0 + (A(x) - A0)/2
    cut = CutoffSpec(2.0, 1.0)
    base = hedgehog()
    f = apply_cutoff(base, cut)
    x = np.array([2.5, 0.0, 0.0])
    expect = base.A0 + 0.5 * (base.eval(x) - base.A0)
    np.testing.assert_allclose(f.eval(x), expect, atol=1e-15)
    # radial derivative picks up -phi'(r) (A - A0) with phi'(2.5) = -15/8
    g = f.grad(x)
    expect_g0 = 0.5 * base.grad(x)[0] + (15 / 8) * (base.eval(x) - base.A0)
    np.testing.assert_allclose(g[0], expect_g0, atol=1e-14)


def test_cutoff_gradient_matches_fd():
    f = apply_cutoff(hedgehog(), CutoffSpec(1.0, 2.0))
    for x in ([1.5, 0.3, -0.2], [0.1, 2.2, 0.4], [-1.0, -1.0, 1.0]):
        assert np.abs(f.grad(np.array(x)) - f.fd_grad(np.array(x))).max() <= 1e-7


def test_cutoff_rejects_bad_parameters():
    with pytest.raises(ValueError):
        CutoffSpec(1.0, 0.0)
    with pytest.raises(ValueError):
        CutoffSpec(-1.0, 1.0)


# -- radial limits --------------------------------------------------------

R_GRID = np.geomspace(10, 1e4, 12)


def test_radial_limit_constant():
    res = radial_limit(constant(S3), [1, 1, 0], R_GRID)
    assert res.converged and res.diagnostic == 0
    np.testing.assert_array_equal(res.value, S3)


def test_radial_limit_hedgehog():
    res = radial_limit(hedgehog(), [0, 0, 1], R_GRID)
    assert res.converged
    np.testing.assert_allclose(res.value, S3, atol=1e-7)


def test_radial_limit_oscillating_not_converged():
    f = from_callable(lambda x: np.sin(np.linalg.norm(x, axis=1))[:, None, None] * S3, 3, 2)
    res = radial_limit(f, [1, 0, 0], R_GRID)
    assert not res.converged


def test_radial_limit_grid_validation():
    with pytest.raises(ValueError):
        radial_limit(hedgehog(), [1, 0, 0], [10.0])
    with pytest.raises(ValueError):
        radial_limit(hedgehog(), [1, 0, 0], [10.0, 5.0])


def test_radial_extension_matches_hedgehog_limit():
    rho = CutoffSpec(1.0, 1.0)
    lim = hedgehog_radial_limit()
    f = radial_extension(lim, rho, S1)
    x = np.array([0.0, 0.0, 5.0])
    np.testing.assert_allclose(f.eval(x), S3, atol=1e-15)
    np.testing.assert_array_equal(f.eval(np.array([0.2, 0.1, 0.0])), S1)
    for x in ([1.4, 0.3, 0.2], [0.3, -3.0, 1.0]):
        assert np.abs(f.grad(np.array(x)) - f.fd_grad(np.array(x))).max() <= 1e-7


# -- audit ----------------------------------------------------------------


def test_audit_constant_passes():
    audit = audit_hypothesis(constant(S3))
    assert audit.passed
    assert math.isinf(audit.gradient_exponent["frobenius"])


def test_audit_hedgehog_exponents():
    audit = audit_hypothesis(hedgehog())
    assert audit.passed
    for v in audit.gradient_exponent.values():
        assert v == pytest.approx(1.0, abs=0.05)
    for v in audit.radial_exponent.values():
        assert v == pytest.approx(3.0, abs=0.05)
    json.dumps(audit.as_dict())


def test_audit_linear_growth_fails():
    audit = audit_hypothesis(sigma3_abs())
    assert not audit.passed
    assert audit.gradient_exponent["spectral"] == pytest.approx(0.0, abs=0.05)


def test_audit_requires_decades():
    with pytest.raises(ValueError):
        audit_hypothesis(hedgehog(), radii=[10, 20, 100])


# -- user fields and registry ---------------------------------------------


def test_json_user_field_matches_hedgehog():
    spec = {
        "d": 3,
        "m": 2,
        "terms": [
            {"matrix": [[0, 1], [1, 0]], "monomial": [1, 0, 0], "japanese_power": -1},
            {"matrix": [[0, 0], [0, 0]], "matrix_imag": [[0, -1], [1, 0]], "monomial": [0, 1, 0], "japanese_power": -1},
            {"matrix": [[1, 0], [0, -1]], "monomial": [0, 0, 1], "japanese_power": -1},
        ],
    }
    user = from_json_spec(json.dumps(spec))
    ref = hedgehog()
    x = np.random.default_rng(4).normal(scale=3, size=(30, 3))
    np.testing.assert_allclose(user.eval(x), ref.eval(x), atol=1e-14)
    np.testing.assert_allclose(user.grad(x), ref.grad(x), atol=1e-14)


def test_json_abs_power_gradient():
    spec = {"d": 3, "m": 1, "terms": [{"matrix": [[1.0]], "monomial": [0, 1, 0], "abs_power": -1.5}]}
    f = from_json_spec(spec)
    x = np.array([0.7, -1.2, 0.4])
    assert np.abs(f.grad(x) - f.fd_grad(x)).max() <= 1e-8


def test_json_user_field_file(tmp_path):
    spec = {"d": 3, "m": 2, "terms": [{"matrix": [[1, 0], [0, -1]]}]}
    p = tmp_path / "field.json"
    p.write_text(json.dumps(spec))
    f = from_json_spec(str(p))
    np.testing.assert_array_equal(f.eval(np.ones(3)), S3)


def test_json_rejects_non_hermitian_terms():
    spec = {"d": 3, "m": 2, "terms": [{"matrix": [[0, 1], [0, 0]]}]}
    with pytest.raises(ConfigError):
        from_json_spec(spec)
    with pytest.raises(ConfigError):
        from_json_spec({"d": 3, "terms": []})
    with pytest.raises(ConfigError):
        from_json_spec({"d": 3, "m": 2, "terms": [{"matrix": [[1]]}]})


def test_make_builtin_registry():
    assert make_builtin("hedgehog").family_id == "hedgehog"
    assert make_builtin("constant").m == 2
    s = make_builtin("scalar")
    assert s.eval([0, 0, 0])[0, 0] == pytest.approx(1.0)
    assert np.abs(s.grad(np.array([1.0, 2.0, 0.5])) - s.fd_grad(np.array([1.0, 2.0, 0.5]))).max() <= 1e-8
    ds = make_builtin("direct_sum", {"parts": [("hedgehog", {}), ("constant", {})]})
    assert ds.m == 4
    with pytest.raises(ConfigError):
        make_builtin("nope")
    with pytest.raises(ConfigError):
        make_builtin("hedgehog", d=5)
    with pytest.raises(ConfigError):
        make_builtin("user")
    with pytest.raises(ConfigError):
        make_builtin("direct_sum")


def test_describe_is_json_serialisable():
    f = apply_cutoff(make_builtin("direct_sum", {"parts": [("hedgehog", {"scale": 2.0}), ("constant", {})]}), CutoffSpec(1, 1))
    json.dumps(f.describe())
