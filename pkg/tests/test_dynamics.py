import numpy as np
import pytest
from hypothesis import given, strategies as st

from amhd import operators as ops
from amhd.dynamics import (
    MHDState,
    PhysParams,
    SpectralSystem,
    current_diffusion_symbol,
    diffusion_symbol,
    divergence_production,
    mollify,
    q_term,
    rhs,
    rhs_primitive,
    rhs_vorticity_current,
    structure_identity_residual,
)
from amhd.initial import random_divfree
from amhd.spectral import Grid, SpectralField, dealias, forward_transform


def exact(grid, samples):
    """Coefficients of trigonometric-polynomial samples with round-off removed."""
    f = forward_transform(samples, grid)
    f.coeffs[np.abs(f.coeffs) < 1e-13] = 0.0
    return f


def perp_grad(grid, psi):
    """grad_perp psi = (-d2 psi, d1 psi), the convention of Biot-Savart."""
    p = exact(grid, psi)
    g1, g2 = ops.gradient(p)
    return -g2, g1


def test_params_validation():
    for bad in (dict(eta=0), dict(beta=-1), dict(epsilon=-0.1), dict(mode="x"), dict(formulation="x")):
        with pytest.raises(ValueError):
            PhysParams(**bad)
    assert PhysParams(beta=1.25).global_regularity_regime
    assert not PhysParams(beta=1.0).global_regularity_regime


def test_state_validation(grid32):
    z = SpectralField.zeros(grid32)
    with pytest.raises(ValueError):
        MHDState("primitive", (z, z))
    with pytest.raises(ValueError):
        MHDState("vorticity-current", (z, SpectralField.zeros(Grid.square(16))))


def test_formulation_round_trip(divfree_primitive):
    vc = divfree_primitive.as_formulation("vorticity-current")
    back = vc.as_formulation("primitive")
    for a, b in zip(back.fields, divfree_primitive.fields):
        np.testing.assert_allclose(a.coeffs, b.coeffs, atol=1e-15)


def test_diffusion_symbol_examples():
    p = PhysParams(eta=0.1, beta=1.5)
    assert diffusion_symbol(p, "b1").evaluate(5.0, 2.0) == pytest.approx(0.8)
    f = PhysParams(eta=1.0, beta=1.0, mode="full-fractional")
    assert diffusion_symbol(f, "b2").evaluate(3.0, 4.0) == pytest.approx(25.0)
    for k in (1.0, 3.0, 7.0):
        assert diffusion_symbol(p, "b1").evaluate(k, k) == diffusion_symbol(p, "b2").evaluate(k, k)
    c = PhysParams(eta=0.3, mode="classical-laplacian")
    assert diffusion_symbol(c, "b1").evaluate(1.0, 2.0) == pytest.approx(1.5)
    with pytest.raises(ValueError):
        diffusion_symbol(p, "b-iso")


def test_current_symbol_reduces_on_axes():
    p = PhysParams(eta=0.2, beta=1.5)
    j = current_diffusion_symbol(p)
    # on the k1 axis only |k1|^(2 beta) survives
    assert j.evaluate(3.0, 0.0) == pytest.approx(0.2 * 3.0**3)
    assert j.evaluate(1.0, 1.0) == pytest.approx(0.2)


@pytest.mark.parametrize("form", ["primitive", "vorticity-current"])
def test_zero_state_has_zero_rhs(grid32, form):
    n = 4 if form == "primitive" else 2
    st_ = MHDState(form, tuple(SpectralField.zeros(grid32) for _ in range(n)))
    out = rhs(st_, PhysParams(formulation=form))
    assert all(not np.any(f.coeffs) for f in out.fields)


def test_linear_decay_of_single_mode(grid32):
    x1, x2 = grid32.coordinates
    b1 = exact(grid32, np.cos(3 * x1 + 2 * x2))
    z = SpectralField.zeros(grid32)
    st_ = MHDState.primitive(z, z, b1, z)
    out = rhs_primitive(st_, PhysParams(eta=1.0, beta=1.0, formulation="primitive"))
    np.testing.assert_allclose(out.fields[2].coeffs, -4.0 * b1.coeffs, atol=1e-14)
    assert np.abs(out.fields[3].coeffs).max() < 1e-14


def test_q_vanishes_without_velocity(grid32):
    x1, x2 = grid32.coordinates
    b = perp_grad(grid32, np.sin(x1) * np.sin(x2))
    z = SpectralField.zeros(grid32)
    assert np.abs(q_term((z, z), b).coeffs).max() == 0.0
    p = PhysParams(eta=0.5, beta=1.5)
    j = ops.curl2d(*b)
    out = rhs_vorticity_current(MHDState.vorticity_current(z, j), p)
    want = -current_diffusion_symbol(p).on_grid(grid32) * j.coeffs
    np.testing.assert_allclose(out.fields[1].coeffs, want, atol=1e-13)


def test_q_term_oracle(grid32):
    """Q assembled from physical-space derivatives of explicit fields."""
    x1, x2 = grid32.coordinates
    u1p, u2p = np.sin(x2), np.sin(x1)
    b1p, b2p = np.cos(x1) * np.sin(x2), np.sin(x1) * np.cos(x2) * 0.5
    # derivatives by hand
    d1b1 = -np.sin(x1) * np.sin(x2)
    d2u1, d1u2, d1u1 = np.cos(x2), np.cos(x1), 0.0 * x1
    d2b1, d1b2 = np.cos(x1) * np.cos(x2), 0.5 * np.cos(x1) * np.cos(x2)
    want = 2 * d1b1 * (d2u1 + d1u2) - 2 * d1u1 * (d2b1 + d1b2)
    f = lambda a: forward_transform(a, grid32)
    got = q_term((f(u1p), f(u2p)), (f(b1p), f(b2p))).physical()
    np.testing.assert_allclose(got, want, atol=1e-13)


@pytest.mark.parametrize("mode", ["partial-directional", "full-fractional", "classical-laplacian"])
@pytest.mark.parametrize("eps", [0.0, 0.1])
def test_curl_of_primitive_rhs_matches_vc(mode, eps):
    g = Grid.square(32)
    prim = random_divfree(g, 11, "primitive")
    vc = prim.as_formulation("vorticity-current")
    pp = PhysParams(eta=0.1, beta=1.5, mode=mode, formulation="primitive", epsilon=eps)
    dp = rhs(prim, pp)
    dv = rhs(vc, pp.with_(formulation="vorticity-current"))
    p1, p2 = ops.leray_project(dp.fields[2], dp.fields[3])
    dj = ops.curl2d(p1, p2)
    dw = ops.curl2d(dp.fields[0], dp.fields[1])
    for got, want in ((dw, dv.fields[0]), (dj, dv.fields[1])):
        scale = np.abs(want.coeffs).max()
        assert np.abs(got.coeffs - want.coeffs).max() <= 1e-11 * scale


@given(st.integers(0, 10**6))
def test_structure_identity_on_divfree(seed):
    g = Grid.square(16)
    st_ = random_divfree(g, seed, "primitive")
    u, b = st_.velocity(), st_.magnetic()
    for comp in (1, 2):
        assert structure_identity_residual(u, b, comp) <= 1e-12


def test_structure_identity_controls(divfree_primitive, grid32):
    u = divfree_primitive.velocity()
    x1, x2 = grid32.coordinates
    phi = forward_transform(np.sin(2 * x1) * np.cos(x2) + np.cos(x1 + 3 * x2), grid32)
    b = ops.gradient(phi)
    assert structure_identity_residual(u, b, 1) > 0.01
    z = SpectralField.zeros(grid32)
    b_any = (dealias(forward_transform(np.sin(x1) + np.cos(x2) ** 2, grid32)), phi)
    assert structure_identity_residual((z, z), b_any, 1) <= 1e-14
    with pytest.raises(ValueError):
        structure_identity_residual(u, b, 3)


def test_divergence_production_examples(grid32):
    x1, x2 = grid32.coordinates
    p = PhysParams(eta=1.0, beta=1.0)
    b = perp_grad(grid32, np.sin(x1) * np.sin(x2))
    assert np.abs(divergence_production(b, p).physical()).max() <= 1e-13
    b = perp_grad(grid32, np.sin(2 * x1) * np.sin(x2))
    np.testing.assert_allclose(divergence_production(b, p).physical(), -6 * np.cos(2 * x1) * np.cos(x2), atol=1e-12)
    st_ = random_divfree(grid32, 2, "primitive")
    iso = PhysParams(eta=0.3, beta=1.7, mode="full-fractional")
    assert np.abs(divergence_production(st_.magnetic(), iso).physical()).max() <= 1e-13


def test_mollify_examples(grid32, rng):
    f = dealias(forward_transform(rng.standard_normal(grid32.shape), grid32))
    assert mollify(f, 0.0) is f
    c = forward_transform(np.full(grid32.shape, 2.0), grid32)
    np.testing.assert_allclose(mollify(c, 0.7).coeffs, c.coeffs)
    for eps in (0.01, 0.1, 1.0):
        assert mollify(f, eps).l2_norm() <= f.l2_norm()
    with pytest.raises(ValueError):
        mollify(f, -1.0)


def test_system_pack_checks(grid32, divfree_primitive):
    sys_ = SpectralSystem(grid32, PhysParams())
    with pytest.raises(ValueError):
        sys_.pack(divfree_primitive)
    vc = divfree_primitive.as_formulation("vorticity-current")
    with pytest.raises(ValueError):
        SpectralSystem(Grid.square(16), PhysParams()).pack(vc)
    back = sys_.unpack(sys_.pack(vc), 0.0)
    for a, b in zip(back.fields, vc.fields):
        np.testing.assert_allclose(a.coeffs, b.coeffs, atol=1e-16)


def test_induction_terms_are_curls_of_fluxes(divfree_primitive, grid32):
    p = PhysParams(formulation="primitive")
    sys_ = SpectralSystem(grid32, p)
    n1, n2, f1, f2 = sys_.induction_terms(sys_.pack(divfree_primitive))
    h = sys_.h
    np.testing.assert_allclose(n1, h.ik2 * f1, atol=1e-13)
    np.testing.assert_allclose(n2, h.ik1 * f2, atol=1e-13)
