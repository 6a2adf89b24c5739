import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from efiefilt.filters import (
    apply_band,
    apply_lowpass,
    apply_Q,
    apply_Q_weighted,
    band_multiplier,
    build_filter_bank,
    build_preconditioner,
    dense_Q,
    estimate_lambda_max,
    estimate_lambda_min,
    lowpass_multiplier,
    precondition_system,
    total_multiplier,
)
from efiefilt.loopstar import make_scaled_system
from efiefilt.rwg import PhysicsParams


def ones_nullspace(n):
    return np.ones((n, 1)) / np.sqrt(n)


def test_lambda_max_diag():
    lap = sp.diags([1.0, 2.0, 4.0]).tocsr()
    assert estimate_lambda_max(lap) == pytest.approx(4.0, rel=1e-3)


def test_lambda_max_gershgorin_bound(icosahedron, maps_cache):
    maps = maps_cache(icosahedron)
    lam_max = estimate_lambda_max(maps.LapSigma)
    assert lam_max <= 6.0 + 1e-9


def test_lambda_max_matches_dense(icosphere2, maps_cache):
    maps = maps_cache(icosphere2)
    lam_max = estimate_lambda_max(maps.LapLambda)
    dense = np.linalg.eigvalsh(maps.LapLambda.toarray()).max()
    assert lam_max == pytest.approx(dense, rel=1e-3)


def test_lambda_min_estimates():
    lap = sp.diags([0.25, 2.0, 4.0]).tocsr()
    lam = estimate_lambda_min(lap)
    assert lam == pytest.approx(0.25, rel=0.05)


def test_lambda_min_deflated(icosahedron, maps_cache):
    maps = maps_cache(icosahedron)
    lam = estimate_lambda_min(maps.LapSigma, nullspace=ones_nullspace(20))
    dense = np.linalg.eigvalsh(maps.LapSigma.toarray())
    assert lam == pytest.approx(dense[1], rel=0.1)


def test_lowpass_passes_nullspace(icosahedron, maps_cache):
    maps = maps_cache(icosahedron)
    bank = build_filter_bank(maps.LapSigma, nullspace=ones_nullspace(20))
    x = np.ones(20)
    for i in bank.band_indices:
        assert np.allclose(apply_lowpass(bank, i, x), x, atol=1e-10)
    # bands other than the lowest kill constants
    for i in list(bank.band_indices)[1:]:
        assert np.linalg.norm(apply_band(bank, i, x)) < 1e-9


def test_scalar_lowpass_multiplier_half():
    for i, n in ((0, 2), (2, 4), (3, 8)):
        lam = 2.0**i
        bank = build_filter_bank(sp.csr_matrix([[lam]]), sharpness=n)
        out = apply_lowpass(bank, i, np.array([2.0]))
        assert out[0] == pytest.approx(1.0, rel=1e-10)  # multiplier 0.5 on x=2


def test_scalar_band_multiplier_frozen():
    # lam = 2, n = 2, band 1: (1/2 - 1/5)/sqrt(2) = 0.212132034...
    bank = build_filter_bank(sp.csr_matrix([[2.0]]), sharpness=2)
    assert bank.i_min == 0 and bank.n_bands == 1
    out = apply_band(bank, 1, np.array([1.0]))
    want = (0.5 - 0.2) / np.sqrt(2.0)
    assert out[0] == pytest.approx(want, rel=1e-10)
    assert out[0] == pytest.approx(0.2121320344, rel=1e-8)
    assert band_multiplier(2.0, 1, 2) == pytest.approx(want, rel=1e-14)


def test_telescoping(icosahedron, maps_cache):
    maps = maps_cache(icosahedron)
    bank = build_filter_bank(maps.LapLambda, nullspace=ones_nullspace(12))
    rng = np.random.default_rng(0)
    x = rng.standard_normal(12)
    total = np.zeros_like(x)
    for i in bank.band_indices:
        if i == bank.i_min:
            total = apply_lowpass(bank, i, x).copy()
        else:
            total += apply_lowpass(bank, i, x) - apply_lowpass(bank, i - 1, x)
    want = apply_lowpass(bank, bank.n_bands, x)
    assert np.linalg.norm(total - want) < 1e-9 * np.linalg.norm(x)


def test_band_index_bounds(icosahedron, maps_cache):
    maps = maps_cache(icosahedron)
    bank = build_filter_bank(maps.LapSigma, nullspace=ones_nullspace(20))
    with pytest.raises(ValueError):
        apply_lowpass(bank, bank.n_bands + 1, np.ones(20))
    with pytest.raises(ValueError):
        apply_band(bank, bank.i_min - 1, np.ones(20))


def test_filters_match_dense_oracle(icosphere1, maps_cache):
    """CG filter applications match eigendecomposition evaluation."""
    maps = maps_cache(icosphere1)
    for lap, nv in ((maps.LapLambda, 42), (maps.LapSigma, 80)):
        bank = build_filter_bank(lap, nullspace=ones_nullspace(nv))
        w, u = np.linalg.eigh(lap.toarray())
        w = np.clip(w, 0.0, None)
        rng = np.random.default_rng(1)
        x = rng.standard_normal(nv)
        for i in list(bank.band_indices)[:: max(1, bank.n_bands - bank.i_min)]:
            got = apply_lowpass(bank, i, x)
            want = (u * lowpass_multiplier(w, i, bank.sharpness)) @ (u.T @ x)
            assert np.linalg.norm(got - want) < 1e-8 * np.linalg.norm(x)
        got = apply_Q(bank, x)
        qmul = total_multiplier(w, bank.n_bands, bank.sharpness, bank.i_min)
        want = (u * qmul) @ (u.T @ x)
        assert np.linalg.norm(got - want) < 1e-8 * np.linalg.norm(x)
        # dense_Q agrees with the same oracle
        assert np.allclose(dense_Q(bank) @ x, want, atol=1e-10)


def test_apply_Q_linearity(icosahedron, maps_cache):
    maps = maps_cache(icosahedron)
    bank = build_filter_bank(maps.LapSigma, nullspace=ones_nullspace(20))
    rng = np.random.default_rng(2)
    x = rng.standard_normal(20)
    y = rng.standard_normal(20)
    a, b = 1.7, -0.3
    lhs = apply_Q(bank, a * x + b * y)
    rhs = a * apply_Q(bank, x) + b * apply_Q(bank, y)
    assert np.linalg.norm(lhs - rhs) < 1e-12 * (np.linalg.norm(lhs) + 1)


def test_apply_Q_constant_is_lowest_lowpass(icosahedron, maps_cache):
    maps = maps_cache(icosahedron)
    bank = build_filter_bank(maps.LapSigma, nullspace=ones_nullspace(20))
    x = np.ones(20)
    got = apply_Q(bank, x)
    want = apply_lowpass(bank, bank.i_min, x)  # all differences vanish at 0
    assert np.allclose(got, want, atol=1e-10)
    assert np.allclose(got, x, atol=1e-9)


@given(
    lam=st.floats(0.0, 16.0),
    n=st.sampled_from([2, 4, 6, 8]),
    i=st.integers(-12, 6),
)
@settings(max_examples=300, deadline=None)
def test_multiplier_bounds(lam, n, i):
    p = lowpass_multiplier(lam, i, n)
    p_prev = lowpass_multiplier(lam, i - 1, n)
    assert 0.0 < p <= 1.0
    assert p >= p_prev  # monotone in the cutoff, so band multipliers >= 0


def test_lowpass_commutes_with_laplacian(icosahedron, maps_cache):
    maps = maps_cache(icosahedron)
    bank = build_filter_bank(maps.LapLambda, nullspace=ones_nullspace(12))
    rng = np.random.default_rng(3)
    x = rng.standard_normal(12)
    lap = maps.LapLambda
    i = bank.n_bands
    a = apply_lowpass(bank, i, lap @ x)
    b = lap @ apply_lowpass(bank, i, x)
    assert np.linalg.norm(a - b) <= 1e-8 * np.linalg.norm(lap.toarray()) * np.linalg.norm(x)


def test_preconditioned_system_symmetric(icosahedron, maps_cache, assembly_cache):
    _, _, ops = assembly_cache(0, PhysicsParams.for_ka(1.0, 1.0))
    maps = maps_cache(icosahedron)
    spec = precondition_system(make_scaled_system(ops, maps))
    m = spec.to_dense()
    assert np.linalg.norm(m - m.T) / np.linalg.norm(m) < 1e-10


def test_preconditioned_matvec_matches_dense(ico1_ka1, maps_cache):
    mesh, _, ops = ico1_ka1
    maps = maps_cache(mesh)
    spec = precondition_system(make_scaled_system(ops, maps))
    rng = np.random.default_rng(4)
    y = rng.standard_normal(spec.size) + 1j * rng.standard_normal(spec.size)
    want = spec.to_dense() @ y
    got = spec.matvec(y)
    assert np.linalg.norm(got - want) / np.linalg.norm(want) < 1e-8


def test_calibration_paths_agree(ico1_ka1, maps_cache):
    mesh, _, ops = ico1_ka1
    maps = maps_cache(mesh)
    scaled = make_scaled_system(ops, maps)
    dense = precondition_system(scaled, calibrate="dense")
    iterative = precondition_system(scaled, calibrate="iterative")
    assert np.allclose(dense.star_weights, iterative.star_weights, rtol=0.05)
    assert np.allclose(dense.loop_weights, iterative.loop_weights, rtol=0.05)


def test_preconditioner_bank_sizes_validated(ico1_ka1, icosahedron, maps_cache):
    mesh, _, ops = ico1_ka1
    maps = maps_cache(mesh)
    wrong = build_preconditioner(maps_cache(icosahedron))
    with pytest.raises(ValueError, match="sizes"):
        precondition_system(make_scaled_system(ops, maps), precond=wrong)


def test_weighted_Q_weight_count(icosahedron, maps_cache):
    maps = maps_cache(icosahedron)
    bank = build_filter_bank(maps.LapSigma, nullspace=ones_nullspace(20))
    with pytest.raises(ValueError, match="band weights"):
        apply_Q_weighted(bank, np.ones(1), np.ones(20))


def test_sharpness_validation(icosahedron, maps_cache):
    maps = maps_cache(icosahedron)
    with pytest.raises(ValueError):
        build_filter_bank(maps.LapSigma, sharpness=3)
    with pytest.raises(ValueError):
        build_filter_bank(maps.LapSigma, sharpness=0)
