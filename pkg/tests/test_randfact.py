import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ruqlp.analysis import empirical_errors, verify_run
from ruqlp.errors import ConfigurationError, DegenerateSketchError, ValidationError
from ruqlp.matcore import EPS, frobenius_norm, orth, singular_values, spectral_norm, svd
from ruqlp.matgen import gen_lowrank_noise, named_matrix, random_orthonormal
from ruqlp.randfact import (
    METHODS,
    QlpFactors,
    SketchConfig,
    UtvFactors,
    decompose,
    pi_orth,
    pivoted_qlp,
    randomized_baseline,
    reconstruct,
    ru_qlp,
    sample_gaussian,
    value_estimates,
)

from .oracles import CountingMatrix, projector


def gaussian(shape, seed):
    return np.random.default_rng(seed).standard_normal(shape)


def with_spectrum(sigma, seed):
    rng = np.random.default_rng(seed)
    n = len(sigma)
    return (random_orthonormal(n, rng) * sigma) @ random_orthonormal(n, rng).T


# ---------------------------------------------------------------- configuration

@pytest.mark.parametrize("kwargs", [
    {"k": 0}, {"k": 2, "p": -1}, {"k": 2, "q": -1}, {"k": 2, "ortho_interval": 0},
    {"k": 2, "seed": -1}, {"k": 2, "seed": 2**64}, {"k": 2.0}, {"k": True},
    {"k": 2, "on_collapse": "ignore"},
])
def test_config_rejects(kwargs):
    with pytest.raises(ConfigurationError):
        SketchConfig(**kwargs)


def test_sample_count_must_fit():
    with pytest.raises(ConfigurationError):
        ru_qlp(np.eye(4), SketchConfig(k=3, p=2))
    with pytest.raises(ConfigurationError):
        ru_qlp(gaussian((10, 3), 0), SketchConfig(k=4))


def test_sketch_columns_are_prefix_stable():
    narrow = sample_gaussian(7, 2, seed=5)
    wide = sample_gaussian(7, 4, seed=5)
    np.testing.assert_array_equal(wide[:, :2], narrow)


def test_sketch_depends_on_seed():
    assert not np.array_equal(sample_gaussian(5, 3, 1), sample_gaussian(5, 3, 2))


# ---------------------------------------------------------------- pi_orth

def test_pi_orth_without_power_steps_matches_direct_orth():
    a = gaussian((12, 9), 1)
    phi = sample_gaussian(12, 4, 3)
    basis = pi_orth(a, phi, q=0)
    np.testing.assert_array_equal(projector(basis), projector(orth(a.T @ phi)))


@pytest.mark.parametrize("q", [0, 1, 3])
def test_pi_orth_orthogonal_input_ignores_power_steps(q):
    a = random_orthonormal(8, np.random.default_rng(4))
    phi = sample_gaussian(8, 3, 9)
    expected = projector(orth(a.T @ phi))
    np.testing.assert_allclose(projector(pi_orth(a, phi, q=q)), expected, atol=1e-12)


def test_pi_orth_matches_explicit_power_product():
    a = with_spectrum(np.linspace(2.0, 0.5, 30), seed=11)
    phi = sample_gaussian(30, 6, 11)
    gram = a.T @ a
    direct = orth(gram @ gram @ a.T @ phi)
    diff = projector(pi_orth(a, phi, q=2)) - projector(direct)
    assert spectral_norm(diff) <= 1e-8


@pytest.mark.parametrize("interval", [1, 2, 3, 5])
def test_ortho_interval_gives_same_subspace(interval):
    a = with_spectrum(np.linspace(3.0, 1.0, 20), seed=2)
    phi = sample_gaussian(20, 5, 8)
    reference = projector(pi_orth(a, phi, q=2))
    relaxed = projector(pi_orth(a, phi, q=2, ortho_interval=interval))
    np.testing.assert_allclose(relaxed, reference, atol=1e-10)


def test_collapse_raises_with_half_step():
    a = np.zeros((6, 6))
    a[0, 0] = 1.0
    phi = sample_gaussian(6, 3, 0)
    with pytest.raises(DegenerateSketchError) as info:
        pi_orth(a, phi, q=1)
    assert info.value.iteration == 0


def test_collapse_truncates_when_asked():
    a = np.zeros((6, 6))
    a[0, 0] = a[1, 1] = 1.0
    phi = sample_gaussian(6, 4, 0)
    basis = pi_orth(a, phi, q=1, on_collapse="truncate")
    assert basis.shape == (6, 2)
    f = ru_qlp(a, SketchConfig(k=2, p=2, q=1, on_collapse="truncate"))
    assert frobenius_norm(a - f.reconstruct()) <= 1e-14


def test_pi_orth_validates_phi():
    with pytest.raises(ValidationError):
        pi_orth(np.eye(4), np.ones((3, 2)), q=0)
    with pytest.raises(ConfigurationError):
        pi_orth(np.eye(4), np.ones((4, 5)), q=0)


# ---------------------------------------------------------------- ru_qlp

def test_identity_example():
    f = ru_qlp(np.eye(4), SketchConfig(k=2, p=2))
    np.testing.assert_allclose(f.l_values, np.ones(4), atol=1e-12)
    assert frobenius_norm(np.eye(4) - f.reconstruct()) <= 1e-12


def test_factor_structure():
    a = gaussian((40, 25), 3)
    f = ru_qlp(a, SketchConfig(k=6, p=4, q=1, seed=1))
    d = 10
    tol = 64 * 40 * EPS
    assert f.q_mat.shape == (40, d) and f.l_mat.shape == (d, d) and f.p_mat.shape == (25, d)
    assert np.all(np.triu(f.l_mat, 1) == 0.0)
    np.testing.assert_allclose(f.q_mat.T @ f.q_mat, np.eye(d), atol=tol)
    np.testing.assert_allclose(f.p_mat.T @ f.p_mat, np.eye(d), atol=tol)
    assert f.phi.shape == (40, d)


def test_wide_input():
    a = gaussian((15, 40), 6)
    f = ru_qlp(a, SketchConfig(k=5, p=3))
    assert f.q_mat.shape == (15, 8) and f.p_mat.shape == (40, 8)
    np.testing.assert_allclose((a @ f.p_mat) @ f.p_mat.T, f.reconstruct(), atol=1e-12)


def test_determinism():
    a = gaussian((50, 40), 7)
    config = SketchConfig(k=5, p=5, q=2, seed=123)
    first, second = ru_qlp(a, config), ru_qlp(a, config)
    np.testing.assert_array_equal(first.phi, second.phi)
    r1 = frobenius_norm(a - first.reconstruct())
    r2 = frobenius_norm(a - second.reconstruct())
    assert abs(r1 - r2) <= 1e-13


def test_second_qr_keeps_the_column_space():
    a = gaussian((60, 45), 8)
    f = ru_qlp(a, SketchConfig(k=8, p=4, q=1, seed=2))
    expected = projector(orth(a @ f.p_bar))
    np.testing.assert_allclose(projector(f.q_mat), expected, atol=1e-12)


def test_row_basis_lies_in_row_space():
    # rank-12 matrix embedded in 30 x 50: range(P) must stay inside range(A^T)
    a = gaussian((30, 12), 1) @ gaussian((12, 50), 2)
    f = ru_qlp(a, SketchConfig(k=8, p=2, q=1, seed=4))
    row_space = projector(orth(a.T))
    np.testing.assert_allclose(row_space @ f.p_mat, f.p_mat, atol=1e-10)


def test_reconstruction_projects_onto_row_basis():
    a = gaussian((35, 30), 9)
    f = ru_qlp(a, SketchConfig(k=5, p=5, q=1, seed=3))
    np.testing.assert_allclose(f.reconstruct(), (a @ f.p_mat) @ f.p_mat.T, atol=1e-12)


@pytest.mark.parametrize("q", [0, 1, 2])
def test_pass_count(q):
    a = CountingMatrix(gaussian((30, 20), 0))
    ru_qlp(a, SketchConfig(k=4, p=2, q=q))
    assert a.products == 2 * q + 2


def test_list_input_is_accepted():
    f = ru_qlp([[3.0, 0.0], [0.0, 1.0]], SketchConfig(k=1, p=1))
    # orthogonal factors preserve |det|
    assert np.prod(f.l_values) == pytest.approx(3.0, rel=1e-12)
    assert frobenius_norm(f.reconstruct() - np.diag([3.0, 1.0])) <= 1e-14


def test_fast_decay_error_between_floor_and_bound():
    a = named_matrix("LowRankFastDecay", n=200, k=10, seed=0)
    oracle = svd(a)
    f = ru_qlp(a, SketchConfig(k=10, p=10, q=1, seed=5))
    err = spectral_norm(a - f.reconstruct())
    assert err >= oracle.sigma[20] * (1 - 1e-12)
    report = verify_run(a, f, oracle=oracle)
    bound = [r.bound for r in report.select(quantity="err_q_rank_k") if r.norm == "spectral"][0]
    assert err <= bound


def test_exact_rank_is_recovered():
    a = gen_lowrank_noise(120, 9, 0.0, seed=1)
    with pytest.raises(DegenerateSketchError):
        ru_qlp(a, SketchConfig(k=9, p=3, seed=2))
    f = ru_qlp(a, SketchConfig(k=9, p=3, seed=2, on_collapse="truncate"))
    assert f.l_mat.shape == (9, 9)
    assert frobenius_norm(a - f.reconstruct()) <= 1e-10 * frobenius_norm(a)


def test_power_iteration_tightens_angles():
    a = named_matrix("LowRankMediumGap", n=300, k=10, seed=3)
    oracle = svd(a)
    medians = []
    for q in (0, 1, 2):
        sines = [empirical_errors(a, ru_qlp(a, SketchConfig(k=10, p=10, q=q, seed=s)), 10,
                                  oracle).sin_theta[0] for s in range(20)]
        medians.append(np.median(sines))
    assert medians[0] > medians[1] > medians[2]


@settings(max_examples=25, deadline=None)
@given(m=st.integers(2, 25), n=st.integers(2, 25), data=st.data())
def test_ru_qlp_properties(m, n, data):
    d = data.draw(st.integers(1, min(m, n)))
    k = data.draw(st.integers(1, d))
    q = data.draw(st.integers(0, 2))
    seed = data.draw(st.integers(0, 2**32))
    a = gaussian((m, n), seed)
    f = ru_qlp(a, SketchConfig(k=k, p=d - k, q=q, seed=seed))
    assert np.all(np.triu(f.l_mat, 1) == 0.0)
    np.testing.assert_allclose(f.q_mat.T @ f.q_mat, np.eye(d), atol=64 * max(m, n) * EPS)
    np.testing.assert_allclose(f.p_mat.T @ f.p_mat, np.eye(d), atol=64 * max(m, n) * EPS)
    floor = np.sqrt(np.sum(singular_values(a)[d:] ** 2))
    assert frobenius_norm(a - f.reconstruct()) >= floor - 1e-10 * frobenius_norm(a)


# ---------------------------------------------------------------- pivoted QLP

def test_pivoted_qlp_diagonal():
    f = pivoted_qlp(np.diag([2.0, 1.0]))
    np.testing.assert_allclose(f.l_values, [2.0, 1.0], atol=1e-15)


def test_pivoted_qlp_reconstructs():
    a = gaussian((50, 30), 13)
    f = pivoted_qlp(a)
    assert frobenius_norm(a - f.reconstruct()) <= 1e-10 * frobenius_norm(a)
    assert np.all(np.triu(f.l_mat, 1) == 0.0)


def test_pivoted_qlp_tracks_singular_values():
    a = with_spectrum(np.logspace(0, -6, 25), seed=4)
    f = pivoted_qlp(a)
    ratio = f.l_values / singular_values(a)
    assert np.all((ratio > 0.1) & (ratio < 10))


# ---------------------------------------------------------------- baselines

def test_rsvd_identity():
    f = randomized_baseline(np.eye(4), "rsvd", SketchConfig(k=4))
    np.testing.assert_allclose(f.sigma, np.ones(4), atol=1e-12)


def test_unknown_baseline():
    with pytest.raises(ValidationError):
        randomized_baseline(np.eye(4), "lanczos", SketchConfig(k=2))


@pytest.mark.parametrize("method", METHODS)
def test_methods_estimate_top_values(method):
    a = named_matrix("LowRankMediumGap", n=400, k=16, seed=0)
    top = singular_values(a)[:16]
    f = decompose(a, method, SketchConfig(k=16, p=16, q=2, seed=17))
    estimates = np.sort(value_estimates(f))[::-1][:16]
    np.testing.assert_allclose(estimates, top, rtol=0.01)


@pytest.mark.parametrize("method", METHODS)
def test_methods_respect_optimal_floor(method):
    a = with_spectrum(np.linspace(1.0, 0.01, 40), seed=5)
    sigma = singular_values(a)
    f = decompose(a, method, SketchConfig(k=6, p=4, q=1, seed=6))
    floor = np.sqrt(np.sum(sigma[10:] ** 2))
    assert frobenius_norm(a - reconstruct(f)) >= floor - 1e-10 * frobenius_norm(a)


def test_baseline_factor_types():
    a = gaussian((20, 15), 1)
    config = SketchConfig(k=3, p=2, seed=1)
    utv = randomized_baseline(a, "cor_utv", config)
    assert isinstance(utv, UtvFactors)
    assert np.all(np.tril(utv.t_mat, -1) == 0.0)
    tsod = randomized_baseline(a, "rp_tsod", config)
    assert isinstance(tsod, QlpFactors)
    assert np.all(np.triu(tsod.l_mat, 1) == 0.0)
    for f in (utv, tsod):
        np.testing.assert_allclose(reconstruct(f), reconstruct(ru_qlp(a, config)), atol=1e-12)
