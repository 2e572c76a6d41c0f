import io
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ruqlp.errors import MatrixMarketError, ValidationError
from ruqlp.matcore import EPS, singular_values
from ruqlp.matgen import (
    MatrixSpec,
    gen_dense,
    gen_lowrank_noise,
    gen_polydecay,
    gen_sparse,
    generate,
    load_matrix_market,
    lowrank_spectrum,
    named_matrix,
    random_orthonormal,
    read_matrix_market,
    write_dense_csv,
    write_matrix_market,
)


def parse(text):
    return read_matrix_market(io.StringIO(text))


# ---------------------------------------------------------------- spectra

def test_exact_rank_without_noise():
    sigma = singular_values(gen_lowrank_noise(60, 7, 0.0, seed=3))
    assert sigma[7] <= 1e-12 * sigma[0]


def test_linear_ramp_then_zero():
    sigma = lowrank_spectrum(5, 3)
    np.testing.assert_allclose(sigma[:3], np.linspace(1.0, 1e-10, 5)[:3])
    assert np.all(sigma[3:] == 0.0)


def test_large_gap_named_matrix(large_gap):
    _, oracle = large_gap
    assert oracle.sigma[16] / oracle.sigma[15] <= 0.02


def test_noise_level_matches_gap(medium_gap):
    _, oracle = medium_gap
    sigma_k = lowrank_spectrum(800, 16)[15]
    # noise has spectral norm 0.01 * sigma_k; Weyl bounds the tail by it
    assert oracle.sigma[16] <= 0.01 * sigma_k * (1 + 1e-10)
    assert oracle.sigma[16] >= 0.005 * sigma_k


@pytest.mark.parametrize("z, tail", [(1.0, [0.5, 1 / 3]), (2.0, [0.25, 1 / 9])])
def test_polynomial_decay(z, tail):
    sigma = singular_values(gen_polydecay(60, 6, z, seed=1))
    np.testing.assert_allclose(sigma[:6], 1.0, atol=1e-10)
    np.testing.assert_allclose(sigma[6:8], tail, atol=1e-10)


def test_random_orthonormal():
    n = 40
    u = random_orthonormal(n, np.random.default_rng(0))
    np.testing.assert_allclose(u.T @ u, np.eye(n), atol=64 * n * EPS)


# ---------------------------------------------------------------- Gaussian families

def test_sparse_small_count():
    assert np.count_nonzero(gen_sparse(10, 0.1, seed=0)) == 10


def test_sparse_full_density_is_dense():
    assert np.count_nonzero(gen_sparse(12, 1.0, seed=2)) == 144


def test_sparse_count_and_centering():
    a = gen_sparse(200, 0.1, seed=4)
    values = a[a != 0]
    assert values.size == 4000
    assert abs(values.mean()) <= 4 / math.sqrt(4000)


@pytest.mark.parametrize("density", [0.0, -0.1, 1.5])
def test_sparse_rejects_density(density):
    with pytest.raises(ValidationError):
        gen_sparse(10, density)


@pytest.mark.parametrize("make", [
    lambda s: gen_dense(15, s),
    lambda s: gen_sparse(15, 0.3, s),
    lambda s: gen_lowrank_noise(15, 4, 0.01, s),
    lambda s: gen_polydecay(15, 4, 1.0, s),
])
def test_generators_are_deterministic(make):
    np.testing.assert_array_equal(make(9), make(9))
    assert not np.array_equal(make(9), make(10))


@pytest.mark.parametrize("bad", [
    lambda: gen_lowrank_noise(10, 10, 0.1), lambda: gen_lowrank_noise(10, 0, 0.1),
    lambda: gen_lowrank_noise(10, 2, -1.0), lambda: gen_lowrank_noise(10, 2, float("nan")),
    lambda: gen_polydecay(10, 2, 0.0), lambda: gen_dense(0), lambda: gen_dense(2.5),
])
def test_generators_validate(bad):
    with pytest.raises(ValidationError):
        bad()


# ---------------------------------------------------------------- specs

def test_spec_requires_family_parameters():
    with pytest.raises(ValidationError):
        MatrixSpec(family="polydecay", n=10, k=2)
    with pytest.raises(ValidationError):
        MatrixSpec(family="gaussian_dense", n=10, z=2.0)
    with pytest.raises(ValidationError):
        MatrixSpec(family="banded", n=10)


def test_spec_generates():
    spec = MatrixSpec(family="polydecay", n=20, k=3, z=2.0, seed=5)
    np.testing.assert_array_equal(generate(spec), gen_polydecay(20, 3, 2.0, 5))
    assert spec.describe() == "polydecay n=20 k=3 z=2.0"


def test_named_matrix_unknown():
    with pytest.raises(ValidationError):
        named_matrix("LowRankNoGap")


def test_file_spec(tmp_path):
    path = tmp_path / "m.mtx"
    a = gen_dense(4, 1)
    write_matrix_market(path, a)
    np.testing.assert_array_equal(generate(MatrixSpec(family="file", path=str(path))), a)


# ---------------------------------------------------------------- Matrix Market

def test_minimal_file():
    a = parse("%%MatrixMarket matrix coordinate real general\n1 1 1\n1 1 2.5\n")
    np.testing.assert_array_equal(a, [[2.5]])


def test_comments_and_blank_lines():
    text = ("%%MatrixMarket matrix coordinate real general\n% a comment\n\n"
            "2 3 2\n1 3 -1e-3\n2 1 4\n")
    np.testing.assert_array_equal(parse(text), [[0, 0, -1e-3], [4, 0, 0]])


def test_array_layout_is_column_major():
    text = "%%MatrixMarket matrix array real general\n2 2\n1\n2\n3\n4\n"
    np.testing.assert_array_equal(parse(text), [[1, 3], [2, 4]])


@pytest.mark.parametrize("text, line", [
    ("%%MatrixMarket matrix coordinate complex general\n1 1 1\n1 1 1 0\n", 1),
    ("%%MatrixMarket matrix coordinate real symmetric\n1 1 1\n1 1 1\n", 1),
    ("%%MatrixMarket matrix coordinate pattern general\n1 1 1\n1 1\n", 1),
    ("%%MatrixMarket vector coordinate real general\n1 1 1\n1 1 1\n", 1),
    ("not a banner\n", 1),
    ("%%MatrixMarket matrix coordinate real general\n2 2 1\n3 1 1.0\n", 3),
    ("%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1 1.0\n1 1 2.0\n", 4),
    ("%%MatrixMarket matrix coordinate real general\n2 2 1\n1 1 abc\n", 3),
    ("%%MatrixMarket matrix coordinate real general\n2 2 1\n1 1 nan\n", 3),
    ("%%MatrixMarket matrix coordinate real general\n2 2\n", 2),
    ("%%MatrixMarket matrix array real general\n2 2\n1\n2\n3\n", 5),
])
def test_malformed_files_report_line(text, line):
    with pytest.raises(MatrixMarketError) as info:
        parse(text)
    assert info.value.lineno == line


def test_entry_count_mismatch():
    with pytest.raises(MatrixMarketError):
        parse("%%MatrixMarket matrix coordinate real general\n2 2 3\n1 1 1\n")


def test_missing_file(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_matrix_market(tmp_path / "absent.mtx")


@settings(max_examples=30, deadline=None)
@given(m=st.integers(1, 8), n=st.integers(1, 8), seed=st.integers(0, 2**32),
       density=st.floats(0.05, 1.0))
def test_round_trip(tmp_path_factory, m, n, seed, density):
    rng = np.random.default_rng(seed)
    a = rng.standard_normal((m, n)) * (rng.random((m, n)) < density)
    a *= 10.0 ** rng.integers(-200, 200, size=(m, n))
    path = tmp_path_factory.mktemp("mm") / "a.mtx"
    write_matrix_market(path, a, comment="round trip")
    np.testing.assert_array_equal(load_matrix_market(path), a)


def test_written_file_layout(tmp_path):
    path = tmp_path / "a.mtx"
    write_matrix_market(path, np.array([[0.0, 2.0], [1.0, 0.0]]), comment="two\nlines")
    assert path.read_text() == ("%%MatrixMarket matrix coordinate real general\n"
                                "% two\n% lines\n2 2 2\n2 1 1\n1 2 2\n")


def test_dense_csv(tmp_path):
    path = tmp_path / "a.csv"
    write_dense_csv(path, np.array([[1.0, 0.1], [2.0, -3.0]]))
    assert path.read_text() == "1,0.10000000000000001\n2,-3\n"
