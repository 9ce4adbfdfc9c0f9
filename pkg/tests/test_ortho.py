"""Haar sampling, sub-matrix norms, goodness, Hadamard counterexample."""
import numpy as np
import pytest
from scipy import stats

from rorrlab import ortho
from rorrlab.util import derive_rng


def test_haar_n1_is_sign():
    u = ortho.sample_haar(1, seed=0)
    assert u.entries.shape == (1, 1)
    assert abs(abs(u.entries[0, 0]) - 1.0) < 1e-12


def test_haar_orthogonality():
    u = ortho.sample_haar(64, seed=123)
    assert u.orthogonality_error() <= 1e-10


def test_haar_deterministic_per_seed():
    a = ortho.sample_haar(16, seed=7)
    b = ortho.sample_haar(16, seed=7)
    c = ortho.sample_haar(16, seed=8)
    assert np.array_equal(a.entries, b.entries)
    assert not np.array_equal(a.entries, c.entries)


def test_haar_zero_dimension_rejected():
    with pytest.raises(ValueError):
        ortho.sample_haar(0, seed=0)


def test_corner_identity_matches_full_sampler():
    # Q e_1 of the sign-corrected QR equals the normalized Gaussian column.
    for n, seed in ((16, 0), (64, 3), (128, 11)):
        u = ortho.sample_haar(n, seed)
        g = derive_rng(seed, "haar", n).standard_normal((n, n))
        expect = g[:, 0] / np.linalg.norm(g[:, 0])
        assert np.max(np.abs(u.entries[:, 0] - expect)) <= 1e-12


def test_corner_distribution_standard_normal():
    # sqrt(N) U_11 over 10^3 seeds is approximately N(0,1); seed-pinned.
    n = 256
    values = np.array([
        ortho.sample_haar(n, seed=s).entries[0, 0] for s in range(1000)
    ])
    _, p = stats.kstest(np.sqrt(n) * values, "norm")
    assert p > 0.01


def test_haar_rotation_invariance_smoke():
    # For fixed unit x, coordinates of U x look like first-column coordinates.
    n = 128
    rng = np.random.default_rng(0)
    x = rng.standard_normal(n)
    x /= np.linalg.norm(x)
    ux = np.concatenate([
        ortho.sample_haar(n, seed=s).entries @ x for s in range(40)
    ])
    cols = np.concatenate([
        ortho.sample_haar(n, seed=1000 + s).entries[:, 0] for s in range(40)
    ])
    _, p = stats.ks_2samp(ux, cols)
    assert p > 0.01


def test_submatrix_norm_full_matrix():
    u = ortho.sample_haar(32, seed=2)
    full = list(range(1, 33))
    assert ortho.submatrix_norm(u, full, full) == pytest.approx(1.0, abs=1e-9)


def test_submatrix_norm_singleton():
    u = ortho.sample_haar(16, seed=4)
    assert ortho.submatrix_norm(u, [3], [5]) == pytest.approx(abs(u.entries[2, 4]))


def test_submatrix_norm_matches_svd_oracle():
    u = ortho.sample_haar(64, seed=9)
    rng = np.random.default_rng(1)
    rows = sorted(int(v) + 1 for v in rng.choice(64, 3, replace=False))
    cols = sorted(int(v) + 1 for v in rng.choice(64, 5, replace=False))
    block = u.entries[np.ix_([r - 1 for r in rows], [c - 1 for c in cols])]
    oracle = float(np.linalg.svd(block, compute_uv=False)[0])
    assert ortho.submatrix_norm(u, rows, cols) == pytest.approx(oracle, abs=1e-9)
    assert ortho.power_iteration_norm(block) == pytest.approx(oracle, abs=1e-9)


def test_submatrix_empty_rejected():
    u = ortho.sample_haar(8, seed=0)
    with pytest.raises(ValueError):
        ortho.submatrix_norm(u, [], [1])


def test_submatrix_norm_monotone_and_capped():
    u = ortho.sample_haar(32, seed=5)
    rng = np.random.default_rng(3)
    rows = sorted(int(v) + 1 for v in rng.choice(32, 4, replace=False))
    cols = sorted(int(v) + 1 for v in rng.choice(32, 4, replace=False))
    small = ortho.submatrix_norm(u, rows[:2], cols)
    big = ortho.submatrix_norm(u, rows, cols)
    assert small <= big + 1e-12
    assert big <= 1.0 + 1e-12


def test_goodness_haar_sample():
    u = ortho.sample_haar(64, seed=21)
    report = ortho.check_goodness(u, sampled_pairs=2000, max_block=6, seed=1)
    assert report.violation_count == 0
    assert report.worst_ratio > 0
    assert report.checked_pairs > 2000  # exhaustive passes included


def test_goodness_smoke_n4():
    u = ortho.sample_haar(4, seed=3)
    report = ortho.check_goodness(u, sampled_pairs=50, max_block=2, seed=0)
    assert np.isfinite(report.worst_ratio)
    assert report.checked_pairs > 0
    parsed = report.to_json()
    assert "worst_ratio" in parsed


def test_goodness_flags_identity_at_2048():
    # Singleton blocks of I_N have norm 1 > sqrt(200 ln N / N) once N >= 2048.
    identity = ortho.OrthogonalMatrix(n=2048, entries=np.eye(2048), seed=None)
    report = ortho.check_goodness(identity, sampled_pairs=50, max_block=2, seed=0)
    assert report.violation_count > 0
    assert report.worst_ratio > 1.0
    assert ortho.goodness_bound(1, 1, 2048) < 1.0


def test_goodness_requires_n_at_least_two():
    u = ortho.sample_haar(1, seed=0)
    with pytest.raises(ValueError):
        ortho.check_goodness(u, sampled_pairs=1, max_block=1, seed=0)


def test_hadamard_counterexample_values():
    norm, bound = ortho.hadamard_counterexample(26)
    assert norm == 1.0
    assert bound == pytest.approx(0.663, abs=0.001)
    assert norm > bound

    norm, bound = ortho.hadamard_counterexample(12)
    assert norm == 1.0
    assert bound == pytest.approx(5.1, abs=0.1)
    assert norm < bound  # vacuous at small N

    with pytest.raises(ValueError):
        ortho.hadamard_counterexample(13)


def test_hadamard_block_is_constant():
    block = ortho.hadamard_implicit_block(4)
    assert block.shape == (4, 4)
    assert np.all(block == 0.25)


def test_hadamard_bound_decreasing_and_violated_from_26_on():
    bounds = [ortho.hadamard_counterexample(p)[1] for p in range(12, 42, 2)]
    assert all(a > b for a, b in zip(bounds, bounds[1:]))
    for p in range(26, 42, 2):
        norm, bound = ortho.hadamard_counterexample(p)
        assert norm > bound


def test_bilinear_tail_check():
    report = ortho.bilinear_tail_check(256, trials=4000, seed=5,
                                       thresholds=(0.0, 1.0, 2.0, 3.0))
    rows = {row["t"]: row for row in report.rows}
    # t = 0: symmetry gives frequency 1/2.
    zero = rows[0.0]
    assert abs(zero["frequency"] - 0.5) <= 4 * zero["stderr"]
    for t in (1.0, 2.0, 3.0):
        row = rows[t]
        oracle = row["gaussian_tail"]
        sigma = np.sqrt(oracle * (1 - oracle) / report.trials)
        assert abs(row["frequency"] - oracle) <= 4 * sigma
        assert row["frequency"] <= row["subgaussian_bound"] + 3 * row["stderr"]


def test_matrix_file_round_trip(tmp_path):
    u = ortho.sample_haar(24, seed=77)
    path = tmp_path / "u.mat"
    digest = ortho.save_matrix(path, u)
    assert digest == ortho.file_sha256(path)
    again = ortho.load_matrix(path)
    assert again.n == 24
    assert again.seed == 77
    assert np.array_equal(again.entries, u.entries)

    csv_path = tmp_path / "u.csv"
    ortho.save_matrix_csv(csv_path, u)
    loaded = np.loadtxt(csv_path, delimiter=",")
    assert np.allclose(loaded, u.entries, atol=1e-15)


def test_matrix_file_corruption_detected(tmp_path):
    u = ortho.sample_haar(8, seed=1)
    path = tmp_path / "u.mat"
    ortho.save_matrix(path, u)
    blob = bytearray(path.read_bytes())
    blob[40] ^= 0xFF  # flip a payload byte
    path.write_bytes(bytes(blob))
    with pytest.raises(ValueError):
        ortho.load_matrix(path)

    bad_magic = tmp_path / "bad.mat"
    bad_magic.write_bytes(b"NOPE" + bytes(16))
    with pytest.raises(ValueError):
        ortho.load_matrix(bad_magic)
