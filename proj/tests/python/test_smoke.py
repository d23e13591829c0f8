import math

import numpy as np
import pytest

kkindex = pytest.importorskip("kkindex")


def test_registry_lists_all_experiments():
    names = kkindex.experiment_registry()
    assert len(names) == 12
    assert "index_compare" in names


def test_config_defaults_and_errors():
    cfg = kkindex.parse_config_text("")
    assert cfg.modes == 4 and cfg.energy_cut == 8 and cfg.sigma == "pow2"
    with pytest.raises(kkindex.ConfigError, match="modes"):
        kkindex.parse_config_text("modes = -1")


def test_kernel_count_experiment():
    rows = kkindex.run_experiment("kernel_count")
    first = rows[0]
    assert first["truncation"] == "N=3 E=4"
    assert first["measured"] == 11
    assert all(r["pass"] for r in rows)
    assert kkindex.kernel_dimension(3, 4) == 11


def test_unknown_experiment():
    with pytest.raises(kkindex.UnknownExperiment):
        kkindex.run_experiment("nope")


def test_dirac_square_matches_weitzenbock_diagonal():
    d = kkindex.dirac_matrix(2, 4).toarray()
    assert np.allclose(d, d.conj().T)
    sq = d @ d
    assert np.abs(sq - np.diag(np.diag(sq))).max() < 1e-12
    eig = np.linalg.eigvalsh(sq)
    assert np.allclose(eig, np.round(eig / 2) * 2, atol=1e-10)
    assert kkindex.weitzenbock_residual(3, 6) < 1e-12


def test_xi_norm_and_tails():
    r = kkindex.xi_derivative_norm(0.5)
    assert abs(r["position"] - 0.25) < 1e-6
    assert abs(r["momentum"] - 0.25) < 1e-6
    oracle = sum(2 * math.sqrt(2 * n) * 2.0**-n for n in range(200, 5, -1))
    assert kkindex.tail_bound(5) == pytest.approx(oracle, rel=1e-12)


def test_twisted_blocks_and_partitions():
    assert kkindex.twisted_blocks("3x3", "heisenberg") == [3]
    assert sum(kkindex.partition_counts(3, 4)) == 11


def test_rng_stream_is_reproducible():
    a, b = kkindex.SeededRng(7), kkindex.SeededRng(7)
    assert [a.next() for _ in range(5)] == [b.next() for _ in range(5)]
    u = kkindex.SeededRng(1).uniform()
    assert 0.0 <= u < 1.0


def test_csv_is_deterministic():
    a = kkindex.experiment_csv("fingroup_suite")
    b = kkindex.experiment_csv("fingroup_suite")
    assert a == b
    assert a.startswith("# kk-index-lab v1\n")
