"""Replicate drivers: estimator sanity, CLT screening, probe, writers."""

import csv
import math

import numpy as np
import pytest

from critfpp import field, mc, weights
from critfpp.errors import DegenerateSampleError

BERN = weights.BernoulliCritical()
FA1 = weights.PowerLawCritical(1.0)
FA_HALF = weights.PowerLawCritical(0.5)


def box_cfg(n_list=(1, 2, 3), reps=50, master=11, d=BERN, guard=2.0):
    return mc.ExperimentConfig(
        distribution=d,
        quantity=mc.BoxTime(n_list),
        reps=reps,
        master_seed=master,
        guard_ratio=guard,
    )


def fake_law(mean, sd):
    def fake(d, quantity, key, seed, guard_ratio):
        rng = np.random.default_rng(seed)
        return float(rng.normal(mean, sd))

    return fake


# ---------------------------------------------------------------------------
# Configuration validation.
# ---------------------------------------------------------------------------


def test_config_validation():
    with pytest.raises(ValueError):
        box_cfg(reps=1)
    with pytest.raises(ValueError):
        box_cfg(master=-1)
    with pytest.raises(ValueError):
        box_cfg(master=2**64)
    with pytest.raises(ValueError):
        box_cfg(guard=1.2)
    with pytest.raises(ValueError):
        box_cfg(n_list=())
    with pytest.raises(ValueError):
        box_cfg(n_list=(3, 3))
    with pytest.raises(ValueError):
        box_cfg(n_list=(4, 2))
    with pytest.raises(ValueError):
        box_cfg(n_list=(-1, 2))


def test_circuit_level_validation():
    mc.CircuitTime((1, 2), p=0.7)
    with pytest.raises(ValueError):
        mc.CircuitTime((1, 2), p=0.4)
    with pytest.raises(ValueError):
        mc.CircuitTime((1, 2), p=1.0)


def test_scale_keys():
    assert mc.scale_keys(mc.BoxTime((2, 5))) == (2, 5)
    assert mc.scale_keys(mc.PointTime(((3, 4), (0, 8)))) == ((3, 4), (0, 8))
    assert mc.scale_keys(mc.ConstrainedTime((1,))) == (1,)


# ---------------------------------------------------------------------------
# Estimator sanity with an injected known law.
# ---------------------------------------------------------------------------


def test_estimator_recovers_known_law(monkeypatch):
    monkeypatch.setattr(mc, "_one_value", fake_law(5.0, 2.0))
    table = mc.run_experiment(box_cfg(n_list=(3,), reps=400))
    row = table.rows[0]
    assert abs(row.mean - 5.0) <= 3 * row.stderr_mean
    assert abs(row.variance - 4.0) <= 3 * row.stderr_var
    assert row.reps == 400
    assert row.stderr_mean == pytest.approx(math.sqrt(row.variance / 400))


def test_reps_two_boundary(monkeypatch):
    monkeypatch.setattr(mc, "_one_value", fake_law(0.0, 1.0))
    table = mc.run_experiment(box_cfg(n_list=(2,), reps=2))
    row = table.rows[0]
    assert row.reps == 2
    assert math.isfinite(row.stderr_var)
    assert row.variance > 0


def test_bootstrap_stderr_is_deterministic(monkeypatch):
    monkeypatch.setattr(mc, "_one_value", fake_law(1.0, 0.5))
    a = mc.run_experiment(box_cfg(n_list=(2,), reps=40), bootstrap_stderr=True)
    b = mc.run_experiment(box_cfg(n_list=(2,), reps=40), bootstrap_stderr=True)
    assert a == b
    assert a.rows[0].stderr_var > 0


# ---------------------------------------------------------------------------
# Real quantities at small scales: determinism and worker parity.
# ---------------------------------------------------------------------------


def test_run_experiment_deterministic():
    cfg = box_cfg(reps=30)
    assert mc.run_experiment(cfg) == mc.run_experiment(cfg)


def test_worker_count_does_not_change_results():
    cfg = box_cfg(n_list=(1, 2), reps=12)
    assert mc.run_experiment(cfg, workers=1) == mc.run_experiment(cfg, workers=3)


def test_point_quantity_rows_and_no_fit():
    cfg = mc.ExperimentConfig(
        distribution=FA1,
        quantity=mc.PointTime(((2, 1), (0, 3))),
        reps=10,
        master_seed=4,
    )
    table = mc.run_experiment(cfg)
    assert [r.scale for r in table.rows] == [(2, 1), (0, 3)]
    assert table.fit is None and table.variance_fit is None


def test_constrained_time_runs():
    cfg = mc.ExperimentConfig(
        distribution=BERN,
        quantity=mc.ConstrainedTime((1,)),
        reps=4,
        master_seed=8,
    )
    table = mc.run_experiment(cfg)
    assert table.rows[0].reps == 4
    assert table.rows[0].mean >= 0


def test_circuit_time_runs_at_elevated_level():
    cfg = mc.ExperimentConfig(
        distribution=BERN,
        quantity=mc.CircuitTime((1,), p=0.75),
        reps=4,
        master_seed=8,
    )
    table = mc.run_experiment(cfg)
    assert table.rows[0].reps == 4
    assert table.rows[0].mean >= 0


# ---------------------------------------------------------------------------
# Fits against the criterion series.
# ---------------------------------------------------------------------------


def test_series_sum_closed_forms():
    assert mc.series_sum(BERN, 5) == 4.0  # k = 2..5 of 1
    assert mc.series_sum(BERN, 5, power=2) == 4.0
    assert mc.series_sum(FA1, 3) == pytest.approx(0.25 + 0.125)
    assert mc.series_sum(FA1, 3, power=2) == pytest.approx(0.25**2 + 0.125**2)
    assert mc.series_sum(BERN, 1) == 0.0


def test_fit_present_only_with_two_scales_past_one(monkeypatch):
    monkeypatch.setattr(mc, "_one_value", fake_law(2.0, 0.3))
    assert mc.run_experiment(box_cfg(n_list=(0, 1), reps=8)).fit is None
    assert mc.run_experiment(box_cfg(n_list=(1, 2), reps=8)).fit is None
    table = mc.run_experiment(box_cfg(n_list=(2, 3), reps=8))
    assert table.fit is not None
    assert table.fit.model == "c*series"
    assert table.variance_fit.model == "c*series_sq"


def test_fit_recovers_linear_growth(monkeypatch):
    # exact mean c*(n-1) over Bernoulli series sums: c_hat == c, r2 == 1
    def exact(d, quantity, key, seed, guard_ratio):
        return 0.7 * (key - 1)

    monkeypatch.setattr(mc, "_one_value", exact)
    table = mc.run_experiment(box_cfg(n_list=(2, 4, 6, 8), reps=3))
    assert table.fit.c_hat == pytest.approx(0.7)
    assert table.fit.r_squared == pytest.approx(1.0)


# ---------------------------------------------------------------------------
# Partial flush on replicate failure.
# ---------------------------------------------------------------------------


def test_partial_results_flushed_on_failure(monkeypatch, tmp_path):
    def exploding(d, quantity, key, seed, guard_ratio):
        if key == 3:
            raise RuntimeError("replicate blew up")
        return float(key)

    monkeypatch.setattr(mc, "_one_value", exploding)
    out = tmp_path / "partial.csv"
    with pytest.raises(RuntimeError):
        mc.run_experiment(box_cfg(n_list=(1, 2, 3), reps=5),
                          partial_path=str(out))
    with open(out, newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == list(mc.RESULTS_HEADER)
    assert [r[0] for r in rows[1:]] == ["1", "2"]


# ---------------------------------------------------------------------------
# CLT screening.
# ---------------------------------------------------------------------------


def test_clt_underpowered_is_a_verdict(monkeypatch):
    monkeypatch.setattr(mc, "_one_value", fake_law(0.0, 1.0))
    report = mc.clt_test(box_cfg(n_list=(3,), reps=400), 3)
    assert report.verdict == mc.VERDICT_UNDERPOWERED
    assert report.reps == 400 and report.n == 3


def test_clt_consistent_on_normal_injection(monkeypatch):
    monkeypatch.setattr(mc, "_one_value", fake_law(3.0, 1.5))
    report = mc.clt_test(box_cfg(n_list=(3,), reps=800, master=2), 3)
    assert report.verdict == mc.VERDICT_NORMAL
    assert report.ks_statistic < mc.KS_BAND_COEFF / math.sqrt(800)
    assert abs(report.skewness) < mc.SKEW_BAND


def test_clt_rejects_skewed_law(monkeypatch):
    def skewed(d, quantity, key, seed, guard_ratio):
        rng = np.random.default_rng(seed)
        return float(rng.exponential(1.0))

    monkeypatch.setattr(mc, "_one_value", skewed)
    report = mc.clt_test(box_cfg(n_list=(3,), reps=800, master=2), 3)
    assert report.verdict == mc.VERDICT_REJECTED


def test_clt_degenerate_sample(monkeypatch):
    monkeypatch.setattr(mc, "_one_value", lambda *a: 1.25)
    with pytest.raises(DegenerateSampleError):
        mc.clt_test(box_cfg(n_list=(2,), reps=600), 2)


def test_clt_standardization_bookkeeping():
    report = mc.clt_test(box_cfg(n_list=(2,), reps=40, d=FA1), 2)
    v = np.array(report.sample)
    z = np.array(report.standardized_sample)
    assert np.allclose(z, (v - v.mean()) / v.std(ddof=1))
    assert len(v) == 40


def test_clt_sample_shares_fields_with_box_experiment():
    cfg = box_cfg(n_list=(2,), reps=25, d=FA1, master=6)
    report = mc.clt_test(cfg, 2)
    table = mc.run_experiment(cfg)
    assert table.rows[0].mean == pytest.approx(np.mean(report.sample))


def test_synthetic_normal_control():
    report = mc.synthetic_normal_report(2000, 20260815)
    assert report.n == -1
    assert report.reps == 2000
    assert report.verdict == mc.VERDICT_NORMAL
    assert report == mc.synthetic_normal_report(2000, 20260815)


# ---------------------------------------------------------------------------
# Divergence probe.
# ---------------------------------------------------------------------------


def test_probe_structure_on_bernoulli():
    cfg = box_cfg(n_list=(1, 2, 3, 4, 5), reps=20, master=3)
    report = mc.rho_divergence_probe(cfg)
    assert report.rows[0].increment is None
    means = [r.mean_time for r in report.rows]
    for prev, row in zip(report.rows, report.rows[1:]):
        assert row.increment == pytest.approx(row.mean_time - prev.mean_time)
        assert row.increment >= 0  # common randomness: profiles are monotone
    assert means == sorted(means)
    assert report.criterion.classification == "Diverges"
    # the trend call is a desk convention and, for atom-valued weights
    # at these scales, flips with the master seed; it is not pinned here
    assert report.trend in ("summable", "persistent")
    assert report.agrees_with_criterion is (report.trend == "persistent")


def test_probe_geometric_family_reads_summable():
    cfg = box_cfg(n_list=(1, 2, 3, 4, 5), reps=20, master=3, d=FA_HALF)
    report = mc.rho_divergence_probe(cfg)
    assert report.criterion.classification == "Converges"
    assert report.trend == "summable"
    assert report.agrees_with_criterion is True


def test_probe_validation():
    with pytest.raises(ValueError):
        mc.rho_divergence_probe(
            mc.ExperimentConfig(BERN, mc.PointTime(((1, 0),)), 5, 0))
    with pytest.raises(ValueError):
        mc.rho_divergence_probe(box_cfg(n_list=(3,), reps=5))


def test_probe_worker_parity():
    cfg = box_cfg(n_list=(1, 2, 3), reps=8, master=9)
    assert (mc.rho_divergence_probe(cfg, workers=1)
            == mc.rho_divergence_probe(cfg, workers=3))


# ---------------------------------------------------------------------------
# Writers.
# ---------------------------------------------------------------------------


def test_results_csv_format(tmp_path):
    table = mc.run_experiment(box_cfg(n_list=(1, 2), reps=10))
    path = tmp_path / "r.csv"
    mc.write_results_csv(table, str(path))
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == list(mc.RESULTS_HEADER)
    assert len(rows) == 3
    for row, r in zip(rows[1:], table.rows):
        assert row[0] == str(r.scale)
        assert row[1] == "box"
        assert float(row[2]) == r.mean
        assert row[2] == repr(r.mean)
        assert int(row[6]) == r.reps
        assert int(row[7]) == table.master_seed


def test_results_csv_bit_identical(tmp_path):
    table = mc.run_experiment(box_cfg(n_list=(1, 2), reps=10))
    p1, p2 = tmp_path / "a.csv", tmp_path / "b.csv"
    mc.write_results_csv(table, str(p1))
    mc.write_results_csv(table, str(p2))
    assert p1.read_bytes() == p2.read_bytes()


def test_point_scale_serialization(tmp_path):
    cfg = mc.ExperimentConfig(FA1, mc.PointTime(((2, -1),)), 5, 0)
    table = mc.run_experiment(cfg)
    path = tmp_path / "p.csv"
    mc.write_results_csv(table, str(path))
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[1][0] == "2:-1"


def test_clt_csv_format(tmp_path):
    report = mc.clt_test(box_cfg(n_list=(2,), reps=12, d=FA1), 2)
    path = tmp_path / "clt.csv"
    mc.write_clt_csv(report, str(path))
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == list(mc.CLT_HEADER)
    assert len(rows) == 13
    assert [int(r[0]) for r in rows[1:]] == list(range(12))
    assert float(rows[1][1]) == report.sample[0]


def test_summary_json_shape(tmp_path):
    table = mc.run_experiment(box_cfg(n_list=(2, 3), reps=8))
    path = tmp_path / "s.json"
    mc.write_summary_json(mc.table_summary(table), str(path))
    import json

    with open(path) as fh:
        data = json.load(fh)
    assert data["quantity"] == "box"
    assert data["distribution"] == "bernoulli"
    assert len(data["rows"]) == 2
    assert data["fit"]["model"] == "c*series"
    raw = path.read_text()
    assert raw.endswith("\n")
    mc.write_summary_json(mc.table_summary(table), str(path))
    assert path.read_text() == raw


def test_clt_summary_fields():
    report = mc.clt_test(box_cfg(n_list=(2,), reps=30, d=FA1), 2)
    s = mc.clt_summary(report)
    assert s["verdict"] == report.verdict
    assert s["ks_band"] == pytest.approx(mc.KS_BAND_COEFF / math.sqrt(30))
    s2 = mc.probe_summary(mc.rho_divergence_probe(box_cfg(n_list=(1, 2), reps=5)))
    assert set(s2) == {"rows", "criterion", "trend", "agrees_with_criterion"}
