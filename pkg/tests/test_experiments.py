import csv
import dataclasses
import json
import math

import numpy as np
import pytest

from lipsparse import experiments as ex
from lipsparse.simgen import ExperimentConfig

FAST = ex.RunOptions(n_points=15, max_iter=3000, rel_tol=1e-7)
CLF = ExperimentConfig(n=40, p=30, k_star=3, delta=0.8, n_val=300, n_test=300)


def strip_wall(records):
    return [dataclasses.replace(r, wall_ms=0.0) for r in records]


def test_single_record():
    recs = ex.run_example(CLF, ["a_l1"], [30], 1, FAST)
    assert len(recs) == 1
    r = recs[0]
    assert r.status == "ok" and r.method == "a_l1" and r.p == 30 and r.seed == 0
    assert 0 <= r.l2_error <= 2 and 0 <= r.task_metric <= 1 and r.iters > 0


def test_record_per_cell():
    recs = ex.run_example(CLF, ["a_l1", "c_l2"], [20, 30], 2, FAST)
    assert [(r.p, r.seed, r.method) for r in recs] == [
        (p, s, m) for p in (20, 30) for s in (0, 1) for m in ("a_l1", "c_l2")
    ]


def test_chance_level_without_separation():
    cfg = ExperimentConfig(n=60, p=40, k_star=5, delta=0.0, n_val=1000, n_test=10000)
    recs = ex.run_example(cfg, ["a_l1", "b_slope", "c_l2"], [40], 1, FAST)
    band = 3 * math.sqrt(0.25 / 10000)
    for r in recs:
        assert abs(r.task_metric - 0.5) <= band, r


def test_group_methods_need_groups():
    with pytest.raises(ValueError):
        ex.method_spec("d_group_l1l2", CLF, FAST)
    with pytest.raises(ValueError):
        ex.method_spec("lasso", CLF, FAST)


def test_incompatible_method_recorded_not_raised():
    recs = ex.run_example(CLF, ["lasso", "a_l1"], [30], 1, FAST)
    assert recs[0].status.startswith("error") and math.isnan(recs[0].l2_error)
    assert recs[1].status == "ok"


def test_method_bindings():
    reg_cfg = ExperimentConfig(example="heteroscedastic_regression", n=40, p=30, k_star=3)
    lad = ex.method_spec("l1_lad", reg_cfg, FAST)
    assert lad.loss.kind.value == "smoothed_quantile" and lad.loss.theta == 0.5
    assert ex.method_spec("ridge", reg_cfg, FAST).reg is None
    assert ex.method_spec("lasso", reg_cfg, FAST).eta0_rule.value == "lasso_xty"
    slope = ex.method_spec("b_slope", CLF, FAST)
    assert slope.reg.weights.size == 30 and np.all(np.diff(slope.reg.weights) <= 0)
    assert ex.method_spec("a_l1", CLF, dataclasses.replace(FAST, loss="logistic")).loss.kind.value == "logistic"
    with pytest.raises(ValueError):
        ex.method_spec("a_l1", CLF, dataclasses.replace(FAST, loss="square"))


def test_regression_methods_run():
    cfg = ExperimentConfig(example="heteroscedastic_regression", n=60, p=30, k_star=3, snr=5.0, n_val=300, n_test=300)
    recs = ex.run_example(cfg, ["l1_lad", "slope_lad", "lasso", "ridge", "a_l1"], [30], 1, FAST)
    assert all(r.status == "ok" for r in recs), recs
    assert all(r.task_metric >= 0 for r in recs)


def test_group_example_runs():
    cfg = ExperimentConfig(example="group_classification", n=40, p=20, g_star=4, s_star=2, delta=0.5, n_val=200, n_test=200)
    recs = ex.run_example(cfg, ["d_group_l1l2", "e_group_l1linf"], [20], 1, FAST)
    assert all(r.status == "ok" for r in recs)


def test_determinism_and_parallel_equivalence():
    a = ex.run_example(CLF, ["a_l1", "b_slope"], [20, 30], 2, FAST)
    b = ex.run_example(CLF, ["a_l1", "b_slope"], [20, 30], 2, FAST)
    c = ex.run_example(CLF, ["a_l1", "b_slope"], [20, 30], 2, dataclasses.replace(FAST, jobs=2))
    assert strip_wall(a) == strip_wall(b) == strip_wall(c)


def test_failure_isolation(monkeypatch):
    clean = ex.run_example(CLF, ["a_l1", "c_l2"], [20, 30], 1, FAST)
    original = ex._fit_method

    def broken(problem, spec, opts, cache, rec):
        if spec.label is ex.Method.C_L2 and problem.config.p == 20:
            raise FloatingPointError("diverged")
        return original(problem, spec, opts, cache, rec)

    monkeypatch.setattr(ex, "_fit_method", broken)
    dirty = ex.run_example(CLF, ["a_l1", "c_l2"], [20, 30], 1, FAST)
    failed = [r for r in dirty if r.status != "ok"]
    assert len(failed) == 1 and "diverged" in failed[0].status
    keep = lambda recs: [r for r in strip_wall(recs) if not (r.p == 20 and r.method == "c_l2")]
    assert keep(clean) == keep(dirty)


def test_loglog_slope_planted():
    ns = [100, 200, 400, 800]
    assert ex.loglog_slope(ns, [3.0 / math.sqrt(n) for n in ns]) == pytest.approx(-0.5, abs=1e-6)
    assert ex.loglog_slope(ns, [0.7] * 4) == pytest.approx(0.0, abs=1e-12)


def test_loglog_slope_degenerate():
    with pytest.raises(ValueError):
        ex.loglog_slope([100, 100], [1.0, 2.0])
    with pytest.raises(ValueError):
        ex.loglog_slope([100, 200], [1.0, 0.0])


def test_rate_check_needs_four_sizes():
    with pytest.raises(ValueError):
        ex.rate_check("lasso", [100, 200, 400], CLF, 1)


def _rec(**kw):
    base = dict(example="sparse_classification", p=10, n=20, method="a_l1", seed=0)
    base.update(kw)
    return ex.RunRecord(**base)


def test_aggregate_single_and_pair():
    (row,) = ex.aggregate([_rec(l2_error=0.4)])
    assert row["l2_error_mean"] == 0.4 and row["l2_error_std"] == 0.0
    (row,) = ex.aggregate([_rec(l2_error=0.0), _rec(seed=1, l2_error=2.0)])
    assert row["l2_error_mean"] == 1.0 and row["l2_error_std"] == pytest.approx(math.sqrt(2))


def test_aggregate_skips_failures():
    (row,) = ex.aggregate([_rec(l2_error=1.0), _rec(seed=1, status="error: x")])
    assert row["l2_error_count"] == 1 and row["n_runs"] == 2


def test_aggregate_permutation_invariant(rng):
    recs = [_rec(seed=s, method=m, l2_error=float(rng.random()), task_metric=float(rng.random()))
            for s in range(6) for m in ("a_l1", "b_slope")]
    ref = ex.aggregate(recs)
    for _ in range(5):
        shuffled = [recs[i] for i in rng.permutation(len(recs))]
        assert ex.aggregate(shuffled) == ref


def test_aggregate_empty():
    with pytest.raises(ValueError):
        ex.aggregate([])


def test_csv_and_json_outputs(tmp_path):
    recs = [_rec(l2_error=0.5, task_metric=0.1), _rec(seed=1, status="error: boom")]
    ex.write_results_csv(recs, tmp_path / "r.csv")
    rows = list(csv.DictReader(open(tmp_path / "r.csv")))
    assert tuple(rows[0]) == ex.CSV_COLUMNS
    assert rows[0]["schema_version"] == "1" and rows[1]["l2_error"] == "nan"
    ex.write_summary_json(ex.aggregate(recs), tmp_path / "s.json", {"k": 1})
    payload = json.loads((tmp_path / "s.json").read_text())
    assert payload["schema_version"] == 1 and payload["config"] == {"k": 1}
