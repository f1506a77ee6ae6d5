import io
import math
import pickle

import numpy as np
import pytest

from socialdata_pricing import experiments as ex
from socialdata_pricing.errors import AssumptionUnsatisfiable
from socialdata_pricing.graph import sample_edges_path

SMALL = ex.ExperimentConfig(n=6, runs=4, periods=20, horizon=10, mu_g=1.0, c=1.0)


def test_config_defaults():
    cfg = ex.ExperimentConfig()
    assert (cfg.n, cfg.p_e, cfg.mu_a, cfg.mu_b, cfg.mu_g, cfg.c) == (50, 0.8, 1.0, 20.0, 8.0, 10.0)
    assert cfg.periods == 50 and cfg.runs == 50 and cfg.param_floor == 0.01


@pytest.mark.parametrize("field", ["runs", "periods", "horizon", "n"])
def test_config_rejects_nonpositive(field):
    with pytest.raises(ValueError):
        ex.ExperimentConfig(**{field: 0})


def test_run_instance_deterministic():
    a = ex.run_instance(SMALL, 2)
    b = ex.run_instance(SMALL, 2)
    assert pickle.dumps(a.to_dict()) == pickle.dumps(b.to_dict())


def test_decoupled_ratio():
    cfg = ex.ExperimentConfig(n=8, p_e=0.0, c=0.0, runs=1)
    rec = ex.run_instance(cfg, 0)
    assert rec.retained
    assert rec.metrics["Pi_d"] / rec.metrics["Pi_s"] == pytest.approx(4 / 3, rel=1e-12)


def test_small_default_passes_dominance():
    cfg = ex.ExperimentConfig(n=10)
    checked = 0
    for r in range(20):
        rec = ex.run_instance(cfg, r)
        m = rec.metrics
        if m["Pi_d"] is None:
            continue
        checked += 1
        assert m["Pi_d"] >= m["Pi_s"] * (1 - 1e-9)
        assert m["U_d"] >= m["U_s"] - 1e-9 * abs(m["U_s"])
    assert checked > 0


def test_parameter_floor():
    cfg = ex.ExperimentConfig(n=200, mu_a=0.0, mu_b=0.0)
    params = ex.sample_params(cfg, 1)
    assert params.a.min() == 0.01 and params.b.min() == 0.01


def test_resampling_limit():
    # congestion this large with tiny b cannot satisfy the bounded-demand condition
    cfg = ex.ExperimentConfig(n=5, mu_b=-50.0, c=0.0, mu_g=50.0, p_e=1.0, max_rejections=3)
    with pytest.raises(AssumptionUnsatisfiable):
        ex.run_instance(cfg, 0)


def test_edge_list_source():
    cfg = ex.ExperimentConfig(n=8, graph_path=str(sample_edges_path()), runs=2, mu_g=1.0, c=1.0)
    rec = ex.run_instance(cfg, 0)
    assert rec.metrics["Pi_s"] is not None


def test_single_value_sweep_equals_monte_carlo():
    result = ex.sweep(SMALL, "c", [SMALL.c])
    assert result.rows == ex.monte_carlo(SMALL, "c")


def test_sweep_validation():
    with pytest.raises(ValueError):
        ex.sweep(SMALL, "xyz", [1.0])
    with pytest.raises(ValueError):
        ex.sweep(SMALL, "c", [])
    assert ex.canonical_parameter("pe") == "p_e"
    assert ex.canonical_parameter("mu-g") == "mu_g"


def test_zero_tie_control_is_bitwise_flat():
    cfg = ex.ExperimentConfig(n=8, runs=5, zero_ties=True, mu_g=0.0, c=0.5, periods=20, horizon=10)
    result = ex.sweep(cfg, "p_e", [0.0, 0.5, 1.0])
    by_metric = {}
    for row in result.rows:
        by_metric.setdefault(row.metric, []).append(row.mean)
    for metric, means in by_metric.items():
        assert means[0] == means[1] == means[2], metric


def test_static_normalization_is_one():
    result = ex.sweep(SMALL, "c", [1.0])
    norm = {r.metric: r for r in result.rows}
    if norm["Pi_s_norm"].runs:
        assert norm["Pi_s_norm"].mean == 1.0
        assert norm["U_s_norm"].mean == 1.0


def test_empty_mean_is_null():
    rec = ex.RunRecord(0, {}, 0, dict.fromkeys(ex.METRICS), {}, None, ["negative_static_demand"])
    rows = ex.aggregate([rec], "c", 1.0, "by_static")
    assert all(r.mean is None and r.runs == 0 and r.warnings == 1 for r in rows)


def test_dominance_asserted_in_aggregation():
    metrics = {"Pi_s": 2.0, "Pi_d": 1.0, "U_s": 1.0, "U_d": 1.0, "Pi_simu": 1.0, "Pi_greedy": 1.0}
    rec = ex.RunRecord(0, {}, 0, metrics, {}, 0.5, [])
    from socialdata_pricing.errors import DominanceViolation
    with pytest.raises(DominanceViolation):
        ex.aggregate([rec], "c", 1.0, "none")


def test_workers_do_not_change_results():
    serial = ex.run_all(SMALL)
    parallel = ex.run_all(ex.ExperimentConfig(**{**SMALL.to_dict(), "workers": 2}))
    assert [r.to_dict() for r in serial] == [r.to_dict() for r in parallel]


def test_convergence_trace_scalar():
    cfg = ex.ExperimentConfig(n=1, mu_a=1.0, mu_b=1.0, c=0.0, periods=12)
    # parameters are random around the means, so check the geometric structure
    trace = ex.convergence_trace(cfg)
    rev = trace.cumulative_revenue
    ratios = np.diff(rev)[1:] / np.diff(rev)[:-1]
    np.testing.assert_allclose(ratios, 0.25, rtol=1e-9)
    assert rev[-1] == pytest.approx(trace.revenue_limit, rel=1e-6)
    assert rev[0] / trace.revenue_limit == pytest.approx(0.75, rel=1e-12)
    assert rev[1] / trace.revenue_limit == pytest.approx(15 / 16, rel=1e-12)


def test_convergence_trace_monotone():
    trace = ex.convergence_trace(SMALL)
    assert np.all(np.diff(trace.cumulative_revenue) >= 0)
    rows = trace.rows()
    assert rows[-2].metric == "Pi_d" and math.isinf(rows[-2].value)


def test_emit_header_only():
    buf = io.StringIO()
    ex.emit([], "csv", buf)
    assert buf.getvalue() == "parameter,value,metric,mean,stderr,runs,warnings\n"


@pytest.mark.parametrize("fmt", ["csv", "json"])
def test_emit_round_trip(fmt):
    row = ex.SweepRow("c", 2.5, "Pi_d", 0.123456789012, None, 7, 3)
    buf = io.StringIO()
    ex.emit([row], fmt, buf, {"note": "x"})
    assert ex.parse_rows(buf.getvalue(), fmt) == [row]


def test_emit_significant_digits():
    buf = io.StringIO()
    ex.emit([ex.SweepRow("c", 1.0, "Pi_d", 1 / 3, 2 / 3, 1, 0)], "csv", buf)
    assert "0.333333333333,0.666666666667" in buf.getvalue()


def test_emit_unknown_format():
    with pytest.raises(ValueError):
        ex.emit([], "xml", io.StringIO())
