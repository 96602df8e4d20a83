import io
import csv
import math

import pytest

from crossmoment.errors import InvalidInput, Unsupported
from crossmoment.experiments import (
    RAW_HEADER,
    SUMMARY_HEADER,
    BenchGrid,
    relative_error,
    run_bench,
    run_ratio_sweep,
)


def test_relative_error_examples():
    assert relative_error(2, 2) == 0
    assert relative_error(2, 1) == 0.5
    assert relative_error(-2, -3) == 0.5
    with pytest.raises(InvalidInput):
        relative_error(0, 1)


@pytest.mark.parametrize("kwargs", [
    dict(replications=0),
    dict(sample_sizes=(100, 100)),
    dict(sample_sizes=(1000, 100)),
    dict(sample_sizes=(2,)),
    dict(methods=("magic",)),
    dict(methods=()),
    dict(variance_ratio_grid=(0.0,)),
    dict(seed=-1),
])
def test_grid_validation(kwargs):
    with pytest.raises(InvalidInput):
        BenchGrid(**kwargs)


def test_grid_family():
    with pytest.raises(Unsupported):
        BenchGrid(noise_family="cauchy")


def test_single_rep_single_cell():
    res = run_bench(BenchGrid(sample_sizes=(500,), replications=1, methods=("did",)))
    assert len(res.rows) == 1
    assert res.rows[0].std_err == 0.0
    assert res.rows[0].failures == 0


def test_csv_schema_and_determinism():
    grid = BenchGrid(sample_sizes=(300, 3000), replications=3, methods=("cross_moment", "did", "ols", "twfe"),
                     seed=4)
    a, b = run_bench(grid), run_bench(grid, threads=3)
    assert a.to_csv_string() == b.to_csv_string()
    assert a.to_csv_string(raw=True) == b.to_csv_string(raw=True)
    rows = list(csv.reader(io.StringIO(a.to_csv_string())))
    assert tuple(rows[0]) == SUMMARY_HEADER
    assert len(rows) == 1 + 4 * 2
    raw = list(csv.reader(io.StringIO(a.to_csv_string(raw=True))))
    assert tuple(raw[0]) == RAW_HEADER and len(raw) == 1 + 4 * 2 * 3
    for r in a.rows:
        assert r.failures <= r.replications
        assert math.isnan(r.mean_err) or r.mean_err >= 0


def test_twfe_and_did_agree_in_bench():
    res = run_bench(BenchGrid(sample_sizes=(400,), replications=4, methods=("did", "twfe")))
    did = [r.beta_hat for r in res.raw if r.method == "did"]
    twfe = [r.beta_hat for r in res.raw if r.method == "twfe"]
    assert did == pytest.approx(twfe, abs=1e-8)


def test_failures_are_counted_not_averaged():
    res = run_bench(BenchGrid(sample_sizes=(1000,), replications=4, noise_family="gaussian",
                              methods=("cross_moment", "did")))
    cm = res.row("cross_moment", 1000)
    assert cm.failures == sum(r.status != "ok" for r in res.raw if r.method == "cross_moment")
    assert cm.failures >= 1
    assert res.row("did", 1000).failures == 0
    statuses = {r.status for r in res.raw if r.method == "cross_moment"}
    assert statuses <= {"ok", "ConditionNotDetected", "SignUndetermined", "DegenerateDenominator"}


def test_paired_parameters_shared_across_cells():
    res = run_bench(BenchGrid(sample_sizes=(100, 200), replications=2, methods=("did",)))
    by_rep = {}
    for r in res.raw:
        by_rep.setdefault(r.replication, set()).add((r.params_seed, r.beta_true))
    assert all(len(v) == 1 for v in by_rep.values())
    unpaired = run_bench(BenchGrid(sample_sizes=(100, 200), replications=2, methods=("did",), paired=False))
    assert len({r.params_seed for r in unpaired.raw}) == 4


def test_ratio_sweep_requires_two_proxy_method():
    with pytest.raises(InvalidInput):
        run_ratio_sweep(BenchGrid(methods=("cross_moment",), variance_ratio_grid=(1.0,)))
    with pytest.raises(InvalidInput):
        run_ratio_sweep(BenchGrid(methods=("two_proxy",)))


def test_single_ratio_sweep_equals_bench_cell():
    common = dict(replications=2, methods=("two_proxy", "did"), seed=3)
    sweep = run_ratio_sweep(BenchGrid(variance_ratio_grid=(10.0,), sweep_size=2000, **common))
    bench = run_bench(BenchGrid(sample_sizes=(2000,), w_ratio=10.0, **common))
    assert [r.beta_hat for r in sweep.raw] == [r.beta_hat for r in bench.raw]


def test_ratio_sweep_output():
    grid = BenchGrid(methods=("cross_moment_w", "two_proxy"), variance_ratio_grid=(0.5, 5.0), sweep_size=5000,
                     replications=2)
    res = run_ratio_sweep(grid)
    assert {r.x_axis for r in res.rows} == {"var_ratio"}
    assert [r.x_value for r in res.rows] == [0.5, 0.5, 5.0, 5.0]
    assert "var_ratio,0.5" in res.to_csv_string()


@pytest.mark.slow
def test_bench_cross_moment_beats_baselines_at_large_n():
    grid = BenchGrid(sample_sizes=(1_000_000,), replications=10, methods=("cross_moment", "did", "ols"))
    res = run_bench(grid)
    cm = res.row("cross_moment", 1_000_000).mean_err
    assert cm < res.row("did", 1_000_000).mean_err
    assert cm < res.row("ols", 1_000_000).mean_err


@pytest.mark.slow
def test_uniform_high_ratio_combined_beats_two_proxy():
    grid = BenchGrid(methods=("cross_moment_wz", "two_proxy"), variance_ratio_grid=(100.0,),
                     noise_family="uniform", replications=10, resamples=20)
    res = run_ratio_sweep(grid)
    assert res.row("cross_moment_wz", 100.0).mean_err <= res.row("two_proxy", 100.0).mean_err
