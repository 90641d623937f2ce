import csv
import json
import math

import numpy as np
import pytest

import oracles
from kldro.harness import (
    TEST_TAG,
    TRAIN_TAG,
    DistributionSpec,
    EmptyInput,
    ExperimentConfig,
    InvalidSpec,
    NewsvendorProblem,
    UflProblem,
    emit_report,
    empirical,
    run_experiment,
    sample,
    statistics,
    stream,
)
from kldro.kl import max_kl


def test_degenerate_samples():
    rng = stream(0, TRAIN_TAG)
    assert list(sample(DistributionSpec("DiscreteUniform", (5, 5)), 3, rng)) == [5, 5, 5]
    assert list(sample(DistributionSpec("Binomial", (10, 0)), 2, rng)) == [0, 0]
    assert list(sample(DistributionSpec("Binomial", (0, 0.5)), 4, rng)) == [0, 0, 0, 0]


def test_poisson_mean():
    x = sample(DistributionSpec("Poisson", (5,)), 10_000, stream(7, TRAIN_TAG))
    assert abs(x.mean() - 5) <= 0.15
    assert x.min() >= 0


@pytest.mark.parametrize("spec,mean,var", [
    (DistributionSpec("DiscreteUniform", (0, 10)), 5.0, 10.0),
    (DistributionSpec("Binomial", (10, 0.5)), 5.0, 2.5),
    (DistributionSpec("Poisson", (3.5,)), 3.5, 3.5),
])
def test_sample_moments(spec, mean, var):
    x = sample(spec, 20_000, stream(3, TRAIN_TAG))
    assert x.dtype.kind == "i"
    assert abs(x.mean() - mean) <= 4 * math.sqrt(var / x.size)
    assert x.var(ddof=1) == pytest.approx(var, rel=0.05)


def test_discrete_uniform_support():
    x = sample(DistributionSpec("DiscreteUniform", (2, 4)), 3000, stream(1, TRAIN_TAG))
    assert set(np.unique(x)) == {2, 3, 4}


@pytest.mark.parametrize("kind,params", [
    ("DiscreteUniform", (3, 2)),
    ("DiscreteUniform", (0.5, 2)),
    ("Binomial", (-1, 0.5)),
    ("Binomial", (5, 1.5)),
    ("Poisson", (0,)),
    ("Poisson", (1, 2)),
    ("Gamma", (1,)),
])
def test_invalid_specs(kind, params):
    with pytest.raises(InvalidSpec):
        DistributionSpec(kind, params)


def test_sample_count_must_be_positive():
    with pytest.raises(InvalidSpec):
        sample(DistributionSpec("Poisson", (5,)), 0, stream(0, TRAIN_TAG))


def test_sampling_is_deterministic_and_streams_differ():
    spec = DistributionSpec("DiscreteUniform", (0, 10))
    a = sample(spec, 100, stream(42, TRAIN_TAG))
    b = sample(spec, 100, stream(42, TRAIN_TAG))
    c = sample(spec, 100, stream(42, TEST_TAG))
    d = sample(spec, 100, stream(42, TRAIN_TAG, 1))
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)
    assert not np.array_equal(a, d)


def test_train_and_test_draws_look_independent():
    spec = DistributionSpec("Poisson", (5,))
    corr = []
    for seed in range(30):
        a = sample(spec, 200, stream(seed, TRAIN_TAG))
        b = sample(spec, 200, stream(seed, TEST_TAG))
        corr.append(np.corrcoef(a, b)[0, 1])
    # mean of 30 correlations of independent samples has sd about 0.07 / sqrt(30)
    assert abs(np.mean(corr)) < 0.05


def test_empirical_examples():
    e = empirical([5, 5, 5])
    assert list(e.support) == [5.0] and list(e.probs) == [1.0]
    e = empirical([1, 2, 2, 3])
    assert list(e.support) == [1.0, 2.0, 3.0]
    assert list(e.probs) == [0.25, 0.5, 0.25]
    assert max_kl(e) == pytest.approx(math.log(4), abs=1e-15)
    with pytest.raises(EmptyInput):
        empirical([])


def test_statistics_examples():
    s = statistics(np.ones(7))
    assert (s["avg"], s["st_dev"], s["worst10"]) == (1.0, 0.0, 1.0)
    assert statistics(np.arange(1, 11))["worst10"] == 10.0
    assert statistics(np.arange(1, 101))["worst10"] == 95.5
    assert statistics([3.0])["st_dev"] == 0.0
    with pytest.raises(EmptyInput):
        statistics([])


def test_statistics_against_oracles():
    rng = np.random.default_rng(0)
    for R in (1, 2, 9, 10, 11, 37, 100):
        x = rng.normal(size=R) * 3
        s = statistics(x)
        assert s["avg"] == pytest.approx(x.mean(), abs=1e-12)
        assert s["st_dev"] == pytest.approx(oracles.sample_std(x), abs=1e-12)
        assert s["worst10"] == pytest.approx(oracles.worst10(x), abs=1e-12)
        assert s["min"] <= s["q1"] <= s["median"] <= s["q3"] <= s["max"]
        assert s["worst10"] >= s["avg"] - 1e-12


def test_quartiles_use_linear_interpolation():
    s = statistics([1.0, 2.0, 3.0, 4.0, 10.0])
    # positions (k - 1)(R - 1)/4 = 1, 2, 3 for R = 5
    assert (s["q1"], s["median"], s["q3"]) == (2.0, 3.0, 4.0)
    s = statistics([0.0, 4.0])
    assert (s["q1"], s["median"], s["q3"]) == (1.0, 2.0, 3.0)


def nv_config(**kw):
    return ExperimentConfig(NewsvendorProblem(), DistributionSpec("DiscreteUniform", (0, 10)), **kw)


@pytest.mark.parametrize("kw", [
    {"R": 0},
    {"R": 2.5},
    {"thetas": ()},
    {"thetas": (0.0, 1.5)},
    {"thetas": (-0.1,)},
    {"thetas": (0.1, 0.0)},
    {"thetas": (0.1, 0.1)},
    {"seed": -1},
    {"seed": 2**64},
])
def test_config_validation(kw):
    with pytest.raises(InvalidSpec):
        nv_config(**kw)


def test_config_round_trip_and_defaults(tmp_path):
    cfg = nv_config(seed=9, thetas=[0, 0.1])
    assert cfg.name == "newsvendor_discreteuniform"
    assert cfg.thetas == (0.0, 0.1)
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg.to_dict()))
    assert ExperimentConfig.load(path) == cfg
    ufl = ExperimentConfig(UflProblem(), DistributionSpec("Poisson", (5,)))
    assert ExperimentConfig.from_dict(ufl.to_dict()) == ufl


def test_bad_config_files(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text('{"R": 10,\n  "thetas": [0, }')
    with pytest.raises(InvalidSpec, match="line 2"):
        ExperimentConfig.load(path)
    good = nv_config().to_dict()
    for mutate in (lambda d: d.pop("problem"),
                   lambda d: d.update(problem={"kind": "lot-sizing"}),
                   lambda d: d.update(colour="blue"),
                   lambda d: d.update(distribution={"kind": "Poisson", "params": [-2]}),
                   lambda d: d["problem"].update(c_x=1.0)):
        data = json.loads(json.dumps(good))
        mutate(data)
        path.write_text(json.dumps(data))
        with pytest.raises(InvalidSpec):
            ExperimentConfig.load(path)


def test_newsvendor_experiment(tmp_path):
    cfg = nv_config(seed=5, output_dir=str(tmp_path))
    report = run_experiment(cfg)
    assert [r.theta for r in report.rows] == list(cfg.thetas)
    ys = [r.decision[0] for r in report.rows]
    assert ys == sorted(ys)
    r0 = report.row(0.0)
    assert r0.epsilons == (0.0,)
    assert report.row(0.25).epsilons[0] == pytest.approx(0.25 * report.max_kl[0])
    assert r0.costs.shape == (cfg.R,)
    for r in report.rows:
        assert r.min <= r.q1 <= r.median <= r.q3 <= r.max
        assert r.worst10 >= r.avg

    paths = emit_report(report)
    assert [p.name for p in paths] == ["newsvendor_discreteuniform_table.csv",
                                       "newsvendor_discreteuniform_boxplot.csv",
                                       "newsvendor_discreteuniform_raw.csv"]
    table = paths[0].read_text().splitlines()
    assert table[0] == "theta,y_star,avg,st_dev,worst10"
    assert len(table) == 7
    assert table[1].startswith("0.00,")
    assert paths[1].read_text().splitlines()[0] == "theta,min,q1,median,q3,max"
    raw = list(csv.reader(paths[2].open()))
    assert len(raw) == 1 + 6 * cfg.R


def test_ufl_experiment_writes_quoted_decisions(tmp_path):
    cfg = ExperimentConfig(UflProblem(), DistributionSpec("Binomial", (10, 0.5)), R=30,
                           thetas=(0.0, 0.05), seed=1, output_dir=str(tmp_path))
    report = run_experiment(cfg)
    assert len(report.max_kl) == 12
    assert len(report.row(0.05).epsilons) == 12
    table = emit_report(report, formats=("table_csv",))[0]
    lines = table.read_text().splitlines()
    assert len(lines) == 3
    assert lines[2].startswith('0.05,"1,0,1",')
    rows = list(csv.DictReader(table.open()))
    assert rows[1]["y_star"] == "1,0,1"


def test_reports_are_byte_identical(tmp_path):
    outs = []
    for k in range(2):
        cfg = nv_config(seed=11, thetas=(0.0, 0.1), output_dir=str(tmp_path / str(k)))
        outs.append([p.read_bytes() for p in emit_report(run_experiment(cfg))])
    assert outs[0] == outs[1]


def test_unknown_format_rejected(tmp_path):
    report = run_experiment(nv_config(R=5, thetas=(0.0,)))
    with pytest.raises(ValueError):
        emit_report(report, tmp_path, formats=("xlsx",))
