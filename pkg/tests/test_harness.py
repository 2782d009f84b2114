import json
import math
import subprocess
import sys

import numpy as np
import pytest

from mimo_secrecy import harness as hz
from mimo_secrecy.cli import main
from mimo_secrecy.model import ConfigError, SystemConfig, config_to_dict


@pytest.fixture
def small_spec():
    base = SystemConfig.symmetric(K=3, n=4, m_eve=6, d=2, epsilon=1.5)
    return hz.ExperimentSpec(base=base, snr_grid_db=(5.0, 25.0), trials=3,
                             algorithms=("mtmse",), max_iters=5, master_seed=7)


@pytest.fixture
def both_spec(small_spec):
    return hz.replace(small_spec, algorithms=("mtmse", "ia"),
                      eve_antenna_grid=(4, 6), trials=2, ia_max_iters=30)


def test_row_count(small_spec, both_spec):
    assert len(hz.run_sweep(small_spec).rows) == 6
    assert len(hz.run_sweep(both_spec).rows) == 2 * 2 * 2 * 2


def test_row_schema_and_order(both_spec):
    res = hz.run_sweep(both_spec)
    assert res.columns[:7] == ("algorithm", "snr_db", "m_eve", "trial", "seed",
                               "iterations", "converged")
    assert res.columns[-1] == "total_mse"
    keys = [(hz.ALGORITHMS.index(r[0]), r[1], r[2], r[3]) for r in res.rows]
    assert keys == sorted(keys)
    for d in res.as_dicts():
        assert d["secrecy_rate_clamped_1"] == max(d["secrecy_rate_raw_1"], 0.0)
        assert d["total_mse"] == pytest.approx(
            d["legit_mse_1"] + d["legit_mse_2"] + d["legit_mse_3"], abs=1e-12)


def test_channels_shared_across_snr(small_spec):
    res = hz.run_sweep(small_spec)
    assert res.column("seed", snr_db=5.0) == res.column("seed", snr_db=25.0)


def test_byte_identical_files(small_spec, tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    hz.write_results(hz.run_sweep(small_spec), a)
    hz.write_results(hz.run_sweep(small_spec), b)
    assert a.read_bytes() == b.read_bytes()
    assert (tmp_path / "a.agg.csv").read_bytes() == (tmp_path / "b.agg.csv").read_bytes()


def test_parallel_equals_serial(both_spec):
    assert hz.run_sweep(both_spec, jobs=1).rows == hz.run_sweep(both_spec, jobs=2).rows


def test_csv_shape(small_spec, tmp_path):
    empty = hz.ExperimentResult(K=3)
    hz.write_results(empty, tmp_path / "e.csv")
    text = (tmp_path / "e.csv").read_text()
    assert text == ",".join(empty.columns) + "\n"
    hz.write_results(hz.run_sweep(small_spec), tmp_path / "r.csv")
    text = (tmp_path / "r.csv").read_text()
    assert text.endswith("\n") and len(text.splitlines()) == 7


@pytest.mark.parametrize("fmt", ["csv", "structured"])
def test_round_trip(both_spec, tmp_path, fmt):
    res = hz.run_sweep(both_spec)
    path = tmp_path / ("r.csv" if fmt == "csv" else "r.json")
    hz.write_results(res, path, fmt)
    back = hz.read_results(path)
    assert back.K == res.K
    assert back.rows == res.rows


def test_failed_rows_round_trip(tmp_path):
    row = ("mtmse", 5.0, 6, 0, 1, -1, False) + (math.nan,) * 19
    res = hz.ExperimentResult(K=3, rows=[row])
    hz.write_results(res, tmp_path / "f.csv")
    back = hz.read_results(tmp_path / "f.csv").rows[0]
    assert back[:7] == row[:7] and all(math.isnan(x) for x in back[7:])
    cols, agg = res.aggregate()
    assert agg[0][cols.index("n_failed")] == 1


def test_aggregate_is_mean(both_spec):
    res = hz.run_sweep(both_spec)
    cols, agg = res.aggregate()
    for a in agg:
        alg, snr, me = a[:3]
        for name in ("total_mse", "secrecy_rate_clamped_1", "eve_mse_2", "iterations"):
            vals = res.column(name, algorithm=alg, snr_db=snr, m_eve=me)
            assert a[cols.index(name)] == pytest.approx(np.mean(vals), abs=1e-12)
        assert a[cols.index("n_trials")] == 2


def test_io_errors(tmp_path):
    with pytest.raises(hz.ResultsIOError):
        hz.write_results(hz.ExperimentResult(K=3), tmp_path / "no" / "x.csv")
    with pytest.raises(hz.ResultsIOError):
        hz.read_results(tmp_path / "missing.csv")
    (tmp_path / "bad.csv").write_text("a,b\n")
    with pytest.raises(hz.ResultsIOError):
        hz.read_results(tmp_path / "bad.csv")


def test_spec_validation(small_spec):
    for bad in ({"trials": 0}, {"snr_grid_db": ()}, {"snr_grid_db": (math.inf,)},
                {"algorithms": ("x",)}, {"eve_antenna_grid": (0,)}, {"method": "x"}):
        with pytest.raises(ConfigError):
            hz.replace(small_spec, **bad).validate()


def test_spec_round_trip(both_spec, tmp_path):
    data = hz.spec_to_dict(both_spec)
    path = tmp_path / "s.json"
    path.write_text(json.dumps(data))
    assert hz.load_spec(path) == both_spec
    with pytest.raises(ConfigError):
        hz.spec_from_dict({**data, "bogus": 1})
    with pytest.raises(ConfigError):
        hz.spec_from_dict({"base": "M4"})


def test_presets():
    assert len(hz.preset_specs("fig2")) == 3
    (_, fig3), = hz.preset_specs("fig3", trials=5, master_seed=3)
    assert fig3.trials == 5 and fig3.master_seed == 3
    assert fig3.snr_grid_db == (0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0)
    assert fig3.eve_grid == (6,) and fig3.base.n_tx == (4, 4, 4)
    assert hz.preset_specs("fig4")[0][1].eve_grid == (4, 5)
    labels = dict(hz.preset_specs("fig5"))
    assert labels["M2"].eve_grid == tuple(range(1, 9))
    assert labels["M4"].snr_grid_db == (10.0,)
    assert all(s.trials == 200 for _, s in hz.preset_specs("fig6"))
    with pytest.raises(ConfigError):
        hz.preset_specs("fig9")


def test_convergence_trace_rows():
    cfg = SystemConfig.symmetric(K=3, n=4, m_eve=6, d=2, epsilon=1.5)
    state, trace = hz.run_convergence_trace(cfg, 25.0, seed=1,
                                            opts=hz.mt.MTMSEOptions(max_iters=4))
    cols, rows = hz.trace_rows(trace)
    assert cols[:2] == ("iteration", "total_mse") and len(cols) == 2 + 5 * 3
    assert [r[0] for r in rows] == list(range(len(rows)))


def test_identity_suite():
    with pytest.raises(ValueError):
        hz.run_identity_suite(n_cases=0)
    a = hz.run_identity_suite(seed=4, n_cases=10, kkt=False)
    b = hz.run_identity_suite(seed=4, n_cases=10, kkt=False)
    assert a.checks == b.checks
    assert a.passed
    assert all(line.startswith("PASS") for line in a.lines())


def test_more_eavesdropper_antennas_raise_total_mse():
    # Matched channel and initial seeds over 100 trials: each step of the
    # eavesdropper size raises the terminal total MSE in most trials.
    base = SystemConfig.symmetric(K=3, n=4, m_eve=4, d=2, epsilon=1.5)
    end = np.array([[hz.run_convergence_trace(hz.replace(base, m_eve=me), 25.0, seed=t)[1]
                     .records[-1].total_mse for me in (4, 6, 8)] for t in range(100)])
    assert np.sum(end[:, 0] < end[:, 1]) > 50
    assert np.sum(end[:, 1] < end[:, 2]) > 50


# -- command line ------------------------------------------------------------

def test_cli_run(tmp_path, capsys):
    out = tmp_path / "t.csv"
    assert main(["run", "--max-iters", "3", "--out", str(out)]) == 0
    assert out.read_text().startswith("iteration,total_mse")


def test_cli_sweep_and_config_errors(small_spec, tmp_path, capsys):
    spec = tmp_path / "s.json"
    spec.write_text(json.dumps(hz.spec_to_dict(hz.replace(small_spec, trials=1))))
    out = tmp_path / "r.csv"
    assert main(["sweep", "--config", str(spec), "--out", str(out)]) == 0
    assert len(out.read_text().splitlines()) == 3
    assert (tmp_path / "r.agg.csv").exists()
    assert main(["sweep"]) == 1
    assert main(["sweep", "--config", str(spec), "--trials", "0"]) == 1
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["sweep", "--config", str(bad)]) == 1
    assert main(["run", "--jobs", "0"]) == 1


def test_cli_io_error(small_spec, tmp_path):
    spec = tmp_path / "s.json"
    spec.write_text(json.dumps(hz.spec_to_dict(hz.replace(small_spec, trials=1))))
    assert main(["sweep", "--config", str(tmp_path / "nope.json")]) == 2
    assert main(["sweep", "--config", str(spec), "--out",
                 str(tmp_path / "missing" / "r.csv")]) == 2


def test_cli_verify_exit_codes(tmp_path, capsys):
    assert main(["verify", "--trials", "5", "--no-kkt"]) == 0
    assert "PASS lambda_root" in capsys.readouterr().out
    # The literal update does not reach a KKT point, so the full suite fails.
    assert main(["verify", "--trials", "2", "--out", str(tmp_path / "v.json")]) == 3
    assert json.loads((tmp_path / "v.json").read_text())["n_cases"] == 2


def test_cli_config_round_trip(tmp_path):
    cfg = SystemConfig.symmetric(K=2, n=3, m_eve=2, d=1, snr_db=10.0, epsilon=1.2)
    path = tmp_path / "c.json"
    path.write_text(json.dumps(config_to_dict(cfg)))
    assert main(["run", "--config", str(path), "--max-iters", "2",
                 "--out", str(tmp_path / "t.csv")]) == 0


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "mimo_secrecy", "preset", "fig9"],
                          capture_output=True, text=True)
    assert proc.returncode == 2  # argparse rejects the choice
    proc = subprocess.run([sys.executable, "-m", "mimo_secrecy", "--help"],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and "preset" in proc.stdout
