"""Experiment orchestration: sweeps, convergence traces, identity checks, I/O.

A sweep evaluates every (eavesdropper antennas, SNR, trial) point of an
:class:`ExperimentSpec`. Channels are drawn with
``mix_seed(master_seed, eve_index, trial)``. The same realisation is
therefore reused across the SNR grid (only the noise level changes), which
keeps SNR trends free of channel-resampling noise. Work is split into
``(eve_index, trial)`` tasks that may run in a process pool; results are
merged by task index, so the output does not depend on scheduling.
"""
import csv
import io
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from . import mtmse as mt
from .baseline_ia import IAOptions, ia_min_leakage
from .metrics import link_metrics
from .model import (ConfigError, SystemConfig, config_from_dict,
                    config_to_dict, mix_seed, sample_channels,
                    validate_config)
from .numerics import NumericsError

__all__ = ["ALGORITHMS", "ExperimentSpec", "ExperimentResult", "run_sweep",
           "run_convergence_trace", "trace_rows", "IdentityReport",
           "run_identity_suite", "write_results", "read_results",
           "ResultsIOError", "load_spec", "spec_to_dict", "spec_from_dict",
           "PRESETS", "preset_specs"]

ALGORITHMS = ("mtmse", "ia")
PER_USER = ("rate", "eve_rate", "secrecy_rate_raw", "secrecy_rate_clamped",
            "legit_mse", "eve_mse")
KEY_COLUMNS = ("algorithm", "snr_db", "m_eve", "trial", "seed", "iterations",
               "converged")
_INIT_SALT = 0x5EED


class ResultsIOError(OSError):
    """Reading or writing a results file failed."""


@dataclass(frozen=True)
class ExperimentSpec:
    """Grid, trial count and solver controls of a sweep.

    Attributes
    ----------
    base : SystemConfig
        Scenario; its noise variances are replaced per SNR point and its
        ``m_eve`` per entry of `eve_antenna_grid`.
    snr_grid_db : tuple of float
    eve_antenna_grid : tuple of int or None
        ``None`` keeps ``base.m_eve``.
    trials : int
    master_seed : int
    algorithms : tuple of str
        Subset of ``("mtmse", "ia")``.
    max_iters, rel_tol : int, float
        Controls of the total-MSE design.
    method : str
        Precoder-update rule of the design (``"literal"`` or ``"restricted"``).
    ia_max_iters, ia_tol : int, float
        Controls of the alignment baseline.
    """
    base: SystemConfig
    snr_grid_db: tuple
    eve_antenna_grid: tuple | None = None
    trials: int = 200
    master_seed: int = 0
    algorithms: tuple = ALGORITHMS
    max_iters: int = 50
    rel_tol: float = 1e-6
    method: str = "literal"
    ia_max_iters: int = 500
    ia_tol: float = 1e-8

    def __post_init__(self):
        object.__setattr__(self, "snr_grid_db", tuple(float(x) for x in self.snr_grid_db))
        if self.eve_antenna_grid is not None:
            object.__setattr__(self, "eve_antenna_grid",
                               tuple(int(x) for x in self.eve_antenna_grid))
        object.__setattr__(self, "algorithms", tuple(self.algorithms))

    @property
    def eve_grid(self):
        if self.eve_antenna_grid is None:
            return (self.base.m_eve,)
        return self.eve_antenna_grid

    def validate(self):
        """Raise :class:`ConfigError` for an unusable spec."""
        validate_config(self.base)
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        if not self.snr_grid_db or not all(math.isfinite(x) for x in self.snr_grid_db):
            raise ConfigError("snr_grid_db must be a non-empty list of finite values")
        if not self.eve_grid or min(self.eve_grid) < 1:
            raise ConfigError("eve_antenna_grid must hold positive counts")
        if not self.algorithms or set(self.algorithms) - set(ALGORITHMS):
            raise ConfigError(f"algorithms must be a non-empty subset of {ALGORITHMS}")
        if self.method not in mt.METHODS:
            raise ConfigError(f"method must be one of {mt.METHODS}")
        if self.max_iters < 1 or self.ia_max_iters < 0:
            raise ConfigError("iteration caps must be positive")
        return self


def columns_for(K):
    """CSV column names for a `K`-user sweep."""
    cols = list(KEY_COLUMNS)
    for name in PER_USER:
        cols += [f"{name}_{k + 1}" for k in range(K)]
    cols.append("total_mse")
    return tuple(cols)


@dataclass
class ExperimentResult:
    """Rows of a sweep, one per (algorithm, SNR, eavesdropper size, trial).

    Rows are tuples ordered as :attr:`columns`.
    """
    K: int
    rows: list = field(default_factory=list)

    @property
    def columns(self):
        return columns_for(self.K)

    def as_dicts(self):
        cols = self.columns
        return [dict(zip(cols, r)) for r in self.rows]

    def column(self, name, **where):
        """Values of one column over the rows matching `where`."""
        i = self.columns.index(name)
        idx = {self.columns.index(k): v for k, v in where.items()}
        return [r[i] for r in self.rows if all(r[j] == v for j, v in idx.items())]

    def aggregate(self):
        """Means per (algorithm, snr_db, m_eve).

        Returns
        -------
        columns : tuple of str
        rows : list of tuple
            Non-finite entries (failed trials) are left out of each mean and
            counted in ``n_failed``.
        """
        cols = self.columns
        stat_cols = ("iterations", "converged") + cols[len(KEY_COLUMNS):]
        groups = {}
        for r in self.rows:
            groups.setdefault(r[:3], []).append(r)
        out_cols = ("algorithm", "snr_db", "m_eve", "n_trials", "n_failed") + stat_cols
        out = []
        for key, rows in groups.items():
            failed = sum(1 for r in rows if not math.isfinite(r[-1]))
            vals = []
            for name in stat_cols:
                i = cols.index(name)
                x = np.array([float(r[i]) for r in rows])
                x = x[np.isfinite(x)]
                vals.append(float(np.mean(x)) if x.size else math.nan)
            out.append(key + (len(rows), failed) + tuple(vals))
        return out_cols, out


def _nan_row(K):
    return (math.nan,) * (len(PER_USER) * K + 1)


def _metric_row(cfg, ch, v):
    lm = link_metrics(cfg, ch, v)
    vals = []
    for name in PER_USER:
        vals += [float(x) for x in getattr(lm, name)]
    vals.append(lm.total_mse)
    return tuple(vals)


def _run_task(spec, e_idx, trial):
    """All rows of one (eavesdropper size, trial) pair, keyed for ordering."""
    m_eve = spec.eve_grid[e_idx]
    base = replace(spec.base, m_eve=m_eve)
    seed = mix_seed(spec.master_seed, e_idx, trial)
    ch = sample_channels(base, seed)
    out = []
    if "ia" in spec.algorithms:
        try:
            ia = ia_min_leakage(base, ch, IAOptions(max_iters=spec.ia_max_iters,
                                                    tol=spec.ia_tol))
            ia_info = (ia.iteration, ia.iteration < spec.ia_max_iters or ia.leakage == 0.0)
        except (NumericsError, np.linalg.LinAlgError):
            ia = None
    for s_idx, snr in enumerate(spec.snr_grid_db):
        cfg = base.with_snr(snr)
        for a_idx, alg in enumerate(spec.algorithms):
            key = (alg, snr, m_eve, trial, seed)
            if alg == "mtmse":
                opts = mt.MTMSEOptions(max_iters=spec.max_iters, rel_tol=spec.rel_tol,
                                       seed=mix_seed(seed, _INIT_SALT), method=spec.method)
                try:
                    state, trace = mt.run_mtmse(cfg, ch, opts)
                    row = key + (trace.iterations, trace.converged) + _metric_row(cfg, ch, state.v)
                except (NumericsError, np.linalg.LinAlgError, ValueError):
                    row = key + (-1, False) + _nan_row(cfg.K)
            else:
                if ia is None:
                    row = key + (-1, False) + _nan_row(cfg.K)
                else:
                    row = key + ia_info + _metric_row(cfg, ch, ia.v)
            out.append(((a_idx, s_idx, e_idx, trial), row))
    return out


def _run_task_star(args):
    return _run_task(*args)


def run_sweep(spec, jobs=1):
    """Evaluate every grid point and trial of `spec`.

    Parameters
    ----------
    spec : ExperimentSpec
    jobs : int
        Worker processes; 1 runs serially. The output is identical for
        any value.

    Returns
    -------
    ExperimentResult
        Rows ordered by algorithm, SNR, eavesdropper size and trial.
    """
    spec.validate()
    tasks = [(spec, e, t) for e in range(len(spec.eve_grid)) for t in range(spec.trials)]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            parts = list(pool.map(_run_task_star, tasks, chunksize=max(1, len(tasks) // (4 * jobs))))
    else:
        parts = [_run_task_star(t) for t in tasks]
    keyed = [item for part in parts for item in part]
    keyed.sort(key=lambda kv: kv[0])
    return ExperimentResult(K=spec.base.K, rows=[row for _, row in keyed])


def run_convergence_trace(cfg, snr_db=25.0, seed=0, opts=None):
    """Trace of the total-MSE design on one channel realisation.

    The channel is drawn from `seed` and the initial precoders from
    ``mix_seed(seed, 0x5EED)``, matching :func:`run_sweep`.

    Returns
    -------
    state : mtmse.TransceiverState
    trace : mtmse.IterationTrace
    """
    cfg = validate_config(cfg).with_snr(snr_db)
    ch = sample_channels(cfg, seed)
    opts = mt.MTMSEOptions() if opts is None else opts
    opts = replace(opts, seed=mix_seed(seed, _INIT_SALT))
    return mt.run_mtmse(cfg, ch, opts)


def trace_rows(trace):
    """Flatten an iteration trace into ``(columns, rows)``."""
    K = len(trace.records[0].user_mse)
    cols = ["iteration", "total_mse"]
    for name in ("user_mse", "eve_mse", "lam", "mu", "power"):
        cols += [f"{name}_{k + 1}" for k in range(K)]
    rows = []
    for r in trace.records:
        rows.append((r.iteration, r.total_mse) + r.user_mse + r.eve_mse
                    + r.lam + r.mu + r.power)
    return tuple(cols), rows


@dataclass
class IdentityReport:
    """Pass counts and worst residuals of the identity suite.

    ``checks`` maps a check name to a dict with ``passed``, ``total``,
    ``worst`` and ``tol``.
    """
    seed: int
    n_cases: int
    checks: dict = field(default_factory=dict)

    @property
    def passed(self):
        return all(c["passed"] == c["total"] for c in self.checks.values())

    def lines(self):
        out = []
        for name, c in self.checks.items():
            state = "PASS" if c["passed"] == c["total"] else "FAIL"
            out.append(f"{state} {name}: {c['passed']}/{c['total']} "
                       f"(worst {c['worst']:.3e}, tol {c['tol']:.0e})")
        return out


def _random_instance(rng_seed, idx):
    """Random symmetric scenario with random full-power precoders."""
    rng = np.random.default_rng(mix_seed(rng_seed, idx))
    K = int(rng.integers(2, 4))
    n = int(rng.integers(2, 6))
    d = int(rng.integers(1, n + 1))
    d = min(d, 3)
    cfg = SystemConfig.symmetric(K=K, n=n, m_eve=int(rng.integers(1, 8)), d=d,
                                 p=float(rng.uniform(0.5, 2.0)),
                                 snr_db=float(rng.uniform(0, 30)), epsilon=1.5)
    ch = sample_channels(cfg, mix_seed(rng_seed, idx, 1))
    state = mt.initial_state(cfg, ch, mix_seed(rng_seed, idx, 2))
    return cfg, ch, state, rng


def _check(report, name, tol, errs):
    errs = np.asarray(errs, dtype=float)
    ok = np.isfinite(errs) & (errs <= tol)
    report.checks[name] = {"passed": int(ok.sum()), "total": int(errs.size),
                           "worst": float(np.nanmax(errs)) if errs.size else 0.0,
                           "tol": tol}


def run_identity_suite(seed=0, n_cases=100, kkt=True, method="literal",
                       max_iters=200):
    """Check the multiplier closed forms against direct matrix evaluation.

    Checks
    ------
    lambda_root
        The power multiplier, substituted into ``(Psi + lam I)^{-1} Theta``,
        reproduces the power budget within ``1e-8`` relative.
    eve_closed_form
        The rational eavesdropper-MSE formula matches direct evaluation of
        the candidate precoder within ``1e-6`` relative at 5 values of
        ``mu`` in ``[0, 0.95 / Lambda_max)``.
    kkt
        After :func:`mtmse.run_mtmse` on a random instance of the
        three-user 4x4 scenario with a 6-antenna eavesdropper, the run
        converged and every first-order condition holds (see
        :func:`kkt_passes`).

    Parameters
    ----------
    seed : int
    n_cases : int
        Instances per check, at least 1.
    kkt : bool
        Include the (slow) third check.
    method : str
        Update rule used for the third check.
    max_iters : int
        Iteration cap for the third check.

    Returns
    -------
    IdentityReport
    """
    if n_cases < 1:
        raise ValueError("n_cases must be >= 1")
    report = IdentityReport(seed=seed, n_cases=n_cases)
    lam_err, eve_err = [], []
    for i in range(n_cases):
        cfg, ch, st, rng = _random_instance(seed, i)
        k = int(rng.integers(cfg.K))
        mu = float(rng.exponential(0.5))
        ws = mt.build_workspace_a(cfg, ch, st.u, st.u_e, mu, k)
        p = cfg.p[k]
        if mt.solve_lambda_hat(ws, p) is None:
            lb = mt.lambda_floor(ws)
            p = float(rng.uniform(0.1, 0.9)) * float(np.sum(ws.weights / (lb + ws.eig.values) ** 2))
        lam = mt.solve_lambda_hat(ws, p)
        v = np.linalg.solve(ws.psi + lam * np.eye(ws.psi.shape[0]), ws.theta)
        lam_err.append(abs(np.linalg.norm(v) ** 2 - p) / p)

        wsb = mt.build_workspace_b(cfg, ch, st.u, st.u_e, st.v,
                                   float(rng.exponential(0.5)), k)
        top = wsb.poles[0] if wsb.poles.size else 10.0
        worst = 0.0
        for mu in rng.uniform(0, 0.95 * top, size=5):
            closed = mt.eve_mse_closed_form_mu(wsb, mu, cfg.d[k])
            direct = mt.eve_mse_direct_mu(wsb, mu)
            worst = max(worst, abs(closed - direct) / abs(direct))
        eve_err.append(worst)
    _check(report, "lambda_root", 1e-8, lam_err)
    _check(report, "eve_closed_form", 1e-6, eve_err)
    if kkt:
        fails = []
        base = SystemConfig.symmetric(K=3, n=4, m_eve=6, d=2, epsilon=1.5)
        for i in range(n_cases):
            rng = np.random.default_rng(mix_seed(seed, i, 3))
            cfg = base.with_snr(float(rng.uniform(0, 30)))
            ch = sample_channels(cfg, mix_seed(seed, i, 4))
            opts = mt.MTMSEOptions(max_iters=max_iters, method=method,
                                   seed=mix_seed(seed, i, 5))
            state, trace = mt.run_mtmse(cfg, ch, opts)
            fails.append(kkt_worst(cfg, ch, state, trace))
        _check(report, "kkt", 1.0, fails)
    return report


KKT_TOL = {"power": 1e-6, "eve_gap": 1e-3, "slack_power": 1e-4,
           "slack_eve": 1e-4, "stationarity": 1e-6}


def kkt_worst(cfg, ch, state, trace):
    """Largest KKT figure divided by its tolerance (``inf`` if not converged).

    A value at most 1 means all conditions hold.
    """
    if not trace.converged:
        return math.inf
    worst = 0.0
    for rec in mt.kkt_report(cfg, ch, state):
        if rec["lam"] < 0 or rec["mu"] < 0:
            return math.inf
        for key, tol in KKT_TOL.items():
            worst = max(worst, rec[key] / tol)
    return worst


def kkt_passes(cfg, ch, state, trace):
    """True when the run converged and all first-order conditions hold."""
    return kkt_worst(cfg, ch, state, trace) <= 1.0


def _fmt(x):
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, float):
        return repr(x)
    return str(x)


def _parse(name, text):
    if name == "algorithm":
        return text
    if name == "converged":
        return text == "true"
    if name in ("trial", "seed", "iterations", "m_eve"):
        return int(text)
    return float(text)


def agg_path(path):
    """Aggregate file name: ``x.csv`` becomes ``x.agg.csv``."""
    root, ext = os.path.splitext(str(path))
    if ext.lower() in (".csv", ".json"):
        return root + ".agg.csv"
    return str(path) + ".agg.csv"


def _csv_text(columns, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_fmt(x) for x in r])
    return buf.getvalue()


def _write_text(path, text):
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise ResultsIOError(f"cannot write {path}: {exc.strerror or exc}") from exc


def write_results(res, path, format="csv"):
    """Persist a sweep result.

    ``"csv"`` writes the rows to `path` and the per-point means to
    :func:`agg_path` of it. ``"structured"`` writes one JSON document that
    nests trials and means under each grid point. Floats are written with
    ``repr`` so re-reading is exact.

    Raises
    ------
    ResultsIOError
        When the file cannot be written.
    """
    if format == "csv":
        _write_text(path, _csv_text(res.columns, res.rows))
        acols, arows = res.aggregate()
        _write_text(agg_path(path), _csv_text(acols, arows))
    elif format == "structured":
        cols = res.columns
        acols, arows = res.aggregate()
        means = {r[:3]: dict(zip(acols[3:], r[3:])) for r in arows}
        points = {}
        for r in res.rows:
            points.setdefault(r[:3], []).append(dict(zip(cols[3:], r[3:])))
        doc = {"K": res.K, "columns": list(cols), "points": [
            {"algorithm": key[0], "snr_db": key[1], "m_eve": key[2],
             "mean": means[key], "trials": trials}
            for key, trials in points.items()]}
        _write_text(path, json.dumps(doc, indent=1) + "\n")
    else:
        raise ValueError(f"unknown format {format!r}")


def read_results(path):
    """Inverse of :func:`write_results` for either format.

    Raises
    ------
    ResultsIOError
        When the file cannot be read or parsed.
    """
    try:
        with open(path, encoding="utf-8", newline="") as fh:
            text = fh.read()
    except OSError as exc:
        raise ResultsIOError(f"cannot read {path}: {exc.strerror or exc}") from exc
    if text.lstrip().startswith("{"):
        doc = json.loads(text)
        cols = doc["columns"]
        rows = []
        for pt in doc["points"]:
            for t in pt["trials"]:
                rows.append((pt["algorithm"], pt["snr_db"], pt["m_eve"])
                            + tuple(t[c] for c in cols[3:]))
        return ExperimentResult(K=doc["K"], rows=rows)
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise ResultsIOError(f"{path}: empty file") from None
    K = sum(1 for c in header if c.startswith("rate_"))
    if tuple(header) != columns_for(K):
        raise ResultsIOError(f"{path}: unexpected header")
    rows = [tuple(_parse(n, x) for n, x in zip(header, line)) for line in reader]
    return ExperimentResult(K=K, rows=rows)


def spec_to_dict(spec):
    """JSON-ready form of an :class:`ExperimentSpec`."""
    out = asdict(spec)
    out["base"] = config_to_dict(spec.base)
    for key in ("snr_grid_db", "eve_antenna_grid", "algorithms"):
        if out[key] is not None:
            out[key] = list(out[key])
    return out


def spec_from_dict(data):
    """Build and validate an :class:`ExperimentSpec` from a mapping."""
    if "base" not in data or "snr_grid_db" not in data:
        raise ConfigError("spec needs 'base' and 'snr_grid_db'")
    kw = dict(data)
    base = kw.pop("base")
    if isinstance(base, str) and base in _BASES:
        base = _BASES[base]
    else:
        base = dict(base)
        base.setdefault("sigma2_rx", 1.0)
        base.setdefault("sigma2_eve", 1.0)
        base = config_from_dict(base)
    known = set(ExperimentSpec.__dataclass_fields__) - {"base"}
    unknown = set(kw) - known
    if unknown:
        raise ConfigError(f"unknown spec fields {sorted(unknown)}")
    try:
        spec = ExperimentSpec(base=base, **kw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad spec value: {exc}") from None
    return spec.validate()


def load_spec(path):
    """Read an :class:`ExperimentSpec` from JSON."""
    with open(path, encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: expected a JSON object")
    return spec_from_dict(data)


_SNR_GRID = (0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0)
_BASES = {
    "M4": SystemConfig.symmetric(K=3, n=4, m_eve=6, d=2, epsilon=1.5),
    "M5": SystemConfig.symmetric(K=3, n=5, m_eve=6, d=2, epsilon=1.5),
    "M2": SystemConfig.symmetric(K=3, n=2, m_eve=2, d=1, epsilon=1.5),
}


def _fig5():
    return [("M2", ExperimentSpec(base=_BASES["M2"], snr_grid_db=(10.0,),
                                  eve_antenna_grid=tuple(range(1, 9)))),
            ("M4", ExperimentSpec(base=_BASES["M4"], snr_grid_db=(10.0,),
                                  eve_antenna_grid=tuple(range(2, 15))))]


PRESETS = {
    "fig2": lambda: [
        ("M4_Me6", ExperimentSpec(base=_BASES["M4"], snr_grid_db=(25.0,),
                                  eve_antenna_grid=(6,), algorithms=("mtmse",))),
        ("M4_Me4", ExperimentSpec(base=_BASES["M4"], snr_grid_db=(25.0,),
                                  eve_antenna_grid=(4,), algorithms=("mtmse",))),
        ("M5_Me6", ExperimentSpec(base=_BASES["M5"], snr_grid_db=(25.0,),
                                  eve_antenna_grid=(6,), algorithms=("mtmse",)))],
    "fig3": lambda: [("", ExperimentSpec(base=_BASES["M4"], snr_grid_db=_SNR_GRID,
                                         eve_antenna_grid=(6,)))],
    "fig4": lambda: [("", ExperimentSpec(base=_BASES["M4"], snr_grid_db=_SNR_GRID,
                                         eve_antenna_grid=(4, 5)))],
    "fig5": _fig5,
    "fig6": _fig5,
}


def preset_specs(name, trials=None, master_seed=None, method=None):
    """Labelled specs of a named figure preset.

    Returns
    -------
    list of (str, ExperimentSpec)
        Labels distinguish the antenna configurations of multi-part presets
        and are empty otherwise.
    """
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}")
    out = []
    for label, spec in PRESETS[name]():
        changes = {}
        if trials is not None:
            changes["trials"] = trials
        if master_seed is not None:
            changes["master_seed"] = master_seed
        if method is not None:
            changes["method"] = method
        out.append((label, replace(spec, **changes)))
    return out
