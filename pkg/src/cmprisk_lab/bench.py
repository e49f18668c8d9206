"""Benchmark harness: config-driven simulation grid, aggregation, and
single-dataset fits.

The grid runner generates one dataset per (cell, replicate), fits each
configured method, computes the metric battery at the horizon and appends
one row per (cell, replicate, method) to a versioned results CSV.  Failed
fits are recorded, not fatal.  Runs are deterministic: every random stream
is derived from (seed, cell index, replicate, method), results are sorted
before writing, and wall-clock timing is opt-in so repeated runs are
byte-identical.
"""

from __future__ import annotations

import csv
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import boosting, deephit, forest, metrics, penalized, simulate
from .data import StepFunction, load_csv
from .psdh import PSDHProblem

RESULTS_HEADER = "# cmprisk-lab results v1"
SUMMARY_HEADER = "# cmprisk-lab summary v1"
RESULT_COLUMNS = ("scenario", "n", "p", "cortype", "r", "r_b", "model",
                  "replicate", "method", "status", "tpr", "fdr", "betaerr",
                  "cindex", "auc10", "ibs10", "wall_seconds")
METHODS = ("lasso", "scad", "mcp", "coxboost", "rforest", "deephit")
METRIC_COLUMNS = ("tpr", "fdr", "betaerr", "cindex", "auc10", "ibs10")


class ConfigError(ValueError):
    """Malformed bench config; the message names the offending line."""


@dataclass
class BenchConfig:
    methods: list
    cells: list                    # list of dicts with cell parameters
    seed: int = 0
    replicates: int = 1
    horizon: float = 10.0


_CELL_KEYS = {"n", "p", "cortype", "r", "r_b", "model", "replicates", "seed"}
_INT_KEYS = {"n", "p", "replicates", "seed"}
_FLOAT_KEYS = {"r", "r_b", "horizon"}


def _coerce(key, raw, lineno):
    try:
        if key in _INT_KEYS:
            return int(raw)
        if key in _FLOAT_KEYS:
            return float(raw)
    except ValueError:
        raise ConfigError("line %d: cannot parse %s=%r" % (lineno, key, raw)) from None
    return raw


def parse_config(path):
    """Parse the flat key/value bench config with repeated [cell] blocks."""
    globals_, cells, current = {}, [], None
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            text = line.split("#", 1)[0].strip()
            if not text:
                continue
            if text == "[cell]":
                current = {}
                cells.append((lineno, current))
                continue
            if text.startswith("["):
                raise ConfigError("line %d: unknown section %r" % (lineno, text))
            if "=" not in text:
                raise ConfigError("line %d: expected key = value" % lineno)
            key, raw = (s.strip() for s in text.split("=", 1))
            if current is None:
                if key == "methods":
                    globals_["methods"] = [m.strip() for m in raw.split(",") if m.strip()]
                elif key in ("seed", "replicates", "horizon"):
                    globals_[key] = _coerce(key, raw, lineno)
                else:
                    raise ConfigError("line %d: unknown global key %r" % (lineno, key))
            else:
                if key not in _CELL_KEYS:
                    raise ConfigError("line %d: unknown cell key %r" % (lineno, key))
                current[key] = _coerce(key, raw, lineno)
    methods = globals_.get("methods")
    if not methods:
        raise ConfigError("%s: no methods declared" % path)
    bad = [m for m in methods if m not in METHODS]
    if bad:
        raise ConfigError("unknown methods %s (choose from %s)" % (bad, list(METHODS)))
    if not cells:
        raise ConfigError("%s: no [cell] blocks" % path)
    out_cells = []
    for lineno, cell in cells:
        for req in ("n", "p"):
            if req not in cell:
                raise ConfigError("line %d: [cell] is missing %r" % (lineno, req))
        out_cells.append(cell)
    return BenchConfig(methods, out_cells, globals_.get("seed", 0),
                       globals_.get("replicates", 1),
                       globals_.get("horizon", 10.0))


def _derived_seed(*parts):
    return int(np.random.SeedSequence(list(parts)).generate_state(1)[0])


def _cell_spec(cell, base_seed, cell_idx, replicate):
    seed = _derived_seed(cell.get("seed", base_seed), cell_idx, replicate)
    return simulate.ScenarioSpec(
        n=cell["n"], p=cell["p"], cortype=cell.get("cortype", "independent"),
        r=cell.get("r", 0.0), r_b=cell.get("r_b", 0.0),
        model=cell.get("model", "linear"), seed=seed)


def _psdh_trajectories(dataset, beta, horizon):
    """Per-subject cause-1 CIF from a PSDH fit via the Breslow baseline."""
    prob = PSDHProblem(dataset)
    base = prob.breslow_baseline(beta)
    eta = dataset.X @ beta
    risks = 1.0 - np.exp(-base(horizon) * np.exp(eta))
    trajectories = [
        StepFunction(base.times, 1.0 - np.exp(-base.values * np.exp(e)), 0.0)
        for e in eta
    ]
    return risks, trajectories


def fit_method(method, dataset, horizon=10.0, seed=0, cv_steps=False):
    """Fit one method; returns selection, coefficients and predictions.

    The returned dict has keys: selected (tuple or None), beta (array or
    None), risks (cause-1 CIF at the horizon), trajectories (StepFunction
    per evaluated subject), eval_idx (rows the predictions refer to), and
    extra (method-specific artifacts for reports).  ``cv_steps`` switches
    coxboost to a cross-validated step count (the external-data workflow).
    """
    n = dataset.n
    if method in ("lasso", "scad", "mcp"):
        path = penalized.fit_path(dataset, method)
        best = penalized.select_bic(path)
        risks, traj = _psdh_trajectories(dataset, best.beta, horizon)
        return {"selected": best.selected, "beta": best.beta, "risks": risks,
                "trajectories": traj, "eval_idx": np.arange(n),
                "extra": {"fit": best, "path": path}}
    if method == "coxboost":
        config = boosting.BoostConfig()
        if cv_steps:
            steps = boosting.choose_steps_cv(dataset, config, seed=seed)
            config = boosting.BoostConfig(steps=steps)
        trace = boosting.boost_fit(dataset, config)
        selected = tuple(int(j) for j in np.flatnonzero(trace.beta != 0.0))
        risks, traj = _psdh_trajectories(dataset, trace.beta, horizon)
        return {"selected": selected, "beta": trace.beta, "risks": risks,
                "trajectories": traj, "eval_idx": np.arange(n),
                "extra": {"trace": trace}}
    if method == "rforest":
        config = forest.ForestConfig(seed=seed)
        fr = forest.fit_forest(dataset, config)
        vimp = forest.variable_importance(fr, dataset, horizon=horizon)
        depths = forest.minimal_depth(fr)
        selected = forest.select_variables(vimp, depths)
        traj = [forest.predict_cif(fr, dataset.X[i], 1) for i in range(n)]
        risks = np.array([f(horizon) for f in traj])
        return {"selected": selected, "beta": None, "risks": risks,
                "trajectories": traj, "eval_idx": np.arange(n),
                "extra": {"forest": fr, "vimp": vimp, "depths": depths}}
    if method == "deephit":
        binned = deephit.discretize(dataset, 50)
        cfg = deephit.NetConfig(seed=seed)
        res = deephit.train(binned, cfg)
        traj = [StepFunction(res.edges, res.test_cif[i, 0], 0.0)
                for i in range(len(res.test_idx))]
        # the horizon maps to its containing bin (inclusive of that bin's mass)
        b = min(int(np.searchsorted(res.edges, horizon, side="left")),
                len(res.edges) - 1)
        risks = res.test_cif[:, 0, b].copy()
        return {"selected": None, "beta": None, "risks": risks,
                "trajectories": traj, "eval_idx": res.test_idx,
                "extra": {"result": res}}
    raise ValueError("unknown method %r" % (method,))


def _evaluate(method, dataset, fitted, horizon):
    report = metrics.MetricsReport(event=1, horizon=horizon)
    if fitted["selected"] is not None and dataset.p >= 12:
        report.tpr, report.fdr = metrics.tpr_fdr(
            fitted["selected"], simulate.TRUE_SET, dataset.p)
    if fitted["beta"] is not None:
        truth = np.concatenate([simulate.DEFAULT_EFFECTS.beta1,
                                np.zeros(dataset.p - 12)])
        report.betaerr = metrics.beta_error(fitted["beta"], truth)
    ds_eval = dataset.subset(fitted["eval_idx"])
    if ds_eval.n:
        report.cindex = metrics.cindex(fitted["risks"], ds_eval, 1)
        report.auc = metrics.auc_t(fitted["risks"], ds_eval, 1, horizon)
        report.ibs = metrics.ibs_t(fitted["trajectories"], ds_eval, 1, horizon)
    return report


def run_task(cell, cell_idx, replicate, method, method_idx, base_seed,
             horizon, timing):
    """One (cell, replicate, method) work item; exceptions become a row."""
    spec = _cell_spec(cell, base_seed, cell_idx, replicate)
    dataset = simulate.generate(spec)
    mseed = _derived_seed(cell.get("seed", base_seed), cell_idx, replicate,
                          method_idx)
    row = {"scenario": spec.cell_id, "n": spec.n, "p": spec.p,
           "cortype": spec.cortype, "r": "%g" % spec.r, "r_b": "%g" % spec.r_b,
           "model": spec.model, "replicate": replicate, "method": method,
           "status": "ok", "wall_seconds": "0.000",
           "_sort": (cell_idx, replicate, method_idx)}
    start = time.perf_counter()
    try:
        fitted = fit_method(method, dataset, horizon, mseed)
        report = _evaluate(method, dataset, fitted, horizon)
        vals = report.as_dict()
    except Exception as exc:  # failed fits are recorded, not fatal
        row["status"] = "failed:%s" % type(exc).__name__
        vals = {}
    if timing:
        row["wall_seconds"] = "%.3f" % (time.perf_counter() - start)
    for col in METRIC_COLUMNS:
        v = vals.get(col)
        row[col] = "" if v is None or not np.isfinite(v) else "%.6f" % v
    return row


def _task_star(args):
    return run_task(*args)


def run_grid(config, jobs=1, timing=False):
    """Run the whole grid; returns rows sorted by (cell, replicate, method)."""
    tasks = []
    for cell_idx, cell in enumerate(config.cells):
        reps = cell.get("replicates", config.replicates)
        for replicate in range(1, reps + 1):
            for method_idx, method in enumerate(config.methods):
                tasks.append((cell, cell_idx, replicate, method, method_idx,
                              config.seed, config.horizon, timing))
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_task_star, tasks))
    else:
        rows = [run_task(*t) for t in tasks]
    rows.sort(key=lambda r: r.pop("_sort"))
    return rows


def write_results(rows, path):
    with open(path, "w", newline="") as fh:
        fh.write(RESULTS_HEADER + "\n")
        w = csv.DictWriter(fh, fieldnames=RESULT_COLUMNS, extrasaction="ignore")
        w.writeheader()
        for row in rows:
            row = dict(row)
            row.pop("_sort", None)
            w.writerow(row)


def aggregate(in_path, by, out_path):
    """Group-by means and Monte-Carlo standard errors, skipping failed rows."""
    import pandas as pd

    frame = pd.read_csv(in_path, comment="#")
    missing = [c for c in by if c not in frame.columns]
    if missing:
        raise ConfigError("unknown group keys %s" % missing)
    ok = frame[frame["status"] == "ok"]
    if len(ok) == 0:
        raise ConfigError("%s: no successful rows to aggregate" % in_path)
    present = [m for m in METRIC_COLUMNS if m in ok.columns]
    grouped = ok.groupby(list(by), dropna=False)
    out = grouped.size().rename("rows").reset_index()
    for m in present:
        agg = grouped[m].agg(["mean", "std", "count"]).reset_index()
        se = agg["std"] / np.sqrt(agg["count"])
        out["%s_mean" % m] = agg["mean"].round(6)
        out["%s_se" % m] = se.round(6)
    out = out.sort_values(list(by)).reset_index(drop=True)
    with open(out_path, "w", newline="") as fh:
        fh.write(SUMMARY_HEADER + "\n")
        out.to_csv(fh, index=False, float_format="%.6f")
    return out


def write_trajectories(path, subject_ids, trajectories, cause=1):
    """Per-subject CIF trajectories as (subject, cause, time, cif) rows."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["subject", "cause", "time", "cif"])
        for sid, f in zip(subject_ids, trajectories):
            for t, v in zip(f.times, f.values):
                w.writerow([sid, cause, repr(float(t)), "%.10g" % v])


def write_selected(path, names, effects, order_by_abs=True):
    """Selected-variables table sorted by |effect| descending."""
    rows = sorted(zip(names, effects), key=lambda nv: -abs(nv[1])) \
        if order_by_abs else list(zip(names, effects))
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["variable", "effect"])
        for name, val in rows:
            w.writerow([name, "%.10g" % val])


def run_external(data_path, method, out_dir, horizon=10.0, seed=0,
                 schema=None, figures=True):
    """Fit one method on a CSV dataset and write its report files.

    Writes predictions.csv (CIF trajectories), a method-appropriate
    selection table, and (by default) a CIF trajectory figure next to them.
    """
    import os

    dataset = load_csv(data_path, schema)
    os.makedirs(out_dir, exist_ok=True)
    fitted = fit_method(method, dataset, horizon, seed, cv_steps=True)
    ids = [int(i) + 1 for i in fitted["eval_idx"]]
    pred_path = os.path.join(out_dir, "predictions.csv")
    if method == "deephit":
        res = fitted["extra"]["result"]
        deephit.write_cif_csv(pred_path, ids, res.test_cif, res.edges)
    else:
        write_trajectories(pred_path, ids, fitted["trajectories"])
    names = dataset.covariate_names
    if method in ("lasso", "scad", "mcp"):
        best = fitted["extra"]["fit"]
        sel = [(names[j], best.beta[j]) for j in best.selected]
        write_selected(os.path.join(out_dir, "selected.csv"),
                       [s[0] for s in sel], [s[1] for s in sel])
        with open(os.path.join(out_dir, "fit_summary.csv"), "w") as fh:
            fh.write("method,lambda,bic,nonzero,beta\n")
            fh.write(best.csv_row(method) + "\n")
    elif method == "coxboost":
        trace = fitted["extra"]["trace"]
        trace.to_csv(os.path.join(out_dir, "boost_trace.csv"))
        sel = [(names[j], trace.beta[j]) for j in fitted["selected"]]
        write_selected(os.path.join(out_dir, "selected.csv"),
                       [s[0] for s in sel], [s[1] for s in sel])
    elif method == "rforest":
        extra = fitted["extra"]
        with open(os.path.join(out_dir, "variables.csv"), "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["variable", "vimp", "min_depth", "selected"])
            chosen = set(fitted["selected"])
            for j, name in enumerate(names):
                w.writerow([name, "%.10g" % extra["vimp"][j],
                            "%.10g" % extra["depths"][j], int(j in chosen)])
    if figures:
        from .report import save_cif_figure

        save_cif_figure(fitted["trajectories"][:20], horizon,
                        os.path.join(out_dir, "cif_trajectories.png"))
    return fitted
