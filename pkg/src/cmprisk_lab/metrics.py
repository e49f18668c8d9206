"""Benchmark metrics: selection accuracy, estimation error, cause-specific
concordance, IPCW time-dependent AUC, IPCW Brier score and its exact
integral over [0, t*].

All metrics refer to one cause of interest k and, where time-dependent, one
evaluation horizon t*.  Subjects whose censoring-survival weight has a zero
denominator receive weight 0 and a diagnostics counter increments.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .nonparam import censoring_survival

diagnostics = Counter()


@dataclass
class MetricsReport:
    """Per-(scenario, replicate, method) metric bundle; None = not defined."""

    tpr: Optional[float] = None
    fdr: Optional[float] = None
    betaerr: Optional[float] = None
    cindex: Optional[float] = None
    auc: Optional[float] = None
    brier: Optional[float] = None
    ibs: Optional[float] = None
    event: int = 1
    horizon: float = 10.0

    def as_dict(self):
        return {
            "tpr": self.tpr, "fdr": self.fdr, "betaerr": self.betaerr,
            "cindex": self.cindex, "auc10": self.auc, "ibs10": self.ibs,
        }


def tpr_fdr(selected, true_set, p):
    """True-positive rate and false-discovery rate of a selected index set.

    FDR is defined as 0 when nothing is selected.
    """
    selected = set(int(j) for j in selected)
    true_set = set(int(j) for j in true_set)
    if any(j < 0 or j >= p for j in selected | true_set):
        raise ValueError("index outside 0..p-1")
    tpr = len(selected & true_set) / len(true_set) if true_set else float("nan")
    fdr = len(selected - true_set) / len(selected) if selected else 0.0
    return tpr, fdr


def beta_error(beta_hat, beta_true):
    """Sum of squared coefficient errors."""
    beta_hat = np.asarray(beta_hat, dtype=float)
    beta_true = np.asarray(beta_true, dtype=float)
    if beta_hat.shape != beta_true.shape:
        raise ValueError("coefficient vectors differ in length")
    return float(np.sum((beta_hat - beta_true) ** 2))


def cindex(risks, dataset, k):
    """Cause-k concordance of risk scores (higher risk = earlier event).

    Pairs (i, j) are comparable when i fails from cause k and either
    T_j > T_i or j is not known to fail from cause k by T_i (censored or
    competing failure at T_j <= T_i).  Risk ties count one half.  Returns
    NaN when no pair is comparable.
    """
    risks = np.asarray(risks, dtype=float)
    times, status = dataset.times, dataset.status
    num = den = 0.0
    for i in np.flatnonzero(status == k):
        ok = (times > times[i]) | (status != k)
        ok[i] = False
        den += np.count_nonzero(ok)
        num += np.count_nonzero(ok & (risks[i] > risks))
        num += 0.5 * np.count_nonzero(ok & (risks[i] == risks))
    return num / den if den else float("nan")


def _case_control_weights(dataset, k, t_star, ghat):
    times, status = dataset.times, dataset.status
    cases = (times <= t_star) & (status == k)
    controls = times > t_star
    g_case = np.atleast_1d(ghat.eval_left(times))
    g_ctrl = ghat(t_star)
    w_case = np.zeros(dataset.n)
    bad = cases & (g_case <= 0)
    if np.any(bad):
        diagnostics["zero_censoring_survival"] += int(np.count_nonzero(bad))
    ok = cases & (g_case > 0)
    w_case[ok] = 1.0 / g_case[ok]
    if g_ctrl <= 0 and np.any(controls):
        diagnostics["zero_censoring_survival"] += int(np.count_nonzero(controls))
        w_ctrl = 0.0
    else:
        w_ctrl = 1.0 / g_ctrl if g_ctrl > 0 else 0.0
    return cases, controls, w_case, w_ctrl


def auc_t(risks, dataset, k, t_star, ghat=None):
    """IPCW time-dependent AUC at horizon t* for cause k.

    Cases are subjects with T <= t* and status k, weighted 1/G(T-); controls
    are subjects with T > t*, weighted 1/G(t*).  Ties count one half.
    """
    if not t_star > 0:
        raise ValueError("t_star must be > 0")
    risks = np.asarray(risks, dtype=float)
    if ghat is None:
        ghat = censoring_survival(dataset)
    cases, controls, w_case, w_ctrl = _case_control_weights(dataset, k, t_star, ghat)
    ci, cj = np.flatnonzero(cases), np.flatnonzero(controls)
    if ci.size == 0 or cj.size == 0:
        return float("nan")
    conc = (risks[ci][:, None] > risks[cj][None, :]) + 0.5 * (
        risks[ci][:, None] == risks[cj][None, :]
    )
    num = float(w_case[ci] @ conc @ (w_ctrl * np.ones(cj.size)))
    den = float(w_case[ci].sum() * w_ctrl * cj.size)
    return num / den if den > 0 else float("nan")


def _brier(pred, dataset, k, u, ghat):
    """BS(u) without the horizon-positivity guard (u = 0 is fine)."""
    times, status = dataset.times, dataset.status
    outcome = ((times <= u) & (status == k)).astype(float)
    g_left = np.atleast_1d(ghat.eval_left(times))
    g_u = ghat(u)
    w = np.zeros(dataset.n)
    ev = (times <= u) & (status != 0)
    bad = ev & (g_left <= 0)
    if np.any(bad):
        diagnostics["zero_censoring_survival"] += int(np.count_nonzero(bad))
    ok = ev & (g_left > 0)
    w[ok] = 1.0 / g_left[ok]
    late = times > u
    if np.any(late):
        if g_u > 0:
            w[late] = 1.0 / g_u
        else:
            diagnostics["zero_censoring_survival"] += int(np.count_nonzero(late))
    return float(np.mean(w * (outcome - pred) ** 2))


def brier_t(cif_at_t, dataset, k, t_star, ghat=None):
    """IPCW Brier score of predicted cause-k CIF values at horizon t*."""
    if not t_star > 0:
        raise ValueError("t_star must be > 0")
    pred = np.asarray(cif_at_t, dtype=float)
    if ghat is None:
        ghat = censoring_survival(dataset)
    return _brier(pred, dataset, k, t_star, ghat)


def ibs_t(trajectories, dataset, k, t_star, ghat=None):
    """Exact integral of the piecewise-constant Brier curve over [0, t*] / t*.

    ``trajectories`` holds one predicted cause-k CIF StepFunction per
    subject.  Breakpoints are the observed times and prediction jump times;
    between them BS(u) is constant, so the integral is a finite sum of
    BS(left endpoint) times interval length.
    """
    if not t_star > 0:
        raise ValueError("t_star must be > 0")
    if len(trajectories) != dataset.n:
        raise ValueError("need one trajectory per subject")
    if ghat is None:
        ghat = censoring_survival(dataset)
    cuts = [dataset.times] + [f.times for f in trajectories]
    grid = np.unique(np.concatenate(cuts))
    grid = grid[(grid > 0) & (grid < t_star)]
    grid = np.concatenate([[0.0], grid, [t_star]])
    total = 0.0
    for a, b in zip(grid[:-1], grid[1:]):
        pred = np.array([f(a) for f in trajectories])
        total += _brier(pred, dataset, k, a, ghat) * (b - a)
    return total / t_star
