"""Inverse-probability-of-censoring weights.

The weight of subject i at time t is

    w_i(t) = I(C_i >= min(T_i, t)) * G(t) / G(min(T_i, t))

with G the reverse-KM censoring survival.  The indicator is operationalized
from observables: it is 1 when the subject is uncensored, or censored with
T_i >= t.  G is evaluated left-continuously at event times so a subject's own
censoring drop never enters its own weight, and w_i(t) = 1 whenever t <= T_i.
"""

from __future__ import annotations

from collections import Counter

import numpy as np

from .nonparam import censoring_survival

# zero-denominator guard hits; advisory only, never fatal
diagnostics = Counter()


def ipcw_weight(dataset, ghat, i, t):
    """Weight of subject i at time t given the censoring survival ghat."""
    t_i = float(dataset.times[i])
    if t_i >= t:
        return 1.0
    if dataset.status[i] == 0:
        return 0.0
    den = ghat.eval_left(t_i)
    if den <= 0.0:
        diagnostics["zero_censoring_survival"] += 1
        return 0.0
    return ghat.eval_left(t) / den


def weight_matrix(dataset, ghat=None):
    """w_i(t_l) over subjects x distinct event times (any cause).

    Rows are subjects, columns the sorted distinct times with at least one
    event.  Column times are returned alongside the matrix.
    """
    if ghat is None:
        ghat = censoring_survival(dataset)
    ev_times = np.unique(dataset.times[dataset.status >= 1])
    n, L = dataset.n, len(ev_times)
    if L == 0:
        return np.zeros((n, 0)), ev_times
    g_num = np.atleast_1d(ghat.eval_left(ev_times))
    g_den = np.atleast_1d(ghat.eval_left(dataset.times))
    at_risk = dataset.times[:, None] >= ev_times[None, :]
    censored = (dataset.status == 0)[:, None]
    zero_den = g_den <= 0.0
    if np.any(zero_den & (dataset.status >= 1)):
        diagnostics["zero_censoring_survival"] += int(
            np.count_nonzero(zero_den & (dataset.status >= 1))
        )
    safe_den = np.where(zero_den, 1.0, g_den)
    ratio = np.where(zero_den[:, None], 0.0, g_num[None, :] / safe_den[:, None])
    w = np.where(at_risk, 1.0, np.where(censored, 0.0, ratio))
    return w, ev_times
