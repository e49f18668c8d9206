"""Nonparametric estimators: Kaplan-Meier, censoring survival, Aalen-Johansen
cumulative incidence, Nelson-Aalen cause-specific hazards, and the discrete
conversions between hazard scales.

All estimators return right-continuous :class:`~cmprisk_lab.data.StepFunction`
objects with jumps only at the relevant distinct observed times.  Identities
between them (S + sum_k F_k = 1, product-form S from the total hazard) hold
exactly in the discrete product form, not the continuous exponential one.
"""

from __future__ import annotations

import numpy as np

from .data import StepFunction


class DomainError(ValueError):
    """Raised when a conversion is evaluated where it is undefined (S=0)."""


def _event_table(times, status):
    """Distinct observed times with per-time counts.

    Returns (t, counts) where counts[s] is the per-time tally of status code
    s (0 = censorings), plus the at-risk count Y at each distinct time.
    """
    times = np.asarray(times, dtype=float)
    status = np.asarray(status, dtype=int)
    t, inv = np.unique(times, return_inverse=True)
    n_times = len(t)
    per_time = np.bincount(inv, minlength=n_times)
    y = len(times) - np.cumsum(per_time) + per_time
    by_code = {}
    for s in np.unique(status):
        by_code[int(s)] = np.bincount(inv[status == s], minlength=n_times)
    return t, by_code, y


def _count(by_code, codes, n_times):
    out = np.zeros(n_times, dtype=float)
    for s in codes:
        if s in by_code:
            out += by_code[s]
    return out


def km_event_free_survival(dataset):
    """Kaplan-Meier estimate of the event-free survival S(t).

    Treats failure from any cause as the event.  With no censoring this
    collapses to the empirical proportion of times exceeding t.
    """
    t, by_code, y = _event_table(dataset.times, dataset.status)
    d = _count(by_code, [s for s in by_code if s >= 1], len(t))
    keep = d > 0
    vals = np.cumprod(1.0 - d[keep] / y[keep])
    return StepFunction(t[keep], vals, 1.0)


def censoring_survival(dataset):
    """Reverse Kaplan-Meier estimate G(t) of the censoring survival.

    Censorings play the event role.  At tied times events precede
    censorings, so the at-risk count for a censoring at t is Y(t) - d(t).
    """
    t, by_code, y = _event_table(dataset.times, dataset.status)
    d = _count(by_code, [s for s in by_code if s >= 1], len(t))
    c = _count(by_code, [0], len(t))
    keep = c > 0
    vals = np.cumprod(1.0 - c[keep] / (y[keep] - d[keep]))
    return StepFunction(t[keep], vals, 1.0)


def nelson_aalen_csh(dataset, k):
    """Nelson-Aalen cumulative cause-specific hazard for cause k."""
    if not 1 <= k <= dataset.K:
        raise ValueError("cause k=%d outside 1..%d" % (k, dataset.K))
    t, by_code, y = _event_table(dataset.times, dataset.status)
    dk = _count(by_code, [k], len(t))
    keep = dk > 0
    return StepFunction(t[keep], np.cumsum(dk[keep] / y[keep]), 0.0)


def aalen_johansen_cif(dataset, k):
    """Aalen-Johansen cumulative incidence of cause k.

    F_k(t) = sum over event times t_l <= t of S(t_{l-1}) d_k(t_l) / Y(t_l)
    with S the Kaplan-Meier estimate of event-free survival (left limit).
    """
    if not 1 <= k <= dataset.K:
        raise ValueError("cause k=%d outside 1..%d" % (k, dataset.K))
    t, by_code, y = _event_table(dataset.times, dataset.status)
    d = _count(by_code, [s for s in by_code if s >= 1], len(t))
    dk = _count(by_code, [k], len(t))
    keep = d > 0
    t, d, y, dk = t[keep], d[keep], y[keep], dk[keep]
    s = np.cumprod(1.0 - d / y)
    s_left = np.concatenate([[1.0], s[:-1]])
    inc = s_left * dk / y
    keep_k = dk > 0
    return StepFunction(t[keep_k], np.cumsum(inc)[keep_k], 0.0)


def _merged_increments(funcs):
    """Union jump grid and per-function increments on it."""
    grid = np.unique(np.concatenate([f.times for f in funcs]))
    incs = []
    for f in funcs:
        vals = np.atleast_1d(f(grid)) if grid.size else np.empty(0)
        prev = np.concatenate([[f.value_before_first], vals[:-1]])
        incs.append(vals - prev)
    return grid, incs


def cif_from_csh(h_all, k):
    """Cumulative incidence of cause k from all K cumulative CSHs.

    Discrete product-limit form: F_k(t) = sum_{t_l <= t} dH_k(t_l) S(t_{l-1})
    with S(t) = prod_{t_m <= t} (1 - sum_j dH_j(t_m)).  This is the step
    analogue of the continuous h_k e^{-H} identity and reproduces the
    Aalen-Johansen estimator exactly when fed Nelson-Aalen inputs.
    """
    if not 1 <= k <= len(h_all):
        raise ValueError("cause index k=%d outside 1..%d" % (k, len(h_all)))
    grid, incs = _merged_increments(h_all)
    for inc in incs:
        if np.any(inc < -1e-12):
            raise DomainError("cumulative hazards must be nondecreasing")
    total = np.sum(incs, axis=0) if len(incs) else np.empty(0)
    surv = np.cumprod(1.0 - total)
    surv_left = np.concatenate([[1.0], surv[:-1]])
    vals = np.cumsum(incs[k - 1] * surv_left)
    return StepFunction(grid, vals, 0.0)


def cif_from_sdh(h_sdh):
    """CIF from a cumulative subdistribution hazard: F(t) = 1 - e^{-H(t)}."""
    inc = np.diff(np.concatenate([[h_sdh.value_before_first], h_sdh.values]))
    if h_sdh.value_before_first < 0 or np.any(inc < -1e-12):
        raise DomainError("cumulative SDH must be nonnegative and nondecreasing")
    return StepFunction(h_sdh.times, 1.0 - np.exp(-h_sdh.values),
                        1.0 - np.exp(-h_sdh.value_before_first))


def csh_from_sdh_two_events(h1_sdh, f2, s):
    """Cause-1 cumulative CSH from its cumulative SDH in the K=2 case.

    Incrementwise dH1_CSH(t) = dH1_SDH(t) (1 + F2(t) / S(t)).  Requires
    S(t) > 0 at every jump time of the input.
    """
    t = h1_sdh.times
    inc = np.diff(np.concatenate([[h1_sdh.value_before_first], h1_sdh.values]))
    s_vals = np.atleast_1d(s(t))
    if np.any(s_vals <= 0):
        raise DomainError("event-free survival is 0 at a requested jump time")
    out = inc * (1.0 + np.atleast_1d(f2(t)) / s_vals)
    return StepFunction(t, np.cumsum(out), 0.0)
