"""Weighted partial likelihood for the proportional subdistribution hazard
model (shared numerical core).

The modified at-risk indicator of subject j at time t is 1 when T_j >= t, or
when j already failed from a competing cause (delta*_j not in {0, k}) before
t.  Combined with the IPCW weights this yields the weight matrix

    W[j, l] = w_j(t_l) * Ystar_j(t_l)

over subjects x distinct type-k event times; every likelihood, score and
information computation reduces to matrix products against W.
"""

from __future__ import annotations

import numpy as np

from .ipcw import weight_matrix
from .nonparam import censoring_survival
from .data import StepFunction


class NoEventsError(ValueError):
    """Raised when the sample contains no event of the cause of interest."""


class PSDHProblem:
    """Preprocessed likelihood pieces for one dataset and one cause."""

    def __init__(self, dataset, event=1):
        times, status = dataset.times, dataset.status
        self.event = event
        self.ev_rows = np.flatnonzero(status == event)
        if self.ev_rows.size == 0:
            raise NoEventsError("no events of type %d in the sample" % event)
        ghat = censoring_survival(dataset)
        w_all, t_all = weight_matrix(dataset, ghat)
        keep = np.isin(t_all, times[status == event])
        self.t_events = t_all[keep]
        w = w_all[:, keep]
        # Fine-Gray at-risk: still event-free, or a prior competing failure
        ystar = (times[:, None] >= self.t_events[None, :]) | (
            ((status != 0) & (status != event))[:, None]
        )
        self.W = w * ystar
        self.d = np.array(
            [np.count_nonzero((times == u) & (status == event)) for u in self.t_events],
            dtype=float,
        )
        self.X = dataset.X
        self.n = dataset.n

    def _denoms(self, eta):
        """Stable risk-set denominators: returns (r, D, shift)."""
        shift = float(np.max(eta)) if len(eta) else 0.0
        r = np.exp(eta - shift)
        return r, self.W.T @ r, shift

    def loglik(self, eta):
        """Log partial likelihood at linear predictor eta."""
        r, dens, shift = self._denoms(eta)
        if np.any(dens <= 0) or not np.all(np.isfinite(dens)):
            return -np.inf
        return float(np.sum(eta[self.ev_rows]) - self.d @ (np.log(dens) + shift))

    def score_info(self, eta, cols=None):
        """Per-coordinate score and (diagonal) observed information.

        ``cols`` restricts to a column subset of X; default all columns.
        """
        X = self.X if cols is None else self.X[:, cols]
        r, dens, _ = self._denoms(eta)
        rx = r[:, None] * X
        p1 = self.W.T @ rx / dens[:, None]
        p2 = self.W.T @ (rx * X) / dens[:, None]
        g = X[self.ev_rows].sum(axis=0) - self.d @ p1
        h = self.d @ (p2 - p1 ** 2)
        return g, h

    def score_info_block(self, eta, cols):
        """Score vector and full observed-information block over ``cols``."""
        X = self.X[:, cols]
        r, dens, _ = self._denoms(eta)
        wr = self.W * r[:, None]
        p1 = (wr.T @ X) / dens[:, None]
        g = X[self.ev_rows].sum(axis=0) - self.d @ p1
        m2 = np.einsum("jl,ja,jb->lab", wr, X, X) / dens[:, None, None]
        info = np.einsum("l,lab->ab", self.d, m2) - np.einsum(
            "l,la,lb->ab", self.d, p1, p1
        )
        return g, info

    def coord_stats(self, xj, r, dens):
        """Score and information of a single column given cached (r, D)."""
        rx = r * xj
        m1 = (self.W.T @ rx) / dens
        m2 = (self.W.T @ (rx * xj)) / dens
        g = float(xj[self.ev_rows].sum() - self.d @ m1)
        h = float(self.d @ (m2 - m1 ** 2))
        return g, h

    def breslow_baseline(self, beta):
        """Breslow-type cumulative baseline subdistribution hazard at beta."""
        eta = self.X @ beta
        r, dens, shift = self._denoms(eta)
        inc = self.d / (dens * np.exp(shift))
        return StepFunction(self.t_events, np.cumsum(inc), 0.0)
