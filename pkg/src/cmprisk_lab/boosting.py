"""Componentwise likelihood boosting for the PSDH model.

Each step first refreshes any mandatory covariates by one Newton-Raphson
step on the weighted partial likelihood, then scores every optional
covariate through a one-dimensional ridge-penalized model around the current
linear predictor: gamma_hat_j = U_j(0) / (I_j(0) + lam) with score statistic
U_j(0)^2 / (I_j(0) + lam).  Only the best-scoring coordinate is updated.
The default ridge level is 9x the number of type-1 events; an optional
linear scheme lam_m = lam * (1 + c (m-1)) grows it over steps (c = 0 keeps
it constant).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .psdh import PSDHProblem, NoEventsError

_LL_SLACK = 1e-9


@dataclass(frozen=True)
class BoostConfig:
    """Boosting controls: steps, ridge level, mandatory set, step scheme.

    ``lam=None`` selects the 9 * (#type-1 events) default; pass 0.0 for a
    genuinely unpenalized score step.  The optional set is the complement
    of ``mandatory``.
    """

    steps: int = 100
    lam: float = None
    mandatory: tuple = ()
    scheme_c: float = 0.0     # lam_m = lam * (1 + scheme_c * (m - 1))
    event: int = 1


@dataclass
class BoostTrace:
    """Per-step record of a boosting run."""

    beta: np.ndarray
    beta_by_step: list
    selected_by_step: list
    loglik_by_step: list
    lam: float

    def to_csv(self, path):
        """Tidy (section, index, value) rows: step selections, final beta."""
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["section", "index", "value"])
            for m, j in enumerate(self.selected_by_step, start=1):
                w.writerow(["selected", m, j])
            for j, b in enumerate(self.beta):
                w.writerow(["beta", j, repr(float(b))])


def candidate_score(dataset, offset, j, lam, event=1):
    """(gamma_hat, score_stat) for covariate j around the offset.

    gamma_hat = U(0) / (I(0) + lam) and score_stat = U(0)^2 / (I(0) + lam)
    from the ridge-penalized one-parameter likelihood.  Raises on degenerate
    penalized information (impossible for lam > 0).
    """
    prob = PSDHProblem(dataset, event=event)
    offset = np.asarray(offset, dtype=float)
    r = np.exp(offset - offset.max())
    dens = prob.W.T @ r
    g, h = prob.coord_stats(dataset.X[:, j], r, dens)
    ipen = h + lam
    if ipen <= 0:
        raise RuntimeError("degenerate penalized information for covariate %d" % j)
    return g / ipen, g * g / ipen


def _mandatory_newton(prob, beta, eta, mand, ll):
    """One (halved if needed) Newton step on the mandatory block."""
    mand = list(mand)
    g, info = prob.score_info_block(eta, mand)
    info = info + 1e-8 * np.eye(len(mand))
    try:
        delta = np.linalg.solve(info, g)
    except np.linalg.LinAlgError:
        return beta, eta, ll
    for _ in range(40):
        beta_try = beta.copy()
        beta_try[mand] += delta
        eta_try = eta + prob.X[:, mand] @ delta
        ll_try = prob.loglik(eta_try)
        if ll_try >= ll - _LL_SLACK * (1.0 + abs(ll)):
            return beta_try, eta_try, ll_try
        delta = 0.5 * delta
    return beta, eta, ll


def boost_fit(dataset, config=None):
    """Run the boosting loop; the training likelihood must never decrease."""
    config = config or BoostConfig()
    prob = PSDHProblem(dataset, event=config.event)
    lam_base = 9.0 * prob.ev_rows.size if config.lam is None else float(config.lam)
    n, p = dataset.n, dataset.p
    mand = tuple(config.mandatory)
    optional = np.array([j for j in range(p) if j not in set(mand)], dtype=int)
    beta = np.zeros(p)
    eta = np.zeros(n)
    ll = prob.loglik(eta)
    betas, selected, lls = [beta.copy()], [], [ll]
    for m in range(1, config.steps + 1):
        lam_m = lam_base * (1.0 + config.scheme_c * (m - 1))
        if mand:
            beta, eta, ll = _mandatory_newton(prob, beta, eta, mand, ll)
        if optional.size:
            g, h = prob.score_info(eta, cols=optional)
            ipen = h + lam_m
            ok = ipen > 0
            if not np.any(ok):
                raise RuntimeError("degenerate penalized information in step %d" % m)
            stat = np.where(ok, g * g / np.where(ok, ipen, 1.0), -np.inf)
            best = int(np.argmax(stat))  # first max: lowest index wins ties
            j = int(optional[best])
            gamma = g[best] / ipen[best]
            xj = prob.X[:, j]
            for _ in range(40):
                ll_try = prob.loglik(eta + gamma * xj)
                if ll_try >= ll - _LL_SLACK * (1.0 + abs(ll)):
                    break
                gamma = 0.5 * gamma
            else:
                gamma, ll_try = 0.0, ll
            beta[j] += gamma
            eta = eta + gamma * xj
            ll_new = ll_try
            selected.append(j)
        else:
            ll_new = prob.loglik(eta)
            selected.append(-1)
        if ll_new < ll - 1e-7 * (1.0 + abs(ll)):
            raise RuntimeError(
                "training log partial likelihood decreased in step %d" % m)
        ll = ll_new
        lls.append(ll)
        betas.append(beta.copy())
    return BoostTrace(beta.copy(), betas, selected, lls, lam_base)


def choose_steps_cv(dataset, config=None, n_folds=10, seed=0):
    """Pick the step count by K-fold cross-validated partial likelihood.

    Each fold must contain (and leave for training) at least one type-1
    event; a bad split is redrawn once, then raises.
    """
    config = config or BoostConfig()
    rng = np.random.default_rng(seed)
    n = dataset.n

    def draw_folds():
        perm = rng.permutation(n)
        return np.array_split(perm, n_folds)

    def folds_ok(folds):
        for f in folds:
            train = np.setdiff1d(np.arange(n), f)
            if (dataset.status[f] == config.event).sum() == 0:
                return False
            if (dataset.status[train] == config.event).sum() == 0:
                return False
        return True

    folds = draw_folds()
    if not folds_ok(folds):
        folds = draw_folds()
        if not folds_ok(folds):
            raise NoEventsError(
                "a cross-validation fold has no type-%d events" % config.event)
    total = np.zeros(config.steps + 1)
    for f in folds:
        train = np.setdiff1d(np.arange(n), f)
        trace = boost_fit(dataset.subset(train), config)
        test_prob = PSDHProblem(dataset.subset(f), event=config.event)
        x_test = dataset.X[f]
        for m, beta_m in enumerate(trace.beta_by_step):
            total[m] += test_prob.loglik(x_test @ beta_m)
    return int(np.argmax(total / n_folds))
