"""Random survival forest for competing risks.

Trees are grown on bootstrap bags with mtry covariates tried per node and
exhaustive midpoint-cutpoint scans.  Two split rules are available: the
cause-k two-sample log-rank statistic, and the Gray rule which runs the same
statistic on the modified at-risk set that keeps prior competing failures at
risk while they are still administratively uncensored (their unknown
censoring times approximated by the largest observed time in the bag).
Terminal nodes store the node-sample Kaplan-Meier, Nelson-Aalen and
Aalen-Johansen estimates; the ensemble CIF is their pointwise average.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .data import StepFunction
from .metrics import cindex
from .nonparam import aalen_johansen_cif, km_event_free_survival, nelson_aalen_csh

diagnostics = {"degenerate_oob": 0}


@dataclass(frozen=True)
class ForestConfig:
    """Forest controls; mtry = 0 means ceil(sqrt(p))."""

    n_trees: int = 100
    mtry: int = 0
    n0: int = 6
    rule: str = "gray"
    event: int = 1
    seed: int = 0

    def __post_init__(self):
        if self.rule not in ("logrank", "gray"):
            raise ValueError("rule must be 'logrank' or 'gray'")


@dataclass
class TreeNode:
    """Split node (var >= 0) or leaf carrying node-sample estimates."""

    depth: int
    var: int = -1
    cut: float = float("nan")
    left: Optional["TreeNode"] = None
    right: Optional["TreeNode"] = None
    surv: Optional[StepFunction] = None
    csh: tuple = ()
    cif: tuple = ()


@dataclass
class Forest:
    trees: list
    config: ForestConfig
    bags: list
    oob: list
    taus: list
    vimp_seeds: list
    p: int
    K: int


def _risk_matrices(times, status, k, tau, rule):
    """Per-member at-risk and event matrices over distinct type-k times.

    Returns None when the node has no type-k event.  The Gray variant keeps
    prior competing failures at risk while tau (the approximate censoring
    time) exceeds t.
    """
    tk = np.unique(times[status == k])
    if tk.size == 0:
        return None
    at_risk = times[:, None] >= tk[None, :]
    if rule == "gray":
        competing = (status != 0) & (status != k)
        at_risk = at_risk | (competing[:, None] & (tau > tk)[None, :])
    ev = (times[:, None] == tk[None, :]) & (status == k)[:, None]
    a = at_risk.astype(float)
    e = ev.astype(float)
    return tk, a, e, e.sum(axis=0), a.sum(axis=0)


def _stat_rows(y_le, dk_le, y, dk):
    """Standardized log-rank statistic for rows of left-group counts."""
    with np.errstate(invalid="ignore", divide="ignore"):
        num = (dk_le - dk * y_le / y).sum(axis=-1)
        frac = y_le / y
        vterm = dk * frac * (1.0 - frac) * np.where(
            y > 1, (y - dk) / np.maximum(y - 1.0, 1.0), 0.0)
        var = vterm.sum(axis=-1)
    return np.where(var > 0, num / np.sqrt(np.where(var > 0, var, 1.0)), 0.0)


def _single_stat(dataset, j, c, k, rule):
    times, status = dataset.times, dataset.status
    pre = _risk_matrices(times, status, k, float(times.max()), rule)
    if pre is None:
        return 0.0
    _, a, e, dk, y = pre
    left = dataset.X[:, j] <= c
    y_le = a[left].sum(axis=0)
    dk_le = e[left].sum(axis=0)
    return float(_stat_rows(y_le[None, :], dk_le[None, :], y, dk)[0])


def logrank_split_stat(dataset, j, c, k=1):
    """Cause-k two-sample log-rank statistic of the split x_j <= c."""
    return _single_stat(dataset, j, c, k, "logrank")


def gray_split_stat(dataset, j, c, k=1):
    """Gray splitting statistic: log-rank on the modified at-risk set."""
    return _single_stat(dataset, j, c, k, "gray")


def _best_split(times, status, ids, X, members, config, mtry, tau, rng):
    """Scan mtry candidate covariates; return (var, cut) or None.

    Ties in |statistic| resolve to the lower covariate index, then the lower
    cutpoint (candidates are scanned in ascending order, strictly-greater
    comparisons keep the first best).
    """
    t_m, s_m = times[members], status[members]
    pre = _risk_matrices(t_m, s_m, config.event, tau, config.rule)
    if pre is None:
        return None
    _, a, e, dk, y = pre
    n_unique = np.unique(ids[members]).size
    cand = np.sort(rng.choice(X.shape[1], size=mtry, replace=False))
    best = (0.0, -1, 0.0)
    for j in cand:
        x = X[members, j]
        order = np.argsort(x, kind="mergesort")
        xs = x[order]
        bounds = np.flatnonzero(xs[1:] > xs[:-1]) + 1
        if bounds.size == 0:
            continue
        ids_sorted = ids[members][order]
        first = np.zeros(len(ids_sorted), dtype=bool)
        first[np.unique(ids_sorted, return_index=True)[1]] = True
        left_unique = np.cumsum(first)[bounds - 1]
        ok = (left_unique >= config.n0) & (n_unique - left_unique >= config.n0)
        if not np.any(ok):
            continue
        q = bounds[ok]
        a_cum = np.cumsum(a[order], axis=0)
        e_cum = np.cumsum(e[order], axis=0)
        stats = np.abs(_stat_rows(a_cum[q - 1], e_cum[q - 1], y, dk))
        i = int(np.argmax(stats))
        if stats[i] > best[0]:
            cut = 0.5 * (xs[q[i] - 1] + xs[q[i]])
            best = (float(stats[i]), int(j), float(cut))
    return None if best[1] < 0 else (best[1], best[2])


def _grow(dataset, times, status, ids, X, members, depth, config, mtry, tau, rng):
    n_unique = np.unique(ids[members]).size
    split = None
    if n_unique >= 2 * config.n0:
        split = _best_split(times, status, ids, X, members, config, mtry, tau, rng)
    if split is None:
        leaf_ds = dataset.subset(ids[members])
        return TreeNode(
            depth=depth,
            surv=km_event_free_survival(leaf_ds),
            csh=tuple(nelson_aalen_csh(leaf_ds, k) for k in range(1, dataset.K + 1)),
            cif=tuple(aalen_johansen_cif(leaf_ds, k) for k in range(1, dataset.K + 1)),
        )
    var, cut = split
    go_left = X[members, var] <= cut
    left = _grow(dataset, times, status, ids, X, members[go_left],
                 depth + 1, config, mtry, tau, rng)
    right = _grow(dataset, times, status, ids, X, members[~go_left],
                  depth + 1, config, mtry, tau, rng)
    return TreeNode(depth=depth, var=var, cut=cut, left=left, right=right)


def fit_forest(dataset, config=None, bootstrap=True):
    """Grow the forest; per-tree RNG streams make parallel == serial.

    ``bootstrap=False`` is a test hook that uses the full sample as every
    bag (so there are no out-of-bag rows).
    """
    config = config or ForestConfig()
    n, p = dataset.n, dataset.p
    mtry = config.mtry or int(math.ceil(math.sqrt(p)))
    mtry = min(mtry, p)
    children = np.random.SeedSequence(config.seed).spawn(2 * config.n_trees)
    trees, bags, oobs, taus = [], [], [], []
    for b in range(config.n_trees):
        rng = np.random.default_rng(children[b])
        bag = rng.integers(0, n, size=n) if bootstrap else np.arange(n)
        oob = np.setdiff1d(np.arange(n), bag)
        tau = float(dataset.times[bag].max())
        members = np.arange(n)
        tree = _grow(dataset, dataset.times[bag], dataset.status[bag], bag,
                     dataset.X[bag], members, 0, config, mtry, tau, rng)
        trees.append(tree)
        bags.append(bag)
        oobs.append(oob)
        taus.append(tau)
    return Forest(trees, config, bags, oobs, taus,
                  children[config.n_trees:], p, dataset.K)


def _route(tree, X, rows=None, out=None):
    """Vectorized leaf lookup; returns an object array of leaves per row."""
    if out is None:
        out = np.empty(len(X), dtype=object)
        rows = np.arange(len(X))
    if tree.var < 0:
        out[rows] = tree
        return out
    go_left = X[rows, tree.var] <= tree.cut
    if np.any(go_left):
        _route(tree.left, X, rows[go_left], out)
    if not np.all(go_left):
        _route(tree.right, X, rows[~go_left], out)
    return out


def predict_cif(forest, x, k):
    """Ensemble cause-k CIF at covariate vector x (union-grid average)."""
    x = np.asarray(x, dtype=float).reshape(1, -1)
    fns = [_route(t, x)[0].cif[k - 1] for t in forest.trees]
    grids = [f.times for f in fns if f.times.size]
    if not grids:
        return StepFunction(np.empty(0), np.empty(0), 0.0)
    grid = np.unique(np.concatenate(grids))
    vals = np.mean([np.atleast_1d(f(grid)) for f in fns], axis=0)
    return StepFunction(grid, vals, 0.0)


def _leaf_risk(leaves, k, horizon, cache):
    out = np.empty(len(leaves))
    for i, leaf in enumerate(leaves):
        key = id(leaf)
        if key not in cache:
            cache[key] = leaf.cif[k - 1](horizon)
        out[i] = cache[key]
    return out


def variable_importance(forest, dataset, k=None, horizon=10.0):
    """Permutation importance on out-of-bag cases.

    Error functional: 1 - cause-k concordance of the single-tree CIF at the
    horizon.  The importance of covariate j is the mean over trees of the
    error increase after permuting column j among the OOB rows.  Trees whose
    OOB sample yields no comparable pair are skipped; if every tree is
    skipped the importances are 0 and a diagnostic is recorded.
    """
    k = k or forest.config.event
    p = forest.p
    deltas = np.zeros(p)
    used = 0
    for b, tree in enumerate(forest.trees):
        oob = forest.oob[b]
        if oob.size < 2:
            continue
        ds_oob = dataset.subset(oob)
        x_oob = dataset.X[oob]
        cache = {}
        base = _leaf_risk(_route(tree, x_oob), k, horizon, cache)
        e0 = 1.0 - cindex(base, ds_oob, k)
        if np.isnan(e0):
            continue
        rng = np.random.default_rng(forest.vimp_seeds[b])
        for j in range(p):
            perm = rng.permutation(oob.size)
            x_perm = x_oob.copy()
            x_perm[:, j] = x_oob[perm, j]
            risks = _leaf_risk(_route(tree, x_perm), k, horizon, cache)
            deltas[j] += (1.0 - cindex(risks, ds_oob, k)) - e0
        used += 1
    if used == 0:
        diagnostics["degenerate_oob"] += 1
        warnings.warn("no usable out-of-bag sample; importances set to 0")
        return np.zeros(p)
    return deltas / used


def _tree_depths(tree, first_use, max_depth=0):
    max_depth = max(max_depth, tree.depth)
    if tree.var >= 0:
        if tree.var not in first_use or tree.depth < first_use[tree.var]:
            first_use[tree.var] = tree.depth
        max_depth = _tree_depths(tree.left, first_use, max_depth)
        max_depth = _tree_depths(tree.right, first_use, max_depth)
    return max_depth


def minimal_depth(forest):
    """Mean over trees of the first-split depth per covariate.

    A covariate never used in a tree contributes that tree's maximal depth
    plus one.
    """
    total = np.zeros(forest.p)
    for tree in forest.trees:
        first_use = {}
        max_depth = _tree_depths(tree, first_use)
        for j in range(forest.p):
            total[j] += first_use.get(j, max_depth + 1)
    return total / len(forest.trees)


def select_variables(vimp, depths):
    """Indices with positive importance and depth at most the overall mean."""
    vimp = np.asarray(vimp, dtype=float)
    depths = np.asarray(depths, dtype=float)
    bar = depths.mean()
    return tuple(int(j) for j in np.flatnonzero((vimp > 0) & (depths <= bar)))
