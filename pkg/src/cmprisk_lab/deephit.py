"""Discrete-time joint neural model of the competing-risk distribution.

Time is cut into equal-frequency bins; a shared ReLU stack feeds K
cause-specific ReLU stacks (each also sees the raw input), and a single
softmax over all K x B cells yields the joint pmf P(bin, cause | x).  The
loss is the negative log-likelihood L1 (censored subjects contribute the
survivor mass at their censoring bin) plus a pairwise ranking term L2 with
kernel exp(-(F_i - F_j)/sigma).  Everything is plain numpy with analytic
gradients and adaptive-moment (or plain SGD) updates.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

EPS = 1e-12


@dataclass(frozen=True)
class NetConfig:
    time_bins: int = 50
    shared_layers: tuple = (128, 128)
    cause_layers: tuple = (64,)
    alpha: float = 0.1
    sigma: float = 0.1
    learning_rate: float = 1e-3
    epochs: int = 200
    batch_size: int = 32
    seed: int = 0
    train_fraction: float = 0.8
    optimizer: str = "adam"


@dataclass
class BinnedData:
    """Dataset with times mapped to 0-based equal-frequency bin indices."""

    times: np.ndarray
    status: np.ndarray
    X: np.ndarray
    bins: np.ndarray
    edges: np.ndarray
    K: int

    @property
    def n(self):
        return len(self.times)

    @property
    def n_bins(self):
        return len(self.edges)


def discretize(dataset, n_bins=50):
    """Equal-frequency bin edges over the observed times.

    Edges are the 1/B..B/B empirical quantiles (last edge = max time),
    deduplicated; a subject falls in the first bin whose upper edge is >=
    its time.  Requesting more bins than distinct edges warns and reduces.
    """
    if n_bins < 1:
        raise ValueError("need at least one bin")
    qs = np.quantile(dataset.times, np.arange(1, n_bins + 1) / n_bins)
    qs[-1] = dataset.times.max()
    edges = np.unique(qs)
    if len(edges) < n_bins:
        warnings.warn("only %d distinct bin edges available (asked for %d)"
                      % (len(edges), n_bins))
    bins = np.searchsorted(edges, dataset.times, side="left")
    bins = np.minimum(bins, len(edges) - 1)
    return BinnedData(dataset.times.copy(), dataset.status.copy(),
                      dataset.X.copy(), bins, edges, dataset.K)


def _shapes(p, K, B, cfg):
    out = []
    prev = p
    for h in cfg.shared_layers:
        out.append((prev, h))
        out.append((h,))
        prev = h
    f_dim = prev if cfg.shared_layers else p
    for _ in range(K):
        prev = f_dim + p
        for h in cfg.cause_layers:
            out.append((prev, h))
            out.append((h,))
            prev = h
        out.append((prev, B))
        out.append((B,))
    return out


def init_params(p, K, B, cfg, rng):
    """He-scaled weights, zero biases, bundled with the topology."""
    weights = []
    for shape in _shapes(p, K, B, cfg):
        if len(shape) == 2:
            weights.append(rng.standard_normal(shape) * np.sqrt(2.0 / shape[0]))
        else:
            weights.append(np.zeros(shape))
    return {"weights": weights, "p": p, "K": K, "B": B, "cfg": cfg}


def _forward_batch(X, params):
    """Returns (pmf (m,K,B), cache for backprop)."""
    cfg = params["cfg"]
    K, B = params["K"], params["B"]
    w = params["weights"]
    if not np.all(np.isfinite(X)):
        raise ValueError("non-finite network inputs")
    idx = 0
    h = X
    shared_cache = []
    for _ in cfg.shared_layers:
        z = h @ w[idx] + w[idx + 1]
        shared_cache.append((h, z))
        h = np.maximum(z, 0.0)
        idx += 2
    f = h if cfg.shared_layers else X
    logits = np.empty((X.shape[0], K * B))
    cause_cache = []
    for k in range(K):
        a = np.concatenate([f, X], axis=1)
        layers = []
        for _ in cfg.cause_layers:
            z = a @ w[idx] + w[idx + 1]
            layers.append((a, z))
            a = np.maximum(z, 0.0)
            idx += 2
        head_in = a
        logits[:, k * B:(k + 1) * B] = a @ w[idx] + w[idx + 1]
        idx += 2
        cause_cache.append((layers, head_in))
    if not np.all(np.isfinite(logits)):
        raise FloatingPointError("non-finite activations in forward pass")
    zmax = logits.max(axis=1, keepdims=True)
    ez = np.exp(logits - zmax)
    probs = ez / ez.sum(axis=1, keepdims=True)
    cache = (X, shared_cache, f, cause_cache, probs)
    return probs.reshape(-1, K, B), cache


def _backward_batch(params, cache, dpmf):
    """Gradients of sum-loss wrt every weight array, given dL/dpmf."""
    cfg = params["cfg"]
    K, B = params["K"], params["B"]
    w = params["weights"]
    X, shared_cache, f, cause_cache, probs = cache
    m = X.shape[0]
    g = dpmf.reshape(m, K * B)
    dlogits = probs * g - probs * np.sum(probs * g, axis=1, keepdims=True)
    grads = [np.zeros_like(a) for a in w]
    idx = len(w)
    df = np.zeros_like(f) if cfg.shared_layers else None
    for k in reversed(range(K)):
        layers, head_in = cause_cache[k]
        idx -= 2
        dk = dlogits[:, k * B:(k + 1) * B]
        grads[idx] += head_in.T @ dk
        grads[idx + 1] += dk.sum(axis=0)
        da = dk @ w[idx].T
        for (inp, z) in reversed(layers):
            idx -= 2
            dz = da * (z > 0)
            grads[idx] += inp.T @ dz
            grads[idx + 1] += dz.sum(axis=0)
            da = dz @ w[idx].T
        if cfg.shared_layers:
            df += da[:, :f.shape[1]]
    if cfg.shared_layers:
        da = df
        for li in reversed(range(len(cfg.shared_layers))):
            inp, z = shared_cache[li]
            dz = da * (z > 0)
            grads[2 * li] += inp.T @ dz
            grads[2 * li + 1] += dz.sum(axis=0)
            da = dz @ w[2 * li].T
    return grads


def forward(x, params):
    """Joint pmf (K x B_t matrix) at a single covariate vector."""
    x = np.asarray(x, dtype=float).reshape(1, -1)
    pmf, _ = _forward_batch(x, params)
    return pmf[0]


def cif_from_pmf(pmf, k, b):
    """F_k at bin b (both 1-based): partial pmf sum over bins 1..b."""
    K, B = pmf.shape
    if not (1 <= k <= K and 1 <= b <= B):
        raise ValueError("cause or bin index out of range")
    return float(pmf[k - 1, :b].sum())


def loss_l1(pmfs, binned, rows=None):
    """Negative log-likelihood over the given rows (default: all).

    Uncensored subjects contribute -log y[cause, bin]; censored subjects
    -log of the survivor mass 1 - sum_k F_k(bin).  Probabilities are clamped
    at 1e-12 inside the logs.
    """
    rows = np.arange(binned.n) if rows is None else np.asarray(rows)
    total = 0.0
    cum = np.cumsum(pmfs, axis=2)
    for ii, i in enumerate(rows):
        b, s = binned.bins[i], binned.status[i]
        if s >= 1:
            total -= np.log(max(pmfs[ii, s - 1, b], EPS))
        else:
            surv = 1.0 - cum[ii, :, b].sum()
            total -= np.log(max(surv, EPS))
    return float(total)


def _l1_grad(pmfs, binned, rows):
    g = np.zeros_like(pmfs)
    cum = np.cumsum(pmfs, axis=2)
    for ii, i in enumerate(rows):
        b, s = binned.bins[i], binned.status[i]
        if s >= 1:
            val = pmfs[ii, s - 1, b]
            if val > EPS:
                g[ii, s - 1, b] -= 1.0 / val
        else:
            surv = 1.0 - cum[ii, :, b].sum()
            if surv > EPS:
                g[ii, :, :b + 1] += 1.0 / surv
    return g


def loss_l2(pmfs, binned, alpha, sigma, rows=None):
    """Ranking loss: sum over causes k and admissible pairs (i, j) of
    alpha * exp(-(F_k(b_i|x_i) - F_k(b_i|x_j)) / sigma), where a pair is
    admissible when subject i fails from cause k strictly before T_j.
    """
    rows = np.arange(binned.n) if rows is None else np.asarray(rows)
    times = binned.times[rows]
    status = binned.status[rows]
    bins = binned.bins[rows]
    cum = np.cumsum(pmfs, axis=2)
    total = 0.0
    for k in range(1, binned.K + 1):
        for ii in np.flatnonzero(status == k):
            admissible = times > times[ii]
            if not np.any(admissible):
                continue
            fi = cum[ii, k - 1, bins[ii]]
            fj = cum[admissible, k - 1, bins[ii]]
            total += float(np.sum(np.exp(-(fi - fj) / sigma)))
    return alpha * total


def _l2_grad(pmfs, binned, alpha, sigma, rows):
    g = np.zeros_like(pmfs)
    times = binned.times[rows]
    status = binned.status[rows]
    bins = binned.bins[rows]
    cum = np.cumsum(pmfs, axis=2)
    for k in range(1, binned.K + 1):
        for ii in np.flatnonzero(status == k):
            admissible = np.flatnonzero(times > times[ii])
            if admissible.size == 0:
                continue
            b = bins[ii]
            fi = cum[ii, k - 1, b]
            fj = cum[admissible, k - 1, b]
            terms = alpha * np.exp(-(fi - fj) / sigma) / sigma
            g[ii, k - 1, :b + 1] -= terms.sum()
            g[admissible, k - 1, :b + 1] += terms[:, None]
    return g


@dataclass
class TrainResult:
    params: dict
    epoch_losses: list
    train_idx: np.ndarray
    test_idx: np.ndarray
    test_pmf: np.ndarray
    test_cif: np.ndarray
    edges: np.ndarray
    diverged: bool = False


def train(binned, cfg=None):
    """Mini-batch training with a deterministic seeded split and shuffling.

    Returns the fitted parameter bundle, the per-epoch full-training-set
    loss trace, and CIF trajectories for the held-out rows.  A non-finite
    epoch loss aborts with the last finite parameter snapshot.
    """
    cfg = cfg or NetConfig()
    n, p = binned.X.shape
    K, B = binned.K, binned.n_bins
    rng = np.random.default_rng(cfg.seed)
    perm = rng.permutation(n)
    n_test = int(round(n * (1.0 - cfg.train_fraction)))
    test_idx, train_idx = perm[:n_test], perm[n_test:]
    params = init_params(p, K, B, cfg, rng)
    state = [(np.zeros_like(w), np.zeros_like(w)) for w in params["weights"]]
    step = 0
    losses = []
    snapshot = [w.copy() for w in params["weights"]]
    diverged = False
    for _ in range(cfg.epochs):
        order = train_idx[rng.permutation(len(train_idx))]
        for lo in range(0, len(order), cfg.batch_size):
            rows = order[lo:lo + cfg.batch_size]
            pmfs, cache = _forward_batch(binned.X[rows], params)
            dp = _l1_grad(pmfs, binned, rows)
            if cfg.alpha > 0:
                dp += _l2_grad(pmfs, binned, cfg.alpha, cfg.sigma, rows)
            grads = _backward_batch(params, cache, dp)
            step += 1
            for w, gr, (m1, m2) in zip(params["weights"], grads, state):
                if cfg.optimizer == "sgd":
                    w -= cfg.learning_rate * gr
                    continue
                m1 *= 0.9
                m1 += 0.1 * gr
                m2 *= 0.999
                m2 += 0.001 * gr * gr
                mhat = m1 / (1.0 - 0.9 ** step)
                vhat = m2 / (1.0 - 0.999 ** step)
                w -= cfg.learning_rate * mhat / (np.sqrt(vhat) + 1e-8)
        pmfs, _ = _forward_batch(binned.X[train_idx], params)
        loss = loss_l1(pmfs, binned, train_idx)
        if cfg.alpha > 0:
            loss += loss_l2(pmfs, binned, cfg.alpha, cfg.sigma, train_idx)
        if not np.isfinite(loss):
            params["weights"] = snapshot
            diverged = True
            warnings.warn("training loss diverged; restored last finite snapshot")
            break
        losses.append(loss)
        snapshot = [w.copy() for w in params["weights"]]
    if len(test_idx):
        test_pmf, _ = _forward_batch(binned.X[test_idx], params)
    else:
        test_pmf = np.zeros((0, K, B))
    test_cif = np.cumsum(test_pmf, axis=2)
    return TrainResult(params, losses, train_idx, test_idx, test_pmf,
                       test_cif, binned.edges, diverged)


def write_cif_csv(path, subject_ids, cif, edges):
    """CIF trajectories as (subject, cause, bin upper edge, cif) rows."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["subject", "cause", "bin_upper_edge", "cif"])
        for i, sid in enumerate(subject_ids):
            for k in range(cif.shape[1]):
                for b, edge in enumerate(edges):
                    w.writerow([sid, k + 1, repr(float(edge)),
                                "%.10g" % cif[i, k, b]])
