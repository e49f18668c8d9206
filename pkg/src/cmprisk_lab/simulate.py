"""Two-cause Fine-Gray data generator for the simulation benchmark.

Cause 1 follows the subdistribution F_1(t|x) = 1 - [1 - pi (1 - e^{-t})]^{exp(eta1)}
(unit exponential base mixture, mass parameter pi), so P(E=1|x) =
1 - (1 - pi)^{exp(eta1)}; cause-1 times are drawn by inverting the
conditional CDF.  Cause-2 times are exponential with rate exp(eta2).
Censoring is Unif(0, 20) and can be disabled for checks.

Covariates: X1..X6 standard normal with an independent, exchangeable or
AR(1) structure (two blocks of three for the dependent structures), X7..X12
binary from a fresh latent block of the same structure dichotomized at r_b
(X = 1 if latent < r_b), and the remaining p - 12 columns independent
noise.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .data import Dataset

LOG2 = np.log(2.0)

N_GRID = (200, 300, 500, 1000)
P_GRID = (24, 212, 512, 1012)
CORTYPES = ("independent", "exchangeable", "ar1")
R_GRID = (0.2, 0.5, 0.8)
RB_GRID = (0.0, -1.0)
MODELS = ("linear", "quadratic", "interaction")
TRUE_SET = tuple(range(12))        # 0-based indices of X1..X12


@dataclass(frozen=True)
class TrueEffects:
    """Protocol effect vectors (cause 1 and 2) and the mass parameter pi."""

    beta1: tuple = (LOG2, -LOG2, 0.0, 0.0, LOG2, -LOG2,
                    1.5, -1.5, 0.0, 0.0, 1.5, -1.5)
    beta2: tuple = (0.0, 0.0, LOG2, -LOG2, LOG2, -LOG2,
                    0.0, 0.0, 1.5, -1.5, 1.5, -1.5)
    beta_q1: tuple = (LOG2, -LOG2, 0.0, 0.0, LOG2, -LOG2)
    beta_q2: tuple = (0.0, 0.0, LOG2, -LOG2, LOG2, -LOG2)
    beta_i1: tuple = (-LOG2, LOG2, 0.0, 0.0, -LOG2, LOG2)
    beta_i2: tuple = (0.0, 0.0, -LOG2, LOG2, -LOG2, LOG2)
    pi: float = 0.5


DEFAULT_EFFECTS = TrueEffects()


@dataclass(frozen=True)
class ScenarioSpec:
    """One simulation cell plus the replicate seed."""

    n: int
    p: int
    cortype: str = "independent"
    r: float = 0.0
    r_b: float = 0.0
    model: str = "linear"
    seed: int = 0

    def __post_init__(self):
        if self.p < 12:
            raise ValueError("the protocol needs p >= 12 covariates")
        if self.cortype not in CORTYPES:
            raise ValueError("unknown cortype %r" % (self.cortype,))
        if self.model not in MODELS:
            raise ValueError("unknown model %r" % (self.model,))
        if self.cortype != "independent" and not 0 < self.r < 1:
            raise ValueError("dependent structures need r in (0, 1)")

    @property
    def cell_id(self):
        return "n%d_p%d_%s_r%g_rb%g_%s" % (
            self.n, self.p, self.cortype, self.r, self.r_b, self.model)


def _block_cov(cortype, r):
    """6x6 latent covariance: two blocks of three, unit diagonal."""
    cov = np.eye(6)
    if cortype == "independent":
        return cov
    for blk in (slice(0, 3), slice(3, 6)):
        idx = np.arange(6)[blk]
        for a in idx:
            for b in idx:
                if a != b:
                    cov[a, b] = r if cortype == "exchangeable" else r ** abs(a - b)
    return cov


def gen_covariates(spec, rng):
    """Covariate matrix for one scenario cell: continuous, binary, noise."""
    chol = np.linalg.cholesky(_block_cov(spec.cortype, spec.r))
    cont = rng.standard_normal((spec.n, 6)) @ chol.T
    latent = rng.standard_normal((spec.n, 6)) @ chol.T
    binary = (latent < spec.r_b).astype(float)
    noise = rng.standard_normal((spec.n, spec.p - 12))
    return np.concatenate([cont, binary, noise], axis=1)


def linear_predictor(X, effects, model, cause):
    """eta_cause(x) under the linear, quadratic or interaction model.

    All models share the linear term over X1..X12; the quadratic model adds
    squared continuous terms, the interaction model adds
    I(X_k > 0) * X_{k+6} cross terms (k = 1..6).
    """
    if cause not in (1, 2):
        raise ValueError("cause must be 1 or 2")
    beta = np.asarray(effects.beta1 if cause == 1 else effects.beta2)
    eta = X[:, :12] @ beta
    if model == "quadratic":
        bq = np.asarray(effects.beta_q1 if cause == 1 else effects.beta_q2)
        eta = eta + (X[:, :6] ** 2) @ bq
    elif model == "interaction":
        bi = np.asarray(effects.beta_i1 if cause == 1 else effects.beta_i2)
        eta = eta + ((X[:, :6] > 0) * X[:, 6:12]) @ bi
    return eta


def cause1_mixture_mass(eta1, pi):
    """P(E=1 | x) = 1 - (1 - pi)^{exp(eta1)}."""
    return 1.0 - (1.0 - pi) ** np.exp(eta1)


def cause1_cif(t, eta1, pi):
    """F_1(t | x) = 1 - [1 - pi (1 - e^{-t})]^{exp(eta1)}."""
    return 1.0 - (1.0 - pi * (1.0 - np.exp(-np.asarray(t, dtype=float)))) ** np.exp(eta1)


def gen_outcomes(X, effects, model, rng, censoring=True):
    """(times, status) for one covariate matrix; status 0/1/2.

    Cause-1 times invert the conditional subdistribution CDF; cause-2 times
    are exponential with rate exp(eta2).  ``censoring=False`` is the check
    hook that returns the latent failure data uncensored.
    """
    n = X.shape[0]
    eta1 = linear_predictor(X, effects, model, 1)
    eta2 = linear_predictor(X, effects, model, 2)
    p1 = cause1_mixture_mass(eta1, effects.pi)
    is1 = rng.uniform(size=n) < p1
    u = rng.uniform(size=n)
    e2 = rng.exponential(size=n)
    c = rng.uniform(0.0, 20.0, size=n)
    inner = (1.0 - (1.0 - u * p1) ** np.exp(-eta1)) / effects.pi
    # u < 1 keeps inner < 1 in exact arithmetic; clip the float boundary
    inner = np.clip(inner, 0.0, 1.0 - 1e-15)
    t1 = -np.log1p(-inner)
    t2 = e2 / np.exp(eta2)
    t_star = np.where(is1, t1, t2)
    cause = np.where(is1, 1, 2)
    if not censoring:
        return t_star, cause.astype(int)
    times = np.minimum(t_star, c)
    status = np.where(t_star <= c, cause, 0)
    return times, status.astype(int)


def generate(spec, effects=None, censoring=True):
    """Deterministic dataset for one (cell, seed) pair."""
    effects = effects or DEFAULT_EFFECTS
    rng = np.random.default_rng(spec.seed)
    X = gen_covariates(spec, rng)
    times, status = gen_outcomes(X, effects, spec.model, rng, censoring)
    names = tuple("X%d" % (j + 1) for j in range(spec.p))
    return Dataset(times, status, X, names, 2)


def full_grid(base_seed=0):
    """All 672 protocol cells as ScenarioSpec templates (seed = base_seed)."""
    cells = []
    for n in N_GRID:
        for p in P_GRID:
            combos = [("independent", 0.0)] + [
                (ct, r) for ct in ("exchangeable", "ar1") for r in R_GRID]
            for ct, r in combos:
                for rb in RB_GRID:
                    for model in MODELS:
                        cells.append(ScenarioSpec(n, p, ct, r, rb, model, base_seed))
    return cells
