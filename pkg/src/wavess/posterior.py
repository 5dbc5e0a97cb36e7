"""Spike-and-slab posterior: weight schedule, Gibbs sampler, exact
enumeration oracle, quasi-white-noise comparator, thresholding-event
diagnostics, and error functionals."""

from __future__ import annotations

import csv
import itertools
import json
import math
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial.hermite_e import hermegauss

from .basis import Basis, TensorIndex
from .design import RegressionDataset
from .funcspace import AnisoSmoothness, CoefficientField, eval_field_grid
from .gram import DesignMatrices

__all__ = [
    "PriorConfig",
    "GibbsConfig",
    "ChainState",
    "ChainDraws",
    "DiagnosticsConfig",
    "default_truncation",
    "weight",
    "gibbs_sweep",
    "run_chain",
    "posterior_mean_field",
    "posterior_derivative_mean",
    "exact_posterior_small",
    "quasi_wn_posterior",
    "qwn_vs_regression_report",
    "event_diagnostics",
    "sup_error",
    "l2_error",
]

_LOG_CLAMP = 700.0


@dataclass(frozen=True)
class PriorConfig:
    slab: str = "gaussian"  # gaussian | uniform | laplace
    tau: float | None = None  # gaussian slab sd; defaults to R0
    laplace_scale: float = 1.0
    R0: float = 2.0
    weight_lambda: float = 10.0
    weight_mu: tuple[float, ...] = (1.0,)
    a0: float = 1.0  # inverse-gamma shape for sigma^2
    b0: float = 1.0  # inverse-gamma rate
    sigma_fixed: float | None = None
    truncation_exponent: float = 0.5

    def __post_init__(self):
        if self.slab not in ("gaussian", "uniform", "laplace"):
            raise ValueError(f"unknown slab {self.slab!r}")
        if self.R0 <= 0:
            raise ValueError("R0 must be positive")
        if self.weight_lambda <= 0:
            raise ValueError("weight_lambda must be positive")
        mu = tuple(float(m) for m in np.atleast_1d(self.weight_mu))
        object.__setattr__(self, "weight_mu", mu)
        if any(m <= 0.5 for m in mu):
            raise ValueError("need weight_mu > 1/2 on every axis")
        if self.tau is None:
            object.__setattr__(self, "tau", self.R0)
        if not 0 < self.truncation_exponent <= 1:
            raise ValueError("truncation exponent must lie in (0, 1]")

    def slab_logpdf(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.slab == "gaussian":
            return (-0.5 * (x / self.tau) ** 2
                    - math.log(self.tau * math.sqrt(2 * math.pi)))
        if self.slab == "uniform":
            out = np.full(x.shape, -math.inf)
            inside = np.abs(x) <= self.R0
            out[inside] = -math.log(2 * self.R0)
            return out
        b = self.laplace_scale
        return -np.abs(x) / b - math.log(2 * b)

    @property
    def p_min(self) -> float:
        """Minimum slab density over [-R0, R0]."""
        return float(np.exp(self.slab_logpdf(np.array([self.R0]))[0]))

    @property
    def p_max(self) -> float:
        return float(np.exp(self.slab_logpdf(np.array([0.0]))[0]))


@dataclass(frozen=True)
class GibbsConfig:
    iters: int = 1000  # kept sweeps
    burnin: int = 200
    thin: int = 1

    def __post_init__(self):
        if self.iters < 0 or self.burnin < 0 or self.thin < 1:
            raise ValueError("invalid Gibbs configuration")


@dataclass(frozen=True)
class DiagnosticsConfig:
    gamma_lo: float = 0.5
    gamma_hi: float = 4.0
    thin: int = 1
    burnin: int = 0

    def __post_init__(self):
        if not 0 < self.gamma_lo < self.gamma_hi:
            raise ValueError("need 0 < gamma_lo < gamma_hi")


def default_truncation(n: int, d: int, m: float = 0.5,
                       N=None) -> tuple[int, ...]:
    """Levels J with prod 2^{J_l} the largest power of two at most
    (n/ln n)^m, split as evenly as integers allow (leftover to axis 1)."""
    if n < 8:
        raise ValueError("need n >= 8")
    target = (n / math.log(n)) ** m
    total = max(0, math.floor(math.log2(target)))
    base, extra = divmod(total, d)
    J = tuple(base + (1 if l < extra else 0) for l in range(d))
    if N is not None and any(J[l] < N[l] for l in range(d)):
        raise ValueError(f"n={n} too small: truncation {J} below base {N}")
    return J


def weight(j, n: int, prior: PriorConfig) -> float:
    """omega_{j,n} = 2^{-sum j_l (1+mu_l)} capped at 1/2 and floored at
    n^{-lambda}."""
    j = tuple(j)
    mu = prior.weight_mu
    if len(mu) == 1 and len(j) > 1:
        mu = mu * len(j)
    expo = sum(j[l] * (1.0 + mu[l]) for l in range(len(j)))
    w = min(2.0 ** -expo, 0.5)
    return max(w, float(n) ** -prior.weight_lambda)


@dataclass
class ChainState:
    theta: np.ndarray  # dense coefficient vector in index_range order
    inclusion: np.ndarray  # boolean, mothers only meaningful
    sigma2: float
    residual: np.ndarray
    iteration: int = 0


def _init_state(dataset: RegressionDataset, matrices: DesignMatrices,
                prior: PriorConfig) -> ChainState:
    q = matrices.q
    theta = np.zeros(q)
    sigma2 = (prior.sigma_fixed ** 2 if prior.sigma_fixed is not None
              else 1.0)
    return ChainState(theta, np.zeros(q, dtype=bool), float(sigma2),
                      dataset.y.copy(), 0)


def _prepare(matrices: DesignMatrices, dataset: RegressionDataset,
             prior: PriorConfig):
    father = tuple(n - 1 for n in matrices.N)
    is_father = np.array([idx.j == father for idx in matrices.index_order])
    col_ss = np.einsum("ij,ij->j", matrices.combined, matrices.combined)
    omegas = np.array([0.0 if is_father[i] else
                       weight(matrices.index_order[i].j, dataset.design.n,
                              prior)
                       for i in range(matrices.q)])
    return is_father, col_ss, omegas


def _slab_update_gaussian(s, b, sigma2, tau):
    v = 1.0 / (s / sigma2 + 1.0 / tau ** 2)
    mean = v * b / sigma2
    log_bf = 0.5 * math.log(v) - math.log(tau) + min(_LOG_CLAMP,
                                                     mean ** 2 / (2 * v))
    return mean, v, log_bf


_GH_NODES, _GH_WEIGHTS = hermegauss(64)  # weight exp(-t^2/2), sum = sqrt(2 pi)


def _slab_update_general(s, b, sigma2, prior: PriorConfig, rng=None):
    """Bayes factor int exp(-(s x^2 - 2 b x)/(2 sigma^2)) p(x) dx by
    Gauss-Hermite around the likelihood peak; optional inverse-CDF draw on a
    512-point grid over [-R0, R0].

    Completing the square: the integral is exp(b^2/(2 sigma^2 s)) sqrt(v)
    times int exp(-t^2/2) p(mean + sqrt(v) t) dt, v = sigma^2/s, mean = b/s.
    """
    v = sigma2 / s
    mean = b / s
    x = mean + math.sqrt(v) * _GH_NODES
    log_peak = min(_LOG_CLAMP, b ** 2 / (2 * sigma2 * s))
    dens = np.exp(prior.slab_logpdf(x))
    bf = math.exp(log_peak) * math.sqrt(v) * float(np.dot(_GH_WEIGHTS, dens))
    draw = None
    if rng is not None:
        grid = np.linspace(-prior.R0, prior.R0, 512)
        logw = (prior.slab_logpdf(grid)
                - (s * grid ** 2 - 2 * b * grid) / (2 * sigma2))
        logw -= logw.max()
        w = np.exp(logw)
        cdf = np.cumsum(w)
        cdf /= cdf[-1]
        u = rng.uniform()
        draw = float(np.interp(u, cdf, grid))
    return bf, draw


def gibbs_sweep(state: ChainState, dataset: RegressionDataset,
                matrices: DesignMatrices, prior: PriorConfig,
                rng: np.random.Generator,
                _prep=None) -> ChainState:
    """One systematic sweep in index_range order, then a sigma^2 update."""
    if _prep is None:
        _prep = _prepare(matrices, dataset, prior)
    is_father, col_ss, omegas = _prep
    X = matrices.combined
    r = state.residual
    sigma2 = state.sigma2
    tau = prior.tau
    for i in range(matrices.q):
        col = X[:, i]
        s = col_ss[i]
        cur = state.theta[i]
        b = float(col @ r) + s * cur
        if s == 0.0:
            continue
        if is_father[i]:
            if prior.slab == "gaussian":
                mean, v, _ = _slab_update_gaussian(s, b, sigma2, tau)
                new = mean + math.sqrt(v) * rng.standard_normal()
            else:
                _, new = _slab_update_general(s, b, sigma2, prior, rng)
            state.inclusion[i] = True
        else:
            omega = omegas[i]
            if prior.slab == "gaussian":
                mean, v, log_bf = _slab_update_gaussian(s, b, sigma2, tau)
            else:
                bf, cand = _slab_update_general(s, b, sigma2, prior, rng)
                log_bf = math.log(max(bf, 1e-300))
            log_odds = math.log(omega / (1.0 - omega)) + log_bf
            log_odds = max(-_LOG_CLAMP, min(_LOG_CLAMP, log_odds))
            p_inc = 1.0 / (1.0 + math.exp(-log_odds))
            if rng.uniform() < p_inc:
                if prior.slab == "gaussian":
                    new = mean + math.sqrt(v) * rng.standard_normal()
                else:
                    new = cand
                state.inclusion[i] = True
            else:
                new = 0.0
                state.inclusion[i] = False
        if new != cur:
            r -= (new - cur) * col
            state.theta[i] = new
    if not np.all(np.isfinite(r)):
        raise FloatingPointError("non-finite residual: chain diverged")
    if prior.sigma_fixed is None:
        shape = prior.a0 + dataset.design.n / 2.0
        rate = prior.b0 + float(r @ r) / 2.0
        state.sigma2 = rate / rng.gamma(shape)
    state.iteration += 1
    if state.iteration % 100 == 0:
        state.residual = dataset.y - X @ state.theta
    return state


@dataclass
class ChainDraws:
    index_order: list[TensorIndex]
    N: tuple[int, ...]
    J: tuple[int, ...]
    theta: np.ndarray  # kept x q
    sigma2: np.ndarray  # kept
    is_father: np.ndarray

    @property
    def kept(self) -> int:
        return self.theta.shape[0]

    def inclusion_frequency(self) -> np.ndarray:
        if self.kept == 0:
            return np.zeros(len(self.index_order))
        return np.mean(self.theta != 0.0, axis=0)

    def to_jsonl(self, path: str) -> None:
        with open(path, "w") as fh:
            for it in range(self.kept):
                nz = np.nonzero(self.theta[it])[0]
                rec = {
                    "iteration": it,
                    "sigma2": float(self.sigma2[it]),
                    "coefficients": [
                        [list(self.index_order[i].j),
                         list(self.index_order[i].k),
                         float(self.theta[it, i])] for i in nz],
                }
                fh.write(json.dumps(rec) + "\n")

    def inclusion_to_csv(self, path: str) -> None:
        freq = self.inclusion_frequency()
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["j", "k", "frequency"])
            for i, idx in enumerate(self.index_order):
                w.writerow([" ".join(map(str, idx.j)),
                            " ".join(map(str, idx.k)), f"{freq[i]:.6f}"])


def run_chain(dataset: RegressionDataset, matrices: DesignMatrices,
              prior: PriorConfig, cfg: GibbsConfig,
              rng: np.random.Generator) -> ChainDraws:
    state = _init_state(dataset, matrices, prior)
    prep = _prepare(matrices, dataset, prior)
    kept_theta = np.zeros((cfg.iters, matrices.q))
    kept_sigma2 = np.zeros(cfg.iters)
    kept = 0
    total = cfg.burnin + cfg.iters * cfg.thin
    for sweep in range(total):
        gibbs_sweep(state, dataset, matrices, prior, rng, prep)
        if sweep >= cfg.burnin and (sweep - cfg.burnin) % cfg.thin == 0:
            if kept < cfg.iters:
                kept_theta[kept] = state.theta
                kept_sigma2[kept] = state.sigma2
                kept += 1
    return ChainDraws(matrices.index_order, matrices.N, matrices.J,
                      kept_theta[:kept], kept_sigma2[:kept], prep[0])


def _field_from_vector(index_order, N, J, vec) -> CoefficientField:
    out = CoefficientField.zero(N, J)
    for i, idx in enumerate(index_order):
        if vec[i] != 0.0:
            out.set(idx, float(vec[i]))
    return out


def posterior_mean_field(draws: ChainDraws) -> CoefficientField:
    if draws.kept == 0:
        raise ValueError("no draws")
    mean = draws.theta.mean(axis=0)
    return _field_from_vector(draws.index_order, draws.N, draws.J, mean)


def posterior_derivative_mean(draws: ChainDraws, basis: Basis, r):
    """Evaluable x -> D^r of the posterior-mean field."""
    mean = posterior_mean_field(draws)

    def estimator(x):
        from .funcspace import eval_field
        return eval_field(mean, basis, x, tuple(r))

    estimator.field = mean
    estimator.r = tuple(r)
    return estimator


# ---------------------------------------------------------------------------
# exact enumeration oracle
# ---------------------------------------------------------------------------

@dataclass
class ExactPosterior:
    index_order: list[TensorIndex]
    mother_idx: np.ndarray  # positions of mother columns
    inclusion_prob: np.ndarray  # per mother column
    mean_coeffs: np.ndarray  # per column, exact posterior mean
    model_probs: dict[tuple[int, ...], float]


def _marginal_loglik(yty: float, Xty: np.ndarray, G: np.ndarray, n: int,
                     sigma2: float, tau2: float) -> float:
    """log N(y; 0, sigma2 I + tau2 X X^T) via the low-rank identities,
    from the sufficient statistics y^Ty, X^Ty, and G = X^TX."""
    q = len(Xty)
    if q == 0:
        quad = yty / sigma2
        logdet = n * math.log(sigma2)
    else:
        A = np.eye(q) + (tau2 / sigma2) * G
        _, ld = np.linalg.slogdet(A)
        logdet = n * math.log(sigma2) + ld
        quad = (yty - (tau2 / sigma2) * float(
            Xty @ np.linalg.solve(A, Xty))) / sigma2
    return -0.5 * (n * math.log(2 * math.pi) + logdet + quad)


def _posterior_mean_given_model(Xty, G, sigma2, tau2) -> np.ndarray:
    q = len(Xty)
    if q == 0:
        return np.zeros(0)
    A = G / sigma2 + np.eye(q) / tau2
    return np.linalg.solve(A, Xty / sigma2)


def exact_posterior_small(dataset: RegressionDataset,
                          matrices: DesignMatrices, prior: PriorConfig,
                          sigma_mode: str = "fixed",
                          sigma_grid: np.ndarray | None = None
                          ) -> ExactPosterior:
    """Enumerate all 2^K mother inclusion vectors (fathers always in) and
    average the closed-form Gaussian marginal likelihoods."""
    if prior.slab != "gaussian":
        raise ValueError("exact enumeration needs the Gaussian slab")
    father = tuple(n - 1 for n in matrices.N)
    is_father = np.array([idx.j == father for idx in matrices.index_order])
    mothers = np.nonzero(~is_father)[0]
    K = len(mothers)
    if K > 20:
        raise ValueError(f"{K} mother coefficients exceed the K <= 20 cap")
    y = dataset.y
    X = matrices.combined
    tau2 = prior.tau ** 2
    n = dataset.design.n
    yty = float(y @ y)
    Xty_full = X.T @ y
    G_full = X.T @ X
    omegas = {i: weight(matrices.index_order[i].j, n, prior)
              for i in mothers}

    if sigma_mode == "fixed":
        if prior.sigma_fixed is None:
            raise ValueError("sigma_mode=fixed needs a fixed sigma")
        sig_list = [(prior.sigma_fixed ** 2, 1.0)]
    elif sigma_mode == "grid":
        if sigma_grid is None:
            raise ValueError("sigma_mode=grid needs a sigma grid")
        g = np.asarray(sigma_grid, dtype=float)
        s2 = g ** 2
        dens = s2 ** (-prior.a0 - 1) * np.exp(-prior.b0 / s2)
        wts = dens * np.gradient(s2)  # trapezoid over the sigma^2 axis
        sig_list = list(zip(s2, wts / wts.sum()))
    else:
        raise ValueError(f"unknown sigma_mode {sigma_mode!r}")

    logpost = {}
    means = {}
    father_cols = list(np.nonzero(is_father)[0])
    for bits in itertools.product([0, 1], repeat=K):
        cols = father_cols + [mothers[i] for i in range(K) if bits[i]]
        Xty = Xty_full[cols]
        G = G_full[np.ix_(cols, cols)]
        lp_prior = sum(
            math.log(omegas[mothers[i]]) if bits[i]
            else math.log1p(-omegas[mothers[i]]) for i in range(K))
        accum = [(_marginal_loglik(yty, Xty, G, n, s2, tau2), wgt, s2)
                 for s2, wgt in sig_list]
        mx = max(l for l, _, _ in accum)
        ll = mx + math.log(sum(wgt * math.exp(l - mx)
                               for l, wgt, _ in accum))
        logpost[bits] = lp_prior + ll
        num = np.zeros(matrices.q)
        for l, wgt, s2 in accum:
            mz = _posterior_mean_given_model(Xty, G, s2, tau2)
            w_rel = wgt * math.exp(l - mx)
            for c, pos in enumerate(cols):
                num[pos] += w_rel * mz[c]
        denom = sum(wgt * math.exp(l - mx) for l, wgt, _ in accum)
        means[bits] = num / denom

    mx = max(logpost.values())
    z = {b: math.exp(v - mx) for b, v in logpost.items()}
    total = sum(z.values())
    probs = {b: v / total for b, v in z.items()}
    incl = np.zeros(K)
    mean_coeffs = np.zeros(matrices.q)
    for b, p in probs.items():
        for i in range(K):
            if b[i]:
                incl[i] += p
        mean_coeffs += p * means[b]
    return ExactPosterior(matrices.index_order, mothers, incl, mean_coeffs,
                          probs)


# ---------------------------------------------------------------------------
# quasi-white-noise comparator
# ---------------------------------------------------------------------------

def quasi_wn_posterior(dataset: RegressionDataset, matrices: DesignMatrices,
                       prior: PriorConfig,
                       sigma: float | None = None) -> dict:
    """Coefficient-wise spike-slab posterior for the sequence model
    Y_{j,k} = theta_{j,k} + sigma s_{j,k}^{-1/2} eps with
    Y_{j,k} = (Psi_j^T y)_k / s_{j,k} and s_{j,k} the Gram diagonal."""
    if sigma is None:
        if prior.sigma_fixed is None:
            raise ValueError("provide sigma or fix it in the prior")
        sigma = prior.sigma_fixed
    if prior.slab != "gaussian":
        raise ValueError("closed form requires the Gaussian slab")
    father = tuple(n - 1 for n in matrices.N)
    X = matrices.combined
    y = dataset.y
    n = dataset.design.n
    sigma2 = sigma ** 2
    tau = prior.tau
    out = {}
    for i, idx in enumerate(matrices.index_order):
        if idx.j == father:
            continue
        col = X[:, i]
        s = float(col @ col)
        if s == 0.0:
            raise ZeroDivisionError(f"zero Gram diagonal at {idx}")
        Y = float(col @ y) / s
        b = s * Y
        mean, v, log_bf = _slab_update_gaussian(s, b, sigma2, tau)
        omega = weight(idx.j, n, prior)
        log_odds = math.log(omega / (1 - omega)) + log_bf
        log_odds = max(-_LOG_CLAMP, min(_LOG_CLAMP, log_odds))
        p_inc = 1.0 / (1.0 + math.exp(-log_odds))
        out[idx] = {"Y": Y, "inclusion": p_inc, "slab_mean": mean,
                    "slab_var": v, "mean": p_inc * mean}
    return out


def qwn_vs_regression_report(matrices: DesignMatrices, qwn: dict,
                             draws: ChainDraws) -> dict:
    """Per-index gaps between the full-posterior draws and the comparator."""
    freq = draws.inclusion_frequency()
    mean = draws.theta.mean(axis=0) if draws.kept else np.zeros(matrices.q)
    rows = []
    for i, idx in enumerate(matrices.index_order):
        if idx not in qwn:
            continue
        rows.append({
            "index": idx,
            "inclusion_gap": abs(freq[i] - qwn[idx]["inclusion"]),
            "mean_gap": abs(mean[i] - qwn[idx]["mean"]),
        })
    if not rows:
        return {"rows": [], "max_inclusion_gap": 0.0, "max_mean_gap": 0.0}
    inc = np.array([r["inclusion_gap"] for r in rows])
    mns = np.array([r["mean_gap"] for r in rows])
    return {
        "rows": rows,
        "max_inclusion_gap": float(inc.max()),
        "max_mean_gap": float(mns.max()),
        "q90_inclusion_gap": float(np.quantile(inc, 0.9)),
        "q90_mean_gap": float(np.quantile(mns, 0.9)),
    }


# ---------------------------------------------------------------------------
# thresholding events
# ---------------------------------------------------------------------------

def _threshold(alpha: AnisoSmoothness, j, gamma: float, n: int) -> float:
    """prod_l min{2^{-alpha_l j_l (1/d + 1/(2 alpha*))},
    gamma (ln n / n)^{1/(2d)}}."""
    d, a_star = alpha.d, alpha.alpha_star
    out = 1.0
    for l in range(d):
        decay = 2.0 ** (-alpha.alpha[l] * j[l]
                        * (1.0 / d + 1.0 / (2 * a_star)))
        stat = gamma * (math.log(n) / n) ** (1.0 / (2 * d))
        out *= min(decay, stat)
    return out


def event_diagnostics(draws: ChainDraws, truth: CoefficientField,
                      alpha: AnisoSmoothness, cfg: DiagnosticsConfig,
                      n: int) -> dict:
    """Posterior frequencies of the complements of the signal-recovery
    events: A^c (a large-signal coefficient missed by more than the
    statistical threshold), B^c (a spurious inclusion outside the signal
    set), C^c (a zero draw at a strong-signal index)."""
    father = tuple(nl - 1 for nl in draws.N)
    stat = cfg.gamma_hi * math.sqrt(math.log(n) / n)
    theta0 = np.array([truth.get(idx) for idx in draws.index_order])
    is_mother = np.array([idx.j != father for idx in draws.index_order])
    in_J_lo = np.array([
        is_mother[i] and abs(theta0[i]) > _threshold(alpha, idx.j,
                                                     cfg.gamma_lo, n)
        for i, idx in enumerate(draws.index_order)])
    strong = is_mother & (np.abs(theta0) > stat)
    kept = draws.theta[cfg.burnin::cfg.thin]
    if kept.shape[0] == 0:
        return {"A_c": 0.0, "B_c": 0.0, "C_c": 0.0, "draws": 0}
    a_viol = np.any(np.abs(kept[:, in_J_lo] - theta0[in_J_lo]) > stat,
                    axis=1) if in_J_lo.any() else np.zeros(len(kept), bool)
    outside = is_mother & ~in_J_lo
    b_viol = np.any(kept[:, outside] != 0.0, axis=1) if outside.any() \
        else np.zeros(len(kept), bool)
    c_viol = np.any(kept[:, strong] == 0.0, axis=1) if strong.any() \
        else np.zeros(len(kept), bool)
    return {
        "A_c": float(np.mean(a_viol)),
        "B_c": float(np.mean(b_viol)),
        "C_c": float(np.mean(c_viol)),
        "draws": int(kept.shape[0]),
    }


# ---------------------------------------------------------------------------
# error functionals
# ---------------------------------------------------------------------------

def sup_error(estimate: CoefficientField, truth: CoefficientField,
              basis: Basis, r=None, grid_resolution: int = 2 ** 10) -> float:
    """Dense tensor-grid sup of |D^r estimate - D^r truth|."""
    d = estimate.d
    if r is None:
        r = (0,) * d
    axes = [np.linspace(0.0, 1.0, grid_resolution + 1) for _ in range(d)]
    diff = estimate.copy()
    for idx, v in truth.nonzero_items():
        diff.set(idx, diff.get(idx) - v)
    vals = eval_field_grid(diff, basis, axes, tuple(r))
    return float(np.max(np.abs(vals)))


def l2_error(estimate: CoefficientField, truth: CoefficientField,
             basis: Basis, dataset: RegressionDataset) -> float:
    """Root mean square of estimate - truth over the design points."""
    from .design import eval_design
    diff = estimate.copy()
    for idx, v in truth.nonzero_items():
        diff.set(idx, diff.get(idx) - v)
    vals = eval_design(diff, basis, dataset.design)
    return float(np.sqrt(np.mean(vals ** 2)))
