"""Sup-norm testing machinery: least-squares projection estimator, plug-in
test with inflated separation, likelihood-ratio test against the adversarial
single-bump alternative, and the type-II error experiment."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_factor, cho_solve
from scipy.stats import norm

from .basis import Basis, TensorIndex
from .design import Design, RegressionDataset, eval_design
from .funcspace import (
    AnisoSmoothness,
    BesovBallSpec,
    CoefficientField,
    besov_norm,
    eval_field_grid,
    rate_eps,
)
from .gram import DesignMatrices, build_matrices, gram_eigen_range

__all__ = [
    "TestConfig",
    "ls_fit",
    "plugin_levels",
    "separation_rho",
    "plugin_test",
    "adversarial_alternative",
    "lr_test",
    "calibrate_m0",
    "type2_experiment",
]


@dataclass(frozen=True)
class TestConfig:
    alpha: AnisoSmoothness
    R: float = 1.0
    M: float = 2.0  # separation constant
    M0: float = 1.0  # test threshold constant, 0 < M0 < M
    sigma0: float = 1.0
    level: float = 0.05
    replicates: int = 100
    n_grid: tuple[int, ...] = (2 ** 10, 2 ** 11, 2 ** 12, 2 ** 13)

    def __post_init__(self):
        if not 0 < self.M0 < self.M:
            raise ValueError("need 0 < M0 < M")
        if not 0 < self.level < 1:
            raise ValueError("level must be in (0,1)")


def plugin_levels(n: int, alpha: AnisoSmoothness) -> tuple[int, ...]:
    """h with 2^{h_l} = eps_n^{-2 alpha*/(alpha_l (2 alpha* + d))},
    floored to integers (at least 1)."""
    if n < 8:
        raise ValueError("need n >= 8")
    eps = rate_eps(n, alpha)
    a_star, d = alpha.alpha_star, alpha.d
    out = []
    for l in range(d):
        expo = 2 * a_star / (alpha.alpha[l] * (2 * a_star + d))
        out.append(max(1, math.floor(math.log2(eps ** -expo))))
    return tuple(out)


def separation_rho(n: int, alpha: AnisoSmoothness) -> float:
    """rho_n = eps_n^{-d/(2 alpha* + d)}."""
    eps = rate_eps(n, alpha)
    return float(eps ** (-alpha.d / (2 * alpha.alpha_star + alpha.d)))


def ls_fit(dataset: RegressionDataset, basis: Basis, N, J,
           matrices: DesignMatrices | None = None) -> CoefficientField:
    """Least-squares projection onto the wavelet span at truncation J."""
    M = matrices if matrices is not None else build_matrices(
        basis, N, J, dataset.design)
    lo, _ = gram_eigen_range(M)
    if lo <= 1e-10 * dataset.design.n:
        raise np.linalg.LinAlgError("design matrix is rank deficient at "
                                    f"levels {J}")
    G = M.combined.T @ M.combined
    coef = cho_solve(cho_factor(G), M.combined.T @ dataset.y)
    out = CoefficientField.zero(M.N, M.J)
    for i, idx in enumerate(M.index_order):
        out.set(idx, float(coef[i]))
    return out


def _sup_distance(a: CoefficientField, b: CoefficientField | None,
                  basis: Basis, resolution: int = 2 ** 10) -> float:
    diff = a.copy()
    if b is not None:
        for idx, v in b.nonzero_items():
            diff.set(idx, diff.get(idx) - v)
    axes = [np.linspace(0.0, 1.0, resolution + 1) for _ in range(a.d)]
    return float(np.max(np.abs(eval_field_grid(diff, basis, axes))))


def plugin_test(dataset: RegressionDataset, f0: CoefficientField,
                basis: Basis, cfg: TestConfig,
                matrices: DesignMatrices | None = None) -> bool:
    """Reject iff the sup distance of the plug-in estimator from f0 exceeds
    M0 rho_n eps_n."""
    n = dataset.design.n
    h = plugin_levels(n, cfg.alpha)
    N = f0.N
    J = tuple(max(h[l], N[l]) for l in range(len(N)))
    fit = ls_fit(dataset, basis, N, J, matrices)
    thresh = cfg.M0 * separation_rho(n, cfg.alpha) * rate_eps(n, cfg.alpha)
    return _sup_distance(fit, f0, basis) > thresh


def adversarial_alternative(f0: CoefficientField, alpha: AnisoSmoothness,
                            R: float, n: int,
                            ball: BesovBallSpec | None = None
                            ) -> CoefficientField:
    """f0 plus a single bump at the balanced high levels
    2^{j_l} ~ (n/ln n)^{alpha*/(alpha_l(2 alpha*+d))}, k = 0, with magnitude
    R eps_n 2^{-sum j_l/2} (so the sup-norm displacement is R eps_n)."""
    a_star, d = alpha.alpha_star, alpha.d
    eps = rate_eps(n, alpha)
    j_star = []
    for l in range(d):
        expo = a_star / (alpha.alpha[l] * (2 * a_star + d))
        j_star.append(math.floor(math.log2(
            (n / math.log(n)) ** expo)))
    j_star = tuple(max(f0.N[l], j) for l, j in enumerate(j_star))
    bump = R * eps * 2.0 ** (-sum(j_star) / 2.0)
    g = f0.copy()
    if any(j_star[l] >= g.J[l] for l in range(d)):
        g.J = tuple(max(g.J[l], j_star[l] + 1) for l in range(d))
    idx = TensorIndex(j_star, (0,) * d)
    g.set(idx, g.get(idx) + bump)
    check_ball = ball or BesovBallSpec(alpha, R)
    if besov_norm(g, check_ball) > R * (1 + 1e-9):
        raise ValueError("bump exceeds the Besov radius: no headroom")
    return g


def lr_test(dataset: RegressionDataset, f0: CoefficientField,
            g: CoefficientField, basis: Basis, delta: float = 0.05) -> bool:
    """Likelihood-ratio test of f0 against g with known sigma0, threshold
    from the exact Gaussian null distribution of the statistic."""
    sigma0 = dataset.sigma0
    if sigma0 <= 0:
        f0_vals = eval_design(f0, basis, dataset.design)
        g_vals = eval_design(g, basis, dataset.design)
        return float(np.sum((dataset.y - g_vals) ** 2)) < float(
            np.sum((dataset.y - f0_vals) ** 2))
    f0_vals = eval_design(f0, basis, dataset.design)
    g_vals = eval_design(g, basis, dataset.design)
    delta_vals = g_vals - f0_vals
    nd2 = float(delta_vals @ delta_vals)
    T = float(np.sum((dataset.y - f0_vals) ** 2
                     - (dataset.y - g_vals) ** 2)) / (2 * sigma0 ** 2)
    # under H0: T ~ Normal(-nd2/(2 sigma0^2), nd2/sigma0^2)
    mean0 = -nd2 / (2 * sigma0 ** 2)
    sd0 = math.sqrt(nd2) / sigma0
    if sd0 == 0.0:
        return False
    return T > mean0 + norm.ppf(1 - delta) * sd0


def calibrate_m0(f0: CoefficientField, basis: Basis, design: Design,
                 cfg: TestConfig, n: int, replicates: int,
                 rng: np.random.Generator) -> float:
    """M0 as the (1 - level) null quantile of sup error / (rho_n eps_n),
    inflated slightly to keep type I below the level."""
    from .design import gen_data

    h = plugin_levels(n, cfg.alpha)
    N = f0.N
    J = tuple(max(h[l], N[l]) for l in range(len(N)))
    M = build_matrices(basis, N, J, design)
    sups = []
    for _ in range(replicates):
        ds = gen_data(f0, basis, design, cfg.sigma0, rng)
        fit = ls_fit(ds, basis, N, J, M)
        sups.append(_sup_distance(fit, f0, basis))
    scale = separation_rho(n, cfg.alpha) * rate_eps(n, cfg.alpha)
    return 1.1 * float(np.quantile(sups, 1 - cfg.level)) / scale


def _inspan_alternative(f0: CoefficientField, basis: Basis,
                        cfg: TestConfig, n: int) -> CoefficientField:
    """Alternative at separation M rho_n eps_n, placed inside the plug-in
    span so the test has the power the theory promises."""
    h = plugin_levels(n, cfg.alpha)
    sep = cfg.M * separation_rho(n, cfg.alpha) * rate_eps(n, cfg.alpha)
    f1 = f0.copy()
    # father bump: for haar the father is flat with sup 2^{N/2} per axis
    idx = TensorIndex(tuple(nl - 1 for nl in f0.N), (0,) * f0.d)
    base = f1.copy()
    base.father = np.zeros_like(base.father)
    base.mother = {}
    base.set(idx, 1.0)
    sup1 = _sup_distance(base, None, basis)
    f1.set(idx, f1.get(idx) + sep / sup1)
    return f1


def type2_experiment(cfg: TestConfig, basis: Basis, N,
                     master_seed: int = 0,
                     design_factory=None,
                     threads: int = 1) -> dict:
    """Per n: adversarial alternative, LR type-II rate under g; plug-in
    type-I under f0 and type-II at separation M rho_n eps_n; then fitted
    polynomial (log error vs log n) and exponential (log error vs n eps_n^2)
    models for the LR curve."""
    from .cli import child_seed, parallel_map
    from .design import gen_data, make_midpoint_grid

    if design_factory is None:
        design_factory = lambda n: make_midpoint_grid(n, 1)

    rows = []
    for n in cfg.n_grid:
        design = design_factory(n)
        f0 = CoefficientField.zero(N, tuple(nl + 1 for nl in N))
        g = adversarial_alternative(f0, cfg.alpha, cfg.R, n)
        rng_cal = np.random.default_rng(child_seed(master_seed, n, 10 ** 6))
        m0 = calibrate_m0(f0, basis, design, cfg, n, 200, rng_cal)
        cfg_n = TestConfig(cfg.alpha, cfg.R, max(cfg.M, 2.5 * m0), m0,
                           cfg.sigma0, cfg.level, cfg.replicates, cfg.n_grid)
        f1 = _inspan_alternative(f0, basis, cfg_n, n)
        h = plugin_levels(n, cfg.alpha)
        J = tuple(max(h[l], N[l]) for l in range(len(N)))
        M = build_matrices(basis, N, J, design)

        def one_rep(rep: int):
            rng = np.random.default_rng(child_seed(master_seed, n, rep))
            ds_g = gen_data(g, basis, design, cfg.sigma0, rng)
            lr_acc = not lr_test(ds_g, f0, g, basis, cfg.level)
            ds_0 = gen_data(f0, basis, design, cfg.sigma0, rng)
            pi_rej = plugin_test(ds_0, f0, basis, cfg_n, M)
            ds_1 = gen_data(f1, basis, design, cfg.sigma0, rng)
            pii_acc = not plugin_test(ds_1, f0, basis, cfg_n, M)
            return rep, (lr_acc, pi_rej, pii_acc)

        results = parallel_map(one_rep, range(cfg.replicates), threads)
        arr = np.array([results[r] for r in range(cfg.replicates)],
                       dtype=float)
        rows.append({
            "n": n,
            "eps_n": rate_eps(n, cfg.alpha),
            "rho_n": separation_rho(n, cfg.alpha),
            "lr_type2": float(arr[:, 0].mean()),
            "plugin_type1": float(arr[:, 1].mean()),
            "plugin_type2": float(arr[:, 2].mean()),
            "seeds": f"{child_seed(master_seed, n, 0)}",
        })

    fits = _fit_type2_models(rows, cfg)
    return {"rows": rows, **fits}


def _fit_type2_models(rows: list[dict], cfg: TestConfig) -> dict:
    """Least-squares fits of log(type II): polynomial model against log n,
    exponential model against n eps_n^2; censored (zero) rates excluded."""
    pts = [(r["n"], r["lr_type2"], r["eps_n"]) for r in rows
           if r["lr_type2"] > 0]
    censored = [r["n"] for r in rows if r["lr_type2"] == 0]
    if len(pts) < 2:
        return {"poly_slope": math.nan, "poly_resid": math.nan,
                "exp_resid": math.nan, "censored": censored}
    ln_n = np.array([math.log(p[0]) for p in pts])
    ln_e = np.array([math.log(p[1]) for p in pts])
    ne2 = np.array([p[0] * p[2] ** 2 for p in pts])

    def fit(x, y):
        A = np.column_stack([x, np.ones_like(x)])
        coef, *_ = np.linalg.lstsq(A, y, rcond=None)
        resid = y - A @ coef
        return coef, float(np.sqrt(np.mean(resid ** 2)))

    (poly_slope, _), poly_resid = fit(ln_n, ln_e)
    (_, _), exp_resid = fit(ne2, ln_e)
    return {
        "poly_slope": float(-poly_slope),  # Q hat in n^{-Q}
        "poly_resid": poly_resid,
        "exp_resid": exp_resid,
        "censored": censored,
    }


def type2_to_csv(result: dict, path: str) -> None:
    cols = ["n", "eps_n", "rho_n", "lr_type2", "plugin_type1",
            "plugin_type2", "seeds"]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(cols)
        for r in result["rows"]:
            w.writerow([r["n"]] + [f"{r[c]:.10g}" if c != "seeds" else r[c]
                                   for c in cols[1:]])
