"""Experiment orchestration: JSON specs, deterministic seeding, worker-pool
fan-out, result CSVs with embedded spec hashes, SVG plots, and the wavess
command-line entry point."""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .basis import BasisSpec, build_basis
from .design import gen_data, make_midpoint_grid
from .funcspace import (
    AnisoSmoothness,
    BesovBallSpec,
    sample_truth,
)
from .gram import build_matrices
from .posterior import (
    DiagnosticsConfig,
    GibbsConfig,
    PriorConfig,
    default_truncation,
    event_diagnostics,
    exact_posterior_small,
    l2_error,
    posterior_mean_field,
    quasi_wn_posterior,
    run_chain,
    sup_error,
)

__all__ = [
    "ExperimentSpec",
    "load_spec",
    "child_seed",
    "parallel_map",
    "main",
]

MODES = ("rates", "events", "oracle-check", "qwn-check", "tests",
         "basis-check")


def child_seed(master: int, n: int, rep: int) -> int:
    """Deterministic per-replicate seed: stable hash of (master, n, rep)."""
    h = hashlib.sha256(
        b"wavess:%d:%d:%d" % (master, n, rep)).digest()
    return int.from_bytes(h[:8], "little")


def parallel_map(fn, items, threads: int) -> dict:
    """Apply fn over items on a bounded pool; fn returns (key, value).
    Results are keyed then collected, so the output is independent of the
    execution order and of the thread count."""
    items = list(items)
    out = {}
    if threads <= 1 or len(items) <= 1:
        for it in items:
            k, v = fn(it)
            out[k] = v
        return out
    with ThreadPoolExecutor(max_workers=threads) as pool:
        for k, v in pool.map(fn, items):
            out[k] = v
    return out


# ---------------------------------------------------------------------------
# spec handling
# ---------------------------------------------------------------------------

class SpecError(ValueError):
    pass


_PRIOR_KEYS = {"slab", "tau", "laplace_scale", "R0", "weight_lambda",
               "weight_mu", "a0", "b0", "sigma_fixed",
               "truncation_exponent"}
_GIBBS_KEYS = {"iters", "burnin", "thin"}
_TOP_KEYS = {"mode", "d", "alpha", "r", "R", "n_grid", "replicates",
             "prior", "gibbs", "seed", "out_dir", "family", "boundary",
             "base_level", "cascade_depth", "sigma0", "gamma_lo",
             "gamma_hi", "M", "M0", "level"}


@dataclass
class ExperimentSpec:
    mode: str
    d: int = 1
    alpha: tuple[float, ...] = (1.0,)
    r: tuple[int, ...] = (0,)
    R: float = 1.0
    n_grid: tuple[int, ...] = (1024, 2048, 4096, 8192)
    replicates: int = 4
    prior: PriorConfig = field(default_factory=PriorConfig)
    gibbs: GibbsConfig = field(default_factory=GibbsConfig)
    seed: int = 0
    out_dir: str = "."
    family: str = "haar"
    boundary: str = "cdv"
    base_level: tuple[int, ...] = (1,)
    cascade_depth: int = 12
    sigma0: float = 0.5
    gamma_lo: float = 0.5
    gamma_hi: float = 4.0
    M: float = 2.0
    M0: float = 1.0
    level: float = 0.05

    def __post_init__(self):
        if self.mode not in MODES:
            raise SpecError(f"unknown mode {self.mode!r}")
        self.alpha = tuple(float(a) for a in np.atleast_1d(self.alpha))
        self.r = tuple(int(v) for v in np.atleast_1d(self.r))
        self.n_grid = tuple(int(n) for n in self.n_grid)
        self.base_level = tuple(int(b) for b in
                                np.atleast_1d(self.base_level))
        if len(self.base_level) == 1 and self.d > 1:
            self.base_level = self.base_level * self.d
        if len(self.alpha) == 1 and self.d > 1:
            self.alpha = self.alpha * self.d
        if len(self.r) == 1 and self.d > 1:
            self.r = self.r * self.d
        if list(self.n_grid) != sorted(set(self.n_grid)):
            raise SpecError("n_grid must be strictly increasing")
        if self.replicates < 1:
            raise SpecError("replicate count must be >= 1")
        eta = 0.0 if self.family == "haar" else 1.0
        if any(rl >= eta + 1 for rl in self.r):
            raise SpecError(f"derivative order {self.r} not admissible for "
                            f"family {self.family}")

    def basis_spec(self) -> BasisSpec:
        p = 2
        return BasisSpec(family=self.family, p=p, boundary=self.boundary,
                         cascade_depth=self.cascade_depth,
                         base_level=self.base_level)

    def canonical_json(self) -> str:
        obj = {
            "mode": self.mode, "d": self.d, "alpha": list(self.alpha),
            "r": list(self.r), "R": self.R, "n_grid": list(self.n_grid),
            "replicates": self.replicates,
            "prior": {k: getattr(self.prior, k if k != "weight_mu" else k)
                      for k in sorted(_PRIOR_KEYS)},
            "gibbs": {k: getattr(self.gibbs, k)
                      for k in sorted(_GIBBS_KEYS)},
            "seed": self.seed, "family": self.family,
            "boundary": self.boundary,
            "base_level": list(self.base_level),
            "cascade_depth": self.cascade_depth, "sigma0": self.sigma0,
            "gamma_lo": self.gamma_lo, "gamma_hi": self.gamma_hi,
            "M": self.M, "M0": self.M0, "level": self.level,
        }
        obj["prior"]["weight_mu"] = list(self.prior.weight_mu)
        return json.dumps(obj, sort_keys=True, separators=(",", ":"))

    def spec_hash(self) -> str:
        return hashlib.sha256(self.canonical_json().encode()).hexdigest()[:16]


def load_spec(path: str) -> ExperimentSpec:
    try:
        with open(path) as fh:
            obj = json.load(fh)
    except json.JSONDecodeError as e:
        raise SpecError(f"spec parse error at line {e.lineno}: {e.msg}")
    except OSError as e:
        raise SpecError(f"cannot read spec: {e}")
    if not isinstance(obj, dict):
        raise SpecError("spec must be a JSON object")
    unknown = set(obj) - _TOP_KEYS
    if unknown:
        raise SpecError(f"unknown spec keys: {sorted(unknown)}")
    kwargs = dict(obj)
    if "prior" in kwargs:
        pk = set(kwargs["prior"]) - _PRIOR_KEYS
        if pk:
            raise SpecError(f"unknown prior keys: {sorted(pk)}")
        kwargs["prior"] = PriorConfig(**kwargs["prior"])
    if "gibbs" in kwargs:
        gk = set(kwargs["gibbs"]) - _GIBBS_KEYS
        if gk:
            raise SpecError(f"unknown gibbs keys: {sorted(gk)}")
        kwargs["gibbs"] = GibbsConfig(**kwargs["gibbs"])
    if "mode" not in kwargs:
        raise SpecError("spec must set a mode")
    try:
        return ExperimentSpec(**kwargs)
    except (TypeError, ValueError) as e:
        raise SpecError(str(e))


def save_result_csv(path: str, header: list[str], rows: list[list],
                    spec_hash: str) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(f"# spec_hash={spec_hash}\n")
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow(row)


def load_result_csv(path: str, expect_hash: str | None = None):
    with open(path) as fh:
        first = fh.readline().strip()
        if not first.startswith("# spec_hash="):
            raise ValueError("result file missing spec hash")
        h = first.split("=", 1)[1]
        if expect_hash is not None and h != expect_hash:
            raise ValueError(f"spec hash mismatch: {h} != {expect_hash}")
        rd = csv.reader(fh)
        header = next(rd)
        return header, [row for row in rd], h


def _fmt(x) -> str:
    if isinstance(x, float):
        return f"{x:.10g}"
    return str(x)


# ---------------------------------------------------------------------------
# experiment runners
# ---------------------------------------------------------------------------

def _design_for(n: int, d: int):
    if d == 1:
        return make_midpoint_grid(n, 1)
    m = round(n ** (1.0 / d))
    return make_midpoint_grid(m, d)


def _run_one_replicate(spec: ExperimentSpec, basis, n: int, rep: int):
    rng = np.random.default_rng(child_seed(spec.seed, n, rep))
    sm = AnisoSmoothness(spec.alpha)
    N = spec.base_level
    J = default_truncation(n, spec.d, spec.prior.truncation_exponent, N)
    ball = BesovBallSpec(sm, spec.R)
    # one truth per replicate, fixed across the whole n grid and stored to a
    # depth beyond every posterior truncation, so the fit sees the genuine
    # bias-variance tradeoff of a single f0
    rng_truth = np.random.default_rng(child_seed(spec.seed, 0, rep))
    J_truth = tuple(max(nl + 7, 8) for nl in N) if spec.d == 1 else \
        tuple(nl + 4 for nl in N)
    truth = sample_truth(ball, N, J_truth, rng_truth, "envelope")
    design = _design_for(n, spec.d)
    ds = gen_data(truth, basis, design, spec.sigma0, rng,
                  seed=child_seed(spec.seed, n, rep))
    M = build_matrices(basis, N, J, design)
    draws = run_chain(ds, M, spec.prior, spec.gibbs, rng)
    mean = posterior_mean_field(draws)
    sup = sup_error(mean, truth, basis, spec.r)
    l2 = l2_error(mean, truth, basis, ds)
    sig = float(np.median(np.sqrt(draws.sigma2))) if draws.kept else math.nan
    return draws, truth, {"n": n, "replicate": rep,
                          "seed": child_seed(spec.seed, n, rep),
                          "sup_error": sup, "l2_error": l2,
                          "sigma_median": sig}


def run_rates(spec: ExperimentSpec, threads: int) -> dict:
    basis = build_basis(spec.basis_spec())
    jobs = [(n, rep) for n in spec.n_grid for rep in range(spec.replicates)]

    def one(job):
        n, rep = job
        _, _, row = _run_one_replicate(spec, basis, n, rep)
        return job, row

    results = parallel_map(one, jobs, threads)
    rows = [results[j] for j in jobs]
    agg = []
    for n in spec.n_grid:
        sups = [r["sup_error"] for r in rows if r["n"] == n]
        agg.append({"n": n, "mean_sup": float(np.mean(sups)),
                    "mean_l2": float(np.mean(
                        [r["l2_error"] for r in rows if r["n"] == n]))})
    sm = AnisoSmoothness(spec.alpha)
    theo = -(sm.alpha_star
             * (1 - sum(spec.r[l] / sm.alpha[l] for l in range(sm.d)))
             / (2 * sm.alpha_star + sm.d))
    slope, stderr = math.nan, math.nan
    if len(agg) >= 2:
        x = np.array([math.log(a["n"] / math.log(a["n"])) for a in agg])
        y = np.array([math.log(a["mean_sup"]) for a in agg])
        A = np.column_stack([x, np.ones_like(x)])
        coef, res, *_ = np.linalg.lstsq(A, y, rcond=None)
        slope = float(coef[0])
        dof = len(x) - 2
        if dof > 0 and res.size:
            s2 = float(res[0]) / dof
            stderr = math.sqrt(s2 / float(np.sum((x - x.mean()) ** 2)))
    return {"rows": rows, "aggregate": agg, "slope": slope,
            "slope_stderr": stderr, "theoretical_slope": theo}


def run_events(spec: ExperimentSpec, threads: int) -> dict:
    basis = build_basis(spec.basis_spec())
    sm = AnisoSmoothness(spec.alpha)
    cfg = DiagnosticsConfig(spec.gamma_lo, spec.gamma_hi)
    jobs = [(n, rep) for n in spec.n_grid for rep in range(spec.replicates)]

    def one(job):
        n, rep = job
        draws, truth, _ = _run_one_replicate(spec, basis, n, rep)
        return job, event_diagnostics(draws, truth, sm, cfg, n)

    results = parallel_map(one, jobs, threads)
    rows = []
    for n in spec.n_grid:
        for ev in ("A_c", "B_c", "C_c"):
            freq = float(np.mean([results[(n, rep)][ev]
                                  for rep in range(spec.replicates)]))
            rows.append({"n": n, "event": ev, "frequency": freq})
    return {"rows": rows}


def _oracle_problem(spec: ExperimentSpec):
    """Small haar problem with an exactly enumerable mother set."""
    from .basis import TensorIndex
    from .funcspace import CoefficientField

    bspec = BasisSpec(family="haar", base_level=(1,))
    basis = build_basis(bspec)
    N, J = (1,), (3,)
    design = make_midpoint_grid(128, 1)
    truth = CoefficientField.zero(N, J)
    truth.set(TensorIndex((0,), (0,)), 0.5)
    truth.set(TensorIndex((1,), (1,)), 0.4)
    truth.set(TensorIndex((2,), (3,)), 0.15)
    rng = np.random.default_rng(child_seed(spec.seed, 128, 0))
    prior = PriorConfig(slab="gaussian", tau=2.0, sigma_fixed=1.0)
    ds = gen_data(truth, basis, design, 1.0, rng)
    M = build_matrices(basis, N, J, design)
    return basis, ds, M, prior


def run_oracle_check(spec: ExperimentSpec, threads: int) -> dict:
    basis, ds, M, prior = _oracle_problem(spec)
    exact = exact_posterior_small(ds, M, prior, "fixed")
    rng = np.random.default_rng(child_seed(spec.seed, 128, 1))
    draws = run_chain(ds, M, prior, GibbsConfig(iters=20000, burnin=1000),
                      rng)
    freq = draws.inclusion_frequency()
    gaps = np.abs(freq[exact.mother_idx] - exact.inclusion_prob)
    mean_gap = float(np.max(np.abs(draws.theta.mean(axis=0)
                                   - exact.mean_coeffs)))
    rows = [{"j": " ".join(map(str, M.index_order[i].j)),
             "k": " ".join(map(str, M.index_order[i].k)),
             "exact": float(exact.inclusion_prob[c]),
             "gibbs": float(freq[i]),
             "gap": float(gaps[c])}
            for c, i in enumerate(exact.mother_idx)]
    ok = float(np.max(gaps)) <= 0.02 and mean_gap <= 0.02
    return {"rows": rows, "max_gap": float(np.max(gaps)),
            "max_mean_gap": mean_gap, "ok": ok}


def run_qwn_check(spec: ExperimentSpec, threads: int) -> dict:
    basis, ds, M, prior = _oracle_problem(spec)
    exact = exact_posterior_small(ds, M, prior, "fixed")
    qwn = quasi_wn_posterior(ds, M, prior)
    rows, worst = [], 0.0
    for c, i in enumerate(exact.mother_idx):
        idx = M.index_order[i]
        gap_inc = abs(qwn[idx]["inclusion"] - exact.inclusion_prob[c])
        gap_mean = abs(qwn[idx]["mean"] - exact.mean_coeffs[i])
        worst = max(worst, gap_inc, gap_mean)
        rows.append({"j": " ".join(map(str, idx.j)),
                     "k": " ".join(map(str, idx.k)),
                     "inclusion_gap": gap_inc, "mean_gap": gap_mean})
    return {"rows": rows, "max_gap": worst, "ok": worst <= 1e-6}


def run_tests(spec: ExperimentSpec, threads: int) -> dict:
    from .bench import TestConfig, type2_experiment

    basis = build_basis(spec.basis_spec())
    cfg = TestConfig(AnisoSmoothness(spec.alpha), spec.R, spec.M, spec.M0,
                     spec.sigma0 if spec.sigma0 > 0 else 1.0, spec.level,
                     spec.replicates, spec.n_grid)
    return type2_experiment(cfg, basis, spec.base_level, spec.seed,
                            threads=threads)


def run_basis_check(spec: ExperimentSpec, threads: int) -> dict:
    basis = build_basis(spec.basis_spec())
    design = make_midpoint_grid(1024, 1)
    N = spec.base_level
    J = tuple(nl + 4 for nl in N)
    M = build_matrices(basis, N, J, design)
    G = M.combined.T @ M.combined
    dev = float(np.max(np.abs(G - design.n * np.eye(M.q))))
    ok = dev < 1e-9 if spec.family == "haar" else dev < 0.5 * design.n
    return {"rows": [{"check": "midpoint_gram", "deviation": dev}],
            "max_gap": dev, "ok": ok}


# ---------------------------------------------------------------------------
# plots
# ---------------------------------------------------------------------------

def emit_plots(result: dict, out_dir: str, spec: ExperimentSpec) -> list[str]:
    import matplotlib

    matplotlib.use("svg")
    matplotlib.rcParams["svg.hashsalt"] = "wavess"
    import matplotlib.pyplot as plt

    files = []
    agg = result.get("aggregate")
    if agg and len(agg) >= 2:
        fig, ax = plt.subplots(figsize=(5, 4))
        x = np.array([a["n"] / math.log(a["n"]) for a in agg])
        y = np.array([a["mean_sup"] for a in agg])
        ax.loglog(x, y, "o-", label="mean sup error")
        theo = result.get("theoretical_slope", math.nan)
        if np.isfinite(theo):
            guide = y[0] * (x / x[0]) ** theo
            ax.loglog(x, guide, "--", label=f"slope {theo:.3f}")
        ax.set_xlabel("n / ln n")
        ax.set_ylabel("sup error")
        ax.legend()
        path = os.path.join(out_dir, "rates.svg")
        fig.savefig(path, metadata={"Date": None})
        plt.close(fig)
        files.append(path)
    rows = result.get("rows")
    if rows and rows and "event" in rows[0]:
        fig, ax = plt.subplots(figsize=(5, 4))
        for ev in ("A_c", "B_c", "C_c"):
            pts = [(r["n"], r["frequency"]) for r in rows
                   if r["event"] == ev]
            if pts:
                ax.semilogx([p[0] for p in pts], [p[1] for p in pts],
                            "o-", label=ev)
        ax.set_xlabel("n")
        ax.set_ylabel("frequency")
        ax.legend()
        path = os.path.join(out_dir, "events.svg")
        fig.savefig(path, metadata={"Date": None})
        plt.close(fig)
        files.append(path)
    return files


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

def _write_outputs(spec: ExperimentSpec, result: dict, out_dir: str) -> None:
    os.makedirs(out_dir, exist_ok=True)
    h = spec.spec_hash()
    rows = result.get("rows", [])
    if rows:
        header = list(rows[0].keys())
        save_result_csv(os.path.join(out_dir, "results.csv"), header,
                        [[_fmt(r[c]) for c in header] for r in rows], h)
    agg = result.get("aggregate")
    if agg:
        header = list(agg[0].keys())
        save_result_csv(os.path.join(out_dir, "aggregate.csv"), header,
                        [[_fmt(r[c]) for c in header] for r in agg], h)
    summary = {k: v for k, v in result.items()
               if k not in ("rows", "aggregate")}
    with open(os.path.join(out_dir, "summary.json"), "w") as fh:
        json.dump({"spec_hash": h, "spec": json.loads(spec.canonical_json()),
                   **summary}, fh, indent=2, sort_keys=True, default=str)


RUNNERS = {
    "rates": run_rates,
    "events": run_events,
    "oracle-check": run_oracle_check,
    "qwn-check": run_qwn_check,
    "tests": run_tests,
    "basis-check": run_basis_check,
}

CHECK_MODES = ("oracle-check", "qwn-check", "basis-check")


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(
        prog="wavess",
        description="spike-and-slab wavelet regression experiments")
    ap.add_argument("mode", choices=MODES)
    ap.add_argument("--spec", required=True)
    ap.add_argument("--out", default=None)
    ap.add_argument("--seed", type=int, default=None)
    ap.add_argument("--threads", type=int, default=None)
    args = ap.parse_args(argv)

    threads = args.threads
    if threads is None:
        threads = int(os.environ.get("WAVESS_THREADS", "1"))

    try:
        spec = load_spec(args.spec)
        if spec.mode != args.mode:
            spec.mode = args.mode
        if args.seed is not None:
            spec.seed = args.seed
    except SpecError as e:
        print(f"spec error: {e}", file=sys.stderr)
        return 2

    out_dir = args.out or spec.out_dir
    try:
        result = RUNNERS[args.mode](spec, threads)
    except SpecError as e:
        print(f"spec error: {e}", file=sys.stderr)
        return 2
    _write_outputs(spec, result, out_dir)
    if args.mode in ("rates", "events"):
        emit_plots(result, out_dir, spec)
    if args.mode == "tests":
        from .bench import type2_to_csv
        type2_to_csv(result, os.path.join(out_dir, "type2.csv"))
    if args.mode in CHECK_MODES and not result.get("ok", True):
        print(f"check failed: max gap {result.get('max_gap')}",
              file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
