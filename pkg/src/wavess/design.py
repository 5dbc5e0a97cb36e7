"""Designs on [0,1]^d, empirical-CDF discrepancy, data generation, and the
Riemann-sum gap diagnostic."""

from __future__ import annotations

import csv
import itertools
import json
import math
from dataclasses import dataclass

import numpy as np

from .basis import Basis
from .funcspace import CoefficientField, eval_field_grid

__all__ = [
    "Design",
    "RegressionDataset",
    "make_grid_design",
    "make_midpoint_grid",
    "sample_uniform_design",
    "cdf_discrepancy",
    "gen_data",
    "riemann_gap",
]


@dataclass(frozen=True)
class Design:
    points: np.ndarray  # n x d, all coordinates in [0,1]
    kind: str  # grid | midpoint_grid | uniform_random
    seed: int | None = None

    def __post_init__(self):
        pts = np.atleast_2d(np.asarray(self.points, dtype=float))
        object.__setattr__(self, "points", pts)
        if pts.size and (pts.min() < 0.0 or pts.max() > 1.0):
            raise ValueError("design coordinates must lie in [0,1]")

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def d(self) -> int:
        return self.points.shape[1]


@dataclass(frozen=True)
class RegressionDataset:
    design: Design
    y: np.ndarray
    sigma0: float
    truth_ref: str = ""
    seed: int | None = None

    def __post_init__(self):
        y = np.asarray(self.y, dtype=float).reshape(-1)
        object.__setattr__(self, "y", y)
        if len(y) != self.design.n:
            raise ValueError("response length must match design size")
        if not (self.sigma0 >= 0 and np.isfinite(self.sigma0)):
            raise ValueError("sigma0 must be finite and nonnegative")

    def to_csv(self, path: str) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow([f"x_{l+1}" for l in range(self.design.d)] + ["y"])
            for i in range(self.design.n):
                w.writerow([f"{v:.17g}" for v in self.design.points[i]]
                           + [f"{self.y[i]:.17g}"])
        with open(path + ".json", "w") as fh:
            json.dump({"sigma0": self.sigma0, "seed": self.seed,
                       "kind": self.design.kind,
                       "truth_ref": self.truth_ref}, fh)


def _tensorize(axis_points: np.ndarray, d: int, kind: str) -> Design:
    cols = list(itertools.product(axis_points, repeat=d))
    return Design(np.array(cols, dtype=float).reshape(-1, d), kind)


def make_grid_design(m: int, d: int) -> Design:
    """Full tensor grid with coordinates (j-1)/(m-1), j = 1..m."""
    if m < 2:
        raise ValueError("grid needs m >= 2")
    return _tensorize(np.arange(m) / (m - 1), d, "grid")


def make_midpoint_grid(m: int, d: int) -> Design:
    """Full tensor grid with coordinates (2i-1)/(2m), i = 1..m."""
    if m < 1:
        raise ValueError("midpoint grid needs m >= 1")
    return _tensorize((2 * np.arange(1, m + 1) - 1) / (2 * m), d,
                      "midpoint_grid")


def sample_uniform_design(n: int, d: int, rng: np.random.Generator,
                          seed: int | None = None) -> Design:
    pts = rng.uniform(0.0, 1.0, size=(n, d))
    return Design(pts.reshape(n, d), "uniform_random", seed)


def cdf_discrepancy(design: Design, bound_only: bool = False,
                    mc_samples: int = 10 ** 5,
                    rng: np.random.Generator | None = None) -> float:
    """Exact sup_x |G_n(x) - prod_l x_l| for d <= 3 by corner enumeration
    over sorted distinct coordinates, taking both the at-point value and the
    just-below limit; d > 3 needs bound_only=True (Monte-Carlo lower bound)."""
    pts = design.points
    n, d = design.n, design.d
    if n == 0:
        raise ValueError("empty design")
    if d > 3 and not bound_only:
        raise ValueError("corner enumeration capped at d <= 3; "
                         "use bound_only=True")
    if bound_only and d > 3:
        rng = rng or np.random.default_rng(0)
        xs = rng.uniform(0, 1, size=(mc_samples, d))
        best = 0.0
        for x in xs:
            gn = np.mean(np.all(pts <= x[None, :], axis=1))
            best = max(best, abs(gn - float(np.prod(x))))
        return best
    axes = [np.unique(pts[:, l]) for l in range(d)]
    axes = [np.concatenate([ax, [1.0]]) for ax in axes]
    best = 0.0
    for corner in itertools.product(*axes):
        x = np.array(corner)
        u = float(np.prod(x))
        le = pts <= x[None, :]
        gn_at = np.mean(np.all(le, axis=1))
        lt = pts < x[None, :]
        gn_below = np.mean(np.all(lt, axis=1))
        best = max(best, abs(gn_at - u), abs(gn_below - u))
    return float(best)


def gen_data(truth: CoefficientField, basis: Basis, design: Design,
             sigma0: float, rng: np.random.Generator,
             seed: int | None = None) -> RegressionDataset:
    """y_i = f0(X_i) + sigma0 * z_i with standard normal z_i."""
    f0 = eval_design(truth, basis, design)
    z = rng.standard_normal(design.n)
    return RegressionDataset(design, f0 + sigma0 * z, sigma0, seed=seed)


def eval_design(truth: CoefficientField, basis: Basis,
                design: Design) -> np.ndarray:
    """Truth values at the design points; tensor grids factorize per axis."""
    if design.kind in ("grid", "midpoint_grid"):
        m = round(design.n ** (1.0 / design.d))
        if m ** design.d == design.n:
            axes = [np.unique(design.points[:, l]) for l in range(design.d)]
            if all(len(ax) == m for ax in axes):
                grid = eval_field_grid(truth, basis, axes)
                return grid.reshape(-1)
    from .funcspace import eval_field
    return np.array([eval_field(truth, basis, x) for x in design.points])


def riemann_gap(f, design: Design, quadrature_resolution: int | None = None
                ) -> tuple[float, float]:
    """gap = | |mean_i f(X_i)| - |int f| |, with the integral from a dense
    tensor trapezoid rule; bound_ratio = gap * n / int |mixed derivative|.

    f maps an (m, d) array of points to m values.
    """
    d = design.d
    if quadrature_resolution is None:
        quadrature_resolution = 2 ** 14 if d == 1 else 2 ** 9
    res = quadrature_resolution
    axes = [np.linspace(0.0, 1.0, res + 1)] * d
    mesh = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)
    vals = np.asarray(f(mesh.reshape(-1, d))).reshape((res + 1,) * d)
    w1 = np.full(res + 1, 1.0 / res)
    w1[0] = w1[-1] = 0.5 / res
    integral = vals
    for _ in range(d):
        integral = np.tensordot(integral, w1, axes=([-1], [0]))
    integral = float(integral)
    design_mean = float(np.mean(np.asarray(f(design.points))))
    gap = abs(abs(design_mean) - abs(integral))

    # mixed derivative d^d f / dx_1..dx_d via centered differences
    h = 1.0 / res
    deriv = vals
    for ax in range(d):
        deriv = np.gradient(deriv, h, axis=ax)
    dnorm = np.abs(deriv)
    for _ in range(d):
        dnorm = np.tensordot(dnorm, w1, axes=([-1], [0]))
    dnorm = float(dnorm)
    bound_ratio = gap * design.n / dnorm if dnorm > 0 else math.inf
    return gap, bound_ratio
