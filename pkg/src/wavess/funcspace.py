"""Anisotropic Besov machinery: coefficient fields, norms, truth generation,
projections, contraction-rate formulas, and the adaptation region."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .basis import Basis, TensorIndex, eval_tensor, index_range

__all__ = [
    "AnisoSmoothness",
    "CoefficientField",
    "BesovBallSpec",
    "harmonic_mean",
    "besov_norm",
    "sample_truth",
    "project",
    "projection_error_sup",
    "eval_field",
    "rate_eps",
    "rate_eps_r",
    "in_adaptation_region",
]


def harmonic_mean(alpha) -> float:
    """d / sum(1/alpha_l)."""
    a = np.asarray(alpha, dtype=float)
    if np.any(a <= 0):
        raise ValueError("smoothness entries must be positive")
    return float(len(a) / np.sum(1.0 / a))


@dataclass(frozen=True)
class AnisoSmoothness:
    alpha: tuple[float, ...]
    alpha_star: float = field(init=False)

    def __post_init__(self):
        alpha = tuple(float(a) for a in np.atleast_1d(self.alpha))
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "alpha_star", harmonic_mean(alpha))

    @property
    def d(self) -> int:
        return len(self.alpha)


@dataclass(frozen=True)
class BesovBallSpec:
    smoothness: AnisoSmoothness
    radius: float
    p: float = math.inf
    q: float = math.inf

    def __post_init__(self):
        if self.radius < 0:
            raise ValueError("radius must be nonnegative")


@dataclass
class CoefficientField:
    """Father block (dense, index_range order over the father layer) plus
    per-level sparse mother blocks.  Any coefficient not stored is zero."""

    N: tuple[int, ...]
    J: tuple[int, ...]
    father: np.ndarray  # shape (prod 2^{N_l},), lexicographic in k
    mother: dict[tuple[int, ...], dict[tuple[int, ...], float]] = field(
        default_factory=dict)

    def __post_init__(self):
        self.N = tuple(self.N)
        self.J = tuple(self.J)
        q = int(np.prod([2 ** n for n in self.N]))
        self.father = np.asarray(self.father, dtype=float).reshape(q)

    @classmethod
    def zero(cls, N, J) -> "CoefficientField":
        q = int(np.prod([2 ** n for n in N]))
        return cls(tuple(N), tuple(J), np.zeros(q))

    @property
    def d(self) -> int:
        return len(self.N)

    def copy(self) -> "CoefficientField":
        return CoefficientField(
            self.N, self.J, self.father.copy(),
            {j: dict(blk) for j, blk in self.mother.items()})

    def get(self, idx: TensorIndex) -> float:
        if all(idx.j[l] == self.N[l] - 1 for l in range(self.d)):
            return float(self.father[self._father_flat(idx.k)])
        return self.mother.get(idx.j, {}).get(idx.k, 0.0)

    def set(self, idx: TensorIndex, value: float) -> None:
        if all(idx.j[l] == self.N[l] - 1 for l in range(self.d)):
            self.father[self._father_flat(idx.k)] = value
            return
        blk = self.mother.setdefault(idx.j, {})
        if value == 0.0:
            blk.pop(idx.k, None)
        else:
            blk[idx.k] = float(value)

    def _father_flat(self, k: tuple[int, ...]) -> int:
        flat = 0
        for l in range(self.d):
            flat = flat * 2 ** self.N[l] + k[l]
        return flat

    def nonzero_items(self) -> list[tuple[TensorIndex, float]]:
        out = []
        father_js = tuple(n - 1 for n in self.N)
        for flat, v in enumerate(self.father):
            if v != 0.0:
                k, rem = [], flat
                for n in reversed(self.N):
                    k.append(rem % 2 ** n)
                    rem //= 2 ** n
                out.append((TensorIndex(father_js, tuple(reversed(k))), float(v)))
        for j in sorted(self.mother):
            for k in sorted(self.mother[j]):
                v = self.mother[j][k]
                if v != 0.0:
                    out.append((TensorIndex(j, k), v))
        return out

    def to_json(self) -> str:
        items = [{"j": list(i.j), "k": list(i.k), "value": v}
                 for i, v in self.nonzero_items()]
        return json.dumps({"N": list(self.N), "J": list(self.J),
                           "coefficients": items}, indent=None)

    @classmethod
    def from_json(cls, text: str) -> "CoefficientField":
        obj = json.loads(text)
        out = cls.zero(tuple(obj["N"]), tuple(obj["J"]))
        for item in obj["coefficients"]:
            out.set(TensorIndex(tuple(item["j"]), tuple(item["k"])),
                    item["value"])
        return out


def _besov_exponent(alpha: AnisoSmoothness, j: tuple[int, ...], p: float,
                    zero_smoothness: bool = False) -> float:
    """sum_l alpha_l j_l (1/d + 1/(2 alpha*) - 1/(alpha* p)); the
    zero-smoothness variant replaces it by sum_l j_l / 2."""
    if zero_smoothness:
        return 0.5 * sum(j)
    d, a_star = alpha.d, alpha.alpha_star
    inv_p = 0.0 if math.isinf(p) else 1.0 / p
    return sum(alpha.alpha[l] * j[l] * (1.0 / d + 1.0 / (2 * a_star)
                                        - inv_p / a_star)
               for l in range(d))


def besov_norm(c: CoefficientField, ball: BesovBallSpec,
               zero_smoothness: bool = False) -> float:
    """Father l_p term plus the q-aggregated, level-weighted mother term;
    p and/or q infinite replace the corresponding sums by maxima."""
    p, q = ball.p, ball.q
    if math.isinf(p):
        father_term = float(np.max(np.abs(c.father))) if c.father.size else 0.0
    else:
        father_term = float(np.sum(np.abs(c.father) ** p) ** (1.0 / p))
    level_terms = []
    for j, blk in c.mother.items():
        vals = np.array([abs(v) for v in blk.values()])
        if vals.size == 0:
            continue
        if math.isinf(p):
            lp = float(np.max(vals))
        else:
            lp = float(np.sum(vals ** p) ** (1.0 / p))
        w = 2.0 ** _besov_exponent(ball.smoothness, j, p, zero_smoothness)
        level_terms.append(w * lp)
    if not level_terms:
        mother_term = 0.0
    elif math.isinf(q):
        mother_term = max(level_terms)
    else:
        mother_term = float(np.sum(np.array(level_terms) ** q) ** (1.0 / q))
    return father_term + mother_term


def envelope(alpha: AnisoSmoothness, R: float, j: tuple[int, ...]) -> float:
    """R 2^{-sum alpha_l j_l (1/d + 1/(2 alpha*))}: the sup-norm Besov
    coefficient envelope at mother level j."""
    d, a_star = alpha.d, alpha.alpha_star
    expo = sum(alpha.alpha[l] * j[l] * (1.0 / d + 1.0 / (2 * a_star))
               for l in range(d))
    return R * 2.0 ** -expo


def sample_truth(ball: BesovBallSpec, N, J, rng: np.random.Generator,
                 mode: str = "envelope") -> CoefficientField:
    """Coefficients inside the sup-norm ball: mode='envelope' puts the full
    envelope magnitude with random signs at every index, mode='random' draws
    uniformly within the envelope.  Father block is scaled so the total norm
    stays within the radius."""
    if not (math.isinf(ball.p) and math.isinf(ball.q)):
        raise ValueError("truth sampling is defined for the sup-norm ball")
    if mode not in ("envelope", "random"):
        raise ValueError(f"unknown mode {mode!r}")
    alpha, R = ball.smoothness, ball.radius
    out = CoefficientField.zero(N, J)
    if R == 0.0:
        return out
    q = out.father.size
    # the norm is the father term plus the mother term; envelope mode spends
    # the whole radius on the mothers (norm exactly R), random mode splits
    # the budget so the total stays within R
    if mode == "random":
        out.father = rng.uniform(-R / 2, R / 2, size=q)
    for idx in index_range(out.N, out.J):
        if all(idx.j[l] == out.N[l] - 1 for l in range(out.d)):
            continue
        env = envelope(alpha, R, idx.j)
        if mode == "envelope":
            out.set(idx, env * rng.choice([-1.0, 1.0]))
        else:
            out.set(idx, rng.uniform(-env / 2, env / 2))
    return out


def project(c: CoefficientField, W) -> CoefficientField:
    """Truncation K_W: zero every coefficient with any j_l >= W_l."""
    W = tuple(W)
    if any(W[l] > c.J[l] for l in range(c.d)):
        raise ValueError("truncation levels exceed field truncation")
    out = c.copy()
    out.mother = {j: dict(blk) for j, blk in c.mother.items()
                  if all(j[l] < W[l] for l in range(c.d))}
    return out


def eval_field(c: CoefficientField, basis: Basis, x, r=None) -> float:
    """Finite wavelet sum at a point."""
    total = 0.0
    for idx, v in c.nonzero_items():
        total += v * eval_tensor(basis, idx, x, r)
    return total


def eval_field_grid(c: CoefficientField, basis: Basis,
                    axes: list[np.ndarray], r=None) -> np.ndarray:
    """Field values on a tensor grid (vectorized per axis; the tensor basis
    functions factorize, so each coefficient adds an outer product)."""
    from .basis import eval_1d

    d = c.d
    if r is None:
        r = (0,) * d
    shape = tuple(len(ax) for ax in axes)
    out = np.zeros(shape)
    cache: dict[tuple, np.ndarray] = {}
    for idx, v in c.nonzero_items():
        factors = []
        for l in range(d):
            jl, kl = idx.j[l], idx.k[l]
            key = (l, jl, kl, r[l])
            if key not in cache:
                if jl == c.N[l] - 1:
                    cache[key] = eval_1d(basis, "father", c.N[l], kl,
                                         axes[l], r[l])
                else:
                    cache[key] = eval_1d(basis, "mother", jl, kl,
                                         axes[l], r[l])
            factors.append(cache[key])
        term = factors[0]
        for fac in factors[1:]:
            term = np.multiply.outer(term, fac)
        out += v * term
    return out


def projection_error_sup(c: CoefficientField, basis: Basis, W,
                         grid_resolution: int) -> float:
    """sup over the evaluation grid of |K_W(f)(x) - f(x)|."""
    if grid_resolution < 2 ** (max(c.J) + 2):
        raise ValueError("grid resolution too coarse for the stored levels")
    tail = c.copy()
    kept = project(c, W)
    tail.father = np.zeros_like(tail.father)
    tail.mother = {j: dict(blk) for j, blk in c.mother.items()
                   if j not in kept.mother}
    axes = [np.linspace(0.0, 1.0, grid_resolution + 1) for _ in range(c.d)]
    vals = eval_field_grid(tail, basis, axes)
    return float(np.max(np.abs(vals)))


def rate_eps(n: int, alpha: AnisoSmoothness, d: int | None = None) -> float:
    """(n/log n)^{-alpha*/(2 alpha* + d)} with natural log."""
    if n < 3:
        raise ValueError("need n >= 3")
    d = alpha.d if d is None else d
    a_star = alpha.alpha_star
    return float((n / math.log(n)) ** (-a_star / (2 * a_star + d)))


def rate_eps_r(n: int, alpha: AnisoSmoothness, r) -> float:
    """(n/log n)^{-alpha*(1 - sum r_l/alpha_l)/(2 alpha* + d)}."""
    if n < 3:
        raise ValueError("need n >= 3")
    r = np.atleast_1d(r)
    a_star, d = alpha.alpha_star, alpha.d
    shrink = 1.0 - sum(r[l] / alpha.alpha[l] for l in range(d))
    return float((n / math.log(n)) ** (-a_star * shrink / (2 * a_star + d)))


def in_adaptation_region(alpha: AnisoSmoothness, r, eta: float) -> bool:
    """2(r_l+1) alpha* d/(2 alpha* + d) < alpha_l < eta + 1 on every axis;
    for isotropic alpha this reduces to max{d/2, sum r_l} < alpha < eta+1."""
    r = np.atleast_1d(np.asarray(r, dtype=float))
    a_star, d = alpha.alpha_star, alpha.d
    if len(set(alpha.alpha)) == 1:
        a = alpha.alpha[0]
        return max(d / 2.0, float(np.sum(r))) < a < eta + 1.0
    for l in range(d):
        lo = 2 * (r[l] + 1) * a_star * d / (2 * a_star + d)
        if not (lo < alpha.alpha[l] < eta + 1.0):
            return False
    return True
