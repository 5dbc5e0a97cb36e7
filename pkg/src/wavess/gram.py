"""Wavelet design matrices, Gram blocks, and the size estimates they obey."""

from __future__ import annotations

import itertools
import struct
import warnings
from dataclasses import dataclass, field

import numpy as np

from .basis import (
    Basis,
    TensorIndex,
    eval_1d,
    index_range,
    inner_product_tensor,
)
from .design import Design

__all__ = [
    "DesignMatrices",
    "build_matrices",
    "gram_block",
    "gram_deviation_report",
    "column_abs_sum",
    "gram_eigen_range",
    "dump_combined",
]

ENTRY_CAP = 2 ** 26


@dataclass
class DesignMatrices:
    basis: Basis
    N: tuple[int, ...]
    J: tuple[int, ...]
    design: Design
    B: np.ndarray  # n x prod 2^{N_l}
    Psi: dict[tuple[int, ...], np.ndarray]  # level vector -> n x prod 2^{j_l}
    combined: np.ndarray  # n x q, columns in index_range order
    index_order: list[TensorIndex] = field(default_factory=list)

    @property
    def n(self) -> int:
        return self.design.n

    @property
    def q(self) -> int:
        return self.combined.shape[1]

    def column(self, idx: TensorIndex) -> np.ndarray:
        return self.combined[:, self.index_order.index(idx)]


def _mother_levels(N, J) -> list[tuple[int, ...]]:
    per_axis = [list(range(N[l] - 1, J[l])) for l in range(len(N))]
    father = tuple(n - 1 for n in N)
    return [j for j in itertools.product(*per_axis) if j != father]


def build_matrices(basis: Basis, N, J, design: Design) -> DesignMatrices:
    """Evaluate every basis function at every design point."""
    N, J = tuple(N), tuple(J)
    d = len(N)
    order = index_range(N, J)
    n, q = design.n, len(order)
    if n * q > ENTRY_CAP:
        raise MemoryError(f"design matrix would hold {n * q} entries "
                          f"(cap {ENTRY_CAP})")
    if np.prod([2 ** j for j in J]) > max(n, 1):
        warnings.warn("more columns than recommended: prod 2^{J_l} > n")

    # evaluate per axis with caching: every tensor entry is a product of
    # univariate evaluations on the design coordinates
    cache: dict[tuple, np.ndarray] = {}

    def col_1d(l: int, j: int, k: int) -> np.ndarray:
        key = (l, j, k)
        if key not in cache:
            x = design.points[:, l]
            if j == N[l] - 1:
                cache[key] = eval_1d(basis, "father", N[l], k, x)
            else:
                cache[key] = eval_1d(basis, "mother", j, k, x)
        return cache[key]

    combined = np.empty((n, q))
    for c, idx in enumerate(order):
        col = col_1d(0, idx.j[0], idx.k[0]).copy()
        for l in range(1, d):
            col *= col_1d(l, idx.j[l], idx.k[l])
        combined[:, c] = col

    father = tuple(nl - 1 for nl in N)
    B_cols = [c for c, idx in enumerate(order) if idx.j == father]
    B = combined[:, B_cols]
    Psi: dict[tuple[int, ...], np.ndarray] = {}
    for j in _mother_levels(N, J):
        cols = [c for c, idx in enumerate(order) if idx.j == j]
        Psi[j] = combined[:, cols]
    return DesignMatrices(basis, N, J, design, B, Psi, combined, order)


def gram_block(M: DesignMatrices, a, b) -> np.ndarray:
    """Psi_a^T Psi_b (the father layer is addressed by j = N - 1)."""
    a, b = tuple(a), tuple(b)
    father = tuple(n - 1 for n in M.N)

    def block(j):
        if j == father:
            return M.B
        if j not in M.Psi:
            raise KeyError(f"unknown level {j}")
        return M.Psi[j]

    return block(a).T @ block(b)


def _level_indices(M: DesignMatrices, j) -> list[TensorIndex]:
    return [idx for idx in M.index_order if idx.j == tuple(j)]


def gram_deviation_report(M: DesignMatrices, pairs) -> list[dict]:
    """Per level pair: max |(Psi_a^T Psi_b)_{c,e} - n <psi_ac, psi_be>|
    normalized by prod 2^{(a_l+b_l)/2}; diagonal/n range for a = b."""
    n = M.n
    out = []
    for a, b in pairs:
        a, b = tuple(a), tuple(b)
        G = gram_block(M, a, b)
        ia, ib = _level_indices(M, a), _level_indices(M, b)
        ip = np.empty_like(G)
        for r, idx_a in enumerate(ia):
            for c, idx_b in enumerate(ib):
                ip[r, c] = inner_product_tensor(M.basis, idx_a, idx_b)
        dev = np.abs(np.abs(G) - n * np.abs(ip))
        norm = float(np.prod([2.0 ** ((a[l] + b[l]) / 2.0)
                              for l in range(len(a))]))
        row = {
            "a": a, "b": b,
            "max_deviation": float(dev.max()),
            "deviation_ratio": float(dev.max()) / norm,
        }
        if a == b:
            diag = np.diag(G) / n
            row["diag_over_n_min"] = float(diag.min())
            row["diag_over_n_max"] = float(diag.max())
        out.append(row)
    return out


def column_abs_sum(M: DesignMatrices, j, k) -> tuple[float, float]:
    """Sum of |column| entries for index (j,k) and its ratio to
    n prod 2^{-j_l/2}."""
    idx = TensorIndex(tuple(j), tuple(k))
    s = float(np.sum(np.abs(M.column(idx))))
    bound = M.n * float(np.prod([2.0 ** (-jl / 2.0) for jl in idx.j]))
    return s, s / bound if bound > 0 else np.inf


def gram_eigen_range(M: DesignMatrices) -> tuple[float, float]:
    """Extreme eigenvalues of combined^T combined."""
    G = M.combined.T @ M.combined
    w = np.linalg.eigvalsh(G)
    return float(w[0]), float(w[-1])


def dump_combined(M: DesignMatrices, path: str) -> None:
    """Binary dump: 16-byte header (magic 'WGRM', u32 n, u32 q, 4 pad bytes),
    then the combined matrix row-major as little-endian float64."""
    with open(path, "wb") as fh:
        fh.write(b"WGRM")
        fh.write(struct.pack("<II4x", M.n, M.q))
        fh.write(np.ascontiguousarray(M.combined, dtype="<f8").tobytes())
