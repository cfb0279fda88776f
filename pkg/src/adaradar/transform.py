"""Orthonormal type-II block DCT over flattened ``M^2``-length blocks.

The flattened transform is ``z = a * (G @ x)`` with
``G[M*u + v, M*i + j] = cos((2i+1) u pi / 2M) * cos((2j+1) v pi / 2M)`` and
``a[M*u + v] = (2/M) alpha(u) alpha(v)``. Because ``a * G`` equals the
Kronecker square of the orthonormal 1-D DCT-II matrix ``D``, blocks are
transformed separably as ``D @ X @ D.T``. The dense form is kept for testing.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property, lru_cache

import numpy as np

from .errors import ShapeError
from .tensor import BlockGrid

FORWARD = "forward"
INVERSE = "inverse"


def alpha(u: int) -> float:
    return 1.0 / np.sqrt(2.0) if u == 0 else 1.0


@dataclass(frozen=True, eq=False)
class DctBasis:
    M: int

    @cached_property
    def D(self) -> np.ndarray:
        """Orthonormal 1-D DCT-II matrix, ``D[u, i]``."""
        M = self.M
        u = np.arange(M)[:, None]
        i = np.arange(M)[None, :]
        d = np.sqrt(2.0 / M) * np.cos((2 * i + 1) * u * np.pi / (2 * M))
        d[0] /= np.sqrt(2.0)
        d.setflags(write=False)
        return d

    @cached_property
    def a(self) -> np.ndarray:
        al = np.array([alpha(u) for u in range(self.M)])
        return ((2.0 / self.M) * np.outer(al, al)).ravel()

    @cached_property
    def G(self) -> np.ndarray:
        """Dense ``M^2 x M^2`` cosine matrix (large for M >= 32)."""
        M = self.M
        k = np.arange(M)
        c = np.cos((2 * k[None, :] + 1) * k[:, None] * np.pi / (2 * M))  # c[u, i]
        return np.einsum("ui,vj->uvij", c, c).reshape(M * M, M * M)


@lru_cache(maxsize=None)
def get_basis(M: int) -> DctBasis:
    if M < 1:
        raise ValueError(f"block side must be >= 1, got {M}")
    return DctBasis(M)


def _check_len(arr: np.ndarray, basis: DctBasis) -> None:
    if arr.shape[-1] != basis.M * basis.M:
        raise ShapeError(f"block length {arr.shape[-1]} != M^2 = {basis.M ** 2}")


def forward_blocks(blocks: np.ndarray, basis: DctBasis) -> np.ndarray:
    """DCT of every block along the last axis; returns float64."""
    blocks = np.asarray(blocks, dtype=np.float64)
    _check_len(blocks, basis)
    M = basis.M
    X = blocks.reshape(blocks.shape[:-1] + (M, M))
    Z = basis.D @ X @ basis.D.T
    return Z.reshape(blocks.shape)


def inverse_blocks(coeffs: np.ndarray, basis: DctBasis) -> np.ndarray:
    coeffs = np.asarray(coeffs, dtype=np.float64)
    _check_len(coeffs, basis)
    M = basis.M
    Z = coeffs.reshape(coeffs.shape[:-1] + (M, M))
    X = basis.D.T @ Z @ basis.D
    return X.reshape(coeffs.shape)


def dct_forward(block: np.ndarray, basis: DctBasis) -> np.ndarray:
    """Transform a single flattened block of length ``M^2``."""
    block = np.asarray(block)
    if block.ndim != 1:
        raise ShapeError(f"expected a flat block, got shape {block.shape}")
    return forward_blocks(block, basis)


def dct_inverse(coeffs: np.ndarray, basis: DctBasis) -> np.ndarray:
    coeffs = np.asarray(coeffs)
    if coeffs.ndim != 1:
        raise ShapeError(f"expected a flat block, got shape {coeffs.shape}")
    return inverse_blocks(coeffs, basis)


def transform_grid(g: BlockGrid, basis: DctBasis | None = None, direction: str = FORWARD) -> BlockGrid:
    """Apply the block DCT (or its inverse) to every (channel, block)."""
    basis = basis or get_basis(g.M)
    if basis.M != g.M:
        raise ShapeError(f"basis M={basis.M} does not match grid M={g.M}")
    if direction == FORWARD:
        return g.with_data(forward_blocks(g.data, basis))
    if direction == INVERSE:
        return g.with_data(inverse_blocks(g.data, basis))
    raise ValueError(f"direction must be {FORWARD!r} or {INVERSE!r}, got {direction!r}")


def energy_map(coeffs: BlockGrid) -> np.ndarray:
    """Mean coefficient magnitude over channels and blocks, as an ``M x M`` map."""
    M = coeffs.M
    return np.abs(coeffs.data).mean(axis=(0, 1)).reshape(M, M)
