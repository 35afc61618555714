"""Rayleigh MIMO channel sampling and ordered eigenvalues of H H^dagger."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import backend

_SQRT2 = math.sqrt(2.0)


@dataclass(frozen=True)
class AntennaConfig:
    """Antenna counts of the link; m/n are the min/max the eigenvalue laws use."""

    tx: int
    rx: int

    def __post_init__(self):
        if self.tx < 1 or self.rx < 1:
            raise ValueError(f"antenna counts must be >= 1, got ({self.tx}, {self.rx})")

    @property
    def m(self) -> int:
        return min(self.tx, self.rx)

    @property
    def n(self) -> int:
        return max(self.tx, self.rx)


def substream(seed: int, *key: int) -> np.random.Generator:
    """Independent generator derived from (seed, key): the parallel-MC contract."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=key)))


def sample_channel(cfg: AntennaConfig, rng: np.random.Generator) -> np.ndarray:
    """One rx-by-tx channel draw: i.i.d. CN(0, 1) entries."""
    z = rng.standard_normal((cfg.rx, cfg.tx, 2))
    return (z[..., 0] + 1j * z[..., 1]) / _SQRT2


def sample_eigs(cfg: AntennaConfig, rng: np.random.Generator, count: int,
                chunk: int = 1 << 18) -> np.ndarray:
    """(count, m) ordered eigenvalue draws of H H^dagger, streamed in chunks."""
    out = np.empty((count, cfg.m))
    done = 0
    width = 2 * cfg.tx * cfg.rx
    while done < count:
        c = min(chunk, count - done)
        normals = rng.standard_normal((c, width))
        out[done:done + c] = backend.eig_batch(normals, cfg.tx, cfg.rx)
        done += c
    return out


def eig_hh(h: np.ndarray) -> np.ndarray:
    """Descending eigenvalues of H H^dagger (the m potentially nonzero ones).

    Works on the smaller Gram form (H^dagger H when the matrix is taller than
    wide), which is what the Jacobi kernel expects.
    """
    h = np.asarray(h, dtype=np.complex128)
    if h.ndim != 2:
        raise ValueError("channel matrix must be 2-D")
    if not (np.all(np.isfinite(h.real)) and np.all(np.isfinite(h.imag))):
        raise ValueError("invalid channel sample: non-finite entries")
    rx, tx = h.shape
    if tx <= rx:
        g = h.conj().T @ h
    else:
        g = h @ h.conj().T
    return backend.eig_gram(g)


@lru_cache(maxsize=None)
def _joint_norm_const(m: int, n: int) -> float:
    # Normalization of the ordered-eigenvalue density, evaluated numerically:
    # the integrand is e^{-sum} * poly, so Gauss-Laguerre with enough nodes is
    # exact; the ordered integral is the symmetric full-space one over m!.
    deg_per_var = (n - m) + 2 * (m - 1)
    q = deg_per_var // 2 + 2
    nodes, weights = np.polynomial.laguerre.laggauss(q)
    grids = np.meshgrid(*([nodes] * m), indexing="ij")
    wgrids = np.meshgrid(*([weights] * m), indexing="ij")
    poly = np.ones_like(grids[0])
    for i in range(m):
        poly = poly * grids[i] ** (n - m)
    for i in range(m):
        for j in range(i + 1, m):
            poly = poly * (grids[i] - grids[j]) ** 2
    w = np.ones_like(grids[0])
    for i in range(m):
        w = w * wgrids[i]
    total = float(np.sum(poly * w)) / math.factorial(m)
    return 1.0 / total


def joint_eig_density(lambdas, cfg: AntennaConfig, normalized: bool = False) -> float:
    """Joint density of the ordered eigenvalues, evaluated at one point.

    Returns the textbook product form e^{-sum} * prod(l^(n-m)) * Vandermonde^2;
    points off the ordered support give 0. With ``normalized`` the cached
    constant makes it a proper density.
    """
    lam = np.asarray(lambdas, dtype=float)
    if lam.shape != (cfg.m,):
        raise ValueError(f"expected {cfg.m} eigenvalues, got shape {lam.shape}")
    if np.any(lam < 0) or np.any(np.diff(lam) > 0):
        return 0.0
    m, n = cfg.m, cfg.n
    val = math.exp(-float(np.sum(lam)))
    for x in lam:
        val *= x ** (n - m)
    for i in range(m):
        for j in range(i + 1, m):
            val *= (lam[i] - lam[j]) ** 2
    if normalized:
        val *= _joint_norm_const(m, n)
    return val
