"""Pure-numpy eigenvalue kernel: fallback used when the compiled core is absent.

Both kernels share the same call contract and consume Gaussian draws laid out
identically, so a fixed seed gives the same channel matrices on either path.
The fallback trades the compiled cyclic-Jacobi sweep for vectorized closed
forms (m <= 2) and batched LAPACK (m >= 3).
"""

from __future__ import annotations

import numpy as np

BACKEND_NAME = "pure"

_SQRT2 = np.sqrt(2.0)


def _gram_batch(normals: np.ndarray, tx: int, rx: int) -> np.ndarray:
    n = normals.shape[0]
    z = normals.reshape(n, rx, tx, 2)
    h = (z[..., 0] + 1j * z[..., 1]) / _SQRT2
    if tx <= rx:
        return np.einsum("nij,nik->njk", h.conj(), h)
    return np.einsum("nij,nkj->nik", h, h.conj())


def _eig2_batch(g: np.ndarray) -> np.ndarray:
    # Closed form for 2x2 Hermitian matrices: tr/2 +- sqrt((a-d)^2/4 + |b|^2).
    a = g[:, 0, 0].real
    d = g[:, 1, 1].real
    b = g[:, 0, 1]
    half = 0.5 * (a + d)
    rad = np.sqrt(0.25 * (a - d) ** 2 + b.real**2 + b.imag**2)
    out = np.empty((g.shape[0], 2))
    out[:, 0] = half + rad
    out[:, 1] = half - rad
    return out


def eig_batch(normals: np.ndarray, tx: int, rx: int) -> np.ndarray:
    """Eigenvalues (descending) of H H^dagger for a batch of channel draws.

    ``normals`` has shape (count, 2*tx*rx): the standard-normal real/imag parts
    of the rx-by-tx channel matrix in row-major order.
    """
    m = min(tx, rx)
    if normals.ndim != 2 or normals.shape[1] != 2 * tx * rx:
        raise ValueError("normals must have shape (count, 2*tx*rx)")
    if m == 1:
        lam = 0.5 * np.einsum("ij,ij->i", normals, normals)
        return lam[:, None]
    g = _gram_batch(normals, tx, rx)
    if m == 2:
        lam = _eig2_batch(g)
    else:
        lam = np.linalg.eigvalsh(g)[:, ::-1]
    return np.clip(lam, 0.0, None)


def eig_gram(g: np.ndarray) -> np.ndarray:
    """Eigenvalues (descending) of a single Hermitian PSD matrix."""
    g = np.asarray(g, dtype=np.complex128)
    lam = np.linalg.eigvalsh(g)[::-1]
    return np.clip(lam, 0.0, None)
