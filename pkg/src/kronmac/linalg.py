"""Dense Hermitian linear algebra and seeded Gaussian sampling.

Every matrix in the package is a plain complex ``numpy.ndarray``. Functions
that produce Hermitian matrices build them from the upper triangle so that
``a[i, j] == conj(a[j, i])`` holds exactly, not merely to round-off.
"""

from typing import NamedTuple

import numpy as np

from .errors import (EigenConvergenceError, NotNonnegativeDefiniteError,
                     NotPositiveDefiniteError)

__all__ = ['EigenDecomposition', 'hermitian', 'hermitian_eig', 'jacobi_eigh',
           'log_det_hpd', 'hermitian_sqrt', 'clamp_psd',
           'sample_complex_gaussian', 'PSD_TOL']

# relative to the spectral norm
PSD_TOL = 1e-10


class EigenDecomposition(NamedTuple):
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruct(self):
        u = self.eigenvectors
        return hermitian((u * self.eigenvalues) @ u.conj().T)


def hermitian(a):
    """Return the Hermitian matrix whose upper triangle is that of `a`."""
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
        raise ValueError(f"expected a nonempty square matrix, got shape {a.shape}")
    upper = np.triu(a, 1)
    return upper + upper.conj().T + np.diag(a.diagonal().real)


def _sorted_desc(w, v):
    order = np.argsort(w)[::-1]
    return EigenDecomposition(w[order], v[:, order])


def jacobi_eigh(a, tol=1e-13, max_sweeps=30):
    """Cyclic Jacobi diagonalization of a complex Hermitian matrix.

    Each 2x2 pivot block is rotated into real form with a phase and then
    annihilated by a plane rotation. Sweeps stop once the off-diagonal
    Frobenius norm drops below ``tol * ||a||_F``.

    Raises
    ------
    EigenConvergenceError
        If `max_sweeps` sweeps do not reach the threshold.
    """
    a = hermitian(a).copy()
    n = a.shape[0]
    v = np.eye(n, dtype=complex)
    threshold = tol * np.linalg.norm(a)

    def off_norm():
        return np.linalg.norm(a - np.diag(a.diagonal()))

    for _ in range(max_sweeps):
        if off_norm() <= threshold:
            return _sorted_desc(a.diagonal().real.copy(), v)
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                r = abs(apq)
                if r == 0.0:
                    continue
                phase = apq / r
                app, aqq = a[p, p].real, a[q, q].real
                theta = 0.5 * np.arctan2(2.0 * r, app - aqq)
                c, s = np.cos(theta), np.sin(theta)
                # unitary g with g^H [[app, apq], [conj(apq), aqq]] g diagonal
                g = np.array([[c, -s], [s * phase.conjugate(), c * phase.conjugate()]])
                idx = [p, q]
                a[:, idx] = a[:, idx] @ g
                a[idx, :] = g.conj().T @ a[idx, :]
                a[p, q] = a[q, p] = 0.0
                a[p, p] = a[p, p].real
                a[q, q] = a[q, q].real
                v[:, idx] = v[:, idx] @ g
    final = off_norm()
    if final <= threshold:
        return _sorted_desc(a.diagonal().real.copy(), v)
    raise EigenConvergenceError(max_sweeps, final)


def hermitian_eig(a, method='lapack'):
    """Eigendecomposition of a Hermitian matrix, eigenvalues descending.

    ``method='lapack'`` uses ``numpy.linalg.eigh``; ``method='jacobi'`` uses
    :func:`jacobi_eigh`, which is slower but dependency free.
    """
    a = hermitian(a)
    if method == 'jacobi':
        return jacobi_eigh(a)
    if method != 'lapack':
        raise ValueError(f"unknown method {method!r}")
    w, v = np.linalg.eigh(a)
    return _sorted_desc(w, v)


def log_det_hpd(a):
    """Natural log-determinant of a Hermitian positive definite matrix.

    Computed from the Cholesky factor, so a stack of matrices with shape
    ``(..., n, n)`` is also accepted and yields an array of shape ``(...)``.
    """
    a = np.asarray(a)
    try:
        chol = np.linalg.cholesky(a)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefiniteError("matrix is not positive definite") from exc
    diag = np.diagonal(chol, axis1=-2, axis2=-1).real
    if np.any(~(diag > 0)):
        raise NotPositiveDefiniteError("matrix is not positive definite")
    return 2.0 * np.sum(np.log(diag), axis=-1)


def clamp_psd(eigenvalues, scale=None):
    """Zero out round-off negative eigenvalues.

    Values in ``[-PSD_TOL * scale, 0)`` are clamped, where `scale` defaults
    to the largest absolute eigenvalue. Anything more negative raises.
    """
    w = np.asarray(eigenvalues, dtype=float)
    if scale is None:
        scale = np.max(np.abs(w)) if w.size else 0.0
    if w.size and w.min() < -PSD_TOL * scale:
        raise NotNonnegativeDefiniteError(
            f"matrix is not nonnegative definite (eigenvalue {w.min():.3e})")
    return np.where(w < 0, 0.0, w)


def hermitian_sqrt(a):
    """Hermitian nonnegative square root of a nonnegative definite matrix."""
    w, u = hermitian_eig(a)
    root = np.sqrt(clamp_psd(w))
    return hermitian((u * root) @ u.conj().T)


def _generator(seed, stream):
    if np.isscalar(stream):
        stream = (stream,)
    seq = np.random.SeedSequence(entropy=seed, spawn_key=tuple(int(s) for s in stream))
    return np.random.Generator(np.random.Philox(seq))


def sample_complex_gaussian(rows, cols, variance, seed, stream=0):
    """Circularly-symmetric complex Gaussian matrix keyed by ``(seed, stream)``.

    Entries have ``E|x|^2 = variance`` with independent real and imaginary
    parts of variance ``variance / 2``. Variates come from a Box-Muller
    transform of Philox uniforms, so a given ``(seed, stream)`` pair always
    reproduces the same matrix regardless of what else has been sampled.
    `stream` may be an int or a tuple of ints.
    """
    if not variance > 0:
        raise ValueError("variance must be positive")
    rng = _generator(seed, stream)
    u = rng.random((2, rows, cols))
    # 1 - u lies in (0, 1], keeping the log finite
    radius = np.sqrt(-variance * np.log1p(-u[0]))
    return radius * np.exp(2j * np.pi * u[1])
