"""Complex linear-algebra and transform kernel shared by the other modules.

Everything here is a pure function of its inputs and double precision
throughout, so results are reproducible across runs and safe to call from
parallel Monte Carlo workers.
"""

import numpy as np

from .exceptions import DimensionError, IllConditionedError, InvalidInputError

#: Condition-number threshold above which a regularized solve is refused.
COND_LIMIT = 1e12


def _as_complex_matrix(a, name):
    a = np.asarray(a, dtype=np.complex128)
    if a.ndim != 2:
        raise DimensionError(f"{name} must be 2-D, got shape {a.shape}")
    if a.size == 0:
        raise DimensionError(f"{name} must be non-empty, got shape {a.shape}")
    if not np.all(np.isfinite(a.view(np.float64))):
        raise InvalidInputError(f"{name} contains NaN or Inf entries")
    return a


def hermitian_eig(r):
    """Eigendecomposition of a Hermitian matrix.

    Returns ``(eigenvalues, eigenvectors)`` with eigenvalues real and sorted
    ascending and eigenvectors as unitary columns, so that
    ``Q @ diag(w) @ Q.conj().T`` reconstructs the (symmetrized) input.
    The input is symmetrized as (R + R^H)/2 before decomposition; inputs
    further than ~1e-9 relative from Hermitian are still accepted but the
    decomposition then describes the symmetrized matrix.
    """
    r = _as_complex_matrix(r, "R")
    n, m = r.shape
    if n != m:
        raise DimensionError(f"R must be square, got shape {r.shape}")
    r = 0.5 * (r + r.conj().T)
    w, q = np.linalg.eigh(r)
    return w, q


def fft2(z):
    """Two-dimensional DFT with mixed sign conventions.

    ``out[k, v] = sum_{n, m} z[n, m] * exp(+2j*pi*k*n/N) * exp(-2j*pi*v*m/M)``

    The +/- split matches the conjugate phases of the delay (negative
    exponent) and Doppler (positive exponent) factors of the channel model,
    so a single on-grid target maps to a single output bin. The transform
    is unnormalized: an all-ones N x M input gives N*M at bin (0, 0).
    """
    z = _as_complex_matrix(z, "Z")
    n = z.shape[0]
    # ifft carries the +j kernel (with a 1/N factor we undo); fft the -j one.
    return np.fft.fft(np.fft.ifft(z, axis=0), axis=1) * n


def mmse_solve(s, r_w, y):
    """MMSE estimate ``S^H (S S^H + R_w)^{-1} y`` for diagonal positive R_w.

    ``s`` is P x L with P >= L >= 1, ``r_w`` the diagonal of the P x P noise
    covariance (a full diagonal matrix is also accepted), ``y`` length P.
    Solved through the matrix-inversion lemma, which reduces the P x P system
    to the L x L normal form ``(I + S^H R^{-1} S)^{-1} S^H R^{-1} y`` -- no
    explicit large inverse is ever formed.  Raises
    :class:`IllConditionedError` when the reduced system's condition number
    exceeds ``COND_LIMIT``.
    """
    s = _as_complex_matrix(s, "S")
    p, l = s.shape
    if p < l:
        raise DimensionError(f"S must be tall (P >= L), got shape {s.shape}")
    r_w = np.asarray(r_w, dtype=np.float64)
    if r_w.ndim == 2:
        if r_w.shape != (p, p):
            raise DimensionError(f"R_w shape {r_w.shape} does not match P={p}")
        off = r_w - np.diag(np.diag(r_w))
        if np.any(off != 0.0):
            raise InvalidInputError("R_w must be diagonal")
        r_w = np.diag(r_w).copy()
    if r_w.shape != (p,):
        raise DimensionError(f"R_w diagonal length {r_w.shape} does not match P={p}")
    if not np.all(np.isfinite(r_w)) or np.any(r_w <= 0.0):
        raise InvalidInputError("R_w diagonal entries must be finite and > 0")
    y = np.asarray(y, dtype=np.complex128)
    if y.shape != (p,):
        raise DimensionError(f"y length {y.shape} does not match P={p}")
    if not np.all(np.isfinite(y.view(np.float64))):
        raise InvalidInputError("y contains NaN or Inf entries")

    sw = s.conj().T / r_w  # L x P, rows S^H R^{-1}
    g = sw @ s             # L x L
    b = sw @ y
    a = np.eye(l, dtype=np.complex128) + g
    ev = np.linalg.eigvalsh(0.5 * (a + a.conj().T))
    if ev[0] <= 0.0 or ev[-1] / ev[0] > COND_LIMIT:
        raise IllConditionedError(
            f"reduced MMSE system condition {ev[-1] / max(ev[0], 1e-300):.3e} "
            f"exceeds limit {COND_LIMIT:.1e}"
        )
    return np.linalg.solve(a, b)
