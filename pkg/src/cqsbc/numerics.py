"""Dense Hermitian linear algebra primitives shared by all modules.

A Hermitian matrix ``Y = W + iT`` is stored as the pair of its real part
``W`` (symmetric) and imaginary part ``T`` (skew-symmetric, zero diagonal).
Every cut and branching formula downstream addresses ``W`` and ``T``
entries separately, so the split representation is the native one.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# Relative tolerance for treating an eigenvalue / 2x2 minor as zero.
ZERO_EIG_TOL = 1e-7


@dataclass(frozen=True)
class HermitianMatrix:
    """Hermitian matrix split into real symmetric W and real skew-symmetric T."""

    W: np.ndarray
    T: np.ndarray

    def __post_init__(self):
        W = np.asarray(self.W, dtype=float)
        T = np.asarray(self.T, dtype=float)
        object.__setattr__(self, "W", W)
        object.__setattr__(self, "T", T)
        if W.shape != T.shape or W.ndim != 2 or W.shape[0] != W.shape[1]:
            raise ValueError("W and T must be square matrices of equal shape")
        if not np.allclose(W, W.T, atol=1e-10 * (1.0 + np.abs(W).max(initial=0.0))):
            raise ValueError("W must be symmetric")
        if not np.allclose(T, -T.T, atol=1e-10 * (1.0 + np.abs(T).max(initial=0.0))):
            raise ValueError("T must be skew-symmetric")

    @property
    def n(self) -> int:
        return self.W.shape[0]

    @staticmethod
    def zeros(n: int) -> "HermitianMatrix":
        return HermitianMatrix(np.zeros((n, n)), np.zeros((n, n)))

    @staticmethod
    def from_complex(A: np.ndarray) -> "HermitianMatrix":
        """Split a complex Hermitian array; symmetrizes (A + A*)/2 first."""
        A = np.asarray(A, dtype=complex)
        H = (A + A.conj().T) / 2.0
        return HermitianMatrix(H.real.copy(), H.imag.copy())

    def to_complex(self) -> np.ndarray:
        return self.W + 1j * self.T

    def trace(self) -> float:
        return float(np.trace(self.W))

    def submatrix(self, idx) -> "HermitianMatrix":
        ix = np.asarray(idx, dtype=int)
        return HermitianMatrix(self.W[np.ix_(ix, ix)], self.T[np.ix_(ix, ix)])


@dataclass(frozen=True)
class ComplexVector:
    """Complex vector split into real and imaginary components."""

    re: np.ndarray
    im: np.ndarray

    def __post_init__(self):
        re = np.asarray(self.re, dtype=float).ravel()
        im = np.asarray(self.im, dtype=float).ravel()
        object.__setattr__(self, "re", re)
        object.__setattr__(self, "im", im)
        if re.shape != im.shape:
            raise ValueError("re and im must have equal length")

    @property
    def n(self) -> int:
        return self.re.shape[0]

    @staticmethod
    def zeros(n: int) -> "ComplexVector":
        return ComplexVector(np.zeros(n), np.zeros(n))

    @staticmethod
    def from_complex(z: np.ndarray) -> "ComplexVector":
        z = np.asarray(z, dtype=complex).ravel()
        return ComplexVector(z.real.copy(), z.imag.copy())

    def to_complex(self) -> np.ndarray:
        return self.re + 1j * self.im

    def norm(self) -> float:
        return float(np.sqrt(np.sum(self.re**2) + np.sum(self.im**2)))


def min_eigenvalue_2x2(Wii: float, Wjj: float, Wij: float, Tij: float) -> float:
    """Minimum eigenvalue of the 2x2 Hermitian matrix [[Wii, Wij+iTij], [Wij-iTij, Wjj]].

    Closed form: (Wii + Wjj - ||(Wii - Wjj, 2 Wij, 2 Tij)||) / 2.
    """
    r = np.sqrt((Wii - Wjj) ** 2 + 4.0 * Wij**2 + 4.0 * Tij**2)
    return 0.5 * (Wii + Wjj - r)


def real_embedding(H: HermitianMatrix) -> np.ndarray:
    """Real symmetric embedding [[W, -T], [T, W]] of W + iT.

    The embedding is PSD iff H is; every eigenvalue of H appears twice.
    """
    return np.block([[H.W, -H.T], [H.T, H.W]])


def hermitian_eigenvalues(H: HermitianMatrix) -> np.ndarray:
    """Ascending eigenvalues of H via the real embedding (doubled spectrum paired off)."""
    vals = np.linalg.eigvalsh(real_embedding(H))
    return vals[::2]


def principal_eigvec(H: HermitianMatrix) -> tuple[float, ComplexVector]:
    """Largest eigenvalue and a unit eigenvector of a Hermitian matrix.

    Works on the real 2n x 2n embedding: an embedding eigenvector (u, v)
    for eigenvalue lam yields the complex eigenvector u + iv, which always
    has unit norm when (u, v) does.  The eigenvector is unique only up to
    multiplication by a complex phase.
    """
    M = real_embedding(H)
    vals, vecs = np.linalg.eigh(M)
    lam = float(vals[-1])
    uv = vecs[:, -1]
    n = H.n
    z = ComplexVector(uv[:n].copy(), uv[n:].copy())
    resid = np.linalg.norm(H.to_complex() @ z.to_complex() - lam * z.to_complex())
    scale = max(1.0, float(np.abs(H.W).max(initial=0.0) + np.abs(H.T).max(initial=0.0)))
    if resid > 1e-8 * scale * H.n:
        raise ArithmeticError(f"eigenvector residual {resid:.3e} exceeds tolerance")
    return lam, z
