"""
Dense Hermitian linear algebra helpers
One eigendecomposition is shared by square roots, inverse square roots and logarithms
"""

from dataclasses import dataclass
from typing import Callable

import numpy as np
import scipy.linalg


def hermitize(a: np.ndarray) -> np.ndarray:
    return (a + a.conj().T) / 2


@dataclass
class HermitianEig:
    """Eigendecomposition A = V diag(w) V† of a Hermitian matrix"""

    values: np.ndarray
    vectors: np.ndarray

    @property
    def min(self) -> float:
        return float(self.values[0])

    @property
    def max(self) -> float:
        return float(self.values[-1])

    def apply(self, f: Callable[[np.ndarray], np.ndarray]) -> np.ndarray:
        """Matrix function f(A) via the stored spectrum"""
        v = self.vectors
        return hermitize((v * f(self.values)) @ v.conj().T)

    def power(self, p: float) -> np.ndarray:
        return self.apply(lambda w: w**p)

    def sqrt(self) -> np.ndarray:
        return self.apply(np.sqrt)

    def invsqrt(self) -> np.ndarray:
        return self.apply(lambda w: 1.0 / np.sqrt(w))

    def log(self) -> np.ndarray:
        return self.apply(np.log)


def hermitian_eig(a: np.ndarray) -> HermitianEig:
    """Eigendecomposition of the Hermitian part of `a`, eigenvalues ascending"""
    w, v = scipy.linalg.eigh(hermitize(np.asarray(a, dtype=complex)))
    return HermitianEig(values=w, vectors=v)


def min_eigenvalue(a: np.ndarray) -> float:
    return float(scipy.linalg.eigvalsh(hermitize(np.asarray(a, dtype=complex)))[0])


def spectral_norm(a: np.ndarray) -> float:
    if a.size == 0:
        return 0.0
    return float(np.linalg.norm(a, 2))


def realify(a: np.ndarray) -> np.ndarray:
    """Real symmetric embedding [[Re, -Im], [Im, Re]] of a Hermitian matrix

    realify(A) is PSD iff A is, and its spectrum is A's with doubled multiplicity.
    """
    re, im = a.real, a.imag
    return np.block([[re, -im], [im, re]])


def unrealify(z: np.ndarray) -> np.ndarray:
    """Hermitian matrix whose realification pairs with `z` like the original

    For real symmetric z, <z, realify(A)> = 2 Re tr(unrealify(z) A).
    """
    k = z.shape[0] // 2
    p, q, s = z[:k, :k], z[:k, k:], z[k:, k:]
    return hermitize((p + s) / 2 + 1j * (q.T - q) / 2)
