"""
Pauli-string algebra for hamlearn
Symplectic bit-mask representation with exact phase tracking and dense realization
"""

import itertools
from dataclasses import dataclass
from typing import Iterable, List, Optional, Tuple

import numpy as np

from hamlearn.config import get_config
from hamlearn.errors import DimensionMismatch, OracleCapError

LETTERS = "IXYZ"
# (x bit, z bit) per letter; Y is stored as i·XZ
_BITS = {"I": (0, 0), "X": (1, 0), "Y": (1, 1), "Z": (0, 1)}
_PREFIXES = {"": 0, "+": 0, "i": 1, "+i": 1, "-": 2, "-i": 3}
_PREFIX_LABELS = ["", "i", "-", "-i"]


def _popcount(value: int) -> int:
    return bin(value).count("1")


def _parity(values: np.ndarray) -> np.ndarray:
    """Bitwise parity of every entry of a nonnegative int64 array"""
    v = values.copy()
    for shift in (32, 16, 8, 4, 2, 1):
        v ^= v >> shift
    return v & 1


@dataclass(frozen=True)
class PauliString:
    """An n-qubit Pauli operator i^phase · X^x_mask Z^z_mask

    Bit q of each mask refers to qubit q, which is also letter q of the label
    and the q-th (most significant first) Kronecker factor of the dense matrix.
    """

    n: int
    x_mask: int
    z_mask: int
    phase: int = 0

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("PauliString needs at least one qubit")
        limit = 1 << self.n
        if not (0 <= self.x_mask < limit and 0 <= self.z_mask < limit):
            raise ValueError(f"masks must have exactly {self.n} bits")
        if self.phase not in (0, 1, 2, 3):
            raise ValueError("phase must be in {0, 1, 2, 3}")

    # ------------------------------------------------------------------
    # Construction and text encoding
    # ------------------------------------------------------------------

    @classmethod
    def from_label(cls, label: str) -> "PauliString":
        """Parse labels such as "ZZII", "-XY" or "iZ"; the letters give a Hermitian product"""
        text = label.strip()
        body = text.lstrip("+-i")
        prefix = text[: len(text) - len(body)]
        if prefix not in _PREFIXES:
            raise ValueError(f"invalid phase prefix in Pauli label: {label!r}")
        if not body or any(ch not in _BITS for ch in body):
            raise ValueError(f"Pauli label must use only I, X, Y, Z: {label!r}")

        x_mask = z_mask = 0
        y_count = 0
        for qubit, letter in enumerate(body):
            x_bit, z_bit = _BITS[letter]
            x_mask |= x_bit << qubit
            z_mask |= z_bit << qubit
            y_count += x_bit & z_bit
        return cls(len(body), x_mask, z_mask, (_PREFIXES[prefix] + y_count) % 4)

    @classmethod
    def identity(cls, n: int) -> "PauliString":
        return cls(n, 0, 0, 0)

    @classmethod
    def single(cls, n: int, qubit: int, letter: str) -> "PauliString":
        """Hermitian single-qubit Pauli `letter` acting on `qubit`"""
        x_bit, z_bit = _BITS[letter]
        return cls(n, x_bit << qubit, z_bit << qubit, x_bit & z_bit)

    @property
    def y_count(self) -> int:
        return _popcount(self.x_mask & self.z_mask)

    @property
    def letters(self) -> str:
        out = []
        for qubit in range(self.n):
            bits = ((self.x_mask >> qubit) & 1, (self.z_mask >> qubit) & 1)
            out.append({(0, 0): "I", (1, 0): "X", (1, 1): "Y", (0, 1): "Z"}[bits])
        return "".join(out)

    @property
    def coefficient_power(self) -> int:
        """Exponent q such that this operator equals i^q times its letter string"""
        return (self.phase - self.y_count) % 4

    @property
    def label(self) -> str:
        return _PREFIX_LABELS[self.coefficient_power] + self.letters

    @property
    def key(self) -> Tuple[int, int]:
        """Phase-free identity of the operator"""
        return (self.x_mask, self.z_mask)

    def __str__(self) -> str:
        return self.label

    # ------------------------------------------------------------------
    # Structure
    # ------------------------------------------------------------------

    @property
    def support(self) -> frozenset:
        mask = self.x_mask | self.z_mask
        return frozenset(q for q in range(self.n) if (mask >> q) & 1)

    @property
    def weight(self) -> int:
        return _popcount(self.x_mask | self.z_mask)

    @property
    def is_identity(self) -> bool:
        return self.x_mask == 0 and self.z_mask == 0

    def sort_key(self) -> Tuple[Tuple[int, ...], str]:
        """Canonical order: sorted support first, then the letter string"""
        return (tuple(sorted(self.support)), self.letters)


def _check_same_size(p: PauliString, q: PauliString) -> None:
    if p.n != q.n:
        raise DimensionMismatch(f"Pauli strings act on {p.n} and {q.n} qubits")


def multiply(p: PauliString, q: PauliString) -> PauliString:
    """Exact product p·q"""
    _check_same_size(p, q)
    # Z^z1 X^x2 = (-1)^{z1·x2} X^x2 Z^z1
    phase = (p.phase + q.phase + 2 * _popcount(p.z_mask & q.x_mask)) % 4
    return PauliString(p.n, p.x_mask ^ q.x_mask, p.z_mask ^ q.z_mask, phase)


def commutes(p: PauliString, q: PauliString) -> bool:
    _check_same_size(p, q)
    form = _popcount(p.x_mask & q.z_mask) + _popcount(p.z_mask & q.x_mask)
    return form % 2 == 0


def support(p: PauliString) -> frozenset:
    return p.support


def adjoint(p: PauliString) -> PauliString:
    # (X^x Z^z)† = Z^z X^x = (-1)^{|x∧z|} X^x Z^z
    return PauliString(p.n, p.x_mask, p.z_mask, (-p.phase + 2 * p.y_count) % 4)


def is_selfadjoint(p: PauliString) -> bool:
    return (p.phase + p.y_count) % 2 == 0


def canonical(p: PauliString) -> PauliString:
    """Hermitian form of p with leading coefficient +1"""
    return PauliString(p.n, p.x_mask, p.z_mask, p.y_count % 4)


def scale_power(p: PauliString, power: int) -> PauliString:
    """Multiply p by i^power"""
    return PauliString(p.n, p.x_mask, p.z_mask, (p.phase + power) % 4)


# ----------------------------------------------------------------------
# Dense realization
# ----------------------------------------------------------------------


def _index_mask(mask: int, n: int) -> int:
    """Translate a qubit mask into basis-index bits (qubit 0 is the most significant bit)"""
    out = 0
    for qubit in range(n):
        if (mask >> qubit) & 1:
            out |= 1 << (n - 1 - qubit)
    return out


def _check_cap(n: int, cap: Optional[int]) -> None:
    limit = get_config().DENSE_CAP if cap is None else cap
    if n > limit:
        raise OracleCapError(f"dense realization of {n} qubits exceeds cap {limit}")


def expectation_index(p: PauliString, cap: Optional[int] = None) -> Tuple[np.ndarray, np.ndarray]:
    """Rows and values of the single nonzero entry in each column of dense(p)

    dense(p)[rows[c], c] = values[c] for every column c.
    """
    _check_cap(p.n, cap)
    dim = 1 << p.n
    cols = np.arange(dim, dtype=np.int64)
    x_index = _index_mask(p.x_mask, p.n)
    z_index = _index_mask(p.z_mask, p.n)
    rows = cols ^ x_index
    signs = 1 - 2 * _parity(cols & z_index)
    values = (1j ** p.phase) * signs.astype(complex)
    return rows, values


def to_dense(p: PauliString, cap: Optional[int] = None) -> np.ndarray:
    """2^n × 2^n complex matrix of p"""
    rows, values = expectation_index(p, cap)
    dim = 1 << p.n
    out = np.zeros((dim, dim), dtype=complex)
    out[rows, np.arange(dim)] = values
    return out


# ----------------------------------------------------------------------
# Enumeration helpers
# ----------------------------------------------------------------------


def paulis_on(qubits: Iterable[int], n: int) -> List[PauliString]:
    """All Hermitian canonical Paulis supported inside `qubits` (identity included)"""
    qubits = sorted(set(qubits))
    out = []
    for letters in itertools.product(LETTERS, repeat=len(qubits)):
        x_mask = z_mask = 0
        for qubit, letter in zip(qubits, letters):
            x_bit, z_bit = _BITS[letter]
            x_mask |= x_bit << qubit
            z_mask |= z_bit << qubit
        out.append(canonical(PauliString(n, x_mask, z_mask, 0)))
    return out


def all_paulis(n: int) -> List[PauliString]:
    """The 4^n Hermitian Paulis in canonical order"""
    return sorted(paulis_on(range(n), n), key=PauliString.sort_key)
