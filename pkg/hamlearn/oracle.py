#!/usr/bin/env python3
"""
Gibbs-state oracle for hamlearn
Exact thermal states by dense diagonalization plus a noisy estimate layer with a per-observable error budget
"""

import csv
import hashlib
import logging
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import scipy.linalg

from hamlearn.config import NoiseConfig, get_config
from hamlearn.eeb import ExpectationTable
from hamlearn.errors import ConfigError, DimensionMismatch, OracleCapError
from hamlearn.model import HamiltonianModel
from hamlearn.pauli import PauliString, canonical, commutes, expectation_index, multiply

logger = logging.getLogger(__name__)


@dataclass(eq=False)
class GibbsState:
    """rho = exp(-h) / Tr exp(-h), immutable after construction"""

    n: int
    rho: np.ndarray
    log_partition: float
    beta: float
    hamiltonian: np.ndarray

    @property
    def dim(self) -> int:
        return 1 << self.n

    @property
    def min_eigenvalue(self) -> float:
        return float(scipy.linalg.eigvalsh(self.rho)[0])


class NoiseMode(Enum):
    EXACT = "exact"
    UNIFORM_ADVERSARIAL = "uniform_adversarial"
    GAUSSIAN_CLIPPED = "gaussian_clipped"
    SHOTS = "shots"


@dataclass(frozen=True)
class NoiseSpec:
    """Estimate error model; every estimate stays within epsilon0 of the exact value"""

    mode: NoiseMode = NoiseMode.EXACT
    epsilon0: float = 0.0
    seed: int = 0
    shot_count: Optional[int] = None

    def __post_init__(self):
        if self.epsilon0 < 0 or not np.isfinite(self.epsilon0):
            raise ConfigError("epsilon0 must be a finite nonnegative number")
        if self.mode == NoiseMode.SHOTS:
            if self.shot_count is None or self.shot_count < 1:
                raise ConfigError("shots mode requires a positive shot_count")
            if self.epsilon0 <= 0:
                raise ConfigError("shots mode requires epsilon0 > 0")

    @classmethod
    def from_config(cls, noise: NoiseConfig) -> "NoiseSpec":
        return cls(
            mode=NoiseMode(noise.mode),
            epsilon0=noise.epsilon0,
            seed=noise.seed,
            shot_count=noise.shot_count,
        )

    @classmethod
    def exact(cls, epsilon0: float = 0.0) -> "NoiseSpec":
        return cls(mode=NoiseMode.EXACT, epsilon0=epsilon0)


def build_gibbs(
    model: HamiltonianModel, coeffs: Optional[Sequence[float]] = None, cap: Optional[int] = None
) -> GibbsState:
    """Exact Gibbs state of h = sum lambda_a E_a"""
    limit = get_config().DENSE_CAP if cap is None else cap
    if model.n > limit:
        raise OracleCapError(f"{model.n} qubits exceed the dense cap of {limit}")
    lam = model.resolve_coeffs(coeffs)

    h = model.hamiltonian(lam, cap=limit)
    w, v = scipy.linalg.eigh(h)
    # Shift by the ground energy so the largest weight is exactly 1
    weights = np.exp(-(w - w[0]))
    total = weights.sum()
    rho = (v * (weights / total)) @ v.conj().T
    rho = (rho + rho.conj().T) / 2
    return GibbsState(
        n=model.n,
        rho=rho,
        log_partition=float(-w[0] + np.log(total)),
        beta=float(np.max(np.abs(lam))) if lam.size else 0.0,
        hamiltonian=h,
    )


def expect(state: GibbsState, a: Union[PauliString, np.ndarray]) -> complex:
    """w(A) = Tr(rho A)"""
    if isinstance(a, PauliString):
        if a.n != state.n:
            raise DimensionMismatch(f"operator acts on {a.n} qubits, state on {state.n}")
        rows, values = expectation_index(a, cap=state.n)
        return complex(np.sum(state.rho[np.arange(state.dim), rows] * values))
    a = np.asarray(a)
    if a.shape != state.rho.shape:
        raise DimensionMismatch(f"operator has shape {a.shape}, state {state.rho.shape}")
    return complex(np.einsum("ij,ji->", state.rho, a))


class _ExpectationCache:
    """w of Hermitian Paulis keyed by (x, z); products reuse the stored real values"""

    def __init__(self, state: GibbsState):
        self.state = state
        self.values: Dict[Tuple[int, int], float] = {}

    def hermitian(self, p: PauliString) -> float:
        key = p.key
        if key not in self.values:
            self.values[key] = expect(self.state, canonical(p)).real
        return self.values[key]

    def __call__(self, p: PauliString) -> complex:
        return (1j ** p.coefficient_power) * self.hermitian(p)


def _observable_rng(seed: int, observable_id: str) -> np.random.Generator:
    digest = hashlib.blake2b(observable_id.encode(), digest_size=8).digest()
    entropy = [seed % 2**64, int.from_bytes(digest, "big")]
    return np.random.default_rng(np.random.SeedSequence(entropy))


def _clip_radius(z: complex, radius: float) -> Tuple[complex, bool]:
    magnitude = abs(z)
    if magnitude > radius:
        return z * (radius / magnitude), True
    return z, False


class _Estimator:
    """Applies one NoiseSpec to exact values; a fresh RNG stream per observable id"""

    def __init__(self, noise: NoiseSpec, cache: _ExpectationCache):
        self.noise = noise
        self.cache = cache

    def estimate(self, observable_id: str, product: PauliString, scale: float) -> complex:
        """Estimate of scale * w(product)"""
        exact = scale * self.cache(product)
        noise = self.noise
        eps = noise.epsilon0
        if noise.mode == NoiseMode.EXACT or (eps == 0 and noise.mode != NoiseMode.SHOTS):
            return exact

        rng = _observable_rng(noise.seed, observable_id)
        if noise.mode == NoiseMode.UNIFORM_ADVERSARIAL:
            delta = eps * np.exp(2j * np.pi * rng.uniform())
        elif noise.mode == NoiseMode.GAUSSIAN_CLIPPED:
            delta = complex(rng.normal(0.0, eps / 2), rng.normal(0.0, eps / 2))
        else:
            # +-1 outcomes of the Hermitian Pauli behind the product
            mean = self.cache.hermitian(product)
            p_plus = min(max((1.0 + mean) / 2.0, 0.0), 1.0)
            plus = rng.binomial(noise.shot_count, p_plus)
            sampled = 2.0 * plus / noise.shot_count - 1.0
            delta = scale * (1j ** product.coefficient_power) * (sampled - mean)
        delta, _ = _clip_radius(delta, eps)
        return exact + delta


def measure_tables(
    state: GibbsState,
    perturbers: List[PauliString],
    terms: List[PauliString],
    noise: Optional[NoiseSpec] = None,
) -> ExpectationTable:
    """Tabulate C~ over unordered perturber pairs and B~_a over all (i, a, j)"""
    noise = noise or NoiseSpec.exact()
    for op in list(perturbers) + list(terms):
        if op.n != state.n:
            raise DimensionMismatch(f"{op.label} acts on {op.n} qubits, state on {state.n}")

    cache = _ExpectationCache(state)
    estimator = _Estimator(noise, cache)
    r, m = len(perturbers), len(terms)
    labels = [p.letters for p in perturbers]
    clipped = 0

    ctilde = np.zeros((r, r), dtype=complex)
    for i in range(r):
        ctilde[i, i] = 1.0
        for j in range(i + 1, r):
            product = multiply(perturbers[i], perturbers[j])
            value, hit = _clip_radius(estimator.estimate(f"C|{labels[i]}|{labels[j]}", product, 1.0), 1.0)
            clipped += hit
            ctilde[i, j] = value
            ctilde[j, i] = np.conj(value)

    btilde = np.zeros((m, r, r), dtype=complex)
    for a, term in enumerate(terms):
        for j in range(r):
            if commutes(term, perturbers[j]):
                continue
            # [E, P] = 2 E P when E and P anticommute
            ep = multiply(term, perturbers[j])
            for i in range(r):
                product = multiply(perturbers[i], ep)
                observable_id = f"B|{term.letters}|{labels[i]}|{labels[j]}"
                value, hit = _clip_radius(estimator.estimate(observable_id, product, 2.0), 2.0)
                clipped += hit
                btilde[a, i, j] = value

    if clipped:
        logger.info(f"radially clipped {clipped} estimates into the admissible range")
    return ExpectationTable(
        perturbers=labels,
        terms=[t.letters for t in terms],
        Ctilde=ctilde,
        Btilde=btilde,
        epsilon0=noise.epsilon0,
        noise_mode=noise.mode.value,
        seed=noise.seed,
        clipped=clipped,
    )


# ----------------------------------------------------------------------
# CSV exchange format: kind, i, j, alpha, re, im
# ----------------------------------------------------------------------

CSV_COLUMNS = ["kind", "i", "j", "alpha", "re", "im"]


def table_rows(table: ExpectationTable) -> List[Dict]:
    rows = []
    for i in range(table.r):
        for j in range(i, table.r):
            z = table.Ctilde[i, j]
            rows.append({"kind": "C", "i": i, "j": j, "alpha": "", "re": repr(z.real), "im": repr(z.imag)})
    for a in range(table.m):
        for i in range(table.r):
            for j in range(table.r):
                z = table.Btilde[a, i, j]
                rows.append({"kind": "B", "i": i, "j": j, "alpha": a, "re": repr(z.real), "im": repr(z.imag)})
    return rows


def export_table_csv(table: ExpectationTable, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as f:
        writer = csv.DictWriter(f, fieldnames=CSV_COLUMNS)
        writer.writeheader()
        writer.writerows(table_rows(table))
    return path


def import_table_csv(
    path: Union[str, Path],
    perturbers: List[str],
    terms: List[str],
    epsilon0: float = 0.0,
    noise_mode: str = "exact",
    seed: int = 0,
) -> ExpectationTable:
    """Rebuild a table; C~ rows cover i <= j and the conjugates fill the lower triangle"""
    r, m = len(perturbers), len(terms)
    ctilde = np.zeros((r, r), dtype=complex)
    btilde = np.zeros((m, r, r), dtype=complex)
    with open(path, "r", newline="") as f:
        for row in csv.DictReader(f):
            i, j = int(row["i"]), int(row["j"])
            z = complex(float(row["re"]), float(row["im"]))
            if row["kind"] == "C":
                ctilde[i, j] = z
                ctilde[j, i] = np.conj(z)
            elif row["kind"] == "B":
                btilde[int(row["alpha"]), i, j] = z
            else:
                raise ValueError(f"unknown row kind {row['kind']!r}")
    np.fill_diagonal(ctilde, ctilde.diagonal().real)
    return ExpectationTable(
        perturbers=list(perturbers),
        terms=list(terms),
        Ctilde=ctilde,
        Btilde=btilde,
        epsilon0=epsilon0,
        noise_mode=noise_mode,
        seed=seed,
    )
