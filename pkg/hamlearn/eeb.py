#!/usr/bin/env python3
"""
Matrix energy-entropy balance system
Turns expectation tables into the constraint matrices D, log D and H_a used by the learners
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from hamlearn.config import get_config
from hamlearn.errors import DimensionMismatch
from hamlearn.linalg import hermitian_eig, hermitize, min_eigenvalue, spectral_norm

logger = logging.getLogger(__name__)


def _encode_matrix(a: np.ndarray) -> List[List[List[float]]]:
    """Row-major nested [re, im] pairs"""
    return [[[float(z.real), float(z.imag)] for z in row] for row in a]


def _decode_matrix(data) -> np.ndarray:
    arr = np.asarray(data, dtype=float)
    return arr[..., 0] + 1j * arr[..., 1]


@dataclass
class ExpectationTable:
    """Estimates C~_ij = w(P_i P_j) and (B~_a)_ij = w(P_i [E_a, P_j])"""

    perturbers: List[str]
    terms: List[str]
    Ctilde: np.ndarray
    Btilde: np.ndarray  # shape (m, r, r)
    epsilon0: float = 0.0
    noise_mode: str = "exact"
    seed: int = 0
    clipped: int = 0

    def __post_init__(self):
        self.Ctilde = np.asarray(self.Ctilde, dtype=complex)
        self.Btilde = np.asarray(self.Btilde, dtype=complex).reshape(len(self.terms), self.r, self.r)
        if self.Ctilde.shape != (self.r, self.r):
            raise DimensionMismatch(f"C~ has shape {self.Ctilde.shape}, expected ({self.r}, {self.r})")

    @property
    def r(self) -> int:
        return len(self.perturbers)

    @property
    def m(self) -> int:
        return len(self.terms)

    def check(self, tol: float = 1e-12) -> List[str]:
        """Invariant violations (empty when the table is well formed)"""
        problems = []
        if np.max(np.abs(self.Ctilde - self.Ctilde.conj().T), initial=0.0) > tol:
            problems.append("C~ is not Hermitian")
        if np.max(np.abs(np.diag(self.Ctilde) - 1.0), initial=0.0) > tol:
            problems.append("C~ diagonal differs from 1")
        if np.max(np.abs(self.Ctilde), initial=0.0) > 1.0 + tol:
            problems.append("|C~| exceeds 1")
        if np.max(np.abs(self.Btilde), initial=0.0) > 2.0 + tol:
            problems.append("|B~| exceeds 2")
        return problems

    def metadata(self) -> Dict:
        return {
            "r": self.r,
            "m": self.m,
            "epsilon0": self.epsilon0,
            "noise_mode": self.noise_mode,
            "seed": self.seed,
            "clipped": self.clipped,
        }


@dataclass
class EEBSystem:
    """D~ = C~^{-1/2} C~^T C~^{-1/2}, log D~ and H~_a = C~^{-1/2} B~_a C~^{-1/2}"""

    r: int
    m: int
    cond_ok: bool
    eigen_floor: float
    pd_tolerance: float
    K: Optional[float] = None
    Dtilde: Optional[np.ndarray] = None
    logDtilde: Optional[np.ndarray] = None
    Htilde: Optional[np.ndarray] = None
    epsilon0: float = 0.0
    perturbers: List[str] = field(default_factory=list)
    terms: List[str] = field(default_factory=list)

    def to_dict(self) -> Dict:
        data = {
            "r": self.r,
            "m": self.m,
            "cond_ok": self.cond_ok,
            "eigen_floor": self.eigen_floor,
            "pd_tolerance": self.pd_tolerance,
            "K": self.K,
            "epsilon0": self.epsilon0,
            "perturbers": list(self.perturbers),
            "terms": list(self.terms),
        }
        if self.cond_ok:
            data["Dtilde"] = _encode_matrix(self.Dtilde)
            data["logDtilde"] = _encode_matrix(self.logDtilde)
            data["Htilde"] = [_encode_matrix(h) for h in self.Htilde]
        return data

    @classmethod
    def from_dict(cls, data: Dict) -> "EEBSystem":
        system = cls(
            r=data["r"],
            m=data["m"],
            cond_ok=data["cond_ok"],
            eigen_floor=data["eigen_floor"],
            pd_tolerance=data["pd_tolerance"],
            K=data.get("K"),
            epsilon0=data.get("epsilon0", 0.0),
            perturbers=data.get("perturbers", []),
            terms=data.get("terms", []),
        )
        if system.cond_ok:
            system.Dtilde = _decode_matrix(data["Dtilde"])
            system.logDtilde = _decode_matrix(data["logDtilde"])
            system.Htilde = np.stack([_decode_matrix(h) for h in data["Htilde"]])
        return system


def assemble(table: ExpectationTable, pd_tolerance_factor: Optional[float] = None) -> EEBSystem:
    """Build the EEB system; a non-PD C~ yields cond_ok = False instead of raising"""
    settings = get_config()
    factor = settings.PD_TOLERANCE_FACTOR if pd_tolerance_factor is None else pd_tolerance_factor
    r, m = table.r, table.m
    pd_tolerance = factor * r

    c_eig = hermitian_eig(table.Ctilde)
    floor = c_eig.min
    base = dict(
        r=r,
        m=m,
        eigen_floor=floor,
        pd_tolerance=pd_tolerance,
        epsilon0=table.epsilon0,
        perturbers=list(table.perturbers),
        terms=list(table.terms),
    )
    if floor <= pd_tolerance:
        logger.warning(f"C~ is not positive definite (smallest eigenvalue {floor:.3e})")
        return EEBSystem(cond_ok=False, **base)

    c_invsqrt = c_eig.invsqrt()
    dtilde = hermitize(c_invsqrt @ table.Ctilde.T @ c_invsqrt)
    log_dtilde = hermitian_eig(dtilde).log()
    htilde = np.stack([c_invsqrt @ b @ c_invsqrt for b in table.Btilde]) if m else np.zeros((0, r, r))

    return EEBSystem(
        cond_ok=True,
        K=2.0 * r / floor,
        Dtilde=dtilde,
        logDtilde=log_dtilde,
        Htilde=htilde,
        **base,
    )


def relaxation_params(K: float, epsilon0: float, m: int, beta: float) -> Tuple[float, float]:
    """(mu1, mu2) = ((2K^3 + 3 m beta K^2) eps0, 3 m beta K^2 eps0)"""
    if K <= 0:
        raise ValueError("K must be positive")
    if epsilon0 < 0:
        raise ValueError("epsilon0 must be nonnegative")
    mu2 = 3.0 * m * beta * K**2 * epsilon0
    mu1 = 2.0 * K**3 * epsilon0 + mu2
    return mu1, mu2


def sigma_general(m: int, beta: float, d: int, r: int) -> float:
    """e^{-m beta} d / 3r"""
    return math.exp(-m * beta) * d / (3.0 * r)


def sigma_conservative(m: int, beta: float, d: int, r: int) -> float:
    """e^{-2 m beta} d / 3r, which keeps the partition function in the lower bound on rho"""
    return math.exp(-2.0 * m * beta) * d / (3.0 * r)


def ideal_eeb_residuals(system: EEBSystem, lam: np.ndarray) -> Tuple[float, float]:
    """(||sum lam (H - H^dag)||, lambda_min(log D + sum lam (H + H^dag)/2))"""
    lam = np.asarray(lam, dtype=float)
    if lam.shape != (system.m,):
        raise DimensionMismatch(f"expected {system.m} coefficients")
    combo = np.tensordot(lam, system.Htilde, axes=1)
    antisym = spectral_norm(combo - combo.conj().T)
    floor = min_eigenvalue(system.logDtilde + (combo + combo.conj().T) / 2)
    return antisym, floor


def matrix_continuity_checks(a: np.ndarray, a_tilde: np.ndarray) -> Dict[str, Dict[str, float]]:
    """Measured deviations of inverse, square root and logarithm against their perturbation bounds

    Both matrices must be Hermitian positive definite.
    """
    delta = spectral_norm(a - a_tilde)
    eig_a, eig_t = hermitian_eig(a), hermitian_eig(a_tilde)
    lo_a, lo_t = eig_a.min, eig_t.min
    size = a.shape[0]
    entry_max = float(np.max(np.abs(a - a_tilde), initial=0.0))

    inv_a, inv_t = eig_a.power(-1.0), eig_t.power(-1.0)
    checks = {
        "entrywise": {"measured": delta, "bound": size * entry_max},
        "inverse": {"measured": spectral_norm(inv_a - inv_t), "bound": delta / (lo_a * lo_t)},
        "sqrt": {
            "measured": spectral_norm(eig_a.sqrt() - eig_t.sqrt()),
            "bound": delta / (math.sqrt(lo_a) + math.sqrt(lo_t)),
        },
        "log": {"measured": spectral_norm(eig_a.log() - eig_t.log()), "bound": delta / min(lo_a, lo_t)},
    }
    for item in checks.values():
        item["ok"] = item["measured"] <= item["bound"] * (1 + 1e-9) + 1e-13
    return checks


def continuity_report(exact: EEBSystem, noisy: EEBSystem, epsilon0: float) -> Dict:
    """Measured ||log D - log D~||, max_a ||H_a - H~_a|| against 2K^3 eps0 and 3K^2 eps0"""
    report = {"epsilon0": epsilon0, "applicable": False}
    if exact.r != noisy.r or exact.m != noisy.m:
        raise DimensionMismatch("systems were assembled from different perturber sets")
    if not (exact.cond_ok and noisy.cond_ok):
        report["reason"] = "not_positive_definite"
        return report
    K = noisy.K
    if epsilon0 > 0 and K * epsilon0 > 1:
        report["reason"] = "k_exceeds_inverse_epsilon"
        return report

    log_dev = spectral_norm(exact.logDtilde - noisy.logDtilde)
    h_dev = max((spectral_norm(h - ht) for h, ht in zip(exact.Htilde, noisy.Htilde)), default=0.0)
    log_bound = 2.0 * K**3 * epsilon0
    h_bound = 3.0 * K**2 * epsilon0
    report.update(
        {
            "applicable": True,
            "K": K,
            "log_deviation": log_dev,
            "log_bound": log_bound,
            "log_ok": log_dev <= log_bound + 1e-12,
            "h_deviation": h_dev,
            "h_bound": h_bound,
            "h_ok": h_dev <= h_bound + 1e-12,
            "matrix_checks": matrix_continuity_checks(exact.Dtilde, noisy.Dtilde),
        }
    )
    return report
