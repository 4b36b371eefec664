#!/usr/bin/env python3
"""
Certified learning for hamlearn
Interval bounds on linear functionals of the coefficients and the minimum confidence parameter
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg

from hamlearn.config import get_config
from hamlearn.eeb import EEBSystem, relaxation_params
from hamlearn.errors import NotPositiveDefinite
from hamlearn.solver import (
    INFEASIBLE,
    NUMERICAL_FAILURE,
    OPTIMAL,
    UNBOUNDED,
    AffineBlock,
    FarkasCertificate,
    LmiProblem,
    farkas_certificate,
    solve_lmi,
    verify_certificate,
)

logger = logging.getLogger(__name__)

REASON_NOT_PD = "not_positive_definite"
REASON_K_GUARD = "k_exceeds_inverse_epsilon"

VERDICT_CONSISTENT = "consistent"
VERDICT_NOT_GIBBS = "not_gibbs_in_span"
VERDICT_INCONCLUSIVE = "inconclusive"


def lambda_box(beta: float) -> float:
    """Half-width of the coefficient box"""
    return get_config().LAMBDA_BOX_FACTOR * max(beta, 0.1)


def _symmetric_parts(system: EEBSystem) -> Tuple[np.ndarray, np.ndarray]:
    h = system.Htilde
    h_dag = np.conj(np.transpose(h, (0, 2, 1)))
    plus = (h + h_dag) / 2
    # -i (H - H^dag) / 2 is Hermitian
    minus = -1j * (h - h_dag) / 2
    return plus, minus


def build_constraints(system: EEBSystem, mu1: float, mu2: float) -> List[AffineBlock]:
    """B0 = log D~ + mu1 + sum l (H + H^dag)/2 and B+- = mu2 -+ i sum l (H - H^dag)/2"""
    if not system.cond_ok:
        raise NotPositiveDefinite("C~ is not positive definite; the EEB system is undefined")
    r = system.r
    identity = np.eye(r)
    plus, minus = _symmetric_parts(system)
    return [
        AffineBlock("eeb", system.logDtilde + mu1 * identity, plus),
        AffineBlock("antisym_plus", mu2 * identity, minus),
        AffineBlock("antisym_minus", mu2 * identity, -minus),
    ]


def _antisymmetric_equalities(system: EEBSystem, tol: float = 1e-6) -> np.ndarray:
    """Rows N with N l = 0 iff sum l (H - H^dag) vanishes, up to singular values below tol * max

    With mu2 = 0 the two antisymmetric blocks only admit that equality, and the PSD
    pair has no interior; the exact linear form keeps the problem solvable.
    """
    _, minus = _symmetric_parts(system)
    columns = minus.reshape(system.m, -1).T
    stacked = np.concatenate([columns.real, columns.imag])
    _, singular, vt = scipy.linalg.svd(stacked, full_matrices=False)
    if not singular.size or singular[0] == 0.0:
        return np.zeros((0, system.m))
    return vt[singular > tol * singular[0]]


def relaxed_problem(
    system: EEBSystem,
    mu1: float,
    mu2: float,
    objective: np.ndarray,
    sense: str,
    bound: float,
) -> LmiProblem:
    """LMI over the relaxed EEB set inside the coefficient box

    mu2 = 0 replaces the antisymmetric pair by its equality form.
    """
    blocks = build_constraints(system, mu1, mu2)
    bounds = np.full(system.m, bound)
    if mu2 > 0:
        return LmiProblem(blocks, objective, sense, -bounds, bounds)
    return LmiProblem(blocks[:1], objective, sense, -bounds, bounds, equalities=_antisymmetric_equalities(system))


def _confidence_blocks(system: EEBSystem) -> List[AffineBlock]:
    """Algorithm B blocks over (lambda', mu) with mu1 = mu2 = mu"""
    r = system.r
    identity = np.eye(r)[None, :, :]
    plus, minus = _symmetric_parts(system)
    zero = np.zeros((r, r))
    return [
        AffineBlock("eeb", system.logDtilde, np.concatenate([plus, identity])),
        AffineBlock("antisym_plus", zero, np.concatenate([minus, identity])),
        AffineBlock("antisym_minus", zero, np.concatenate([-minus, identity])),
    ]


@dataclass
class IntervalResult:
    """Certified interval [a, b] for v . lambda, or a status explaining its absence"""

    v: List[float]
    status: str
    a: Optional[float] = None
    b: Optional[float] = None
    reason: str = ""
    mu1: Optional[float] = None
    mu2: Optional[float] = None
    relaxation: str = "theorem"
    box: Optional[float] = None
    box_active: bool = False
    inaccurate: bool = False
    argmin: Optional[List[float]] = None
    argmax: Optional[List[float]] = None
    certificate: Optional[FarkasCertificate] = None
    certificate_valid: Optional[bool] = None
    solver_stats: List[Dict] = field(default_factory=list)

    @property
    def width(self) -> Optional[float]:
        if self.a is None or self.b is None:
            return None
        return self.b - self.a

    def contains(self, value: float, slack: Optional[float] = None) -> bool:
        """True for the unbounded sentinel; False when no interval was produced otherwise"""
        slack = get_config().SLACK_TOL if slack is None else slack
        if self.status == UNBOUNDED:
            return True
        if self.a is None or self.b is None:
            return False
        return self.a - slack <= value <= self.b + slack

    def to_dict(self, include_certificate: bool = False) -> Dict:
        data = {
            "v": list(self.v),
            "status": self.status,
            "a": self.a,
            "b": self.b,
            "width": self.width,
            "reason": self.reason,
            "mu1": self.mu1,
            "mu2": self.mu2,
            "relaxation": self.relaxation,
            "box": self.box,
            "box_active": self.box_active,
            "inaccurate": self.inaccurate,
            "certificate_valid": self.certificate_valid,
            "solver_stats": self.solver_stats,
        }
        if include_certificate and self.certificate is not None:
            data["certificate"] = self.certificate.to_dict()
        return data


@dataclass
class ConfidenceResult:
    """Algorithm B output: the smallest mu making the relaxed system feasible"""

    status: str
    mu_star: Optional[float] = None
    lambda_star: Optional[List[float]] = None
    box: Optional[float] = None
    inaccurate: bool = False
    reason: str = ""
    solver_stats: Optional[Dict] = None

    def to_dict(self) -> Dict:
        return {
            "status": self.status,
            "mu_star": self.mu_star,
            "lambda_star": self.lambda_star,
            "box": self.box,
            "inaccurate": self.inaccurate,
            "reason": self.reason,
            "solver_stats": self.solver_stats,
        }


def _guard(system: EEBSystem, epsilon0: float) -> Optional[str]:
    if not system.cond_ok:
        return REASON_NOT_PD
    if epsilon0 > 0 and system.K > 1.0 / epsilon0:
        return REASON_K_GUARD
    return None


def _box_hit(x: Optional[np.ndarray], box: float) -> bool:
    if x is None:
        return False
    return bool(np.any(np.abs(x) >= box * (1 - 1e-6)))


def algorithm_a(
    system: EEBSystem,
    v: Sequence[float],
    epsilon0: float,
    beta: float,
    mu: Optional[Tuple[float, float]] = None,
    tol: Optional[float] = None,
    solver: Optional[str] = None,
    certify_infeasible: bool = True,
) -> IntervalResult:
    """min and max of v . lambda' over the relaxed EEB feasible set

    `mu` replaces the theorem relaxation (mu1, mu2) when given.
    """
    v = np.asarray(v, dtype=float)
    relaxation = "manual" if mu is not None else "theorem"
    reason = _guard(system, epsilon0)
    if reason is not None:
        logger.info(f"Algorithm A guard tripped: {reason}")
        return IntervalResult(v=v.tolist(), status=UNBOUNDED, reason=reason, relaxation=relaxation)
    if v.shape != (system.m,):
        raise ValueError(f"direction has {v.size} entries, system has {system.m} terms")

    mu1, mu2 = mu if mu is not None else relaxation_params(system.K, epsilon0, system.m, beta)
    box = lambda_box(beta)
    result = IntervalResult(
        v=v.tolist(), status=OPTIMAL, mu1=mu1, mu2=mu2, relaxation=relaxation, box=box
    )

    low = solve_lmi(relaxed_problem(system, mu1, mu2, v, "minimize", box), tol=tol, solver=solver)
    result.solver_stats.append(low.stats())
    if low.status == INFEASIBLE:
        result.status = INFEASIBLE
        if certify_infeasible:
            problem = relaxed_problem(system, mu1, mu2, np.zeros(system.m), "minimize", box)
            certificate = low.certificate or farkas_certificate(problem, tol=tol, solver=solver)
            if certificate is not None:
                result.certificate = certificate
                result.certificate_valid = verify_certificate(problem, certificate).valid
        return result
    if low.status != OPTIMAL:
        result.status = low.status
        return result

    high = solve_lmi(relaxed_problem(system, mu1, mu2, v, "maximize", box), tol=tol, solver=solver)
    result.solver_stats.append(high.stats())
    if high.status != OPTIMAL:
        result.status = high.status if high.status != INFEASIBLE else NUMERICAL_FAILURE
        return result

    result.a, result.b = low.objective, high.objective
    if result.a > result.b:
        # both ends agree up to solver tolerance
        result.a = result.b = (result.a + result.b) / 2
    result.argmin, result.argmax = low.x.tolist(), high.x.tolist()
    result.inaccurate = low.inaccurate or high.inaccurate
    result.box_active = _box_hit(low.x, box) or _box_hit(high.x, box)
    if result.box_active:
        logger.info(f"coefficient box {box:g} is active for direction {v.tolist()}")
    return result


def algorithm_b(
    system: EEBSystem,
    beta: float = 1.0,
    tol: Optional[float] = None,
    solver: Optional[str] = None,
) -> ConfidenceResult:
    """Minimize mu >= 0 with mu1 = mu2 = mu"""
    if not system.cond_ok:
        return ConfidenceResult(status=UNBOUNDED, reason=REASON_NOT_PD)
    m = system.m
    box = lambda_box(beta)
    objective = np.zeros(m + 1)
    objective[-1] = 1.0
    lower = np.concatenate([np.full(m, -box), [0.0]])
    upper = np.concatenate([np.full(m, box), [np.inf]])
    problem = LmiProblem(_confidence_blocks(system), objective, "minimize", lower, upper)
    solution = solve_lmi(problem, tol=tol, solver=solver)
    if solution.status != OPTIMAL:
        return ConfidenceResult(status=solution.status, box=box, solver_stats=solution.stats())
    return ConfidenceResult(
        status=OPTIMAL,
        mu_star=max(float(solution.x[-1]), 0.0),
        lambda_star=solution.x[:-1].tolist(),
        box=box,
        inaccurate=solution.inaccurate,
        solver_stats=solution.stats(),
    )


def basis_directions(m: int) -> List[np.ndarray]:
    return [np.eye(m)[a] for a in range(m)]


def coefficient_intervals(
    system: EEBSystem,
    epsilon0: float,
    beta: float,
    directions: Optional[List[Sequence[float]]] = None,
    mu: Optional[Tuple[float, float]] = None,
    tol: Optional[float] = None,
    solver: Optional[str] = None,
    max_workers: Optional[int] = None,
) -> List[IntervalResult]:
    """Algorithm A over each direction (the coefficient basis by default)"""
    directions = basis_directions(system.m) if directions is None else directions
    workers = get_config().SOLVER_THREADS if max_workers is None else max_workers

    def solve(v):
        return algorithm_a(system, v, epsilon0, beta, mu=mu, tol=tol, solver=solver)

    if workers > 1 and len(directions) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(solve, directions))
    return [solve(v) for v in directions]


@dataclass
class CertifyResult:
    verdict: str
    threshold: Optional[float] = None
    confidence: Optional[ConfidenceResult] = None
    certificate: Optional[FarkasCertificate] = None
    certificate_valid: Optional[bool] = None
    reason: str = ""

    def to_dict(self, include_certificate: bool = False) -> Dict:
        data = {
            "verdict": self.verdict,
            "threshold": self.threshold,
            "confidence": self.confidence.to_dict() if self.confidence else None,
            "certificate_valid": self.certificate_valid,
            "reason": self.reason,
        }
        if include_certificate and self.certificate is not None:
            data["certificate"] = self.certificate.to_dict()
        return data


def certify(
    system: EEBSystem,
    epsilon0: float,
    beta: float,
    tol: Optional[float] = None,
    solver: Optional[str] = None,
) -> CertifyResult:
    """Decide whether the data are consistent with a Gibbs state of the ansatz

    A confidence parameter above (2K^3 + 3 m beta K^2) eps0 rules the ansatz out;
    a Farkas certificate for the theorem relaxation is attached when one is found.
    """
    reason = _guard(system, epsilon0)
    if reason is not None:
        return CertifyResult(verdict=VERDICT_INCONCLUSIVE, reason=reason)

    confidence = algorithm_b(system, beta, tol=tol, solver=solver)
    if confidence.status != OPTIMAL:
        return CertifyResult(verdict=VERDICT_INCONCLUSIVE, confidence=confidence, reason=confidence.status)

    mu1, mu2 = relaxation_params(system.K, epsilon0, system.m, beta)
    threshold = max(mu1, get_config().SLACK_TOL)
    result = CertifyResult(verdict=VERDICT_CONSISTENT, threshold=threshold, confidence=confidence)
    if confidence.mu_star <= threshold:
        return result

    result.verdict = VERDICT_NOT_GIBBS
    problem = relaxed_problem(system, mu1, mu2, np.zeros(system.m), "minimize", lambda_box(beta))
    certificate = farkas_certificate(problem, tol=tol, solver=solver)
    if certificate is not None:
        result.certificate = certificate
        result.certificate_valid = verify_certificate(problem, certificate).valid
    return result


@dataclass
class LearnReport:
    """Everything one learning run produced for a single EEB system"""

    K: Optional[float]
    mu1: Optional[float]
    mu2: Optional[float]
    epsilon0: float
    beta: float
    intervals: List[IntervalResult] = field(default_factory=list)
    algorithm_b: Optional[ConfidenceResult] = None
    certification: Optional[CertifyResult] = None

    def to_dict(self, include_certificates: bool = False) -> Dict:
        return {
            "K": self.K,
            "mu1": self.mu1,
            "mu2": self.mu2,
            "epsilon0": self.epsilon0,
            "beta": self.beta,
            "intervals": [i.to_dict(include_certificates) for i in self.intervals],
            "algorithm_b": self.algorithm_b.to_dict() if self.algorithm_b else None,
            "certification": self.certification.to_dict(include_certificates) if self.certification else None,
        }


def learn(
    system: EEBSystem,
    epsilon0: float,
    beta: float,
    directions: Optional[List[Sequence[float]]] = None,
    mu: Optional[Tuple[float, float]] = None,
    run_algorithm_b: bool = True,
    tol: Optional[float] = None,
    solver: Optional[str] = None,
) -> LearnReport:
    """Intervals for every direction plus, optionally, Algorithm B"""
    if system.cond_ok and mu is None:
        mu1, mu2 = relaxation_params(system.K, epsilon0, system.m, beta)
    elif mu is not None:
        mu1, mu2 = mu
    else:
        mu1 = mu2 = None
    report = LearnReport(K=system.K, mu1=mu1, mu2=mu2, epsilon0=epsilon0, beta=beta)
    report.intervals = coefficient_intervals(
        system, epsilon0, beta, directions=directions, mu=mu, tol=tol, solver=solver
    )
    if run_algorithm_b:
        report.algorithm_b = algorithm_b(system, beta, tol=tol, solver=solver)
    return report
