#!/usr/bin/env python3
"""
Linear matrix inequality solver for hamlearn
Affine Hermitian blocks, realified for cvxpy, with Farkas certificates for infeasible problems

Each block is split along its sparsity structure before it reaches the solver: a Hermitian
matrix that is block diagonal up to a permutation is PSD iff every diagonal block is, and
real pieces need no realification. Exact tables of models with symmetries split into many
small cones, which keeps interior-point memory far below the dense size.
"""

import logging
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Tuple

import cvxpy as cp
import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from hamlearn.config import Config, get_config
from hamlearn.errors import DimensionMismatch
from hamlearn.linalg import hermitian_eig, hermitize, min_eigenvalue, realify, unrealify
from hamlearn.perf import monitor_performance

logger = logging.getLogger(__name__)

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"
NUMERICAL_FAILURE = "numerical_failure"

_STATUS_MAP = {
    cp.OPTIMAL: OPTIMAL,
    cp.OPTIMAL_INACCURATE: OPTIMAL,
    cp.INFEASIBLE: INFEASIBLE,
    cp.INFEASIBLE_INACCURATE: INFEASIBLE,
    cp.UNBOUNDED: UNBOUNDED,
    cp.UNBOUNDED_INACCURATE: UNBOUNDED,
}


@dataclass
class AffineBlock:
    """F(x) = offset + sum_k x_k coeffs[k], required to be PSD

    Offset and coefficients are Hermitized on construction.
    """

    name: str
    offset: np.ndarray
    coeffs: np.ndarray  # shape (n_vars, size, size)

    def __post_init__(self):
        self.offset = hermitize(np.asarray(self.offset, dtype=complex))
        coeffs = np.asarray(self.coeffs, dtype=complex)
        self.coeffs = np.stack([hermitize(c) for c in coeffs]) if len(coeffs) else coeffs
        if self.coeffs.shape[1:] != self.offset.shape and len(self.coeffs):
            raise DimensionMismatch(f"block {self.name}: coefficient and offset shapes differ")

    @property
    def size(self) -> int:
        return self.offset.shape[0]

    @property
    def n_vars(self) -> int:
        return len(self.coeffs)

    def evaluate(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.n_vars,):
            raise DimensionMismatch(f"block {self.name} takes {self.n_vars} variables")
        return self.offset + np.tensordot(x, self.coeffs, axes=1)

    def is_constant(self, tol: float = 1e-12) -> bool:
        scale = max(1.0, float(np.max(np.abs(self.offset), initial=0.0)))
        return float(np.max(np.abs(self.coeffs), initial=0.0)) <= tol * scale


@dataclass
class LmiProblem:
    """Optimize objective . x subject to PSD blocks, box bounds (+-inf for open sides)
    and linear equalities `equalities @ x == equality_rhs`
    """

    blocks: List[AffineBlock]
    objective: np.ndarray
    sense: str = "minimize"
    lower: Optional[np.ndarray] = None
    upper: Optional[np.ndarray] = None
    var_names: List[str] = field(default_factory=list)
    equalities: Optional[np.ndarray] = None
    equality_rhs: Optional[np.ndarray] = None

    def __post_init__(self):
        self.objective = np.asarray(self.objective, dtype=float)
        n = len(self.objective)
        self.lower = np.full(n, -np.inf) if self.lower is None else np.asarray(self.lower, dtype=float)
        self.upper = np.full(n, np.inf) if self.upper is None else np.asarray(self.upper, dtype=float)
        if self.sense not in ("minimize", "maximize"):
            raise ValueError("sense must be 'minimize' or 'maximize'")
        for block in self.blocks:
            if block.n_vars != n:
                raise DimensionMismatch(f"block {block.name} has {block.n_vars} variables, expected {n}")

        if self.equalities is None:
            self.equalities = np.zeros((0, n))
        self.equalities = np.asarray(self.equalities, dtype=float).reshape(-1, n)
        k = len(self.equalities)
        self.equality_rhs = np.zeros(k) if self.equality_rhs is None else np.asarray(self.equality_rhs, dtype=float)
        if self.equality_rhs.shape != (k,):
            raise DimensionMismatch(f"{k} equality rows but {self.equality_rhs.size} right-hand sides")

    @property
    def n_vars(self) -> int:
        return len(self.objective)

    @property
    def n_equalities(self) -> int:
        return len(self.equalities)


@dataclass
class FarkasCertificate:
    """Multipliers proving that no x satisfies the blocks, bounds and equalities

    Block multipliers live in realified coordinates (real symmetric, twice the block size);
    equality multipliers are free.
    """

    blocks: List[np.ndarray]
    upper: np.ndarray
    lower: np.ndarray
    value: float
    equalities: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def complex_blocks(self) -> List[np.ndarray]:
        return [unrealify(z) for z in self.blocks]

    def to_dict(self) -> Dict:
        return {
            "value": self.value,
            "upper": self.upper.tolist(),
            "lower": self.lower.tolist(),
            "equalities": self.equalities.tolist(),
            "blocks": [
                [[[float(z.real), float(z.imag)] for z in row] for row in y] for y in self.complex_blocks()
            ],
        }


@dataclass
class CertificateCheck:
    valid: bool
    value: float
    robust_value: float
    stationarity: float
    min_eigenvalue: float
    min_multiplier: float


@dataclass
class LmiSolution:
    status: str
    x: Optional[np.ndarray] = None
    objective: Optional[float] = None
    inaccurate: bool = False
    solver: str = ""
    iterations: Optional[int] = None
    min_block_eigenvalue: Optional[float] = None
    equality_residual: Optional[float] = None
    certificate: Optional[FarkasCertificate] = None
    message: str = ""
    attempts: List[str] = field(default_factory=list)

    def stats(self) -> Dict:
        """Solver statistics for reports; no timings, so reruns stay byte-identical"""
        return {
            "solver": self.solver,
            "status": self.status,
            "iterations": self.iterations,
            "inaccurate": self.inaccurate,
            "min_block_eigenvalue": self.min_block_eigenvalue,
            "equality_residual": self.equality_residual,
            "attempts": list(self.attempts),
            "message": self.message,
        }


@dataclass
class _Piece:
    """One independent PSD cone cut out of a block, vectorized column-major"""

    block: int
    rows: np.ndarray
    real: bool
    size: int
    offset: np.ndarray  # (size * size,)
    coeffs: np.ndarray  # (size * size, n_vars)

    def vec(self, z: cp.Expression) -> cp.Expression:
        return cp.reshape(z, (self.size * self.size,), order="F")

    def embed(self, z: np.ndarray, target: np.ndarray):
        """Add the realified multiplier on the whole block that pairs like z on this piece"""
        full = target.shape[0] // 2
        if self.real:
            for shift in (0, full):
                rows = self.rows + shift
                target[np.ix_(rows, rows)] += z / 2
        else:
            rows = np.concatenate([self.rows, self.rows + full])
            target[np.ix_(rows, rows)] += z


def _vectorized(matrices: List[np.ndarray], n_vars: int, size: int) -> np.ndarray:
    if not matrices:
        return np.zeros((size * size, n_vars))
    return np.stack([c.ravel(order="F") for c in matrices], axis=1)


def _affine_map(block: AffineBlock) -> Tuple[np.ndarray, np.ndarray]:
    """Realified block as (vec offset, coefficient matrix) so that vec F(x) = offset + coeffs @ x"""
    r0 = realify(block.offset)
    coeffs = block.coeffs.reshape(block.n_vars, block.size, block.size)
    return r0.ravel(order="F"), _vectorized([realify(c) for c in coeffs], block.n_vars, r0.shape[0])


def _components(block: AffineBlock, tol: float) -> List[np.ndarray]:
    coeffs = block.coeffs.reshape(block.n_vars, block.size, block.size)
    pattern = np.abs(block.offset) + np.sum(np.abs(coeffs), axis=0)
    adjacency = pattern > tol * float(np.max(pattern, initial=0.0))
    count, labels = connected_components(csr_matrix(adjacency), directed=False)
    return [np.flatnonzero(labels == c) for c in range(count)]


def _pieces(index: int, block: AffineBlock, tol: float) -> List[_Piece]:
    coeffs = block.coeffs.reshape(block.n_vars, block.size, block.size)
    pieces = []
    for rows in _components(block, tol):
        offset = block.offset[np.ix_(rows, rows)]
        sub = coeffs[:, rows][:, :, rows]
        scale = max(float(np.max(np.abs(offset))), float(np.max(np.abs(sub), initial=0.0)))
        if scale == 0.0:
            # 0 >= 0
            continue
        imag = max(float(np.max(np.abs(offset.imag))), float(np.max(np.abs(sub.imag), initial=0.0)))
        real = imag <= tol * scale
        if real:
            r0, rk = offset.real, [c.real for c in sub]
        else:
            r0, rk = realify(offset), [realify(c) for c in sub]
        size = r0.shape[0]
        pieces.append(
            _Piece(
                block=index,
                rows=rows,
                real=real,
                size=size,
                offset=r0.ravel(order="F"),
                coeffs=_vectorized(rk, block.n_vars, size),
            )
        )
    return pieces


def _problem_pieces(problem: LmiProblem, settings: Config, skip_constant: bool = False) -> List[_Piece]:
    pieces = []
    for index, block in enumerate(problem.blocks):
        if skip_constant and block.is_constant():
            continue
        pieces.extend(_pieces(index, block, settings.STRUCTURE_TOL))
    return pieces


def _pick_solver(pieces: List[_Piece], solver: str, settings: Config) -> str:
    """Clarabel's KKT system is dense in each PSD cone, so large cones go to a first-order solver"""
    largest = max((p.size for p in pieces), default=0)
    large = (settings.LARGE_PSD_SOLVER or "").upper()
    if solver == "CLARABEL" and large and largest > settings.LARGE_PSD_SIZE:
        logger.info(f"PSD cone of size {largest} exceeds {settings.LARGE_PSD_SIZE}; using {large}")
        return large
    return solver


def _solver_options(solver: str, tol: float, max_iters: int) -> Dict:
    if solver == "CLARABEL":
        return {"tol_gap_abs": tol, "tol_gap_rel": tol, "tol_feas": tol, "max_iter": max_iters}
    if solver == "SCS":
        return {"eps_abs": tol, "eps_rel": tol, "max_iters": max_iters * 20}
    return {}


def _run(problem: cp.Problem, solver: str, tol: float, max_iters: int):
    """Solve and map the status; solver exceptions become numerical failures"""
    try:
        problem.solve(solver=solver, **_solver_options(solver, tol, max_iters))
    except cp.error.SolverError as e:
        logger.warning(f"{solver} failed: {e}")
        return NUMERICAL_FAILURE, False, str(e)
    status = _STATUS_MAP.get(problem.status, NUMERICAL_FAILURE)
    inaccurate = problem.status in (cp.OPTIMAL_INACCURATE, cp.INFEASIBLE_INACCURATE, cp.UNBOUNDED_INACCURATE)
    if status != OPTIMAL or inaccurate:
        logger.warning(f"{solver} returned status {problem.status}")
    return status, inaccurate, str(problem.status)


def _with_fallback(attempt: Callable[[str], LmiSolution], solver: str, settings: Config) -> LmiSolution:
    """Run attempt(solver) and retry once with the fallback solver after a numerical failure"""
    solution = attempt(solver)
    attempts = [f"{solver}:{solution.status}"]
    fallback = (settings.FALLBACK_SOLVER or "").upper()
    if solution.status == NUMERICAL_FAILURE and fallback and fallback != solver:
        logger.warning(f"{solver} failed numerically; retrying with {fallback}")
        solution = attempt(fallback)
        attempts.append(f"{fallback}:{solution.status}")
    solution.attempts = attempts
    return solution


def _constant_block_certificate(problem: LmiProblem, index: int, tol: float) -> Optional[FarkasCertificate]:
    """Eigenvector certificate for a variable-free block that is not PSD"""
    eig = hermitian_eig(problem.blocks[index].offset)
    if eig.min >= -tol:
        return None
    v = eig.vectors[:, 0]
    w = np.concatenate([v.real, v.imag])
    w /= np.linalg.norm(w)
    blocks = [np.zeros((2 * b.size, 2 * b.size)) for b in problem.blocks]
    blocks[index] = np.outer(w, w)
    zeros = np.zeros(problem.n_vars)
    return FarkasCertificate(
        blocks=blocks,
        upper=zeros,
        lower=zeros.copy(),
        value=eig.min,
        equalities=np.zeros(problem.n_equalities),
    )


def _primal(problem: LmiProblem, pieces: List[_Piece], solver: str, tol: float, max_iters: int) -> LmiSolution:
    x = cp.Variable(problem.n_vars)
    constraints = [cp.reshape(p.coeffs @ x + p.offset, (p.size, p.size), order="F") >> 0 for p in pieces]
    lower = np.flatnonzero(np.isfinite(problem.lower))
    upper = np.flatnonzero(np.isfinite(problem.upper))
    if lower.size:
        constraints.append(x[lower] >= problem.lower[lower])
    if upper.size:
        constraints.append(x[upper] <= problem.upper[upper])
    if problem.n_equalities:
        constraints.append(problem.equalities @ x == problem.equality_rhs)

    goal = problem.objective @ x
    objective = cp.Minimize(goal) if problem.sense == "minimize" else cp.Maximize(goal)
    cvx_problem = cp.Problem(objective, constraints)
    status, inaccurate, message = _run(cvx_problem, solver, tol, max_iters)

    solution = LmiSolution(status=status, inaccurate=inaccurate, solver=solver, message=message)
    stats = cvx_problem.solver_stats
    if stats is not None:
        solution.iterations = stats.num_iters

    if status == OPTIMAL and x.value is not None:
        solution.x = np.asarray(x.value, dtype=float)
        solution.objective = float(problem.objective @ solution.x)
        solution.min_block_eigenvalue = min(
            (min_eigenvalue(b.evaluate(solution.x)) for b in problem.blocks), default=None
        )
        if problem.n_equalities:
            solution.equality_residual = float(
                np.max(np.abs(problem.equalities @ solution.x - problem.equality_rhs))
            )
    elif status == OPTIMAL:
        solution.status = NUMERICAL_FAILURE
        solution.message = "solver reported optimal without a primal point"
    return solution


@monitor_performance
def solve_lmi(
    problem: LmiProblem,
    tol: Optional[float] = None,
    solver: Optional[str] = None,
    max_iters: Optional[int] = None,
    certify: bool = False,
) -> LmiSolution:
    """Solve an LMI problem; infeasible problems optionally carry a Farkas certificate

    A numerical failure is retried once with FALLBACK_SOLVER; `attempts` lists every try.
    """
    settings = get_config()
    tol = settings.SOLVER_TOL if tol is None else tol
    solver = (solver or settings.SOLVER).upper()
    max_iters = settings.SOLVER_MAX_ITERS if max_iters is None else max_iters
    if tol <= 0:
        raise ValueError("tol must be positive")

    # Blocks without variables are decided once, numerically
    for index, block in enumerate(problem.blocks):
        if block.is_constant():
            certificate = _constant_block_certificate(problem, index, tol)
            if certificate is not None:
                logger.info(f"constant block {block.name} is not PSD; problem infeasible")
                return LmiSolution(
                    status=INFEASIBLE,
                    solver=solver,
                    certificate=certificate,
                    message=f"constant block {block.name} is not PSD",
                )

    pieces = _problem_pieces(problem, settings, skip_constant=True)
    solver = _pick_solver(pieces, solver, settings)
    solution = _with_fallback(lambda name: _primal(problem, pieces, name, tol, max_iters), solver, settings)
    if solution.status == INFEASIBLE and certify:
        solution.certificate = farkas_certificate(problem, tol=tol, solver=solution.solver, max_iters=max_iters)
    return solution


def _dual(problem: LmiProblem, pieces: List[_Piece], solver: str, tol: float, max_iters: int) -> LmiSolution:
    n = problem.n_vars
    has_upper = np.isfinite(problem.upper)
    has_lower = np.isfinite(problem.lower)
    u = cp.Variable(n, nonneg=True)
    w = cp.Variable(n, nonneg=True)
    zs = [cp.Variable((p.size, p.size), symmetric=True) for p in pieces]

    constraints = [z >> 0 for z in zs]
    if np.any(~has_upper):
        constraints.append(u[np.flatnonzero(~has_upper)] == 0)
    if np.any(~has_lower):
        constraints.append(w[np.flatnonzero(~has_lower)] == 0)

    hi = np.where(has_upper, problem.upper, 0.0)
    lo = np.where(has_lower, problem.lower, 0.0)
    stationarity = sum((p.coeffs.T @ p.vec(z) for p, z in zip(pieces, zs)), np.zeros(n)) - u + w
    value = sum((p.offset @ p.vec(z) for p, z in zip(pieces, zs)), 0.0) + hi @ u - lo @ w
    mass = sum((cp.trace(z) for z in zs), 0.0) + cp.sum(u) + cp.sum(w)

    t = None
    if problem.n_equalities:
        t = cp.Variable(problem.n_equalities)
        s = cp.Variable(problem.n_equalities, nonneg=True)
        stationarity = stationarity + problem.equalities.T @ t
        value = value - problem.equality_rhs @ t
        mass = mass + cp.sum(s)
        constraints += [t <= s, -s <= t]
    constraints += [stationarity == 0, mass == 1]

    cvx_problem = cp.Problem(cp.Minimize(value), constraints)
    status, inaccurate, message = _run(cvx_problem, solver, tol, max_iters)
    solution = LmiSolution(status=status, inaccurate=inaccurate, solver=solver, message=message)
    if status != OPTIMAL or cvx_problem.value is None:
        if status == OPTIMAL:
            solution.status = NUMERICAL_FAILURE
        return solution
    solution.objective = float(cvx_problem.value)
    if cvx_problem.value >= -tol:
        logger.info(f"no Farkas certificate found (best value {cvx_problem.value:.3e})")
        return solution

    blocks = [np.zeros((2 * b.size, 2 * b.size)) for b in problem.blocks]
    for piece, z in zip(pieces, zs):
        piece.embed((z.value + z.value.T) / 2, blocks[piece.block])
    solution.certificate = FarkasCertificate(
        blocks=blocks,
        upper=np.asarray(u.value, dtype=float),
        lower=np.asarray(w.value, dtype=float),
        value=float(cvx_problem.value),
        equalities=np.asarray(t.value, dtype=float) if t is not None else np.zeros(0),
    )
    return solution


@monitor_performance
def farkas_certificate(
    problem: LmiProblem,
    tol: Optional[float] = None,
    solver: Optional[str] = None,
    max_iters: Optional[int] = None,
) -> Optional[FarkasCertificate]:
    """Search for Y_k >= 0, u, w >= 0 and free t with stationarity and a negative value

    For every feasible x, sum <Y_k, F_k(x)> + u.(hi - x) + w.(x - lo) + t.(N x - b) >= 0;
    when the x-dependence cancels the remaining constant must be nonnegative, so a
    negative optimum proves infeasibility. The multipliers are normalized to unit total mass.
    """
    settings = get_config()
    tol = settings.SOLVER_TOL if tol is None else tol
    solver = (solver or settings.SOLVER).upper()
    max_iters = settings.SOLVER_MAX_ITERS if max_iters is None else max_iters

    pieces = _problem_pieces(problem, settings)
    solver = _pick_solver(pieces, solver, settings)
    solution = _with_fallback(lambda name: _dual(problem, pieces, name, tol, max_iters), solver, settings)
    return solution.certificate


def verify_certificate(
    problem: LmiProblem, certificate: FarkasCertificate, tol: float = 1e-6
) -> CertificateCheck:
    """Independent re-check of a Farkas certificate against the dense problem data

    The stationarity residual is charged against the box, giving a robust value that
    must stay negative for the certificate to be accepted.
    """
    n = problem.n_vars
    if len(certificate.blocks) != len(problem.blocks):
        raise DimensionMismatch("certificate and problem have different block counts")
    if certificate.equalities.shape != (problem.n_equalities,):
        raise DimensionMismatch("certificate and problem have different equality counts")

    residual = np.zeros(n)
    value = 0.0
    min_eig = np.inf
    for z, block in zip(certificate.blocks, problem.blocks):
        if z.shape != (2 * block.size, 2 * block.size):
            raise DimensionMismatch(f"multiplier for block {block.name} has shape {z.shape}")
        flat = z.ravel(order="F")
        r0, coeffs = _affine_map(block)
        value += float(r0 @ flat)
        residual += coeffs.T @ flat
        if z.size:
            min_eig = min(min_eig, float(np.linalg.eigvalsh((z + z.T) / 2)[0]))
    residual += -certificate.upper + certificate.lower
    if problem.n_equalities:
        residual += problem.equalities.T @ certificate.equalities
        value -= float(problem.equality_rhs @ certificate.equalities)

    has_upper = np.isfinite(problem.upper)
    has_lower = np.isfinite(problem.lower)
    value += float(np.where(has_upper, problem.upper, 0.0) @ certificate.upper)
    value -= float(np.where(has_lower, problem.lower, 0.0) @ certificate.lower)
    # multipliers on open sides are meaningless
    stray = float(np.sum(np.abs(certificate.upper[~has_upper])) + np.sum(np.abs(certificate.lower[~has_lower])))

    robust = value
    for k in range(n):
        reach = max(abs(problem.lower[k]), abs(problem.upper[k]))
        if np.isfinite(reach):
            robust += reach * abs(residual[k])
        elif abs(residual[k]) > tol:
            robust = np.inf

    min_multiplier = float(min(np.min(certificate.upper, initial=0.0), np.min(certificate.lower, initial=0.0)))
    valid = (
        robust < -tol
        and min_eig >= -tol
        and min_multiplier >= -tol
        and stray <= tol
    )
    return CertificateCheck(
        valid=bool(valid),
        value=value,
        robust_value=float(robust),
        stationarity=float(np.max(np.abs(residual), initial=0.0)),
        min_eigenvalue=float(min_eig),
        min_multiplier=min_multiplier,
    )
