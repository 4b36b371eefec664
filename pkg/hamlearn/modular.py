#!/usr/bin/env python3
"""
Modular theory toolkit for hamlearn
Dense GNS-space constructions of the modular operator, the star map, the modular conjugation,
GNS Hamiltonians and their compressions onto perturber spans; used as a brute-force oracle
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from hamlearn.config import get_config
from hamlearn.eeb import assemble
from hamlearn.errors import MissingDecomposition, NotPositiveDefinite, OracleCapError
from hamlearn.linalg import HermitianEig, hermitian_eig, hermitize, spectral_norm
from hamlearn.model import HamiltonianModel, build_dual_graph, enumerate_Pkl, predicted_support
from hamlearn.oracle import GibbsState, build_gibbs, measure_tables
from hamlearn.pauli import PauliString, all_paulis, is_selfadjoint, to_dense

logger = logging.getLogger(__name__)

FAITHFUL_FLOOR = 1e-12


def _relative(residual: np.ndarray, reference: np.ndarray) -> float:
    return spectral_norm(residual) / max(1.0, spectral_norm(reference))


@dataclass
class CheckReport:
    """Named residuals, each compared with the report tolerance or its own bound"""

    name: str
    tol: float
    checks: Dict[str, Dict] = field(default_factory=dict)

    def add(self, label: str, residual: float, bound: Optional[float] = None):
        limit = self.tol if bound is None else bound
        self.checks[label] = {
            "residual": float(residual),
            "bound": float(limit),
            "passed": bool(residual <= limit),
        }

    def merge(self, other: "CheckReport", prefix: Optional[str] = None):
        prefix = other.name if prefix is None else prefix
        for label, item in other.checks.items():
            self.checks[f"{prefix}.{label}"] = dict(item)

    @property
    def passed(self) -> bool:
        return all(item["passed"] for item in self.checks.values())

    def failures(self) -> List[str]:
        return [label for label, item in self.checks.items() if not item["passed"]]

    def to_dict(self) -> Dict:
        return {"name": self.name, "tol": self.tol, "passed": self.passed, "checks": self.checks}


# ----------------------------------------------------------------------
# GNS space and antilinear operators
# ----------------------------------------------------------------------


class GnsSpace:
    """Operator algebra of an n-qubit system with <a|b> = w(a* b)

    Vectors are stored in Pauli coordinates (X = sum_k c_k P_k). Orthonormal
    coordinates are y = G^{1/2} c with G the Gram matrix of the Pauli basis.
    """

    def __init__(self, state: GibbsState, cap: Optional[int] = None):
        limit = get_config().MODULAR_CAP if cap is None else cap
        if state.n > limit:
            raise OracleCapError(f"modular constructions are capped at {limit} qubits")
        rho_eig = hermitian_eig(state.rho)
        if rho_eig.min <= FAITHFUL_FLOOR:
            raise NotPositiveDefinite(f"state is not faithful (smallest eigenvalue {rho_eig.min:.3e})")

        self.state = state
        self.n = state.n
        self.d = state.dim
        self.rho = state.rho
        self.rho_eig = rho_eig
        self.basis = all_paulis(self.n)
        self.index = {p.key: k for k, p in enumerate(self.basis)}
        self.paulis = np.stack([to_dense(p).flatten(order="F") for p in self.basis], axis=1)

        identity = np.eye(self.d)
        # G_kl = Tr(rho P_k P_l) = vec(P_k)^dag (rho^T (x) 1) vec(P_l)
        self.gram = hermitize(self.paulis.conj().T @ np.kron(self.rho.T, identity) @ self.paulis)
        self.gram_eig = hermitian_eig(self.gram)
        self.gram_sqrt = self.gram_eig.sqrt()
        self.gram_invsqrt = self.gram_eig.invsqrt()

    @property
    def size(self) -> int:
        return self.d * self.d

    def coords(self, a: np.ndarray) -> np.ndarray:
        """Pauli coordinates of a dense operator"""
        return self.paulis.conj().T @ a.flatten(order="F") / self.d

    def operator(self, c: np.ndarray) -> np.ndarray:
        return (self.paulis @ c).reshape((self.d, self.d), order="F")

    def superop(self, vec_matrix: np.ndarray) -> np.ndarray:
        """Pauli-coordinate matrix of a superoperator given on column-major vec space"""
        return self.paulis.conj().T @ vec_matrix @ self.paulis / self.d

    def orthonormal(self, m: np.ndarray) -> np.ndarray:
        """Linear map in orthonormal coordinates"""
        return self.gram_sqrt @ m @ self.gram_invsqrt

    def inner(self, a: np.ndarray, b: np.ndarray) -> complex:
        """<a|b> = w(a* b)"""
        return complex(np.trace(self.rho @ a.conj().T @ b))

    def conjugation(self, p: float) -> np.ndarray:
        """Vec-space matrix of X -> rho^p X rho^-p"""
        return np.kron(self.rho_eig.power(-p).T, self.rho_eig.power(p))


@dataclass
class Antilinear:
    """Antilinear operator y -> linear @ conj(y)"""

    linear: np.ndarray

    def apply(self, y: np.ndarray) -> np.ndarray:
        return self.linear @ np.conj(y)

    def compose(self, other):
        """self after other; antilinear after antilinear is linear"""
        if isinstance(other, Antilinear):
            return self.linear @ np.conj(other.linear)
        return Antilinear(self.linear @ np.conj(other))

    def premultiply(self, linear: np.ndarray) -> "Antilinear":
        """linear after self"""
        return Antilinear(linear @ self.linear)

    def adjoint(self) -> "Antilinear":
        return Antilinear(self.linear.T)

    def sandwich(self, linear: np.ndarray) -> np.ndarray:
        """self L self"""
        return self.linear @ np.conj(linear) @ np.conj(self.linear)


def polar_decomposition(s: Antilinear) -> Tuple[np.ndarray, HermitianEig, Antilinear]:
    """S = J Delta^{1/2} with Delta = S^dag S; returns (Delta, its eigensystem, J)"""
    delta = hermitize(s.adjoint().compose(s))
    eig = hermitian_eig(delta)
    if eig.min <= 0:
        raise NotPositiveDefinite("S^dag S is singular")
    j = s.compose(eig.invsqrt())
    return delta, eig, j


@dataclass
class ModularTriple:
    """Delta, S and J of a faithful state in orthonormal GNS coordinates"""

    space: GnsSpace
    delta: np.ndarray
    delta_eig: HermitianEig
    s: Antilinear
    j: Antilinear

    def delta_power(self, p: float) -> np.ndarray:
        return self.delta_eig.power(p)

    def log_delta(self) -> np.ndarray:
        return self.delta_eig.log()


def build_modular(state: GibbsState, space: Optional[GnsSpace] = None) -> ModularTriple:
    """Delta by a -> rho a rho^-1, S by a -> a*, J = S Delta^{-1/2}"""
    space = space or GnsSpace(state)
    delta = hermitize(space.orthonormal(space.superop(space.conjugation(1.0))))
    delta_eig = hermitian_eig(delta)
    # The star map is entrywise conjugation in Hermitian Pauli coordinates
    s = Antilinear(space.gram_sqrt @ np.conj(space.gram_invsqrt))
    j = s.compose(delta_eig.invsqrt())
    return ModularTriple(space=space, delta=delta, delta_eig=delta_eig, s=s, j=j)


def gns_hamiltonian(space: GnsSpace, h: np.ndarray) -> np.ndarray:
    """|a> -> |[h, a]> in orthonormal coordinates"""
    h = np.asarray(h, dtype=complex)
    if h.shape != (space.d, space.d):
        raise ValueError(f"operator has shape {h.shape}, expected {(space.d, space.d)}")
    if spectral_norm(h - h.conj().T) > 1e-12 * max(1.0, spectral_norm(h)):
        raise ValueError("h must be Hermitian")
    identity = np.eye(space.d)
    vec = np.kron(identity, h) - np.kron(h.T, identity)
    return space.orthonormal(space.superop(vec))


# ----------------------------------------------------------------------
# Identity checks on the full GNS space
# ----------------------------------------------------------------------


def verify_antilinear_polar(
    s: Antilinear, tol: float = 1e-9, powers: Sequence[float] = (1.0, 0.5, -0.5, 2.0)
) -> CheckReport:
    """Polar-decomposition identities for an antilinear operator that should be an involution"""
    report = CheckReport("polar", tol)
    identity = np.eye(s.linear.shape[0])
    report.add("S^2 = 1", spectral_norm(s.compose(s) - identity))
    try:
        delta, eig, j = polar_decomposition(s)
    except NotPositiveDefinite:
        report.add("Delta > 0", np.inf)
        return report

    for p in powers:
        target = eig.power(-p)
        report.add(f"S Delta^{p:g} S = Delta^{-p:g}", _relative(s.sandwich(eig.power(p)) - target, target))
    sqrt_delta = eig.sqrt()
    report.add("J = Delta^1/2 S", _relative(j.linear - sqrt_delta @ s.linear, j.linear))
    report.add("S = Delta^-1/2 J", _relative(s.linear - eig.invsqrt() @ j.linear, s.linear))
    report.add("J^dag = J", spectral_norm(j.linear - j.linear.T))
    report.add("J^2 = 1", spectral_norm(j.compose(j) - identity))
    log_delta = eig.log()
    report.add("J log Delta J = -log Delta", _relative(j.sandwich(log_delta) + log_delta, log_delta))
    return report


def verify_modular_identities(state: GibbsState, tol: float = 1e-9, triple: Optional[ModularTriple] = None) -> CheckReport:
    """Polar identities of the star map plus agreement of S^dag S with a -> rho a rho^-1"""
    triple = triple or build_modular(state)
    report = verify_antilinear_polar(triple.s, tol)
    report.name = "modular_identities"
    polar_delta = hermitize(triple.s.adjoint().compose(triple.s))
    report.add("Delta = S^dag S", _relative(polar_delta - triple.delta, triple.delta))
    return report


def symmetry_equivalence(state: GibbsState, h: np.ndarray, triple: Optional[ModularTriple] = None) -> Dict[str, float]:
    """Residuals of [h, rho] = 0, H = H^dag and J H J = -H; all vanish together or none do"""
    triple = triple or build_modular(state)
    big_h = gns_hamiltonian(triple.space, h)
    return {
        "commutator": spectral_norm(h @ state.rho - state.rho @ h),
        "hermiticity": spectral_norm(big_h - big_h.conj().T),
        "j_odd": spectral_norm(triple.j.sandwich(big_h) + big_h),
    }


def gibbs_condition(state: GibbsState, h: np.ndarray, triple: Optional[ModularTriple] = None) -> float:
    """||log Delta + H||, zero exactly when rho is the Gibbs state of h"""
    triple = triple or build_modular(state)
    return spectral_norm(triple.log_delta() + gns_hamiltonian(triple.space, h))


def hnorm_bound(state: GibbsState, h: np.ndarray, triple: Optional[ModularTriple] = None) -> Tuple[float, float]:
    """(||H||_gns, 2||h||); the first is at most the second when h is a symmetry of rho"""
    triple = triple or build_modular(state)
    return spectral_norm(gns_hamiltonian(triple.space, h)), 2.0 * spectral_norm(h)


# ----------------------------------------------------------------------
# Restricted operators
# ----------------------------------------------------------------------


@dataclass
class RestrictedOps:
    """Compressions onto span{P_i} in the basis a_i = sum_j (C^{-1/2})_ji P_j"""

    C: np.ndarray
    embedding: np.ndarray  # orthonormal full coordinates of a_i as columns
    dbold: np.ndarray
    dbold_eig: HermitianEig
    sbold: Antilinear
    jbold: Antilinear

    def coordinates_of(self, j: int) -> np.ndarray:
        """Coordinates of P_j in the a-basis"""
        return hermitian_eig(self.C).sqrt()[:, j]


def restricted_ops(
    state: GibbsState, perturbers: List[PauliString], triple: Optional[ModularTriple] = None
) -> RestrictedOps:
    """D = Q Delta Q, S = Q S Q and J = S D^{-1/2} on the perturber span"""
    triple = triple or build_modular(state)
    space = triple.space
    selection = np.zeros((space.size, len(perturbers)), dtype=complex)
    for j, p in enumerate(perturbers):
        if not is_selfadjoint(p):
            raise ValueError(f"perturber {p.label} is not Hermitian")
        selection[space.index[p.key], j] = 1j ** p.coefficient_power

    C = hermitize(selection.conj().T @ space.gram @ selection)
    c_eig = hermitian_eig(C)
    if c_eig.min <= get_config().PD_TOLERANCE_FACTOR * len(perturbers):
        raise NotPositiveDefinite("perturber Gram matrix is degenerate")
    embedding = space.gram_sqrt @ selection @ c_eig.invsqrt()

    dbold = hermitize(embedding.conj().T @ triple.delta @ embedding)
    dbold_eig = hermitian_eig(dbold)
    sbold = Antilinear(embedding.conj().T @ triple.s.linear @ np.conj(embedding))
    jbold = sbold.compose(dbold_eig.invsqrt())
    return RestrictedOps(C=C, embedding=embedding, dbold=dbold, dbold_eig=dbold_eig, sbold=sbold, jbold=jbold)


def verify_restricted(ops: RestrictedOps, tol: float = 1e-9) -> CheckReport:
    report = CheckReport("restricted_identities", tol)
    identity = np.eye(ops.dbold.shape[0])
    eig = ops.dbold_eig
    j = ops.jbold
    report.add("J^2 = 1", spectral_norm(j.compose(j) - identity))
    report.add("J^dag = J", spectral_norm(j.linear - j.linear.T))
    report.add("J D J = D^-1", _relative(j.sandwich(ops.dbold) - eig.power(-1.0), eig.power(-1.0)))
    report.add("J D^1/2 J = D^-1/2", _relative(j.sandwich(eig.sqrt()) - eig.invsqrt(), eig.invsqrt()))
    log_d = eig.log()
    report.add("J log D J = -log D", _relative(j.sandwich(log_d) + log_d, log_d))
    report.add("D = S^dag S", _relative(ops.sbold.adjoint().compose(ops.sbold) - ops.dbold, ops.dbold))
    return report


def restricted_vs_compressed_j(
    state: GibbsState, perturbers: List[PauliString], triple: Optional[ModularTriple] = None
) -> float:
    """||J_restricted - Q J Q||; nonzero in general"""
    triple = triple or build_modular(state)
    ops = restricted_ops(state, perturbers, triple)
    v = ops.embedding
    compressed = v.conj().T @ triple.j.linear @ np.conj(v)
    return spectral_norm(ops.jbold.linear - compressed)


def cross_oracle(
    state: GibbsState,
    perturbers: List[PauliString],
    terms: List[PauliString],
    tol: float = 1e-10,
    triple: Optional[ModularTriple] = None,
) -> CheckReport:
    """EEB matrices from exact tables against the compressed modular operators"""
    triple = triple or build_modular(state)
    ops = restricted_ops(state, perturbers, triple)
    system = assemble(measure_tables(state, perturbers, terms))
    report = CheckReport("cross_oracle", tol)
    if not system.cond_ok:
        report.add("C positive definite", np.inf)
        return report

    v = ops.embedding
    report.add("D", _relative(system.Dtilde - ops.dbold, ops.dbold))
    report.add("log D", _relative(system.logDtilde - ops.dbold_eig.log(), ops.dbold_eig.log()))
    for term, h_alpha in zip(terms, system.Htilde):
        compressed = v.conj().T @ gns_hamiltonian(triple.space, to_dense(term)) @ v
        report.add(f"H[{term.letters}]", _relative(h_alpha - compressed, compressed))
    return report


# ----------------------------------------------------------------------
# Commuting locality
# ----------------------------------------------------------------------


def verify_commuting_locality(
    model: HamiltonianModel,
    ell_prime: int = 1,
    p: int = 1,
    tol: float = 1e-9,
    strict: bool = True,
    coeffs: Optional[Sequence[float]] = None,
) -> CheckReport:
    """Locality of Delta^p |a> and agreement of full and restricted modular operators on it

    Every a in the level-ell' hierarchy is checked against the level (1 + d) ell'
    compression. strict=False runs the same checks on models without a commuting
    decomposition, where they are expected to fail.
    """
    if strict and model.commuting_decomposition is None:
        raise MissingDecomposition(f"model {model.name or '<unnamed>'} has no commuting decomposition")

    state = build_gibbs(model, coeffs)
    triple = build_modular(state)
    space = triple.space
    degree = build_dual_graph(model).degree
    level = (1 + degree) * ell_prime
    perturbers = enumerate_Pkl(model, level)
    candidates = enumerate_Pkl(model, ell_prime)
    ops = restricted_ops(state, perturbers, triple)
    column = {q.key: i for i, q in enumerate(perturbers)}

    lam = model.resolve_coeffs(coeffs)
    if model.commuting_decomposition is not None:
        nu_max = max(abs(nu) for _, nu in model.commuting_decomposition)
    else:
        nu_max = float(np.max(np.abs(lam)))
    norm_bound = float(np.exp(2.0 * nu_max * (1 + degree) * ell_prime))

    conj_p = space.conjugation(float(p))
    conj_one = space.conjugation(1.0)
    supports = [q.support for q in space.basis]
    full_p = triple.delta_power(p)
    full_half = triple.delta_power(0.5)
    d_p = ops.dbold_eig.power(p)
    d_half = ops.dbold_eig.sqrt()
    c_sqrt = hermitian_eig(ops.C).sqrt()

    report = CheckReport("commuting_locality", tol)
    for a in candidates:
        dense_a = to_dense(a)
        vec_a = dense_a.flatten(order="F")
        moved = space.coords((conj_p @ vec_a).reshape((space.d, space.d), order="F"))
        allowed = predicted_support(model, a.support)
        outside = sum(abs(c) for c, s in zip(moved, supports) if not s <= allowed)
        report.add(f"support[{a.letters}]", outside)

        conjugated = (conj_one @ vec_a).reshape((space.d, space.d), order="F")
        report.add(f"norm[{a.letters}]", spectral_norm(conjugated), norm_bound * (1 + tol))

        # |a> in the restricted basis and in full orthonormal coordinates
        y = c_sqrt[:, column[a.key]] * (1j ** a.coefficient_power)
        full = ops.embedding @ y
        report.add(f"Delta^{p}[{a.letters}]", _relative(full_p @ full - ops.embedding @ (d_p @ y), full_p @ full))
        report.add(f"Delta^1/2[{a.letters}]", _relative(full_half @ full - ops.embedding @ (d_half @ y), full))
        report.add(f"J[{a.letters}]", spectral_norm(triple.j.apply(full) - ops.embedding @ ops.jbold.apply(y)))
    return report


def verify_suite(
    model: HamiltonianModel,
    perturbers: Optional[List[PauliString]] = None,
    level: int = 1,
    tol: float = 1e-9,
    coeffs: Optional[Sequence[float]] = None,
) -> CheckReport:
    """Every modular identity for the Gibbs state of `model`, bundled for the verify task"""
    state = build_gibbs(model, coeffs)
    triple = build_modular(state)
    perturbers = perturbers or enumerate_Pkl(model, level)
    h = state.hamiltonian

    suite = CheckReport("verify_modular", tol)
    suite.merge(verify_modular_identities(state, tol, triple))
    suite.add("gibbs_condition", gibbs_condition(state, h, triple) / max(1.0, spectral_norm(h)))
    for label, residual in symmetry_equivalence(state, h, triple).items():
        suite.add(f"symmetry.{label}", residual / max(1.0, spectral_norm(h)))
    measured, bound = hnorm_bound(state, h, triple)
    suite.add("hnorm_bound", measured, bound * (1 + tol))

    ops = restricted_ops(state, perturbers, triple)
    suite.merge(verify_restricted(ops, tol))
    suite.merge(cross_oracle(state, perturbers, model.terms, tol=max(tol, 1e-10), triple=triple))
    if model.commuting_decomposition is not None:
        suite.merge(verify_commuting_locality(model, 1, 1, tol, coeffs=coeffs))
    logger.info(f"modular suite: {len(suite.checks)} checks, {len(suite.failures())} failed")
    return suite
