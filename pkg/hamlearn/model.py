#!/usr/bin/env python3
"""
Hamiltonian ansatz for hamlearn
Term lists, dual interaction graphs and the perturbing-operator hierarchy
"""

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, FrozenSet, List, Optional, Sequence, Tuple, Union

import numpy as np

from hamlearn.errors import MissingDecomposition
from hamlearn.pauli import PauliString, commutes, is_selfadjoint, paulis_on, to_dense

logger = logging.getLogger(__name__)


@dataclass
class HamiltonianModel:
    """h = sum_a lambda_a E_a over selfadjoint Pauli terms E_a"""

    n: int
    terms: List[PauliString]
    true_coeffs: Optional[np.ndarray] = None
    commuting_decomposition: Optional[List[Tuple[PauliString, float]]] = None
    name: str = ""

    def __post_init__(self):
        if self.true_coeffs is not None:
            self.true_coeffs = np.asarray(self.true_coeffs, dtype=float)
        self.validate()

    @property
    def m(self) -> int:
        return len(self.terms)

    @property
    def locality(self) -> int:
        """k: the largest term support"""
        return max((t.weight for t in self.terms), default=0)

    @property
    def term_labels(self) -> List[str]:
        return [t.label for t in self.terms]

    @property
    def beta(self) -> float:
        """max |lambda_a| of the fixture coefficients (0 when unknown)"""
        if self.true_coeffs is None or self.m == 0:
            return 0.0
        return float(np.max(np.abs(self.true_coeffs)))

    def validate(self):
        """Raise ValueError when a model invariant is violated"""
        if self.n < 1:
            raise ValueError("model needs at least one qubit")
        if not self.terms:
            raise ValueError("model needs at least one term")
        seen = set()
        for term in self.terms:
            if term.n != self.n:
                raise ValueError(f"term {term.label} acts on {term.n} qubits, model has {self.n}")
            if not is_selfadjoint(term) or term.coefficient_power != 0:
                raise ValueError(f"term {term.label} must be a Hermitian Pauli with coefficient +1")
            if term.is_identity:
                raise ValueError("the identity is not a valid Hamiltonian term")
            if term.key in seen:
                raise ValueError(f"duplicate term {term.label}")
            seen.add(term.key)

        if self.true_coeffs is not None:
            if self.true_coeffs.shape != (self.m,):
                raise ValueError(f"expected {self.m} coefficients, got {self.true_coeffs.shape}")
            if not np.all(np.isfinite(self.true_coeffs)):
                raise ValueError("coefficients must be finite")

        if self.commuting_decomposition is not None:
            if len(self.commuting_decomposition) != self.m:
                raise ValueError("commuting decomposition needs one (F, nu) pair per term")
            parts = [f for f, _ in self.commuting_decomposition]
            for term, part in zip(self.terms, parts):
                if part.n != self.n or not is_selfadjoint(part):
                    raise ValueError(f"decomposition part {part.label} is not a valid operator")
                if not part.support <= term.support:
                    raise ValueError(f"support of {part.label} leaves the support of {term.label}")
            for i, a in enumerate(parts):
                for b in parts[i + 1:]:
                    if not commutes(a, b):
                        raise ValueError(f"decomposition parts {a.label} and {b.label} do not commute")

    def hamiltonian(self, coeffs: Optional[Sequence[float]] = None, cap: Optional[int] = None) -> np.ndarray:
        """Dense h = sum_a lambda_a E_a"""
        coeffs = self.resolve_coeffs(coeffs)
        dim = 1 << self.n
        h = np.zeros((dim, dim), dtype=complex)
        for c, term in zip(coeffs, self.terms):
            if c != 0:
                h += c * to_dense(term, cap)
        return h

    def resolve_coeffs(self, coeffs: Optional[Sequence[float]]) -> np.ndarray:
        if coeffs is None:
            if self.true_coeffs is None:
                raise ValueError("model has no coefficients; pass them explicitly")
            return self.true_coeffs
        coeffs = np.asarray(coeffs, dtype=float)
        if coeffs.shape != (self.m,):
            raise ValueError(f"expected {self.m} coefficients, got {coeffs.shape}")
        if not np.all(np.isfinite(coeffs)):
            raise ValueError("coefficients must be finite")
        return coeffs

    def verify_decomposition(self, tol: float = 1e-10) -> float:
        """Dense residual ||sum nu F - sum lambda E||; raises when it exceeds tol"""
        if self.commuting_decomposition is None:
            raise MissingDecomposition(f"model {self.name or '<unnamed>'} has no commuting decomposition")
        dim = 1 << self.n
        lhs = np.zeros((dim, dim), dtype=complex)
        for part, nu in self.commuting_decomposition:
            lhs += nu * to_dense(part)
        residual = float(np.linalg.norm(lhs - self.hamiltonian(), 2))
        if residual > tol:
            raise ValueError(f"commuting decomposition does not reproduce h (residual {residual:.3e})")
        return residual

    # ------------------------------------------------------------------
    # Model file format
    # ------------------------------------------------------------------

    def to_dict(self) -> Dict:
        coeffs = self.true_coeffs
        data = {
            "n": self.n,
            "terms": [
                {"pauli": t.letters, "coeff": None if coeffs is None else float(coeffs[i])}
                for i, t in enumerate(self.terms)
            ],
        }
        if self.name:
            data["name"] = self.name
        if self.commuting_decomposition is not None:
            data["commuting_decomposition"] = [
                {"pauli": f.letters, "coeff": float(nu)} for f, nu in self.commuting_decomposition
            ]
        return data

    @classmethod
    def from_dict(cls, data: Dict) -> "HamiltonianModel":
        try:
            n = int(data["n"])
            entries = data["terms"]
        except (KeyError, TypeError) as e:
            raise ValueError(f"model is missing field {e}") from e

        terms = [PauliString.from_label(entry["pauli"]) for entry in entries]
        raw = [entry.get("coeff") for entry in entries]
        if all(c is None for c in raw):
            coeffs = None
        elif any(c is None for c in raw):
            raise ValueError("either all or none of the term coefficients must be given")
        else:
            coeffs = np.array(raw, dtype=float)

        decomposition = None
        if data.get("commuting_decomposition") is not None:
            decomposition = [
                (PauliString.from_label(entry["pauli"]), float(entry["coeff"]))
                for entry in data["commuting_decomposition"]
            ]
        return cls(
            n=n,
            terms=terms,
            true_coeffs=coeffs,
            commuting_decomposition=decomposition,
            name=data.get("name", ""),
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "HamiltonianModel":
        return cls.from_dict(json.loads(text))

    def save(self, path: Union[str, Path]):
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w") as f:
            f.write(self.to_json() + "\n")

    @classmethod
    def load(cls, path: Union[str, Path]) -> "HamiltonianModel":
        with open(path, "r") as f:
            return cls.from_json(f.read())


# ----------------------------------------------------------------------
# Dual interaction graph
# ----------------------------------------------------------------------


@dataclass
class DualInteractionGraph:
    """Graph on the terms with an edge whenever two supports intersect"""

    m: int
    adjacency: List[FrozenSet[int]] = field(default_factory=list)

    @property
    def degree(self) -> int:
        return max((len(a) for a in self.adjacency), default=0)

    @property
    def edges(self) -> List[Tuple[int, int]]:
        return [(a, b) for a in range(self.m) for b in sorted(self.adjacency[a]) if a < b]

    def neighbors(self, vertices) -> FrozenSet[int]:
        out = set()
        for v in vertices:
            out |= self.adjacency[v]
        return frozenset(out - set(vertices))


def build_dual_graph(model: HamiltonianModel) -> DualInteractionGraph:
    supports = [t.support for t in model.terms]
    adjacency = []
    for a, sa in enumerate(supports):
        adjacency.append(frozenset(b for b, sb in enumerate(supports) if b != a and sa & sb))
    return DualInteractionGraph(m=model.m, adjacency=adjacency)


def enumerate_connected_subsets(graph: DualInteractionGraph, ell: int) -> List[FrozenSet[int]]:
    """All connected vertex sets with 1 <= |S| <= ell, each exactly once

    Sets are grown breadth-first from their minimum vertex; only vertices larger
    than that minimum may be added, so every set has a single root.
    """
    if ell < 1:
        raise ValueError("ell must be >= 1")

    found = set()
    for root in range(graph.m):
        frontier = {frozenset([root])}
        found |= frontier
        for _ in range(ell - 1):
            grown = set()
            for subset in frontier:
                for v in graph.neighbors(subset):
                    if v > root:
                        grown.add(subset | {v})
            grown -= found
            if not grown:
                break
            found |= grown
            frontier = grown
    return sorted(found, key=lambda s: (len(s), tuple(sorted(s))))


def _maximal_unions(model: HamiltonianModel, ell: int) -> List[FrozenSet[int]]:
    graph = build_dual_graph(model)
    unions = set()
    for subset in enumerate_connected_subsets(graph, ell):
        qubits = frozenset()
        for v in subset:
            qubits |= model.terms[v].support
        unions.add(qubits)
    # A union contained in another contributes no new Paulis
    ordered = sorted(unions, key=len, reverse=True)
    maximal: List[FrozenSet[int]] = []
    for u in ordered:
        if not any(u <= w for w in maximal):
            maximal.append(u)
    return sorted(maximal, key=lambda s: tuple(sorted(s)))


def enumerate_Pkl(model: HamiltonianModel, ell: int, include_identity: bool = True) -> List[PauliString]:
    """Hermitian Paulis supported inside the union of at most ell connected terms"""
    if ell < 1:
        raise ValueError("ell must be >= 1")
    unique: Dict[Tuple[int, int], PauliString] = {}
    for qubits in _maximal_unions(model, ell):
        for p in paulis_on(qubits, model.n):
            unique.setdefault(p.key, p)
    out = sorted(unique.values(), key=PauliString.sort_key)
    if not include_identity:
        out = [p for p in out if not p.is_identity]
    logger.debug(f"level {ell}: {len(out)} perturbing operators")
    return out


def pkl_size_bound(model: HamiltonianModel, ell: int) -> int:
    """m * max(d, 1)^ell * 10^(k ell)"""
    degree = build_dual_graph(model).degree
    return model.m * max(degree, 1) ** ell * 10 ** (model.locality * ell)


def predicted_support(model: HamiltonianModel, support: FrozenSet[int]) -> FrozenSet[int]:
    """support plus every term support that meets it"""
    out = set(support)
    for term in model.terms:
        if term.support & support:
            out |= term.support
    return frozenset(out)


def theorem_level(model: HamiltonianModel) -> int:
    """max(3, 1 + (d + 1)^2)"""
    degree = build_dual_graph(model).degree
    return max(3, 1 + (degree + 1) ** 2)

