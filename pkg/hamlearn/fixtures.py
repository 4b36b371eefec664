#!/usr/bin/env python3
"""
Model generator for hamlearn
Seeded construction of the fixture Hamiltonians used by tests, sweeps and gen-model
"""

import math
from typing import List, Optional, Tuple

import numpy as np

from hamlearn.model import HamiltonianModel
from hamlearn.pauli import PauliString

MODEL_KINDS = ("single", "ising", "tfim", "random", "out_of_span")


def _pauli(n: int, letters: dict) -> PauliString:
    """Hermitian Pauli from a {qubit: letter} map"""
    label = ["I"] * n
    for qubit, letter in letters.items():
        label[qubit] = letter
    return PauliString.from_label("".join(label))


class ModelGenerator:
    """Builds fixture models; every random draw comes from the seeded generator"""

    def __init__(self, seed: int = 0):
        self.seed = seed
        self.rng = np.random.default_rng(seed)

    def _coefficients(self, count: int, value: Optional[float]) -> np.ndarray:
        if value is None:
            return self.rng.uniform(-1.0, 1.0, size=count)
        return np.full(count, float(value))

    def single_qubit_z(self, coeff: float = math.log(2)) -> HamiltonianModel:
        """h = coeff * Z on one qubit"""
        z = PauliString.from_label("Z")
        return HamiltonianModel(
            n=1,
            terms=[z],
            true_coeffs=np.array([coeff]),
            commuting_decomposition=[(z, coeff)],
            name="single_qubit_z",
        )

    def ising_chain(
        self, n: int, coupling: Optional[float] = 1.0, field: Optional[float] = 0.5
    ) -> HamiltonianModel:
        """Open ZZ chain with longitudinal Z fields; bonds first, then fields

        A None coupling or field draws that family uniformly from [-1, 1].
        """
        if n < 2:
            raise ValueError("an Ising chain needs at least two qubits")
        bonds = [_pauli(n, {i: "Z", i + 1: "Z"}) for i in range(n - 1)]
        fields = [_pauli(n, {i: "Z"}) for i in range(n)]
        coeffs = np.concatenate(
            [self._coefficients(len(bonds), coupling), self._coefficients(len(fields), field)]
        )
        terms = bonds + fields
        return HamiltonianModel(
            n=n,
            terms=terms,
            true_coeffs=coeffs,
            commuting_decomposition=list(zip(terms, coeffs.tolist())),
            name=f"ising_chain_{n}",
        )

    def transverse_ising(
        self, n: int, coupling: Optional[float] = 1.0, field: Optional[float] = 0.5
    ) -> HamiltonianModel:
        """ZZ chain with transverse X fields (no commuting decomposition)"""
        if n < 2:
            raise ValueError("a transverse-field chain needs at least two qubits")
        bonds = [_pauli(n, {i: "Z", i + 1: "Z"}) for i in range(n - 1)]
        fields = [_pauli(n, {i: "X"}) for i in range(n)]
        coeffs = np.concatenate(
            [self._coefficients(len(bonds), coupling), self._coefficients(len(fields), field)]
        )
        return HamiltonianModel(
            n=n, terms=bonds + fields, true_coeffs=coeffs, name=f"transverse_ising_{n}"
        )

    def random_local_model(
        self, n: int, k: int = 2, terms_per_site: int = 1, scale: float = 1.0
    ) -> HamiltonianModel:
        """Random geometrically local model on an open chain

        Each window of k consecutive qubits receives `terms_per_site` random Paulis
        acting nontrivially on the window's first qubit; |lambda| <= scale.
        """
        if not 1 <= k <= n:
            raise ValueError("need 1 <= k <= n")
        letters = "XYZ"
        chosen = {}
        for start in range(n):
            window = list(range(start, min(start + k, n)))
            for _ in range(terms_per_site):
                letters_map = {window[0]: letters[self.rng.integers(3)]}
                for q in window[1:]:
                    letter = "IXYZ"[self.rng.integers(4)]
                    if letter != "I":
                        letters_map[q] = letter
                p = _pauli(n, letters_map)
                chosen.setdefault(p.key, p)
        terms = sorted(chosen.values(), key=PauliString.sort_key)
        coeffs = scale * self.rng.uniform(-1.0, 1.0, size=len(terms))
        return HamiltonianModel(n=n, terms=terms, true_coeffs=coeffs, name=f"random_{n}_k{k}")

    def out_of_span_pair(self, coeff: float = 1.0) -> Tuple[HamiltonianModel, HamiltonianModel]:
        """(ansatz {Z}, generating model coeff*X) on one qubit"""
        ansatz = HamiltonianModel(n=1, terms=[PauliString.from_label("Z")], name="ansatz_z")
        source = HamiltonianModel(
            n=1,
            terms=[PauliString.from_label("X")],
            true_coeffs=np.array([coeff]),
            name="gibbs_x",
        )
        return ansatz, source

    def build(self, kind: str, n: int = 1, **kwargs) -> HamiltonianModel:
        """Dispatch used by the gen-model command"""
        if kind == "single":
            return self.single_qubit_z(**kwargs)
        if kind == "ising":
            return self.ising_chain(n, **kwargs)
        if kind == "tfim":
            return self.transverse_ising(n, **kwargs)
        if kind == "random":
            return self.random_local_model(n, **kwargs)
        if kind == "out_of_span":
            return self.out_of_span_pair(**kwargs)[1]
        raise ValueError(f"unknown model kind {kind!r}; choose from {', '.join(MODEL_KINDS)}")


def create_model_generator(seed: int = 0) -> ModelGenerator:
    """Factory function to create a model generator"""
    return ModelGenerator(seed)


def random_models(seed: int, count: int, sizes: List[int] = (2, 3, 4, 5)) -> List[HamiltonianModel]:
    """A reproducible batch of random 2-local models"""
    generator = ModelGenerator(seed)
    return [generator.random_local_model(sizes[i % len(sizes)], k=2) for i in range(count)]
