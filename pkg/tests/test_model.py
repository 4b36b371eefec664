"""
Tests for the Hamiltonian ansatz, dual graph and perturbing-operator hierarchy
"""

import math

import numpy as np
import pytest

from hamlearn.errors import MissingDecomposition
from hamlearn.fixtures import ModelGenerator, random_models
from hamlearn.model import (
    HamiltonianModel,
    build_dual_graph,
    enumerate_connected_subsets,
    enumerate_Pkl,
    pkl_size_bound,
    predicted_support,
    theorem_level,
)
from hamlearn.pauli import PauliString, is_selfadjoint


def labels(*names):
    return [PauliString.from_label(name) for name in names]


class TestHamiltonianModel:
    """Validation and file format"""

    def test_single_qubit_matrix(self, single_qubit):
        h = single_qubit.hamiltonian()
        np.testing.assert_allclose(h, np.diag([math.log(2), -math.log(2)]))
        assert single_qubit.beta == pytest.approx(math.log(2))

    def test_rejects_identity_term(self):
        with pytest.raises(ValueError):
            HamiltonianModel(n=2, terms=labels("II", "ZZ"))

    def test_rejects_duplicates(self):
        with pytest.raises(ValueError):
            HamiltonianModel(n=2, terms=labels("ZZ", "ZZ"))

    def test_rejects_non_hermitian_term(self):
        with pytest.raises(ValueError):
            HamiltonianModel(n=1, terms=labels("iZ"))

    def test_rejects_wrong_size(self):
        with pytest.raises(ValueError):
            HamiltonianModel(n=2, terms=labels("ZZ", "Z"))

    def test_rejects_coefficient_count(self):
        with pytest.raises(ValueError):
            HamiltonianModel(n=2, terms=labels("ZZ"), true_coeffs=[1.0, 2.0])

    def test_rejects_non_commuting_decomposition(self):
        x, z = labels("XI", "ZI")
        with pytest.raises(ValueError):
            HamiltonianModel(n=2, terms=labels("XI", "ZI"), commuting_decomposition=[(x, 1.0), (z, 1.0)])

    def test_partial_coefficients_rejected(self):
        data = {"n": 2, "terms": [{"pauli": "ZZ", "coeff": 1.0}, {"pauli": "ZI", "coeff": None}]}
        with pytest.raises(ValueError):
            HamiltonianModel.from_dict(data)

    def test_missing_coefficients(self):
        model = HamiltonianModel.from_dict({"n": 1, "terms": [{"pauli": "Z", "coeff": None}]})
        assert model.true_coeffs is None
        assert model.beta == 0.0
        with pytest.raises(ValueError):
            model.hamiltonian()
        np.testing.assert_allclose(model.hamiltonian([2.0]), np.diag([2.0, -2.0]))

    def test_json_file(self, ising3, tmp_path):
        path = tmp_path / "models" / "ising.json"
        ising3.save(path)
        loaded = HamiltonianModel.load(path)
        assert loaded.term_labels == ising3.term_labels
        np.testing.assert_array_equal(loaded.true_coeffs, ising3.true_coeffs)
        assert loaded.name == "ising_chain_3"
        assert len(loaded.commuting_decomposition) == 5

    def test_decomposition_residual(self, ising3):
        assert ising3.verify_decomposition() < 1e-12

    def test_missing_decomposition(self, generator):
        with pytest.raises(MissingDecomposition):
            generator.transverse_ising(2).verify_decomposition()


class TestDualGraph:
    def test_ising2_degree(self, ising2):
        graph = build_dual_graph(ising2)
        assert graph.degree == 2
        assert graph.edges == [(0, 1), (0, 2)]

    def test_ising3_degree(self, ising3):
        assert build_dual_graph(ising3).degree == 3

    def test_five_qubit_chain_degree(self, generator):
        # an inner bond meets two bonds and two fields
        graph = build_dual_graph(generator.ising_chain(5))
        assert graph.m == 9
        assert graph.degree == 4

    def test_connected_subsets(self, ising2):
        graph = build_dual_graph(ising2)
        subsets = enumerate_connected_subsets(graph, 2)
        assert len(subsets) == 5
        assert frozenset({1, 2}) not in subsets
        assert len(enumerate_connected_subsets(graph, 3)) == 6

    def test_connected_subsets_are_unique(self, generator):
        model = generator.random_local_model(5, k=2, terms_per_site=2)
        subsets = enumerate_connected_subsets(build_dual_graph(model), 3)
        assert len(subsets) == len(set(subsets))

    def test_level_must_be_positive(self, ising2):
        with pytest.raises(ValueError):
            enumerate_connected_subsets(build_dual_graph(ising2), 0)
        with pytest.raises(ValueError):
            enumerate_Pkl(ising2, 0)


class TestHierarchy:
    """Perturbing operators P_{k,l}"""

    def test_ising2_level1(self, ising2):
        ops = enumerate_Pkl(ising2, 1)
        assert len(ops) == 16
        assert ops[0].is_identity
        assert len(enumerate_Pkl(ising2, 1, include_identity=False)) == 15

    def test_ising3_levels(self, ising3):
        assert len(enumerate_Pkl(ising3, 1)) == 28
        assert len(enumerate_Pkl(ising3, 2)) == 64

    def test_nested_and_canonical(self, generator):
        model = generator.random_local_model(4, k=2)
        previous = set()
        for ell in (1, 2, 3):
            ops = enumerate_Pkl(model, ell)
            keys = {p.key for p in ops}
            assert previous <= keys
            assert len(keys) == len(ops)
            assert all(is_selfadjoint(p) and p.coefficient_power == 0 for p in ops)
            assert len(ops) <= pkl_size_bound(model, ell)
            previous = keys

    def test_terms_are_perturbers(self, ising3):
        keys = {p.key for p in enumerate_Pkl(ising3, 1)}
        assert all(t.key in keys for t in ising3.terms)

    def test_size_bound(self, ising2):
        assert pkl_size_bound(ising2, 1) == 600

    def test_theorem_level(self, single_qubit, ising2):
        assert theorem_level(single_qubit) == 3
        assert theorem_level(ising2) == 10
        path = HamiltonianModel(n=4, terms=labels("ZZII", "IZZI", "IIZZ"))
        assert theorem_level(path) == 10

    def test_predicted_support(self, ising3):
        assert predicted_support(ising3, frozenset({0})) == frozenset({0, 1})
        assert predicted_support(ising3, frozenset({1})) == frozenset({0, 1, 2})


class TestModelGenerator:
    def test_seeded_models_repeat(self):
        a = ModelGenerator(7).random_local_model(4)
        b = ModelGenerator(7).random_local_model(4)
        assert a.term_labels == b.term_labels
        np.testing.assert_array_equal(a.true_coeffs, b.true_coeffs)

    def test_random_coefficients_in_range(self):
        model = ModelGenerator(3).ising_chain(4, coupling=None, field=None)
        assert np.all(np.abs(model.true_coeffs) <= 1.0)
        assert model.verify_decomposition() < 1e-12

    def test_out_of_span_pair(self, generator):
        ansatz, source = generator.out_of_span_pair()
        assert ansatz.true_coeffs is None
        assert source.term_labels == ["X"]

    def test_build_dispatch(self, generator):
        assert generator.build("tfim", 3).m == 5
        assert generator.build("single").n == 1
        with pytest.raises(ValueError):
            generator.build("heisenberg", 2)

    def test_random_models_batch(self):
        models = random_models(seed=1, count=4)
        assert [m.n for m in models] == [2, 3, 4, 5]
        assert all(m.locality <= 2 for m in models)
