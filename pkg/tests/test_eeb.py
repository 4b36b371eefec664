"""
Tests for the energy-entropy balance system
"""

import json
import math

import numpy as np
import pytest

from hamlearn.eeb import (
    EEBSystem,
    ExpectationTable,
    assemble,
    continuity_report,
    ideal_eeb_residuals,
    matrix_continuity_checks,
    relaxation_params,
    sigma_conservative,
    sigma_general,
)
from hamlearn.errors import DimensionMismatch
from hamlearn.fixtures import random_models
from hamlearn.model import enumerate_Pkl
from hamlearn.oracle import NoiseMode, NoiseSpec, build_gibbs, measure_tables
from hamlearn.pauli import PauliString


def exact_system(model, level=1, noise=None):
    state = build_gibbs(model)
    table = measure_tables(state, enumerate_Pkl(model, level), model.terms, noise)
    return assemble(table)


@pytest.fixture
def single_system(single_qubit):
    ops = [PauliString.from_label(p) for p in "IXYZ"]
    return assemble(measure_tables(build_gibbs(single_qubit), ops, single_qubit.terms))


class TestAssemble:
    def test_golden_spectrum(self, single_system, golden):
        assert single_system.cond_ok
        assert single_system.eigen_floor == pytest.approx(min(golden["C_eigenvalues"]))
        assert single_system.K == pytest.approx(golden["K"])
        np.testing.assert_allclose(np.linalg.eigvalsh(single_system.Dtilde), golden["D_eigenvalues"], atol=1e-12)

    def test_log_spectrum(self, single_system):
        values = np.sort(np.linalg.eigvalsh(single_system.logDtilde))
        np.testing.assert_allclose(values, [-math.log(4), 0.0, 0.0, math.log(4)], atol=1e-12)

    def test_h_shape(self, ising2):
        system = exact_system(ising2)
        assert system.Htilde.shape == (3, 16, 16)
        assert system.perturbers[0] == "II"
        assert system.terms == ising2.term_labels

    def test_not_positive_definite(self):
        table = ExpectationTable(
            perturbers=["X", "X"],
            terms=["Z"],
            Ctilde=np.ones((2, 2)),
            Btilde=np.zeros((1, 2, 2)),
        )
        system = assemble(table)
        assert not system.cond_ok
        assert system.K is None
        assert "Dtilde" not in system.to_dict()

    def test_bad_table_shape(self):
        with pytest.raises(DimensionMismatch):
            ExpectationTable(perturbers=["X", "Y"], terms=[], Ctilde=np.eye(3), Btilde=np.zeros((0, 2, 2)))

    def test_dict_round_trip(self, single_system):
        data = json.loads(json.dumps(single_system.to_dict()))
        loaded = EEBSystem.from_dict(data)
        np.testing.assert_allclose(loaded.Dtilde, single_system.Dtilde)
        np.testing.assert_allclose(loaded.Htilde, single_system.Htilde)
        assert loaded.K == single_system.K


class TestIdealResiduals:
    """The exact system is satisfied by the true coefficients"""

    def test_single_qubit_is_tight(self, single_system, single_qubit):
        antisym, floor = ideal_eeb_residuals(single_system, single_qubit.true_coeffs)
        assert antisym < 1e-12
        assert floor == pytest.approx(0.0, abs=1e-10)

    @pytest.mark.parametrize("seed", [0, 1, 2])
    def test_random_models(self, seed):
        for model in random_models(seed, count=2, sizes=(2, 3)):
            system = exact_system(model)
            assert system.cond_ok
            antisym, floor = ideal_eeb_residuals(system, model.true_coeffs)
            assert antisym < 1e-9
            assert floor > -1e-8

    @pytest.mark.slow
    @pytest.mark.parametrize("level", [1, 2, 3])
    def test_random_models_across_levels(self, level):
        # five-qubit models stay at level 2; table assembly is quadratic in r
        sizes = (2, 3, 4, 5) if level < 3 else (2, 3, 4)
        for seed in range(4):
            for model in random_models(seed, count=len(sizes), sizes=sizes):
                system = exact_system(model, level)
                assert system.cond_ok
                antisym, floor = ideal_eeb_residuals(system, model.true_coeffs)
                assert antisym <= 1e-8, (model.name, level)
                assert floor >= -1e-7, (model.name, level)

    def test_commuting_chain(self, ising3):
        antisym, floor = ideal_eeb_residuals(exact_system(ising3), ising3.true_coeffs)
        assert antisym < 1e-9
        assert floor > -1e-8

    def test_wrong_coefficients_violate(self, single_system):
        _, floor = ideal_eeb_residuals(single_system, np.array([-1.0]))
        assert floor < -1.0

    def test_coefficient_count(self, single_system):
        with pytest.raises(DimensionMismatch):
            ideal_eeb_residuals(single_system, np.zeros(2))


class TestRelaxation:
    def test_golden_mu(self, golden):
        mu1, mu2 = relaxation_params(golden["K"], 1e-6, 1, 1.0)
        assert mu1 == pytest.approx(golden["mu_at_1e-6"][0])
        assert mu2 == pytest.approx(golden["mu_at_1e-6"][1])

    def test_exact_data(self):
        assert relaxation_params(20.0, 0.0, 3, 2.0) == (0.0, 0.0)

    def test_invalid(self):
        with pytest.raises(ValueError):
            relaxation_params(0.0, 1e-6, 1, 1.0)
        with pytest.raises(ValueError):
            relaxation_params(1.0, -1e-6, 1, 1.0)

    def test_sigma(self):
        assert sigma_general(1, 0.0, 2, 4) == pytest.approx(1 / 6)
        assert sigma_conservative(2, 1.0, 4, 16) == pytest.approx(math.exp(-4) / 12)
        assert sigma_conservative(3, 0.5, 8, 10) <= sigma_general(3, 0.5, 8, 10)


class TestContinuity:
    def test_noisy_single_qubit(self, single_qubit, single_system):
        ops = [PauliString.from_label(p) for p in "IXYZ"]
        noise = NoiseSpec(mode=NoiseMode.UNIFORM_ADVERSARIAL, epsilon0=1e-6, seed=0)
        noisy = assemble(measure_tables(build_gibbs(single_qubit), ops, single_qubit.terms, noise))
        report = continuity_report(single_system, noisy, 1e-6)
        assert report["applicable"]
        assert report["log_ok"]
        assert report["h_ok"]
        assert 0 < report["log_deviation"] <= report["log_bound"]
        assert all(item["ok"] for item in report["matrix_checks"].values())

    def test_noisy_ising(self, ising2):
        eps = 1e-7
        exact = exact_system(ising2)
        noisy = exact_system(ising2, noise=NoiseSpec(mode=NoiseMode.GAUSSIAN_CLIPPED, epsilon0=eps, seed=1))
        report = continuity_report(exact, noisy, eps)
        assert report["applicable"]
        assert report["log_ok"] and report["h_ok"]

    def test_large_error_is_not_applicable(self, single_system):
        report = continuity_report(single_system, single_system, 0.1)
        assert not report["applicable"]
        assert report["reason"] == "k_exceeds_inverse_epsilon"

    def test_mismatched_systems(self, single_system, ising2):
        with pytest.raises(DimensionMismatch):
            continuity_report(single_system, exact_system(ising2), 1e-6)

    def test_matrix_checks_on_random_pairs(self):
        rng = np.random.default_rng(0)
        for _ in range(5):
            g = rng.normal(size=(5, 5)) + 1j * rng.normal(size=(5, 5))
            a = g @ g.conj().T + np.eye(5)
            e = rng.normal(size=(5, 5)) * 1e-3
            checks = matrix_continuity_checks(a, a + (e + e.T) / 2)
            assert all(item["ok"] for item in checks.values())
