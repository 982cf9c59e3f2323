"""Unit tests for TFIM Hamiltonians, ansatz circuits, and exact energies."""

import math

import numpy as np
import pytest

from qtunnel import models
from qtunnel.exceptions import SizeError


def _count_terms(ham):
    zz = sum(1 for _, ops in ham.terms if len(ops) == 2)
    x = sum(1 for _, ops in ham.terms if len(ops) == 1)
    return zz, x


class TestHamiltonians:
    def test_chain_term_counts(self):
        ham = models.tfim_chain(models.ChainSpec(5, 1.0, 5.0))
        assert _count_terms(ham) == (4, 5)

    def test_chain_zero_field_drops_x_terms(self):
        ham = models.tfim_chain(models.ChainSpec(4, 1.0, 0.0))
        assert _count_terms(ham) == (3, 0)

    def test_grid_2x2_bonds(self):
        ham = models.tfim_grid(models.GridSpec(2, 2, 1.0, 0.0))
        assert _count_terms(ham) == (4, 0)

    def test_grid_3x4_term_counts(self):
        ham = models.tfim_grid(models.GridSpec(3, 4, 1.0, 5.0))
        assert _count_terms(ham) == (17, 12)

    def test_grid_2x4_term_counts(self):
        ham = models.tfim_grid(models.GridSpec(2, 4, 1.0, 5.0))
        assert _count_terms(ham) == (10, 8)

    def test_spec_validation(self):
        with pytest.raises(SizeError):
            models.ChainSpec(1)
        with pytest.raises(SizeError):
            models.GridSpec(1, 4)
        with pytest.raises(SizeError):
            models.GridSpec(5, 5)  # 25 sites > 24


class TestAnsatz:
    def test_chain_gate_counts(self):
        circ = models.ansatz_chain(5, 2)
        ry = [g for g in circ.gates if g.kind == "ry"]
        cnot = [g for g in circ.gates if g.kind == "cnot"]
        assert len(ry) == 10
        assert len(cnot) == 8
        assert circ.n_params == 10

    def test_chain_smallest_instance(self):
        circ = models.ansatz_chain(2, 1)
        kinds = [(g.kind, g.qubit if g.kind == "ry" else (g.control, g.target))
                 for g in circ.gates]
        assert kinds == [("ry", 0), ("ry", 1), ("cnot", (0, 1))]

    def test_chain_param_count_scales(self):
        assert models.ansatz_chain(10, 2).n_params == 20

    def test_chain_cnot_ordering(self):
        circ = models.ansatz_chain(5, 1)
        cnots = [(g.control, g.target) for g in circ.gates if g.kind == "cnot"]
        assert cnots == [(0, 1), (2, 3), (1, 2), (3, 4)]

    def test_grid_gate_counts(self):
        circ = models.ansatz_grid(2, 4, 2)
        ry = [g for g in circ.gates if g.kind == "ry"]
        cnot = [g for g in circ.gates if g.kind == "cnot"]
        assert len(ry) == 16
        assert len(cnot) == 20
        assert circ.n_params == 16

    def test_grid_smallest_instance(self):
        circ = models.ansatz_grid(2, 2, 1)
        cnots = [(g.control, g.target) for g in circ.gates if g.kind == "cnot"]
        assert cnots == [(0, 1), (2, 3), (0, 2), (1, 3)]

    def test_grid_param_count_scales(self):
        assert models.ansatz_grid(3, 4, 2).n_params == 24


class TestExactEnergy:
    @pytest.mark.parametrize("B", [0.0, 0.5, 5.0])
    def test_two_site_analytic(self, B):
        ham = models.tfim_chain(models.ChainSpec(2, 1.0, B))
        expected = -math.sqrt(1.0 + 4.0 * B * B)
        assert models.exact_ground_energy(ham) == pytest.approx(expected, abs=1e-9)

    def test_single_site_field(self):
        # one X term on a 2-site chain with J=0 contributes -B per site
        ham = models.tfim_chain(models.ChainSpec(2, 0.0, 3.0))
        assert models.exact_ground_energy(ham) == pytest.approx(-6.0, abs=1e-9)

    def test_matrix_is_hermitian(self):
        ham = models.tfim_grid(models.GridSpec(2, 2, 1.0, 0.7))
        mat = models.pauli_sum_matrix(ham)
        assert np.abs(mat - mat.conj().T).max() < 1e-12

    def test_dense_solve_size_limit(self):
        ham = models.tfim_chain(models.ChainSpec(16, 1.0, 1.0))
        with pytest.raises(SizeError):
            models.exact_ground_energy(ham)
