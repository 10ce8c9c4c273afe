import numpy as np
import pytest

from qndsim.linalg import DensityOperator, HermitianOperator, tensor
from qndsim.model import (
    BipartiteModel,
    Preparation,
    check_conditions,
    prepare_initial,
    random_model,
    total_hamiltonian,
)

SX = np.array([[0, 1], [1, 0]], dtype=complex)
SZ = np.array([[1, 0], [0, -1]], dtype=complex)


def qubit_model(hs, hm, hc):
    return BipartiteModel(
        d_system=2,
        d_apparatus=2,
        h_system=HermitianOperator(hs),
        h_apparatus=HermitianOperator(hm),
        h_coupling=HermitianOperator(hc),
    )


ZERO4 = np.zeros((4, 4), dtype=complex)


class TestTotalHamiltonian:
    def test_all_zero(self):
        m = qubit_model(np.zeros((2, 2)), np.zeros((2, 2)), ZERO4)
        assert np.allclose(total_hamiltonian(m).matrix, 0)

    def test_system_only(self):
        m = qubit_model(SZ, np.zeros((2, 2)), ZERO4)
        assert np.allclose(total_hamiltonian(m).matrix, np.diag([1, 1, -1, -1]))

    def test_all_diagonal_sum(self):
        m = qubit_model(SZ, SZ, np.kron(SZ, SZ))
        # per system-major entry: 1+1+1, 1-1-1, -1+1-1, -1-1+1
        assert np.allclose(total_hamiltonian(m).matrix, np.diag([3, -1, -1, -1]))

    def test_linearity_in_coupling(self):
        rng = np.random.default_rng(0)
        g = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
        hc = (g + g.conj().T) / 2
        m1 = qubit_model(SZ, SX, hc)
        m2 = qubit_model(SZ, SX, 2 * hc)
        base = qubit_model(SZ, SX, ZERO4)
        assert np.allclose(
            total_hamiltonian(m2).matrix - total_hamiltonian(base).matrix,
            2 * (total_hamiltonian(m1).matrix - total_hamiltonian(base).matrix),
        )


class TestCheckConditions:
    def test_null_coupling_both_hold(self):
        m = qubit_model(SZ, SZ, ZERO4)
        r = check_conditions(m)
        assert r.eq4_defect == 0.0 and r.eq5_defect == 0.0
        assert r.eq4_holds and r.eq5_holds

    def test_all_diagonal_holds(self):
        m = qubit_model(SZ, SZ, np.kron(SZ, SZ))
        r = check_conditions(m)
        assert r.both_hold

    def test_transverse_coupling_fails(self):
        m = qubit_model(SZ, SZ, np.kron(SX, SX))
        r = check_conditions(m)
        assert not r.eq4_holds and not r.eq5_holds
        assert r.eq4_defect > 0.1 and r.eq5_defect > 0.1

    def test_scaling_covariance(self):
        m = qubit_model(SZ, SZ, np.kron(SX, SX))
        m2 = qubit_model(SZ, SZ, 3.0 * np.kron(SX, SX))
        r, r2 = check_conditions(m), check_conditions(m2)
        assert r2.eq4_defect <= 3.0 * r.eq4_defect + 1e-12

    def test_threshold_must_be_positive(self):
        with pytest.raises(ValueError):
            check_conditions(qubit_model(SZ, SZ, ZERO4), threshold=0.0)


class TestPrepareInitial:
    def test_eigenbasis_preparation_is_rank_one(self):
        m = qubit_model(SZ, SZ, ZERO4)
        w = prepare_initial(m, Preparation.eigenbasis(0, 0))
        vals = np.linalg.eigvalsh(w.matrix)
        assert np.allclose(sorted(vals), [0, 0, 0, 1], atol=1e-12)
        # index 0 of sz's ascending eigenbasis is eigenvalue -1, i.e. |1>
        expect = np.zeros((4, 4))
        expect[3, 3] = 1.0
        assert np.allclose(w.matrix, expect, atol=1e-12)

    def test_general_maximally_mixed(self):
        m = qubit_model(SZ, SZ, ZERO4)
        prep = Preparation.general(
            DensityOperator.maximally_mixed(2), DensityOperator.maximally_mixed(2)
        )
        assert np.allclose(prepare_initial(m, prep).matrix, np.eye(4) / 4)

    def test_trace_is_one(self):
        m = qubit_model(SZ, SX, np.kron(SZ, SX))
        for prep in (
            Preparation.eigenbasis(1, 0),
            Preparation.general(
                DensityOperator.maximally_mixed(2), DensityOperator.pure([1, 0])
            ),
        ):
            w = prepare_initial(m, prep)
            assert np.trace(w.matrix).real == pytest.approx(1.0)

    def test_out_of_range_index_rejected(self):
        m = qubit_model(SZ, SZ, ZERO4)
        with pytest.raises(IndexError):
            prepare_initial(m, Preparation.eigenbasis(2, 0))
        with pytest.raises(IndexError):
            prepare_initial(m, Preparation.eigenbasis(0, -1))

    def test_preparation_needs_exactly_one_form(self):
        with pytest.raises(ValueError):
            Preparation(system_index=0)


class TestRandomModel:
    def test_qnd_family_satisfies_conditions(self):
        for seed in range(100):
            r = check_conditions(random_model((2, 2), "qnd", seed))
            assert r.eq4_defect <= 1e-10 and r.eq5_defect <= 1e-10

    def test_qnd_family_nonsquare(self):
        for seed in range(20):
            r = check_conditions(random_model((3, 2), "qnd", seed))
            assert r.both_hold

    def test_interpolated_zero_equals_qnd_draw(self):
        a = random_model((2, 2), "qnd", 5)
        b = random_model((2, 2), "interpolated", 5, eta=0.0)
        assert np.allclose(a.h_coupling.matrix, b.h_coupling.matrix)
        assert np.allclose(a.h_system.matrix, b.h_system.matrix)

    def test_violating_family_has_positive_defect(self):
        for seed in range(20):
            r = check_conditions(random_model((2, 2), "violating", seed))
            assert r.eq4_defect > 1e-3

    def test_deterministic_per_seed(self):
        a = random_model((2, 3), "violating", 9)
        b = random_model((2, 3), "violating", 9)
        assert np.array_equal(a.h_coupling.matrix, b.h_coupling.matrix)

    def test_rejects_bad_inputs(self):
        with pytest.raises(ValueError):
            random_model((1, 2), "qnd", 0)
        with pytest.raises(ValueError):
            random_model((2, 2), "interpolated", 0, eta=1.5)
        with pytest.raises(ValueError):
            random_model((2, 2), "nope", 0)
