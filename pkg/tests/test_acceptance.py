"""Seeded end-to-end runs of the classifier against brute-force witness search."""
import math
from fractions import Fraction

import numpy as np
import pytest

from superdyn.Dynamics.classifier import ObstructionKind, classify, classify_complex, kernel_obstruction
from superdyn.Dynamics.generators import (backward_shift, diag_circle, jordan, random_circle, random_invertible,
                                          random_unitary, real_jordan, rotation_blocks, turn)
from superdyn.Dynamics.lawcheck import check_power_laws, check_scaling_exact, check_similarity
from superdyn.Dynamics.numkernel import CMatrix, Field, eig, min_singular_value
from superdyn.Dynamics.witness import (SearchConfig, best_certificate, dirichlet_budget, operator_certificate,
                                       operator_witness_search, search_succeeded, vector_witness_search)

TOL = 1e-9
BRUTE = SearchConfig(n_max=10000, epsilon=0.1, tol=TOL, threads=1)
SHORT = SearchConfig(n_max=300, epsilon=1e-3, tol=TOL, threads=1)

# min over n of the Frobenius-scalar residual of a unimodular 2x2 Jordan block, reached at n = 1
JORDAN_OPERATOR_FLOOR = (1 + math.sqrt(2)) / 3
JORDAN_VECTOR_FLOOR = 1 / math.sqrt(2)


def _rational_phases(rng):
    q = rng.integers(1, 21, size=2)
    return [Fraction(int(rng.integers(0, qj)), int(qj)) for qj in q]


def _circle_pair(seed):
    rng = np.random.default_rng(seed)
    phases = _rational_phases(rng)
    R = rng.uniform(0.5, 2.0)
    V = random_invertible(2, rng.uniform(1.0, 10.0), rng=rng)
    return diag_circle(R=R, phases=phases).conjugate_by(V), phases


def _mismatched_pair(seed):
    rng = np.random.default_rng(seed)
    phases = _rational_phases(rng)
    R = rng.uniform(0.5, 2.0)
    moduli = [R, R * rng.uniform(1.5, 3.0)]
    D = CMatrix(np.diag([m * turn(p) for m, p in zip(moduli, phases)]), Field.Complex)
    return D.conjugate_by(random_invertible(2, rng.uniform(1.0, 10.0), rng=rng))


def _conjugated_jordan(seed, cond_max=4.0):
    # the operator residual of P J P^-1 stays above 1 / (2 cond(P) + 1)
    rng = np.random.default_rng(seed)
    A = jordan(turn(rng.random()), 2).as_complex()
    return A.conjugate_by(random_invertible(2, rng.uniform(1.0, cond_max), rng=rng))


@pytest.mark.parametrize('seed', range(67))
def test_rational_circle_agrees_with_search(seed):
    A, phases = _circle_pair(seed)
    assert classify_complex(A, TOL).positive

    n = math.lcm(*(p.denominator for p in phases))
    assert operator_certificate(A, n).residual <= 1e-9

    certificates = operator_witness_search(A, BRUTE)
    assert search_succeeded(certificates, BRUTE)
    assert best_certificate(certificates).n <= n


@pytest.mark.parametrize('seed', range(67))
def test_modulus_mismatch_agrees_with_search(seed):
    A = _mismatched_pair(seed)
    result = classify_complex(A, TOL)
    assert not result.positive
    assert result.obstruction.kind is ObstructionKind.ModulusMismatch
    assert not search_succeeded(operator_witness_search(A, BRUTE), BRUTE)


@pytest.mark.parametrize('seed', range(66))
def test_conjugated_jordan_agrees_with_search(seed):
    A = _conjugated_jordan(seed)
    result = classify_complex(A, TOL)
    assert result.obstruction.kind is ObstructionKind.JordanBlock
    assert not search_succeeded(operator_witness_search(A, BRUTE), BRUTE)


@pytest.mark.parametrize('phase', [0, Fraction(1, 4), Fraction(1, 3), 0.2137])
def test_jordan_floor(phase):
    A = jordan(turn(phase), 2)
    operator_best = best_certificate(operator_witness_search(A, BRUTE))
    assert operator_best.n == 1
    assert operator_best.residual == pytest.approx(JORDAN_OPERATOR_FLOOR, rel=1e-8)

    vector_best = best_certificate(vector_witness_search(A, [0, 1], BRUTE))
    assert vector_best.residual == pytest.approx(JORDAN_VECTOR_FLOOR, rel=1e-8)
    assert min(JORDAN_OPERATOR_FLOOR, JORDAN_VECTOR_FLOOR) >= 0.5


def _law_matrix(seed):
    rng = np.random.default_rng(1000 + seed)
    d = int(rng.integers(2, 4))
    kind = seed % 3
    if kind == 0:
        return random_circle(d=d, R=rng.uniform(0.5, 2.0), cond=rng.uniform(1.0, 10.0), seed=seed)
    if kind == 1:
        return random_unitary(d, seed=seed)
    return jordan(turn(rng.random()), d)


@pytest.mark.parametrize('seed', range(50))
def test_scaling_transfer_is_exact(seed):
    A = _law_matrix(seed)
    rng = np.random.default_rng(seed)
    c = rng.uniform(0.5, 2.0) * turn(rng.random())
    report = check_scaling_exact(A, c, SHORT)
    assert report.passed, report.detail
    assert report.inputs['deviation'] <= 1e-12


@pytest.mark.parametrize('seed', range(50))
def test_power_residual_bound(seed):
    rng = np.random.default_rng(2000 + seed)
    A = random_circle(d=int(rng.integers(2, 4)), R=rng.uniform(0.5, 2.0), cond=rng.uniform(1.0, 10.0),
                      seed=seed)
    for p in (2, 3):
        verdict, bound = check_power_laws(A, p, SHORT)
        assert verdict.passed, verdict.detail
        assert bound.passed, bound.detail
        assert bound.margin >= -1e-9


def _similarity_base(seed):
    rng = np.random.default_rng(3000 + seed)
    kind = seed % 3
    if kind == 0:
        return random_circle(d=2, R=rng.uniform(0.5, 2.0), cond=rng.uniform(1.0, 10.0), seed=seed)
    if kind == 1:
        return _mismatched_pair(seed)
    return jordan(turn(rng.random()), 2)


@pytest.mark.parametrize('seed', range(100))
def test_similarity_invariance(seed):
    A = _similarity_base(seed)
    rng = np.random.default_rng(4000 + seed)
    P = random_invertible(A.dim, rng.uniform(1.0, 100.0), rng=rng)
    report = check_similarity(A, P, TOL, SearchConfig(n_max=200, epsilon=1e-3, tol=TOL, threads=1))
    assert report.passed, report.detail
    assert report.inputs['transport_slack'] >= 0


def _suite():
    matrices = [diag_circle(d=3, R=2.0, seed=s) for s in range(10)]
    matrices += [random_circle(d=3, R=0.7, cond=5.0, seed=s) for s in range(10)]
    matrices += [rotation_blocks(pairs=[(0.6, 0.8), (1.0, 0.0)], reals=[-1.0]), real_jordan(0.6, 0.8)]
    matrices += [jordan(1j, 3), backward_shift(4), backward_shift(3, weights=[2.0, 0.5])]
    matrices += [_mismatched_pair(s) for s in range(10)]
    rng = np.random.default_rng(5000)
    for s in range(10):
        U = random_unitary(3, rng=rng).entries
        W = random_unitary(3, rng=rng).entries
        matrices.append(CMatrix(U @ np.diag([rng.uniform(1, 2), rng.uniform(1, 2), 0.0]) @ W, Field.Complex))
    matrices.append(CMatrix(np.zeros((2, 2)), Field.Real))
    return matrices


def test_spectral_consequences():
    positives = 0
    for A in _suite():
        result = classify(A, TOL)
        if kernel_obstruction(A, TOL):
            assert not result.positive
        if result.positive:
            positives += 1
            R = result.certificate.radius
            assert result.spectrum.spread <= 1e-6 * R
            assert min_singular_value(A) > 0
    assert positives == 21


def _separated_eigenvalues(rng, d):
    grid = [complex(a, b) * 0.5 for a in range(-3, 4) for b in range(-3, 4)]
    picks = rng.choice(len(grid), size=d, replace=False)
    return np.array([grid[i] for i in picks]) + 0.1 * (rng.random(d) - 0.5 + 1j * (rng.random(d) - 0.5))


@pytest.mark.parametrize('seed', range(200))
def test_eigensolver_accuracy(seed):
    rng = np.random.default_rng(6000 + seed)
    d = int(rng.integers(1, 7))
    values = _separated_eigenvalues(rng, d)
    V = random_invertible(d, 10 ** rng.uniform(0, 3), rng=rng)
    A = CMatrix(np.diag(values), Field.Complex).conjugate_by(V)

    spectrum = eig(A, TOL)
    assert sum(p.algebraic_mult for p in spectrum.eigenvalues) == d
    computed = spectrum.values()
    for value in values:
        assert np.min(np.abs(computed - value)) <= 1e-8


@pytest.mark.parametrize('seed', range(100))
def test_dirichlet_budget_suffices(seed):
    A = diag_circle(d=2, seed=7000 + seed)
    epsilon = 0.1
    cfg = SearchConfig(n_max=dirichlet_budget(2, epsilon / (2 * math.pi)), epsilon=epsilon, tol=TOL, threads=1)
    assert search_succeeded(operator_witness_search(A, cfg), cfg)
