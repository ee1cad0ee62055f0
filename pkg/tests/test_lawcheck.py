from fractions import Fraction

import numpy as np
import pytest

from superdyn.Dynamics.generators import backward_shift, diag_circle, jordan, random_invertible, random_unitary
from superdyn.Dynamics.lawcheck import (LawId, LawReport, check_adjoint_spectrum, check_invertibility,
                                        check_kernel_obstruction, check_power_laws, check_scaling_exact,
                                        check_similarity, check_spectral_circle, parse_laws, run_laws)
from superdyn.Dynamics.numkernel import CMatrix, Field
from superdyn.Dynamics.witness import SearchConfig
from superdyn.utils.exceptions import MatrixValueError, SingularP, UnknownLaw

TOL = 1e-9
CFG = SearchConfig(n_max=200, epsilon=1e-6, tol=TOL, threads=1)


def real(rows):
    return CMatrix(np.array(rows, dtype=float), Field.Real)


def test_report_passes_iff_margin_nonnegative():
    assert LawReport.from_margin(LawId.Similarity, 0.0, 'edge').passed
    assert not LawReport.from_margin(LawId.Similarity, -1e-300, 'edge').passed
    report = LawReport.from_margin(LawId.ScalingExact, 1.0, 'ok', c=[2.0, 0.0])
    assert report.inputs == {'c': [2.0, 0.0]}


def test_similarity_positive(rng):
    A = CMatrix(np.diag([1j, -1j]))
    report = check_similarity(A, random_invertible(2, 8.0, rng=rng), TOL, CFG)
    assert report.passed
    assert 'AllRigidityClasses vs AllRigidityClasses' in report.detail


def test_similarity_with_identity():
    report = check_similarity(jordan(1, 2), CMatrix.identity(2), TOL, CFG)
    assert report.passed
    assert 'NotSuperRecurrent vs NotSuperRecurrent' in report.detail
    assert report.inputs['same_kind']


def test_similarity_keeps_modulus_mismatch(rng):
    A = real([[1, 0], [0, 2]])
    report = check_similarity(A, random_invertible(2, 5.0, rng=rng), TOL, CFG)
    assert report.passed
    assert report.inputs['same_kind']


def test_similarity_rejects_singular_p():
    with pytest.raises(SingularP):
        check_similarity(CMatrix.identity(2), real([[1, 1], [1, 1]]), TOL, CFG)


def test_power_laws_identity():
    verdict, bound = check_power_laws(CMatrix.identity(2), 2, CFG)
    assert verdict.passed and bound.passed
    assert bound.law_id is LawId.PowerResidualBound


def test_power_laws_fifth_roots():
    A = diag_circle(phases=[Fraction(1, 5), Fraction(2, 5)])
    cfg = SearchConfig(n_max=100, epsilon=1e-9, tol=TOL, threads=1)
    verdict, bound = check_power_laws(A, 2, cfg)
    assert verdict.passed
    assert bound.passed
    assert bound.inputs['n']


def test_power_laws_scaled_finite_order():
    A = diag_circle(R=3.0, phases=[Fraction(1, 4), Fraction(1, 2), Fraction(3, 4), 0])
    verdict, bound = check_power_laws(A, 3, CFG)
    assert verdict.passed and bound.passed


def test_power_laws_jordan():
    verdict, bound = check_power_laws(jordan(1j, 2), 2, CFG)
    assert verdict.passed
    assert 'NotSuperRecurrent' in verdict.detail
    assert bound.passed


def test_power_laws_range():
    with pytest.raises(MatrixValueError):
        check_power_laws(CMatrix.identity(2), 6, CFG)


def test_scaling_exact_minus_identity():
    report = check_scaling_exact(real([[-1, 0], [0, -1]]), 7, CFG)
    assert report.passed
    assert report.inputs['deviation'] < 1e-14


def test_scaling_exact_finite_order():
    A = diag_circle(phases=[Fraction(1, 3), Fraction(1, 2)])
    report = check_scaling_exact(A, 2j, CFG)
    assert report.passed
    assert report.inputs['deviation'] <= 1e-13


def test_scaling_exact_random_unitary():
    assert check_scaling_exact(random_unitary(3, seed=2), 0.5, CFG).passed


def test_scaling_exact_negative_verdict():
    assert check_scaling_exact(real([[1, 0], [0, 2]]), 3.0, CFG).passed


def test_scaling_rejects_zero():
    with pytest.raises(MatrixValueError):
        check_scaling_exact(CMatrix.identity(2), 0, CFG)


def test_adjoint_spectrum():
    report = check_adjoint_spectrum(CMatrix(np.diag([2j, -2])), 1e-10)
    assert report.passed
    assert 'tripwire' in report.detail
    assert check_adjoint_spectrum(CMatrix.identity(3), TOL).margin == TOL


def test_adjoint_spectrum_random(rng):
    A = CMatrix(rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4)))
    assert check_adjoint_spectrum(A, 1e-8).passed


def test_spectral_circle_law():
    assert check_spectral_circle(CMatrix(np.diag([1j, -1])), TOL).passed
    report = check_spectral_circle(real([[1, 0], [0, 2]]), TOL)
    assert report.passed
    assert report.margin == pytest.approx(1.0)
    assert check_spectral_circle(jordan(1, 2), TOL).margin == 0.0


def test_invertibility_law(rng):
    A = CMatrix(np.diag([2j, -2])).conjugate_by(random_invertible(2, 5.0, rng=rng))
    report = check_invertibility(A, TOL)
    assert report.passed
    assert report.inputs['sigma_min'] > 0


def test_kernel_obstruction_law():
    report = check_kernel_obstruction(backward_shift(4), TOL)
    assert report.passed
    assert 'kernel present' in report.detail
    assert check_kernel_obstruction(CMatrix.identity(2), TOL).passed


def test_parse_laws():
    assert parse_laws(['Similarity', ' ScalingExact']) == [LawId.Similarity, LawId.ScalingExact]
    with pytest.raises(UnknownLaw):
        parse_laws(['Hypercyclic'])


def test_run_laws_on_circle_matrix():
    A = diag_circle(phases=[Fraction(1, 3), Fraction(1, 2)])
    reports = run_laws(A, list(LawId), CFG, np.random.default_rng(1), samples=2, powers=[2, 3])
    assert all(r.passed for r in reports)
    kinds = [r.law_id for r in reports]
    assert kinds.count(LawId.Similarity) == 2
    assert kinds.count(LawId.PowerVerdict) == 2
    assert kinds.count(LawId.ScalingExact) == 2


def test_run_laws_is_deterministic():
    A = random_unitary(2, seed=3)
    laws = [LawId.Similarity, LawId.ScalingExact]
    one = run_laws(A, laws, CFG, np.random.default_rng(5), samples=2)
    two = run_laws(A, laws, CFG, np.random.default_rng(5), samples=2)
    assert [r.margin for r in one] == [r.margin for r in two]
