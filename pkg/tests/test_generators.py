from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, seed, settings
from hypothesis import strategies as st

from superdyn.Dynamics.classifier import ObstructionKind, Verdict, classify
from superdyn.Dynamics.generators import (diag_circle, generator_names, get_generator, parse_params,
                                          parse_scalar, random_circle, random_invertible, random_unitary, turn)
from superdyn.Dynamics.numkernel import Field
from superdyn.utils.exceptions import MatrixValueError, UnknownGenerator

TOL = 1e-9


def build(name, *pairs):
    return get_generator(name)(**parse_params(list(pairs)))


def test_turn_is_exact_at_quarter_turns():
    assert turn(Fraction(1, 2)) == -1
    assert turn(Fraction(1, 4)) == 1j
    assert turn(3) == 1
    assert turn(0.125) == pytest.approx(np.exp(1j * np.pi / 4))


def test_diag_circle_from_params():
    A = build('diag-circle', 'd=2', 'R=1', 'phases=1/3,1/2')
    assert np.allclose(A.entries, np.diag([np.exp(2j * np.pi / 3), -1]))


def test_diag_circle_checks_params():
    with pytest.raises(MatrixValueError):
        diag_circle(d=3, phases=[0.1, 0.2])
    with pytest.raises(MatrixValueError):
        diag_circle(d=2, R=0)


def test_rotation_blocks_from_params():
    A = build('rotation-blocks', 'a=3', 'b=4')
    assert A.field_tag is Field.Real
    assert np.array_equal(A.entries.real, [[3, 4], [-4, 3]])


def test_jordan_from_params():
    A = build('jordan', 'lambda=1', 'm=3')
    assert A.field_tag is Field.Real
    assert np.array_equal(A.entries.real, [[1, 1, 0], [0, 1, 1], [0, 0, 1]])
    assert build('jordan', 'lambda=i', 'm=2').field_tag is Field.Complex


def test_backward_shift_weights():
    A = build('backward-shift', 'd=3', 'weights=2,5')
    assert np.array_equal(A.entries.real, [[0, 2, 0], [0, 0, 5], [0, 0, 0]])
    with pytest.raises(MatrixValueError):
        build('backward-shift', 'd=3', 'weights=1')
    with pytest.raises(MatrixValueError):
        build('backward-shift', 'd=3', 'weights=1,-1')


def test_random_unitary_is_unitary():
    U = random_unitary(5, seed=1).entries
    assert np.allclose(U.conj().T @ U, np.eye(5), atol=1e-12)


def test_random_invertible_condition():
    P = random_invertible(4, 37.0, seed=2).entries
    assert np.linalg.cond(P) == pytest.approx(37.0)


def test_random_families_are_seeded():
    assert random_circle(3, R=2.0, cond=5.0, seed=8).allclose(random_circle(3, R=2.0, cond=5.0, seed=8), atol=0)
    assert not random_circle(3, seed=8).allclose(random_circle(3, seed=9))


def test_similar_conjugate():
    A = build('similar-conjugate', 'base=jordan', 'lambda=1', 'm=2', 'cond=4', 'seed=3')
    assert np.allclose(np.linalg.eigvals(A.entries), [1, 1], atol=1e-5)
    with pytest.raises(MatrixValueError):
        build('similar-conjugate', 'base=similar-conjugate')


def test_unknown_generator():
    with pytest.raises(UnknownGenerator):
        get_generator('hypercyclic-shift')
    assert 'diag-circle' in generator_names()


def test_parse_scalar():
    assert parse_scalar('3') == 3
    assert parse_scalar('1/3') == Fraction(1, 3)
    assert parse_scalar('0.5') == 0.5
    assert parse_scalar('i') == 1j
    assert parse_scalar('-i') == -1j
    assert parse_scalar('1+2i') == 1 + 2j
    with pytest.raises(MatrixValueError):
        parse_scalar('one')


def test_parse_params():
    params = parse_params(['pairs=0,1,3,4', 'reals=2', 'base=jordan'])
    assert params == {'pairs': [(0, 1), (3, 4)], 'reals': [2], 'base': 'jordan'}
    with pytest.raises(MatrixValueError):
        parse_params(['d'])


_documented = {
    'diag-circle': Verdict.AllRigidityClasses,
    'random-unimodular': Verdict.AllRigidityClasses,
    'random-circle': Verdict.AllRigidityClasses,
    'random-unitary': Verdict.AllRigidityClasses,
    'jordan': Verdict.NotSuperRecurrent,
    'backward-shift': Verdict.NotSuperRecurrent,
}


@seed(11)
@settings(max_examples=25, deadline=None)
@given(st.sampled_from(sorted(_documented)), st.integers(min_value=1, max_value=4),
       st.integers(min_value=0, max_value=2 ** 31))
def test_families_keep_their_verdict(name, d, s):
    family = get_generator(name)
    if name == 'jordan':
        A = family(lam=turn(Fraction(s % 12, 12)), m=max(d, 2))
    elif name == 'backward-shift':
        A = family(d=max(d, 2))
    elif name == 'random-circle':
        A = family(d=d, R=1 + s % 5, cond=1 + s % 7, seed=s)
    else:
        A = family(d=d, seed=s)
    assert classify(A, TOL).verdict is _documented[name]


def test_rotation_blocks_with_reals_is_positive():
    result = classify(build('rotation-blocks', 'pairs=0.6,0.8', 'reals=1,-1'), TOL)
    assert result.positive
    assert result.certificate.radius == pytest.approx(1.0)


def test_real_jordan_is_jordan_block():
    assert classify(build('real-jordan', 'a=0.6', 'b=0.8'), TOL).obstruction.kind is ObstructionKind.JordanBlock
