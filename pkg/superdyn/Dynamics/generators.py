"""Named matrix families.

Every family is a function of keyword parameters returning a CMatrix;
random families draw from `numpy.random.default_rng(seed)` and are
deterministic given the seed.
"""
import cmath
import math
from fractions import Fraction
from typing import Dict, Sequence

import numpy as np

from .numkernel import CMatrix, Field
from superdyn.utils.exceptions import MatrixValueError, UnknownGenerator


_EXACT_TURNS = {
    Fraction(0): 1 + 0j,
    Fraction(1, 4): 1j,
    Fraction(1, 2): -1 + 0j,
    Fraction(3, 4): -1j,
}


def turn(phase) -> complex:
    """exp(2 pi i phase), exact at quarter turns."""
    if isinstance(phase, (int, Fraction)):
        exact = _EXACT_TURNS.get(Fraction(phase) % 1)
        if exact is not None:
            return exact
    return cmath.exp(2j * math.pi * float(phase))


def _rng(seed):
    return np.random.default_rng(seed)


def _positive(name: str, value, strict: bool = True):
    if value is None or (value <= 0 if strict else value < 0):
        raise MatrixValueError('%s must be %s, got %r' % (name, 'positive' if strict else 'nonnegative', value))
    return value


def _dim(d) -> int:
    if not isinstance(d, int) or d < 1:
        raise MatrixValueError('d must be a positive integer, got %r' % (d,))
    return d


def diag_circle(d: int = None, R=1.0, phases: Sequence = None, seed: int = None) -> CMatrix:
    """diag(R e^{2 pi i phase_k}); phases are drawn uniformly when not given."""
    R = _positive('R', float(R))
    if phases is None:
        phases = _rng(seed).random(_dim(d if d is not None else 2))
    phases = list(phases) if isinstance(phases, (list, tuple, np.ndarray)) else [phases]
    if d is not None and _dim(d) != len(phases):
        raise MatrixValueError('d=%d but %d phases given' % (d, len(phases)))
    return CMatrix(np.diag([R * turn(p) for p in phases]), Field.Complex)


def jordan(lam=1, m: int = 2) -> CMatrix:
    """m x m Jordan block with eigenvalue lam."""
    m = _dim(m)
    lam = complex(lam)
    A = lam * np.eye(m, dtype=complex) + np.eye(m, k=1)
    return CMatrix(A, Field.Real if lam.imag == 0 else Field.Complex)


def backward_shift(d: int = 4, weights: Sequence = None) -> CMatrix:
    """Truncated weighted backward shift: e_1 -> 0, e_k -> w_k e_{k-1}."""
    d = _dim(d)
    if weights is None:
        weights = [1.0] * (d - 1)
    weights = list(weights) if isinstance(weights, (list, tuple)) else [weights]
    if len(weights) != d - 1:
        raise MatrixValueError('backward shift on K^%d needs %d weights, got %d' % (d, d - 1, len(weights)))
    for w in weights:
        _positive('weight', float(w))
    A = np.zeros((d, d))
    for k in range(1, d):
        A[k - 1, k] = float(weights[k - 1])
    return CMatrix(A, Field.Real)


def rotation_blocks(a=None, b=None, pairs: Sequence = None, reals: Sequence = ()) -> CMatrix:
    """Real block diagonal matrix of [[a, b], [-b, a]] blocks followed by real entries."""
    if pairs is None:
        if a is None or b is None:
            raise MatrixValueError('rotation-blocks needs a and b, or pairs')
        pairs = [(a, b)]
    reals = list(reals) if isinstance(reals, (list, tuple)) else [reals]
    d = 2 * len(pairs) + len(reals)
    A = np.zeros((_dim(d), d))
    i = 0
    for a_, b_ in pairs:
        A[i:i + 2, i:i + 2] = [[float(a_), float(b_)], [-float(b_), float(a_)]]
        i += 2
    for r in reals:
        A[i, i] = float(r)
        i += 1
    return CMatrix(A, Field.Real)


def real_jordan(a=0.0, b=1.0) -> CMatrix:
    """4 x 4 real Jordan-type block [[B, I], [0, B]] with B = [[a, b], [-b, a]]."""
    B = np.array([[float(a), float(b)], [-float(b), float(a)]])
    A = np.zeros((4, 4))
    A[:2, :2] = B
    A[2:, 2:] = B
    A[:2, 2:] = np.eye(2)
    return CMatrix(A, Field.Real)


def random_unitary(d: int = 2, seed: int = None, rng=None) -> CMatrix:
    """Product of complex plane rotations with random angles and phases."""
    d = _dim(d)
    rng = _rng(seed) if rng is None else rng
    U = np.diag(np.exp(2j * math.pi * rng.random(d)))
    for i in range(d - 1):
        for j in range(i + 1, d):
            theta = 2 * math.pi * rng.random()
            phi = 2 * math.pi * rng.random()
            G = np.eye(d, dtype=complex)
            c, s = math.cos(theta), math.sin(theta)
            G[i, i], G[j, j] = c, c
            G[i, j], G[j, i] = -s * cmath.exp(1j * phi), s * cmath.exp(-1j * phi)
            U = G @ U
    return CMatrix(U, Field.Complex)


def random_invertible(d: int = 2, cond=10.0, seed: int = None, rng=None) -> CMatrix:
    """U diag(s) W with singular values spread geometrically over [1, cond]."""
    d = _dim(d)
    cond = float(cond)
    if cond < 1:
        raise MatrixValueError('cond must be >= 1, got %r' % cond)
    rng = _rng(seed) if rng is None else rng
    U = random_unitary(d, rng=rng).entries
    W = random_unitary(d, rng=rng).entries
    s = np.geomspace(1.0, cond, d) if d > 1 else np.ones(1)
    return CMatrix(U @ np.diag(s) @ W, Field.Complex)


def random_unimodular(d: int = 2, seed: int = None) -> CMatrix:
    """diag(e^{2 pi i theta_k}) with uniform phases."""
    return diag_circle(d=d, R=1.0, seed=seed)


def random_circle(d: int = 2, R=1.0, cond=10.0, seed: int = None) -> CMatrix:
    """V diag(R e^{2 pi i theta_k}) V^-1 with cond(V) = cond."""
    rng = _rng(seed)
    D = diag_circle(d=d, R=R, phases=list(rng.random(_dim(d))))
    V = random_invertible(d, cond, rng=rng)
    return D.conjugate_by(V)


def similar_conjugate(base: str = 'jordan', cond=10.0, seed: int = None, **params) -> CMatrix:
    """P A P^-1 for A from the family `base` and a random P with cond(P) = cond."""
    if base == 'similar-conjugate':
        raise MatrixValueError('similar-conjugate cannot conjugate itself')
    A = get_generator(base)(**params)
    P = random_invertible(A.dim, cond, seed=seed)
    return A.conjugate_by(P)


_generators = {
    'diag-circle': diag_circle,
    'jordan': jordan,
    'backward-shift': backward_shift,
    'rotation-blocks': rotation_blocks,
    'real-jordan': real_jordan,
    'similar-conjugate': similar_conjugate,
    'random-unitary': random_unitary,
    'random-unimodular': random_unimodular,
    'random-circle': random_circle,
}

__all__ = ['get_generator', 'generator_names', 'parse_params', 'parse_scalar']


def generator_names():
    return sorted(_generators)


def get_generator(name: str):
    """Grab the generator family with the given name."""
    try:
        return _generators[name]
    except KeyError:
        raise UnknownGenerator('No such generator: %s' % (name,))


_aliases = {'lambda': 'lam'}


def parse_scalar(text: str):
    text = text.strip()
    try:
        return int(text)
    except ValueError:
        pass
    if '/' in text:
        try:
            return Fraction(text)
        except (ValueError, ZeroDivisionError):
            raise MatrixValueError('bad fraction: %r' % text)
    try:
        return float(text)
    except ValueError:
        pass
    try:
        if text == 'i' or text == '-i':
            text = text.replace('i', '1j')
        return complex(text.replace('i', 'j'))
    except ValueError:
        raise MatrixValueError('cannot parse value %r' % text)


def parse_params(pairs: Sequence[str]) -> Dict[str, object]:
    """key=value strings to keyword arguments; comma separated values become lists."""
    params = {}
    for pair in pairs:
        if '=' not in pair:
            raise MatrixValueError('parameter %r is not key=value' % pair)
        key, value = pair.split('=', 1)
        key = _aliases.get(key.strip(), key.strip())
        if key == 'base':
            params[key] = value.strip()
        elif key == 'pairs':
            items = [parse_scalar(v) for v in value.split(',') if v.strip()]
            if len(items) % 2:
                raise MatrixValueError('pairs needs an even number of values')
            params[key] = list(zip(items[::2], items[1::2]))
        elif ',' in value or key in ('phases', 'weights', 'reals'):
            params[key] = [parse_scalar(v) for v in value.split(',') if v.strip()]
        else:
            params[key] = parse_scalar(value)
    return params
