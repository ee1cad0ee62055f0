"""Decision procedures for finite-dimensional operators.

In finite dimension super-recurrence, super-rigidity and uniform
super-rigidity coincide: they hold exactly when the matrix is diagonalizable
and all eigenvalues share one nonzero modulus R. A positive verdict carries a
certificate (R, eigenbasis condition, canonical form); a negative verdict
carries the first obstruction found.
"""
import cmath
import enum
import logging
import math
import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .numkernel import (CMatrix, Field, SpectrumReport, condition_number, eig, eigenvectors,
                        geometric_multiplicity)
from .typing import float_tol
from superdyn.utils.exceptions import DegenerateTolerance, MatrixValueError, NotConjugateClosed


_logger = logging.getLogger(__name__)


class Verdict(enum.Enum):
    AllRigidityClasses = 'AllRigidityClasses'
    NotSuperRecurrent = 'NotSuperRecurrent'


class ObstructionKind(enum.Enum):
    ModulusMismatch = 'ModulusMismatch'
    JordanBlock = 'JordanBlock'
    SingularNotDiagonalizableZero = 'SingularNotDiagonalizableZero'


@dataclass(frozen=True)
class Certificate:
    radius: float
    eigenbasis_condition: float
    canonical_form: CMatrix


@dataclass(frozen=True)
class Obstruction:
    kind: ObstructionKind
    detail: str
    eigenvalues: tuple = ()
    algebraic_mult: int = 0
    geometric_mult: int = 0


@dataclass(frozen=True)
class DynamicsClass:
    verdict: Verdict
    certificate: Optional[Certificate] = None
    obstruction: Optional[Obstruction] = None
    spectrum: Optional[SpectrumReport] = field(default=None, compare=False)
    margin: float = field(default=math.inf, compare=False)

    def __post_init__(self):
        positive = self.verdict is Verdict.AllRigidityClasses
        if positive != (self.certificate is not None) or positive == (self.obstruction is not None):
            raise ValueError('%s needs exactly a %s' % (self.verdict.value,
                             'certificate' if positive else 'obstruction'))

    @property
    def positive(self) -> bool:
        return self.verdict is Verdict.AllRigidityClasses


def kernel_obstruction(A: CMatrix, tol: float_tol) -> bool:
    """True when A is numerically singular; a kernel vector x has lam A^n x = 0 for all n."""
    if tol <= 0:
        raise MatrixValueError('tol must be positive')
    s = np.linalg.svd(A.entries, compute_uv=False)
    return bool(s[-1] <= tol * A.frobenius_norm())


def spectral_circle_check(spectrum: SpectrumReport, tol: float_tol) -> Optional[float]:
    """Radius of the circle carrying the whole spectrum, or None."""
    if not spectrum.eigenvalues:
        raise MatrixValueError('empty spectrum')
    if spectrum.modulus_max - spectrum.modulus_min > tol:
        return None
    radius = (spectrum.modulus_min + spectrum.modulus_max) / 2.0
    if radius <= tol:
        return None
    return radius


def jordan_margin(A: CMatrix, spectrum: SpectrumReport) -> float:
    """Distance of the rank-deciding singular values from the rank threshold.

    Small margins mean the diagonalizability decision would flip under a
    small change of tolerance.
    """
    d = A.dim
    margin = math.inf
    for point in spectrum.eigenvalues:
        M = A.entries - point.value * np.eye(d)
        s = np.linalg.svd(M, compute_uv=False)
        thr = spectrum.tol * max(np.linalg.norm(M), A.frobenius_norm())
        margin = min(margin, abs(s[d - point.algebraic_mult] - thr))
    return float(margin)


def _check_tolerance(spectrum: SpectrumReport, tol: float_tol) -> None:
    if spectrum.cluster_diameter > 2.0 * tol:
        warnings.warn('Tolerance %g chains eigenvalues %g apart into one spectral point'
                      % (tol, spectrum.cluster_diameter), DegenerateTolerance, stacklevel=3)
    if 0.0 < spectrum.modulus_max <= 2.0 * tol:
        warnings.warn('Tolerance %g is comparable to the spectral radius %g'
                      % (tol, spectrum.modulus_max), DegenerateTolerance, stacklevel=3)


def _find_obstruction(A: CMatrix, spectrum: SpectrumReport, tol: float_tol) -> Optional[Obstruction]:
    """First obstruction in the fixed order: modulus mismatch, Jordan block, zero radius."""
    if spectrum.spread > tol:
        small = min(spectrum.eigenvalues, key=lambda p: abs(p.value)).value
        large = max(spectrum.eigenvalues, key=lambda p: abs(p.value)).value
        return Obstruction(
            ObstructionKind.ModulusMismatch,
            'eigenvalues %s and %s have moduli %.6g and %.6g' % (small, large, abs(small), abs(large)),
            eigenvalues=(small, large))

    for point in spectrum.eigenvalues:
        if point.defective:
            return Obstruction(
                ObstructionKind.JordanBlock,
                'eigenvalue %s has algebraic multiplicity %d but geometric multiplicity %d'
                % (point.value, point.algebraic_mult, point.geometric_mult),
                eigenvalues=(point.value,),
                algebraic_mult=point.algebraic_mult,
                geometric_mult=point.geometric_mult)

    radius = (spectrum.modulus_min + spectrum.modulus_max) / 2.0
    if radius <= tol:
        return Obstruction(
            ObstructionKind.SingularNotDiagonalizableZero,
            'common modulus %.3g is zero at tolerance %g: lam A^n x = 0 never returns to x' % (radius, tol),
            eigenvalues=(0j,))
    return None


def _classify(A: CMatrix, tol: float_tol, real_blocks: bool) -> DynamicsClass:
    if tol <= 0:
        raise MatrixValueError('tol must be positive')
    spectrum = eig(A, tol)
    _check_tolerance(spectrum, tol)
    margin = jordan_margin(A, spectrum)

    obstruction = _find_obstruction(A, spectrum, tol)
    if obstruction is not None:
        _logger.info('NotSuperRecurrent (d=%d): %s', A.dim, obstruction.detail)
        return DynamicsClass(Verdict.NotSuperRecurrent, obstruction=obstruction,
                             spectrum=spectrum, margin=margin)

    values = spectrum.values()
    radius = float(np.mean(np.abs(values)))
    kappa = condition_number(eigenvectors(A, spectrum))
    if real_blocks:
        canonical = build_real_blocks(spectrum)
    else:
        canonical = CMatrix(np.diag(values), Field.Complex)
    certificate = Certificate(radius, max(kappa, 1.0), canonical)
    _logger.info('AllRigidityClasses (d=%d): R=%.12g, kappa=%.4g', A.dim, radius, kappa)
    return DynamicsClass(Verdict.AllRigidityClasses, certificate=certificate,
                         spectrum=spectrum, margin=margin)


def classify_complex(A: CMatrix, tol: float_tol) -> DynamicsClass:
    """Classify A over C (real input is promoted)."""
    return _classify(A.as_complex(), tol, real_blocks=False)


def classify_real(A: CMatrix, tol: float_tol) -> DynamicsClass:
    """Classify a real matrix; the certificate carries the real block form."""
    if A.field_tag is not Field.Real:
        raise MatrixValueError('classify_real needs a real matrix')
    return _classify(A, tol, real_blocks=True)


def get_classifier(field: Field):
    """Grab the classifier for the given scalar field."""
    if field is Field.Real:
        return classify_real
    elif field is Field.Complex:
        return classify_complex
    raise ValueError('No such field: %s' % (field,))


def classify(A: CMatrix, tol: float_tol) -> DynamicsClass:
    return get_classifier(A.field_tag)(A, tol)


def is_uniformly_rigid(A: CMatrix, tol: float_tol) -> bool:
    """Rigidity without scalars: the common radius must be 1."""
    result = classify(A, tol)
    return result.positive and abs(result.certificate.radius - 1.0) <= tol


def build_real_blocks(spectrum: SpectrumReport) -> CMatrix:
    """Real block-diagonal representative: 2x2 rotation blocks, then entries +-R."""
    tol = spectrum.tol
    radius = spectrum.common_radius
    if radius is None or radius <= 0:
        raise MatrixValueError('spectrum has no common nonzero radius')
    if not spectrum.diagonalizable:
        raise MatrixValueError('spectrum is not diagonalizable')

    reals = []
    upper = []
    lower = []
    for point in spectrum.eigenvalues:
        if abs(point.value.imag) <= tol:
            reals.extend([math.copysign(radius, point.value.real)] * point.algebraic_mult)
        elif point.value.imag > 0:
            upper.append(point)
        else:
            lower.append(point)

    pairs = []
    unmatched = list(lower)
    for point in upper:
        match = None
        for other in unmatched:
            if abs(other.value - point.value.conjugate()) <= tol \
                    and other.algebraic_mult == point.algebraic_mult:
                match = other
                break
        if match is None:
            raise NotConjugateClosed('conjugate of eigenvalue %s is missing' % (point.value,))
        unmatched.remove(match)
        value = (point.value + match.value.conjugate()) / 2.0
        pairs.extend([value] * point.algebraic_mult)
    if unmatched:
        raise NotConjugateClosed('conjugate of eigenvalue %s is missing' % (unmatched[0].value,))

    pairs.sort(key=cmath.phase)
    reals.sort(reverse=True)
    d = 2 * len(pairs) + len(reals)
    out = np.zeros((d, d))
    i = 0
    for z in pairs:
        a, b = z.real, z.imag
        out[i:i + 2, i:i + 2] = [[a, b], [-b, a]]
        i += 2
    for r in reals:
        out[i, i] = r
        i += 1
    return CMatrix(out, Field.Real)
