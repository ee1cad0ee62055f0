"""Structural laws of super-rigidity as executable checks.

Each check returns a LawReport whose `margin` is the law-specific slack;
a law passes exactly when its margin is nonnegative.
"""
import cmath
import enum
import logging
import math
from dataclasses import dataclass, field
from typing import Iterable, List, Sequence, Tuple

import numpy as np

from .classifier import ObstructionKind, classify, kernel_obstruction, spectral_circle_check
from .generators import random_invertible
from .numkernel import (CMatrix, adjoint, condition_number, eig, min_singular_value, scaled_power,
                        spectral_norms)
from .witness import (SearchConfig, WitnessCertificate, operator_witness_search, recompute_residual,
                      transport_certificate_scaling)
from superdyn.utils.exceptions import MatrixValueError, SingularP, UnknownLaw


_logger = logging.getLogger(__name__)

# additive slack of the residual inequalities
BOUND_SLACK = 1e-9
SCALING_TOLERANCE = 1e-12


class LawId(enum.Enum):
    Similarity = 'Similarity'
    PowerVerdict = 'PowerVerdict'
    PowerResidualBound = 'PowerResidualBound'
    ScalingExact = 'ScalingExact'
    AdjointSpectrum = 'AdjointSpectrum'
    SpectralCircle = 'SpectralCircle'
    Invertibility = 'Invertibility'
    KernelObstruction = 'KernelObstruction'


@dataclass(frozen=True)
class LawReport:
    law_id: LawId
    passed: bool
    margin: float
    detail: str
    inputs: dict = field(default_factory=dict)

    @classmethod
    def from_margin(cls, law_id: LawId, margin: float, detail: str, **inputs) -> 'LawReport':
        margin = float(margin)
        report = cls(law_id, margin >= 0, margin, detail, inputs)
        log = _logger.info if report.passed else _logger.warning
        log('%s %s (margin %.3g): %s', law_id.value, 'passed' if report.passed else 'FAILED', margin, detail)
        return report


def parse_laws(names: Iterable[str]) -> List[LawId]:
    laws = []
    for name in names:
        try:
            laws.append(LawId(name.strip()))
        except ValueError:
            raise UnknownLaw('No such law: %s (choose from %s)'
                             % (name, ', '.join(law.value for law in LawId)))
    return laws


def _failed(distance: float) -> float:
    return -max(distance, np.finfo(float).tiny)


def _kind(result):
    return None if result.obstruction is None else result.obstruction.kind


def check_similarity(A: CMatrix, P: CMatrix, tol: float, cfg: SearchConfig = None) -> LawReport:
    """Verdicts of A and P A P^-1 agree, and certificates transport with factor cond(P)."""
    if min_singular_value(P) <= tol * P.frobenius_norm():
        raise SingularP('P is numerically singular')
    cfg = SearchConfig.from_config(tol=tol) if cfg is None else cfg
    kappa = condition_number(P.entries)
    B = A.conjugate_by(P)
    tol_conj = tol * kappa ** 2

    a = classify(A, tol)
    b = classify(B, tol_conj)
    agree = a.verdict is b.verdict
    distance = abs(tol_conj - b.spectrum.spread)

    slack = math.inf
    if np.any(A.entries):
        for cert in operator_witness_search(A, cfg):
            slack = min(slack, kappa * cert.residual + BOUND_SLACK - recompute_residual(B, cert))

    if not agree:
        margin = _failed(distance)
    elif slack < 0:
        margin = slack
    else:
        margin = min(distance, slack)
    detail = '%s vs %s (kinds %s / %s), cond(P)=%.4g, transport slack %.3g' % (
        a.verdict.value, b.verdict.value, _kind(a), _kind(b), kappa, slack)
    return LawReport.from_margin(LawId.Similarity, margin, detail, tol=tol, tol_conjugated=tol_conj,
                                 cond=kappa, spread_conjugated=b.spectrum.spread,
                                 transport_slack=slack, same_kind=_kind(a) == _kind(b))


def _lam_times_power(A: CMatrix, cert: WitnessCertificate):
    """lam A^n assembled from the scaled power, or None when it overflows."""
    P = scaled_power(A, cert.n)
    if P.zero_flag or cert.log_abs_lambda == -math.inf:
        return np.zeros((A.dim, A.dim), dtype=complex)
    log_coef = cert.log_abs_lambda + P.log_scale
    if log_coef > 700:
        return None
    return cmath.rect(math.exp(log_coef), cert.arg_lambda) * P.normalized.entries


def check_power_laws(A: CMatrix, p: int, cfg: SearchConfig = None) -> Tuple[LawReport, LawReport]:
    """Verdict of A^p matches A; certificates (n, lam^p) for A^p obey the telescoping bound."""
    if not 2 <= p <= 5:
        raise MatrixValueError('p must lie in 2..5, got %r' % (p,))
    cfg = SearchConfig.from_config() if cfg is None else cfg
    tol = cfg.tol

    a = classify(A, tol)
    tol_p = tol * p * max(1.0, a.spectrum.modulus_max) ** (p - 1)
    b = classify(A.power(p), tol_p)
    distance = abs(tol_p - b.spectrum.spread)
    margin = distance if a.verdict is b.verdict else _failed(distance)
    verdict_report = LawReport.from_margin(
        LawId.PowerVerdict, margin, 'A: %s, A^%d: %s' % (a.verdict.value, p, b.verdict.value),
        p=p, tol=tol, tol_power=tol_p)

    slack = math.inf
    checked = []
    d = A.dim
    if np.any(A.entries):
        for cert in operator_witness_search(A, cfg):
            X = _lam_times_power(A, cert)
            if X is None:
                continue
            M = float(spectral_norms(X)[0])
            lhs = float(spectral_norms(np.linalg.matrix_power(X, p) - np.eye(d))[0])
            bound = sum(M ** i for i in range(p)) * cert.residual + BOUND_SLACK
            slack = min(slack, bound - lhs)
            checked.append(cert.n)
    if not checked:
        slack = 0.0
    bound_report = LawReport.from_margin(
        LawId.PowerResidualBound, slack,
        '%d certificates, min slack %.3g' % (len(checked), slack), p=p, n=checked)
    return verdict_report, bound_report


def check_scaling_exact(A: CMatrix, c: complex, cfg: SearchConfig = None) -> LawReport:
    """Certificate (n, lam c^-n) for cA has the residual of (n, lam) for A."""
    c = complex(c)
    if c == 0:
        raise MatrixValueError('c must be nonzero')
    cfg = SearchConfig.from_config() if cfg is None else cfg
    cA = A.scale(c)

    deviation = 0.0
    checked = []
    for cert in operator_witness_search(A, cfg):
        r = recompute_residual(A, cert)
        r_scaled = recompute_residual(cA, transport_certificate_scaling(cert, c))
        deviation = max(deviation, abs(r_scaled - r) / (1.0 + r))
        checked.append(cert.n)
    margin = SCALING_TOLERANCE - deviation
    return LawReport.from_margin(LawId.ScalingExact, margin,
                                 'c=%s, %d certificates, max deviation %.3g' % (c, len(checked), deviation),
                                 c=[c.real, c.imag], n=checked, deviation=deviation)


def check_adjoint_spectrum(A: CMatrix, tol: float) -> LawReport:
    """Eigenvalue moduli of A and A^H: one circle when A is positive, equal multisets always."""
    moduli = eig(A, tol).moduli()
    moduli_adj = eig(adjoint(A), tol).moduli()
    result = classify(A, tol)
    if result.positive:
        union = np.concatenate([moduli, moduli_adj])
        gap = float(union.max() - union.min())
        detail = 'spread of |sigma(A)| and |sigma(A^H)| together: %.3g' % gap
    else:
        gap = float(np.max(np.abs(moduli - moduli_adj)))
        detail = 'max difference of sorted moduli of A and A^H: %.3g' % gap
    detail += ' (eigensolver regression tripwire)'
    return LawReport.from_margin(LawId.AdjointSpectrum, tol - gap, detail, tol=tol, positive=result.positive)


def check_spectral_circle(A: CMatrix, tol: float) -> LawReport:
    """A positive verdict puts the spectrum on the certificate's circle."""
    result = classify(A, tol)
    spectrum = result.spectrum
    R = spectral_circle_check(spectrum, tol)
    if result.positive:
        off = max(spectrum.spread, abs(R - result.certificate.radius)) if R is not None else math.inf
        margin, detail = tol - off, 'spread %.3g around R=%.12g' % (spectrum.spread, result.certificate.radius)
    elif result.obstruction.kind is ObstructionKind.ModulusMismatch:
        margin, detail = spectrum.spread - tol, 'no common circle: spread %.3g' % spectrum.spread
    else:
        margin, detail = 0.0, 'vacuous for %s' % result.obstruction.kind.value
    return LawReport.from_margin(LawId.SpectralCircle, margin, detail, tol=tol, spread=spectrum.spread)


def check_invertibility(A: CMatrix, tol: float) -> LawReport:
    """A positive verdict forces sigma_min(A) >= R / (2 kappa) > 0."""
    result = classify(A, tol)
    smin = min_singular_value(A)
    if result.positive:
        floor = result.certificate.radius / (2.0 * result.certificate.eigenbasis_condition)
        margin, detail = smin - floor, 'sigma_min %.6g, floor R/(2 kappa) %.6g' % (smin, floor)
    else:
        margin, detail = 0.0, 'vacuous for %s' % result.verdict.value
    return LawReport.from_margin(LawId.Invertibility, margin, detail, tol=tol, sigma_min=smin)


def check_kernel_obstruction(A: CMatrix, tol: float) -> LawReport:
    """A numerically nontrivial kernel forces a negative verdict."""
    smin = min_singular_value(A)
    threshold = tol * A.frobenius_norm()
    if kernel_obstruction(A, tol):
        result = classify(A, tol)
        gap = threshold - smin
        margin = gap if not result.positive else _failed(gap)
        detail = 'kernel present, verdict %s' % result.verdict.value
    else:
        margin, detail = smin - threshold, 'no kernel: sigma_min %.6g' % smin
    return LawReport.from_margin(LawId.KernelObstruction, margin, detail, tol=tol, sigma_min=smin)


def _random_scalar(rng, real: bool, n_max: int) -> complex:
    # keeps n |log|c|| below 500, where log|lam| still resolves 1e-13
    spread = min(math.log(2.0), 500.0 / n_max)
    modulus = float(np.exp(rng.uniform(-spread, spread)))
    if real:
        return modulus * (1.0 if rng.random() < 0.5 else -1.0)
    return cmath.rect(modulus, 2 * math.pi * rng.random())


def run_laws(A: CMatrix, laws: Sequence[LawId], cfg: SearchConfig, rng=None, samples: int = 3,
             powers: Sequence[int] = (2, 3), cond_bound: float = 10.0) -> List[LawReport]:
    """Run the selected laws on A and on companions drawn from `rng`."""
    rng = np.random.default_rng(0) if rng is None else rng
    tol = cfg.tol
    reports = []
    for law in laws:
        if law is LawId.Similarity:
            for _ in range(samples):
                cond = rng.uniform(1.0, cond_bound)
                reports.append(check_similarity(A, random_invertible(A.dim, cond, rng=rng), tol, cfg))
        elif law in (LawId.PowerVerdict, LawId.PowerResidualBound):
            for p in powers:
                verdict_report, bound_report = check_power_laws(A, p, cfg)
                reports.append(verdict_report if law is LawId.PowerVerdict else bound_report)
        elif law is LawId.ScalingExact:
            for _ in range(samples):
                reports.append(check_scaling_exact(A, _random_scalar(rng, A.is_real, cfg.n_max), cfg))
        elif law is LawId.AdjointSpectrum:
            reports.append(check_adjoint_spectrum(A, tol))
        elif law is LawId.SpectralCircle:
            reports.append(check_spectral_circle(A, tol))
        elif law is LawId.Invertibility:
            reports.append(check_invertibility(A, tol))
        elif law is LawId.KernelObstruction:
            reports.append(check_kernel_obstruction(A, tol))
    return reports
