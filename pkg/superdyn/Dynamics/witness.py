"""Explicit witnesses (n, lam) with a measured residual.

Operator witnesses measure ||lam A^n - I||_2, vector witnesses
||lam A^n x - x||. The scalar is the least-squares minimizer, computed from
the rescaled power so that neither A^n nor lam has to be representable.
"""
import cmath
import enum
import logging
import math
from dataclasses import dataclass, replace
from fractions import Fraction
from typing import List, Optional, Tuple

import numpy as np

from .numkernel import CMatrix, ScaledPower, scaled_power, scaled_step, spectral_norms
from .typing import ComplexVector, float_log
from .witness_worker import run_chunks
from superdyn.utils.config import config
from superdyn.utils.exceptions import (BudgetOverflow, ConfigError, MatrixValueError, ZeroPower,
                                       ZeroVector)


_logger = logging.getLogger(__name__)

# exp() overflows past this exponent
_LOG_MAX = math.log(np.finfo(float).max)
_INT64_MAX = 2 ** 63 - 1
_TWO_PI = Fraction('6.28318530717958647692528676655900576839433879875')


class NormKind(enum.Enum):
    OperatorNorm = 'OperatorNorm'
    VectorNorm = 'VectorNorm'


@dataclass(frozen=True)
class SearchConfig:
    n_max: int = 10000
    epsilon: float = 1e-3
    record_only: bool = True
    stop_at_epsilon: bool = True
    rigid: bool = False
    tol: float = 1e-9
    threads: int = 1
    chunk_size: int = 256

    def __post_init__(self):
        if self.n_max < 1:
            raise ConfigError('n_max must be >= 1, got %s' % self.n_max)
        if not self.epsilon > 0:
            raise ConfigError('epsilon must be > 0, got %s' % self.epsilon)
        if not self.tol > 0:
            raise ConfigError('tol must be > 0, got %s' % self.tol)
        if self.chunk_size < 1:
            raise ConfigError('chunk_size must be >= 1, got %s' % self.chunk_size)

    @classmethod
    def from_config(cls, conf: config = None, **overrides) -> 'SearchConfig':
        conf = config() if conf is None else conf
        values = dict(n_max=conf.n_max, epsilon=conf.epsilon, record_only=conf.record_only,
                      stop_at_epsilon=conf.stop_at_epsilon, tol=conf.tol,
                      threads=conf.effective_threads(), chunk_size=conf.chunk_size)
        values.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**values)

    def replace(self, **changes) -> 'SearchConfig':
        return replace(self, **changes)


@dataclass(frozen=True)
class WitnessCertificate:
    """One pair (n, lam) of a witness sequence.

    lam is stored as log|lam| and arg(lam); log|lam| = -inf encodes lam = 0.
    """

    n: int
    log_abs_lambda: float_log
    arg_lambda: float
    residual: float
    norm_kind: NormKind = NormKind.OperatorNorm
    vector: Optional[Tuple[complex, ...]] = None

    def __post_init__(self):
        if self.n < 1:
            raise MatrixValueError('witness exponent must be >= 1')

    @classmethod
    def from_lambda(cls, n: int, lam: complex, residual: float, norm_kind=NormKind.OperatorNorm,
                    vector=None) -> 'WitnessCertificate':
        log_abs = math.log(abs(lam)) if lam != 0 else -math.inf
        return cls(n, log_abs, cmath.phase(lam) if lam != 0 else 0.0, residual, norm_kind, vector)

    @property
    def lam(self) -> complex:
        return _lambda_value(self.log_abs_lambda, self.arg_lambda)


def _lambda_value(log_abs: float, arg: float) -> complex:
    if log_abs == -math.inf:
        return 0j
    if log_abs > _LOG_MAX:
        return complex(math.copysign(math.inf, math.cos(arg)), math.copysign(math.inf, math.sin(arg)))
    return cmath.rect(math.exp(log_abs), arg)


def _scalar(M: np.ndarray, real: bool) -> complex:
    """Coefficient c with lam A^n = c M for the least-squares lam (M = A^n / exp(s))."""
    tr = np.trace(M)
    fro2 = float(np.vdot(M, M).real)
    if real:
        return complex(tr.real / fro2)
    return complex(np.conj(tr) / fro2)


def _log_lambda(coef: complex, log_scale: float) -> Tuple[float, float]:
    if coef == 0:
        return -math.inf, 0.0
    return math.log(abs(coef)) - log_scale, cmath.phase(coef)


def best_scalar(P: ScaledPower) -> complex:
    """Minimizer of ||lam A^n - I||_F, real when the base matrix is real."""
    if P.zero_flag:
        raise ZeroPower('A^%d = 0: no scalar brings it back to I' % P.exponent)
    coef = _scalar(P.normalized.entries, P.base.is_real)
    return _lambda_value(*_log_lambda(coef, P.log_scale))


def _operator_rows(A: CMatrix, start: int, stop: int, rigid: bool) -> List[tuple]:
    """Rows (n, log|lam|, arg lam, residual) for n in [start, stop)."""
    d = A.dim
    P = scaled_power(A, start)

    count = stop - start
    stack = np.zeros((count, d, d), dtype=complex)
    scales = np.full(count, -math.inf)
    zeros = np.zeros(count, dtype=bool)
    for i in range(count):
        if i > 0:
            P = scaled_step(P)
        zeros[i] = P.zero_flag
        if not P.zero_flag:
            stack[i] = P.normalized.entries
            scales[i] = P.log_scale

    coefs = np.zeros(count, dtype=complex)
    logs = np.full(count, -math.inf)
    args = np.zeros(count)
    residuals = np.full(count, math.inf)
    overflow = np.zeros(count, dtype=bool)
    for i in range(count):
        if zeros[i]:
            continue
        if rigid:
            logs[i], args[i] = 0.0, 0.0
            if scales[i] < _LOG_MAX:
                coefs[i] = math.exp(scales[i])
            else:
                overflow[i] = True
        else:
            coefs[i] = _scalar(stack[i], A.is_real)
            logs[i], args[i] = _log_lambda(coefs[i], scales[i])

    # lam A^n vanishes for zero powers: the residual is ||I|| = 1
    residuals[zeros] = 1.0
    finite = ~zeros & ~overflow
    if finite.any():
        X = coefs[finite, None, None] * stack[finite] - np.eye(d)
        residuals[finite] = spectral_norms(X)

    return [(start + i, float(logs[i]), float(args[i]), float(residuals[i])) for i in range(count)]


def _records(rows, cfg: SearchConfig, norm_kind: NormKind, vector=None) -> List[WitnessCertificate]:
    certificates = []
    best = math.inf
    for n, log_abs, arg, residual in rows:
        if cfg.record_only and not residual < best:
            continue
        best = min(best, residual)
        certificates.append(WitnessCertificate(n, log_abs, arg, residual, norm_kind, vector))
        if cfg.stop_at_epsilon and residual <= cfg.epsilon:
            break
    return certificates


def operator_certificate(A: CMatrix, n: int, rigid: bool = False) -> WitnessCertificate:
    """Certificate of the single exponent n."""
    if n < 1:
        raise MatrixValueError('n must be >= 1')
    n, log_abs, arg, residual = _operator_rows(A, n, n + 1, rigid)[0]
    return WitnessCertificate(n, log_abs, arg, residual, NormKind.OperatorNorm)


def operator_witness_search(A: CMatrix, cfg: SearchConfig = None) -> List[WitnessCertificate]:
    """Scan n = 1..n_max for scalars making lam A^n close to I in operator norm."""
    cfg = SearchConfig.from_config() if cfg is None else cfg
    if not np.any(A.entries):
        raise MatrixValueError('witness search needs a nonzero matrix')

    chunks = [(start, min(start + cfg.chunk_size, cfg.n_max + 1))
              for start in range(1, cfg.n_max + 1, cfg.chunk_size)]

    def scan(start, stop):
        return _operator_rows(A, start, stop, cfg.rigid)

    rows = run_chunks(scan, chunks, cfg.threads, cfg.epsilon, cfg.stop_at_epsilon)
    certificates = _records(rows, cfg, NormKind.OperatorNorm)
    _log_outcome('operator', certificates, cfg)
    return certificates


def vector_witness_search(A: CMatrix, x, cfg: SearchConfig = None) -> List[WitnessCertificate]:
    """Scan n = 1..n_max for scalars making lam A^n x close to x."""
    cfg = SearchConfig.from_config() if cfg is None else cfg
    x: ComplexVector = np.asarray(x, dtype=complex).ravel()
    if x.shape != (A.dim,):
        raise MatrixValueError('vector has length %d, matrix has dimension %d' % (len(x), A.dim))
    if not np.all(np.isfinite(x)):
        raise MatrixValueError('vector entries must be finite')
    if not np.any(x):
        raise ZeroVector('x must be nonzero')

    xnorm = float(np.linalg.norm(x))
    u = x / xnorm
    t = math.log(xnorm)
    zero = False
    rows = []
    for n in range(1, cfg.n_max + 1):
        if not zero:
            u = A.entries @ u
            f = np.linalg.norm(u)
            if f == 0.0:
                zero = True
            else:
                u /= f
                t += math.log(f)

        if zero:
            row = (n, -math.inf, 0.0, xnorm)
        elif cfg.rigid:
            residual = float(np.linalg.norm(math.exp(t) * u - x)) if t < _LOG_MAX else math.inf
            row = (n, 0.0, 0.0, residual)
        else:
            ip = np.vdot(u, x)
            if A.is_real:
                ip = ip.real
            ip = complex(ip)
            residual = float(np.linalg.norm(ip * u - x))
            log_abs, arg = _log_lambda(ip, t)
            row = (n, log_abs, arg, residual)
        rows.append(row)
        if cfg.stop_at_epsilon and row[-1] <= cfg.epsilon:
            break

    certificates = _records(rows, cfg, NormKind.VectorNorm, vector=tuple(complex(v) for v in x))
    _log_outcome('vector', certificates, cfg)
    return certificates


def _log_outcome(kind: str, certificates: List[WitnessCertificate], cfg: SearchConfig) -> None:
    best = best_certificate(certificates)
    if best is None:
        return
    if best.residual <= cfg.epsilon:
        _logger.info('%s witness found: n=%d, residual=%.3g', kind, best.n, best.residual)
    else:
        _logger.info('%s witness budget %d exhausted with best residual %.3g at n=%d',
                     kind, cfg.n_max, best.residual, best.n)


def best_certificate(certificates: List[WitnessCertificate]) -> Optional[WitnessCertificate]:
    if not certificates:
        return None
    return min(certificates, key=lambda c: (c.residual, c.n))


def search_succeeded(certificates: List[WitnessCertificate], cfg: SearchConfig) -> bool:
    return any(c.residual <= cfg.epsilon for c in certificates)


def recompute_residual(A: CMatrix, cert: WitnessCertificate) -> float:
    """Residual of (n, lam) recomputed from scratch with a fresh scaled power."""
    if cert.norm_kind is NormKind.VectorNorm:
        x = np.array(cert.vector, dtype=complex)
        y = x / np.linalg.norm(x)
        t = math.log(np.linalg.norm(x))
        P = scaled_power(A, cert.n)
        if P.zero_flag or cert.log_abs_lambda == -math.inf:
            return float(np.linalg.norm(x))
        y = P.normalized.entries @ y
        log_coef = cert.log_abs_lambda + P.log_scale + t
        if log_coef > _LOG_MAX:
            return math.inf
        return float(np.linalg.norm(cmath.rect(math.exp(log_coef), cert.arg_lambda) * y - x))

    P = scaled_power(A, cert.n)
    d = A.dim
    if P.zero_flag or cert.log_abs_lambda == -math.inf:
        return 1.0
    log_coef = cert.log_abs_lambda + P.log_scale
    if log_coef > _LOG_MAX:
        return math.inf
    X = cmath.rect(math.exp(log_coef), cert.arg_lambda) * P.normalized.entries - np.eye(d)
    return float(spectral_norms(X)[0])


def transport_certificate_scaling(cert: WitnessCertificate, c: complex) -> WitnessCertificate:
    """Certificate (n, lam c^-n) for cA from a certificate (n, lam) for A."""
    if c == 0:
        raise MatrixValueError('scaling factor must be nonzero')
    # exact products, rounded once
    if cert.log_abs_lambda == -math.inf:
        log_abs = -math.inf
    else:
        log_abs = float(Fraction(cert.log_abs_lambda) - cert.n * Fraction(math.log(abs(c))))
    arg = Fraction(cert.arg_lambda) - cert.n * Fraction(cmath.phase(c))
    arg -= _TWO_PI * round(arg / _TWO_PI)
    return replace(cert, log_abs_lambda=log_abs, arg_lambda=float(arg))


def dirichlet_budget(d: int, target_phase_error: float) -> int:
    """Scan length N = ceil(1/delta)^d after which d rotations must all return
    within delta of an integer at some n <= N (pigeonhole).

    For an eigenbasis of condition kappa the operator residual at that n is
    at most kappa * 2 pi * delta.
    """
    if d < 1:
        raise MatrixValueError('d must be >= 1')
    if not 0 < target_phase_error < 0.5:
        raise MatrixValueError('target_phase_error must lie in (0, 1/2)')
    q = math.ceil(1 / Fraction(target_phase_error))
    budget = q ** d
    if budget > _INT64_MAX:
        raise BudgetOverflow('budget ceil(1/%g)^%d exceeds 2^63 - 1' % (target_phase_error, d))
    return int(budget)
