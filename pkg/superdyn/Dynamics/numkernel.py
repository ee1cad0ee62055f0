"""Dense matrix substrate: eigenvalues, multiplicities, norms and scaled powers.

All matrices are carried as complex128 arrays; a `Field` tag records whether
the operator is real. Everything here is a pure function of its inputs.
"""
import cmath
import enum
import logging
import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
import scipy.linalg as sla
from scipy.cluster.hierarchy import fcluster, linkage

from .typing import ComplexArray, MatrixStack, float_log, float_tol
from superdyn.utils.config import config
from superdyn.utils.exceptions import MatrixValueError, NonConvergence


_conf = config()
_logger = logging.getLogger(__name__)

EPS = np.finfo(float).eps

# matrices above this size are outside the supported desk regime
MAX_DIM = 64

# split radius of a rounded Jordan block, in units of (d eps)^(1/m) ||A||_F
_SPLIT_FACTOR = 100.0


def use_config(conf: config) -> None:
    """Take the QR and power iteration budgets from `conf`."""
    global _conf
    _conf = conf


class Field(enum.Enum):
    Real = 'R'
    Complex = 'C'


@dataclass(frozen=True, eq=False)
class CMatrix:
    """Immutable dense square matrix over C; `field_tag` marks real operators."""

    entries: ComplexArray
    field_tag: Field = Field.Complex

    def __post_init__(self):
        a = np.array(self.entries, dtype=complex)
        if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
            raise MatrixValueError('Matrix must be square and non-empty, got shape %s' % (a.shape,))
        if a.shape[0] > MAX_DIM:
            _logger.warning('Dimension %d exceeds the supported regime d <= %d', a.shape[0], MAX_DIM)
        if not np.all(np.isfinite(a)):
            raise MatrixValueError('Matrix entries must be finite')
        if self.field_tag is Field.Real and np.any(a.imag != 0):
            raise MatrixValueError('Real matrix has entries with nonzero imaginary part')
        a.setflags(write=False)
        object.__setattr__(self, 'entries', a)

    @classmethod
    def from_array(cls, array, field: Optional[Field] = None) -> 'CMatrix':
        """Wrap `array`; the field is inferred from its dtype unless given."""
        if field is None:
            field = Field.Real if np.isrealobj(np.asarray(array)) else Field.Complex
        return cls(np.asarray(array), field)

    @classmethod
    def identity(cls, d: int, field: Field = Field.Real) -> 'CMatrix':
        return cls(np.eye(d, dtype=complex), field)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    @property
    def is_real(self) -> bool:
        return self.field_tag is Field.Real

    def as_complex(self) -> 'CMatrix':
        if self.field_tag is Field.Complex:
            return self
        return CMatrix(self.entries, Field.Complex)

    def frobenius_norm(self) -> float:
        return float(np.linalg.norm(self.entries))

    def matmul(self, other: 'CMatrix') -> 'CMatrix':
        return CMatrix(self.entries @ other.entries, _join(self.field_tag, other.field_tag))

    def scale(self, c: complex) -> 'CMatrix':
        field = self.field_tag if complex(c).imag == 0 else Field.Complex
        return CMatrix(complex(c) * self.entries, field)

    def power(self, n: int) -> 'CMatrix':
        """Direct power by repeated squaring without rescaling."""
        return CMatrix(np.linalg.matrix_power(self.entries, n), self.field_tag)

    def conjugate_by(self, P: 'CMatrix') -> 'CMatrix':
        """Return P A P^-1."""
        conj = P.entries @ np.linalg.solve(P.entries.T, self.entries.T).T
        return CMatrix(conj, _join(self.field_tag, P.field_tag))

    def allclose(self, other, atol: float = 1e-12) -> bool:
        other = other.entries if isinstance(other, CMatrix) else np.asarray(other)
        return bool(np.allclose(self.entries, other, rtol=0.0, atol=atol))

    def __repr__(self):
        return 'CMatrix(dim=%d, field=%s)' % (self.dim, self.field_tag.value)


def _join(a: Field, b: Field) -> Field:
    return Field.Real if (a is Field.Real and b is Field.Real) else Field.Complex


@dataclass(frozen=True)
class SpectralPoint:
    value: complex
    algebraic_mult: int
    geometric_mult: int

    @property
    def defective(self) -> bool:
        return self.geometric_mult < self.algebraic_mult


@dataclass(frozen=True)
class SpectrumReport:
    """Clustered spectrum with multiplicities and common-modulus statistics."""

    eigenvalues: Tuple[SpectralPoint, ...]
    modulus_min: float
    modulus_max: float
    common_radius: Optional[float]
    tol: float_tol
    dim: int
    cluster_diameter: float = 0.0

    @property
    def spread(self) -> float:
        return self.modulus_max - self.modulus_min

    @property
    def diagonalizable(self) -> bool:
        return all(not p.defective for p in self.eigenvalues)

    def values(self) -> np.ndarray:
        """Eigenvalues repeated by algebraic multiplicity."""
        return np.array([p.value for p in self.eigenvalues for _ in range(p.algebraic_mult)],
                        dtype=complex)

    def moduli(self) -> np.ndarray:
        return np.sort(np.abs(self.values()))


@dataclass(frozen=True, eq=False)
class ScaledPower:
    """base^exponent = exp(log_scale) * normalized, with ||normalized||_F = 1.

    A power that vanishes exactly carries `zero_flag` and log_scale = -inf.
    """

    base: CMatrix
    exponent: int
    log_scale: float_log
    normalized: CMatrix
    zero_flag: bool = False

    def reconstruct(self) -> np.ndarray:
        """Raw power; overflows for large exponents by construction."""
        if self.zero_flag:
            return np.zeros_like(self.normalized.entries)
        return math.exp(self.log_scale) * self.normalized.entries


def adjoint(A: CMatrix) -> CMatrix:
    return CMatrix(A.entries.conj().T, A.field_tag)


def hessenberg(A: CMatrix) -> ComplexArray:
    """Householder reduction to upper Hessenberg form, H = Q^H A Q."""
    H = np.array(A.entries, dtype=complex)
    d = H.shape[0]
    for k in range(d - 2):
        x = H[k + 1:, k].copy()
        if np.linalg.norm(x[1:]) == 0.0:
            continue
        alpha = np.linalg.norm(x)
        phase = x[0] / abs(x[0]) if x[0] != 0 else 1.0
        v = x
        v[0] += phase * alpha
        v /= np.linalg.norm(v)
        H[k + 1:, k:] -= 2.0 * np.outer(v, v.conj() @ H[k + 1:, k:])
        H[:, k + 1:] -= 2.0 * np.outer(H[:, k + 1:] @ v, v.conj())
        H[k + 2:, k] = 0.0
    return H


def _wilkinson_shift(B: ComplexArray) -> complex:
    """Eigenvalue of the trailing 2x2 block closest to its last diagonal entry."""
    a, b, c, d = B[0, 0], B[0, 1], B[1, 0], B[1, 1]
    half = (a - d) / 2.0
    disc = cmath.sqrt(half * half + b * c)
    mid = (a + d) / 2.0
    r1, r2 = mid + disc, mid - disc
    return r1 if abs(r1 - d) <= abs(r2 - d) else r2


def qr_eigenvalues(A: CMatrix, max_sweeps: int = None) -> np.ndarray:
    """Eigenvalues by shifted QR iteration on the Hessenberg form.

    Wilkinson shifts, deflation on negligible subdiagonal entries and an
    exceptional shift after every 10 sweeps without deflation. Raises
    NonConvergence once `max_sweeps` (default 100 d^2) is spent.
    """
    H = hessenberg(A)
    d = H.shape[0]
    if max_sweeps is None:
        max_sweeps = _conf.qr_sweeps_per_dim2 * d * d
    scale = np.linalg.norm(H)
    eigs = np.empty(d, dtype=complex)

    hi = d - 1
    sweeps = 0
    stalled = 0
    while hi >= 0:
        l = hi
        while l > 0:
            thr = EPS * (abs(H[l, l]) + abs(H[l - 1, l - 1]))
            if thr == 0.0:
                thr = EPS * scale
            if abs(H[l, l - 1]) <= thr:
                H[l, l - 1] = 0.0
                break
            l -= 1

        if l == hi:
            eigs[hi] = H[hi, hi]
            hi -= 1
            stalled = 0
            continue

        if sweeps >= max_sweeps:
            raise NonConvergence('QR iteration did not converge in %d sweeps (d=%d)' % (max_sweeps, d))
        sweeps += 1
        stalled += 1

        block = H[l:hi + 1, l:hi + 1]
        m = hi - l + 1
        if stalled % 10 == 0:
            mu = block[-1, -1] + 0.75 * abs(block[-1, -2])
        else:
            mu = _wilkinson_shift(block[-2:, -2:])
        Q, R = np.linalg.qr(block - mu * np.eye(m))
        H[l:hi + 1, l:hi + 1] = np.triu(R @ Q, -1) + mu * np.eye(m)

    _logger.debug('QR iteration converged in %d sweeps (d=%d)', sweeps, d)
    return eigs


def numerical_rank(M: ComplexArray, threshold: float) -> int:
    """Rank from a column-pivoted QR: count of |R_ii| above `threshold`."""
    if not np.any(M):
        return 0
    R, _ = sla.qr(M, mode='r', pivoting=True)
    return int(np.sum(np.abs(np.diag(R)) > threshold))


def geometric_multiplicity(A: CMatrix, lam: complex, tol: float_tol) -> int:
    """d minus the numerical rank of A - lam I.

    The rank threshold is tol times max(||A - lam I||_F, ||A||_F).
    """
    if tol <= 0:
        raise MatrixValueError('tol must be positive')
    if not cmath.isfinite(lam):
        raise MatrixValueError('eigenvalue must be finite')
    M = A.entries - lam * np.eye(A.dim)
    scale = max(np.linalg.norm(M), A.frobenius_norm())
    return A.dim - numerical_rank(M, tol * scale)


def _linked(values: np.ndarray, radius: float):
    """Single-linkage groups of values closer than radius, as index lists."""
    if len(values) == 1:
        return [[0]]
    Z = linkage(np.c_[values.real, values.imag], method='single')
    groups = {}
    for i, label in enumerate(fcluster(Z, t=radius, criterion='distance')):
        groups.setdefault(label, []).append(i)
    return list(groups.values())


def _split_radius(A: CMatrix, m: int) -> float:
    """Largest gap rounding can open inside a Jordan block of size m."""
    return _SPLIT_FACTOR * (A.dim * EPS) ** (1.0 / m) * A.frobenius_norm()


def _merge_defective(A: CMatrix, raw: np.ndarray, groups, tol: float_tol):
    """Join clusters that together form one numerically defective eigenvalue.

    Rounding splits a Jordan block of size m into m eigenvalues about
    (eps ||A||)^(1/m) apart. A group of exactly m eigenvalues linked within
    that distance is joined when its mean is still an eigenvalue (A - mean I
    is rank deficient at tol). Larger blocks are tried first.
    """
    owner = {}
    for g, group in enumerate(groups):
        for i in group:
            owner[i] = g
    remaining = list(range(len(raw)))
    joined = []
    for m in range(len(raw), 1, -1):
        if len(remaining) < m:
            continue
        radius = max(tol, _split_radius(A, m))
        for local in _linked(raw[remaining], radius):
            union = [remaining[i] for i in local]
            if len(union) != m or len({owner[i] for i in union}) < 2:
                continue
            if geometric_multiplicity(A, complex(np.mean(raw[union])), tol) >= 1:
                _logger.debug('Joined %d eigenvalues within %.3g into one defective point', m, radius)
                joined.append(union)
        taken = {i for union in joined for i in union}
        remaining = [i for i in remaining if i not in taken]
    return joined + [group for group in groups if all(i in remaining for i in group)]


def eig(A: CMatrix, tol: float_tol) -> SpectrumReport:
    """Clustered spectrum of A with algebraic and geometric multiplicities."""
    if tol <= 0:
        raise MatrixValueError('tol must be positive')
    raw = qr_eigenvalues(A)

    groups = _linked(raw, tol)
    diameter = 0.0
    for group in groups:
        if len(group) > 1:
            members = raw[group]
            diameter = max(diameter, float(np.max(np.abs(members[:, None] - members[None, :]))))

    points = []
    for group in _merge_defective(A, raw, groups, tol):
        members = raw[group]
        value = complex(np.mean(members))
        if A.is_real and abs(value.imag) <= tol:
            value = complex(value.real, 0.0)
        alg = len(members)
        geo = geometric_multiplicity(A, value, tol)
        points.append(SpectralPoint(value, alg, min(max(geo, 1), alg)))

    points.sort(key=lambda p: (-abs(p.value), cmath.phase(p.value)))
    moduli = [abs(p.value) for p in points]
    mn, mx = min(moduli), max(moduli)
    radius = (mn + mx) / 2.0 if mx - mn <= tol else None
    return SpectrumReport(tuple(points), mn, mx, radius, tol, A.dim, diameter)


def eigenvectors(A: CMatrix, spectrum: SpectrumReport) -> ComplexArray:
    """Orthonormal bases of each numerical eigenspace, stacked as columns."""
    columns = []
    for point in spectrum.eigenvalues:
        M = A.entries - point.value * np.eye(A.dim)
        _, _, Vh = np.linalg.svd(M)
        columns.append(Vh[A.dim - point.geometric_mult:].conj().T)
    return np.hstack(columns)


def condition_number(M: ComplexArray) -> float:
    return float(np.linalg.cond(M))


def min_singular_value(A: CMatrix) -> float:
    return float(np.linalg.svd(A.entries, compute_uv=False)[-1])


def _normalized(stack: MatrixStack) -> MatrixStack:
    norms = np.linalg.norm(stack, axis=(1, 2))
    norms[norms == 0.0] = 1.0
    return stack / norms[:, None, None]


def spectral_norms(stack: MatrixStack, rtol: float = None, cap: int = None) -> np.ndarray:
    """Largest singular value of every matrix in `stack` by power iteration on M^H M.

    Step j forms G = (M^H M)^(2^j) by repeated squaring and evaluates M on
    the largest column of G. The columns span the whole range of G, so the
    top singular direction always dominates the largest one as j grows and
    no fixed start vector can be trapped. The choice is deterministic.
    """
    if rtol is None:
        rtol = _conf.power_iteration_rtol
    if cap is None:
        cap = _conf.power_iteration_cap
    M = np.asarray(stack, dtype=complex)
    if M.ndim == 2:
        M = M[None]
    k = M.shape[0]
    rows = np.arange(k)

    G = _normalized(np.einsum('kji,kjl->kil', M.conj(), M))
    prev = np.zeros(k)
    converged = np.zeros(k, dtype=bool)
    for _ in range(cap):
        columns = np.linalg.norm(G, axis=1)
        j = np.argmax(columns, axis=1)
        top = columns[rows, j]
        top[top == 0.0] = 1.0
        v = G[rows, :, j] / top[:, None]
        sigma = np.linalg.norm(np.einsum('kij,kj->ki', M, v), axis=1)
        converged |= np.abs(sigma - prev) <= rtol * sigma
        if converged.all():
            return sigma
        G = _normalized(G @ G)
        prev = sigma

    raise NonConvergence('Power iteration did not converge in %d iterations' % cap)


def spectral_norm(A: CMatrix) -> float:
    return float(spectral_norms(A.entries)[0])


def _zero_power(A: CMatrix, n: int) -> ScaledPower:
    zero = CMatrix(np.zeros((A.dim, A.dim), dtype=complex), A.field_tag)
    return ScaledPower(A, n, -math.inf, zero, zero_flag=True)


def scaled_power(A: CMatrix, n: int) -> ScaledPower:
    """A^n by binary exponentiation, renormalized after every product."""
    if n < 0:
        raise MatrixValueError('exponent must be nonnegative')
    d = A.dim
    result = np.eye(d, dtype=complex) / math.sqrt(d)
    s_result = 0.5 * math.log(d)
    if n == 0:
        return ScaledPower(A, 0, s_result, CMatrix(result, A.field_tag))

    f = A.frobenius_norm()
    if f == 0.0:
        return _zero_power(A, n)
    square = A.entries / f
    s_square = math.log(f)

    k = n
    while k:
        if k & 1:
            result = result @ square
            f = np.linalg.norm(result)
            if f == 0.0:
                return _zero_power(A, n)
            result /= f
            s_result += s_square + math.log(f)
        k >>= 1
        if k:
            square = square @ square
            f = np.linalg.norm(square)
            if f == 0.0:
                return _zero_power(A, n)
            square /= f
            s_square = 2.0 * s_square + math.log(f)

    return ScaledPower(A, n, s_result, CMatrix(result, A.field_tag))


def scaled_step(P: ScaledPower, A: CMatrix = None) -> ScaledPower:
    """Next power P * A, renormalized."""
    A = P.base if A is None else A
    if P.zero_flag:
        return _zero_power(A, P.exponent + 1)
    M = P.normalized.entries @ A.entries
    f = np.linalg.norm(M)
    if f == 0.0:
        return _zero_power(A, P.exponent + 1)
    return ScaledPower(A, P.exponent + 1, P.log_scale + math.log(f), CMatrix(M / f, A.field_tag))
