"""Finite-dimensional stand-ins for self-adjoint operators.

Dense Hermitian matrices play the role of the operators; everything else in
the package (Xi, spectral flow, Birman-Schwinger, ...) is built on the small
set of primitives defined here: eigendecomposition, spectral projections
below a level, eigenvalue counting in intervals and seeded random instances.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Any, Union

import numpy as np

from .errors import (
    AmbiguousEndpoint,
    ConvergenceFailure,
    DimensionMismatch,
    InvalidGap,
    LambdaOnSpectrum,
    NonHermitianInput,
)

DEFAULT_TOL = 1e-10
SPECTRAL_TOL = 1e-8
ROUNDING_TOL = 1e-6

# multiples of Operator.tol
ENDPOINT_BAND = 10.0
GAP_MARGIN = 100.0


def hermitize(a) -> np.ndarray:
    """Return the Hermitian part ``(a + a*) / 2``; drops round-off asymmetry."""
    a = np.asarray(a)
    return 0.5 * (a + a.conj().T)


def _as_matrix(entries) -> np.ndarray:
    a = np.array(entries, copy=True)
    if a.ndim == 0:
        a = a.reshape(1, 1)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionMismatch(f"expected a square matrix, got shape {a.shape}")
    if np.iscomplexobj(a):
        a = a.astype(complex)
        if not np.any(a.imag):
            a = a.real.copy()
    else:
        a = a.astype(float)
    return a


@dataclass(frozen=True)
class SpectralDecomposition:
    """Eigenvalues in ascending order with matching unitary eigenvector columns."""

    eigenvalues: np.ndarray
    vectors: np.ndarray

    def reconstruct(self) -> np.ndarray:
        return (self.vectors * self.eigenvalues) @ self.vectors.conj().T


@dataclass(frozen=True, eq=False)
class Operator:
    """Dense Hermitian matrix with a structural tolerance.

    The entries are copied and frozen on construction. Real input stays real;
    complex input with vanishing imaginary part is demoted to real.
    """

    entries: np.ndarray
    tol: float = DEFAULT_TOL

    def __post_init__(self):
        a = _as_matrix(self.entries)
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if not np.all(np.isfinite(a)):
            raise NonHermitianInput("operator entries must be finite")
        dev = np.max(np.abs(a - a.conj().T)) if a.size else 0.0
        if dev > self.tol:
            raise NonHermitianInput(f"max |M - M*| = {dev:.3e} exceeds tol {self.tol:.1e}")
        a = hermitize(a)
        a.setflags(write=False)
        object.__setattr__(self, "entries", a)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    @property
    def is_complex(self) -> bool:
        return np.iscomplexobj(self.entries)

    @cached_property
    def spectrum(self) -> SpectralDecomposition:
        try:
            w, v = np.linalg.eigh(self.entries)
        except np.linalg.LinAlgError as exc:
            raise ConvergenceFailure(str(exc)) from exc
        w.setflags(write=False)
        v.setflags(write=False)
        return SpectralDecomposition(w, v)

    @property
    def eigenvalues(self) -> np.ndarray:
        return self.spectrum.eigenvalues

    def norm(self) -> float:
        """Operator (spectral) norm."""
        ev = self.eigenvalues
        return float(max(abs(ev[0]), abs(ev[-1])))

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.entries)))

    @cached_property
    def fingerprint(self) -> str:
        return hashlib.sha1(np.ascontiguousarray(self.entries).tobytes()).hexdigest()[:12]

    # arithmetic -- always returns a new Operator

    def _other(self, other) -> np.ndarray:
        b = other.entries if isinstance(other, Operator) else np.asarray(other)
        if b.shape != self.entries.shape:
            raise DimensionMismatch(f"{self.entries.shape} vs {b.shape}")
        return b

    def _tol_with(self, other) -> float:
        return max(self.tol, other.tol) if isinstance(other, Operator) else self.tol

    def __add__(self, other) -> "Operator":
        return Operator(self.entries + self._other(other), self._tol_with(other))

    def __sub__(self, other) -> "Operator":
        return Operator(self.entries - self._other(other), self._tol_with(other))

    def __neg__(self) -> "Operator":
        return Operator(-self.entries, self.tol)

    def __mul__(self, c) -> "Operator":
        if not np.isscalar(c) or np.iscomplexobj(c):
            return NotImplemented
        return Operator(float(c) * self.entries, self.tol)

    __rmul__ = __mul__

    def shift(self, c: float) -> "Operator":
        """``M + c I``."""
        return Operator(self.entries + c * np.eye(self.dim), self.tol)

    def compress(self, P: Union["Projection", np.ndarray]) -> "Operator":
        """``P M P`` for an orthogonal projection ``P``."""
        p = P.entries if isinstance(P, Projection) else np.asarray(P)
        return Operator(hermitize(p @ self.entries @ p), self.tol)

    # serialisation

    def to_json(self) -> dict:
        return matrix_to_json(self.entries)

    @classmethod
    def from_json(cls, obj: dict, tol: float = DEFAULT_TOL) -> "Operator":
        return cls(matrix_from_json(obj), tol)


def as_operator(M, tol: float = DEFAULT_TOL) -> Operator:
    return M if isinstance(M, Operator) else Operator(M, tol)


def zero(dim: int) -> Operator:
    return Operator(np.zeros((dim, dim)))


def identity(dim: int) -> Operator:
    return Operator(np.eye(dim))


@dataclass(frozen=True, eq=False)
class Projection:
    """Hermitian idempotent matrix."""

    entries: np.ndarray
    tol: float = DEFAULT_TOL

    def __post_init__(self):
        p = hermitize(_as_matrix(self.entries))
        dev = np.max(np.abs(p @ p - p)) if p.size else 0.0
        if dev > self.tol:
            raise ValueError(f"not a projection: max |P^2 - P| = {dev:.3e}")
        p.setflags(write=False)
        object.__setattr__(self, "entries", p)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    @property
    def rank(self) -> int:
        return int(round(np.trace(self.entries).real))

    def complement(self) -> "Projection":
        return Projection(np.eye(self.dim) - self.entries, self.tol)

    @classmethod
    def onto(cls, basis, tol: float = DEFAULT_TOL) -> "Projection":
        """Orthogonal projection onto the column span of ``basis``."""
        basis = np.atleast_2d(np.asarray(basis))
        if basis.shape[1] == 0:
            return cls(np.zeros((basis.shape[0], basis.shape[0])), tol)
        q, _ = np.linalg.qr(basis)
        return cls(q @ q.conj().T, tol)


@dataclass(frozen=True)
class Interval:
    """Interval of the extended real line with open/closed endpoint flags."""

    lo: float
    hi: float
    lo_closed: bool = False
    hi_closed: bool = False

    def __post_init__(self):
        if math.isnan(self.lo) or math.isnan(self.hi):
            raise ValueError("interval endpoints must not be NaN")
        if self.lo > self.hi:
            raise ValueError(f"lo={self.lo} > hi={self.hi}")
        if math.isinf(self.lo) and self.lo_closed or math.isinf(self.hi) and self.hi_closed:
            raise ValueError("infinite endpoints must be open")

    @classmethod
    def open(cls, lo, hi):
        return cls(lo, hi, False, False)

    @classmethod
    def closed(cls, lo, hi):
        return cls(lo, hi, True, True)

    @classmethod
    def closed_open(cls, lo, hi):
        return cls(lo, hi, True, False)

    @classmethod
    def below(cls, lam, closed=False):
        """``(-inf, lam)`` or ``(-inf, lam]``."""
        return cls(-math.inf, lam, False, closed)

    @classmethod
    def above(cls, a, closed=False):
        """``(a, inf)`` or ``[a, inf)``."""
        return cls(a, math.inf, closed, False)

    @property
    def is_empty(self) -> bool:
        return self.lo == self.hi and not (self.lo_closed and self.hi_closed)

    def contains(self, x) -> np.ndarray:
        x = np.asarray(x)
        left = (x >= self.lo) if self.lo_closed else (x > self.lo)
        right = (x <= self.hi) if self.hi_closed else (x < self.hi)
        return left & right


@dataclass(frozen=True)
class GapCertificate:
    lambda_: float
    margin: float
    operator_id: str

    def admits(self, tol: float = DEFAULT_TOL) -> bool:
        return self.margin > GAP_MARGIN * tol


def _eigs_and_tol(M) -> tuple[np.ndarray, float]:
    if isinstance(M, Operator):
        return M.eigenvalues, M.tol
    return as_operator(M).eigenvalues, DEFAULT_TOL


def eigh(M: Operator) -> SpectralDecomposition:
    """Eigendecomposition of a Hermitian operator (LAPACK ``heevd``)."""
    return as_operator(M).spectrum


def gap_certificate(M, lam: float) -> GapCertificate:
    M = as_operator(M)
    margin = float(np.min(np.abs(M.eigenvalues - lam)))
    return GapCertificate(float(lam), margin, M.fingerprint)


def require_off_spectrum(M, lam: float, exc=LambdaOnSpectrum, what: str = "M") -> GapCertificate:
    M = as_operator(M)
    cert = gap_certificate(M, lam)
    if not cert.admits(M.tol):
        raise exc(f"lambda={lam!r} is within {cert.margin:.2e} of the spectrum of {what}")
    return cert


def spectral_projection(M, lam: float) -> Projection:
    """``E_M(-inf, lam)``: projection onto eigenvectors with eigenvalue below ``lam``."""
    M = as_operator(M)
    require_off_spectrum(M, lam)
    sd = M.spectrum
    v = sd.vectors[:, sd.eigenvalues < lam]
    return Projection(v @ v.conj().T, max(M.tol, DEFAULT_TOL))


def count_in(M, delta: Interval, exact: bool = False) -> int:
    """Number of eigenvalues of ``M`` in ``delta``, counted with multiplicity.

    Unless ``exact`` is set, an eigenvalue within ``10 * tol`` of a finite
    endpoint raises :class:`AmbiguousEndpoint` instead of being assigned to
    one side by round-off.
    """
    ev, tol = _eigs_and_tol(M)
    if delta.is_empty:
        return 0
    if not exact:
        band = ENDPOINT_BAND * tol
        for end in (delta.lo, delta.hi):
            if math.isfinite(end) and np.any(np.abs(ev - end) <= band):
                raise AmbiguousEndpoint(f"eigenvalue within {band:.1e} of endpoint {end!r}")
    return int(np.count_nonzero(delta.contains(ev)))


def count_below(M, lam: float) -> int:
    """``N((-inf, lam); M)``."""
    return count_in(M, Interval.below(lam))


def perturb(M, A, t: float) -> Operator:
    """``M + t A``."""
    M, A = as_operator(M), as_operator(A)
    if M.dim != A.dim:
        raise DimensionMismatch(f"dim M = {M.dim}, dim A = {A.dim}")
    return Operator(M.entries + t * A.entries, max(M.tol, A.tol))


# -- random instances ---------------------------------------------------------

def random_unitary(rng: np.random.Generator, dim: int, complex_: bool = False) -> np.ndarray:
    """Haar-distributed orthogonal/unitary matrix (QR with sign fix)."""
    z = rng.standard_normal((dim, dim))
    if complex_:
        z = z + 1j * rng.standard_normal((dim, dim))
    q, r = np.linalg.qr(z)
    d = np.diagonal(r)
    return q * (d / np.abs(d))


def random_hermitian(rng: np.random.Generator, dim: int, scale: float = 1.0,
                     complex_: bool = False) -> np.ndarray:
    z = rng.standard_normal((dim, dim))
    if complex_:
        z = z + 1j * rng.standard_normal((dim, dim))
    return scale * hermitize(z) / np.sqrt(dim)


def random_psd(rng: np.random.Generator, dim: int, rank: int | None = None,
               scale: float = 1.0, complex_: bool = False) -> np.ndarray:
    rank = dim if rank is None else rank
    z = rng.standard_normal((dim, rank))
    if complex_:
        z = z + 1j * rng.standard_normal((dim, rank))
    return scale * hermitize(z @ z.conj().T) / max(rank, 1)


def with_spectrum(rng: np.random.Generator, eigenvalues, complex_: bool = False) -> np.ndarray:
    eigenvalues = np.asarray(eigenvalues, dtype=float)
    u = random_unitary(rng, len(eigenvalues), complex_)
    return hermitize((u * eigenvalues) @ u.conj().T)


def random_gapped_instance(seed: int, dim: int, gap: tuple[float, float],
                           complex_: bool = False) -> tuple[Operator, float]:
    """Random Hermitian ``M`` with no eigenvalue in ``gap`` and ``lambda`` at its midpoint.

    At least one eigenvalue is placed on each side of the gap.
    """
    lo, hi = float(gap[0]), float(gap[1])
    if dim < 2:
        raise InvalidGap("dim must be at least 2")
    if not (math.isfinite(lo) and math.isfinite(hi) and lo < hi):
        raise InvalidGap(f"gap {gap!r} must be a finite nondegenerate interval")
    rng = np.random.default_rng(seed)
    width = hi - lo
    n_below = int(rng.integers(1, dim))
    below = lo - width * rng.uniform(0.05, 2.0, n_below)
    above = hi + width * rng.uniform(0.05, 2.0, dim - n_below)
    M = Operator(with_spectrum(rng, np.concatenate([below, above]), complex_))
    if count_in(M, Interval.open(lo, hi), exact=True):
        raise InvalidGap("generated operator has an eigenvalue in the gap")
    return M, 0.5 * (lo + hi)


# -- matrix exchange format ---------------------------------------------------

def matrix_to_json(a) -> dict[str, Any]:
    """Row-major JSON form ``{"dim", "real", "imag"?}``.

    Square matrices store ``dim`` as an int; rectangular ones as ``[rows, cols]``.
    """
    a = np.atleast_2d(np.asarray(a))
    rows, cols = a.shape
    out: dict[str, Any] = {"dim": rows if rows == cols else [rows, cols],
                           "real": np.real(a).tolist()}
    if np.iscomplexobj(a) and np.any(a.imag):
        out["imag"] = np.imag(a).tolist()
    return out


def matrix_from_json(obj: dict) -> np.ndarray:
    real = np.asarray(obj["real"], dtype=float)
    dim = obj.get("dim")
    shape = (dim, dim) if isinstance(dim, int) else tuple(dim)
    if real.size == 0:
        real = real.reshape(shape)
    if real.shape != shape:
        raise DimensionMismatch(f"declared dim {dim} but data has shape {real.shape}")
    if "imag" in obj:
        imag = np.asarray(obj["imag"], dtype=float)
        if imag.shape != real.shape:
            raise DimensionMismatch("real and imag parts differ in shape")
        return real + 1j * imag
    return real
