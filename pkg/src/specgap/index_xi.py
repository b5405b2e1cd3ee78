"""Index of a pair of projections and the function Xi built on it.

``Xi(lam; Mt, M)`` is the index of the pair ``(E_M(-inf, lam), E_Mt(-inf, lam))``.
In finite dimensions it equals ``N((-inf, lam); M) - N((-inf, lam); Mt)``, but
it is computed here through the projections, by two independent routes that
must agree: counting eigenvalues of ``P - Q`` at +1 and -1, and rounding
``Tr(P - Q)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    DimensionMismatch,
    GapTooNarrow,
    InconsistentIndex,
    NonReducingProjection,
)
from .operator_core import (
    ROUNDING_TOL,
    Interval,
    Operator,
    Projection,
    as_operator,
    count_in,
    hermitize,
    spectral_projection,
)

RANK_THRESHOLD = 1e-8


@dataclass(frozen=True)
class XiResult:
    value: int
    trace_diff: float
    rounding_residual: float

    def __int__(self):
        return self.value


@dataclass(frozen=True)
class SignedParts:
    """Positive and negative parts ``A = plus - minus`` with ``plus @ minus = 0``."""

    plus: Operator
    minus: Operator

    @property
    def abs(self) -> Operator:
        return self.plus + self.minus


def _index_routes(P: Projection, Q: Projection) -> tuple[int, float]:
    if P.dim != Q.dim:
        raise DimensionMismatch(f"projections of dims {P.dim} and {Q.dim}")
    d = P.entries - Q.entries
    ev = np.linalg.eigvalsh(d)
    kernel_route = (int(np.count_nonzero(np.abs(ev - 1.0) <= ROUNDING_TOL))
                    - int(np.count_nonzero(np.abs(ev + 1.0) <= ROUNDING_TOL)))
    trace = float(np.trace(d).real)
    trace_route = round(trace)
    if kernel_route != trace_route or abs(trace - trace_route) > ROUNDING_TOL:
        raise InconsistentIndex(
            f"dim Ker(P-Q-I) - dim Ker(P-Q+I) = {kernel_route} but Tr(P-Q) = {trace!r}")
    return kernel_route, trace


def fredholm_index(P: Projection, Q: Projection) -> int:
    """``ind(P, Q) = dim Ker(P - Q - I) - dim Ker(P - Q + I)``.

    Raises
    ------
    InconsistentIndex
        If the eigenvalue count at +/-1 disagrees with the rounded trace of
        ``P - Q``, which signals ill-conditioned projections.
    """
    return _index_routes(P, Q)[0]


def xi(lam: float, M_tilde, M) -> XiResult:
    """``Xi(lam; M_tilde, M) = ind(E_M(-inf, lam), E_{M_tilde}(-inf, lam))``."""
    M_tilde, M = as_operator(M_tilde), as_operator(M)
    if M.dim != M_tilde.dim:
        raise DimensionMismatch(f"dim M = {M.dim}, dim M_tilde = {M_tilde.dim}")
    P = spectral_projection(M, lam)
    Q = spectral_projection(M_tilde, lam)
    value, trace = _index_routes(P, Q)
    return XiResult(value, trace, abs(trace - value))


def xi_value(lam: float, M_tilde, M) -> int:
    return xi(lam, M_tilde, M).value


def signed_parts(A) -> SignedParts:
    """``A_+ = (|A| + A)/2`` and ``A_- = (|A| - A)/2`` via the spectral theorem."""
    A = as_operator(A)
    sd = A.spectrum
    w, v = sd.eigenvalues, sd.vectors
    pos = np.where(w > 0, w, 0.0)
    neg = np.where(w < 0, -w, 0.0)
    plus = hermitize((v * pos) @ v.conj().T)
    minus = hermitize((v * neg) @ v.conj().T)
    return SignedParts(Operator(plus, A.tol), Operator(minus, A.tol))


def abs_op(A) -> Operator:
    """``|A|`` computed spectrally."""
    return signed_parts(A).abs


def signed_ranks(A, threshold: float = RANK_THRESHOLD) -> tuple[int, int]:
    """``(rank A_+, rank A_-)`` counting eigenvalues of magnitude above ``threshold``."""
    w = as_operator(A).eigenvalues
    return int(np.count_nonzero(w > threshold)), int(np.count_nonzero(w < -threshold))


def counting_identity(lam1: float, lam2: float, M, A) -> tuple[int, int]:
    """Both sides of ``Xi(lam1) - Xi(lam2) = N([lam1, lam2); M+A) - N([lam1, lam2); M)``."""
    if not lam1 < lam2:
        raise ValueError("need lam1 < lam2")
    M, A = as_operator(M), as_operator(A)
    Mt = M + A
    lhs = xi(lam1, Mt, M).value - xi(lam2, Mt, M).value
    delta = Interval.closed_open(lam1, lam2)
    rhs = count_in(Mt, delta) - count_in(M, delta)
    return lhs, rhs


def _check_reduces(P: Projection, M: Operator) -> None:
    comm = P.entries @ M.entries - M.entries @ P.entries
    dev = float(np.max(np.abs(comm)))
    if dev > M.tol * (1.0 + M.max_abs()):
        raise NonReducingProjection(f"max |PM - MP| = {dev:.3e}")


def diag_trick_bounds(lam: float, M, A, P: Projection, eps: float) -> tuple[int, int]:
    """Lower and upper bounds for ``Xi(lam; M+A, M)`` from block compressions.

    With ``Q = I - P`` and ``|A|`` from :func:`signed_parts`::

        upper = Xi(lam; M + P(A + eps|A|)P, M) + Xi(lam; M + Q(A + |A|/eps)Q, M)
        lower = Xi(lam; M + P(A - eps|A|)P, M) + Xi(lam; M + Q(A - |A|/eps)Q, M)

    ``P`` must commute with ``M``.
    """
    if not eps > 0:
        raise ValueError("eps must be positive")
    M, A = as_operator(M), as_operator(A)
    _check_reduces(P, M)
    Q = P.complement()
    absA = abs_op(A)

    def part(proj, coeff):
        return xi(lam, M + (A + coeff * absA).compress(proj), M).value

    upper = part(P, eps) + part(Q, 1.0 / eps)
    lower = part(P, -eps) + part(Q, -1.0 / eps)
    return lower, upper


def shift_bounds(lam: float, a: float, M, A, B) -> tuple[int, int]:
    """Bounds for ``Xi(lam; M+A+B, M)`` when ``[lam-a, lam+a]`` misses the spectrum of ``M``.

    ``upper = Xi(lam-a; M+A, M) + N((a, inf); B)`` and
    ``lower = Xi(lam+a; M+A, M) - N((-inf, -a); B)``.
    """
    if not a > 0:
        raise ValueError("a must be positive")
    M, A, B = as_operator(M), as_operator(A), as_operator(B)
    if count_in(M, Interval.closed(lam - a, lam + a), exact=True):
        raise GapTooNarrow(f"[{lam - a}, {lam + a}] meets the spectrum of M")
    MA = M + A
    upper = xi(lam - a, MA, M).value + count_in(B, Interval.above(a))
    lower = xi(lam + a, MA, M).value - count_in(B, Interval.below(-a))
    return lower, upper


def orthogonal_sum_xi(lam: float, M, A, P: Projection) -> tuple[int, int, int]:
    """``(whole, part_p, part_q)`` for the block-diagonal perturbation ``PAP + QAQ``.

    ``whole = Xi(lam; M + PAP + QAQ, M)`` and the parts use ``PAP`` and ``QAQ``
    alone; additivity says ``whole == part_p + part_q``.
    """
    M, A = as_operator(M), as_operator(A)
    _check_reduces(P, M)
    Q = P.complement()
    pap, qaq = A.compress(P), A.compress(Q)
    whole = xi(lam, M + pap + qaq, M).value
    part_p = xi(lam, M + pap, M).value
    part_q = xi(lam, M + qaq, M).value
    return whole, part_p, part_q


def pair_difference_spectrum(P: Projection, Q: Projection) -> np.ndarray:
    """Eigenvalues of ``P - Q``; away from +/-1 they come in pairs ``+s, -s``."""
    return np.linalg.eigvalsh(P.entries - Q.entries)

