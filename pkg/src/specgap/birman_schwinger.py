"""Factorised perturbations ``A = G* J G`` and the Birman-Schwinger operator.

For ``lam`` off the spectrum of ``M`` the operator ``T(lam) = G (M - lam)^{-1} G*``
acts in the auxiliary space, and

    Xi(lam; M + G*JG, M) == Xi(0; -J^{-1} - T(lam), -J^{-1}).

Every function below returns the two sides of one such identity so that
callers (tests, the CLI sweeps) can compare them.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .errors import (
    DimensionMismatch,
    LambdaNotBelowSpectrum,
    NonHermitianInput,
    SingularSolve,
    SingularX,
    ZeroOnBSSpectrum,
    ZeroOnSpectrum,
)
from .index_xi import xi
from .operator_core import (
    DEFAULT_TOL,
    GAP_MARGIN,
    Interval,
    Operator,
    as_operator,
    count_in,
    gap_certificate,
    hermitize,
    matrix_from_json,
    matrix_to_json,
    require_off_spectrum,
)

SOLVE_TOL = 1e-8
J_INVERTIBILITY = 1e-8
NULLITY_TOL = 1e-7


@dataclass(frozen=True, eq=False)
class Factorization:
    """``A = G* J G`` with ``G`` of shape ``(k, n)`` and invertible Hermitian ``J``."""

    G: np.ndarray
    J: np.ndarray
    tol: float = DEFAULT_TOL

    def __post_init__(self):
        G = np.atleast_2d(np.array(self.G, copy=True))
        J = np.atleast_2d(np.array(self.J, copy=True))
        if J.shape != (G.shape[0], G.shape[0]):
            raise DimensionMismatch(f"J has shape {J.shape}, G has shape {G.shape}")
        if np.max(np.abs(J - J.conj().T)) > self.tol:
            raise NonHermitianInput("J must be Hermitian")
        J = hermitize(J)
        if np.min(np.abs(np.linalg.eigvalsh(J))) <= J_INVERTIBILITY:
            raise SingularSolve("J is not invertible")
        G.setflags(write=False)
        J.setflags(write=False)
        object.__setattr__(self, "G", G)
        object.__setattr__(self, "J", J)

    @property
    def k(self) -> int:
        return self.G.shape[0]

    @property
    def n(self) -> int:
        return self.G.shape[1]

    @property
    def J_inv(self) -> np.ndarray:
        return hermitize(np.linalg.inv(self.J))

    def perturbation(self) -> Operator:
        G = self.G
        return Operator(hermitize(G.conj().T @ self.J @ G), self.tol)

    def to_json(self) -> dict:
        return {"G": matrix_to_json(self.G), "J": matrix_to_json(self.J)}

    @classmethod
    def from_json(cls, obj: dict) -> "Factorization":
        return cls(matrix_from_json(obj["G"]), matrix_from_json(obj["J"]))


@dataclass(frozen=True)
class BSOperator:
    lambda_: float
    T: np.ndarray

    def as_operator(self) -> Operator:
        return Operator(self.T)


def _resolvent_apply(M: Operator, lam: float, rhs: np.ndarray) -> np.ndarray:
    """Solve ``(M - lam) Y = rhs`` by LU with a residual check."""
    shifted = M.entries - lam * np.eye(M.dim)
    try:
        Y = sla.solve(shifted, rhs, assume_a="gen")
    except (sla.LinAlgError, ValueError) as exc:
        raise SingularSolve(str(exc)) from exc
    scale = 1.0 + np.max(np.abs(rhs), initial=0.0)
    resid = np.max(np.abs(shifted @ Y - rhs), initial=0.0)
    if resid > SOLVE_TOL * scale:
        raise SingularSolve(f"solve residual {resid:.2e}")
    return Y


def make_T(fact: Factorization, M, lam: float) -> BSOperator:
    """``T(lam) = G (M - lam)^{-1} G*``."""
    M = as_operator(M)
    if fact.n != M.dim:
        raise DimensionMismatch(f"G has {fact.n} columns, M has dim {M.dim}")
    require_off_spectrum(M, lam)
    G = fact.G
    T = G @ _resolvent_apply(M, lam, G.conj().T)
    return BSOperator(float(lam), hermitize(T))


def _bs_pair(fact: Factorization, T: np.ndarray) -> tuple[Operator, Operator]:
    """``(-J^{-1} - T, -J^{-1})``."""
    Jinv = fact.J_inv
    return Operator(hermitize(-Jinv - T)), Operator(-Jinv)


def _left_limit_level(*ops: Operator) -> float:
    """``-delta`` with ``delta`` half the distance from 0 to the nearest nonzero eigenvalue."""
    ev = np.concatenate([op.eigenvalues for op in ops])
    nonzero = np.abs(ev[np.abs(ev) > GAP_MARGIN * DEFAULT_TOL])
    return -0.5 * float(np.min(nonzero)) if nonzero.size else -1.0


def xi_via_bs(fact: Factorization, M, lam: float, left_limit: bool = False) -> int:
    """``Xi(0; -J^{-1} - T(lam), -J^{-1})``, equal to ``Xi(lam; M + G*JG, M)``.

    When ``lam`` is an eigenvalue of ``M + G*JG``, 0 lies on the spectrum of
    ``-J^{-1} - T(lam)`` and :class:`ZeroOnBSSpectrum` is raised unless
    ``left_limit`` is set; the index is then evaluated at ``-delta`` below 0,
    which gives the left limit in ``lam``.
    """
    T = make_T(fact, M, lam).T
    lhs_op, ref = _bs_pair(fact, T)
    level = 0.0
    if not gap_certificate(lhs_op, 0.0).admits(lhs_op.tol):
        if not left_limit:
            raise ZeroOnBSSpectrum(
                "0 is an eigenvalue of -J^{-1} - T(lam); use left_limit=True")
        level = _left_limit_level(lhs_op, ref)
    return xi(level, lhs_op, ref).value


def xi_via_bs_dual(fact: Factorization, M, lam: float) -> int:
    """``-Xi(0; J^{-1} + T(lam), J^{-1})``; requires ``J^{-1} + T(lam)`` invertible."""
    T = make_T(fact, M, lam).T
    Jinv = fact.J_inv
    return -xi(0.0, Operator(hermitize(Jinv + T)), Operator(Jinv)).value


def _psd_inv_sqrt(M: Operator, lam: float) -> np.ndarray:
    sd = M.spectrum
    w = sd.eigenvalues - lam
    return hermitize((sd.vectors / np.sqrt(w)) @ sd.vectors.conj().T)


def bs_below_spectrum(fact: Factorization, M, lam: float) -> tuple[int, int]:
    """``N((-inf, lam); M + G*JG)`` and ``N((-inf, -1); X* J X)`` for ``X = G (M - lam)^{-1/2}``."""
    M = as_operator(M)
    margin = M.eigenvalues[0] - lam
    if not margin > GAP_MARGIN * M.tol:
        raise LambdaNotBelowSpectrum(f"lambda={lam!r} is not below min sigma(M)")
    X = fact.G @ _psd_inv_sqrt(M, lam)
    XJX = Operator(hermitize(X.conj().T @ fact.J @ X))
    lhs = count_in(M + fact.perturbation(), Interval.below(lam))
    rhs = count_in(XJX, Interval.below(-1.0))
    return lhs, rhs


def bs_sign_definite(fact_sign: int, G, M, lam: float) -> tuple[int, int]:
    """Sign-definite forms with ``J = +I`` or ``J = -I``.

    ``+1``: ``Xi(lam; M + G*G, M)`` against ``N((-inf, -1]; T(lam))``.
    ``-1``: ``Xi(lam; M - G*G, M)`` against ``-N((1, inf); T(lam))``.
    """
    if fact_sign not in (1, -1):
        raise ValueError("fact_sign must be +1 or -1")
    G = np.atleast_2d(np.asarray(G))
    fact = Factorization(G, fact_sign * np.eye(G.shape[0]))
    M = as_operator(M)
    lhs = xi(lam, M + fact.perturbation(), M).value
    T = make_T(fact, M, lam).as_operator()
    if fact_sign > 0:
        rhs = count_in(T, Interval.below(-1.0, closed=True))
    else:
        rhs = -count_in(T, Interval.above(1.0))
    return lhs, rhs


def _nullity(a: np.ndarray) -> int:
    return int(np.count_nonzero(np.abs(np.linalg.eigvalsh(hermitize(a))) < NULLITY_TOL))


def kernel_dim_check(fact: Factorization, M, lam: float) -> tuple[int, int]:
    """``dim Ker(M + G*JG - lam)`` and ``dim Ker(J^{-1} + T(lam))``."""
    M = as_operator(M)
    T = make_T(fact, M, lam).T
    lhs = _nullity((M + fact.perturbation()).entries - lam * np.eye(M.dim))
    rhs = _nullity(fact.J_inv + T)
    return lhs, rhs


def congruence_xi(X, M) -> int:
    """``Xi(0; X M X*, M)`` for invertible ``X``; Sylvester's law of inertia makes it 0."""
    M = as_operator(M)
    X = np.atleast_2d(np.asarray(X))
    if X.shape != (M.dim, M.dim):
        raise DimensionMismatch(f"X has shape {X.shape}, M has dim {M.dim}")
    if np.min(np.linalg.svd(X, compute_uv=False)) <= J_INVERTIBILITY:
        raise SingularX("X is not invertible")
    require_off_spectrum(M, 0.0, ZeroOnSpectrum)
    XMX = Operator(hermitize(X @ M.entries @ X.conj().T))
    return xi(0.0, XMX, M).value


def gap_counting_via_bs(fact: Factorization, M, lam1: float, lam2: float) -> tuple[int, int]:
    """Eigenvalue count change on ``[lam1, lam2)`` and ``Xi(0; -J^{-1} - T(lam1), -J^{-1} - T(lam2))``."""
    if not lam1 < lam2:
        raise ValueError("need lam1 < lam2")
    M = as_operator(M)
    delta = Interval.closed_open(lam1, lam2)
    lhs = count_in(M + fact.perturbation(), delta) - count_in(M, delta)
    op1, _ = _bs_pair(fact, make_T(fact, M, lam1).T)
    op2, _ = _bs_pair(fact, make_T(fact, M, lam2).T)
    for op in (op1, op2):
        require_off_spectrum(op, 0.0, ZeroOnBSSpectrum, "-J^{-1} - T")
    rhs = xi(0.0, op1, op2).value
    return lhs, rhs


def block_congruence(fact: Factorization, M, lam: float = 0.0) -> tuple[np.ndarray, np.ndarray]:
    """Both sides of the block identity behind the principle, at level ``lam``.

    With ``M0 = M - lam`` and ``X = [[I, -G*J], [G M0^{-1}, I]]``, returns
    ``X diag(M0, J^{-1}) X*`` and ``diag(M0 + G*JG, J^{-1} + T(lam))``.
    """
    M = as_operator(M)
    require_off_spectrum(M, lam)
    n, k = fact.n, fact.k
    G, J, Jinv = fact.G, fact.J, fact.J_inv
    M0 = M.entries - lam * np.eye(n)
    GM0inv = _resolvent_apply(M, lam, G.conj().T).conj().T
    X = np.block([[np.eye(n), -G.conj().T @ J], [GM0inv, np.eye(k)]])
    D = sla.block_diag(M0, Jinv)
    lhs = X @ D @ X.conj().T
    T = make_T(fact, M, lam).T
    rhs = sla.block_diag(M0 + fact.perturbation().entries, Jinv + T)
    return lhs, rhs
