import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from specgap.errors import GapTooNarrow, InconsistentIndex, LambdaOnSpectrum, NonReducingProjection
from specgap.index_xi import (
    counting_identity,
    diag_trick_bounds,
    fredholm_index,
    orthogonal_sum_xi,
    pair_difference_spectrum,
    shift_bounds,
    signed_parts,
    signed_ranks,
    xi,
    xi_value,
)
from specgap.instances import GappedInstance
from specgap.operator_core import Interval, Operator, Projection, count_in, random_hermitian, with_spectrum


def counting_oracle(lam, Mt, M):
    """N(M < lam) - N(Mt < lam) from plain eigenvalue lists."""
    return int(np.sum(np.linalg.eigvalsh(M) < lam) - np.sum(np.linalg.eigvalsh(Mt) < lam))


def test_fredholm_index_examples():
    P = Projection(np.diag([1.0, 0.0, 1.0]))
    assert fredholm_index(P, P) == 0
    assert fredholm_index(Projection(np.eye(3)), Projection(np.zeros((3, 3)))) == 3
    assert fredholm_index(Projection(np.zeros((3, 3))), Projection(np.eye(3))) == -3


def test_fredholm_index_on_spectral_projections():
    rng = np.random.default_rng(5)
    for _ in range(20):
        g = GappedInstance.draw(rng, 7)
        P = Projection(np.asarray(np.linalg.eigh(g.M.entries)[1][:, g.M.eigenvalues < g.lam]
                                  @ np.linalg.eigh(g.M.entries)[1][:, g.M.eigenvalues < g.lam].conj().T))
        Mt = g.M + g.A
        w, v = np.linalg.eigh(Mt.entries)
        Q = Projection(v[:, w < g.lam] @ v[:, w < g.lam].conj().T)
        assert fredholm_index(P, Q) == counting_oracle(g.lam, Mt.entries, g.M.entries)


def test_rotated_pair_has_zero_index():
    # P - Q has eigenvalues +/- sin(theta) away from +/-1
    th = 0.3
    v = np.array([np.cos(th), np.sin(th)])
    P = Projection(np.diag([1.0, 0.0]))
    Q = Projection(np.outer(v, v))
    assert fredholm_index(P, Q) == 0
    ev = pair_difference_spectrum(P, Q)
    np.testing.assert_allclose(ev, [-np.sin(th), np.sin(th)], atol=1e-12)


def test_index_routes_disagree_on_near_projections():
    # trace route rounds to 1 but there is no eigenvalue of P - Q at +/-1
    P = Projection(np.diag([1.0, 0.0]))
    Q = Projection(np.zeros((2, 2)))
    object.__setattr__(Q, "entries", np.diag([1e-3, 0.0]))
    with pytest.raises(InconsistentIndex):
        fredholm_index(P, Q)


def test_xi_examples():
    M = Operator(np.diag([0.0, 2.0]))
    assert xi_value(1.0, M, M) == 0
    assert xi_value(1.0, np.diag([3.0, 2.0]), M) == 1
    assert xi_value(-10.0, np.diag([3.0, 2.0]), M) == 0
    res = xi(1.0, np.diag([3.0, 2.0]), M)
    assert res.rounding_residual < 1e-12


def test_xi_on_spectrum_raises():
    with pytest.raises(LambdaOnSpectrum):
        xi(2.0, np.diag([3.0, 2.0]), np.diag([0.0, 2.0]))


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 2 ** 32 - 1), dim=st.integers(2, 9))
def test_xi_matches_counting(seed, dim):
    g = GappedInstance.draw(np.random.default_rng(seed), dim)
    Mt = g.M + g.A
    assert xi_value(g.lam, Mt, g.M) == counting_oracle(g.lam, Mt.entries, g.M.entries)
    assert xi_value(g.lam, g.M, Mt) == -xi_value(g.lam, Mt, g.M)


def test_signed_parts():
    sp = signed_parts(np.diag([2.0, -3.0]))
    np.testing.assert_allclose(sp.plus.entries, np.diag([2.0, 0.0]))
    np.testing.assert_allclose(sp.minus.entries, np.diag([0.0, 3.0]))
    z = signed_parts(np.zeros((3, 3)))
    assert not np.any(z.plus.entries) and not np.any(z.minus.entries)


def test_signed_parts_random(rng):
    A = random_hermitian(rng, 6, complex_=True)
    sp = signed_parts(A)
    np.testing.assert_allclose(sp.plus.entries - sp.minus.entries, A, atol=1e-12)
    np.testing.assert_allclose(sp.plus.entries @ sp.minus.entries, 0, atol=1e-12)
    assert sp.plus.eigenvalues[0] > -1e-12 and sp.minus.eigenvalues[0] > -1e-12
    assert signed_ranks(np.diag([1.0, 0.0, -2.0, -1e-12])) == (1, 1)


def test_counting_identity_examples():
    M = np.diag([0.0, 2.0])
    assert counting_identity(1.0, 2.5, M, np.zeros((2, 2))) == (0, 0)
    # Xi(1) = 1 and Xi(2.5) = 1; [1, 2.5) holds eigenvalue 2 of both operators
    lhs, rhs = counting_identity(1.0, 2.5, M, np.diag([3.0, 0.0]))
    assert lhs == rhs == 0
    lhs, rhs = counting_identity(1.0, 3.5, M, np.diag([3.0, 0.0]))
    assert lhs == rhs == 1


def test_counting_identity_from_below_spectrum(rng):
    for _ in range(20):
        g = GappedInstance.draw(rng, 6)
        Mt = g.M + g.A
        lam1 = min(g.M.eigenvalues[0], Mt.eigenvalues[0]) - 1.0
        lhs, rhs = counting_identity(lam1, g.lam, g.M, g.A)
        assert lhs == rhs
        # Xi vanishes below both spectra, so this is -Xi(lam2)
        assert rhs == -xi_value(g.lam, Mt, g.M)


def _reducing_projection(rng, M, k):
    v = M.spectrum.vectors[:, rng.permutation(M.dim)[:k]]
    return Projection(v @ v.conj().T)


def test_diag_trick_zero_perturbation(rng):
    g = GappedInstance.draw(rng, 6)
    assert diag_trick_bounds(g.lam, g.M, np.zeros((6, 6)), _reducing_projection(rng, g.M, 3), 1.0) == (0, 0)


def test_diag_trick_block_diagonal_is_exact(rng):
    for _ in range(20):
        g = GappedInstance.draw(rng, 8)
        P = _reducing_projection(rng, g.M, 4)
        A = g.A.compress(P) + g.A.compress(P.complement())
        lo, up = diag_trick_bounds(g.lam, g.M, A, P, 1.0)
        val = xi_value(g.lam, g.M + A, g.M)
        assert lo <= val <= up


@pytest.mark.parametrize("eps", [0.5, 1.0, 2.0])
def test_diag_trick_random(rng, eps):
    for _ in range(30):
        g = GappedInstance.draw(rng, 8)
        P = _reducing_projection(rng, g.M, int(rng.integers(1, 8)))
        lo, up = diag_trick_bounds(g.lam, g.M, g.A, P, eps)
        assert lo <= xi_value(g.lam, g.M + g.A, g.M) <= up


def test_diag_trick_needs_reducing_projection():
    M = Operator(np.diag([0.0, 2.0]))
    v = np.array([1.0, 1.0]) / np.sqrt(2)
    with pytest.raises(NonReducingProjection):
        diag_trick_bounds(1.0, M, np.eye(2), Projection(np.outer(v, v)), 1.0)
    with pytest.raises(ValueError):
        diag_trick_bounds(1.0, M, np.eye(2), Projection(np.diag([1.0, 0.0])), 0.0)


def test_shift_bounds_trivial():
    M = np.diag([-1.0, 1.0])
    Z = np.zeros((2, 2))
    assert shift_bounds(0.0, 0.5, M, Z, Z) == (0, 0)
    assert shift_bounds(0.0, 0.5, M, Z, np.diag([0.3, -0.4])) == (0, 0)
    with pytest.raises(GapTooNarrow):
        shift_bounds(0.0, 1.0, M, Z, Z)


def test_shift_bounds_random(rng):
    for _ in range(50):
        g = GappedInstance.draw(rng, 7)
        a = 0.5 * float(np.min(np.abs(g.M.eigenvalues - g.lam)))
        B = Operator(with_spectrum(rng, rng.standard_normal(7), g.M.is_complex))
        try:
            lo, up = shift_bounds(g.lam, a, g.M, g.A, B)
            val = xi_value(g.lam, g.M + g.A + B, g.M)
        except LambdaOnSpectrum:
            continue
        assert lo <= val <= up


def test_orthogonal_sum(rng):
    M = Operator(np.diag([0.0, 2.0]))
    P = Projection(np.diag([1.0, 0.0]))
    assert orthogonal_sum_xi(1.0, M, np.zeros((2, 2)), P) == (0, 0, 0)
    whole, pp, pq = orthogonal_sum_xi(1.0, M, np.diag([3.0, -5.0]), Projection(np.eye(2)))
    assert pq == 0 and whole == pp
    for _ in range(30):
        g = GappedInstance.draw(rng, 8)
        whole, pp, pq = orthogonal_sum_xi(g.lam, g.M, g.A, _reducing_projection(rng, g.M, 3))
        assert whole == pp + pq


def test_rank_bounds_and_monotonicity(rng):
    for _ in range(50):
        g = GappedInstance.draw(rng, 6)
        rp, rm = signed_ranks(g.A)
        val = xi_value(g.lam, g.M + g.A, g.M)
        assert -rm <= val <= rp
    M = np.diag([0.0, 1.0, 3.0])
    # adding a positive operator can only raise Xi
    assert xi_value(2.2, M + np.eye(3), M) >= xi_value(2.2, M + 0.5 * np.eye(3), M) >= 0
    assert count_in(np.diag([0.0, 3.0]), Interval.below(2.0)) == 1
