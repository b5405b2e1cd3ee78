"""Randomised checks of the identities and inequalities, one trial at a time.

A check draws an instance from a seeded generator and returns an
:class:`Outcome` holding ``lhs`` and the bracket ``[lower, upper]`` it must
lie in (``lower == upper`` for identities). Spectral collisions at a sampled
level raise and are reported by the caller as skips.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import asymptotics as asy
from . import birman_schwinger as bs
from .errors import (
    AmbiguousEndpoint,
    GapTooNarrow,
    LambdaOnSpectrum,
    SpectralCollision,
)
from .index_xi import (
    counting_identity,
    diag_trick_bounds,
    orthogonal_sum_xi,
    shift_bounds,
    signed_ranks,
    xi_value,
)
from .instances import (
    SAFRONOV_A,
    BlockModelInstance,
    FactorizedInstance,
    GappedInstance,
    SplitInstance,
    operator_hash,
    random_signed,
    sample_level,
)
from .operator_core import (
    Interval,
    Operator,
    Projection,
    count_in,
    random_hermitian,
    random_psd,
    random_unitary,
)
from .spectral_flow import PathFamily, sflow

SKIP_ERRORS = (LambdaOnSpectrum, AmbiguousEndpoint, GapTooNarrow, SpectralCollision)
DIAG_EPS = (0.25, 0.5, 1.0, 2.0, 4.0)
WEYL_ELL = (1, 2, 3, 5)
E1_T = (1.0, 4.0, 16.0)
BLOCK_RESIDUAL_TOL = 1e-8


@dataclass(frozen=True)
class Outcome:
    instance: str
    lhs: float
    lower: float
    upper: float
    tol: float = 0.0

    @property
    def passed(self) -> bool:
        return self.lower - self.tol <= self.lhs <= self.upper + self.tol


def _eq(h, lhs, rhs) -> Outcome:
    return Outcome(h, lhs, rhs, rhs)


def _random_reducing_projection(rng, M: Operator) -> Projection:
    """Projection onto a random nonempty proper set of eigenvectors of ``M``."""
    n = M.dim
    k = int(rng.integers(1, n))
    cols = rng.permutation(n)[:k]
    V = M.spectrum.vectors[:, cols]
    return Projection(V @ V.conj().T)


# -- Xi ---------------------------------------------------------------------------

def xi_oracle(rng, dim, trial=0, inst=None):
    g = inst or GappedInstance.draw(rng, dim)
    Mt = g.M + g.A
    direct = count_in(g.M, Interval.below(g.lam)) - count_in(Mt, Interval.below(g.lam))
    return _eq(operator_hash(g.M, g.A), xi_value(g.lam, Mt, g.M), direct)


def xi_chain(rng, dim, trial=0, inst=None):
    g = inst or GappedInstance.draw(rng, dim)
    M2 = g.M + g.A
    M3 = M2 + random_signed(rng, dim, g.M.is_complex)
    lhs = xi_value(g.lam, M3, g.M)
    return _eq(operator_hash(g.M, g.A, M3), lhs,
               xi_value(g.lam, M3, M2) + xi_value(g.lam, M2, g.M))


def xi_antisymmetry(rng, dim, trial=0, inst=None):
    g = inst or GappedInstance.draw(rng, dim)
    Mt = g.M + g.A
    return _eq(operator_hash(g.M, g.A), xi_value(g.lam, Mt, g.M), -xi_value(g.lam, g.M, Mt))


def xi_counting(rng, dim, trial=0, inst=None):
    g = inst or GappedInstance.draw(rng, dim)
    lam2 = sample_level(rng, [g.M, g.M + g.A], g.lam + 0.05, g.lam + 3.0)
    lhs, rhs = counting_identity(g.lam, lam2, g.M, g.A)
    return _eq(operator_hash(g.M, g.A), lhs, rhs)


def xi_rank_bounds(rng, dim, trial=0, inst=None):
    g = inst or GappedInstance.draw(rng, dim)
    rp, rm = signed_ranks(g.A)
    return Outcome(operator_hash(g.M, g.A), xi_value(g.lam, g.M + g.A, g.M), -rm, rp)


def xi_monotonicity(rng, dim, trial=0, inst=None):
    g = inst or GappedInstance.draw(rng, dim)
    c = g.M.is_complex
    M1 = g.M + g.A
    M2 = M1 + Operator(random_psd(rng, dim, int(rng.integers(1, dim + 1)), 1.0, c))
    return Outcome(operator_hash(g.M, g.A, M2), xi_value(g.lam, M1, g.M), -math.inf,
                   xi_value(g.lam, M2, g.M))


def xi_shift_bounds(rng, dim, trial=0, inst=None):
    g = inst or GappedInstance.draw(rng, dim)
    dist = float(np.min(np.abs(g.M.eigenvalues - g.lam)))
    a = dist * float(rng.uniform(0.2, 0.9))
    B = random_signed(rng, dim, g.M.is_complex, 0.7)
    lower, upper = shift_bounds(g.lam, a, g.M, g.A, B)
    return Outcome(operator_hash(g.M, g.A, B), xi_value(g.lam, g.M + g.A + B, g.M), lower, upper)


def xi_diag_trick(rng, dim, trial=0, inst=None):
    g = inst or GappedInstance.draw(rng, dim)
    P = _random_reducing_projection(rng, g.M)
    bounds = [diag_trick_bounds(g.lam, g.M, g.A, P, eps) for eps in DIAG_EPS]
    return Outcome(operator_hash(g.M, g.A, P.entries), xi_value(g.lam, g.M + g.A, g.M),
                   max(b[0] for b in bounds), min(b[1] for b in bounds))


def xi_orthogonal_sum(rng, dim, trial=0, inst=None):
    g = inst or GappedInstance.draw(rng, dim)
    P = _random_reducing_projection(rng, g.M)
    whole, pp, pq = orthogonal_sum_xi(g.lam, g.M, g.A, P)
    return _eq(operator_hash(g.M, g.A, P.entries), whole, pp + pq)


# -- spectral flow ------------------------------------------------------------------

def flow_net(rng, dim, trial=0, inst=None):
    g = inst or GappedInstance.draw(rng, dim)
    res = sflow(g.lam, PathFamily(g.M, g.A))
    return _eq(operator_hash(g.M, g.A), res.net, xi_value(g.lam, g.M + g.A, g.M))


def flow_reversal(rng, dim, trial=0, inst=None):
    g = inst or GappedInstance.draw(rng, dim)
    fam = PathFamily(g.M, g.A)
    return _eq(operator_hash(g.M, g.A), sflow(g.lam, fam).net, -sflow(g.lam, fam.reversed()).net)


# -- Birman-Schwinger -----------------------------------------------------------------

def bs_principle(rng, dim, trial=0, inst=None):
    f = inst or FactorizedInstance.draw(rng, dim)
    direct = xi_value(f.lam, f.M + f.fact.perturbation(), f.M)
    return _eq(operator_hash(f.M, f.fact.G, f.fact.J), bs.xi_via_bs(f.fact, f.M, f.lam), direct)


def bs_dual(rng, dim, trial=0, inst=None):
    f = inst or FactorizedInstance.draw(rng, dim)
    direct = xi_value(f.lam, f.M + f.fact.perturbation(), f.M)
    return _eq(operator_hash(f.M, f.fact.G, f.fact.J), bs.xi_via_bs_dual(f.fact, f.M, f.lam), direct)


def bs_below_spectrum(rng, dim, trial=0, inst=None):
    f = inst or FactorizedInstance.draw(rng, dim)
    lam = float(f.M.eigenvalues[0] - rng.uniform(0.05, 2.0))
    lhs, rhs = bs.bs_below_spectrum(f.fact, f.M, lam)
    return _eq(operator_hash(f.M, f.fact.G, f.fact.J), lhs, rhs)


def _bs_sign(sign):
    def check(rng, dim, trial=0, inst=None):
        f = inst or FactorizedInstance.draw(rng, dim, j_sign=sign)
        lhs, rhs = bs.bs_sign_definite(sign, f.fact.G, f.M, f.lam)
        return _eq(operator_hash(f.M, f.fact.G), lhs, rhs)
    return check


def bs_gap_counting(rng, dim, trial=0, inst=None):
    f = inst or FactorizedInstance.draw(rng, dim)
    lam2 = sample_level(rng, [f.M, f.M + f.fact.perturbation()], f.lam + 0.05, f.lam + 3.0)
    lhs, rhs = bs.gap_counting_via_bs(f.fact, f.M, f.lam, lam2)
    return _eq(operator_hash(f.M, f.fact.G, f.fact.J), lhs, rhs)


def bs_nullity(rng, dim, trial=0, inst=None):
    """At an eigenvalue of ``M + G*JG`` off the spectrum of ``M`` both kernels are nontrivial."""
    f = inst or FactorizedInstance.draw(rng, dim)
    Mt = f.M + f.fact.perturbation()
    ev = Mt.eigenvalues
    dist = np.array([np.min(np.abs(f.M.eigenvalues - e)) for e in ev])
    i = int(np.argmax(dist))
    if dist[i] < 1e-3:
        raise LambdaOnSpectrum("no eigenvalue of M + G*JG away from the spectrum of M")
    lhs, rhs = bs.kernel_dim_check(f.fact, f.M, float(ev[i]))
    return _eq(operator_hash(f.M, f.fact.G, f.fact.J), lhs, rhs)


def bs_congruence(rng, dim, trial=0, inst=None):
    c = bool(rng.integers(2))
    M = Operator(random_hermitian(rng, dim, 1.5, c))
    X = random_unitary(rng, dim, c) * rng.uniform(0.2, 3.0, dim)
    return _eq(operator_hash(M, X), bs.congruence_xi(X, M), 0)


def bs_block_identity(rng, dim, trial=0, inst=None):
    f = inst or FactorizedInstance.draw(rng, dim)
    lhs, rhs = bs.block_congruence(f.fact, f.M, f.lam)
    resid = float(np.max(np.abs(lhs - rhs)) / (1.0 + np.max(np.abs(rhs))))
    return Outcome(operator_hash(f.M, f.fact.G, f.fact.J), resid, 0.0, BLOCK_RESIDUAL_TOL)


# -- splitting bounds -------------------------------------------------------------------

def saf_sandwich(rng, dim, trial=0, inst=None):
    s = inst or SplitInstance.draw(rng, dim)
    res = [asy.safronov_bounds(s.split, s.H0, s.lam, a) for a in SAFRONOV_A]
    return Outcome(operator_hash(s.H0, s.split.v_plus, s.split.v_minus), res[0][0],
                   max(r[2] for r in res), min(r[1] for r in res))


def saf_product_symmetry(rng, dim, trial=0, inst=None):
    s = inst or SplitInstance.draw(rng, dim)
    tb = asy.build_tblock(s.split, s.H0, s.lam)
    lhs, rhs = asy.product_count_symmetry(tb, float(rng.uniform(0.05, 2.0)))
    return _eq(operator_hash(s.H0, s.split.v_plus, s.split.v_minus), lhs, rhs)


def saf_weyl(rng, dim, trial=0, inst=None):
    ell = WEYL_ELL[trial % len(WEYL_ELL)]
    c = bool(rng.integers(2))
    ks = [random_hermitian(rng, dim, 1.5, c) for _ in range(ell)]
    lhs, rhs = asy.weyl_bound(ks, float(rng.uniform(0.1, 2.0)))
    return Outcome(operator_hash(*ks), lhs, -math.inf, rhs)


def saf_hs_count(rng, dim, trial=0, inst=None):
    K = random_hermitian(rng, dim, float(rng.uniform(0.5, 4.0)), bool(rng.integers(2)))
    lhs, rhs = asy.hs_counting_bound(K)
    return Outcome(operator_hash(K), lhs, -math.inf, rhs)


def saf_sandwich_trace(rng, dim, trial=0, inst=None):
    c = bool(rng.integers(2))
    L = random_psd(rng, dim, int(rng.integers(1, dim + 1)), 1.0, c)
    Mm = random_psd(rng, dim, int(rng.integers(1, dim + 1)), 1.0, c)
    lhs, rhs = asy.sandwich_trace_bound(L, Mm)
    return Outcome(operator_hash(L, Mm), lhs, -math.inf, rhs, 1e-10 * (1 + rhs))


# -- block models -----------------------------------------------------------------------

def e1_chain(rng, dim, trial=0, inst=None, t=None):
    b = inst or BlockModelInstance.draw(rng, dim)
    t = E1_T[trial % len(E1_T)] if t is None else t
    r = asy.theorem_e1_bounds(b.model, b.lam, b.eps, b.a, t)
    h = operator_hash(b.model.h0, b.model.V)
    if r.violations():
        return Outcome(h, r.lhs, math.inf, -math.inf)
    return Outcome(h, r.lhs, r.lower_sum - r.off_lower, r.upper_sum + r.off_upper)


RELATIONS: dict[str, dict[str, Callable]] = {
    "verify-xi": {
        "oracle": xi_oracle, "chain": xi_chain, "antisymmetry": xi_antisymmetry,
        "counting": xi_counting, "rank_bounds": xi_rank_bounds,
        "monotonicity": xi_monotonicity, "shift_bounds": xi_shift_bounds,
        "diag_trick": xi_diag_trick, "orthogonal_sum": xi_orthogonal_sum,
    },
    "verify-flow": {"net_equals_xi": flow_net, "reversal": flow_reversal},
    "verify-bs": {
        "principle": bs_principle, "dual": bs_dual, "below_spectrum": bs_below_spectrum,
        "sign_plus": _bs_sign(1), "sign_minus": _bs_sign(-1), "gap_counting": bs_gap_counting,
        "nullity": bs_nullity, "congruence": bs_congruence, "block_identity": bs_block_identity,
    },
    "verify-safronov": {
        "sandwich": saf_sandwich, "product_symmetry": saf_product_symmetry, "weyl": saf_weyl,
        "hs_count": saf_hs_count, "sandwich_trace": saf_sandwich_trace,
    },
    "verify-e1": {"e1_chain": e1_chain},
}
DEFAULT_RELATION = {cmd: next(iter(rels)) for cmd, rels in RELATIONS.items()}

# instance kind each relation can replay from a bank; None means it draws its own operators
RELATION_KIND = {cmd: {name: kind for name in rels} for cmd, rels, kind in (
    ("verify-xi", RELATIONS["verify-xi"], "gapped"),
    ("verify-flow", RELATIONS["verify-flow"], "gapped"),
    ("verify-bs", RELATIONS["verify-bs"], "factorized"),
    ("verify-safronov", RELATIONS["verify-safronov"], "split"),
    ("verify-e1", RELATIONS["verify-e1"], "block_model"),
)}
for _name in ("congruence",):
    RELATION_KIND["verify-bs"][_name] = None
for _name in ("weyl", "hs_count", "sandwich_trace"):
    RELATION_KIND["verify-safronov"][_name] = None
