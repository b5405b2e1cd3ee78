"""Splitting bounds for Xi under ``V+ - V-`` perturbations and block models.

The large-coupling limits themselves are not finite-dimensional statements;
what is checked here are the finite-``t`` inequality chains they are built
from, plus trend data (``t^{-p}`` scaled values with their brackets).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import (
    AmbiguousEndpoint,
    DimensionMismatch,
    LambdaOnSpectrum,
    NotPSD,
    SpectralCollision,
)
from .index_xi import abs_op, diag_trick_bounds, xi
from .operator_core import (
    SPECTRAL_TOL,
    Interval,
    Operator,
    Projection,
    as_operator,
    count_in,
    hermitize,
    random_hermitian,
    random_psd,
    random_unitary,
    require_off_spectrum,
)
from .birman_schwinger import _resolvent_apply


def _require_psd(op: Operator, name: str) -> None:
    if op.eigenvalues[0] < -SPECTRAL_TOL:
        raise NotPSD(f"{name} has eigenvalue {op.eigenvalues[0]:.3e} < 0")


def psd_sqrt(op) -> np.ndarray:
    op = as_operator(op)
    sd = op.spectrum
    w = np.sqrt(np.clip(sd.eigenvalues, 0.0, None))
    return hermitize((sd.vectors * w) @ sd.vectors.conj().T)


@dataclass(frozen=True, eq=False)
class SplitPerturbation:
    v_plus: Operator
    v_minus: Operator

    def __post_init__(self):
        vp, vm = as_operator(self.v_plus), as_operator(self.v_minus)
        if vp.dim != vm.dim:
            raise DimensionMismatch("v_plus and v_minus differ in dimension")
        _require_psd(vp, "v_plus")
        _require_psd(vm, "v_minus")
        object.__setattr__(self, "v_plus", vp)
        object.__setattr__(self, "v_minus", vm)

    @property
    def total(self) -> Operator:
        return self.v_plus - self.v_minus

    def scaled(self, t: float) -> "SplitPerturbation":
        return SplitPerturbation(t * self.v_plus, t * self.v_minus)


@dataclass(frozen=True)
class TBlock:
    """``T_ab = sqrt(V_a) (H0 - lam)^{-1} sqrt(V_b)`` for ``a, b`` in ``{+, -}``."""

    t_pp: np.ndarray
    t_mm: np.ndarray
    t_pm: np.ndarray
    t_mp: np.ndarray

    def product_mp_pm(self) -> Operator:
        """``T_{-+} T_{+-}``; Hermitian since ``T_{-+} = T_{+-}*``."""
        return Operator(hermitize(self.t_mp @ self.t_pm))

    def product_pm_mp(self) -> Operator:
        return Operator(hermitize(self.t_pm @ self.t_mp))


def build_tblock(split: SplitPerturbation, H0, lam: float) -> TBlock:
    H0 = as_operator(H0)
    require_off_spectrum(H0, lam)
    sp, sm = psd_sqrt(split.v_plus), psd_sqrt(split.v_minus)
    rp = _resolvent_apply(H0, lam, sp)
    rm = _resolvent_apply(H0, lam, sm)
    t_pp = hermitize(sp @ rp)
    t_mm = hermitize(sm @ rm)
    t_pm = sp @ rm
    return TBlock(t_pp, t_mm, t_pm, t_pm.conj().T)


def safronov_bounds(split: SplitPerturbation, H0, lam: float, a: float) -> tuple[int, int, int]:
    """``(lhs, upper, lower)`` with ``lhs = Xi(lam; H0 + V+ - V-, H0)``.

    ``upper = Xi(lam; H0 + V+/(1-a), H0) + Xi(lam; H0 - V-/(1+a), H0) + N((a^2, inf); T-+ T+-)``
    and ``lower`` swaps ``1-a`` and ``1+a`` and subtracts the same count.
    """
    if not 0 < a < 1:
        raise ValueError("a must lie in (0, 1)")
    H0 = as_operator(H0)
    vp, vm = split.v_plus, split.v_minus
    lhs = xi(lam, H0 + vp - vm, H0).value
    cross = count_in(build_tblock(split, H0, lam).product_mp_pm(), Interval.above(a * a))
    upper = (xi(lam, H0 + vp * (1.0 / (1.0 - a)), H0).value
             + xi(lam, H0 - vm * (1.0 / (1.0 + a)), H0).value + cross)
    lower = (xi(lam, H0 + vp * (1.0 / (1.0 + a)), H0).value
             + xi(lam, H0 - vm * (1.0 / (1.0 - a)), H0).value - cross)
    return lhs, upper, lower


def product_count_symmetry(tb: TBlock, a: float) -> tuple[int, int]:
    """``N((a, inf); T-+ T+-)`` and ``N((a, inf); T+- T-+)``."""
    if not a > 0:
        raise ValueError("a must be positive")
    return (count_in(tb.product_mp_pm(), Interval.above(a)),
            count_in(tb.product_pm_mp(), Interval.above(a)))


def weyl_bound(summands: Sequence, a: float) -> tuple[int, int]:
    """``N((a, inf); sum K_j)`` and ``sum_j N((a/l, inf); K_j)`` for ``l`` summands."""
    if not summands:
        raise ValueError("need at least one summand")
    ops = [as_operator(k) for k in summands]
    if len({op.dim for op in ops}) != 1:
        raise DimensionMismatch("summands differ in dimension")
    ell = len(ops)
    total = Operator(sum(op.entries for op in ops))
    lhs = count_in(total, Interval.above(a))
    rhs = sum(count_in(op, Interval.above(a / ell)) for op in ops)
    return lhs, rhs


def hs_counting_bound(K) -> tuple[int, float]:
    """``N((1, inf); K)`` and ``||K||_HS^2``; the count never exceeds the norm."""
    K = as_operator(K)
    return count_in(K, Interval.above(1.0)), float(np.sum(np.abs(K.entries) ** 2))


def sandwich_trace_bound(L, Mm) -> tuple[float, float]:
    """``||L^{1/2} M L^{1/2}||_HS^2`` and ``||L M||_HS^2`` for PSD ``L``, ``M``."""
    L, Mm = as_operator(L), as_operator(Mm)
    _require_psd(L, "L")
    _require_psd(Mm, "Mm")
    r = psd_sqrt(L)
    lhs = float(np.sum(np.abs(r @ Mm.entries @ r) ** 2))
    rhs = float(np.sum(np.abs(L.entries @ Mm.entries) ** 2))
    return lhs, rhs


# -- block models -------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class BlockModel:
    """``H0`` reduced by pairwise orthogonal projections with increasing block infima.

    The perturbation family is affine, ``V_t = t V``.
    """

    h0: Operator
    projections: tuple[Projection, ...]
    block_infima: np.ndarray
    V: Operator
    p_exponent: float = 1.0

    def __post_init__(self):
        h0 = as_operator(self.h0)
        n = h0.dim
        total = sum(P.entries for P in self.projections)
        if np.max(np.abs(total - np.eye(n))) > 1e-10:
            raise ValueError("projections do not sum to the identity")
        for i, P in enumerate(self.projections):
            for Q in self.projections[i + 1:]:
                if np.max(np.abs(P.entries @ Q.entries)) > 1e-10:
                    raise ValueError("projections are not pairwise orthogonal")
            comm = P.entries @ h0.entries - h0.entries @ P.entries
            if np.max(np.abs(comm)) > h0.tol * (1 + h0.max_abs()):
                raise ValueError("a projection does not reduce h0")
        infima = np.asarray(self.block_infima, dtype=float)
        if np.any(np.diff(infima) < 0):
            raise ValueError("block infima must be nondecreasing")
        object.__setattr__(self, "h0", h0)
        object.__setattr__(self, "V", as_operator(self.V))
        object.__setattr__(self, "block_infima", infima)

    def V_t(self, t: float) -> Operator:
        return t * self.V

    def partial(self, r: int) -> Projection:
        """``P^(r) = P_0 + ... + P_r``."""
        return Projection(sum(P.entries for P in self.projections[: r + 1]))


def random_block_model(rng: np.random.Generator, block_sizes: Sequence[int] = (2, 2, 2, 2),
                       spacing: float = 3.0, width: float = 1.0, v_scale: float = 1.0,
                       complex_: bool = False) -> BlockModel:
    """Block model whose n-th block has spectrum in ``[n*spacing, n*spacing + width]``."""
    n = int(sum(block_sizes))
    U = random_unitary(rng, n, complex_)
    diag, projs, infima = [], [], []
    start = 0
    for b, size in enumerate(block_sizes):
        ev = b * spacing + width * np.sort(rng.uniform(0.0, 1.0, size))
        diag.append(ev)
        infima.append(ev[0])
        cols = U[:, start:start + size]
        projs.append(Projection(cols @ cols.conj().T))
        start += size
    h0 = Operator(hermitize((U * np.concatenate(diag)) @ U.conj().T))
    V = Operator(random_hermitian(rng, n, v_scale, complex_))
    return BlockModel(h0, tuple(projs), np.array(infima), V)


@dataclass(frozen=True)
class E1Bounds:
    """Finite-``t`` quantities of the block-diagonal reduction.

    ``lhs = Xi(lam; H0 + V_t, H0)``; ``upper_sum``/``lower_sum`` are the sums of
    the diagonal-block terms at ``lam -/+ a``. ``off_upper``/``off_lower`` count
    the off-diagonal part beyond ``+a``/``-a``, ``weyl_upper``/``weyl_lower``
    bound those counts summand by summand.
    """

    lhs: int
    upper_sum: int
    lower_sum: int
    off_upper: int
    off_lower: int
    weyl_upper: int
    weyl_lower: int
    partial_sum_checks: tuple[tuple[int, int, int], ...] = field(default_factory=tuple)
    tail_terms: tuple[int, ...] = field(default_factory=tuple)

    def violations(self) -> list[str]:
        out = []
        for r, (lo, val, up) in enumerate(self.partial_sum_checks):
            if not lo <= val <= up:
                out.append(f"partial_sum[r={r}]")
        if self.lhs > self.upper_sum + self.off_upper:
            out.append("upper chain")
        if self.lhs < self.lower_sum - self.off_lower:
            out.append("lower chain")
        if self.off_upper > self.weyl_upper:
            out.append("weyl off-diagonal (+)")
        if self.off_lower > self.weyl_lower:
            out.append("weyl off-diagonal (-)")
        if any(term > 0 for term in self.tail_terms):
            out.append("tail sign")
        return out


def _offdiag_summands(model: BlockModel, X: Operator) -> list[Operator]:
    P = model.projections
    out = []
    for n in range(len(P)):
        for m in range(n + 1, len(P)):
            pxm = P[n].entries @ X.entries @ P[m].entries
            out.append(Operator(hermitize(pxm + pxm.conj().T)))
    return out


def theorem_e1_bounds(model: BlockModel, lam: float, eps: float, a: float, t: float) -> E1Bounds:
    """Diagonal-block reduction of ``Xi(lam; H0 + V_t, H0)`` at finite ``t``.

    Checks carried in the result (see :meth:`E1Bounds.violations`):

    * the diagonalisation inequality for every partial sum ``P^(r)``;
    * ``lhs <= upper_sum + N((a, inf); W_off)`` with ``W = V_t + eps|V_t|``,
      and the mirrored lower chain with ``V_t - eps|V_t|``;
    * the Weyl bound on the off-diagonal counts, using one summand per block
      pair for ``V_t`` and one for ``eps|V_t|``;
    * non-positivity of every diagonal term whose block lies above ``lam - a``.
    """
    if not (eps > 0 and a > 0 and t > 0):
        raise ValueError("eps, a and t must be positive")
    H0 = model.h0
    try:
        if count_in(H0, Interval.closed(lam - a, lam + a), exact=True):
            raise SpectralCollision(f"[{lam - a}, {lam + a}] meets the spectrum of H0")
        Vt = model.V_t(t)
        absV = abs_op(Vt)
        P = model.projections
        nb = len(P)
        lhs = xi(lam, H0 + Vt, H0).value

        partial_checks = []
        for r in range(nb - 1):
            lo, up = diag_trick_bounds(lam, H0, Vt, model.partial(r), eps)
            partial_checks.append((lo, lhs, up))

        W_up, W_lo = Vt + eps * absV, Vt - eps * absV
        upper_terms = [xi(lam - a, H0 + W_up.compress(Pn), H0).value for Pn in P]
        lower_terms = [xi(lam + a, H0 + W_lo.compress(Pn), H0).value for Pn in P]

        def off(W):
            diag = sum(W.compress(Pn).entries for Pn in P)
            return Operator(hermitize(W.entries - diag))

        off_up, off_lo = off(W_up), off(W_lo)
        off_upper = count_in(off_up, Interval.above(a))
        off_lower = count_in(off_lo, Interval.below(-a))

        ell = max(nb * (nb - 1), 1)
        v_pairs = _offdiag_summands(model, Vt)
        abs_pairs = _offdiag_summands(model, absV)
        weyl_upper = (sum(count_in(k, Interval.above(a / ell)) for k in v_pairs)
                      + sum(count_in(k, Interval.above(a / (eps * ell))) for k in abs_pairs))
        weyl_lower = (sum(count_in(k, Interval.below(-a / ell)) for k in v_pairs)
                      + sum(count_in(k, Interval.above(a / (eps * ell))) for k in abs_pairs))

        tail = tuple(upper_terms[n] for n in range(nb) if lam - a < model.block_infima[n])
    except LambdaOnSpectrum as exc:
        raise SpectralCollision(str(exc)) from exc

    return E1Bounds(lhs, int(sum(upper_terms)), int(sum(lower_terms)), off_upper, off_lower,
                    int(weyl_upper), int(weyl_lower), tuple(partial_checks), tail)


def offdiag_assumption_counts(model: BlockModel, t_grid: Sequence[float], a: float) -> list[dict]:
    """Counts ``N((a, inf); +/-(P_n X P_m + P_m X P_n))`` for ``X`` in ``{V_t, |V_t|}``."""
    rows = []
    P = model.projections
    for t in t_grid:
        Vt = model.V_t(t)
        absV = abs_op(Vt)
        for name, X in (("V", Vt), ("absV", absV)):
            for n in range(len(P)):
                for m in range(n + 1, len(P)):
                    pxm = P[n].entries @ X.entries @ P[m].entries
                    K = Operator(hermitize(pxm + pxm.conj().T))
                    ev = K.eigenvalues
                    rows.append({"t": float(t), "kind": name, "n": n, "m": m,
                                 "plus": int(np.count_nonzero(ev > a)),
                                 "minus": int(np.count_nonzero(-ev > a)),
                                 "scaled_plus": float(np.count_nonzero(ev > a)) / t ** model.p_exponent})
    return rows


def deep_negative_counts(model: BlockModel, t_grid: Sequence[float], E_values: Sequence[float],
                         s_values: Sequence[float]) -> list[dict]:
    """Counts ``N((-inf, -E); H0 - s|V_t|)`` on a grid of ``(t, E, s)``."""
    rows = []
    for t in t_grid:
        absV = abs_op(model.V_t(t))
        for s in s_values:
            ev = (model.h0 - s * absV).eigenvalues
            for E in E_values:
                c = int(np.count_nonzero(ev < -E))
                rows.append({"t": float(t), "E": float(E), "s": float(s), "count": c,
                             "scaled": c / t ** model.p_exponent})
    return rows


# -- trend reports ------------------------------------------------------------

@dataclass
class TrendReport:
    t_grid: np.ndarray
    scaled_values: np.ndarray
    bracket_lo: np.ndarray
    bracket_hi: np.ndarray
    skipped: np.ndarray
    target: float | None = None
    grid_nodes: np.ndarray | None = None

    @property
    def limit_bracket(self) -> tuple[np.ndarray, np.ndarray]:
        return self.bracket_lo, self.bracket_hi

    @property
    def rel_dev(self) -> np.ndarray:
        """Distance from the bracket relative to its upper end (``nan`` without a target)."""
        if self.target is None:
            return np.full(len(self.t_grid), np.nan)
        v, lo, hi = self.scaled_values, self.bracket_lo, self.bracket_hi
        dist = np.maximum(lo - v, 0.0) + np.maximum(v - hi, 0.0)
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(np.abs(hi) > 0, dist / np.abs(hi), np.where(dist > 0, np.inf, 0.0))

    def rows(self) -> list[dict]:
        if self.target is None:
            return [{"t": float(t), "scaled_value": float(v), "bracket_lo": float(lo),
                     "bracket_hi": float(hi), "skipped": bool(s)}
                    for t, v, lo, hi, s in zip(self.t_grid, self.scaled_values, self.bracket_lo,
                                               self.bracket_hi, self.skipped)]
        return [{"t": float(t), "scaled_count": float(v), "target": float(self.target),
                 "rel_dev": float(r), "grid_nodes": int(g)}
                for t, v, r, g in zip(self.t_grid, self.scaled_values, self.rel_dev,
                                      self.grid_nodes)]

    def write_csv(self, path) -> None:
        rows = self.rows()
        fields = list(rows[0]) if rows else ["t", "scaled_value", "bracket_lo", "bracket_hi",
                                             "skipped"]
        with open(path, "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=fields, lineterminator="\n")
            w.writeheader()
            for row in rows:
                w.writerow({k: _fmt(v) for k, v in row.items()})


def _fmt(v):
    if isinstance(v, float):
        return "nan" if math.isnan(v) else f"{v:.12g}"
    return v


def safronov_limit_trend(split: SplitPerturbation, H0, lam: float, p: float,
                         t_grid: Sequence[float],
                         a_rule: Callable[[float], float] | None = None) -> TrendReport:
    """``t^{-p} Xi(lam; H0 + t V+ - t V-, H0)`` with its bracket at each ``t``.

    The bracket comes from :func:`safronov_bounds` with ``a = t^{-1/2}``
    (clipped to 0.9 for ``t <= 1``). Points where some constituent operator
    has ``lam`` on its spectrum are skipped and recorded.
    """
    a_rule = a_rule or (lambda t: min(t ** -0.5, 0.9))
    H0 = as_operator(H0)
    ts = np.asarray(t_grid, dtype=float)
    vals, lo, hi, skipped = [], [], [], []
    for t in ts:
        try:
            lhs, upper, lower = safronov_bounds(split.scaled(t), H0, lam, a_rule(t))
        except (LambdaOnSpectrum, AmbiguousEndpoint):
            vals.append(np.nan), lo.append(np.nan), hi.append(np.nan), skipped.append(True)
            continue
        scale = t ** -p
        vals.append(lhs * scale), lo.append(lower * scale), hi.append(upper * scale)
        skipped.append(False)
    return TrendReport(ts, np.array(vals), np.array(lo), np.array(hi), np.array(skipped))


def random_split(rng: np.random.Generator, dim: int, scale: float = 1.0,
                 complex_: bool = False) -> SplitPerturbation:
    """Random PSD pair ``(V+, V-)`` of random (possibly deficient) ranks."""
    rp = int(rng.integers(1, dim + 1))
    rm = int(rng.integers(1, dim + 1))
    return SplitPerturbation(Operator(random_psd(rng, dim, rp, scale, complex_)),
                             Operator(random_psd(rng, dim, rm, scale, complex_)))
