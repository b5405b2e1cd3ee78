"""Spectral flow of the linear path ``tau -> M + tau A`` through a level.

The net flow is an exact integer obtained by telescoping eigenvalue counts
over the sample grid. Gross rightward/leftward crossings come from following
the ascending eigenvalue branches, which are continuous in ``tau`` for a
Hermitian path; they are best effort and carry an ``approximate`` flag when a
touch at the level could not be told apart from a pair of crossings.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .errors import (
    DimensionMismatch,
    LambdaOnEndpointSpectrum,
    RefinementLimit,
    TangentialCrossingUnresolved,
)
from .operator_core import Operator, as_operator, perturb, require_off_spectrum

TOUCH_BAND = 1e-7
MAX_INTERVALS = 2 ** 20
MIN_STEP_FRACTION = 2.0 ** -40


@dataclass(frozen=True)
class PathFamily:
    M: Operator
    A: Operator
    t_max: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "M", as_operator(self.M))
        object.__setattr__(self, "A", as_operator(self.A))
        if self.M.dim != self.A.dim:
            raise DimensionMismatch(f"dim M = {self.M.dim}, dim A = {self.A.dim}")
        if not self.t_max > 0:
            raise ValueError("t_max must be positive")

    def at(self, tau: float) -> Operator:
        return perturb(self.M, self.A, tau)

    def eigenvalues_at(self, tau: float) -> np.ndarray:
        return np.linalg.eigvalsh(self.M.entries + tau * self.A.entries)

    def reversed(self) -> "PathFamily":
        """The same path traversed from ``tau = t_max`` back to 0."""
        return PathFamily(self.at(self.t_max), -self.A, self.t_max)

    def restricted(self, s: float, t: float) -> "PathFamily":
        """Sub-path over ``[s, t]`` re-parametrised to start at 0."""
        return PathFamily(self.at(s), self.A, t - s)


@dataclass(frozen=True)
class Branches:
    """Ascending eigenvalue branches sampled on an adaptive grid.

    ``values[i, k]`` is the k-th smallest eigenvalue of ``M + grid[i] A``.
    """

    grid: np.ndarray
    values: np.ndarray


@dataclass(frozen=True)
class Crossing:
    tau: float
    branch: int
    direction: int  # +1 rightwards, -1 leftwards


@dataclass(frozen=True)
class SflowResult:
    net: int
    rightward: int
    leftward: int
    crossings: tuple[Crossing, ...] = field(default_factory=tuple)
    approximate: bool = False

    @property
    def crossing_times(self) -> np.ndarray:
        return np.array([c.tau for c in self.crossings])


def _needs_split(v0: np.ndarray, v1: np.ndarray, dtau: float, lam: float,
                 norm_a: float, max_disp: float) -> bool:
    """Whether some branch could visit ``lam`` inside the interval unseen.

    Eigenvalues of a Hermitian path are ``||A||``-Lipschitz, so a branch whose
    endpoint distances to ``lam`` add up to more than ``||A|| dtau`` cannot reach
    it in between. Branches that can are refined until their displacement is
    below ``max_disp``; same-side branches keep being refined until the
    Lipschitz argument rules out a hidden excursion.
    """
    d0, d1 = v0 - lam, v1 - lam
    reach = np.abs(d0) + np.abs(d1) <= norm_a * dtau
    if not np.any(reach):
        return False
    in_band = (np.abs(d0) < TOUCH_BAND) | (np.abs(d1) < TOUCH_BAND)
    live = reach & ~in_band
    if np.any(live & (np.abs(v1 - v0) > max_disp)):
        return True
    same_side = np.sign(d0) == np.sign(d1)
    return bool(np.any(live & same_side))


def eig_path(family: PathFamily, initial_grid: int = 17, lam: float | None = None,
             max_disp: float | None = None) -> Branches:
    """Sample the ascending eigenvalue branches of ``M + tau A`` on ``[0, t_max]``.

    Starts from ``initial_grid`` equispaced points. When a level ``lam`` is
    given, intervals in which a branch can reach ``lam`` are bisected until
    branch displacement drops below ``max_disp`` (default: a quarter of the
    distance from ``lam`` to the endpoint spectra) and no same-side excursion
    to ``lam`` can hide between samples.
    """
    if initial_grid < 2:
        raise ValueError("initial_grid must be at least 2")
    grid = list(np.linspace(0.0, family.t_max, initial_grid))
    vals = [family.eigenvalues_at(t) for t in grid]
    if lam is None:
        return Branches(np.array(grid), np.array(vals))

    norm_a = family.A.norm()
    if max_disp is None:
        margin = min(np.min(np.abs(vals[0] - lam)), np.min(np.abs(vals[-1] - lam)))
        max_disp = max(margin / 4.0, TOUCH_BAND)
    min_step = family.t_max * MIN_STEP_FRACTION

    # deterministic depth-first bisection over a stack of intervals
    out_grid, out_vals = [grid[0]], [vals[0]]
    stack = [(grid[i], vals[i], grid[i + 1], vals[i + 1]) for i in range(len(grid) - 2, -1, -1)]
    n_intervals = 0
    while stack:
        t0, v0, t1, v1 = stack.pop()
        if t1 - t0 > min_step and _needs_split(v0, v1, t1 - t0, lam, norm_a, max_disp):
            tm = 0.5 * (t0 + t1)
            vm = family.eigenvalues_at(tm)
            stack.append((tm, vm, t1, v1))
            stack.append((t0, v0, tm, vm))
            continue
        out_grid.append(t1)
        out_vals.append(v1)
        n_intervals += 1
        if n_intervals + len(stack) > MAX_INTERVALS:
            raise RefinementLimit(f"more than {MAX_INTERVALS} subintervals")
    return Branches(np.array(out_grid), np.array(out_vals))


def _locate(family: PathFamily, k: int, lam: float, t0: float, t1: float) -> float:
    def f(t):
        return family.eigenvalues_at(t)[k] - lam

    f0, f1 = f(t0), f(t1)
    if f0 == 0.0:
        return t0
    if f1 == 0.0 or np.sign(f0) == np.sign(f1):
        return t1
    return brentq(f, t0, t1, xtol=1e-14, rtol=4 * np.finfo(float).eps)


def sflow(lam: float, family: PathFamily, initial_grid: int = 17,
          strict: bool = False) -> SflowResult:
    """Spectral flow of ``M + tau A``, ``0 <= tau <= t_max``, through ``lam``.

    ``net`` telescopes ``N((-inf, lam); M + tau_i A) - N((-inf, lam); M + tau_{i+1} A)``
    over grid points off the level and is exact. ``rightward``/``leftward`` come
    from sign changes of each ascending branch relative to ``lam``; a branch that
    enters the band ``|value - lam| < 1e-7`` and leaves on the same side is a
    touch and does not count. If such a touch is only resolved by hitting the
    refinement floor the result is flagged ``approximate`` (or, with
    ``strict=True``, :class:`TangentialCrossingUnresolved` is raised).
    """
    for what, op in (("M", family.M), ("M + t_max A", family.at(family.t_max))):
        cert = require_off_spectrum(op, lam, LambdaOnEndpointSpectrum, what)
        if cert.margin < TOUCH_BAND:
            raise LambdaOnEndpointSpectrum(f"lambda={lam!r} within the touch band of {what}")

    br = eig_path(family, initial_grid, lam)
    grid, vals = br.grid, br.values

    # net: telescoping counts over samples that avoid lam
    off = np.all(np.abs(vals - lam) >= TOUCH_BAND, axis=1)
    counts = np.count_nonzero(vals < lam, axis=1)
    idx = np.flatnonzero(off)
    net = int(np.sum(counts[idx[:-1]] - counts[idx[1:]]))

    rightward = leftward = 0
    crossings: list[Crossing] = []
    approximate = False
    norm_a = family.A.norm()
    for k in range(vals.shape[1]):
        d = vals[:, k] - lam
        side = np.where(np.abs(d) < TOUCH_BAND, 0, np.sign(d)).astype(int)
        last_i = 0
        for i in range(1, len(grid)):
            if side[i] == 0:
                continue
            if side[i] != side[last_i]:
                tau = _locate(family, k, lam, grid[last_i], grid[i])
                crossings.append(Crossing(float(tau), k, int(side[i])))
                if side[i] > 0:
                    rightward += 1
                else:
                    leftward += 1
            elif i - last_i == 1 and abs(d[last_i]) + abs(d[i]) <= norm_a * (grid[i] - grid[last_i]):
                # refinement floor reached with an excursion to lam still possible
                approximate = True
            last_i = i

    if rightward - leftward != net:
        approximate = True
    if approximate and strict:
        raise TangentialCrossingUnresolved(
            f"gross counts {rightward}/{leftward} unresolved near lam={lam!r}")
    crossings.sort(key=lambda c: (c.tau, c.branch))
    return SflowResult(net, rightward, leftward, tuple(crossings), approximate)
