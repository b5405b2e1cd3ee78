"""Landau-level projections through their explicit integral kernel.

The n-th level projection of the planar magnetic Laplacian at field ``B`` has
kernel::

    P_n(x, y) = B/(2 pi) L_n(B|x-y|^2 / 2) exp(-B/4 (|x-y|^2 + 2i[x, y])),

with ``[x, y] = x1*y2 - x2*y1``. Compressions ``P_n V_t P_n`` of scaled
potentials are discretised by a Nystrom rule on a uniform midpoint grid.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Callable, Sequence

import numpy as np
import scipy.integrate as sint
import scipy.sparse.linalg as spla

from .asymptotics import TrendReport, weyl_bound
from .errors import (
    GridTooCoarse,
    NegativePotentialInNonnegMode,
    PhiNotAdmissible,
    UnsupportedPreset,
)
from .operator_core import Operator, hermitize

SUPPORT_CUTOFF = 1e-12
DEFAULT_NODE_CAP = 4096
MARGIN_LENGTHS = 3.0
REFINE_FLOOR = 1e-3
REFINE_RTOL = 0.05
DENSE_LIMIT = 2500
ROW_CHUNK = 512


@dataclass(frozen=True)
class LandauConfig:
    B: float = 1.0
    n: int = 0

    def __post_init__(self):
        if not self.B > 0:
            raise ValueError("B must be positive")
        if int(self.n) != self.n or self.n < 0:
            raise ValueError("n must be a nonnegative integer")
        object.__setattr__(self, "n", int(self.n))

    @property
    def level_energy(self) -> float:
        return self.B * (2 * self.n + 1)

    @property
    def density(self) -> float:
        """Kernel diagonal ``B/(2 pi)``, the state density per unit area."""
        return self.B / (2.0 * math.pi)

    @property
    def magnetic_length(self) -> float:
        return 1.0 / math.sqrt(self.B)

    def with_level(self, n: int) -> "LandauConfig":
        return LandauConfig(self.B, n)


# -- potentials ---------------------------------------------------------------

PRESET_DEFAULTS = {
    "bump": (1.0, 1.0),             # height, radius
    "gaussian": (1.0, 0.5),         # height, width
    "annulus": (1.0, 1.5, 0.3),     # height, ring radius, width
    "disk_step": (1.0, 1.0),        # height, radius
}


def _radial_profile(preset: str, params: tuple) -> Callable[[np.ndarray], np.ndarray]:
    if preset == "bump":
        h, r = params
        return lambda rho: h * np.clip(1.0 - (rho / r) ** 2, 0.0, None)
    if preset == "gaussian":
        h, s = params
        return lambda rho: h * np.exp(-0.5 * (rho / s) ** 2)
    if preset == "annulus":
        h, r0, s = params
        return lambda rho: h * np.exp(-0.5 * ((rho - r0) / s) ** 2)
    if preset == "disk_step":
        h, r = params
        return lambda rho: np.where(rho <= r, h, 0.0)
    raise UnsupportedPreset(preset)


@dataclass(frozen=True)
class ScaledPotential:
    """``V_t(x1, x2) = V(x1 t^-alpha, x2 t^-beta)`` for a preset ``V >= 0``.

    ``custom_grid`` params are ``[xmin, xmax, ymin, ymax, nx, ny, v_00, v_10, ...]``:
    a piecewise constant function on ``nx * ny`` cells, x index fastest, zero
    outside the rectangle.
    """

    preset: str = "bump"
    params: tuple = ()
    alpha: float = 1.0
    beta: float = 1.0
    t: float = 1.0

    def __post_init__(self):
        if self.preset not in PRESET_DEFAULTS and self.preset != "custom_grid":
            raise UnsupportedPreset(f"unknown preset {self.preset!r}")
        params = tuple(float(v) for v in self.params)
        if not params:
            if self.preset == "custom_grid":
                raise ValueError("custom_grid needs explicit params")
            params = PRESET_DEFAULTS[self.preset]
        if self.preset == "custom_grid":
            nx, ny = int(params[4]), int(params[5])
            if len(params) != 6 + nx * ny or params[0] >= params[1] or params[2] >= params[3]:
                raise ValueError("malformed custom_grid params")
        elif len(params) != len(PRESET_DEFAULTS[self.preset]):
            raise ValueError(f"{self.preset} takes {len(PRESET_DEFAULTS[self.preset])} params")
        if not (self.alpha > 0 and self.beta > 0 and self.t > 0):
            raise ValueError("alpha, beta and t must be positive")
        object.__setattr__(self, "params", params)

    @property
    def p(self) -> float:
        return self.alpha + self.beta

    def at(self, t: float) -> "ScaledPotential":
        return replace(self, t=float(t))

    @property
    def is_radial(self) -> bool:
        return self.preset != "custom_grid"

    def _custom_parts(self):
        xmin, xmax, ymin, ymax = self.params[:4]
        nx, ny = int(self.params[4]), int(self.params[5])
        vals = np.array(self.params[6:]).reshape(ny, nx)
        return xmin, xmax, ymin, ymax, nx, ny, vals

    def base(self, pts) -> np.ndarray:
        """Unscaled ``V`` at points of shape ``(..., 2)``."""
        pts = np.asarray(pts, dtype=float)
        if self.is_radial:
            return _radial_profile(self.preset, self.params)(np.hypot(pts[..., 0], pts[..., 1]))
        xmin, xmax, ymin, ymax, nx, ny, vals = self._custom_parts()
        x, y = pts[..., 0], pts[..., 1]
        inside = (x >= xmin) & (x < xmax) & (y >= ymin) & (y < ymax)
        i = np.clip(((x - xmin) / (xmax - xmin) * nx).astype(int), 0, nx - 1)
        j = np.clip(((y - ymin) / (ymax - ymin) * ny).astype(int), 0, ny - 1)
        return np.where(inside, vals[j, i], 0.0)

    def __call__(self, pts) -> np.ndarray:
        pts = np.asarray(pts, dtype=float)
        scaled = np.stack([pts[..., 0] * self.t ** -self.alpha,
                           pts[..., 1] * self.t ** -self.beta], axis=-1)
        return self.base(scaled)

    @property
    def sup(self) -> float:
        if self.is_radial:
            return self.params[0]
        return float(np.max(self._custom_parts()[6]))

    @property
    def inf(self) -> float:
        if self.is_radial:
            return 0.0
        return min(0.0, float(np.min(self._custom_parts()[6])))

    def support_radius(self) -> float:
        """Half-width of a square centred at 0 containing ``{V > 1e-12}``."""
        pr = self.params
        if self.preset in ("bump", "disk_step"):
            return pr[1]
        if self.preset == "gaussian":
            return pr[1] * math.sqrt(2.0 * math.log(max(pr[0], SUPPORT_CUTOFF) / SUPPORT_CUTOFF))
        if self.preset == "annulus":
            return pr[1] + pr[2] * math.sqrt(2.0 * math.log(max(pr[0], SUPPORT_CUTOFF) / SUPPORT_CUTOFF))
        return max(abs(v) for v in pr[:4])

    def integral(self, phi: Callable[[np.ndarray], np.ndarray] = lambda v: v) -> float:
        """``int phi(V_t) dx = t^p int phi(V) dx`` for ``phi(0) = 0``."""
        if self.is_radial:
            prof = _radial_profile(self.preset, self.params)
            R = self.support_radius()
            brk = [self.params[1]] if self.preset in ("bump", "disk_step", "annulus") else None
            val, _ = sint.quad(lambda r: float(phi(np.array(prof(np.array(r))))) * 2 * math.pi * r,
                               0.0, R, points=brk, limit=200, epsabs=1e-13, epsrel=1e-11)
        else:
            xmin, xmax, ymin, ymax, nx, ny, vals = self._custom_parts()
            cell = (xmax - xmin) * (ymax - ymin) / (nx * ny)
            val = float(np.sum(phi(vals)) * cell)
        return self.t ** self.p * val

    def superlevel_measure(self, a: float, closed: bool = False) -> float:
        """Lebesgue measure of ``{V > a}`` (``{V >= a}`` when ``closed``) at ``t = 1``."""
        pr = self.params
        if self.preset == "custom_grid":
            xmin, xmax, ymin, ymax, nx, ny, vals = self._custom_parts()
            cell = (xmax - xmin) * (ymax - ymin) / (nx * ny)
            hit = vals >= a if closed else vals > a
            return float(np.count_nonzero(hit) * cell)
        h = pr[0]
        if a > h or (a == h and not closed):
            return 0.0
        if self.preset == "disk_step":
            return math.pi * pr[1] ** 2
        if self.preset == "bump":
            return math.pi * pr[1] ** 2 * (1.0 - a / h)
        d2 = 2.0 * math.log(h / a)
        if self.preset == "gaussian":
            return math.pi * pr[1] ** 2 * d2
        r0, s = pr[1], pr[2]
        d = s * math.sqrt(d2)
        return math.pi * ((r0 + d) ** 2 - max(r0 - d, 0.0) ** 2)

    def to_json(self) -> dict:
        return {"preset": self.preset, "params": list(self.params),
                "alpha": self.alpha, "beta": self.beta}

    @classmethod
    def from_json(cls, obj: dict, t: float = 1.0) -> "ScaledPotential":
        return cls(obj.get("preset", "bump"), tuple(obj.get("params", ())),
                   float(obj.get("alpha", 1.0)), float(obj.get("beta", 1.0)), t)


# -- kernel -------------------------------------------------------------------

def laguerre(n: int, s):
    """Laguerre polynomial ``L_n(s)`` by the three-term recurrence."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    s = np.asarray(s, dtype=float)
    prev, cur = np.ones_like(s), 1.0 - s
    if n == 0:
        return prev if prev.ndim else float(prev)
    for k in range(1, n):
        prev, cur = cur, ((2 * k + 1 - s) * cur - k * prev) / (k + 1)
    return cur if cur.ndim else float(cur)


def landau_kernel(cfg: LandauConfig, x, y):
    """``P_n(x, y)``; ``x`` and ``y`` broadcast over leading axes, last axis 2."""
    x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
    dx = x[..., 0] - y[..., 0]
    dy = x[..., 1] - y[..., 1]
    r2 = dx * dx + dy * dy
    cross = x[..., 0] * y[..., 1] - x[..., 1] * y[..., 0]
    val = cfg.density * laguerre(cfg.n, 0.5 * cfg.B * r2) * np.exp(
        -0.25 * cfg.B * (r2 + 2j * cross))
    return val if np.ndim(val) else complex(val)


def kernel_matrix(cfg: LandauConfig, xs: np.ndarray, ys: np.ndarray | None = None,
                  left: np.ndarray | None = None, right: np.ndarray | None = None) -> np.ndarray:
    """``diag(left) [P_n(x_i, y_j)] diag(right)`` assembled in row blocks."""
    xs = np.asarray(xs, dtype=float)
    ys = xs if ys is None else np.asarray(ys, dtype=float)
    out = np.empty((len(xs), len(ys)), dtype=complex)
    for lo in range(0, len(xs), ROW_CHUNK):
        blk = landau_kernel(cfg, xs[lo:lo + ROW_CHUNK, None, :], ys[None, :, :])
        if left is not None:
            blk *= left[lo:lo + ROW_CHUNK, None]
        if right is not None:
            blk *= right[None, :]
        out[lo:lo + ROW_CHUNK] = blk
    return out


def _kernel_modsq_pairs(cfg: LandauConfig, xs, ys, other: LandauConfig | None = None) -> np.ndarray:
    """``P_n(x, y) conj(P_m(x, y))``, which is real: the phases cancel."""
    dx = xs[:, None, 0] - ys[None, :, 0]
    dy = xs[:, None, 1] - ys[None, :, 1]
    s = 0.5 * cfg.B * (dx * dx + dy * dy)
    other = other or cfg
    return cfg.density ** 2 * laguerre(cfg.n, s) * laguerre(other.n, s) * np.exp(-s)


# -- quadrature ---------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class QuadratureGrid:
    """Tensor midpoint rule on the square ``[-half_width, half_width]^2``."""

    half_width: float
    n_side: int

    def __post_init__(self):
        if not (self.half_width > 0 and self.n_side >= 1):
            raise ValueError("need half_width > 0 and n_side >= 1")

    @property
    def spacing(self) -> float:
        return 2.0 * self.half_width / self.n_side

    @property
    def box(self) -> tuple[float, float, float, float]:
        R = self.half_width
        return (-R, R, -R, R)

    @property
    def area(self) -> float:
        return (2.0 * self.half_width) ** 2

    @cached_property
    def nodes(self) -> np.ndarray:
        h = self.spacing
        c = -self.half_width + h * (np.arange(self.n_side) + 0.5)
        X, Y = np.meshgrid(c, c, indexing="xy")
        return np.column_stack([X.ravel(), Y.ravel()])

    @cached_property
    def weights(self) -> np.ndarray:
        return np.full(self.n_side ** 2, self.spacing ** 2)

    @property
    def size(self) -> int:
        return self.n_side ** 2

    def refined(self) -> "QuadratureGrid":
        return QuadratureGrid(self.half_width, 2 * self.n_side)


def default_grid(cfg: LandauConfig, pot: ScaledPotential,
                 node_cap: int = DEFAULT_NODE_CAP) -> QuadratureGrid:
    """Box of half-width ``t^max(alpha, beta) * support radius + 3 magnetic lengths``."""
    R = (pot.t ** max(pot.alpha, pot.beta) * pot.support_radius()
         + MARGIN_LENGTHS * cfg.magnetic_length)
    n_side = int(math.isqrt(int(node_cap)))
    if n_side < 1:
        raise ValueError("node_cap too small")
    return QuadratureGrid(R, n_side)


def projection_defect(cfg: LandauConfig, grid: QuadratureGrid) -> float:
    """``max |K^2 - K|`` for ``K_ij = sqrt(w_i w_j) P_n(x_i, x_j)``."""
    sw = np.sqrt(grid.weights)
    K = kernel_matrix(cfg, grid.nodes, left=sw, right=sw)
    return float(np.max(np.abs(K @ K - K)))


# -- level matrices -----------------------------------------------------------

def _top_eigenvalues(K: np.ndarray, floor: float) -> np.ndarray:
    """Eigenvalues of Hermitian ``K`` above ``floor``, descending."""
    m = K.shape[0]
    if m <= DENSE_LIMIT:
        ev = np.linalg.eigvalsh(K)[::-1]
        return ev[ev > floor]
    k = 64
    while True:
        if k >= m // 3:
            ev = np.linalg.eigvalsh(K)[::-1]
            return ev[ev > floor]
        ev = np.sort(spla.eigsh(K, k=k, which="LA", return_eigenvectors=False,
                                v0=np.ones(m, dtype=K.dtype), tol=1e-10))[::-1]
        if ev[-1] <= floor:
            return ev[ev > floor]
        k *= 2


@dataclass(frozen=True, eq=False)
class LevelMatrix:
    """Nystrom matrix of ``P_n V_t P_n``.

    ``nonnegative_V``: ``sqrt(w_i w_j V_i V_j) P_n(x_i, x_j)`` over nodes with
    ``V > 1e-12``. ``split``: ``K diag(V) K`` with ``K = sqrt(w_i w_j) P_n(x_i, x_j)``
    over all box nodes, Hermitian for signed ``V``.
    """

    entries: np.ndarray
    sign_mode: str
    cfg: LandauConfig
    pot: ScaledPotential
    grid: QuadratureGrid
    node_count: int = 0
    refinement: tuple = field(default=())

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def eigenvalues_above(self, floor: float) -> np.ndarray:
        if self.dim == 0:
            return np.zeros(0)
        return _top_eigenvalues(self.entries, floor)

    @cached_property
    def eigenvalues(self) -> np.ndarray:
        """All eigenvalues, ascending."""
        if self.dim == 0:
            return np.zeros(0)
        return np.linalg.eigvalsh(self.entries)

    def count_above(self, a: float) -> int:
        return int(self.eigenvalues_above(a).size)

    def as_operator(self) -> Operator:
        return Operator(self.entries)


def _assemble(cfg, pot, grid, sign_mode):
    V = pot(grid.nodes)
    if sign_mode == "nonnegative_V":
        if np.min(V) < -SUPPORT_CUTOFF:
            raise NegativePotentialInNonnegMode(f"min V_t on grid = {np.min(V):.3e}")
        keep = V > SUPPORT_CUTOFF
        s = np.sqrt(grid.weights[keep] * V[keep])
        K = kernel_matrix(cfg, grid.nodes[keep], left=s, right=s)
    elif sign_mode == "split":
        sw = np.sqrt(grid.weights)
        K0 = kernel_matrix(cfg, grid.nodes, left=sw, right=sw)
        K = (K0 * V[None, :]) @ K0
    else:
        raise ValueError(f"unknown sign_mode {sign_mode!r}")
    return hermitize(K)


def refinement_change(coarse: np.ndarray, fine: np.ndarray) -> float:
    """Largest relative change of the coarse eigenvalues above the floor."""
    if coarse.size == 0:
        return 0.0 if fine.size == 0 or fine[0] <= REFINE_FLOOR / (1 - REFINE_RTOL) else np.inf
    fine = np.concatenate([fine, np.zeros(max(0, coarse.size - fine.size))])
    return float(np.max(np.abs(fine[:coarse.size] - coarse) / coarse))


def build_level_matrix(cfg: LandauConfig, pot: ScaledPotential, grid: QuadratureGrid | None = None,
                       sign_mode: str = "nonnegative_V", check_refinement: bool = True,
                       node_cap: int = DEFAULT_NODE_CAP) -> LevelMatrix:
    """Nystrom discretisation of ``P_n V_t P_n``.

    With ``check_refinement`` the matrix is rebuilt on a grid with doubled
    linear resolution, and every eigenvalue above ``1e-3`` must move by less
    than 5 percent; otherwise :class:`GridTooCoarse` is raised.
    """
    grid = grid or default_grid(cfg, pot, node_cap)
    K = _assemble(cfg, pot, grid, sign_mode)
    refinement = ()
    if check_refinement and K.shape[0]:
        coarse = _top_eigenvalues(K, REFINE_FLOOR)
        fine_grid = grid.refined()
        fine = _top_eigenvalues(_assemble(cfg, pot, fine_grid, sign_mode),
                                REFINE_FLOOR * (1 - REFINE_RTOL))
        change = refinement_change(coarse, fine)
        if not change < REFINE_RTOL:
            raise GridTooCoarse(
                f"eigenvalues moved by {change:.1%} under refinement to {fine_grid.size} nodes")
        refinement = (fine_grid.size, change)
    return LevelMatrix(K, sign_mode, cfg, pot, grid, K.shape[0], refinement)


def signed_count_bound(cfg: LandauConfig, pot: ScaledPotential, a: float,
                       grid: QuadratureGrid | None = None) -> tuple[int, int]:
    """``N((a, inf); P V_t P)`` and its Weyl bound over the split ``V = V+ - V-``."""
    grid = grid or default_grid(cfg, pot)
    V = pot(grid.nodes)
    sw = np.sqrt(grid.weights)
    K0 = kernel_matrix(cfg, grid.nodes, left=sw, right=sw)
    plus = hermitize((K0 * np.clip(V, 0, None)[None, :]) @ K0)
    minus = hermitize((K0 * np.clip(-V, 0, None)[None, :]) @ K0)
    return weyl_bound([plus, -minus], a)


# -- coefficients ---------------------------------------------------------------

@dataclass(frozen=True)
class AsymCoeff:
    """``A(a, V)`` (strict superlevel set) and ``A[a, V]`` (weak)."""

    a: float
    open_value: float
    closed_value: float

    @property
    def is_bracket(self) -> bool:
        return not math.isclose(self.open_value, self.closed_value, rel_tol=1e-12, abs_tol=1e-15)


def asym_coeff(pot: ScaledPotential, cfg: LandauConfig, a: float) -> AsymCoeff:
    """``(B/2 pi) meas{V > a}`` and ``(B/2 pi) meas{V >= a}`` at ``t = 1``."""
    if not a > 0:
        raise ValueError("a must be positive")
    pot = pot.at(1.0)
    return AsymCoeff(float(a), cfg.density * pot.superlevel_measure(a),
                     cfg.density * pot.superlevel_measure(a, closed=True))


def one_sided_limits(pot: ScaledPotential, cfg: LandauConfig, a: float,
                     ks: Sequence[int] = (3, 4, 5, 6)) -> dict:
    """``A(a + 10^-k)`` and ``A(a - 10^-k)``; they tend to ``A(a)`` and ``A[a]``."""
    right = np.array([asym_coeff(pot, cfg, a + 10.0 ** -k).open_value for k in ks])
    left = np.array([asym_coeff(pot, cfg, a - 10.0 ** -k).open_value for k in ks])
    return {"eps": np.array([10.0 ** -k for k in ks]), "right": right, "left": left,
            "coeff": asym_coeff(pot, cfg, a)}


# -- trends and norms -----------------------------------------------------------

def level_counting_trend(cfg: LandauConfig, pot: ScaledPotential, t_grid: Sequence[float],
                         a: float, node_cap: int = DEFAULT_NODE_CAP,
                         check_refinement: bool = True, workers: int = 1) -> TrendReport:
    """``t^-p N((a, inf); P_n V_t P_n)`` along ``t_grid`` against ``[A(a, V), A[a, V]]``."""
    if pot.inf < 0:
        raise NegativePotentialInNonnegMode("trend needs V >= 0")
    coeff = asym_coeff(pot, cfg, a)
    ts = np.asarray(t_grid, dtype=float)

    def one(t):
        lm = build_level_matrix(cfg, pot.at(t), node_cap=node_cap,
                                check_refinement=check_refinement)
        return lm.count_above(a) * t ** -pot.p, lm.grid.size

    if workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            res = list(ex.map(one, ts))
    else:
        res = [one(t) for t in ts]
    vals = np.array([r[0] for r in res])
    nodes = np.array([r[1] for r in res])
    lo = np.full(len(ts), coeff.open_value)
    hi = np.full(len(ts), coeff.closed_value)
    return TrendReport(ts, vals, lo, hi, np.zeros(len(ts), bool), coeff.open_value, nodes)


def _pair_sum(grid: QuadratureGrid, f: Callable[[np.ndarray, np.ndarray], np.ndarray],
              mask: np.ndarray | None = None) -> float:
    """``sum_{i,j} f(i_block, j)`` over the nodes selected by ``mask``, in row blocks."""
    idx = np.arange(grid.size) if mask is None else np.flatnonzero(mask)
    total = 0.0
    for lo in range(0, len(idx), ROW_CHUNK):
        total += float(np.sum(f(idx[lo:lo + ROW_CHUNK], idx)))
    return total


def commutator_hs_norm(cfg: LandauConfig, pot: ScaledPotential,
                       grid: QuadratureGrid | None = None) -> float:
    """``||P_n V_t - V_t P_n||_HS^2 = int int |V_t(x) - V_t(y)|^2 |P_n(x, y)|^2``."""
    grid = grid or default_grid(cfg, pot)
    x, w, V = grid.nodes, grid.weights, pot(grid.nodes)
    if not np.any(V):
        return 0.0

    def f(i, j):
        return (w[i, None] * w[None, j] * (V[i, None] - V[None, j]) ** 2
                * _kernel_modsq_pairs(cfg, x[i], x[j]))

    return max(_pair_sum(grid, f), 0.0)


def cross_term_hs(cfg: LandauConfig, m: int, pot: ScaledPotential,
                  grid: QuadratureGrid | None = None) -> float:
    """``||P_n V_t P_m||_HS^2 = int int V_t(x) V_t(y) P_n(x, y) conj(P_m(x, y))`` for ``m != n``."""
    if m == cfg.n:
        raise ValueError("need distinct levels")
    grid = grid or default_grid(cfg, pot)
    other = cfg.with_level(m)
    x, w, V = grid.nodes, grid.weights, pot(grid.nodes)
    mask = np.abs(V) > 0
    if not np.any(mask):
        return 0.0

    def f(i, j):
        return (w[i, None] * w[None, j] * V[i, None] * V[None, j]
                * _kernel_modsq_pairs(cfg, x[i], x[j], other))

    return max(_pair_sum(grid, f, mask), 0.0)


PHI_NAMES = ("identity", "square", "smoothed_step")


def make_phi(name: str, a: float | None = None, width: float | None = None):
    """``(phi, sup |phi''|)`` for one of the admissible test functions."""
    if name == "identity":
        return (lambda v: np.asarray(v, dtype=float)), 0.0
    if name == "square":
        return (lambda v: np.asarray(v, dtype=float) ** 2), 2.0
    if name == "smoothed_step":
        if a is None or width is None or not width > 0:
            raise ValueError("smoothed_step needs a and width > 0")
        lo = a - 0.5 * width

        def phi(v):
            u = np.clip((np.asarray(v, dtype=float) - lo) / width, 0.0, 1.0)
            return u * u * (3.0 - 2.0 * u)

        if abs(float(phi(0.0))) > 0:
            raise PhiNotAdmissible("phi(0) != 0: the step must start above 0")
        return phi, 6.0 / width ** 2
    raise PhiNotAdmissible(f"unknown phi {name!r}")


def trace_phi_check(cfg: LandauConfig, pot: ScaledPotential, phi: str = "identity",
                    a: float | None = None, width: float | None = None,
                    grid: QuadratureGrid | None = None) -> tuple[float, float, float]:
    """``(Tr phi(P V_t P), (B/2 pi) int phi(V_t), bound)``.

    ``bound = sup|phi''|/2 * ||P_n V_t (I - P_n)||_HS^2`` and the last norm is
    half the squared commutator norm. For ``phi = identity`` both sides agree
    up to quadrature error.
    """
    fn, d2 = make_phi(phi, a, width)
    grid = grid or default_grid(cfg, pot)
    lm = build_level_matrix(cfg, pot, grid, check_refinement=False)
    if lm.dim == 0:
        lhs = 0.0
    elif phi == "identity":
        lhs = float(np.trace(lm.entries).real)
    elif phi == "square":
        lhs = float(np.sum(np.abs(lm.entries) ** 2))
    else:
        lhs = float(np.sum(fn(lm.eigenvalues_above(a - 0.5 * width))))
    rhs = cfg.density * pot.integral(fn)
    bound = 0.5 * d2 * 0.5 * commutator_hs_norm(cfg, pot, grid) if d2 else 0.0
    return lhs, rhs, bound
