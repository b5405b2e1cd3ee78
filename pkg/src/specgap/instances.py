"""Seeded random instances for sweeps and instance banks.

Every generator takes a ``numpy.random.Generator`` and draws the spectral
level ``lam`` last, resampling it until it keeps a fixed distance from the
spectra of all operators the checks for that kind will touch.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .asymptotics import BlockModel, SplitPerturbation, random_block_model
from .birman_schwinger import Factorization
from .errors import ConfigInvalid, ConvergenceFailure
from .operator_core import (
    Operator,
    Projection,
    matrix_from_json,
    matrix_to_json,
    random_hermitian,
    random_psd,
    with_spectrum,
)

LEVEL_MARGIN = 1e-3
LEVEL_TRIES = 200
SAFRONOV_A = (0.1, 0.5, 0.9)
KINDS = ("gapped", "factorized", "split", "block_model")


def _min_distance(ops: Sequence[Operator], lam: float) -> float:
    return min(float(np.min(np.abs(op.eigenvalues - lam))) for op in ops)


def sample_level(rng: np.random.Generator, ops: Sequence[Operator], lo: float = -2.5,
                 hi: float = 2.5, margin: float = LEVEL_MARGIN) -> float:
    """Uniform level in ``[lo, hi]`` at least ``margin`` away from every spectrum in ``ops``."""
    for _ in range(LEVEL_TRIES):
        lam = float(rng.uniform(lo, hi))
        if _min_distance(ops, lam) > margin:
            return lam
    raise ConvergenceFailure("could not place a level off the spectra")


def _coin(rng: np.random.Generator, complex_: bool | None) -> bool:
    return bool(rng.integers(2)) if complex_ is None else bool(complex_)


def random_signed(rng: np.random.Generator, dim: int, complex_: bool, scale: float = 1.0) -> Operator:
    """Hermitian matrix of random rank and random inertia."""
    rank = int(rng.integers(1, dim + 1))
    ev = np.zeros(dim)
    ev[:rank] = scale * rng.standard_normal(rank)
    return Operator(with_spectrum(rng, rng.permutation(ev), complex_))


@dataclass(frozen=True, eq=False)
class GappedInstance:
    M: Operator
    A: Operator
    lam: float

    kind = "gapped"

    @classmethod
    def draw(cls, rng: np.random.Generator, dim: int, complex_: bool | None = None):
        c = _coin(rng, complex_)
        M = Operator(random_hermitian(rng, dim, 1.5, c))
        A = random_signed(rng, dim, c)
        return cls(M, A, sample_level(rng, [M, M + A]))

    def check(self) -> None:
        if _min_distance([self.M, self.M + self.A], self.lam) <= LEVEL_MARGIN:
            raise ConfigInvalid("gapped instance: lam too close to a spectrum")

    def to_json(self) -> dict:
        return {"M": self.M.to_json(), "A": self.A.to_json(), "lam": self.lam}

    @classmethod
    def from_json(cls, obj: dict):
        return cls(Operator.from_json(obj["M"]), Operator.from_json(obj["A"]), float(obj["lam"]))


@dataclass(frozen=True, eq=False)
class FactorizedInstance:
    M: Operator
    fact: Factorization
    lam: float

    kind = "factorized"

    @classmethod
    def draw(cls, rng: np.random.Generator, dim: int, complex_: bool | None = None,
             j_sign: int | None = None):
        """``j_sign`` forces ``J = +I`` or ``-I``; by default ``J`` is sign indefinite."""
        c = _coin(rng, complex_)
        k = int(rng.integers(1, dim + 1))
        M = Operator(random_hermitian(rng, dim, 1.5, c))
        G = rng.standard_normal((k, dim)) / np.sqrt(dim)
        if c:
            G = G + 1j * rng.standard_normal((k, dim)) / np.sqrt(dim)
        if j_sign in (1, -1):
            J = j_sign * np.eye(k)
        else:
            J = with_spectrum(rng, rng.choice([-1, 1], k) * rng.uniform(0.3, 2.0, k), c)
        fact = Factorization(G, J)
        lam = sample_level(rng, [M, M + fact.perturbation()])
        return cls(M, fact, lam)

    def check(self) -> None:
        if _min_distance([self.M, self.M + self.fact.perturbation()], self.lam) <= LEVEL_MARGIN:
            raise ConfigInvalid("factorized instance: lam too close to a spectrum")

    def to_json(self) -> dict:
        return {"M": self.M.to_json(), "factorization": self.fact.to_json(), "lam": self.lam}

    @classmethod
    def from_json(cls, obj: dict):
        return cls(Operator.from_json(obj["M"]), Factorization.from_json(obj["factorization"]),
                   float(obj["lam"]))


def _split_ops(H0: Operator, split: SplitPerturbation, a_values=SAFRONOV_A) -> list[Operator]:
    vp, vm = split.v_plus, split.v_minus
    ops = [H0, H0 + vp - vm]
    for a in a_values:
        for c in (1.0 / (1.0 - a), 1.0 / (1.0 + a)):
            ops += [H0 + vp * c, H0 - vm * c]
    return ops


@dataclass(frozen=True, eq=False)
class SplitInstance:
    H0: Operator
    split: SplitPerturbation
    lam: float

    kind = "split"

    @classmethod
    def draw(cls, rng: np.random.Generator, dim: int, complex_: bool | None = None,
             a_values: Sequence[float] = SAFRONOV_A):
        c = _coin(rng, complex_)
        H0 = Operator(random_hermitian(rng, dim, 1.5, c))
        vp = random_psd(rng, dim, int(rng.integers(1, dim + 1)), 1.0, c)
        vm = random_psd(rng, dim, int(rng.integers(1, dim + 1)), 1.0, c)
        split = SplitPerturbation(Operator(vp), Operator(vm))
        return cls(H0, split, sample_level(rng, _split_ops(H0, split, a_values)))

    def check(self) -> None:
        if _min_distance(_split_ops(self.H0, self.split), self.lam) <= LEVEL_MARGIN:
            raise ConfigInvalid("split instance: lam too close to a spectrum")

    def to_json(self) -> dict:
        return {"H0": self.H0.to_json(), "v_plus": self.split.v_plus.to_json(),
                "v_minus": self.split.v_minus.to_json(), "lam": self.lam}

    @classmethod
    def from_json(cls, obj: dict):
        split = SplitPerturbation(Operator.from_json(obj["v_plus"]), Operator.from_json(obj["v_minus"]))
        return cls(Operator.from_json(obj["H0"]), split, float(obj["lam"]))


@dataclass(frozen=True, eq=False)
class BlockModelInstance:
    """Block model with ``lam`` in a gap between blocks and ``[lam - a, lam + a]`` inside it."""

    model: BlockModel
    lam: float
    a: float
    eps: float

    kind = "block_model"

    @classmethod
    def draw(cls, rng: np.random.Generator, dim: int, complex_: bool | None = None,
             spacing: float = 3.0, width: float = 1.0):
        c = _coin(rng, complex_)
        n_blocks = max(2, min(4, dim // 2))
        sizes = np.full(n_blocks, dim // n_blocks)
        sizes[: dim % n_blocks] += 1
        model = random_block_model(rng, tuple(int(s) for s in sizes), spacing, width, 1.0, c)
        gap = int(rng.integers(0, n_blocks - 1))
        centre = gap * spacing + width + 0.5 * (spacing - width)
        a = float(rng.uniform(0.1, 0.4))
        lam = float(centre + rng.uniform(-0.5, 0.5) * (spacing - width - 2 * a - 0.1))
        eps = float(rng.choice([0.5, 1.0, 2.0]))
        return cls(model, lam, a, eps)

    def check(self) -> None:
        ev = self.model.h0.eigenvalues
        if np.any(np.abs(ev - self.lam) <= self.a + LEVEL_MARGIN):
            raise ConfigInvalid("block model: [lam - a, lam + a] meets the spectrum of H0")

    def to_json(self) -> dict:
        m = self.model
        return {"h0": m.h0.to_json(), "projections": [matrix_to_json(P.entries) for P in m.projections],
                "block_infima": m.block_infima.tolist(), "V": m.V.to_json(),
                "lam": self.lam, "a": self.a, "eps": self.eps}

    @classmethod
    def from_json(cls, obj: dict):
        model = BlockModel(Operator.from_json(obj["h0"]),
                           tuple(Projection(matrix_from_json(p)) for p in obj["projections"]),
                           np.array(obj["block_infima"], dtype=float), Operator.from_json(obj["V"]))
        return cls(model, float(obj["lam"]), float(obj["a"]), float(obj["eps"]))


KIND_CLASSES = {cls.kind: cls for cls in
                (GappedInstance, FactorizedInstance, SplitInstance, BlockModelInstance)}


def draw(kind: str, rng: np.random.Generator, dim: int, **kw):
    try:
        cls = KIND_CLASSES[kind]
    except KeyError:
        raise ConfigInvalid(f"unknown instance kind {kind!r}; expected one of {KINDS}") from None
    return cls.draw(rng, dim, **kw)


def generate_instance_bank(seed: int, count: int, dim: int, kind: str, path=None) -> dict:
    """Deterministic bank of ``count`` instances; instance ``i`` uses ``default_rng([seed, i])``."""
    if kind not in KIND_CLASSES:
        raise ConfigInvalid(f"unknown instance kind {kind!r}; expected one of {KINDS}")
    if count < 0 or dim < 2:
        raise ConfigInvalid("need count >= 0 and dim >= 2")
    bank = {"kind": kind, "seed": int(seed), "dim": int(dim), "count": int(count),
            "instances": [draw(kind, np.random.default_rng([seed, i]), dim).to_json()
                          for i in range(count)]}
    if path is not None:
        with open(path, "w") as fh:
            json.dump(bank, fh, sort_keys=True)
            fh.write("\n")
    return bank


def load_instance_bank(source) -> list:
    """Read a bank (path or dict) and re-check every instance against its kind."""
    if not isinstance(source, dict):
        with open(source) as fh:
            source = json.load(fh)
    try:
        cls = KIND_CLASSES[source["kind"]]
        items = [cls.from_json(obj) for obj in source["instances"]]
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigInvalid(f"malformed instance bank: {exc}") from exc
    for item in items:
        item.check()
    return items


def operator_hash(*mats) -> str:
    """Short digest of the instance matrices (any shape), stable across runs."""
    h = hashlib.sha1()
    for m in mats:
        a = np.ascontiguousarray(m.entries if isinstance(m, Operator) else np.atleast_2d(m))
        h.update(str(a.shape).encode())
        h.update(a.astype(complex).tobytes())
    return h.hexdigest()[:12]
