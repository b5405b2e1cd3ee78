"""Acceptance checks, one ``criterion`` marker per numbered requirement.

Randomised relations are run on fresh seeded instances. A draw that lands on
a spectral collision is redrawn with the next attempt seed; the number of
redraws is reported but never counted as a pass.
"""

import csv
import io
import time

import numpy as np
import pytest

from specgap import sweeps
from specgap.cli import main
from specgap.landau import (
    LandauConfig,
    ScaledPotential,
    commutator_hs_norm,
    cross_term_hs,
    default_grid,
    landau_kernel,
    level_counting_trend,
    projection_defect,
    QuadratureGrid,
    trace_phi_check,
)
from specgap.spectral_flow import PathFamily, sflow

MAX_REDRAWS = 25


def run_relation(check, n, dim_range, seed, **kw):
    """Run ``check`` on ``n`` instances; return (failures, redraws)."""
    failures, redraws = [], 0
    for i in range(n):
        for attempt in range(MAX_REDRAWS):
            rng = np.random.default_rng([seed, i, attempt])
            dim = int(rng.integers(dim_range[0], dim_range[1] + 1))
            try:
                out = check(rng, dim, trial=i, **kw)
            except sweeps.SKIP_ERRORS:
                redraws += 1
                continue
            if not out.passed:
                failures.append((i, out))
            break
        else:
            failures.append((i, "no admissible draw"))
    return failures, redraws


def assert_clean(name, failures, redraws, n):
    print(f"{name}: {n - len(failures)}/{n} pass, {redraws} redraws")
    assert not failures, failures[:3]


XI = sweeps.RELATIONS["verify-xi"]
BS = sweeps.RELATIONS["verify-bs"]
SAF = sweeps.RELATIONS["verify-safronov"]


@pytest.mark.criterion(1, "xi agrees with the eigenvalue-count oracle")
def test_c1_xi_oracle():
    t0 = time.perf_counter()
    f, r = run_relation(XI["oracle"], 1000, (2, 12), 101)
    elapsed = time.perf_counter() - t0
    assert_clean("oracle", f, r, 1000)
    assert elapsed < 10.0, elapsed


@pytest.mark.criterion(2, "chain rule, antisymmetry and counting identity")
def test_c2_identities():
    t0 = time.perf_counter()
    for k, name in enumerate(("chain", "antisymmetry", "counting")):
        f, r = run_relation(XI[name], 1000, (2, 12), 200 + k)
        assert_clean(name, f, r, 1000)
    assert time.perf_counter() - t0 < 30.0


@pytest.mark.criterion(3, "rank, monotonicity, shift and block-diagonal bounds")
@pytest.mark.parametrize("name", ["rank_bounds", "monotonicity", "shift_bounds", "diag_trick"])
def test_c3_inequalities(name):
    f, r = run_relation(XI[name], 1000, (2, 12), 300 + len(name))
    assert_clean(name, f, r, 1000)


@pytest.mark.criterion(4, "net spectral flow equals xi")
def test_c4_flow_random_paths():
    f, r = run_relation(sweeps.RELATIONS["verify-flow"]["net_equals_xi"], 500, (2, 10), 400)
    assert_clean("net_equals_xi", f, r, 500)


@pytest.mark.criterion(4, "net spectral flow equals xi")
def test_c4_flow_hand_examples():
    up = sflow(1.0, PathFamily(np.diag([0.0, 2.0]), np.diag([3.0, 0.0])))
    assert up.net == 1
    np.testing.assert_allclose(up.crossing_times, [1 / 3], atol=1e-6)
    down = sflow(1.5, PathFamily(np.array([[2.0]]), np.array([[-1.0]])))
    assert down.net == -1
    np.testing.assert_allclose(down.crossing_times, [0.5], atol=1e-6)


@pytest.mark.criterion(5, "generalised Birman-Schwinger principle and its special cases")
def test_c5_principle():
    f, r = run_relation(BS["principle"], 1000, (2, 12), 500)
    assert_clean("principle", f, r, 1000)


@pytest.mark.criterion(5, "generalised Birman-Schwinger principle and its special cases")
@pytest.mark.parametrize("name", ["dual", "below_spectrum", "sign_plus", "sign_minus",
                                  "gap_counting", "nullity", "congruence", "block_identity"])
def test_c5_specialisations(name):
    f, r = run_relation(BS[name], 500, (2, 12), 510 + len(name))
    assert_clean(name, f, r, 500)


@pytest.mark.criterion(6, "splitting sandwich, product symmetry and Weyl inequality")
@pytest.mark.parametrize("name", ["sandwich", "product_symmetry"])
def test_c6_sandwich(name):
    f, r = run_relation(SAF[name], 1000, (2, 12), 600 + len(name))
    assert_clean(name, f, r, 1000)


@pytest.mark.criterion(6, "splitting sandwich, product symmetry and Weyl inequality")
def test_c6_weyl():
    # trial index cycles through ell = 1, 2, 3, 5
    f, r = run_relation(SAF["weyl"], 1000, (2, 12), 650)
    assert_clean("weyl", f, r, 1000)


@pytest.mark.criterion(7, "finite-t block chain")
@pytest.mark.parametrize("t", sweeps.E1_T)
def test_c7_block_chain(t):
    f, r = run_relation(sweeps.e1_chain, 300, (4, 12), 700 + int(t), t=t)
    assert_clean(f"e1 t={t}", f, r, 300)


@pytest.mark.criterion(8, "Landau kernel diagonal and projection defect")
def test_c8_kernel_and_defect():
    for B in (0.5, 1.0, 2.5):
        for n in (0, 1, 3):
            cfg = LandauConfig(B, n)
            x = np.random.default_rng(8).standard_normal((20, 2)) * 3
            np.testing.assert_allclose(landau_kernel(cfg, x, x), B / (2 * np.pi), rtol=1e-14)
    cfg = LandauConfig(1.0, 0)
    grid = default_grid(cfg, ScaledPotential("bump"))
    assert grid.n_side == 64
    defect = projection_defect(cfg, grid)
    print(f"defect at 64x64: {defect:.3g}")
    assert defect <= 0.02


@pytest.mark.criterion(9, "scaled level counting approaches its target")
@pytest.mark.parametrize("n", [0, 1])
def test_c9_counting_trend(n):
    cfg = LandauConfig(1.0, n)
    pot = ScaledPotential("bump", alpha=1.0, beta=1.0)
    t0 = time.perf_counter()
    rep = level_counting_trend(cfg, pot, [2, 4, 6, 8], 0.5)
    elapsed = time.perf_counter() - t0
    for row in rep.rows():
        print(row)
    print(f"n={n}: {elapsed:.1f} s")
    assert rep.target == pytest.approx(0.25)
    dev = np.abs(rep.scaled_values - rep.target)
    assert dev[-1] <= 0.2 * rep.target
    assert np.all(np.diff(dev[1:]) <= 1e-12)
    assert elapsed < 300.0


@pytest.mark.criterion(10, "commutator and cross-term decay, trace identity")
@pytest.mark.parametrize("preset", ["bump", "gaussian"])
def test_c10_decay_and_trace(preset):
    cfg = LandauConfig(1.0, 0)
    pot = ScaledPotential(preset)
    comm, cross = [], []
    for t in (2.0, 4.0, 8.0):
        pt = pot.at(t)
        grid = default_grid(cfg, pt)
        comm.append(commutator_hs_norm(cfg, pt, grid) / t ** pot.p)
        cross.append(cross_term_hs(cfg, 1, pt, grid) / t ** pot.p)
        lhs, rhs, _ = trace_phi_check(cfg, pt, "identity", grid=grid)
        assert abs(lhs - rhs) <= 0.01 * abs(rhs), (t, lhs, rhs)
    print(preset, comm, cross)
    assert np.all(np.diff(comm) < 0)
    assert np.all(np.diff(cross) < 0)


def _strip_timing(text):
    rows = list(csv.DictReader(io.StringIO(text)))
    for row in rows:
        row.pop("wall_time_ms", None)
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
    w.writeheader()
    w.writerows(rows)
    return buf.getvalue()


@pytest.mark.criterion(11, "CLI output is reproducible")
@pytest.mark.parametrize("command", ["verify-xi", "verify-bs", "verify-safronov", "verify-e1"])
def test_c11_cli_determinism(tmp_path, monkeypatch, command):
    monkeypatch.setenv("SPECGAP_THREADS", "3")
    outs = []
    for k in range(2):
        out = tmp_path / f"run{k}.csv"
        assert main([command, "--seed", "11", "--trials", "25", "--out", str(out)]) == 0
        outs.append(_strip_timing(out.read_text()))
    assert outs[0] == outs[1]


@pytest.mark.criterion(11, "CLI output is reproducible")
def test_c11_landau_determinism(tmp_path):
    outs = []
    for k in range(2):
        out = tmp_path / f"hs{k}.json"
        params = '{"preset": "gaussian", "t_grid": [1, 2], "node_cap": 1024}'
        assert main(["landau-hs", "--params", params, "--out", str(out)]) == 0
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]
