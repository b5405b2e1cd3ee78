import json

import numpy as np
import pytest

from specgap.errors import ConfigInvalid
from specgap.instances import (
    KINDS,
    LEVEL_MARGIN,
    draw,
    generate_instance_bank,
    load_instance_bank,
    operator_hash,
)


@pytest.mark.parametrize("kind", KINDS)
def test_draw_is_deterministic(kind):
    a = draw(kind, np.random.default_rng([3, 1]), 6)
    b = draw(kind, np.random.default_rng([3, 1]), 6)
    assert json.dumps(a.to_json()) == json.dumps(b.to_json())
    a.check()


def test_gapped_level_keeps_margin(rng):
    for _ in range(50):
        g = draw("gapped", rng, 5)
        for op in (g.M, g.M + g.A):
            assert np.min(np.abs(op.eigenvalues - g.lam)) > LEVEL_MARGIN


def test_block_model_level_sits_in_gap(rng):
    for dim in (2, 3, 8, 11):
        b = draw("block_model", rng, dim)
        assert np.all(np.abs(b.model.h0.eigenvalues - b.lam) > b.a)


def test_bank_roundtrip(tmp_path):
    path = tmp_path / "bank.json"
    bank = generate_instance_bank(5, 4, 5, "factorized", path)
    assert bank["count"] == 4
    items = load_instance_bank(path)
    assert len(items) == 4
    again = tmp_path / "again.json"
    generate_instance_bank(5, 4, 5, "factorized", again)
    assert path.read_bytes() == again.read_bytes()


def test_empty_bank(tmp_path):
    bank = generate_instance_bank(1, 0, 4, "split", tmp_path / "b.json")
    assert bank["instances"] == [] and load_instance_bank(bank) == []


def test_bank_rejects_bad_input(tmp_path):
    with pytest.raises(ConfigInvalid):
        generate_instance_bank(1, 2, 4, "nonsense")
    bank = generate_instance_bank(1, 1, 4, "gapped")
    bank["instances"][0]["lam"] = float(np.linalg.eigvalsh(np.array(bank["instances"][0]["M"]["real"]))[0])
    with pytest.raises(ConfigInvalid):
        load_instance_bank(bank)
    with pytest.raises(ConfigInvalid):
        load_instance_bank({"kind": "gapped"})


def test_operator_hash_is_stable():
    a = np.arange(6.0).reshape(2, 3)
    assert operator_hash(a) == operator_hash(a.copy())
    assert operator_hash(a) != operator_hash(a.T)
