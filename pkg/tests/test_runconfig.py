import json

import pytest

from app.errors import ValidationError
from app.runconfig import (
    RunConfig,
    dump_csv,
    load_angles,
    parse_instance,
    parse_orders,
    parse_schedule,
    sibling_path,
    stable_digest,
)


class TestShorthands:

    @pytest.mark.parametrize("value, expected", [
        ("two_level", {"kind": "two_level"}),
        ("pair", {"kind": "two_level"}),
        ("single_spin", {"kind": "single_spin"}),
        ("ring:8", {"kind": "ising_ring", "N": 8}),
        ("path:3", {"kind": "maxcut", "edges": [[0, 1], [1, 2]]}),
        ("regular:3:10:5", {"kind": "regular", "degree": 3, "n": 10, "seed": 5}),
    ])
    def test_instances(self, value, expected):
        assert parse_instance(value) == expected

    def test_seed_fills_regular_graphs(self):
        assert parse_instance("regular:3:10", seed=2)["seed"] == 2
        assert parse_instance("regular:3:10:5", seed=2)["seed"] == 5

    @pytest.mark.parametrize("value", ["ring", "ring:x", "torus:4", None])
    def test_bad_instances(self, value):
        with pytest.raises(ValidationError):
            parse_instance(value)

    def test_schedules(self):
        assert parse_schedule("power_law:0.5@3") == {
            "lambda": {"form": "power_law", "params": {"r": 0.5}}, "s": {"form": "zero"}, "T": 3.0,
        }
        assert parse_schedule("sine:-0.1")["s"] == {"form": "sine", "params": {"s0": -0.1}}
        assert parse_schedule(None, total_time=2)["T"] == 2.0
        with pytest.raises(ValidationError):
            parse_schedule("cubic")

    @pytest.mark.parametrize("value", ["4", "0,2", "6,2", "4,4", "a,b"])
    def test_bad_orders(self, value):
        with pytest.raises(ValidationError):
            parse_orders(value)

    def test_orders(self):
        assert parse_orders("5,3") == (5, 3)
        assert parse_orders([2, 1]) == (2, 1)


class TestRunConfig:

    def test_digest_ignores_output_path(self):
        a = RunConfig.build("derive", instance="ring:6", p="3", out="a.json")
        b = RunConfig.build("derive", instance="ring:6", p="3", out="b.json")
        assert a.digest == b.digest
        assert a.digest != RunConfig.build("derive", instance="ring:6", p="4").digest

    def test_layers(self, tmp_path):
        path = tmp_path / "run.json"
        path.write_text(json.dumps({"instance": {"kind": "ising_ring", "N": 10}, "p": [2],
                                    "optimizer": {"maxfev": 50}}))
        config = RunConfig.build("derive", str(path), {"NM_MAXFEV": 800, "BCH_ORDER": 3, "MAGNUS_ORDER": 2},
                                 p="4")
        assert config.instance == {"kind": "ising_ring", "N": 10}
        assert config.p == [4]
        assert config.orders == (3, 2)
        assert config.optimizer["maxfev"] == 50

    def test_prune_threshold_comes_from_app_config(self):
        config = RunConfig.build("alpha", None, {"PAULI_PRUNE_THRESHOLD": 1e-10})
        assert config.numeric("prune_threshold") == 1e-10
        assert RunConfig.build("alpha").numeric("prune_threshold") == pytest.approx(1e-14)

    def test_unknown_optimizer_setting(self, tmp_path):
        path = tmp_path / "run.json"
        path.write_text(json.dumps({"optimizer": {"temperature": 1.0}}))
        with pytest.raises(ValidationError):
            RunConfig.build("derive", str(path))

    def test_stable_digest_ignores_key_order(self):
        assert stable_digest({"a": 1, "b": [1, 2]}) == stable_digest({"b": [1, 2], "a": 1})


class TestFiles:

    def test_load_angles_csv(self, tmp_path):
        path = tmp_path / "angles.csv"
        path.write_text(dump_csv(["q", "gamma", "beta"], [[1, 0.1, 0.2], [2, 0.3, 0.4]], digest="abc"))
        angles = load_angles(str(path))
        assert angles.gammas == pytest.approx([0.1, 0.3])
        assert angles.betas == pytest.approx([0.2, 0.4])

    def test_load_angles_from_report(self, tmp_path):
        path = tmp_path / "report.json"
        path.write_text(json.dumps({"angles": {"gammas": [0.5], "betas": [0.25], "taus": [0.75]}}))
        angles = load_angles(str(path))
        assert angles.p == 1
        assert angles.taus is None

    def test_csv_without_columns(self, tmp_path):
        path = tmp_path / "angles.csv"
        path.write_text("a,b\n1,2\n")
        with pytest.raises(ValidationError):
            load_angles(str(path))

    def test_unreadable_json(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text("{")
        with pytest.raises(ValidationError):
            load_angles(str(path))

    def test_sibling_path(self):
        assert sibling_path("out/run.json", ".csv") == "out/run.csv"
