import json

import pytest

from casinject.config import ConfigError, ExperimentConfig, HeatmapSpec, config_from_dict, load_config
from casinject.engine import ReturnBehavior


def test_defaults():
    cfg = load_config(None)
    assert cfg == ExperimentConfig()
    assert cfg.workers == 1 and cfg.heatmap.nx == 6


def test_round_trip(tmp_path):
    cfg = config_from_dict({
        "airport": "XYZ",
        "center": [51.5, -0.4],
        "optimizer": {"restarts": 3},
        "response": {"response_delay": 5, "return_behavior": "hold_new_level"},
        "cas": {"ra_vertical_ft": 550},
        "heatmap": {"nx": 4, "ny": 5, "bbox": [0, 0, 10, 10], "containment": "partly"},
        "seed": 7,
    })
    assert cfg.response.return_behavior is ReturnBehavior.HOLD_NEW_LEVEL
    assert cfg.heatmap.bbox == (0.0, 0.0, 10.0, 10.0)
    path = tmp_path / "c.json"
    path.write_text(json.dumps(cfg.to_dict()))
    assert load_config(path) == cfg


@pytest.mark.parametrize(
    "data",
    [
        {"bogus": 1},
        {"optimizer": {"restart": 3}},
        {"workers": 0},
        {"heatmap": {"nx": 0}},
        {"heatmap": {"bbox": [10, 0, 0, 10]}},
        {"heatmap": {"containment": "most"}},
        {"response": {"return_behavior": "fly_home"}},
        {"cas": {"ra_vertical": 1}},
        {"alt_unit": "yards"},
        {"pipeline": []},
    ],
)
def test_invalid(data):
    with pytest.raises(ConfigError):
        config_from_dict(data)


def test_seed_fan_out():
    cfg = ExperimentConfig(seed=3)
    assert cfg.seed_for("a") == cfg.seed_for("a")
    assert cfg.seed_for("a") != cfg.seed_for("b")
    assert ExperimentConfig(seed=4).seed_for("a") != cfg.seed_for("a")


def test_heatmap_points_are_cell_centres():
    pts = HeatmapSpec(2, 2).points((0.0, 0.0, 4.0, 2.0))
    assert pts == [(0, 0, 1.0, 0.5), (0, 1, 3.0, 0.5), (1, 0, 1.0, 1.5), (1, 1, 3.0, 1.5)]
