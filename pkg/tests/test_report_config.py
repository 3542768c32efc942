import json

import numpy as np
import pytest

from parabmo.config import CONFIG_SCHEMA_VERSION, ConfigError, load_config, parse_config
from parabmo.fitting import EnvelopeFit
from parabmo.report import (
    BaselineStore,
    _plain,
    config_hash,
    read_report,
    report_document,
    svg_loglog,
    write_json,
)


def test_plain_is_json_safe():
    obj = {"a": np.float64(1.5), "b": np.arange(3), "c": np.bool_(True), "d": float("inf"),
           "e": 1 + 2j, 3: (np.int64(4),)}
    out = _plain(obj)
    assert out == {"a": 1.5, "b": [0, 1, 2], "c": True, "d": "inf", "e": [1.0, 2.0], "3": [4]}
    json.dumps(out)


def test_config_hash_is_order_independent():
    assert config_hash({"a": 1, "b": [1.0, 2.0]}) == config_hash({"b": [1.0, 2.0], "a": 1})
    assert config_hash({"a": 1}) != config_hash({"a": 2})


def test_report_document_round_trip(tmp_path):
    doc = report_document({"verdict": "pass"}, {"seed": 1}, timestamp="t0")
    path = write_json(doc, tmp_path / "r.json")
    assert read_report(path) == doc
    (tmp_path / "bad.json").write_text("{}")
    with pytest.raises(ValueError):
        read_report(tmp_path / "bad.json")


def test_baseline_store(tmp_path):
    pin = BaselineStore(tmp_path, update=True)
    assert pin.check("x/y", 2.0, 1e-3)["status"] == "pinned"
    pin.save()
    store = BaselineStore(tmp_path)
    assert store.check("x/y", 2.001, 1e-6)["status"] == "match"  # pinned tolerance wins
    assert store.check("x/y", 2.1, 1e-3)["status"] == "drift"
    assert store.check("other", 1.0, 1e-3)["status"] == "unpinned"
    (tmp_path / "baselines.json").write_text(json.dumps({"schema_version": 99, "entries": {}}))
    with pytest.raises(ValueError):
        BaselineStore(tmp_path)


def test_svg_contains_points_and_fit():
    x = np.logspace(0, 2, 5)
    svg = svg_loglog(EnvelopeFit(x, 3 * x**-0.5, -0.5, label="a<b").to_dict())
    assert svg.startswith("<svg") and svg.count("<circle") == 5
    assert "a&lt;b" in svg and "<polyline" in svg


def test_unknown_key_is_named():
    with pytest.raises(ConfigError) as exc:
        parse_config({"experiment": "kernel-oracle", "grid": {"lenght": 3.0}})
    assert exc.value.key == "grid.lenght"
    with pytest.raises(ConfigError) as exc:
        parse_config({"experiment": "kernel-oracle", "colour": 1})
    assert exc.value.key == "colour"


def test_schema_and_value_validation():
    with pytest.raises(ConfigError) as exc:
        parse_config({"schema_version": CONFIG_SCHEMA_VERSION + 1, "experiment": "kernel-oracle"})
    assert exc.value.key == "schema_version"
    for raw, key in [
        ({"grid": {"n": 100}}, "grid"),
        ({"grid": {"length": -1.0}}, "grid.length"),
        ({"seed": -1}, "seed"),
        ({"workers": 0}, "workers"),
        ({"params": {"duration": "long"}}, "params.duration"),
    ]:
        with pytest.raises(ConfigError) as exc:
            parse_config({"experiment": "kernel-oracle", **raw})
        assert exc.value.key == key
    with pytest.raises(ConfigError):
        parse_config({"experiment": "bogus"})
    with pytest.raises(ConfigError):
        parse_config({"experiment": "kernel-oracle"}, "lp-certify")


def test_defaults_and_overrides():
    cfg = parse_config({"experiment": "lp-certify", "seed": 4, "grid": {"n": 64}})
    assert cfg.grid == {"dim": 1, "n": 64, "length": 20.0}
    assert cfg.make_times().size == 401
    corpus = cfg.make_corpus(2.0)
    assert corpus.seed == 4 and corpus.normalization == 2.0 and corpus.time_window == (0.0, 4.0)
    assert cfg.make_symbol().nu == 0.5
    assert cfg.to_dict()["schema_version"] == CONFIG_SCHEMA_VERSION


def test_load_config(tmp_path):
    p = tmp_path / "c.toml"
    p.write_text('experiment = "shift-scaling"\nseed = 2\n[grid]\nn = 512\n')
    cfg = load_config(p)
    assert cfg.seed == 2 and cfg.grid["n"] == 512
    p.write_text("experiment = [")
    with pytest.raises(ConfigError):
        load_config(p)
