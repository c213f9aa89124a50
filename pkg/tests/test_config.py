import json

import pytest

from memrates.config import apply_override, build, load_config, load_defaults
from memrates.errors import ConfigError
from memrates.model import BalancedPower, FiniteLag, Gaussian


def test_defaults_build():
    exp = build(load_defaults())
    assert isinstance(exp.family, FiniteLag)
    assert isinstance(exp.model, Gaussian)
    assert exp.regime.tag == "S2"
    assert exp.mu == 0.5 and exp.seed == 0 and exp.threads == 1 and exp.lag is None


def test_file_and_overrides_layer(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({
        "family": {"kind": "BalancedPower", "params": {"alpha": 0.75, "p": 1.0}},
        "regime": {"tag": "R3", "omega": 1.0},
        "experiment": {"mu": 1.0},
    }))
    doc = load_config(cfg, ["experiment.seed=7", "experiment.ruin.u=[2, 3]", "experiment.ruin.method=plain"])
    exp = build(doc)
    assert isinstance(exp.family, BalancedPower)
    assert exp.seed == 7
    assert doc["experiment"]["ruin"]["u"] == [2, 3]
    assert doc["experiment"]["ruin"]["method"] == "plain"
    # untouched defaults survive the merge
    assert doc["experiment"]["ruin"]["horizon_factor"] == 20


def test_params_blocks_are_replaced():
    doc = apply_override(load_defaults(), 'innovations={"law": "CenteredExponential", "params": {"rate": 2.0}}')
    assert doc["innovations"]["params"] == {"rate": 2.0}
    assert build(doc).model.rate == 2.0


@pytest.mark.parametrize(
    "override, key",
    [
        ("experiment.bogus=1", "experiment.bogus"),
        ("experiment.ruin.n_paths=0", "experiment.ruin.n_paths"),
        ("experiment.ruin.method=magic", "experiment.ruin.method"),
        ("experiment.ruin.u=[]", "experiment.ruin.u"),
        ("experiment.ruin.horizon_factor=1", "experiment.ruin.horizon_factor"),
        ("experiment.seed=-1", "experiment.seed"),
        ("experiment.segments.n_paths=1", "experiment.segments.n_paths"),
        ("experiment.mu=[1, 2]", "experiment.mu"),
        ("regime.tag=S9", "regime"),
        ("set.direction=[1, 0]", "set.direction"),
        ('innovations.params={"variance": -1}', "innovations"),
        ('family.params={"lags": [[0, 1.0], [1, -1.0]], "normalize": true}', "family"),
    ],
)
def test_errors_name_the_key(override, key):
    with pytest.raises(ConfigError) as info:
        build(load_config(None, [override]))
    assert key in str(info.value)


def test_bad_files(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.json")
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(ConfigError):
        load_config(bad)
    arr = tmp_path / "arr.json"
    arr.write_text("[1, 2]")
    with pytest.raises(ConfigError):
        load_config(arr)
    with pytest.raises(ConfigError):
        apply_override(load_defaults(), "no-equals-sign")
