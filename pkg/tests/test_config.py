import pytest

from slacer_sim.config import (
    ExperimentConfig,
    apply_overrides,
    load_config,
    parse_config,
    save_config,
    serialize_config,
)


def test_defaults_validate_clean():
    assert ExperimentConfig().validate() == []


@pytest.mark.parametrize("field,value", [
    ("n", 1),
    ("w", 1.5),
    ("w", -0.1),
    ("m", 2.0),
    ("mr", -1.0),
    ("view_size", 0),
    ("mode", "asap"),
    ("sampler", "psychic"),
    ("initial_strategy", "tit-for-tat"),
    ("initial_topology", "torus"),
    ("compare_prob", 1.5),
    ("metrics_interval", 0),
    ("max_cycles", 0),
    ("replicates", 0),
    ("churn_fraction", 1.5),
    ("churn_at", "sometime"),
    ("path_source_sample", 0),
    ("ccpl_source_sample", 0),
    ("workers", 0),
])
def test_validation_rejects_bad_values(field, value):
    config = ExperimentConfig(**{field: value})
    assert config.validate(), f"{field}={value} should be rejected"


def test_validation_rejects_unknown_sweep_key():
    config = ExperimentConfig(sweep={"payoff_t": [1.0, 2.0]})
    problems = config.validate()
    assert any("sweep" in p for p in problems)


def test_validation_rejects_empty_sweep_values():
    assert ExperimentConfig(sweep={"w": []}).validate()


def test_round_trip_preserves_everything(tmp_path):
    config = ExperimentConfig(n=300, w=0.55, mode="full", stop_coop=None,
                              churn_at="converged", churn_fraction=0.25,
                              out_dir="runs/x", charts=True,
                              sweep={"w": [0.5, 0.9], "n": [100, 200]})
    path = tmp_path / "exp.conf"
    save_config(config, path)
    again = load_config(path)
    assert again == config


def test_parse_on_top_of_base_keeps_unmentioned_fields():
    base = ExperimentConfig(n=500, w=0.7)
    out = parse_config("m = 0.01\n", base=base)
    assert out.n == 500 and out.w == 0.7 and out.m == 0.01
    assert base.m == 0.001


def test_parse_comments_blanks_and_scalars():
    out = parse_config(
        "# setup\n"
        "n = 64   # population\n"
        "\n"
        "stop_coop = none\n"
        "charts = true\n"
        "dump_graph = false\n"
        "sampler = gossip\n")
    assert out.n == 64
    assert out.stop_coop is None
    assert out.charts is True
    assert out.dump_graph is False
    assert out.sampler == "gossip"


def test_parse_sweep_lines():
    out = parse_config("sweep_w = 0.5, 0.7, 0.9\nsweep_n = 100,200\n")
    assert out.sweep == {"w": [0.5, 0.7, 0.9], "n": [100, 200]}


def test_parse_rejects_unknown_key_and_bad_line():
    with pytest.raises(ValueError, match="unknown key"):
        parse_config("frobnicate = 3\n")
    with pytest.raises(ValueError, match="expected"):
        parse_config("just some words\n")


def test_serialize_emits_every_field():
    text = serialize_config(ExperimentConfig(sweep={"w": [0.5]}))
    assert "n = 2000" in text
    assert "stop_coop = 0.98" in text
    assert "sweep_w = 0.5" in text


def test_apply_overrides_skips_none_and_copies_sweep():
    base = ExperimentConfig()
    out = apply_overrides(base, {"n": 100, "w": None,
                                 "sweep": {"w": [0.5]}})
    assert out.n == 100
    assert out.w == base.w
    assert out.sweep == {"w": [0.5]}
    assert base.sweep == {}


def test_mr_below_m_warns_but_validates():
    config = ExperimentConfig(m=0.05, mr=0.001)
    with pytest.warns(UserWarning):
        config.protocol_params().validate()
