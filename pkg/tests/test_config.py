"""Config parsing, strict validation, and exact round-trips."""

import dataclasses

import pytest

from graspsim.config import (
    ConfigError,
    ExperimentConfig,
    load_catalog,
    load_config,
    save_catalog,
    save_config,
)
from graspsim.gripper import GripperParams
from graspsim.scene import DEFAULT_CATALOG


def roundtrip(cfg, tmp_path):
    path = tmp_path / "cfg.ini"
    save_config(cfg, path)
    return load_config(path)


def test_empty_file_yields_defaults(tmp_path):
    path = tmp_path / "empty.ini"
    path.write_text("")
    cfg = load_config(path)
    default = ExperimentConfig()
    for f in dataclasses.fields(ExperimentConfig):
        assert getattr(cfg, f.name) == getattr(default, f.name)
    assert cfg.gripper == GripperParams()


def test_save_load_identity_with_awkward_floats(tmp_path):
    cfg = ExperimentConfig(
        workspace_side=0.1 + 0.2,   # 0.30000000000000004 must survive
        n_objects=7,
        clutter="heavy",
        min_separation=1e-3,
        p_fail=0.12345678901234567,
        max_steps=17,
        gamma=0.25,
        replay=True,
        replay_capacity=33,
        train_pe=1.0 / 3.0,
        pe_grid=(0.0, 1.0 / 7.0, 0.5),
        actions_per_group=None,
        episodes_per_group=4,
        policy="oracle",
        seed=123,
        out_dir="runs/x",
        gripper=GripperParams(l_p=0.06, theta_t=12.5, d_max=0.05),
    )
    again = roundtrip(cfg, tmp_path)
    for f in dataclasses.fields(ExperimentConfig):
        assert getattr(again, f.name) == getattr(cfg, f.name), f.name


def test_load_partial_file_keeps_other_defaults(tmp_path):
    path = tmp_path / "cfg.ini"
    path.write_text("[learner]\nsteps = 500\ngamma = 0.25\n\n[run]\npolicy = es_drl\n")
    cfg = load_config(path)
    assert cfg.steps == 500 and cfg.gamma == 0.25 and cfg.policy == "es_drl"
    assert cfg.n_objects == 10 and cfg.lr == 1e-4  # untouched defaults


def test_pe_grid_accepts_commas_and_spaces(tmp_path):
    path = tmp_path / "cfg.ini"
    path.write_text("[sweep]\npe_grid = 0, 0.5 1\n")
    assert load_config(path).pe_grid == (0.0, 0.5, 1.0)


def test_optional_ints_blank_means_unset(tmp_path):
    path = tmp_path / "cfg.ini"
    path.write_text("[env]\nmax_steps =\n\n[sweep]\nepisodes_per_group = 3\n")
    cfg = load_config(path)
    assert cfg.max_steps is None and cfg.episodes_per_group == 3


def test_gripper_section_and_blank_dmax(tmp_path):
    path = tmp_path / "cfg.ini"
    path.write_text("[gripper]\nl_p = 0.06\nd_max =\n")
    cfg = load_config(path)
    assert cfg.gripper.l_p == 0.06
    assert cfg.gripper.d_max == pytest.approx(0.06 * 2**0.5)


@pytest.mark.parametrize("text,match", [
    ("[physics]\ngravity = 9.8\n", "unknown config section"),
    ("[learner]\nlearning_rate = 0.1\n", "unknown config key"),
    ("[learner]\ngamma = 1.2\n", "gamma must lie"),
    ("[learner]\nsteps = many\n", "bad value"),
    ("[learner]\nreplay = maybe\n", "bad value"),
    ("[env]\nresolution = 15\n", "multiple of 16"),
    ("[learner]\neps_start = 0.1\neps_end = 0.5\n", "epsilon schedule"),
    ("[sweep]\npe_grid = 0.5 1.5\n", "outside"),
    ("[sweep]\nreps = 0\n", "reps"),
    ("[sweep]\nactions_per_group =\n", "budget"),
    ("[run]\npolicy = banana\n", "policy must be one of"),
    ("[scene]\nclutter = medium\n", "light or heavy"),
    ("[gripper]\nd_max = 1.0\n", "bad gripper parameters"),
    ("not even ini\n", "syntax error"),
])
def test_rejected_configs(tmp_path, text, match):
    path = tmp_path / "bad.ini"
    path.write_text(text)
    with pytest.raises(ConfigError, match=match):
        load_config(path)


def test_missing_file():
    with pytest.raises(ConfigError, match="not found"):
        load_config("/nonexistent/cfg.ini")


def test_config_error_is_value_error():
    assert issubclass(ConfigError, ValueError)


def test_validate_direct():
    with pytest.raises(ConfigError):
        ExperimentConfig(train_pe=1.5).validate()
    with pytest.raises(ConfigError):
        ExperimentConfig(pe_grid=()).validate()
    with pytest.raises(ConfigError):
        ExperimentConfig(sync_period=0).validate()
    cfg = ExperimentConfig()
    assert cfg.validate() is cfg


# --------------------------------------------------------------------------
# catalogs


def test_catalog_roundtrip_exact(tmp_path):
    path = tmp_path / "catalog.txt"
    save_catalog(DEFAULT_CATALOG, path)
    assert load_catalog(path) == DEFAULT_CATALOG


def test_catalog_skips_comments_and_blanks(tmp_path):
    path = tmp_path / "catalog.txt"
    path.write_text(
        "# comment line\n"
        "\n"
        "block 0.01 0.02 0.01 0.02 0.02 0.03 envelope_only 0.6 0\n"
        "tile 0.01 0.02 0.01 0.02 0.005 0.01 suck_only 0.8 1\n"
    )
    catalog = load_catalog(path)
    assert [t.name for t in catalog] == ["block", "tile"]
    assert catalog[0].affinity == "envelope_only" and not catalog[0].square
    assert catalog[1].square


@pytest.mark.parametrize("line,match", [
    ("short 0.01 0.02 0.01 0.02 0.02 0.03 envelope_only 0.6", "expected 10 fields"),
    ("bad 0.01 x 0.01 0.02 0.02 0.03 envelope_only 0.6 0", "malformed numeric"),
    ("bad 0.02 0.01 0.01 0.02 0.02 0.03 envelope_only 0.6 0", "lo <= hi"),
    ("bad 0.01 0.02 0.01 0.02 0.02 0.03 magnetic 0.6 0", "unknown affinity"),
    ("bad 0.01 0.02 0.01 0.02 0.02 0.03 suck_only 1.5 0", "flat_frac"),
])
def test_catalog_line_errors_carry_line_numbers(tmp_path, line, match):
    path = tmp_path / "catalog.txt"
    path.write_text("# header\n" + line + "\n")
    with pytest.raises(ConfigError, match=match) as err:
        load_catalog(path)
    assert ":2:" in str(err.value)


def test_catalog_empty_and_missing(tmp_path):
    path = tmp_path / "none.txt"
    path.write_text("# nothing here\n")
    with pytest.raises(ConfigError, match="no templates"):
        load_catalog(path)
    with pytest.raises(ConfigError, match="not found"):
        load_catalog(tmp_path / "missing.txt")


def test_config_catalog_wiring(tmp_path):
    path = tmp_path / "catalog.txt"
    save_catalog(DEFAULT_CATALOG[:4] + DEFAULT_CATALOG[7:9], path)
    cfg = ExperimentConfig(catalog_path=str(path)).validate()
    assert len(cfg.load_catalog()) == 6
    assert ExperimentConfig().load_catalog() is DEFAULT_CATALOG
    broken = ExperimentConfig(catalog_path=str(tmp_path / "gone.txt"))
    with pytest.raises(ConfigError):
        broken.validate()
