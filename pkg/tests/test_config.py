import pytest

from qivif.config import Config, RunConfig, load_run_config, render_config, split_key
from qivif.exceptions import InvalidConfigError


def test_defaults():
    run = load_run_config(environ={})
    assert run == RunConfig()
    assert run.qlrd_visible.p == 0.99
    assert run.qlrd_infrared.p == 1.0
    assert run.qhbf.em_iters == 4
    assert run.pipeline.fusion_rule == "qhbf"


def test_file_values(tmp_path):
    path = tmp_path / "run.env"
    path.write_text("# tuned\nQHBF__EM_ITERS=6\nQLS_VISIBLE__TAU=none\nQAUM__MODE=adaptive\n")
    run = load_run_config(path, environ={})
    assert run.qhbf.em_iters == 6
    assert run.qls_visible.tau is None
    assert run.qaum.mode == "adaptive"


def test_precedence_file_then_environment_then_flags(tmp_path):
    path = tmp_path / "run.env"
    path.write_text("QHBF__EM_ITERS=6\nQHBF__W1=0.2\n")
    environ = {"QIVIF_QHBF__EM_ITERS": "7", "QIVIF_VERBOSE": "1", "HOME": "/tmp"}
    assert load_run_config(path, environ=environ).qhbf.em_iters == 7
    run = load_run_config(path, ["qhbf.em_iters=8"], environ=environ)
    assert run.qhbf.em_iters == 8
    assert run.qhbf.w1 == 0.2


@pytest.mark.parametrize("override", ["qhbf.nope=1", "nosection.lam=1", "qhbf=1", "qhbf.em_iters"])
def test_bad_override_keys(override):
    with pytest.raises(InvalidConfigError):
        load_run_config(overrides=[override], environ={})


def test_unknown_key_in_file(tmp_path):
    path = tmp_path / "run.env"
    path.write_text("QHBF__EM_ITERATIONS=6\n")
    with pytest.raises(InvalidConfigError) as info:
        load_run_config(path, environ={})
    assert info.value.exit_code == 4


@pytest.mark.parametrize(
    "override",
    ["qhbf.em_iters=0", "qaum.mode=multiply", "qls_visible.lam=-1", "qlrd_visible.p=1.5", "qhbf.w1=abc"],
)
def test_invalid_values(override):
    with pytest.raises(InvalidConfigError):
        load_run_config(overrides=[override], environ={})


def test_legacy_variant_name(tmp_path):
    path = tmp_path / "run.env"
    path.write_text("QHBF__ESTEP_VARIANT=paper\n")
    assert load_run_config(path, environ={}).qhbf.estep_variant == "proportional"
    run = load_run_config(overrides=["qhbf.estep_variant=paper"], environ={"QIVIF_QHBF__ESTEP_VARIANT": "reciprocal"})
    assert run.qhbf.estep_variant == "proportional"
    assert "QHBF__ESTEP_VARIANT=proportional" in render_config(run)


def test_missing_file(tmp_path):
    with pytest.raises(InvalidConfigError):
        load_run_config(tmp_path / "absent.env", environ={})


def test_rendered_configuration_reads_back(tmp_path):
    run = load_run_config(
        overrides=["qls_infrared.tau=0.02", "pipeline.use_qaum=false", "qhbf.estep_variant=reciprocal"],
        environ={},
    )
    path = tmp_path / "resolved.env"
    path.write_text(render_config(run))
    assert load_run_config(path, environ={}) == run
    assert "PIPELINE__USE_QAUM=false" in render_config(run)
    assert "QLS_VISIBLE__TAU=none" in render_config(run)


def test_digest_tracks_values():
    base = RunConfig()
    assert base.digest() == RunConfig().digest()
    assert base.replace("qhbf", em_iters=5).digest() != base.digest()


def test_replace_validates():
    with pytest.raises(InvalidConfigError):
        RunConfig().replace("qhbf", em_iters=0)
    with pytest.raises(InvalidConfigError):
        RunConfig().replace("nothing", em_iters=1)
    assert RunConfig().replace("pipeline", workers=500).pipeline.workers == 64


def test_split_key():
    assert split_key("QLRD_VISIBLE__P", "file") == ("qlrd_visible", "p")
    assert split_key("qlrd_visible.p", "flags") == ("qlrd_visible", "p")
    with pytest.raises(InvalidConfigError):
        split_key("qlrd_visible.q", "flags")


def test_settings_are_shared():
    assert Config() is Config()
