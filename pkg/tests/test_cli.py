import json
import os
import subprocess
import sys

import pytest

from needlet_lab.cli import main
from needlet_lab.config import make_run_config, make_scale_params, parse_config_file

DESK_CFG = """
# desk regime
scale.p = 1.0
scale.gamma.kind = constant
scale.gamma.value = 2.0
scale.s0 = 1.0
scale.constructor = recursive
scale.j_max = 5
"""


@pytest.fixture()
def cfg_path(tmp_path):
    path = tmp_path / "desk.cfg"
    path.write_text(DESK_CFG)
    return str(path)


def test_parse_config_file(cfg_path):
    cfg = parse_config_file(cfg_path)
    assert cfg["scale.p"] == "1.0"
    assert cfg["scale.j_max"] == "5"


def test_unknown_key_rejected(tmp_path):
    path = tmp_path / "bad.cfg"
    path.write_text("scale.q = 3\n")
    from needlet_lab import ConfigError

    with pytest.raises(ConfigError, match="scale.q"):
        parse_config_file(str(path))


def test_flags_override_file(cfg_path):
    cfg = parse_config_file(cfg_path)
    rc = make_run_config(cfg, {"run.seed": 99, "scale.j_max": 7})
    assert rc.seed == 99
    assert rc.scale.j_max == 7


def test_make_scale_params_names_offending_key():
    from needlet_lab import ConfigError

    with pytest.raises(ConfigError, match="scale.p"):
        make_scale_params({"scale.p": "1.5"})


def test_cmd_system_writes_json(cfg_path, tmp_path, capsys):
    out = tmp_path / "out"
    code = main(["system", "--config", cfg_path, "--out", str(out)])
    assert code == 0
    payload = json.loads((out / "system.json").read_text())
    assert payload["scale"]["centers"] == [1, 3, 6, 10, 15, 21, 28]
    assert payload["weights"]["partition_residual"] < 1e-10
    assert payload["frames"][0]["K_j"] > 0


def test_cmd_system_bad_p_exits_2(tmp_path):
    path = tmp_path / "bad.cfg"
    path.write_text("scale.p = 1.5\n")
    assert main(["system", "--config", str(path), "--out", str(tmp_path)]) == 2


def test_cmd_system_degenerate_regime_exits_3(tmp_path):
    path = tmp_path / "crit.cfg"
    path.write_text(
        "scale.p = 1.0\nscale.gamma.kind = critical\nscale.gamma.value = 2.0\n"
        "scale.constructor = closed_form\nscale.s0 = 1.0\nscale.j_max = 5\n"
    )
    assert main(["system", "--config", str(path), "--out", str(tmp_path)]) == 3


def test_cmd_clt_requires_kind(cfg_path, tmp_path):
    assert main(["clt", "--config", cfg_path, "--out", str(tmp_path)]) == 2


def test_cmd_clt_sweep_outputs(cfg_path, tmp_path):
    out = tmp_path / "runs"
    code = main(
        [
            "clt", "--config", cfg_path, "--kind", "fdd_1d", "--j", "3",
            "--nu", "25,50,100", "--reps", "300", "--seed", "7", "--out", str(out),
        ]
    )
    assert code == 0
    reports = sorted(p.name for p in out.glob("report_*.json"))
    assert reports == [
        "report_fdd_1d_j3_nu100.json",
        "report_fdd_1d_j3_nu25.json",
        "report_fdd_1d_j3_nu50.json",
    ]
    csv_lines = (out / "sweep_fdd_1d.csv").read_text().splitlines()
    assert csv_lines[0] == "j,nu_t,metric,empirical,bound,se"
    assert len(csv_lines) == 1 + 3 * 3  # three reports x three metrics


def test_cmd_clt_byte_identical_reruns(cfg_path, tmp_path):
    outs = []
    for name in ("a", "b"):
        out = tmp_path / name
        main(
            [
                "clt", "--config", cfg_path, "--kind", "coeff_1d_normalized", "--j", "4",
                "--nu", "50", "--reps", "200", "--seed", "21", "--out", str(out),
            ]
        )
        outs.append((out / "report_coeff_1d_normalized_j4_nu50.json").read_bytes())
    assert outs[0] == outs[1]


def test_cmd_tables_matches_max_resolution(cfg_path, tmp_path):
    out = tmp_path / "tab"
    code = main(["tables", "--config", cfg_path, "--nu", "10000", "--out", str(out)])
    assert code == 0
    payload = json.loads((out / "tables.json").read_text())
    by_ctx = {row["context"]: row["j_max"] for row in payload["rows"]}
    assert by_ctx["fdd"] == 3
    assert by_ctx["coeff_1d"] == 5  # capped by j_max=5 in this config
    lines = (out / "tables.csv").read_text().splitlines()
    assert lines[0] == "context,nu_t,alpha,j_max"
    assert len(lines) == 1 + len(payload["rows"])


def test_cli_threads_invariance_subprocess(cfg_path, tmp_path):
    """Byte-identical outputs with NEEDLET_LAB_THREADS 1 vs 8 via real CLI runs."""
    blobs = []
    for threads, name in (("1", "t1"), ("8", "t8")):
        out = tmp_path / name
        env = dict(os.environ, NEEDLET_LAB_THREADS=threads)
        proc = subprocess.run(
            [
                sys.executable, "-m", "needlet_lab.cli", "clt",
                "--config", cfg_path, "--kind", "fdd_1d", "--j", "3",
                "--nu", "25", "--reps", "400", "--seed", "3", "--out", str(out),
            ],
            capture_output=True,
            env=env,
        )
        assert proc.returncode == 0, proc.stderr.decode()
        blobs.append(
            (out / "report_fdd_1d_j3_nu25.json").read_bytes()
            + (out / "sweep_fdd_1d.csv").read_bytes()
        )
    assert blobs[0] == blobs[1]


def test_runtime_failure_exits_4(cfg_path, tmp_path):
    blocker = tmp_path / "blocker"
    blocker.write_text("a file, not a directory")
    code = main(["system", "--config", cfg_path, "--out", str(blocker / "sub")])
    assert code == 4
