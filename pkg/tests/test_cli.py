import json
import os
import subprocess
import sys

import numpy as np
import pytest

from latentdolly import Intrinsics, PipelineConfig, Rng, gaussian, make_toy_scene
from latentdolly.cli import main
from latentdolly.fileio import (
    read_image_ppm,
    read_latent,
    write_depth_f32r,
    write_image_ppm,
    write_latent,
    write_mask,
)
from latentdolly.tensor import BinaryMask

DIMS = (1, 2, 4, 8, 8)


def run_cli(*argv):
    return main(list(argv))


def test_schedule_csv_shape(tmp_path, capsys):
    assert run_cli("schedule", "--T", "10") == 0
    out = capsys.readouterr().out.splitlines()
    assert out[0] == "t,beta,alpha_bar,snr"
    assert len(out) == 11


def test_schedule_zero_terminal_last_row():
    import io
    from contextlib import redirect_stdout

    buf = io.StringIO()
    with redirect_stdout(buf):
        run_cli("schedule", "--T", "10")
    last = buf.getvalue().strip().splitlines()[-1].split(",")
    assert float(last[2]) == 0.0 and float(last[3]) == 0.0


def test_krnr_verify_passes(capsys):
    assert run_cli("krnr-verify", "--trials", "50") == 0
    assert "PASS" in capsys.readouterr().out


def test_krnr_verify_fails_on_impossible_tolerance(capsys):
    assert run_cli("krnr-verify", "--trials", "50", "--tol", "1e-30", "--tol-continuous", "1e-30") == 1
    assert "FAIL" in capsys.readouterr().out


def test_analyze_writes_csv(tmp_path):
    out = tmp_path / "a.csv"
    code = run_cli("analyze", "similarity", "--k", "1:5", "--dims", "1,1,4,8,8", "--out", str(out))
    assert code == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "k,cosine,mean,variance,norm_deviation"
    assert len(lines) == 6


def test_invert_then_krnr_apply(tmp_path):
    x0 = gaussian(DIMS, Rng(0).split("x"))
    xp = tmp_path / "x0.krnr"
    ep = tmp_path / "eps.krnr"
    op = tmp_path / "out.krnr"
    write_latent(xp, x0)
    assert run_cli("invert", "--input", str(xp), "--output", str(ep)) == 0
    eps = read_latent(ep)
    assert eps.dims == DIMS
    code = run_cli(
        "krnr", "--latent", str(xp), "--noise", str(ep),
        "--alpha-bar", "0.006", "--k", "10", "--delta", "3", "--out", str(op),
    )
    assert code == 0
    assert read_latent(op).dims == DIMS


def test_krnr_plain_closed_form_when_delta_zero(tmp_path):
    from latentdolly import krnr_closed_discrete

    x0 = gaussian(DIMS, Rng(0).split("x"))
    eps = gaussian(DIMS, Rng(0).split("e"))
    xp, ep, op = (tmp_path / n for n in ("x.krnr", "e.krnr", "o.krnr"))
    write_latent(xp, x0)
    write_latent(ep, eps)
    assert run_cli(
        "krnr", "--latent", str(xp), "--noise", str(ep),
        "--alpha-bar", "0.25", "--k", "4", "--delta", "0", "--out", str(op),
    ) == 0
    want = krnr_closed_discrete(x0, eps, 0.25, 4)
    assert np.array_equal(read_latent(op).data, want.data.astype(np.float32))


def test_slm_command_bit_exact_per_seed(tmp_path):
    x0 = gaussian(DIMS, Rng(0).split("x"))
    eps = gaussian(DIMS, Rng(0).split("e"))
    m = np.zeros(DIMS, dtype=np.uint8)
    m[0, 0, :, :2, :2] = 1
    d = 1 - m
    paths = {n: tmp_path / f"{n}.krnr" for n in ("x", "e", "m", "d", "ox1", "oe1", "ox2", "oe2")}
    write_latent(paths["x"], x0)
    write_latent(paths["e"], eps)
    write_mask(paths["m"], BinaryMask(m))
    write_mask(paths["d"], BinaryMask(d))
    for ox, oe in (("ox1", "oe1"), ("ox2", "oe2")):
        code = run_cli(
            "slm", "--latent", str(paths["x"]), "--noise", str(paths["e"]),
            "--mask", str(paths["m"]), "--depthmask", str(paths["d"]),
            "--seed", "5", "--out-latent", str(paths[ox]), "--out-noise", str(paths[oe]),
        )
        assert code == 0
    assert paths["ox1"].read_bytes() == paths["ox2"].read_bytes()
    assert paths["oe1"].read_bytes() == paths["oe2"].read_bytes()


def test_render_command_end_to_end(tmp_path):
    scene = make_toy_scene("two_layer_parallax", (4, 32, 32), 0)
    rgb_dir, depth_dir, out_dir = tmp_path / "rgb", tmp_path / "depth", tmp_path / "out"
    rgb_dir.mkdir()
    depth_dir.mkdir()
    for i in range(4):
        write_image_ppm(rgb_dir / f"f{i}.ppm", np.clip(scene.frames[i], 0, 1))
        write_depth_f32r(depth_dir / f"f{i}.f32r", scene.depth[i])
    intr = scene.intrinsics
    code = run_cli(
        "render", "--rgb", str(rgb_dir), "--depth", str(depth_dir),
        "--traj", "pan_left", "--magnitude", "0.1",
        "--intrinsics", f"{intr.fx},{intr.fy},{intr.cx},{intr.cy}",
        "--out", str(out_dir),
    )
    assert code == 0
    names = sorted(os.listdir(out_dir))
    assert "manifest.json" in names
    assert sum(n.endswith(".ppm") for n in names) == 4
    assert sum(n.endswith(".pgm") for n in names) == 4
    with open(out_dir / "manifest.json") as f:
        manifest = json.load(f)
    assert len(manifest["frames"]) == 4
    # frame 0 is the identity pose: rendered equals source
    src = read_image_ppm(rgb_dir / "f0.ppm")
    dst = read_image_ppm(out_dir / "render_000.ppm")
    assert np.array_equal(src, dst)


def test_pipeline_run_command(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"trajectory": "identity", "frames": 4, "invert_steps": 10, "sample_steps": 10}))
    assert run_cli("pipeline", "run", "--config", str(cfg)) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["psnr_visible_db"] >= 40.0


def test_pipeline_ablate_command(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"trajectory": "identity", "frames": 4, "invert_steps": 5, "sample_steps": 5}))
    out = tmp_path / "sweep.csv"
    assert run_cli("pipeline", "ablate", "--axis", "k", "--values", "1:3", "--config", str(cfg), "--out", str(out)) == 0
    assert len(out.read_text().splitlines()) == 4


def test_usage_errors_exit_2(tmp_path, capsys):
    assert run_cli("analyze", "similarity", "--dims", "1,2,3") == 2
    assert run_cli("nonsense") == 2
    cfg = tmp_path / "bad.json"
    cfg.write_text(json.dumps({"unknown_key": 1}))
    assert run_cli("pipeline", "run", "--config", str(cfg)) == 2


def test_io_errors_exit_3(tmp_path):
    missing = tmp_path / "nope.krnr"
    assert run_cli("invert", "--input", str(missing), "--output", str(tmp_path / "o.krnr")) == 3
    corrupt = tmp_path / "c.krnr"
    corrupt.write_bytes(b"JUNK" + bytes(40))
    assert run_cli("invert", "--input", str(corrupt), "--output", str(tmp_path / "o.krnr")) == 3


def test_math_failure_exits_1(tmp_path):
    # inversion at full strength on a zero-terminal schedule collapses
    x0 = gaussian(DIMS, Rng(0).split("x"))
    xp = tmp_path / "x.krnr"
    write_latent(xp, x0)
    code = run_cli(
        "invert", "--input", str(xp), "--output", str(tmp_path / "o.krnr"),
        "--strength", "1.0", "--zero-terminal",
    )
    assert code == 1


def test_thread_env_var_validation(tmp_path, monkeypatch, capsys):
    monkeypatch.setenv("LATENT_DOLLY_THREADS", "zero")
    assert run_cli("schedule", "--T", "5") == 2
    monkeypatch.setenv("LATENT_DOLLY_THREADS", "4")
    assert run_cli("schedule", "--T", "5") == 0


def test_console_entry_point_installed():
    proc = subprocess.run(
        [sys.executable, "-m", "latentdolly", "schedule", "--T", "5"],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0
    assert proc.stdout.startswith("t,beta,alpha_bar,snr")


def test_identical_invocations_byte_identical(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"trajectory": "pan_left", "frames": 4, "invert_steps": 5, "sample_steps": 5}))
    outs = []
    for run in ("a", "b"):
        out = tmp_path / run
        assert run_cli("pipeline", "run", "--config", str(cfg), "--output-dir", str(out)) == 0
        outs.append(out)
    for name in os.listdir(outs[0]):
        assert (outs[0] / name).read_bytes() == (outs[1] / name).read_bytes(), name
