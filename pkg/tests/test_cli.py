import json
from pathlib import Path

import numpy as np
import pytest
import torch

from silhoufit import save_model
from silhoufit.cli import run

GOLDEN = Path(__file__).parent / "golden" / "template_zero_128.png"


@pytest.fixture(scope="module")
def model_file(tmp_path_factory, ):
    from silhoufit import make_stylized_hand

    path = tmp_path_factory.mktemp("model") / "stylized.json"
    save_model(make_stylized_hand(), path)
    return path


@pytest.fixture()
def camera_file(tmp_path):
    path = tmp_path / "camera.json"
    path.write_text(
        json.dumps({"fx": 90.0, "fy": 90.0, "cx": 31.5, "cy": 31.5, "width": 64, "height": 64})
    )
    return path


def test_unknown_flag_is_usage_error(model_file):
    assert run(["model-info", "--model", str(model_file), "--bogus"]) == 1


def test_missing_subcommand_is_usage_error():
    assert run([]) == 1


def test_missing_file_is_runtime_error():
    assert run(["model-info", "--model", "/nonexistent/model.json"]) == 2


def test_model_info(model_file, capsys):
    assert run(["model-info", "--model", str(model_file)]) == 0
    info = json.loads(capsys.readouterr().out)
    assert info["vertices"] == 778
    assert info["skeleton_joints"] == 16
    assert info["regressed_joints"] == 21
    assert info["n_pc"] == 6


def test_make_model_roundtrip(tmp_path, capsys):
    out = tmp_path / "m.json"
    assert run(["make-model", "--out", str(out), "--npc", "45"]) == 0
    capsys.readouterr()
    assert run(["model-info", "--model", str(out)]) == 0
    info = json.loads(capsys.readouterr().out)
    assert info["n_pc"] == 45
    assert info["vertices"] == 778


def test_render_matches_golden(model_file, tmp_path, capsys):
    camera = tmp_path / "camera.json"
    camera.write_text(
        json.dumps(
            {"fx": 150.0, "fy": 150.0, "cx": 63.5, "cy": 63.5, "width": 128, "height": 128}
        )
    )
    params = tmp_path / "params.json"
    params.write_text(
        json.dumps(
            {
                "theta": [0.0] * 6,
                "beta": [0.0] * 10,
                "rotation": [0.0] * 3,
                "translation": [0.0, 0.0, 0.5],
            }
        )
    )
    out = tmp_path / "render.png"
    assert run([
        "render", "--model", str(model_file), "--params", str(params),
        "--camera", str(camera), "--out", str(out),
    ]) == 0
    assert out.read_bytes() == GOLDEN.read_bytes()


def test_render_soft_flag(model_file, tmp_path):
    camera = tmp_path / "camera.json"
    camera.write_text(
        json.dumps(
            {"fx": 150.0, "fy": 150.0, "cx": 63.5, "cy": 63.5, "width": 128, "height": 128}
        )
    )
    params = tmp_path / "params.json"
    params.write_text(
        json.dumps(
            {
                "theta": [0.2] * 6,
                "beta": [0.0] * 10,
                "rotation": [0.1, 0.0, 0.0],
                "translation": [0.0, 0.0, 0.5],
            }
        )
    )
    out = tmp_path / "soft.png"
    assert run([
        "render", "--model", str(model_file), "--params", str(params),
        "--camera", str(camera), "--out", str(out), "--soft", "--sigma", "2.0",
    ]) == 0
    from silhoufit.imgio import read_mask_png

    img = read_mask_png(out, kind="soft")
    values = set(img.pixels.flatten().tolist())
    assert len(values) > 2  # smooth coverage, not a binary mask


def test_synth_fit_eval_pipeline(model_file, camera_file, tmp_path, capsys):
    data_dir = tmp_path / "data"
    assert run([
        "synth", "--model", str(model_file), "--count", "1", "--seed", "3",
        "--out", str(data_dir), "--camera", str(camera_file),
    ]) == 0

    manifest = json.loads((data_dir / "manifest.json").read_text())
    entry = manifest["samples"][0]
    stem = f"{entry['id']:05d}_v{entry['view']}"

    fit_dir = tmp_path / "fits" / stem
    assert run([
        "fit", "--model", str(model_file),
        "--mask", str(data_dir / entry["files"]["mask"]),
        "--camera", str(camera_file),
        "--gt", str(data_dir / entry["files"]["gt"]),
        "--out", str(fit_dir),
        "--iterations-stage1", "10", "--iterations-stage2", "5",
        "--restarts", "1", "--seed", "3",
    ]) == 0
    for name in (
        "params.json", "offsets.dfield", "mesh_prelim.obj", "mesh_refined.obj",
        "silhouette_soft.png", "silhouette_hard.png", "trace.csv", "result.json",
    ):
        assert (fit_dir / name).exists(), name
    result = json.loads((fit_dir / "result.json").read_text())
    assert result["metrics"] is not None
    trace_lines = (fit_dir / "trace.csv").read_text().strip().splitlines()
    assert trace_lines[0].startswith("iteration,")
    assert len(trace_lines) == 1 + 10 + 5 + 1  # header + evals + final

    capsys.readouterr()
    assert run(["eval", "--pred", str(tmp_path / "fits"), "--gt", str(data_dir)]) == 0
    out = capsys.readouterr().out
    assert "MPJPE (cm)" in out
    report = json.loads(out[out.index("{"):])
    assert report["mpjpe_cm"] is not None
    assert report["miou"] is not None


def test_fit_determinism_byte_identical(model_file, camera_file, tmp_path):
    data_dir = tmp_path / "data"
    run([
        "synth", "--model", str(model_file), "--count", "1", "--seed", "5",
        "--out", str(data_dir), "--camera", str(camera_file),
    ])
    manifest = json.loads((data_dir / "manifest.json").read_text())
    entry = manifest["samples"][0]
    outputs = []
    for name in ("f1", "f2"):
        fit_dir = tmp_path / name
        assert run([
            "fit", "--model", str(model_file),
            "--mask", str(data_dir / entry["files"]["mask"]),
            "--camera", str(camera_file),
            "--gt", str(data_dir / entry["files"]["gt"]),
            "--out", str(fit_dir),
            "--iterations-stage1", "8", "--iterations-stage2", "4",
            "--restarts", "2", "--seed", "9",
        ]) == 0
        outputs.append(fit_dir)
    a, b = outputs
    for f in sorted(p.name for p in a.iterdir()):
        assert (a / f).read_bytes() == (b / f).read_bytes(), f


def test_gradcheck_cli(model_file):
    assert run(["gradcheck", "--model", str(model_file), "--seed", "0", "--size", "48"]) == 0


def test_fit_full_mode_without_gt_rejected(model_file, camera_file, tmp_path):
    mask = tmp_path / "mask.png"
    from silhoufit import SilhouetteImage
    from silhoufit.imgio import write_mask_png

    m = torch.zeros(64, 64, dtype=torch.float64)
    m[20:40, 20:40] = 1.0
    write_mask_png(SilhouetteImage(pixels=m, kind="hard"), mask)
    code = run([
        "fit", "--model", str(model_file), "--mask", str(mask),
        "--camera", str(camera_file), "--out", str(tmp_path / "out"),
        "--mode", "full",
    ])
    assert code == 2


def test_log_env_var_validated(model_file, monkeypatch):
    monkeypatch.setenv("SILHOUFIT_LOG", "bogus")
    assert run(["model-info", "--model", str(model_file)]) == 1
    monkeypatch.setenv("SILHOUFIT_LOG", "debug")
    assert run(["model-info", "--model", str(model_file)]) == 0
