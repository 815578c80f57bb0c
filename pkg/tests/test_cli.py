import json
import os
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest
import yaml

from smallscat import io
from smallscat.cli import run
from smallscat.emcore import WaveContext, plane_wave

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def write_cfg(tmp_path, data, name="cfg.yaml"):
    p = tmp_path / name
    p.write_text(yaml.safe_dump(data) if not isinstance(data, str) else data)
    return str(p)


def call(tmp_path, command, cfg, out="out", extra=()):
    out_dir = tmp_path / out
    code = run([command, "--config", cfg, "--out", str(out_dir), *extra])
    summary = json.loads((out_dir / "summary.json").read_text())
    assert summary["exit_status"] == code
    return code, summary, out_dir


def small_cloud(**over):
    cloud = {
        "box": {"corner": [0, 0, 0], "extents": [1, 1, 1]},
        "cube_side": 0.5,
        "kind": "impedance",
        "a": 0.01,
        "kappa": 0.5,
        "N": 1.0,
        "h": [0.3, 0.1],
        "shape": {"type": "sphere", "exact": True},
    }
    cloud.update(over)
    return {"wave": {"omega": 1.0}, "cloud": cloud, "solver": {"reduced": True},
            "probes": {"sphere": {"radius": 2.0, "count": 6, "center": [0.5, 0.5, 0.5]}}}


def test_shape_command(tmp_path):
    cfg = write_cfg(tmp_path, {"mesh": {"type": "ellipsoid", "semi_axes": [2, 1, 1], "refinements": [0, 1, 2]}})
    code, summary, out = call(tmp_path, "shape", cfg)
    assert code == 0
    table = io.read_table(out / "shape.csv")
    assert len(table["refinement"]) == 3
    assert (out / "mesh.off").exists()


def test_bie_command(tmp_path):
    cfg = write_cfg(tmp_path, {"wave": {"omega": 1.0}, "mesh": {"type": "sphere", "refinement": 2},
                               "ka": [0.04, 0.02]})
    code, summary, out = call(tmp_path, "bie-validate", cfg)
    assert code == 0
    assert summary["slope_log_Q_vs_log_a"] == pytest.approx(3.0, abs=0.05)
    assert (out / "bie.csv").exists()


def test_scatter_command(tmp_path):
    code, summary, out = call(tmp_path, "scatter", write_cfg(tmp_path, small_cloud()))
    assert code == 0
    assert summary["M"] == 1000 and summary["P"] == 8
    assert summary["residual_full"] <= 1e-10
    assert summary["max_beta_dot_A"] <= 1e-12
    cloud = io.read_table(out / "cloud.csv")
    assert len(cloud["x"]) == 1000
    for name in ("field.csv", "field_reduced.csv", "comparison.csv", "far_field.csv"):
        assert (out / name).exists()


def test_scatter_without_particles_is_incident_wave(tmp_path):
    code, summary, out = call(tmp_path, "scatter", write_cfg(tmp_path, small_cloud(N=0.0)))
    assert code == 0 and summary["M"] == 0
    f = io.read_table(out / "field.csv")
    x = np.stack([f["x"], f["y"], f["z"]], axis=1)
    E = np.stack([f["re_Ex"] + 1j * f["im_Ex"], f["re_Ey"] + 1j * f["im_Ey"], f["re_Ez"] + 1j * f["im_Ez"]], axis=1)
    assert np.abs(E - plane_wave(WaveContext.from_wavenumber(1.0), x)).max() <= 1e-14


def test_homogenize_command(tmp_path):
    data = {"wave": {"omega": 1.0},
            "medium": {"box": {"corner": [0, 0, 0], "extents": [1, 1, 1]}, "cells": 4, "N": 1.0, "h": [0.2, 0.1],
                       "a": 0.01, "kappa": 0.5},
            "probes": {"points": [[2.0, 0.5, 0.5], [0.5, 0.5, -1.0]]},
            "convergence": {"M": [125, 343]}}
    code, summary, out = call(tmp_path, "homogenize", write_cfg(tmp_path, data))
    assert code == 0
    assert summary["riemann_max_abs_diff"] == 0.0
    assert summary["cells"] == 64
    m = io.read_table(out / "medium_map.csv")
    n = m["re_n"] + 1j * m["im_n"]
    mu = m["re_mu_eff"] + 1j * m["im_mu_eff"]
    assert np.allclose(mu, n**2, rtol=1e-12)
    assert len(summary["convergence_errors"]) == 2


def design_cfg(target, N=1.0):
    return {"wave": {"omega": 1.0}, "grid": {"box": {"corner": [0, 0, 0], "extents": [1, 1, 1]}, "cells": 2, "N": N},
            "target": target}


def test_design_command_presets(tmp_path):
    code, summary, out = call(tmp_path, "design", str(CONFIGS / "design.yaml"))
    assert code == 0 and summary["negative_refraction_achieved"]
    assert summary["max_roundtrip_error"] <= 1e-12
    code, summary, out = call(tmp_path, "design", write_cfg(tmp_path, design_cfg({"quantity": "n", "value": 1.0})),
                              out="trivial")
    assert code == 0
    d = io.read_table(out / "design.csv")
    assert np.all(d["re_h"] == 0) and np.all(d["im_h"] == 0)


def test_design_partial_and_total_infeasibility(tmp_path):
    # n = 0.8 - 0.1i needs Re h < 0; the peak cell gets n = -0.8 - 0.1i, which is reachable
    target = {"quantity": "n", "profile": "gaussian", "base": [0.8, -0.1], "peak": [-1.6, 0.0],
              "center": [0.25, 0.25, 0.25], "width": 0.1}
    code, summary, out = call(tmp_path, "design", write_cfg(tmp_path, design_cfg(target)))
    assert code == 5
    assert summary["infeasible_cells"] == list(range(1, 8))
    d = io.read_table(out / "design.csv")
    assert d["feasible"].tolist() == [1] + [0] * 7
    assert abs(d["re_achieved"][0] + 0.8) < 1e-12 and np.isnan(d["re_achieved"][1:]).all()
    code, summary, _ = call(tmp_path, "design", write_cfg(tmp_path, design_cfg({"value": [0.8, -0.2]}), "b.yaml"),
                            out="all_bad")
    assert code == 3
    assert len(summary["infeasible_cells"]) == 8


@pytest.mark.parametrize(
    "text",
    [
        "wave: [1, 2\n",
        "- just\n- a list\n",
        "wave: {omega: -1}\ncloud: {a: 0.01}\nprobes: {points: [[2, 0, 0]]}\n",
        "cloud: {a: 0.01, kappa: 1.5}\nprobes: {points: [[2, 0, 0]]}\n",
        "cloud: {a: 0.01, cube_side: 0.3}\nprobes: {points: [[2, 0, 0]]}\n",
        "cloud: {a: 0.01, h: bogus}\nprobes: {points: [[2, 0, 0]]}\n",
    ],
)
def test_malformed_configs_exit_2(tmp_path, text):
    code, summary, _ = call(tmp_path, "scatter", write_cfg(tmp_path, text))
    assert code == 2
    assert "error" in summary


def test_missing_config_file_exit_2(tmp_path):
    code, _, _ = call(tmp_path, "scatter", str(tmp_path / "nope.yaml"))
    assert code == 2


def test_regime_violation_exit_3(tmp_path):
    cfg = write_cfg(tmp_path, small_cloud(kind="pec", a=0.05, cube_side=1.0, N=1.0))
    code, summary, _ = call(tmp_path, "scatter", cfg)
    assert code == 3
    cfg = small_cloud()
    # (0.25, 0.25, 0.25) is a lattice site of the first cube
    cfg["probes"] = {"points": [[0.25, 0.25, 0.25 + 0.01]]}
    code, _, _ = call(tmp_path, "scatter", write_cfg(tmp_path, cfg, "near.yaml"), out="near")
    assert code == 3


def test_module_entry_point(tmp_path):
    out = tmp_path / "o"
    res = subprocess.run([sys.executable, "-m", "smallscat", "design", "--config", str(CONFIGS / "design.yaml"),
                          "--out", str(out), "--threads", "1"], capture_output=True, text=True)
    assert res.returncode == 0, res.stderr
    assert json.loads((out / "summary.json").read_text())["exit_status"] == 0
    res = subprocess.run([sys.executable, "-m", "smallscat", "--help"], capture_output=True, text=True)
    assert res.returncode == 0 and "scatter" in res.stdout


@pytest.mark.parametrize("name,command", [("shape", "shape"), ("scatter", "scatter"), ("homogenize", "homogenize")])
def test_shipped_configs_run(tmp_path, name, command):
    code, summary, _ = call(tmp_path, command, str(CONFIGS / f"{name}.yaml"))
    assert code == 0
    assert summary["seedless"] is True
