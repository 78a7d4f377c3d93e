from __future__ import annotations

import csv

import pytest
from neighcnn import cli
from neighcnn import ExitCode

from tests.test_train_command import TRAIN_ARGS


def _read_csv(path):
    with path.open() as file:
        return list(csv.DictReader(file))


@pytest.mark.end_to_end
@pytest.mark.slow
def test_ablate(runner, manifest_path, tmp_path):
    out_dir = tmp_path / "ablation"

    result = runner.invoke(
        cli,
        ["ablate", str(manifest_path), *TRAIN_ARGS, "--out-dir", str(out_dir)]
        + ["--combo", "eu", "--combo", "eu+n", "--n-blocks", "2"],
    )

    assert result.exit_code == ExitCode.OK
    assert "Ablation of the loss components" in result.output
    methods = {row["method"] for row in _read_csv(out_dir / "ablation.csv")}
    assert methods == {"Noisy", "eu", "eu+n"}
    assert out_dir.joinpath("eu.ncnn").exists()
    assert out_dir.joinpath("eu+n.ncnn.history.jsonl").exists()


@pytest.mark.end_to_end
def test_ablate_needs_two_combinations(runner, manifest_path, tmp_path):
    result = runner.invoke(
        cli,
        ["ablate", str(manifest_path), *TRAIN_ARGS, "--combo", "eu"]
        + ["--out-dir", str(tmp_path / "ablation")],
    )

    assert result.exit_code == ExitCode.USAGE
    assert "at least two" in result.output


@pytest.mark.end_to_end
@pytest.mark.slow
def test_sweep_depth(runner, manifest_path, tmp_path):
    out_dir = tmp_path / "depth"

    result = runner.invoke(
        cli,
        ["sweep-depth", str(manifest_path), *TRAIN_ARGS, "--loss", "eu"]
        + ["--depths", "2:3", "--look", "2", "--out-dir", str(out_dir)],
    )

    assert result.exit_code == ExitCode.OK
    rows = _read_csv(out_dir / "depth.csv")
    assert [(row["parameter"], row["value"]) for row in rows] == [
        ("depth", "2"),
        ("depth", "3"),
    ]
    assert out_dir.joinpath("depth-02.ncnn").exists()
    assert "Parameter" in out_dir.joinpath("depth.txt").read_text()


@pytest.mark.end_to_end
@pytest.mark.slow
def test_sweep_weights(runner, manifest_path, tmp_path):
    out_dir = tmp_path / "weights"

    result = runner.invoke(
        cli,
        ["sweep-weights", str(manifest_path), *TRAIN_ARGS, "--loss", "eu+n"]
        + ["--alphas", "0.001,0.0005", "--out-dir", str(out_dir)],
    )

    assert result.exit_code == ExitCode.OK
    rows = _read_csv(out_dir / "weights.csv")
    assert [(row["parameter"], row["value"]) for row in rows] == [
        ("alpha_n", "0.001"),
        ("alpha_n", "0.0005"),
    ]
    assert out_dir.joinpath("alpha_n-0.0005.ncnn").exists()


@pytest.mark.end_to_end
@pytest.mark.parametrize(
    "command, args, exit_code, match",
    [
        ("sweep-depth", ["--depths", "2,1"], ExitCode.USAGE, "depth must be >= 2"),
        (
            "sweep-depth",
            ["--depths", "2", "--look", "8"],
            ExitCode.DATA_FAILED,
            "8 looks",
        ),
        ("sweep-weights", ["--alphas", "1.5"], ExitCode.USAGE, "alpha_n must be"),
    ],
)
def test_invalid_sweeps_fail(
    runner, manifest_path, tmp_path, command, args, exit_code, match
):
    result = runner.invoke(
        cli,
        [command, str(manifest_path), *TRAIN_ARGS, "--loss", "eu", *args]
        + ["--out-dir", str(tmp_path / "out")],
    )

    assert result.exit_code == exit_code
    assert match in result.output
