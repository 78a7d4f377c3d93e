from __future__ import annotations

import json

import pytest
from _neighcnn.checkpoint import load_checkpoint
from _neighcnn.network import model_from_checkpoint
from neighcnn import cli
from neighcnn import ExitCode


TRAIN_ARGS = [
    "--depth",
    "3",
    "--filters",
    "4",
    "--batch-size",
    "2",
    "--max-epochs",
    "2",
    "--learning-rate",
    "0.001",
]


@pytest.mark.end_to_end
def test_train(runner, manifest_path, tmp_path):
    out = tmp_path / "models" / "neighcnn.ncnn"

    result = runner.invoke(
        cli, ["train", str(manifest_path), str(out), *TRAIN_ARGS, "--loss", "eu+n"]
    )

    assert result.exit_code == ExitCode.OK
    assert "Best epoch" in result.output
    assert "The best checkpoint was written to" in result.output
    model = model_from_checkpoint(load_checkpoint(out))
    assert model.config.depth == 3
    assert tmp_path.joinpath("models", "neighcnn.ncnn.last.ncnn").exists()
    lines = (
        tmp_path.joinpath("models", "neighcnn.ncnn.history.jsonl")
        .read_text()
        .splitlines()
    )
    assert [json.loads(line)["epoch"] for line in lines] == [1, 2]
    assert json.loads(lines[0])["perceptual"] is None


@pytest.mark.end_to_end
def test_train_with_all_loss_components(runner, manifest_path, tmp_path):
    out = tmp_path / "neighcnn.ncnn"

    result = runner.invoke(
        cli,
        ["train", str(manifest_path), str(out), *TRAIN_ARGS, "--n-blocks", "2"]
        + ["--precision", "32", "-v", "0"],
    )

    assert result.exit_code == ExitCode.OK
    record = json.loads(
        tmp_path.joinpath("neighcnn.ncnn.history.jsonl").read_text().splitlines()[0]
    )
    for component in ["euclidean", "perceptual", "neighbourhood"]:
        assert record[component] is not None


@pytest.mark.end_to_end
def test_resumed_training_continues_the_history(runner, manifest_path, tmp_path):
    out = tmp_path / "neighcnn.ncnn"
    args = ["train", str(manifest_path), str(out), *TRAIN_ARGS, "--loss", "eu"]
    result = runner.invoke(cli, args)
    assert result.exit_code == ExitCode.OK

    result = runner.invoke(
        cli,
        [*args, "--max-epochs", "3", "--resume", f"{out}.last.ncnn"],
    )

    assert result.exit_code == ExitCode.OK
    lines = tmp_path.joinpath("neighcnn.ncnn.history.jsonl").read_text().splitlines()
    assert [json.loads(line)["epoch"] for line in lines] == [1, 2, 3]


@pytest.mark.end_to_end
@pytest.mark.parametrize(
    "args, match",
    [
        (["--depth", "1"], "depth must be >= 2"),
        (["--loss", "eu+mystery"], "mystery"),
        (["--learning-rate", "-1"], "learning rate"),
        (["--depth", "three"], "Invalid value"),
    ],
)
def test_train_with_invalid_configuration(runner, manifest_path, tmp_path, args, match):
    out = tmp_path / "neighcnn.ncnn"

    result = runner.invoke(cli, ["train", str(manifest_path), str(out), *args])

    assert result.exit_code == ExitCode.USAGE
    assert match in result.output
    assert not out.exists()


@pytest.mark.end_to_end
def test_train_with_missing_images(runner, manifest_path, tmp_path):
    next(manifest_path.parent.joinpath("speckled").rglob("*.spkl")).unlink()

    result = runner.invoke(
        cli, ["train", str(manifest_path), str(tmp_path / "neighcnn.ncnn"), *TRAIN_ARGS]
    )

    assert result.exit_code == ExitCode.DATA_FAILED
    assert "does not exist" in result.output


@pytest.mark.end_to_end
def test_train_with_unreadable_extractor(runner, manifest_path, tmp_path):
    extractor = tmp_path / "vgg.ncnn"
    extractor.write_bytes(b"not a checkpoint")

    result = runner.invoke(
        cli,
        ["train", str(manifest_path), str(tmp_path / "neighcnn.ncnn"), *TRAIN_ARGS]
        + ["--extractor", str(extractor)],
    )

    assert result.exit_code == ExitCode.DATA_FAILED
    assert "CheckpointError" in result.output
