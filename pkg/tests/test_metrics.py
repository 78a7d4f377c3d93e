from __future__ import annotations

import attr
import numpy as np
import pytest
from _neighcnn.dataset import generate_dataset
from _neighcnn.exceptions import DataError
from _neighcnn.exceptions import ShapeError
from _neighcnn.metrics import evaluate_set
from _neighcnn.metrics import gaussian_window
from _neighcnn.metrics import MetricReport
from _neighcnn.metrics import MetricRow
from _neighcnn.metrics import psnr
from _neighcnn.metrics import ssim
from _neighcnn.metrics import uqi
from _neighcnn.speckle import sample_gamma_noise
from _neighcnn.tensor import tensor


@pytest.fixture()
def image():
    rng = np.random.default_rng(0)
    return rng.uniform(0.2, 0.8, size=(16, 16))


@pytest.mark.unit
def test_psnr_accepts_tensors(image):
    noisy = image + 0.01
    expected = psnr(noisy, image)
    assert expected == pytest.approx(40.0)
    assert psnr(tensor(noisy[None, None]), tensor(image[None, None])) == expected


@pytest.mark.unit
def test_psnr_with_other_peak():
    assert psnr(np.zeros((2, 2)), np.full((2, 2), 25.5), peak=255) == pytest.approx(20)


@pytest.mark.unit
@pytest.mark.parametrize(
    "predicted, reference, exception",
    [
        (np.zeros((2, 2)), np.zeros((2, 3)), ShapeError),
        (np.zeros((2, 1, 2, 2)), np.zeros((2, 1, 2, 2)), ShapeError),
    ],
)
def test_metrics_raise_for_invalid_shapes(predicted, reference, exception):
    with pytest.raises(exception):
        psnr(predicted, reference)


@pytest.mark.unit
def test_ssim_and_uqi_of_identical_images(image):
    assert ssim(image, image) == pytest.approx(1.0)
    assert uqi(image, image) == pytest.approx(1.0)


@pytest.mark.unit
def test_metrics_decrease_with_noise(image):
    rng = np.random.default_rng(1)
    slightly = image + rng.normal(0, 0.01, image.shape)
    strongly = image + rng.normal(0, 0.1, image.shape)

    assert psnr(slightly, image) > psnr(strongly, image)
    assert ssim(slightly, image) > ssim(strongly, image)
    assert uqi(slightly, image) > uqi(strongly, image)


@pytest.mark.unit
@pytest.mark.parametrize(
    "metric, shape", [(ssim, (10, 16)), (uqi, (7, 7))]
)
def test_windowed_metrics_need_large_enough_images(metric, shape):
    with pytest.raises(ShapeError, match="windows"):
        metric(np.zeros(shape), np.zeros(shape))


@pytest.mark.unit
def test_uqi_of_constant_windows():
    assert uqi(np.zeros((8, 8)), np.zeros((8, 8))) == 1.0
    assert uqi(np.full((8, 8), 0.5), np.full((8, 8), 0.25)) == pytest.approx(0.8)


@pytest.mark.unit
def test_gaussian_window_is_normalized():
    window = gaussian_window()
    assert window.shape == (11, 11)
    assert window.sum() == pytest.approx(1.0)
    assert window[5, 5] == window.max()


@pytest.fixture()
def manifest(clean_dir, tmp_path):
    return generate_dataset(
        clean_dir,
        tmp_path / "dataset",
        looks=[2, 8],
        train_pairs=1,
        validation_pairs=0,
        test_pairs=3,
        image_size=16,
        seed=0,
    )


@pytest.mark.integration
def test_evaluate_set(manifest):
    report = evaluate_set(manifest, {"Identity": lambda x: x}, n_threads=2)

    assert report.looks == [2, 8]
    assert report.labels == ["Noisy", "Identity"]
    for look in (2, 8):
        noisy, identity = report.get(look, "Noisy"), report.get(look, "Identity")
        assert noisy.count == 3
        assert identity == attr.evolve(noisy, label="Identity")
    assert report.get(8, "Noisy").psnr_db > report.get(2, "Noisy").psnr_db


@pytest.mark.integration
def test_evaluate_set_is_independent_of_threads(manifest):
    despecklers = {"Identity": lambda x: x}
    first = evaluate_set(manifest, despecklers, n_threads=1)
    second = evaluate_set(manifest, despecklers, n_threads=4)
    assert first.rows == second.rows


@pytest.mark.integration
def test_evaluate_set_raises_for_missing_looks(manifest):
    with pytest.raises(DataError, match="4 looks"):
        evaluate_set(manifest, {}, looks=[4])


@pytest.mark.unit
def test_evaluate_set_reserves_noisy_label(manifest):
    with pytest.raises(ValueError, match="reserved"):
        evaluate_set(manifest, {"Noisy": lambda x: x})


@pytest.fixture()
def report():
    return MetricReport(
        [
            MetricRow(2, "Noisy", 10.123456, 0.5, 0.25, 3),
            MetricRow(2, "Model", float("inf"), 1.0, 1.0, 3),
        ],
        decimals=2,
    )


@pytest.mark.unit
def test_write_report(tmp_path, report):
    csv_path, text_path = report.write(tmp_path / "out", "ablation")

    assert csv_path.name == "ablation.csv"
    assert csv_path.read_text().splitlines() == [
        "look,method,psnr_db,ssim,uqi,count",
        "2,Noisy,10.12,0.50,0.25,3",
        "2,Model,inf,1.00,1.00,3",
    ]
    text = text_path.read_text()
    assert "10.12" in text
    assert "Model" in text


@pytest.mark.unit
def test_metric_row_needs_images():
    with pytest.raises(ValueError, match="at least one"):
        MetricRow(2, "Noisy", 1.0, 1.0, 1.0, 0)


def _ssim_oracle(predicted, reference):
    window = gaussian_window(11, 1.5)
    c1, c2 = 0.01**2, 0.03**2
    values = []
    for i in range(predicted.shape[0] - 10):
        for j in range(predicted.shape[1] - 10):
            p = predicted[i : i + 11, j : j + 11]
            r = reference[i : i + 11, j : j + 11]
            mu_p, mu_r = np.sum(window * p), np.sum(window * r)
            var_p = np.sum(window * (p - mu_p) ** 2)
            var_r = np.sum(window * (r - mu_r) ** 2)
            cov = np.sum(window * (p - mu_p) * (r - mu_r))
            values.append(
                (2 * mu_p * mu_r + c1)
                * (2 * cov + c2)
                / ((mu_p**2 + mu_r**2 + c1) * (var_p + var_r + c2))
            )
    return np.mean(values)


def _uqi_oracle(predicted, reference):
    values = []
    for i in range(predicted.shape[0] - 7):
        for j in range(predicted.shape[1] - 7):
            p = predicted[i : i + 8, j : j + 8]
            r = reference[i : i + 8, j : j + 8]
            mu_p, mu_r = p.mean(), r.mean()
            var_p, var_r = p.var(), r.var()
            cov = np.mean((p - mu_p) * (r - mu_r))
            values.append(
                4 * cov * mu_p * mu_r / ((var_p + var_r) * (mu_p**2 + mu_r**2))
            )
    return np.mean(values)


@pytest.mark.unit
def test_ssim_of_constant_images():
    c1 = 0.01**2
    expected = (2 * 0.5 * 0.6 + c1) / (0.5**2 + 0.6**2 + c1)
    result = ssim(np.full((16, 16), 0.5), np.full((16, 16), 0.6))
    assert result == pytest.approx(expected, rel=1e-9)
    assert result == pytest.approx(
        _ssim_oracle(np.full((16, 16), 0.5), np.full((16, 16), 0.6)), rel=1e-9
    )


@pytest.mark.unit
@pytest.mark.parametrize("seed", range(3))
def test_ssim_agrees_with_explicit_windows(seed):
    rng = np.random.default_rng(seed)
    reference = rng.uniform(0, 1, size=(16, 14))
    predicted = np.clip(reference + rng.normal(0, 0.1, size=(16, 14)), 0, 1)
    assert ssim(predicted, reference) == pytest.approx(
        _ssim_oracle(predicted, reference), abs=1e-9
    )


@pytest.mark.unit
@pytest.mark.parametrize("seed", range(3))
def test_uqi_agrees_with_explicit_windows(seed):
    rng = np.random.default_rng(seed)
    reference = rng.uniform(0, 1, size=(12, 10))
    predicted = rng.uniform(0, 1, size=(12, 10))
    assert uqi(predicted, reference) == pytest.approx(
        _uqi_oracle(predicted, reference), abs=1e-8
    )


@pytest.mark.unit
def test_uqi_of_a_scaled_image():
    reference = np.random.default_rng(3).uniform(0.1, 0.5, size=(8, 8))
    result = uqi(2 * reference, reference)
    assert result == pytest.approx(0.64, abs=1e-8)
    assert result == pytest.approx(_uqi_oracle(2 * reference, reference), abs=1e-8)


@pytest.mark.unit
def test_ssim_of_independent_noise_is_close_to_zero():
    values = []
    for seed in range(3):
        rng = np.random.default_rng(seed)
        values.append(
            ssim(rng.uniform(0, 1, (256, 256)), rng.uniform(0, 1, (256, 256)))
        )
    assert abs(np.mean(values)) < 0.05


@pytest.mark.unit
def test_psnr_of_speckled_images_grows_with_the_looks():
    clean = np.random.default_rng(0).uniform(0.1, 0.9, size=(64, 64))
    averages = []
    for looks in [1, 2, 5, 10, 15, 20]:
        values = [
            psnr(clean * sample_gamma_noise(clean.shape, looks, seed=seed).data, clean)
            for seed in range(20)
        ]
        averages.append(np.mean(values))
    assert averages == sorted(averages)
    assert len(set(averages)) == len(averages)
