"""Full-reference image quality metrics and reports.

All metrics compare a prediction with a reference image. Images may be given as
two-dimensional arrays or as tensors of shape ``(1, 1, height, width)``.

"""
from __future__ import annotations

import csv
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Callable
from typing import Iterable
from typing import List
from typing import Mapping

import attr
import numpy as np
from _neighcnn.console import render_to_plain_text
from _neighcnn.dataset import DatasetManifest
from _neighcnn.dataset import ManifestEntry
from _neighcnn.dataset import Split
from _neighcnn.exceptions import DataError
from _neighcnn.exceptions import ShapeError
from _neighcnn.shared import get_number_of_threads
from _neighcnn.tensor import Tensor
from numpy.lib.stride_tricks import sliding_window_view
from rich.table import Table
from scipy.signal import convolve2d


__all__ = [
    "MetricReport",
    "MetricRow",
    "NOISY_LABEL",
    "evaluate_set",
    "format_number",
    "psnr",
    "ssim",
    "uqi",
]


NOISY_LABEL = "Noisy"
REPORT_COLUMNS = ["look", "method", "psnr_db", "ssim", "uqi", "count"]

SSIM_WINDOW_SIZE = 11
SSIM_SIGMA = 1.5
SSIM_K1 = 0.01
SSIM_K2 = 0.03
UQI_WINDOW_SIZE = 8
_UQI_ZERO_TOLERANCE = 1e-12

Despeckler = Callable[[np.ndarray], np.ndarray]


def _as_image(image: Tensor | np.ndarray, name: str) -> np.ndarray:
    array = image.data if isinstance(image, Tensor) else np.asarray(image)
    array = np.asarray(array, dtype=np.float64)
    if array.ndim == 4 and array.shape[:2] == (1, 1):
        array = array[0, 0]
    if array.ndim != 2:
        raise ShapeError(
            f"The {name} must be a single grayscale image, got shape {array.shape}."
        )
    return array


def _as_pair(
    predicted: Tensor | np.ndarray, reference: Tensor | np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    predicted = _as_image(predicted, "prediction")
    reference = _as_image(reference, "reference")
    if predicted.shape != reference.shape:
        raise ShapeError(
            f"Images must have equal shapes, got {predicted.shape} and "
            f"{reference.shape}."
        )
    return predicted, reference


def _check_window(shape: tuple[int, ...], size: int, metric: str) -> None:
    if min(shape) < size:
        raise ShapeError(
            f"{metric} uses {size}x{size} windows, but the images are only "
            f"{shape[0]}x{shape[1]} pixels."
        )


def psnr(
    predicted: Tensor | np.ndarray, reference: Tensor | np.ndarray, peak: float = 1.0
) -> float:
    """Compute the peak signal-to-noise ratio in decibels.

    Identical images have an infinite PSNR.

    Examples
    --------
    >>> round(psnr(np.zeros((2, 2)), np.full((2, 2), 0.1)), 9)
    20.0
    >>> psnr(np.ones((2, 2)), np.ones((2, 2)))
    inf

    """
    if peak <= 0:
        raise ValueError(f"The peak must be positive, got {peak}.")
    predicted, reference = _as_pair(predicted, reference)
    mse = np.mean((predicted - reference) ** 2)
    if mse == 0:
        return float("inf")
    return float(10 * np.log10(peak**2 / mse))


def gaussian_window(
    size: int = SSIM_WINDOW_SIZE, sigma: float = SSIM_SIGMA
) -> np.ndarray:
    """Return a normalized two-dimensional Gaussian window."""
    offsets = np.arange(size) - (size - 1) / 2
    xx, yy = np.meshgrid(offsets, offsets)
    window = np.exp(-(xx**2 + yy**2) / (2 * sigma**2))
    return window / window.sum()


def _filter(image: np.ndarray, window: np.ndarray) -> np.ndarray:
    return convolve2d(image, np.rot90(window, 2), mode="valid")


def ssim(
    predicted: Tensor | np.ndarray, reference: Tensor | np.ndarray, peak: float = 1.0
) -> float:
    """Compute the mean structural similarity.

    Local statistics are computed with an 11x11 Gaussian window with a standard
    deviation of 1.5 at every position where the window fits into the image.

    """
    predicted, reference = _as_pair(predicted, reference)
    _check_window(predicted.shape, SSIM_WINDOW_SIZE, "SSIM")
    c1 = (SSIM_K1 * peak) ** 2
    c2 = (SSIM_K2 * peak) ** 2

    window = gaussian_window()
    mu_p = _filter(predicted, window)
    mu_r = _filter(reference, window)
    sigma_p = _filter(predicted * predicted, window) - mu_p**2
    sigma_r = _filter(reference * reference, window) - mu_r**2
    sigma_pr = _filter(predicted * reference, window) - mu_p * mu_r

    ssim_map = ((2 * mu_p * mu_r + c1) * (2 * sigma_pr + c2)) / (
        (mu_p**2 + mu_r**2 + c1) * (sigma_p + sigma_r + c2)
    )
    return float(np.mean(ssim_map))


def uqi(predicted: Tensor | np.ndarray, reference: Tensor | np.ndarray) -> float:
    """Compute the universal quality index averaged over sliding 8x8 windows.

    Windows where both images are constant score ``2 * mu_p * mu_r / (mu_p ** 2 +
    mu_r ** 2)``, and windows where in addition both means are zero score one.

    Examples
    --------
    >>> x = np.arange(64.0).reshape(8, 8)
    >>> round(uqi(x, x), 12)
    1.0
    >>> uqi(np.full((8, 8), 0.5), np.full((8, 8), 0.5))
    1.0

    """
    predicted, reference = _as_pair(predicted, reference)
    _check_window(predicted.shape, UQI_WINDOW_SIZE, "UQI")

    shape = (UQI_WINDOW_SIZE, UQI_WINDOW_SIZE)
    windows_p = sliding_window_view(predicted, shape)
    windows_r = sliding_window_view(reference, shape)
    mu_p = windows_p.mean(axis=(-2, -1))
    mu_r = windows_r.mean(axis=(-2, -1))
    centered_p = windows_p - mu_p[..., None, None]
    centered_r = windows_r - mu_r[..., None, None]
    var_p = np.mean(centered_p**2, axis=(-2, -1))
    var_r = np.mean(centered_r**2, axis=(-2, -1))
    cov = np.mean(centered_p * centered_r, axis=(-2, -1))

    variance_sum = var_p + var_r
    mean_square_sum = mu_p**2 + mu_r**2
    variance_zero = variance_sum <= _UQI_ZERO_TOLERANCE * np.maximum(1, mean_square_sum)
    mean_zero = mean_square_sum <= _UQI_ZERO_TOLERANCE

    quality = np.ones_like(mu_p)
    constant = variance_zero & ~mean_zero
    quality[constant] = 2 * mu_p[constant] * mu_r[constant] / mean_square_sum[constant]
    regular = ~variance_zero & ~mean_zero
    quality[regular] = (
        4
        * cov[regular]
        * mu_p[regular]
        * mu_r[regular]
        / (variance_sum[regular] * mean_square_sum[regular])
    )
    return float(np.mean(quality))


def format_number(value: float, decimals: int = 4) -> str:
    """Format a number for reports.

    Examples
    --------
    >>> format_number(20.123456)
    '20.1235'
    >>> format_number(float("inf"))
    'inf'

    """
    if np.isinf(value):
        return "inf" if value > 0 else "-inf"
    return f"{value:.{decimals}f}"


@attr.s(frozen=True)
class MetricRow:
    look = attr.ib(type=int)
    label = attr.ib(type=str)
    psnr_db = attr.ib(type=float)
    ssim = attr.ib(type=float)
    uqi = attr.ib(type=float)
    count = attr.ib(type=int)

    @count.validator
    def _check_count(self, attribute: attr.Attribute, value: int) -> None:
        if value < 1:
            raise ValueError("Every row of a report must average at least one image.")


@attr.s
class MetricReport:
    """Average metrics per look and method.

    The labels keep the order in which they were added, the noisy baseline comes first.

    """

    rows = attr.ib(factory=list, type=List[MetricRow])
    decimals = attr.ib(default=4, type=int)

    @property
    def looks(self) -> list[int]:
        return sorted({row.look for row in self.rows})

    @property
    def labels(self) -> list[str]:
        return list(dict.fromkeys(row.label for row in self.rows))

    def get(self, look: int, label: str) -> MetricRow:
        for row in self.rows:
            if row.look == look and row.label == label:
                return row
        raise KeyError((look, label))

    def to_records(self) -> list[dict[str, str]]:
        """Return the rows with formatted numbers as they appear in the CSV file."""
        return [
            {
                "look": str(row.look),
                "method": row.label,
                "psnr_db": format_number(row.psnr_db, self.decimals),
                "ssim": format_number(row.ssim, self.decimals),
                "uqi": format_number(row.uqi, self.decimals),
                "count": str(row.count),
            }
            for row in self.rows
        ]

    def to_csv(self, path: Path) -> None:
        with Path(path).open("w", newline="") as file:
            writer = csv.DictWriter(
                file, fieldnames=REPORT_COLUMNS, lineterminator="\n"
            )
            writer.writeheader()
            writer.writerows(self.to_records())

    def to_table(self, title: str | None = None) -> Table:
        """Arrange the report with one row per look and three columns per method."""
        table = Table(title=title)
        table.add_column("L", justify="right")
        for label in self.labels:
            for metric in ("PSNR", "SSIM", "UQI"):
                table.add_column(f"{label}\n{metric}", justify="right")

        records = {(r["look"], r["method"]): r for r in self.to_records()}
        for look in self.looks:
            cells = [str(look)]
            for label in self.labels:
                record = records.get((str(look), label))
                if record is None:
                    cells.extend(["", "", ""])
                else:
                    cells.extend([record["psnr_db"], record["ssim"], record["uqi"]])
            table.add_row(*cells)
        return table

    def to_text(self, title: str | None = None) -> str:
        width = 8 + 3 * 12 * max(1, len(self.labels))
        return render_to_plain_text(self.to_table(title), width=width)

    def write(self, directory: Path, name: str = "report") -> tuple[Path, Path]:
        """Write the report as CSV and as a text table."""
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        csv_path = directory / f"{name}.csv"
        text_path = directory / f"{name}.txt"
        self.to_csv(csv_path)
        text_path.write_text(self.to_text())
        return csv_path, text_path


def _image_metrics(
    predicted: np.ndarray, reference: np.ndarray, peak: float
) -> tuple[float, float, float]:
    return (
        psnr(predicted, reference, peak),
        ssim(predicted, reference, peak),
        uqi(predicted, reference),
    )


def evaluate_set(
    manifest: DatasetManifest,
    despecklers: Mapping[str, Despeckler],
    looks: Iterable[int] | None = None,
    split: Split | str = Split.TEST,
    peak: float = 1.0,
    n_threads: int | None = None,
    decimals: int = 4,
) -> MetricReport:
    """Average the metrics of the noisy images and of every despeckler per look.

    Despecklers receive the unclipped speckled image. The noisy images and the output of
    every despeckler are clamped to [0, 1] before they are compared with the clean
    image, so an identity despeckler reproduces the noisy row. Images are despeckled
    one after another in manifest order, and only the metrics are computed in parallel.

    Raises
    ------
    DataError
        If the selection is empty or an image cannot be read.

    """
    if NOISY_LABEL in despecklers:
        raise ValueError(f"The label {NOISY_LABEL!r} is reserved for the noisy images.")
    selected_looks = manifest.looks if looks is None else sorted(set(looks))
    n_threads = get_number_of_threads() if n_threads is None else n_threads

    rows = []
    for look in selected_looks:
        entries = manifest.select([look], split)
        if not entries:
            raise DataError(
                f"The manifest has no {Split(split).value} pairs with {look} looks."
            )
        jobs = _despeckle_entries(manifest, entries, despecklers)
        with ThreadPoolExecutor(max_workers=n_threads) as executor:
            results = list(
                executor.map(lambda job: _image_metrics(job[1], job[2], peak), jobs)
            )

        for label in [NOISY_LABEL, *despecklers]:
            values = np.array(
                [result for job, result in zip(jobs, results) if job[0] == label]
            )
            psnr_db, ssim_value, uqi_value = values.mean(axis=0)
            rows.append(
                MetricRow(
                    look,
                    label,
                    float(psnr_db),
                    float(ssim_value),
                    float(uqi_value),
                    len(values),
                )
            )
    return MetricReport(rows, decimals)


def _despeckle_entries(
    manifest: DatasetManifest,
    entries: list[ManifestEntry],
    despecklers: Mapping[str, Despeckler],
) -> list[tuple[str, np.ndarray, np.ndarray]]:
    jobs = []
    for entry in entries:
        pair = manifest.load_pair(entry)
        clean = pair.clean.data[0, 0]
        speckled = pair.speckled.data[0, 0]
        jobs.append((NOISY_LABEL, np.clip(speckled, 0.0, 1.0), clean))
        for label, despeckler in despecklers.items():
            despeckled = _as_image(despeckler(speckled), "despeckled image")
            jobs.append((label, np.clip(despeckled, 0.0, 1.0), clean))
    return jobs
