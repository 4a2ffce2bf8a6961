"""
Per-component image quality metrics for system matrices.

Complex images are compared as two real channels (Re, Im) with the ground
truth's maximum magnitude as dynamic range.
"""
import logging
from collections import defaultdict
from typing import Iterable, Literal

import numpy as np
from scipy import ndimage

from smkit.config import settings
from smkit.exceptions import ConfigError, DataError
from smkit.models.metrics import MetricReport, MetricSummary
from smkit.models.system_matrix import SystemMatrix

logger = logging.getLogger(__name__)

GroupBy = Literal["sigma", "scale", "size"]

SSIM_SIGMA = 1.5
SSIM_RADIUS = 5  # 11 taps
SSIM_K1 = 0.01
SSIM_K2 = 0.03
SSIM_MIN_SIZE = 7
CI_Z = 1.96


def _check_pair(gt: np.ndarray, test: np.ndarray):
    if gt.shape != test.shape:
        raise DataError(f"image dims differ: {gt.shape} vs {test.shape}")


def _data_range(gt: np.ndarray) -> float:
    peak = float(np.max(np.abs(gt)))
    if peak == 0:
        raise DataError("ground truth is all zero")
    return peak


def _unit_pair(gt, test) -> tuple[np.ndarray, np.ndarray]:
    """Both images in complex128, divided by the ground-truth peak"""
    gt = np.asarray(gt, dtype=np.complex128)
    test = np.asarray(test, dtype=np.complex128)
    _check_pair(gt, test)
    peak = _data_range(gt)
    return gt / peak, test / peak


def psnr(gt: np.ndarray, test: np.ndarray, cap: float | None = None) -> float:
    """PSNR in dB, MSE over both channels, capped for identical images"""
    gt, test = _unit_pair(gt, test)
    cap = settings.psnr_cap if cap is None else cap
    mse = float(np.mean(np.abs(gt - test) ** 2)) / 2.0
    if mse == 0:
        return cap
    return min(-10.0 * np.log10(mse), cap)


def _ssim_channel(x: np.ndarray, y: np.ndarray, c1: float, c2: float) -> np.ndarray:
    def blur(image):
        return ndimage.gaussian_filter(image, sigma=SSIM_SIGMA, radius=SSIM_RADIUS)

    mu_x = blur(x)
    mu_y = blur(y)
    var_x = blur(x * x) - mu_x**2
    var_y = blur(y * y) - mu_y**2
    cov = blur(x * y) - mu_x * mu_y
    numerator = (2 * mu_x * mu_y + c1) * (2 * cov + c2)
    denominator = (mu_x**2 + mu_y**2 + c1) * (var_x + var_y + c2)
    return numerator / denominator


def ssim_supported(shape: tuple[int, ...]) -> bool:
    """True when every non-singleton axis has at least SSIM_MIN_SIZE samples"""
    active = [n for n in shape if n > 1]
    return bool(active) and min(active) >= SSIM_MIN_SIZE


def ssim(gt: np.ndarray, test: np.ndarray) -> float:
    """
    Mean structural similarity over the Re and Im channels.

    Singleton axes are dropped, so a (1, N_y, N_x) component uses a 2D
    Gaussian window; every remaining axis must have at least 7 samples.
    Images are scaled to a unit ground-truth peak, so the stabilizers are
    K1² and K2².
    """
    gt, test = _unit_pair(gt, test)
    if not ssim_supported(gt.shape):
        raise DataError(
            f"image {gt.shape} is smaller than the {SSIM_MIN_SIZE}-sample SSIM minimum"
        )
    gt = np.squeeze(gt)
    test = np.squeeze(test)
    c1 = SSIM_K1**2
    c2 = SSIM_K2**2
    values = [
        float(np.mean(_ssim_channel(part(gt), part(test), c1, c2)))
        for part in (np.real, np.imag)
    ]
    return float(np.mean(values))


METRICS = {"psnr": psnr, "ssim": ssim}


def aggregate(values: Iterable[float]) -> MetricSummary:
    """Mean and 95% normal-approximation confidence half-width"""
    values = np.asarray(list(values), dtype=float)
    if values.size < 2:
        raise DataError(f"need at least two values to aggregate, got {values.size}")
    mean = float(np.mean(values))
    ci95 = CI_Z * float(np.std(values, ddof=1)) / np.sqrt(values.size)
    return MetricSummary(mean=mean, ci95=ci95, count=int(values.size))


def _check_metrics(metrics: Iterable[str]) -> list[str]:
    metrics = list(metrics)
    unknown = [m for m in metrics if m not in METRICS]
    if unknown:
        raise ConfigError(f"unknown metrics {unknown}; choose from {sorted(METRICS)}")
    return metrics


def evaluate_pair(
    gt_sm: SystemMatrix,
    test_sm: SystemMatrix,
    metrics: Iterable[str] = ("psnr", "ssim"),
) -> MetricReport:
    """
    Metrics for every (channel, frequency) component, in ground-truth units.

    Components whose ground truth is all zero are NaN and excluded from the
    aggregates. On grids below the SSIM window every ssim value is NaN and
    the other metrics are still computed.
    """
    metrics = _check_metrics(metrics)
    gt = gt_sm.denormalized()
    test = test_sm.denormalized()
    _check_pair(gt, test)

    active = list(metrics)
    if "ssim" in active and not ssim_supported(gt.shape[2:]):
        logger.warning(
            "Grid %s is smaller than the SSIM window, ssim reported as NaN", gt.shape[2:]
        )
        active.remove("ssim")

    n_channels, n_freq = gt.shape[:2]
    per_component = {m: np.full((n_channels, n_freq), np.nan) for m in metrics}
    for l in range(n_channels):
        for k in range(n_freq):
            if not np.any(gt[l, k]):
                continue
            for m in active:
                per_component[m][l, k] = METRICS[m](gt[l, k], test[l, k])

    report = MetricReport(per_component=per_component)
    for m, values in per_component.items():
        finite = values[np.isfinite(values)]
        if finite.size >= 2:
            report.aggregates[m] = aggregate(finite)
    return report


def _corruption_descriptor(sm: SystemMatrix) -> dict:
    for step in reversed(sm.provenance):
        if step.kind == "corrupted":
            return step.descriptor
    return {}


def group_key(sm: SystemMatrix, by: GroupBy, gt_sm: SystemMatrix | None = None) -> str:
    """
    Group label of an evaluated matrix.

    sigma: noise level of its corruption; scale: downsampling factors;
    size: range of the largest ground-truth grid dimension, in steps of 16.
    """
    descriptor = _corruption_descriptor(sm)
    if by == "sigma":
        return f"{descriptor.get('noise', {}).get('sigma', 0.0):g}"
    if by == "scale":
        kind = descriptor.get("kind", {})
        factors = kind.get("factors") if kind.get("kind") == "downsample" else None
        return "x".join(str(f) for f in factors) if factors else "1"
    if by == "size":
        size = max((gt_sm or sm).calibration.grid_size)
        low = (size // 16) * 16
        return f"{low}-{low + 15}"
    raise ConfigError(f"unknown grouping {by!r}")


def merge_reports(reports: Iterable[MetricReport]) -> MetricReport:
    """Pool the finite per-component values of several reports into one set of aggregates"""
    pooled = defaultdict(list)
    for report in reports:
        for m, values in report.per_component.items():
            pooled[m].extend(values[np.isfinite(values)].tolist())

    merged = MetricReport()
    for m, values in pooled.items():
        if len(values) >= 2:
            merged.aggregates[m] = aggregate(values)
    return merged


def evaluate_collection(
    pairs: Iterable[tuple[SystemMatrix, SystemMatrix]],
    metrics: Iterable[str] = ("psnr", "ssim"),
    group_by: GroupBy | None = None,
    labels: Iterable[str] | None = None,
) -> MetricReport:
    """
    Aggregate per-component metrics over many (ground truth, test) pairs.

    The per-component values of every pair are kept under its label (its
    position in `pairs` when no labels are given). A single pair also fills
    per_component of the merged report.
    """
    metrics = _check_metrics(metrics)
    labels = iter(labels) if labels is not None else None
    reports = []
    entries = {}
    grouped = defaultdict(list)
    for index, (gt_sm, test_sm) in enumerate(pairs):
        report = evaluate_pair(gt_sm, test_sm, metrics)
        reports.append(report)
        label = next(labels) if labels is not None else str(index)
        entries[label] = report.per_component
        if group_by:
            grouped[group_key(test_sm, group_by, gt_sm)].append(report)

    logger.info("Evaluated %d pairs", len(reports))
    merged = merge_reports(reports)
    merged.entries = entries
    if len(reports) == 1:
        merged.per_component = reports[0].per_component
    for key in sorted(grouped):
        merged.groups[key] = merge_reports(grouped[key]).aggregates
    return merged
