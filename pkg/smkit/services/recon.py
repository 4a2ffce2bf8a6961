"""
Image reconstruction from a measurement and a system matrix.

Rows (channel, frequency) are selected by SNR, weighted by their inverse L2
norm and the regularized least-squares problem

    argmin_c ‖W(Sc - u)‖² + λ‖c‖²,  c ≥ 0

is solved with a fixed number of Kaczmarz sweeps.
"""
import logging

import numpy as np

from smkit.exceptions import ConfigError, DataError, SolverError
from smkit.models.reconstruction import FrequencySelection, ReconstructionConfig
from smkit.models.system_matrix import SystemMatrix
from smkit.utils.rng import make_rng

logger = logging.getLogger(__name__)


def estimate_row_snr(
    sm: SystemMatrix,
    noise_std: float | np.ndarray | None = None,
    background: np.ndarray | None = None,
) -> np.ndarray:
    """
    SNR per (channel, frequency): RMS of the component over the grid divided
    by its noise std.

    The noise level comes from `noise_std`, else from the matrix's own
    noise_std, else from background frames (n_frames, L, K). Rows with zero
    noise get +inf.
    """
    shape = (sm.n_channels, sm.n_freq)
    if noise_std is not None:
        sigma = np.broadcast_to(np.asarray(noise_std, dtype=float), shape)
    elif sm.noise_std is not None:
        sigma = np.asarray(sm.noise_std, dtype=float)
    elif background is not None:
        frames = np.asarray(background, dtype=np.complex128)
        if frames.shape[1:] != shape:
            raise DataError(f"background frames {frames.shape[1:]} do not match {shape}")
        centered = frames - frames.mean(axis=0)
        sigma = np.sqrt(np.mean(np.abs(centered) ** 2, axis=0) / 2.0)
    else:
        raise ConfigError("SNR estimation needs noise_std or background frames")

    grid_axes = (2, 3, 4)
    data = np.asarray(sm.data, dtype=np.complex128)
    signal = np.sqrt(np.mean(np.abs(data) ** 2, axis=grid_axes))
    snr = np.full(shape, np.inf)
    np.divide(signal, sigma, out=snr, where=sigma > 0)
    return snr


def select_frequencies(
    snr: np.ndarray, threshold: float, drop_dc: bool = True
) -> FrequencySelection:
    """Keep rows with SNR >= threshold; the k = 0 rows go when drop_dc is set"""
    snr = np.asarray(snr, dtype=float)
    keep = snr >= threshold
    if drop_dc:
        keep[:, 0] = False
    indices = np.flatnonzero(keep)
    if indices.size == 0:
        raise SolverError(f"no frequency component reaches SNR threshold {threshold}")
    return FrequencySelection(indices=indices, snr=snr)


def kaczmarz_solve(
    rows: np.ndarray, u: np.ndarray, cfg: ReconstructionConfig
) -> np.ndarray:
    """
    Regularized Kaczmarz with an auxiliary residual variable.

    Args:
        rows: Matrix (M, N), rows already weighted
        u: Right-hand side (M,)
        cfg: lam, n_iter, nonneg, relaxation, shuffle_rows and seed are used

    Returns:
        Real non-negative (N,) when cfg.nonneg, else the complex iterate
    """
    rows = np.asarray(rows, dtype=complex)
    u = np.asarray(u, dtype=complex).reshape(-1)
    n_rows, n_cols = rows.shape
    if u.shape[0] != n_rows:
        raise DataError(f"{n_rows} rows but {u.shape[0]} measurement entries")

    sqrt_lam = np.sqrt(cfg.lam)
    energy = np.einsum("ij,ij->i", rows, rows.conj()).real
    active = np.flatnonzero(energy > 0)
    if active.size < n_rows:
        logger.warning("Skipping %d zero-norm rows", n_rows - active.size)
    conj_rows = rows.conj()
    denominator = energy + cfg.lam

    c = np.zeros(n_cols, dtype=complex)
    v = np.zeros(n_rows, dtype=complex)
    rng = make_rng(cfg.seed, "kaczmarz") if cfg.shuffle_rows else None

    for sweep in range(cfg.n_iter):
        order = rng.permutation(active) if rng is not None else active
        for j in order:
            alpha = cfg.relaxation * (u[j] - rows[j] @ c - sqrt_lam * v[j]) / denominator[j]
            c += alpha * conj_rows[j]
            v[j] += alpha * sqrt_lam
        if cfg.nonneg:
            c = np.maximum(c.real, 0.0).astype(complex)
        if not np.all(np.isfinite(c)):
            raise SolverError(f"Kaczmarz iterate became non-finite in sweep {sweep}")

    return np.maximum(c.real, 0.0) if cfg.nonneg else c


def row_weights(rows: np.ndarray, weighting: str) -> np.ndarray:
    """1/‖s_j‖₂ per row (0 for zero rows), or ones"""
    if weighting == "none":
        return np.ones(rows.shape[0])
    norms = np.linalg.norm(np.asarray(rows, dtype=np.complex128), axis=1)
    weights = np.zeros_like(norms)
    np.divide(1.0, norms, out=weights, where=norms > 0)
    return weights


def reconstruct(
    sm: SystemMatrix,
    u_meas: np.ndarray,
    cfg: ReconstructionConfig | None = None,
    noise_std: float | np.ndarray | None = None,
    background: np.ndarray | None = None,
) -> np.ndarray:
    """
    Concentration image from a measurement.

    Args:
        sm: System matrix (L, K, N_z, N_y, N_x)
        u_meas: Measurement (L, K)
        cfg: Selection, weighting and solver parameters
        noise_std: Noise level per component (scalar or (L, K))
        background: Background frames used when no noise_std is known

    Returns:
        Real array (N_z, N_y, N_x)
    """
    cfg = cfg or ReconstructionConfig()
    u = np.asarray(u_meas, dtype=np.complex128)
    if u.shape != (sm.n_channels, sm.n_freq):
        raise DataError(
            f"measurement shape {u.shape} does not match ({sm.n_channels}, {sm.n_freq})"
        )

    snr = estimate_row_snr(sm, noise_std, background)
    selection = select_frequencies(snr, cfg.snr_threshold, cfg.drop_dc)
    rows = sm.as_matrix()[selection.indices]
    weights = row_weights(rows, cfg.weighting)
    logger.info(
        "Reconstructing %s from %d of %d rows (lambda=%g, %d sweeps)",
        sm.grid_shape,
        selection.n_rows,
        snr.size,
        cfg.lam,
        cfg.n_iter,
    )

    c = kaczmarz_solve(
        rows * weights[:, None], u.reshape(-1)[selection.indices] * weights, cfg
    )
    return np.real(c).reshape(sm.grid_shape)
