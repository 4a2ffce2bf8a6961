"""
Classical restoration of system-matrix components.

Each operation works on one complex (N_z, N_y, N_x) image; real and imaginary
parts are processed independently. `restore` dispatches an operation over all
(channel, frequency) components of a system matrix.
"""
import logging
from functools import lru_cache

import numpy as np
from scipy import fft, sparse
from scipy.interpolate import CubicSpline
from scipy.sparse.linalg import cg

from smkit.config import settings
from smkit.exceptions import ConfigError, DataError, SmkError, SolverError
from smkit.models.calibration import CalibrationSpec
from smkit.models.restoration import BiharmonicMethod, CubicMethod, DctFMethod, RestoreMethod
from smkit.models.system_matrix import ProvenanceStep, SystemMatrix
from smkit.utils.parallel import ordered_map

logger = logging.getLogger(__name__)


# ---------------------------------------------------------------------------
# DCT-F denoising
# ---------------------------------------------------------------------------


def dct(image: np.ndarray) -> np.ndarray:
    """Orthonormal type-II DCT over all axes, real and imaginary parts separately"""
    return fft.dctn(image.real, norm="ortho") + 1j * fft.dctn(image.imag, norm="ortho")


def idct(coefficients: np.ndarray) -> np.ndarray:
    return fft.idctn(coefficients.real, norm="ortho") + 1j * fft.idctn(
        coefficients.imag, norm="ortho"
    )


def soft_threshold(coefficients: np.ndarray, threshold: float) -> np.ndarray:
    """Shrink magnitudes by `threshold`, keeping the phase"""
    magnitude = np.abs(coefficients)
    shrink = np.maximum(magnitude - threshold, 0.0)
    gain = np.divide(shrink, magnitude, out=np.zeros_like(magnitude), where=magnitude > 0)
    return coefficients * gain


def dctf_denoise(component: np.ndarray, omega: float, sigma: float) -> np.ndarray:
    """
    DCT soft-thresholding at omega * sigma.

    Under the orthonormal DCT the coefficient-domain noise std equals the
    image-domain sigma, so no rescaling of the threshold is needed.
    """
    if sigma < 0:
        raise ConfigError(f"sigma must be non-negative, got {sigma}")
    component = np.asarray(component, dtype=complex)
    if sigma == 0:
        return component.copy()
    return idct(soft_threshold(dct(component), omega * sigma))


def estimate_background_sigma(
    frames: np.ndarray, coefficient: float | None = None
) -> np.ndarray:
    """
    Per-component noise level from background frames (n_frames, L, K).

    The per-part standard deviation over frames is multiplied by a heuristic
    coefficient, by default `settings.background_sigma_coefficient`.
    """
    frames = np.asarray(frames, dtype=np.complex128)
    if frames.ndim != 3 or frames.shape[0] < 2:
        raise DataError(f"need at least two background frames (n, L, K), got {frames.shape}")
    if coefficient is None:
        coefficient = settings.background_sigma_coefficient
    centered = frames - frames.mean(axis=0)
    return coefficient * np.sqrt(np.mean(np.abs(centered) ** 2, axis=0) / 2.0)


# ---------------------------------------------------------------------------
# Interpolation
# ---------------------------------------------------------------------------


def _resample_axes(source: CalibrationSpec, target: CalibrationSpec):
    """(array axis, source coords, target coords) for every axis that changes"""
    for axis in range(3):
        array_axis = 2 - axis
        n_source = source.grid_size[axis]
        n_target = target.grid_size[axis]
        if n_source == 1 and n_target == 1:
            continue
        if n_source < 2:
            raise ConfigError(
                f"cannot interpolate along degenerate axis {'xyz'[axis]} "
                f"({n_source} -> {n_target} samples)"
            )
        yield array_axis, source.axis_coordinates(axis), target.axis_coordinates(axis)


def _check_component(component: np.ndarray, calibration: CalibrationSpec):
    if component.shape != calibration.shape:
        raise DataError(
            f"component shape {component.shape} does not match grid {calibration.shape}"
        )


def cubic_interp(
    component: np.ndarray, source: CalibrationSpec, target: CalibrationSpec
) -> np.ndarray:
    """
    Separable natural cubic spline resampling between calibration grids.

    Target coordinates outside the outermost source samples take the edge
    value.
    """
    component = np.asarray(component, dtype=complex)
    _check_component(component, source)
    parts = [component.real, component.imag]
    for array_axis, xs, xt in _resample_axes(source, target):
        xt = np.clip(xt, xs[0], xs[-1])
        parts = [
            CubicSpline(xs, part, axis=array_axis, bc_type="natural")(xt) for part in parts
        ]
    return parts[0] + 1j * parts[1]


def nearest_interp(
    component: np.ndarray, source: CalibrationSpec, target: CalibrationSpec
) -> np.ndarray:
    """Nearest-neighbour resampling between calibration grids"""
    component = np.asarray(component, dtype=complex)
    _check_component(component, source)
    for array_axis, xs, xt in _resample_axes(source, target):
        nearest = np.abs(xt[:, None] - xs[None, :]).argmin(axis=1)
        component = np.take(component, nearest, axis=array_axis)
    return component


# ---------------------------------------------------------------------------
# Biharmonic inpainting
# ---------------------------------------------------------------------------


def _second_difference(n: int) -> sparse.csr_matrix:
    """1D second difference; end rows vanish (linearly extrapolated ghost cells)"""
    if n < 3:
        return sparse.csr_matrix((n, n))
    main = np.full(n, -2.0)
    upper = np.ones(n - 1)
    lower = np.ones(n - 1)
    main[[0, -1]] = 0.0
    upper[0] = 0.0
    lower[-1] = 0.0
    return sparse.diags([lower, main, upper], [-1, 0, 1], format="csr")


@lru_cache(maxsize=16)
def bilaplacian(shape: tuple[int, ...]) -> sparse.csr_matrix:
    """
    Squared discrete Laplacian on a row-major grid.

    The Laplacian is the Kronecker sum of 1D second differences whose end
    rows vanish; affine functions lie in its null space everywhere. Away from
    the boundary LᵀL is the 13-point (2D) or 25-point (3D) bilaplacian stencil.
    """
    laplacian = sparse.csr_matrix((int(np.prod(shape)),) * 2)
    for axis, n in enumerate(shape):
        before = int(np.prod(shape[:axis]))
        after = int(np.prod(shape[axis + 1 :]))
        term = sparse.kron(
            sparse.kron(sparse.identity(before), _second_difference(n)),
            sparse.identity(after),
        )
        laplacian = laplacian + term
    laplacian = laplacian.tocsr()
    return (laplacian.T @ laplacian).tocsr()


def biharmonic_inpaint(
    component: np.ndarray,
    missing: np.ndarray,
    rtol: float | None = None,
    maxiter: int | None = None,
) -> np.ndarray:
    """
    Fill missing positions by solving the discrete biharmonic equation.

    Known positions are Dirichlet data and pass through unchanged. The
    masked subsystem is solved by conjugate gradients for the real and
    imaginary parts.

    Raises:
        DataError: mask shape mismatch or no known position
        SolverError: CG breakdown or no convergence within maxiter
    """
    component = np.asarray(component, dtype=complex)
    missing = np.asarray(missing, dtype=bool)
    if missing.shape != component.shape:
        raise DataError(f"mask dims {missing.shape} do not match image {component.shape}")
    if not missing.any():
        return component.copy()
    if missing.all():
        raise DataError("cannot inpaint an image without known positions")
    rtol = settings.cg_rtol if rtol is None else rtol
    maxiter = settings.cg_maxiter if maxiter is None else maxiter

    operator = bilaplacian(component.shape)
    flat_missing = missing.reshape(-1)
    unknown = np.flatnonzero(flat_missing)
    known = np.flatnonzero(~flat_missing)
    system = operator[unknown][:, unknown]
    coupling = operator[unknown][:, known]

    def solve(known_values: np.ndarray) -> np.ndarray:
        rhs = -(coupling @ known_values)
        if not np.any(rhs):
            return np.zeros(unknown.size)
        solution, info = cg(system, rhs, rtol=rtol, maxiter=maxiter)
        if info != 0:
            raise SolverError(
                f"biharmonic CG did not converge (info={info}, "
                f"{unknown.size} unknowns, maxiter={maxiter})"
            )
        return solution

    values = component.reshape(-1).copy()
    values[unknown] = solve(values[known].real) + 1j * solve(values[known].imag)
    return values.reshape(component.shape)


# ---------------------------------------------------------------------------
# Dispatch over a system matrix
# ---------------------------------------------------------------------------


class SystemMatrixRestorer:
    """Runs one restoration method over every component of a system matrix"""

    def __init__(
        self,
        sm: SystemMatrix,
        method: RestoreMethod,
        background: np.ndarray | None = None,
    ):
        self.sm = sm
        self.method = method
        self.sigma = self._sigma(background) if isinstance(method, DctFMethod) else None
        self.missing = self._missing() if isinstance(method, BiharmonicMethod) else None

    def _sigma(self, background: np.ndarray | None) -> np.ndarray:
        """Per-component sigma (L, K) in the stored units"""
        sm = self.sm
        shape = (sm.n_channels, sm.n_freq)
        if self.method.sigma is not None:
            return np.full(shape, float(self.method.sigma))
        if sm.noise_std is not None:
            return np.asarray(sm.noise_std, dtype=float)
        if background is not None:
            sigma = estimate_background_sigma(background)
            if sigma.shape != shape:
                raise DataError(
                    f"background frames are {sigma.shape} components, matrix has {shape}"
                )
            if sm.restore_factor is not None:
                sigma = sigma / np.abs(sm.restore_factor)
            return sigma
        raise ConfigError(
            "no noise level: pass a sigma, a background file, or use a matrix "
            "that records noise_std"
        )

    def _missing(self) -> np.ndarray:
        sm = self.sm
        if sm.mask is None:
            raise DataError("biharmonic inpainting needs a system matrix with a mask")
        mask = np.asarray(sm.mask, dtype=bool)
        if mask.shape == sm.grid_shape:
            return np.broadcast_to(mask, sm.data.shape)
        if mask.shape != sm.data.shape:
            raise DataError(f"mask dims {mask.shape} do not match data {sm.data.shape}")
        return mask

    @property
    def calibration(self) -> CalibrationSpec:
        if isinstance(self.method, CubicMethod):
            return self.method.target
        return self.sm.calibration

    def restore_component(self, component: tuple[int, int]) -> np.ndarray:
        l, k = component
        image = self.sm.data[l, k]
        method = self.method
        if isinstance(method, DctFMethod):
            return dctf_denoise(image, method.omega, float(self.sigma[l, k]))
        if isinstance(method, CubicMethod):
            return cubic_interp(image, self.sm.calibration, method.target)
        return biharmonic_inpaint(image, self.missing[l, k], method.rtol, method.maxiter)

    def run(self, threads: int | None = None) -> SystemMatrix:
        sm = self.sm
        components = [(l, k) for l in range(sm.n_channels) for k in range(sm.n_freq)]
        results, failures = ordered_map(self.restore_component, components, threads)
        if failures:
            index, error = failures[0]
            logger.error("Restoration failed for %d components", len(failures))
            if isinstance(error, SmkError):
                raise error
            raise SolverError(
                f"restoration failed at component {components[index]}: {error}"
            ) from error

        shape = (sm.n_channels, sm.n_freq) + self.calibration.shape
        if components:
            data = np.stack(results).reshape(shape)
        else:
            data = np.zeros(shape, dtype=complex)

        step = ProvenanceStep(kind="restored", descriptor=self.method.model_dump(mode="json"))
        return sm.with_data(data, step, calibration=self.calibration, mask=None)


def restore(
    sm: SystemMatrix,
    method: RestoreMethod,
    threads: int | None = None,
    background: np.ndarray | None = None,
) -> SystemMatrix:
    """
    Apply a restoration method to every (channel, frequency) component.

    Args:
        sm: Corrupted system matrix
        method: DCT-F, cubic spline or biharmonic
        threads: Worker count; results do not depend on it
        background: Background frames (n_frames, L, K) for DCT-F when the
            matrix carries no noise_std and no sigma is given

    Returns:
        Restored SystemMatrix; restore_factor and noise_std are carried over
    """
    logger.info(
        "Restoring %d components with %s",
        sm.n_channels * sm.n_freq,
        method.kind,
    )
    return SystemMatrixRestorer(sm, method, background).run(threads)
