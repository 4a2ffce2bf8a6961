"""
Pytest configuration and fixtures
"""
import numpy as np
import pytest

from smkit.models import (
    CalibrationSpec,
    ParticleSpec,
    SystemMatrix,
    default_receive_chain,
    open_mpi_scanner,
)
from smkit.services.magnetization import MagnetizationModel
from smkit.services.smsim import simulate_system_matrix


@pytest.fixture(scope="session")
def scanner_2d():
    """Reference 2D scanner: A = 12 mT/μ0, G = (-1, -1, 2) T/m/μ0"""
    return open_mpi_scanner(dims=2)


@pytest.fixture(scope="session")
def particle():
    """20 nm immobilized particle without anisotropy"""
    return ParticleSpec(core_diameter=20e-9)


@pytest.fixture(scope="session")
def calibration_9():
    """9x9 grid over the 24 mm drive-field FOV"""
    return CalibrationSpec(fov=(0.024, 0.024, 0.0), grid_size=(9, 9, 1))


@pytest.fixture(scope="session")
def langevin_sm(scanner_2d, particle, calibration_9):
    """Tiny simulated 2D system matrix (closed-form Langevin model)"""
    return simulate_system_matrix(
        scanner_2d, particle, calibration_9, model=MagnetizationModel.LANGEVIN
    )


@pytest.fixture
def sm_factory(scanner_2d, particle):
    """Build a SystemMatrix around arbitrary (L, K, N_z, N_y, N_x) data"""

    def build(data: np.ndarray, calibration: CalibrationSpec | None = None) -> SystemMatrix:
        data = np.asarray(data, dtype=complex)
        if calibration is None:
            nz, ny, nx = data.shape[2:]
            calibration = CalibrationSpec(
                fov=(0.001 * nx, 0.001 * ny, 0.001 * nz if nz > 1 else 0.0),
                grid_size=(nx, ny, nz),
            )
        return SystemMatrix(
            data=data,
            scanner=scanner_2d,
            particle=particle,
            calibration=calibration,
            receive=default_receive_chain(2 if data.shape[0] == 2 else 3),
        )

    return build


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def blob_data(rng):
    """Random smooth complex Gaussian blobs, shape (2, n_freq, *grid)"""

    def build(n_freq: int, grid: tuple[int, int, int] = (1, 9, 9)) -> np.ndarray:
        nz, ny, nx = grid
        y, x = np.meshgrid(np.linspace(-1, 1, ny), np.linspace(-1, 1, nx), indexing="ij")
        data = np.empty((2, n_freq) + grid, dtype=complex)
        for l in range(2):
            for k in range(n_freq):
                cx, cy = rng.uniform(-0.5, 0.5, size=2)
                blob = np.exp(-((x - cx) ** 2 + (y - cy) ** 2) / 0.2)
                amplitude = rng.uniform(0.5, 3.0) * np.exp(1j * rng.uniform(0, 2 * np.pi))
                data[l, k] = amplitude * blob[None]
        return data

    return build
