"""
System-matrix simulation.

Each calibration position is an independent column: the mean moment is
sampled over one drive-field period, differentiated in time, projected on the
receive coils and reduced to one-sided Fourier coefficients
ĉ_k = (1/n) Σ_j x_j exp(-2πi k j / n), k in [0, n/2].
"""
import logging
from typing import Literal

import numpy as np
from scipy import fft

from smkit.config import settings
from smkit.exceptions import DataError, SimulationError
from smkit.models.calibration import CalibrationSpec, ReceiveChain, default_receive_chain
from smkit.models.corruption import NoiseConfig
from smkit.models.particle import ParticleSpec
from smkit.models.scanner import ScannerSpec
from smkit.models.system_matrix import ProvenanceStep, SystemMatrix
from smkit.services.corrupt import sample_noise
from smkit.services.fieldsim import drive_field_rate, total_field, trajectory_timing
from smkit.services.magnetization import (
    AnisotropyField,
    MagnetizationModel,
    anisotropy_field,
    derive_params,
    langevin_jacobian,
    langevin_moment,
    mean_moment,
    moment_jacobian,
)
from smkit.utils.constants import MU0
from smkit.utils.parallel import ordered_map

logger = logging.getLogger(__name__)

Derivative = Literal["spectral", "time_domain"]


class SystemMatrixSimulator:
    """Simulates columns of a system matrix for fixed scanner, particle and coils"""

    def __init__(
        self,
        scanner: ScannerSpec,
        particle: ParticleSpec,
        receive: ReceiveChain | None = None,
        calibration: CalibrationSpec | None = None,
        quad_order: int | None = None,
        model: MagnetizationModel = MagnetizationModel.ANISOTROPIC,
        derivative: Derivative = "spectral",
        anisotropy: AnisotropyField | None = None,
    ):
        self.scanner = scanner
        self.particle = particle
        self.receive = receive or default_receive_chain(scanner.dimensionality)
        self.calibration = calibration
        self.quad_order = quad_order or settings.quad_order
        self.model = MagnetizationModel(model)
        self.derivative = derivative
        self.params = derive_params(particle)
        self.anisotropy = anisotropy or anisotropy_field(particle, scanner, calibration)
        self.timing = trajectory_timing(scanner)
        self.times = np.arange(self.timing.n_samples) / scanner.sampling_rate
        self._coils = np.asarray(self.receive.coil_sensitivities, dtype=float)
        self._transfer = self.receive.transfer(self.timing.n_freq)

    def _moment(self, h: np.ndarray, alpha, axis) -> np.ndarray:
        if self.model is MagnetizationModel.LANGEVIN:
            return langevin_moment(self.params, h)
        return mean_moment(self.params, h, alpha, axis, self.quad_order)

    def _jacobian(self, h: np.ndarray, alpha, axis) -> np.ndarray:
        if self.model is MagnetizationModel.LANGEVIN:
            return langevin_jacobian(self.params, h)
        return moment_jacobian(self.params, h, alpha, axis, self.quad_order)

    def moment_derivative_coefficients(self, r) -> np.ndarray:
        """(1/T)∫ exp(-2πikt/T) ∂ₜm̄ dt for k in [0, K), shape (K, 3)"""
        r = np.asarray(r, dtype=float)
        n = self.timing.n_samples
        h = total_field(self.scanner, r, self.times)
        alpha, axis = self.anisotropy(r)

        if self.derivative == "spectral":
            moment = self._moment(h, alpha, axis)
            coefficients = fft.rfft(moment, axis=0) / n
            k = np.arange(self.timing.n_freq)
            return (2j * np.pi * k / self.timing.period)[:, None] * coefficients

        jacobian = self._jacobian(h, alpha, axis)
        rate = np.einsum("nab,nb->na", jacobian, drive_field_rate(self.scanner, self.times))
        return fft.rfft(rate, axis=0) / n

    def simulate_column(self, r) -> np.ndarray:
        """
        System-function values at position r.

        Returns:
            Complex array (L, K)
        """
        derivative = self.moment_derivative_coefficients(r)
        column = -MU0 * self._transfer[None, :] * (self._coils @ derivative.T)
        if not np.all(np.isfinite(column)):
            raise SimulationError(
                f"non-finite system function at r = {tuple(np.asarray(r))}",
                positions=[tuple(np.asarray(r, dtype=float))],
            )
        return column

    def simulate(
        self,
        calibration: CalibrationSpec | None = None,
        threads: int | None = None,
        seed: int | None = None,
    ) -> SystemMatrix:
        """Simulate every grid position of the calibration"""
        calibration = calibration or self.calibration
        if calibration is None:
            raise DataError("a calibration grid is required to simulate a system matrix")
        positions = calibration.positions().reshape(-1, 3)
        logger.info(
            "Simulating %d positions x %d frequencies (%s, quad_order=%d)",
            positions.shape[0],
            self.timing.n_freq,
            self.model.value,
            self.quad_order,
        )

        columns, failures = ordered_map(self.simulate_column, positions, threads)
        if failures:
            failed = [tuple(positions[index]) for index, _ in failures]
            raise SimulationError(
                f"{len(failures)} of {positions.shape[0]} columns failed; "
                f"first: {failures[0][1]}",
                positions=failed,
            )

        data = np.stack(columns, axis=-1).reshape(
            (self.receive.n_channels, self.timing.n_freq) + calibration.shape
        )
        step = ProvenanceStep(
            kind="simulated",
            seed=seed,
            descriptor={
                "model": self.model.value,
                "quad_order": self.quad_order,
                "derivative": self.derivative,
            },
        )
        return SystemMatrix(
            data=data,
            scanner=self.scanner,
            particle=self.particle,
            calibration=calibration,
            receive=self.receive,
            provenance=[step],
        )


def simulate_column(
    scanner: ScannerSpec,
    particle: ParticleSpec,
    receive: ReceiveChain,
    r,
    **options,
) -> np.ndarray:
    """Simulate one column - convenience function"""
    return SystemMatrixSimulator(scanner, particle, receive, **options).simulate_column(r)


def simulate_system_matrix(
    scanner: ScannerSpec,
    particle: ParticleSpec,
    calibration: CalibrationSpec,
    receive: ReceiveChain | None = None,
    threads: int | None = None,
    seed: int | None = None,
    **options,
) -> SystemMatrix:
    """Simulate a full system matrix - convenience function"""
    simulator = SystemMatrixSimulator(scanner, particle, receive, calibration, **options)
    return simulator.simulate(threads=threads, seed=seed)


def simulate_measurement(
    sm: SystemMatrix,
    concentration,
    noise: NoiseConfig | None = None,
    rng: np.random.Generator | None = None,
) -> np.ndarray:
    """
    Measurement u = S·vec(c) of a concentration on the calibration grid.

    Args:
        sm: System matrix
        concentration: Non-negative array (N_z, N_y, N_x)
        noise: Optional additive noise, sigma in measurement units
        rng: Random stream for the noise

    Returns:
        Complex array (L, K)
    """
    c = np.asarray(concentration, dtype=float)
    if c.shape != sm.grid_shape:
        raise DataError(f"concentration shape {c.shape} does not match grid {sm.grid_shape}")
    if np.any(c < 0):
        raise DataError("concentration must be non-negative")
    u = (sm.as_matrix() @ c.reshape(-1)).reshape(sm.n_channels, sm.n_freq)
    if noise is not None and noise.sigma > 0:
        u = u + sample_noise(noise, u.shape, rng)
    return u
