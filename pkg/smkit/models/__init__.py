from smkit.models.scanner import ScannerSpec, TrajectoryTiming, open_mpi_scanner
from smkit.models.particle import (
    DerivedParticleParams,
    FluidMobility,
    ImmobilizedMobility,
    ParticleSpec,
)
from smkit.models.calibration import CalibrationSpec, ReceiveChain, default_receive_chain
from smkit.models.system_matrix import ProvenanceStep, SystemMatrix
from smkit.models.corruption import (
    BackgroundNoise,
    CorruptionTask,
    DenoiseTask,
    DownsampleTask,
    InpaintingMask,
    InpaintTask,
    NoiseConfig,
    SyntheticNoise,
)
from smkit.models.reconstruction import (
    RECONSTRUCTION_PRESETS,
    FrequencySelection,
    ReconstructionConfig,
)
from smkit.models.restoration import BiharmonicMethod, CubicMethod, DctFMethod, RestoreMethod
from smkit.models.metrics import MetricReport, MetricSummary
from smkit.models.sampling import DatasetManifest, ManifestEntry, SamplingConfig

__all__ = [
    "ScannerSpec",
    "TrajectoryTiming",
    "open_mpi_scanner",
    "DerivedParticleParams",
    "FluidMobility",
    "ImmobilizedMobility",
    "ParticleSpec",
    "CalibrationSpec",
    "ReceiveChain",
    "default_receive_chain",
    "ProvenanceStep",
    "SystemMatrix",
    "BackgroundNoise",
    "CorruptionTask",
    "DenoiseTask",
    "DownsampleTask",
    "InpaintingMask",
    "InpaintTask",
    "NoiseConfig",
    "SyntheticNoise",
    "RECONSTRUCTION_PRESETS",
    "FrequencySelection",
    "ReconstructionConfig",
    "BiharmonicMethod",
    "CubicMethod",
    "DctFMethod",
    "RestoreMethod",
    "MetricReport",
    "MetricSummary",
    "DatasetManifest",
    "ManifestEntry",
    "SamplingConfig",
]
