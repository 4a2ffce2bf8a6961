"""
Subcommand handlers.

Each handler takes keyword arguments named like its command-line options,
does the work through the services and returns a status dict. Errors are
raised; `smkit.main` turns them into exit codes.
"""
import logging
from pathlib import Path

import numpy as np

from smkit.config import get_settings
from smkit.exceptions import ConfigError, DataError
from smkit.models.calibration import CalibrationSpec, ReceiveChain
from smkit.models.corruption import (
    BackgroundNoise,
    CorruptionTask,
    DenoiseTask,
    DownsampleTask,
    InpaintTask,
    NoiseConfig,
    SyntheticNoise,
)
from smkit.models.particle import ParticleSpec
from smkit.models.reconstruction import RECONSTRUCTION_PRESETS, ReconstructionConfig
from smkit.models.restoration import BiharmonicMethod, CubicMethod, DctFMethod
from smkit.models.sampling import SamplingConfig
from smkit.models.scanner import ScannerSpec
from smkit.services import corrupt, evalkit, patches, phantoms, plotting, recon, storage
from smkit.services.dataset import materialize_split
from smkit.services.magnetization import MagnetizationModel
from smkit.services.paramspace import build_manifest
from smkit.services.restore import restore
from smkit.services.smsim import simulate_measurement, simulate_system_matrix
from smkit.utils.rng import make_rng

logger = logging.getLogger(__name__)


def resolve_threads(threads: int | None) -> int | None:
    """SMK_THREADS wins over the command-line value"""
    env_threads = get_settings().threads
    return env_threads if env_threads is not None else threads


def parse_ints(value: str | None, count: int, name: str) -> tuple[int, ...] | None:
    """'3,3,1' -> (3, 3, 1)"""
    if value is None:
        return None
    try:
        parts = tuple(int(p) for p in value.split(","))
    except ValueError as e:
        raise ConfigError(f"--{name} expects {count} comma-separated integers, got {value!r}") from e
    if len(parts) != count:
        raise ConfigError(f"--{name} expects {count} comma-separated integers, got {value!r}")
    return parts


def parse_noise(noise: str, seed: int | None):
    """'synthetic' or 'bg:FILE'"""
    if noise == "synthetic":
        return SyntheticNoise(seed=seed)
    if noise.startswith("bg:") and len(noise) > 3:
        return BackgroundNoise(path=Path(noise[3:]), seed=seed)
    raise ConfigError(f"--noise must be 'synthetic' or 'bg:FILE', got {noise!r}")


def _sm_paths(root: Path) -> list[Path]:
    """A system-matrix directory itself, or every one below a dataset directory"""
    if (root / storage.META_FILE).is_file():
        return [root]
    paths = sorted(p.parent for p in root.rglob(storage.META_FILE))
    if not paths:
        raise DataError(f"no system matrix found under {root}")
    return paths


def simulate(
    scanner: str,
    particle: str,
    calib: str,
    out: str,
    receive: str | None = None,
    quad_order: int | None = None,
    model: str = "anisotropic",
    derivative: str = "spectral",
    threads: int | None = None,
) -> dict:
    """
    Simulate one system matrix from parameter documents.

    Args:
        scanner: ScannerSpec JSON
        particle: ParticleSpec JSON
        calib: CalibrationSpec JSON
        out: Output directory
        receive: Optional ReceiveChain JSON; axis-aligned coils otherwise
        quad_order: Sphere quadrature order
        model: anisotropic or langevin
        derivative: spectral or time_domain
        threads: Worker count

    Returns:
        dict with the output path and data dims
    """
    sm = simulate_system_matrix(
        storage.read_spec(scanner, ScannerSpec),
        storage.read_spec(particle, ParticleSpec),
        storage.read_spec(calib, CalibrationSpec),
        receive=storage.read_spec(receive, ReceiveChain) if receive else None,
        threads=resolve_threads(threads),
        quad_order=quad_order,
        model=MagnetizationModel(model),
        derivative=derivative,
    )
    storage.write_sm(sm, out)
    return {
        "status": "success",
        "message": f"Simulated system matrix written to {out}",
        "path": str(out),
        "dims": list(sm.data.shape),
    }


def dataset(
    config: str,
    out: str,
    split: str,
    quad_order: int | None = None,
    model: str = "anisotropic",
    threads: int | None = None,
) -> dict:
    """Build the manifest from a SamplingConfig and simulate one split"""
    manifest = build_manifest(storage.read_spec(config, SamplingConfig))
    paths = materialize_split(
        manifest,
        split,
        out,
        threads=resolve_threads(threads),
        quad_order=quad_order,
        model=MagnetizationModel(model),
    )
    return {
        "status": "success",
        "message": f"{len(paths)} {split} entries in {out}",
        "count": len(paths),
    }


def corrupt_sm(
    in_dir: str,
    task: str,
    sigma: float,
    out: str,
    seed: int,
    factors: str | None = None,
    phase: int = 0,
    mask_ratio: float = 0.1,
    mask_blocks: int = 1,
    mask: str | None = None,
    shared_mask: bool = False,
    noise: str = "synthetic",
    random_phase: bool = False,
    random_scale: str | None = None,
    threads: int | None = None,
) -> dict:
    """Corrupt one system matrix (or every matrix of a dataset directory)"""
    if task == "denoise":
        kind = DenoiseTask()
    elif task == "downsample":
        if factors is None:
            raise ConfigError("--task downsample needs --factors X,Y,Z")
        kind = DownsampleTask(factors=parse_ints(factors, 3, "factors"), phase=phase)
    elif task == "inpaint":
        kind = InpaintTask(
            ratio=mask_ratio,
            n_blocks=mask_blocks,
            per_component=not shared_mask,
            mask_path=Path(mask) if mask else None,
        )
    else:
        raise ConfigError(f"unknown task {task!r}")

    scale = None
    if random_scale:
        try:
            lo, hi = (float(p) for p in random_scale.split(","))
        except ValueError as e:
            raise ConfigError(f"--random-scale expects LO,HI, got {random_scale!r}") from e
        scale = (lo, hi)

    corruption = CorruptionTask(
        kind=kind,
        noise=NoiseConfig(source=parse_noise(noise, seed), sigma=sigma),
        random_phase=random_phase,
        random_scale=scale,
    )

    root = Path(in_dir)
    sources = _sm_paths(root)
    for path in sources:
        relative = path.relative_to(root)
        rng = make_rng(seed, "corrupt", str(relative))
        corrupted = corrupt.apply(corruption, storage.read_sm(path), rng, resolve_threads(threads))
        storage.write_sm(corrupted, Path(out) / relative)
    return {
        "status": "success",
        "message": f"Corrupted {len(sources)} system matrices into {out}",
        "count": len(sources),
    }


def restore_sm(
    in_dir: str,
    method: str,
    out: str,
    omega: float | None = None,
    sigma: str | None = None,
    target: str | None = None,
    reference: str | None = None,
    mask: str | None = None,
    background: str | None = None,
    threads: int | None = None,
) -> dict:
    """Restore one system matrix (or every matrix of a dataset directory)"""
    settings = get_settings()
    frames = storage.read_background(background) if background else None
    override_mask = storage.read_mask(mask) if mask else None

    root = Path(in_dir)
    sources = _sm_paths(root)
    for path in sources:
        sm = storage.read_sm(path)
        relative = path.relative_to(root)
        if method == "dctf":
            value = _parse_sigma(sigma)
            restore_method = DctFMethod(omega=omega or settings.omega, sigma=value)
        elif method == "cubic":
            restore_method = CubicMethod(
                target=_target_calibration(sm.calibration, target, reference, relative)
            )
        elif method == "biharmonic":
            restore_method = BiharmonicMethod(rtol=settings.cg_rtol, maxiter=settings.cg_maxiter)
            if override_mask is not None:
                sm.mask = override_mask
        else:
            raise ConfigError(f"unknown method {method!r}")
        restored = restore(sm, restore_method, resolve_threads(threads), frames)
        storage.write_sm(restored, Path(out) / relative)
    return {
        "status": "success",
        "message": f"Restored {len(sources)} system matrices into {out}",
        "count": len(sources),
    }


def _parse_sigma(sigma: str | None) -> float | None:
    """None or 'auto' defer to the matrix noise_std or a background file"""
    if sigma in (None, "auto"):
        return None
    try:
        return float(sigma)
    except ValueError as e:
        raise ConfigError(f"--sigma expects a number or 'auto', got {sigma!r}") from e


def _target_calibration(
    source: CalibrationSpec, target: str | None, reference: str | None, relative: Path
) -> CalibrationSpec:
    """Target grid: another matrix's calibration, or new sizes over the same FOV"""
    if reference:
        return storage.read_sm(Path(reference) / relative).calibration
    sizes = parse_ints(target, 3, "target")
    if sizes is None:
        raise ConfigError("--method cubic needs --target X,Y,Z or --reference DIR")
    return source.model_copy(update={"grid_size": sizes})


def reconstruct(
    sm: str,
    meas: str,
    out: str,
    preset: str | None = None,
    snr_threshold: float | None = None,
    lam: float | None = None,
    iters: int | None = None,
    no_nonneg: bool = False,
    noise_std: float | None = None,
    background: str | None = None,
) -> dict:
    """Reconstruct a concentration image and write it as a float32 tensor"""
    if preset is not None and preset not in RECONSTRUCTION_PRESETS:
        raise ConfigError(
            f"unknown preset {preset!r}; choose from {sorted(RECONSTRUCTION_PRESETS)}"
        )
    base = RECONSTRUCTION_PRESETS[preset] if preset else ReconstructionConfig()
    updates = {
        "snr_threshold": snr_threshold,
        "lam": lam,
        "n_iter": iters,
        "nonneg": False if no_nonneg else None,
    }
    cfg = ReconstructionConfig.model_validate(
        {**base.model_dump(), **{k: v for k, v in updates.items() if v is not None}}
    )

    system_matrix = storage.read_sm(sm)
    frames = storage.read_background(background) if background else None
    image = recon.reconstruct(
        system_matrix, storage.read_measurement(meas), cfg, noise_std, frames
    )
    storage.write_image(out, image)
    return {
        "status": "success",
        "message": f"Reconstruction written to {out}",
        "shape": list(image.shape),
        "max": float(image.max()),
    }


def evaluate(
    gt: str,
    test: str,
    out: str,
    metrics: str = "psnr,ssim",
    group_by: str | None = None,
) -> dict:
    """Compare test matrices with ground truth, pairing directories by relative path"""
    gt_root, test_root = Path(gt), Path(test)
    test_paths = _sm_paths(test_root)

    def pairs():
        for path in test_paths:
            relative = path.relative_to(test_root)
            yield storage.read_sm(gt_root / relative), storage.read_sm(path)

    names = [m.strip() for m in metrics.split(",") if m.strip()]
    labels = [path.relative_to(test_root).as_posix() for path in test_paths]
    report = evalkit.evaluate_collection(pairs(), names, group_by, labels=labels)
    document = report.to_dict()
    storage.write_json(out, document)
    return {
        "status": "success",
        "message": f"Evaluated {len(test_paths)} system matrices, report in {out}",
        "aggregates": document["aggregates"],
    }


def plot(
    in_dir: str,
    out: str,
    component: str | None = None,
    recon_slice: str | None = None,
) -> dict:
    """PGM of a frequency component of a matrix or a slice of a reconstruction"""
    if (component is None) == (recon_slice is None):
        raise ConfigError("pass exactly one of --component L,K and --recon-slice AXIS,INDEX")
    if component is not None:
        channel, frequency = parse_ints(component, 2, "component")
        image = plotting.component_image(storage.read_sm(in_dir), channel, frequency)
    else:
        axis, index = parse_ints(recon_slice, 2, "recon-slice")
        image = plotting.volume_slice(storage.read_image(in_dir), axis, index)
    plotting.emit_plot(image, out)
    return {"status": "success", "message": f"Plot written to {out}", "path": str(out)}


def measure(
    sm: str,
    out: str,
    phantom: str | None = None,
    phantom_file: str | None = None,
    sigma: float = 0.0,
    noise: str = "synthetic",
    seed: int = 0,
    phantom_out: str | None = None,
) -> dict:
    """Simulated measurement of a phantom through a system matrix"""
    system_matrix = storage.read_sm(sm)
    if phantom_file:
        concentration = storage.read_image(phantom_file)
    elif phantom:
        concentration = phantoms.make_phantom(phantom, system_matrix.calibration)
    else:
        raise ConfigError("pass --phantom NAME or --phantom-file FILE")

    noise_cfg = NoiseConfig(source=parse_noise(noise, seed), sigma=sigma)
    u = simulate_measurement(
        system_matrix, concentration, noise_cfg, make_rng(seed, "measurement")
    )
    storage.write_measurement(out, u)
    if phantom_out:
        storage.write_image(phantom_out, concentration)
    return {
        "status": "success",
        "message": f"Measurement written to {out}",
        "shape": list(u.shape),
    }


def export_patches(
    gt: str,
    corrupted: str,
    out: str,
    patch: str,
    seed: int = 0,
) -> dict:
    """Training pairs (.npz) from ground-truth and corrupted matrices"""
    nx, ny, nz = parse_ints(patch, 3, "patch")
    gt_root, corrupted_root = Path(gt), Path(corrupted)
    chunks = []
    for path in _sm_paths(corrupted_root):
        relative = path.relative_to(corrupted_root)
        rng = make_rng(seed, "patches", str(relative))
        chunks.append(
            patches.build_training_pairs(
                storage.read_sm(gt_root / relative), storage.read_sm(path), (nz, ny, nx), rng
            )
        )
    merged = {key: np.concatenate([c[key] for c in chunks]) for key in chunks[0]}
    patches.save_training_pairs(out, merged)
    return {
        "status": "success",
        "message": f"{merged['inputs'].shape[0]} training pairs written to {out}",
        "count": int(merged["inputs"].shape[0]),
    }
