"""
On-disk formats.

Tensors are raw little-endian files with a small header:

    magic "SMK1" | byte-order mark 0xFEFF (uint16) | dtype code (uint8) |
    ndim (uint8) | dims (ndim x uint64) | payload, row-major

Complex values are stored as interleaved float32 (re, im). A system matrix is
a directory holding meta.json, data.bin and the optional scale.bin, noise.bin
and mask.bin.
"""
import json
import logging
import os
import struct
from pathlib import Path
from typing import Any, TypeVar

import numpy as np
from pydantic import BaseModel, ValidationError

from smkit.exceptions import CorruptFileError, DataError, SchemaVersionError
from smkit.models.calibration import CalibrationSpec, ReceiveChain
from smkit.models.particle import ParticleSpec
from smkit.models.sampling import DatasetManifest
from smkit.models.scanner import ScannerSpec
from smkit.models.system_matrix import ProvenanceStep, SystemMatrix

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1
MAGIC = b"SMK1"
BYTE_ORDER_MARK = 0xFEFF

DTYPES: dict[int, np.dtype] = {
    1: np.dtype("<c8"),
    2: np.dtype("<f4"),
    3: np.dtype("u1"),
}
DTYPE_CODES = {np.dtype(d).kind: code for code, d in DTYPES.items()}

META_FILE = "meta.json"
DATA_FILE = "data.bin"
SCALE_FILE = "scale.bin"
NOISE_FILE = "noise.bin"
MASK_FILE = "mask.bin"

UNITS = {
    "scanner.gradients": "T/m/mu0",
    "scanner.df_amplitudes": "mT/mu0",
    "scanner.base_frequency": "Hz",
    "scanner.sampling_rate": "Hz",
    "particle.core_diameter": "m",
    "particle.saturation_magnetization": "A/m",
    "particle.temperature": "K",
    "particle.anisotropy_constant": "J/m^3",
    "calibration.fov": "m",
    "calibration.center": "m",
    "data": "A/m per unit concentration",
}

M = TypeVar("M", bound=BaseModel)


# ---------------------------------------------------------------------------
# Tensor files
# ---------------------------------------------------------------------------


def _dtype_code(array: np.ndarray) -> int:
    code = DTYPE_CODES.get(array.dtype.kind)
    if array.dtype == bool:
        code = 3
    if code is None:
        raise DataError(f"unsupported tensor dtype {array.dtype}")
    return code


def write_tensor(path: str | Path, array: np.ndarray) -> Path:
    """Write an array as a tensor file (complex64, float32 or uint8)"""
    array = np.asarray(array)
    code = _dtype_code(array)
    payload = np.ascontiguousarray(array, dtype=DTYPES[code])
    header = struct.pack("<4sHBB", MAGIC, BYTE_ORDER_MARK, code, array.ndim)
    header += struct.pack(f"<{array.ndim}Q", *array.shape)

    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as f:
        f.write(header)
        f.write(payload.tobytes(order="C"))
    return path


def read_tensor(path: str | Path) -> np.ndarray:
    """Read a tensor file; every header and size violation is a CorruptFileError"""
    path = Path(path)
    if not path.is_file():
        raise DataError(f"tensor file not found: {path}")
    raw = path.read_bytes()

    fixed = struct.calcsize("<4sHBB")
    if len(raw) < fixed:
        raise CorruptFileError(f"{path}: truncated header")
    magic, bom, code, ndim = struct.unpack_from("<4sHBB", raw)
    if magic != MAGIC:
        raise CorruptFileError(f"{path}: bad magic {magic!r}")
    if bom != BYTE_ORDER_MARK:
        raise CorruptFileError(f"{path}: foreign byte order")
    if code not in DTYPES:
        raise CorruptFileError(f"{path}: unknown dtype code {code}")

    dims_size = struct.calcsize(f"<{ndim}Q")
    if len(raw) < fixed + dims_size:
        raise CorruptFileError(f"{path}: truncated dims")
    shape = struct.unpack_from(f"<{ndim}Q", raw, fixed)

    dtype = DTYPES[code]
    expected = int(np.prod(shape, dtype=np.int64)) * dtype.itemsize
    payload = raw[fixed + dims_size :]
    if len(payload) != expected:
        raise CorruptFileError(
            f"{path}: payload has {len(payload)} bytes, header declares {expected}"
        )
    array = np.frombuffer(payload, dtype=dtype).reshape(shape).copy()
    return array.astype(bool) if code == 3 else array


# ---------------------------------------------------------------------------
# JSON documents
# ---------------------------------------------------------------------------


def write_json(path: str | Path, document: dict[str, Any]) -> Path:
    """JSON with sorted keys, replaced atomically through a sibling temp file"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(json.dumps(document, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    os.replace(tmp, path)
    return path


def read_json(path: str | Path) -> dict[str, Any]:
    path = Path(path)
    if not path.is_file():
        raise DataError(f"file not found: {path}")
    try:
        return json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise CorruptFileError(f"{path}: invalid JSON ({e})") from e


def read_spec(path: str | Path, model: type[M]) -> M:
    """Parameter document; validation errors surface as pydantic.ValidationError"""
    return model.model_validate(read_json(path))


def _check_schema(path: Path, document: dict[str, Any]):
    version = document.get("schema_version")
    if not isinstance(version, int):
        raise CorruptFileError(f"{path}: missing schema_version")
    if version > SCHEMA_VERSION:
        raise SchemaVersionError(
            f"{path}: schema_version {version} is newer than supported {SCHEMA_VERSION}"
        )


# ---------------------------------------------------------------------------
# System matrices
# ---------------------------------------------------------------------------


class SystemMatrixMeta(BaseModel):
    """meta.json of a system-matrix directory"""

    schema_version: int = SCHEMA_VERSION
    dims: list[int]
    scanner: ScannerSpec
    particle: ParticleSpec
    calibration: CalibrationSpec
    receive: ReceiveChain
    provenance: list[ProvenanceStep] = []
    units: dict[str, str] = UNITS
    has_scale: bool = False
    has_noise: bool = False
    has_mask: bool = False


def write_sm(sm: SystemMatrix, path: str | Path) -> Path:
    """
    Write a system matrix directory; data is stored as complex64.

    meta.json is written last, so a directory holding it is complete.
    """
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    (path / META_FILE).unlink(missing_ok=True)
    write_tensor(path / DATA_FILE, sm.data.astype(np.complex64))
    if sm.restore_factor is not None:
        write_tensor(path / SCALE_FILE, sm.restore_factor.astype(np.complex64))
    if sm.noise_std is not None:
        write_tensor(path / NOISE_FILE, sm.noise_std.astype(np.float32))
    if sm.mask is not None:
        write_tensor(path / MASK_FILE, sm.mask.astype(np.uint8))
    meta = SystemMatrixMeta(
        dims=list(sm.data.shape),
        scanner=sm.scanner,
        particle=sm.particle,
        calibration=sm.calibration,
        receive=sm.receive,
        provenance=sm.provenance,
        has_scale=sm.restore_factor is not None,
        has_noise=sm.noise_std is not None,
        has_mask=sm.mask is not None,
    )
    write_json(path / META_FILE, meta.model_dump(mode="json"))
    logger.debug("Wrote system matrix %s to %s", sm.data.shape, path)
    return path


def sm_complete(path: str | Path) -> bool:
    """True when a system-matrix directory holds both meta.json and data.bin"""
    path = Path(path)
    return (path / META_FILE).is_file() and (path / DATA_FILE).is_file()


def read_sm(path: str | Path) -> SystemMatrix:
    """Read a system matrix directory written by write_sm"""
    path = Path(path)
    if not path.is_dir():
        raise DataError(f"system matrix directory not found: {path}")
    document = read_json(path / META_FILE)
    _check_schema(path / META_FILE, document)
    try:
        meta = SystemMatrixMeta.model_validate(document)
    except ValidationError as e:
        raise CorruptFileError(f"{path / META_FILE}: {e.error_count()} schema errors") from e

    data = read_tensor(path / DATA_FILE)
    if list(data.shape) != meta.dims:
        raise CorruptFileError(f"{path}: data dims {data.shape} differ from meta {meta.dims}")

    optional = {}
    for name, filename, flag in (
        ("restore_factor", SCALE_FILE, meta.has_scale),
        ("noise_std", NOISE_FILE, meta.has_noise),
        ("mask", MASK_FILE, meta.has_mask),
    ):
        if flag:
            optional[name] = read_tensor(path / filename)

    try:
        return SystemMatrix(
            data=data,
            scanner=meta.scanner,
            particle=meta.particle,
            calibration=meta.calibration,
            receive=meta.receive,
            provenance=meta.provenance,
            **optional,
        )
    except ValueError as e:
        raise CorruptFileError(f"{path}: {e}") from e


# ---------------------------------------------------------------------------
# Manifests, noise sources and pipeline artifacts
# ---------------------------------------------------------------------------


def write_manifest(manifest: DatasetManifest, path: str | Path) -> Path:
    return write_json(path, manifest.model_dump(mode="json"))


def read_manifest(path: str | Path) -> DatasetManifest:
    path = Path(path)
    document = read_json(path)
    _check_schema(path, document)
    try:
        return DatasetManifest.model_validate(document)
    except ValidationError as e:
        raise CorruptFileError(f"{path}: {e.error_count()} schema errors") from e


def write_background(path: str | Path, frames: np.ndarray) -> Path:
    """Background frames (n_frames, L, K)"""
    frames = np.asarray(frames)
    if frames.ndim != 3:
        raise DataError(f"background frames must be (n_frames, L, K), got {frames.shape}")
    return write_tensor(path, frames.astype(np.complex64))


def read_background(path: str | Path) -> np.ndarray:
    frames = read_tensor(path)
    if frames.ndim != 3 or not np.iscomplexobj(frames):
        raise DataError(f"{path}: expected complex frames (n_frames, L, K), got {frames.shape}")
    return frames


def read_mask(path: str | Path) -> np.ndarray:
    """Boolean missing mask, True marks a missing position"""
    mask = read_tensor(path)
    if mask.dtype != bool:
        raise DataError(f"{path}: mask must be a uint8 tensor")
    return mask


def write_measurement(path: str | Path, u: np.ndarray) -> Path:
    """Measurement (L, K)"""
    return write_tensor(path, np.asarray(u).astype(np.complex64))


def read_measurement(path: str | Path) -> np.ndarray:
    u = read_tensor(path)
    if u.ndim != 2 or not np.iscomplexobj(u):
        raise DataError(f"{path}: expected a complex (L, K) measurement, got {u.shape}")
    return u


def write_image(path: str | Path, image: np.ndarray) -> Path:
    """Real image such as a reconstruction or phantom (N_z, N_y, N_x)"""
    return write_tensor(path, np.asarray(image, dtype=np.float32))


def read_image(path: str | Path) -> np.ndarray:
    image = read_tensor(path)
    if image.ndim != 3 or image.dtype != np.float32:
        raise DataError(f"{path}: expected a float32 (N_z, N_y, N_x) image")
    return image
