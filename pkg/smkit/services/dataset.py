"""
Dataset materialization: simulate the entries of a manifest split to disk.

Layout:
    <out>/manifest.json
    <out>/<split>/<entry id>/   one system-matrix directory per entry
"""
import logging
from pathlib import Path

from smkit.models.sampling import DatasetManifest, ManifestEntry
from smkit.models.system_matrix import SystemMatrix
from smkit.services import storage
from smkit.services.magnetization import MagnetizationModel
from smkit.services.smsim import SystemMatrixSimulator

logger = logging.getLogger(__name__)

MANIFEST_FILE = "manifest.json"


def simulate_entry(
    entry: ManifestEntry,
    threads: int | None = None,
    quad_order: int | None = None,
    model: MagnetizationModel = MagnetizationModel.ANISOTROPIC,
) -> SystemMatrix:
    simulator = SystemMatrixSimulator(
        entry.scanner,
        entry.particle,
        calibration=entry.calibration,
        quad_order=quad_order,
        model=model,
    )
    return simulator.simulate(threads=threads, seed=entry.seed)


def materialize_split(
    manifest: DatasetManifest,
    split: str,
    out_dir: str | Path,
    threads: int | None = None,
    quad_order: int | None = None,
    model: MagnetizationModel = MagnetizationModel.ANISOTROPIC,
) -> list[Path]:
    """
    Write the manifest and simulate every entry of one split.

    Complete entries (meta.json and data.bin present) are kept, so an interrupted
    run can be resumed.
    """
    out_dir = Path(out_dir)
    storage.write_manifest(manifest, out_dir / MANIFEST_FILE)

    entries = manifest.split(split)
    logger.info("Materializing %d %s entries into %s", len(entries), split, out_dir)
    paths = []
    for position, entry in enumerate(entries, start=1):
        path = out_dir / split / entry.id
        if storage.sm_complete(path):
            logger.info("[%d/%d] %s exists, skipping", position, len(entries), entry.id)
        else:
            sm = simulate_entry(entry, threads, quad_order, model)
            storage.write_sm(sm, path)
            logger.info(
                "[%d/%d] %s grid %s", position, len(entries), entry.id, sm.grid_shape
            )
        paths.append(path)
    return paths
