"""
Tests for PSNR, SSIM and metric aggregation
"""
import json

import numpy as np
import pytest

from smkit.exceptions import ConfigError, DataError
from smkit.models import CorruptionTask, DownsampleTask, MetricReport, NoiseConfig, ProvenanceStep
from smkit.services import storage
from smkit.services.evalkit import (
    aggregate,
    evaluate_collection,
    evaluate_pair,
    group_key,
    merge_reports,
    psnr,
    ssim,
)


def checkerboard(n):
    return np.where(np.indices((n, n)).sum(axis=0) % 2 == 0, 1.0, -1.0)


def corrupted_step(task: CorruptionTask) -> ProvenanceStep:
    return ProvenanceStep(kind="corrupted", seed=0, descriptor=task.model_dump(mode="json"))


@pytest.mark.unit
class TestPsnr:
    """Test peak signal-to-noise ratio"""

    def test_identical_is_capped(self):
        image = np.ones((8, 8)) * (1 + 1j)

        assert psnr(image, image) == 300.0
        assert psnr(image, image, cap=99.0) == 99.0

    def test_known_noise_level(self, rng):
        """Test 20 dB at unit peak with noise std 0.1 per part"""
        gt = np.ones((300, 300), dtype=complex)
        noise = 0.1 * (rng.standard_normal(gt.shape) + 1j * rng.standard_normal(gt.shape))

        assert psnr(gt, gt + noise) == pytest.approx(20.0, abs=0.5)

    def test_scale_invariant(self, rng):
        gt = rng.standard_normal((16, 16)) + 1j * rng.standard_normal((16, 16))
        test = gt + 0.05 * rng.standard_normal((16, 16))

        assert psnr(3.0 * gt, 3.0 * test) == pytest.approx(psnr(gt, test))

    def test_zero_ground_truth(self):
        with pytest.raises(DataError):
            psnr(np.zeros((4, 4)), np.ones((4, 4)))

    def test_shape_mismatch(self):
        with pytest.raises(DataError):
            psnr(np.ones((4, 4)), np.ones((4, 5)))


@pytest.mark.unit
class TestSsim:
    """Test structural similarity on complex images"""

    def test_identical(self, rng):
        image = rng.standard_normal((1, 12, 12)) + 1j * rng.standard_normal((1, 12, 12))

        assert ssim(image, image) == pytest.approx(1.0, abs=1e-12)

    def test_negated_checkerboard(self):
        gt = checkerboard(16) * (1 + 1j)

        assert ssim(gt, -gt) < 0

    def test_tiny_noise(self, rng):
        y, x = np.mgrid[-1:1:32j, -1:1:32j]
        gt = np.exp(-(x**2 + y**2) / 0.3) * np.exp(0.4j)
        noise = 1e-4 * (rng.standard_normal(gt.shape) + 1j * rng.standard_normal(gt.shape))

        assert ssim(gt, gt + noise) > 0.9999

    def test_too_small(self):
        with pytest.raises(DataError):
            ssim(np.ones((5, 5)), np.ones((5, 5)))


@pytest.mark.unit
class TestAggregate:
    """Test mean and confidence interval"""

    def test_constant_values(self):
        summary = aggregate([2.0, 2.0, 2.0])

        assert summary.mean == 2.0
        assert summary.ci95 == 0.0
        assert summary.count == 3

    def test_two_values(self):
        summary = aggregate([0.0, 2.0])

        assert summary.mean == pytest.approx(1.0)
        assert summary.ci95 == pytest.approx(1.96)

    def test_needs_two_values(self):
        with pytest.raises(DataError):
            aggregate([1.0])


@pytest.mark.unit
class TestEvaluate:
    """Test per-component evaluation and grouping"""

    def test_identical_matrices(self, sm_factory, blob_data):
        data = blob_data(4)
        data[:, 0] = 0.0
        sm = sm_factory(data)

        report = evaluate_pair(sm, sm)

        assert np.isnan(report.per_component["psnr"][:, 0]).all()
        assert (report.per_component["psnr"][:, 1:] == 300.0).all()
        assert report.aggregates["psnr"].count == 6
        assert report.aggregates["ssim"].mean == pytest.approx(1.0)

    def test_denormalized_units(self, sm_factory, blob_data):
        """Test that a normalized copy with its restore factor matches the source"""
        gt = sm_factory(blob_data(3))
        factor = np.abs(gt.data).max(axis=(2, 3, 4))
        normalized = gt.with_data(gt.data / factor[:, :, None, None, None], restore_factor=factor)

        report = evaluate_pair(gt, normalized, metrics=["psnr"])

        assert report.aggregates["psnr"].mean > 250.0

    def test_unknown_metric(self, sm_factory, blob_data):
        sm = sm_factory(blob_data(1))

        with pytest.raises(ConfigError):
            evaluate_pair(sm, sm, metrics=["mae"])

    def test_shape_mismatch(self, sm_factory, blob_data):
        with pytest.raises(DataError):
            evaluate_pair(sm_factory(blob_data(2)), sm_factory(blob_data(3)))

    def test_group_keys(self, sm_factory, blob_data):
        task = CorruptionTask(
            kind=DownsampleTask(factors=(3, 3, 1)), noise=NoiseConfig(sigma=0.1)
        )
        sm = sm_factory(blob_data(1)).with_data(blob_data(1), corrupted_step(task))

        assert group_key(sm, "sigma") == "0.1"
        assert group_key(sm, "scale") == "3x3x1"
        assert group_key(sm, "size") == "0-15"
        assert group_key(sm_factory(blob_data(1)), "scale") == "1"

    def test_size_bucket(self, sm_factory, blob_data):
        sm = sm_factory(blob_data(1, (1, 20, 20)))

        assert group_key(sm, "size") == "16-31"

    def test_collection_groups(self, sm_factory, blob_data, rng):
        pairs = []
        for sigma in (0.1, 0.2, 0.1):
            gt = sm_factory(blob_data(3))
            noise = sigma * rng.standard_normal(gt.data.shape)
            step = corrupted_step(CorruptionTask(noise=NoiseConfig(sigma=sigma)))
            pairs.append((gt, gt.with_data(gt.data + noise, step)))

        report = evaluate_collection(pairs, metrics=["psnr"], group_by="sigma")
        document = report.to_dict()

        assert document["aggregates"]["psnr"]["count"] == 18
        assert sorted(document["groups"]) == ["0.1", "0.2"]
        assert document["groups"]["0.1"]["psnr"]["count"] == 12

    def test_merge_reports(self):
        first = MetricReport(per_component={"psnr": np.array([[10.0, np.nan], [20.0, 30.0]])})
        second = MetricReport(per_component={"psnr": np.array([[40.0]])})

        merged = merge_reports([first, second])

        assert merged.aggregates["psnr"].count == 4
        assert merged.aggregates["psnr"].mean == pytest.approx(25.0)

    def test_small_grid_skips_ssim(self, sm_factory, blob_data):
        """Test that grids below the SSIM window keep PSNR and report NaN SSIM"""
        sm = sm_factory(blob_data(3, (1, 5, 5)))

        report = evaluate_pair(sm, sm.with_data(sm.data * 1.01))

        assert np.isnan(report.per_component["ssim"]).all()
        assert "ssim" not in report.aggregates
        assert report.aggregates["psnr"].count == 6

    def test_report_carries_per_component_values(self, sm_factory, blob_data):
        data = blob_data(3)
        data[:, 0] = 0.0
        gt = sm_factory(data)
        test = gt.with_data(gt.data * 1.01)

        unit = data[1, 2] / np.abs(data[1, 2]).max()
        expected = 40.0 - 10 * np.log10(np.mean(np.abs(unit) ** 2) / 2)

        document = evaluate_collection([(gt, test)], metrics=["psnr"], labels=["entry-0"]).to_dict()

        table = document["per_component"]["psnr"]
        assert len(table) == 2 and len(table[0]) == 3
        assert table[0][0] is None
        assert table[1][2] == pytest.approx(expected)
        assert document["entries"]["entry-0"]["psnr"] == table
        json.dumps(document, allow_nan=False)


@pytest.mark.unit
class TestStoredMatrices:
    """Test metrics on matrices read back from disk in complex64"""

    @pytest.fixture
    def stored(self, tmp_path, langevin_sm):
        storage.write_sm(langevin_sm, tmp_path / "sm")
        return tmp_path / "sm"

    @pytest.fixture
    def component(self, stored):
        data = storage.read_tensor(stored / storage.DATA_FILE)
        energy = np.sum(np.abs(data[0].astype(np.complex128)) ** 2, axis=(1, 2, 3))
        return data[0, int(np.argmax(energy))]

    def test_psnr_of_single_precision_input(self, component):
        """Test PSNR of a 1% error on a component with a peak far below 1"""
        exact = component.astype(np.complex128)
        expected = -10 * np.log10(1e-4 * np.mean(np.abs(exact / np.abs(exact).max()) ** 2) / 2)

        assert component.dtype == np.complex64
        assert np.abs(exact).max() < 1e-12
        assert psnr(component, component * np.float32(1.01)) == pytest.approx(expected, abs=1e-3)
        assert psnr(component, component * np.float32(1.01)) < 100.0

    def test_ssim_of_single_precision_input(self, component):
        assert ssim(component, component) == pytest.approx(1.0, abs=1e-12)

    def test_read_matrix_is_double_precision(self, stored):
        sm = storage.read_sm(stored)

        assert sm.data.dtype == np.complex128

    def test_evaluate_read_back_pair(self, stored, langevin_sm):
        gt = storage.read_sm(stored)

        identical = evaluate_pair(gt, gt)
        scaled = evaluate_pair(gt, gt.with_data(gt.data * 1.01), metrics=["psnr"])

        assert identical.aggregates["ssim"].mean == pytest.approx(1.0)
        assert identical.aggregates["psnr"].mean == 300.0
        assert 30.0 < scaled.aggregates["psnr"].mean < 100.0
