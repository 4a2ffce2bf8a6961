"""
Tests for noise models, inpainting masks and system-matrix corruption
"""
import numpy as np
import pytest

from smkit.exceptions import ConfigError, DataError
from smkit.models import (
    BackgroundNoise,
    CalibrationSpec,
    CorruptionTask,
    DenoiseTask,
    DownsampleTask,
    InpaintTask,
    NoiseConfig,
    SyntheticNoise,
)
from smkit.services import storage
from smkit.services.corrupt import (
    apply,
    apply_operator,
    downsample_slices,
    downsampled_calibration,
    flattened_block,
    generate_mask,
    sample_noise,
)
from smkit.services.evalkit import psnr
from smkit.utils.rng import make_rng

WHITE = SyntheticNoise(weights=(1.0, 0.0, 0.0))


@pytest.fixture
def smooth_sm(sm_factory, blob_data):
    return sm_factory(blob_data(12))


@pytest.mark.unit
class TestNoise:
    """Test noise generation"""

    def test_zero_sigma_is_silent(self):
        noise = sample_noise(NoiseConfig(sigma=0.0), (3, 4), make_rng(0))

        assert noise.shape == (3, 4)
        assert not noise.any()

    def test_white_noise_level(self):
        """Test per-part std σ of white noise"""
        noise = sample_noise(NoiseConfig(source=WHITE, sigma=0.1), (1000, 1000), make_rng(1))

        assert np.std(noise.real) == pytest.approx(0.1, rel=0.01)
        assert np.std(noise.imag) == pytest.approx(0.1, rel=0.01)

    def test_mixture_is_normalized(self):
        noise = sample_noise(NoiseConfig(sigma=0.3), (50, 40), make_rng(2))

        assert np.sqrt(np.mean(np.abs(noise) ** 2) / 2) == pytest.approx(0.3)

    def test_drift_is_correlated(self):
        """Test strong lag-1 autocorrelation of the drift part"""
        drift = SyntheticNoise(weights=(0.0, 1.0, 0.0))
        noise = sample_noise(NoiseConfig(source=drift, sigma=1.0), (10000,), make_rng(3)).real

        assert np.corrcoef(noise[:-1], noise[1:])[0, 1] > 0.9

    def test_burst_is_localized(self):
        burst = SyntheticNoise(weights=(0.0, 0.0, 1.0), burst_fraction=0.1)
        noise = sample_noise(NoiseConfig(source=burst, sigma=1.0), (1000,), make_rng(4))

        assert np.count_nonzero(noise) == 100

    def test_same_stream_same_noise(self):
        cfg = NoiseConfig(sigma=0.2)

        assert np.array_equal(
            sample_noise(cfg, (7, 7), make_rng(9, 1, 2)), sample_noise(cfg, (7, 7), make_rng(9, 1, 2))
        )


@pytest.mark.unit
class TestBackgroundNoise:
    """Test noise drawn from recorded background frames"""

    @pytest.fixture
    def frames_path(self, tmp_path, rng):
        frames = rng.standard_normal((200, 2, 5)) + 1j * rng.standard_normal((200, 2, 5))
        path = tmp_path / "background.bin"
        storage.write_background(path, frames.astype(np.complex64))
        return path

    def test_component_block(self, frames_path):
        """Test a contiguous block of one (l, k) scaled to unit std"""
        cfg = NoiseConfig(source=BackgroundNoise(path=frames_path), sigma=2.0)
        frames = storage.read_background(frames_path).astype(complex)

        noise = sample_noise(cfg, (3, 4), make_rng(0), component=(1, 2), offset=5)

        block = frames[5:17, 1, 2]
        spread = np.sqrt(np.mean(np.abs(block - block.mean()) ** 2) / 2)
        assert np.allclose(noise, 2.0 * block.reshape(3, 4) / spread)

    def test_whole_frames(self, frames_path):
        cfg = NoiseConfig(source=BackgroundNoise(path=frames_path), sigma=1.0)

        noise = sample_noise(cfg, (4, 2, 5), make_rng(0))

        assert noise.shape == (4, 2, 5)

    def test_too_few_frames(self, frames_path):
        cfg = NoiseConfig(source=BackgroundNoise(path=frames_path), sigma=1.0)

        with pytest.raises(DataError):
            sample_noise(cfg, (20, 20), make_rng(0), component=(0, 0))


@pytest.mark.unit
class TestMask:
    """Test block inpainting masks"""

    def test_small_contiguous_mask(self):
        """Test that a (1, 1, 8) grid at ratio 0.25 loses two adjacent cells"""
        mask = generate_mask((1, 1, 8), 0.25, 1, make_rng(0))
        missing = np.flatnonzero(mask.missing.ravel())

        assert mask.popcount == 2
        assert np.all(np.diff(missing) == 1)

    def test_popcount_matches_ratio(self):
        """Test round(ratio·total) missing positions on an odd grid"""
        rng = make_rng(1)
        for n_blocks in (1, 2, 3):
            for _ in range(20):
                mask = generate_mask((25, 21, 27), 0.1, n_blocks, rng)
                assert 1418 - n_blocks <= mask.popcount <= 1418

        assert generate_mask((25, 21, 27), 0.1, 1, rng).popcount == 1418

    def test_identity_traversal_is_prefix(self):
        block = flattened_block((2, 3, 4), (0, 1, 2), False, 0, 5)

        assert list(block) == [0, 1, 2, 3, 4]

    def test_block_contiguous_in_permuted_order(self):
        """Test contiguity before the inverse permutation"""
        shape = (3, 4, 5)
        permutation, start, length = (2, 0, 1), 7, 13
        block = flattened_block(shape, permutation, True, start, length)
        order = np.arange(60).reshape(shape).transpose(permutation)[..., ::-1].reshape(-1)
        positions = np.array([np.flatnonzero(order == index)[0] for index in block])

        assert list(positions) == list(range(start, start + length))

    def test_ratio_too_small_for_blocks(self):
        with pytest.raises(ConfigError):
            generate_mask((1, 1, 8), 0.1, 1, make_rng(0))

    def test_ratio_bounds(self):
        with pytest.raises(ConfigError):
            generate_mask((4, 4, 4), 1.0, 1, make_rng(0))


@pytest.mark.unit
class TestOperators:
    """Test the degradation operators"""

    def test_downsample_keeps_every_third(self):
        task = DownsampleTask(factors=(3, 3, 1))
        data = np.arange(81).reshape(1, 9, 9)

        out = apply_operator(task, data)

        assert out.shape == (1, 3, 3)
        assert list(out[0, 0]) == [0, 3, 6]
        assert list(out[0, :, 0]) == [0, 27, 54]

    def test_downsample_phase(self):
        task = DownsampleTask(factors=(2, 1, 1), phase=1)

        assert downsample_slices(task, (1, 3, 8)) == (slice(0, None, 1), slice(0, None, 1), slice(1, None, 2))

    def test_factor_larger_than_grid(self):
        with pytest.raises(ConfigError):
            downsample_slices(DownsampleTask(factors=(10, 1, 1)), (1, 9, 9))

    def test_downsampled_calibration_centers(self):
        """Test that kept cell centers coincide with the source positions"""
        calibration = CalibrationSpec(fov=(0.027, 0.02, 0.0), center=(0.001, -0.002, 0.0), grid_size=(9, 8, 1))
        task = DownsampleTask(factors=(3, 2, 1), phase=1)

        reduced = downsampled_calibration(task, calibration)

        assert reduced.grid_size == (3, 4, 1)
        assert np.allclose(reduced.axis_coordinates(0), calibration.axis_coordinates(0)[1::3])
        assert np.allclose(reduced.axis_coordinates(1), calibration.axis_coordinates(1)[1::2])

    @pytest.mark.parametrize(
        "kind",
        [DenoiseTask(), DownsampleTask(factors=(2, 3, 1)), InpaintTask()],
    )
    def test_operators_are_linear(self, kind, rng):
        a = rng.standard_normal((2, 1, 9, 9)) + 1j * rng.standard_normal((2, 1, 9, 9))
        b = rng.standard_normal((2, 1, 9, 9)) + 1j * rng.standard_normal((2, 1, 9, 9))
        missing = generate_mask((1, 9, 9), 0.2, 2, rng).missing

        combined = apply_operator(kind, 2.0 * a - 0.5j * b, missing)
        separate = 2.0 * apply_operator(kind, a, missing) - 0.5j * apply_operator(kind, b, missing)

        assert np.allclose(combined, separate)

    def test_inpaint_requires_mask(self):
        with pytest.raises(ConfigError):
            apply_operator(InpaintTask(), np.ones((1, 3, 3)))


@pytest.mark.unit
class TestApply:
    """Test corruption of whole system matrices"""

    def test_noiseless_denoise_is_normalization(self, smooth_sm):
        """Test that the restore factor undoes the normalization"""
        corrupted = apply(CorruptionTask(), smooth_sm, make_rng(0))

        assert np.allclose(np.abs(corrupted.data).max(axis=(2, 3, 4)), 1.0)
        assert np.allclose(corrupted.denormalized(), smooth_sm.data, rtol=1e-12)
        assert np.all(corrupted.noise_std == 0.0)
        assert corrupted.provenance[-1].kind == "corrupted"

    def test_random_phase_and_scale_are_undone(self, smooth_sm):
        task = CorruptionTask(random_phase=True, random_scale=(0.5, 2.0))

        corrupted = apply(task, smooth_sm, make_rng(1))

        assert np.allclose(corrupted.denormalized(), smooth_sm.data, rtol=1e-12)

    def test_downsample_matches_slicing(self, smooth_sm):
        task = CorruptionTask(kind=DownsampleTask(factors=(3, 3, 1)))

        corrupted = apply(task, smooth_sm, make_rng(2))

        assert corrupted.grid_shape == (1, 3, 3)
        assert corrupted.calibration.grid_size == (3, 3, 1)
        assert np.allclose(corrupted.denormalized(), smooth_sm.data[..., ::3, ::3])

    def test_inpaint_zeroes_missing_positions(self, smooth_sm):
        task = CorruptionTask(kind=InpaintTask(ratio=0.2, n_blocks=2))

        corrupted = apply(task, smooth_sm, make_rng(3))
        missing = corrupted.mask

        assert missing.shape == (2, 12, 1, 9, 9)
        assert np.all(corrupted.data[missing] == 0)
        assert np.allclose(corrupted.denormalized()[~missing], smooth_sm.data[~missing])

    def test_shared_mask(self, smooth_sm):
        task = CorruptionTask(kind=InpaintTask(ratio=0.2, per_component=False))

        missing = apply(task, smooth_sm, make_rng(4)).mask

        assert np.all(missing == missing[0, 0])

    def test_mask_file(self, smooth_sm, tmp_path):
        missing = np.zeros((1, 9, 9), dtype=bool)
        missing[0, 3:5, 2:7] = True
        storage.write_tensor(tmp_path / "mask.bin", missing)
        task = CorruptionTask(kind=InpaintTask(mask_path=tmp_path / "mask.bin"))

        corrupted = apply(task, smooth_sm, make_rng(5))

        assert np.all(corrupted.mask == missing)

    def test_mask_file_shape_mismatch(self, smooth_sm, tmp_path):
        storage.write_tensor(tmp_path / "mask.bin", np.zeros((1, 8, 9), dtype=bool))
        task = CorruptionTask(kind=InpaintTask(mask_path=tmp_path / "mask.bin"))

        with pytest.raises(DataError):
            apply(task, smooth_sm, make_rng(5))

    def test_white_noise_psnr(self, smooth_sm):
        """Test that σ = 0.1 on unit-maximum components gives 20 dB"""
        task = CorruptionTask(noise=NoiseConfig(source=WHITE, sigma=0.1))
        corrupted = apply(task, smooth_sm, make_rng(6))
        restored = corrupted.denormalized()

        values = [
            psnr(smooth_sm.data[l, k], restored[l, k])
            for l in range(2)
            for k in range(smooth_sm.n_freq)
        ]

        assert np.mean(values) == pytest.approx(20.0, abs=0.5)
        assert np.allclose(corrupted.noise_std * np.abs(corrupted.restore_factor), 0.1 * np.abs(smooth_sm.data).max(axis=(2, 3, 4)))

    def test_thread_count_does_not_change_result(self, smooth_sm):
        task = CorruptionTask(noise=NoiseConfig(sigma=0.05))

        single = apply(task, smooth_sm, make_rng(7), threads=1)
        threaded = apply(task, smooth_sm, make_rng(7), threads=3)

        assert np.array_equal(single.data, threaded.data)
        assert np.array_equal(single.restore_factor, threaded.restore_factor)

    def test_restore_factor_composes(self, smooth_sm):
        """Test that corrupting twice still maps back to the source units"""
        once = apply(CorruptionTask(random_phase=True), smooth_sm, make_rng(8))
        twice = apply(CorruptionTask(random_phase=True), once, make_rng(9))

        assert np.allclose(twice.denormalized(), smooth_sm.data, rtol=1e-12)

    def test_oversized_factor_rejected(self, smooth_sm):
        task = CorruptionTask(kind=DownsampleTask(factors=(10, 1, 1)))

        with pytest.raises(ConfigError):
            apply(task, smooth_sm, make_rng(0))
