import numpy as np
import pytest

from firenet import (
    AugmentPolicy,
    ConfigError,
    DatasetError,
    DecodeError,
    InputError,
    Sample,
    augment,
    batch_iter,
    decode_image,
    load_dataset,
    normalize,
    resize_bilinear,
    split,
)
from conftest import png_bytes, solid_png


def make_sample(pixels, label=1, sample_id="s0"):
    return Sample(pixels=pixels.astype(np.float32), label=label,
                  category="fire", id=sample_id)


class TestDecode:
    def test_solid_red_png(self):
        out = decode_image(solid_png(255, 0, 0, size=(4, 6)))
        assert out.shape == (3, 4, 6)
        assert out.dtype == np.uint8
        assert (out[0] == 255).all() and (out[1] == 0).all() and (out[2] == 0).all()

    def test_grayscale_replicated_across_channels(self):
        gray = np.full((5, 5), 77, dtype=np.uint8)
        out = decode_image(png_bytes(gray))
        assert out.shape == (3, 5, 5)
        for c in range(3):
            assert (out[c] == 77).all()

    def test_truncated_payload_names_sample(self):
        data = solid_png(1, 2, 3)[:20]
        with pytest.raises(DecodeError) as err:
            decode_image(data, sample_id="broken.png")
        assert "broken.png" in str(err.value)

    def test_garbage_payload(self):
        with pytest.raises(DecodeError):
            decode_image(b"not an image at all")


class TestResize:
    def test_identity_copies(self):
        img = np.arange(2 * 3 * 4, dtype=np.uint8).reshape(2, 3, 4)
        out = resize_bilinear(img, 3, 4)
        assert out.dtype == np.float32
        np.testing.assert_array_equal(out, img.astype(np.float32))
        out[0, 0, 0] = -1  # must be a copy, not a view
        assert img[0, 0, 0] == 0

    def test_constant_image_stays_constant(self):
        img = np.full((3, 5, 7), 93, dtype=np.uint8)
        out = resize_bilinear(img, 224, 160)
        assert out.shape == (3, 224, 160)
        np.testing.assert_allclose(out, 93.0, rtol=0, atol=1e-4)

    def test_2x2_to_4x4_half_pixel_centers(self):
        """Upscaling [[0,255],[0,255]] horizontally: output centers sample
        source x = (j+0.5)*0.5-0.5 = {-0.25, 0.25, 0.75, 1.25}, clamped to
        [0,1], interpolating to {0, 63.75, 191.25, 255}."""
        img = np.zeros((1, 2, 2), dtype=np.uint8)
        img[0, :, 1] = 255
        out = resize_bilinear(img, 4, 4)
        expected_row = np.array([0.0, 63.75, 191.25, 255.0], dtype=np.float32)
        for i in range(4):
            np.testing.assert_allclose(out[0, i], expected_row, atol=1e-4)

    def test_downscale_averages(self):
        # 4x4 checkerboard of 0/100 downsampled 2x: every 2x2 block averages.
        img = np.zeros((1, 4, 4), dtype=np.uint8)
        img[0, ::2, 1::2] = 100
        img[0, 1::2, ::2] = 100
        out = resize_bilinear(img, 2, 2)
        np.testing.assert_allclose(out, 50.0, atol=1e-4)

    def test_monotone_ramp_preserved(self):
        img = np.tile(np.arange(8, dtype=np.uint8) * 30, (8, 1))[None]
        out = resize_bilinear(img, 8, 16)
        row = out[0, 0]
        assert (np.diff(row) >= -1e-5).all()
        assert row[0] == 0.0 and row[-1] == 210.0


class TestNormalize:
    def test_exact_values(self):
        img = np.array([[[0, 128, 255]]], dtype=np.uint8)
        out = normalize(img)
        assert out.dtype == np.float32
        assert out[0, 0, 0] == 0.0
        assert out[0, 0, 1] == np.float32(128) / np.float32(255)
        assert out[0, 0, 2] == 1.0

    def test_range(self, rng):
        img = rng.integers(0, 256, size=(3, 10, 10), dtype=np.uint8)
        out = normalize(img)
        assert out.min() >= 0.0 and out.max() <= 1.0


class TestAugment:
    def test_disabled_policy_is_identity(self, rng):
        pixels = rng.random((3, 8, 8), dtype=np.float32)
        sample = make_sample(pixels)
        out = augment(sample, AugmentPolicy.disabled(), rng)
        np.testing.assert_array_equal(out.pixels, pixels)

    def test_hflip_reverses_columns(self):
        pixels = np.array([[[1.0, 2.0], [3.0, 4.0]]], dtype=np.float32)
        pixels = np.repeat(pixels, 3, axis=0) / 4.0
        sample = make_sample(pixels)
        policy = AugmentPolicy(rotation_enabled=False, brightness_enabled=False,
                               noise_enabled=False, hflip_prob=1.0)
        out = augment(sample, policy, np.random.default_rng(0))
        np.testing.assert_array_equal(out.pixels, pixels[:, :, ::-1])

    def test_same_generator_state_reproduces(self, rng):
        pixels = rng.random((3, 16, 16), dtype=np.float32)
        sample = make_sample(pixels)
        policy = AugmentPolicy()
        a = augment(sample, policy, np.random.default_rng(123))
        b = augment(sample, policy, np.random.default_rng(123))
        np.testing.assert_array_equal(a.pixels, b.pixels)

    def test_label_id_category_untouched(self, rng):
        sample = make_sample(rng.random((3, 8, 8), dtype=np.float32),
                             label=0, sample_id="keep/me.png")
        out = augment(sample, AugmentPolicy(), np.random.default_rng(7))
        assert (out.label, out.id, out.category) == (0, "keep/me.png", "fire")

    def test_output_stays_in_unit_range(self, rng):
        sample = make_sample(rng.random((3, 12, 12), dtype=np.float32))
        policy = AugmentPolicy(brightness_range=(1.5, 2.0), noise_sigma=0.5)
        out = augment(sample, policy, np.random.default_rng(3))
        assert out.pixels.min() >= 0.0 and out.pixels.max() <= 1.0

    def test_bad_policy_rejected(self, rng):
        sample = make_sample(rng.random((3, 4, 4), dtype=np.float32))
        with pytest.raises(ConfigError):
            augment(sample, AugmentPolicy(hflip_prob=1.5), np.random.default_rng(0))


class TestLoadDataset:
    def test_binary_layout_counts(self, make_image_dir):
        root = make_image_dir({"fire": 3, "no_fire": 2})
        ds = load_dataset(root, layout="binary")
        assert len(ds) == 5
        assert ds.class_counts() == {0: 2, 1: 3}
        assert all(r.category == "fire" for r in ds if r.label == 1)
        assert all(r.category == "none" for r in ds if r.label == 0)

    def test_four_category_layout(self, make_image_dir):
        root = make_image_dir({"fire_only": 2, "smoke_only": 1,
                               "fire_and_smoke": 1, "none": 3})
        ds = load_dataset(root, layout="dfire4")
        assert ds.class_counts() == {0: 3, 1: 4}
        categories = {r.category for r in ds}
        assert categories == {"fire_only", "smoke_only", "fire_and_smoke", "none"}

    def test_ids_are_sorted_relative_paths(self, make_image_dir):
        root = make_image_dir({"fire": 2, "no_fire": 1})
        ds = load_dataset(root)
        ids = [r.id for r in ds]
        assert ids == sorted(ids)
        assert ids[0].startswith("fire/") or ids[0].startswith("no_fire/")

    def test_missing_class_dir_named(self, make_image_dir):
        root = make_image_dir({"fire": 2})
        with pytest.raises(DatasetError) as err:
            load_dataset(root)
        assert "no_fire" in str(err.value)

    def test_empty_class_dir_rejected(self, make_image_dir):
        root = make_image_dir({"fire": 2, "no_fire": 1})
        extra = root / "no_fire"
        for p in extra.iterdir():
            p.unlink()
        with pytest.raises(DatasetError) as err:
            load_dataset(root)
        assert "no images" in str(err.value)

    def test_unknown_layout(self, make_image_dir):
        root = make_image_dir({"fire": 1, "no_fire": 1})
        with pytest.raises(ConfigError):
            load_dataset(root, layout="threeway")

    def test_non_image_files_ignored(self, make_image_dir):
        root = make_image_dir({"fire": 2, "no_fire": 2})
        (root / "fire" / "notes.txt").write_text("not an image")
        ds = load_dataset(root)
        assert len(ds) == 4

    def test_nested_directories_scanned(self, make_image_dir):
        root = make_image_dir({"fire": 1, "no_fire": 1})
        nested = root / "fire" / "batch2"
        nested.mkdir()
        (nested / "deep.png").write_bytes(solid_png(200, 10, 10))
        ds = load_dataset(root)
        assert len(ds) == 3
        assert "fire/batch2/deep.png" in [r.id for r in ds]


class TestSplit:
    def test_disjoint_and_exhaustive(self, make_image_dir):
        root = make_image_dir({"fire": 13, "no_fire": 8})
        ds = load_dataset(root)
        train, test = split(ds, 0.2, seed=3)
        train_ids = {r.id for r in train}
        test_ids = {r.id for r in test}
        assert not train_ids & test_ids
        assert train_ids | test_ids == {r.id for r in ds}

    def test_deterministic_for_seed(self, make_image_dir):
        root = make_image_dir({"fire": 10, "no_fire": 10})
        ds = load_dataset(root)
        first = split(ds, 0.3, seed=5)
        second = split(ds, 0.3, seed=5)
        assert [r.id for r in first[1]] == [r.id for r in second[1]]
        third = split(ds, 0.3, seed=6)
        assert [r.id for r in third[1]] != [r.id for r in first[1]]

    def test_half_of_ten_balanced_gives_five_five(self, make_image_dir):
        root = make_image_dir({"fire": 5, "no_fire": 5})
        ds = load_dataset(root)
        train, test = split(ds, 0.5, seed=0)
        assert len(test) == 5 and len(train) == 5
        # stratification: the 5 test samples split 2/3 or 3/2 by class
        counts = test.class_counts()
        assert sorted(counts.values()) == [2, 3]

    def test_test_count_is_ceiling_of_fraction(self, make_image_dir):
        root = make_image_dir({"fire": 11, "no_fire": 10})
        ds = load_dataset(root)  # 21 samples; 0.2 * 21 = 4.2 -> 5
        _, test = split(ds, 0.2, seed=1)
        assert len(test) == 5

    def test_stratified_ratio_within_one_sample(self, make_image_dir):
        root = make_image_dir({"fire": 31, "no_fire": 17})
        ds = load_dataset(root)
        _, test = split(ds, 0.25, seed=2)
        counts = test.class_counts()
        assert counts[1] == 8 and counts[0] == 4  # exact shares 7.75 and 4.25

    def test_stratified_remainder_tie_goes_to_lower_class(self, make_image_dir):
        root = make_image_dir({"fire": 30, "no_fire": 18})
        ds = load_dataset(root)
        _, test = split(ds, 0.25, seed=2)
        # exact shares 7.5 / 4.5 tie on fractional part; class 0 wins the slot
        assert test.class_counts() == {0: 5, 1: 7}

    def test_unstratified_still_disjoint(self, make_image_dir):
        root = make_image_dir({"fire": 9, "no_fire": 3})
        ds = load_dataset(root)
        train, test = split(ds, 0.25, seed=0, stratified=False)
        assert len(test) == 3 and len(train) == 9

    def test_degenerate_fraction_rejected(self, make_image_dir):
        root = make_image_dir({"fire": 2, "no_fire": 2})
        ds = load_dataset(root)
        with pytest.raises(InputError):
            split(ds, 0.0)
        with pytest.raises(InputError):
            split(ds, 1.0)


class TestBatchIter:
    def test_batch_sizes_cover_dataset(self, make_image_dir):
        root = make_image_dir({"fire": 40, "no_fire": 30})
        ds = load_dataset(root)
        batches = list(batch_iter(ds, 32, image_size=(32, 32)))
        assert [len(labels) for _, labels in batches] == [32, 32, 6]
        pixels, labels = batches[0]
        assert pixels.shape == (32, 3, 32, 32)
        assert pixels.dtype == np.float32
        assert labels.dtype == np.int64

    def test_unshuffled_follows_id_order(self, make_image_dir):
        root = make_image_dir({"fire": 3, "no_fire": 3})
        ds = load_dataset(root)
        (_, labels), = list(batch_iter(ds, 6, image_size=(8, 8)))
        np.testing.assert_array_equal(labels, ds.labels)

    def test_shuffle_varies_by_epoch_and_reproduces(self, make_image_dir):
        root = make_image_dir({"fire": 16, "no_fire": 16})
        ds = load_dataset(root)

        def order(epoch):
            labels = [l for _, ls in batch_iter(ds, 8, shuffle=True, seed=4,
                                                epoch=epoch, image_size=(8, 8))
                      for l in ls]
            return labels

        assert order(1) == order(1)
        assert order(1) != order(2)

    def test_augment_draws_attached_to_sample_not_batch(self, make_image_dir):
        """The same image must receive the same augmentation whether it is
        visited in a size-1 batch or a size-n batch."""
        root = make_image_dir({"fire": 2, "no_fire": 2}, size=(16, 16))
        ds = load_dataset(root)
        policy = AugmentPolicy()
        big = np.concatenate([p for p, _ in batch_iter(
            ds, 4, seed=9, epoch=2, image_size=(16, 16), augment_policy=policy)])
        small = np.concatenate([p for p, _ in batch_iter(
            ds, 1, seed=9, epoch=2, image_size=(16, 16), augment_policy=policy)])
        np.testing.assert_array_equal(big, small)

    def test_undecodable_skipped_unless_strict(self, make_image_dir, caplog):
        root = make_image_dir({"fire": 3, "no_fire": 2})
        (root / "fire" / "img_000.png").write_bytes(b"corrupted")
        ds = load_dataset(root)
        with caplog.at_level("WARNING"):
            batches = list(batch_iter(ds, 8, image_size=(8, 8)))
        assert sum(len(ls) for _, ls in batches) == 4
        assert "img_000.png" in caplog.text
        with pytest.raises(DecodeError):
            list(batch_iter(ds, 8, image_size=(8, 8), strict_decode=True))

    def test_bad_batch_size(self, make_image_dir):
        root = make_image_dir({"fire": 1, "no_fire": 1})
        ds = load_dataset(root)
        with pytest.raises(InputError):
            list(batch_iter(ds, 0))
