import numpy as np
import pytest

from crtfft.dft import dft_direct
from crtfft.errors import (
    DuplicateFrequencyError,
    NonFiniteError,
    OutOfRangeError,
    ParseError,
)
from crtfft.signal import (
    SparseSpectrum,
    from_dense,
    load_dense_binary,
    load_dense_csv,
    load_spectrum,
    save_dense_binary,
    save_dense_csv,
    save_spectrum,
    synthesize,
)
from conftest import random_spectrum


class TestSparseSpectrum:
    def test_sorted_and_deduped(self):
        s = SparseSpectrum.from_pairs([(5, 1j), (2, 1.0)], 8)
        assert [f for f, _ in s.entries] == [2, 5]

    def test_zero_coefficients_dropped(self):
        s = SparseSpectrum.from_pairs([(1, 0.0), (2, 1.0)], 8)
        assert len(s) == 1

    def test_duplicate_rejected(self):
        with pytest.raises(DuplicateFrequencyError):
            SparseSpectrum.from_pairs([(1, 1.0), (1, 2.0)], 8)

    def test_out_of_range_rejected(self):
        with pytest.raises(OutOfRangeError):
            SparseSpectrum.from_pairs([(8, 1.0)], 8)

    def test_nonfinite_rejected(self):
        with pytest.raises(NonFiniteError):
            SparseSpectrum.from_pairs([(1, complex("nan"))], 8)


class TestSynthesize:
    def test_dc_tone(self):
        src = synthesize(SparseSpectrum.from_pairs([(0, 1.0)], 8))
        assert all(src.sample(n) == 1.0 for n in range(8))

    def test_two_tone_worked_example_grid(self):
        spec = SparseSpectrum.from_pairs([(7, 1.0), (41, 1.0)], 1001)
        src = synthesize(spec)
        n = 17
        expected = np.exp(2j * np.pi * 7 * n / 1001) + np.exp(2j * np.pi * 41 * n / 1001)
        assert abs(src.sample(n) - expected) < 1e-12

    def test_dense_transform_recovers_coefficients(self, rng):
        spec = random_spectrum(rng, 5, 4096)
        src = synthesize(spec)
        dense = dft_direct(src.materialize()) / 4096
        for f, c in spec.entries:
            assert abs(dense[f] - c) < 1e-9
        mask = np.ones(4096, dtype=bool)
        mask[spec.frequencies()] = False
        norm = np.abs(spec.coefficients()).sum()
        assert np.abs(dense[mask]).max() <= 1e-9 * norm

    def test_repeat_access_bit_identical(self, rng):
        spec = random_spectrum(rng, 3, 1001)
        src = synthesize(spec)
        idx = np.arange(50, dtype=np.int64)
        a = src.sample_block(idx)
        b = src.sample_block(idx)
        assert (a == b).all()

    def test_energy_identity(self, rng):
        # on-grid Parseval: sum |x[n]|^2 == M * sum |A_i|^2
        spec = random_spectrum(rng, 4, 1001)
        src = synthesize(spec)
        total = np.sum(np.abs(src.materialize()) ** 2)
        assert abs(total - 1001 * spec.energy()) <= 1e-9 * total


class TestFromDense:
    def test_zero_padding(self):
        src = from_dense(np.array([1, 2, 3, 4], dtype=complex), 6)
        assert src.sample(3) == 4 and src.sample(5) == 0
        assert src.original_length == 4 and src.grid_length == 6

    def test_identity_wrapper(self, rng):
        x = rng.normal(size=5) + 0j
        src = from_dense(x)
        assert np.allclose(src.materialize(), x)

    def test_padding_consistency_with_synthesize(self, rng):
        # a 64-sample synthesis padded to 1001 equals the truncated samples
        spec = random_spectrum(rng, 2, 1001, fmax=64)
        src = synthesize(spec)
        head = src.sample_block(np.arange(64, dtype=np.int64))
        padded = from_dense(head, 1001)
        assert np.allclose(
            padded.sample_block(np.arange(64, dtype=np.int64)), head
        )
        assert padded.sample(999) == 0


class TestSpectrumFiles:
    def test_roundtrip(self, rng, tmp_path):
        spec = random_spectrum(rng, 6, 2048)
        path = tmp_path / "spec.json"
        save_spectrum(spec, path)
        assert load_spectrum(path).entries == spec.entries

    def test_empty_roundtrip(self, tmp_path):
        spec = SparseSpectrum.from_pairs([], 16)
        path = tmp_path / "empty.json"
        save_spectrum(spec, path)
        loaded = load_spectrum(path)
        assert len(loaded) == 0 and loaded.grid_length == 16

    def test_out_of_range_rejected(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text('{"grid_length": 4, "entries": [{"f": 9, "re": 1.0, "im": 0.0}]}')
        with pytest.raises(OutOfRangeError):
            load_spectrum(path)

    def test_duplicate_rejected(self, tmp_path):
        path = tmp_path / "dup.json"
        path.write_text(
            '{"grid_length": 4, "entries": ['
            '{"f": 1, "re": 1.0, "im": 0.0}, {"f": 1, "re": 2.0, "im": 0.0}]}'
        )
        with pytest.raises(DuplicateFrequencyError):
            load_spectrum(path)

    def test_malformed_rejected(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text("not json")
        with pytest.raises(ParseError):
            load_spectrum(path)


class TestDenseFiles:
    def test_binary_roundtrip(self, rng, tmp_path):
        x = rng.normal(size=17) + 1j * rng.normal(size=17)
        path = tmp_path / "sig.bin"
        save_dense_binary(x, path)
        assert np.array_equal(load_dense_binary(path), x)

    def test_csv_roundtrip(self, rng, tmp_path):
        x = rng.normal(size=9) + 1j * rng.normal(size=9)
        path = tmp_path / "sig.csv"
        save_dense_csv(x, path)
        assert np.array_equal(load_dense_csv(path), x)

    def test_truncated_binary_rejected(self, tmp_path):
        path = tmp_path / "trunc.bin"
        save_dense_binary(np.ones(4, dtype=complex), path)
        raw = path.read_bytes()
        path.write_bytes(raw[:-8])
        with pytest.raises(ParseError):
            load_dense_binary(path)
