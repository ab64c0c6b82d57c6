"""Exact k-sparse signal model on an integer grid.

A :class:`SparseSpectrum` lists (frequency, coefficient) pairs on a grid of
length M; the matching time-domain signal is x[n] = sum_i A_i e^{+2pi i f_i
n/M}.  :class:`SignalSource` is the lazy sample oracle over that grid: each
access costs O(k) arithmetic, and the fast path only ever touches O(sqrt(M))
indices, so nothing is materialized unless the dense fallback runs.

File formats (stable, see README): spectra as JSON; dense signals either as
little-endian float64 (re, im) pairs behind an 8-byte length header, or as
CSV with columns index,re,im.
"""

from __future__ import annotations

import csv
import json
import struct
from dataclasses import dataclass

import numpy as np

from .errors import (
    DuplicateFrequencyError,
    NonFiniteError,
    OutOfRangeError,
    ParseError,
)

# Batched index arithmetic uses int64 products of two grid positions.
_MAX_GRID = 3_000_000_000


@dataclass(frozen=True)
class SparseSpectrum:
    """Sorted, duplicate-free list of nonzero tones on a fixed grid."""

    entries: tuple[tuple[int, complex], ...]
    grid_length: int

    @classmethod
    def from_pairs(cls, pairs, grid_length: int) -> "SparseSpectrum":
        if grid_length < 1:
            raise ValueError(f"grid_length must be positive, got {grid_length}")
        cleaned = []
        for f, coeff in pairs:
            f = int(f)
            coeff = complex(coeff)
            if not (0 <= f < grid_length):
                raise OutOfRangeError(f"frequency {f} outside [0, {grid_length})")
            if coeff == 0:
                continue
            if not (np.isfinite(coeff.real) and np.isfinite(coeff.imag)):
                raise NonFiniteError(f"coefficient at frequency {f} is not finite")
            cleaned.append((f, coeff))
        cleaned.sort(key=lambda e: e[0])
        for (fa, _), (fb, _) in zip(cleaned, cleaned[1:]):
            if fa == fb:
                raise DuplicateFrequencyError(f"frequency {fa} listed twice")
        return cls(entries=tuple(cleaned), grid_length=grid_length)

    def __len__(self) -> int:
        return len(self.entries)

    def frequencies(self) -> np.ndarray:
        return np.array([f for f, _ in self.entries], dtype=np.int64)

    def coefficients(self) -> np.ndarray:
        return np.array([c for _, c in self.entries], dtype=np.complex128)

    def energy(self) -> float:
        """Sum of squared coefficient magnitudes."""
        return float(np.sum(np.abs(self.coefficients()) ** 2)) if self.entries else 0.0

    def as_dict(self) -> dict[int, complex]:
        return dict(self.entries)


class SignalSource:
    """Read-only sample oracle over the padded grid.

    Subclasses implement `sample_block`; repeated reads of the same index are
    bit-identical and concurrent reads are safe (no mutable state).
    """

    grid_length: int
    original_length: int

    def sample(self, n: int) -> complex:
        return complex(self.sample_block(np.array([n], dtype=np.int64))[0])

    def sample_block(self, indices: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def materialize(self) -> np.ndarray:
        """All grid samples, computed in bounded-memory chunks."""
        out = np.empty(self.grid_length, dtype=np.complex128)
        step = 1 << 18
        for start in range(0, self.grid_length, step):
            stop = min(start + step, self.grid_length)
            out[start:stop] = self.sample_block(np.arange(start, stop, dtype=np.int64))
        return out


class _SynthesizedSource(SignalSource):
    def __init__(self, spectrum: SparseSpectrum):
        self.spectrum = spectrum
        self.grid_length = spectrum.grid_length
        self.original_length = spectrum.grid_length
        self._freqs = spectrum.frequencies()
        self._coeffs = spectrum.coefficients()

    def sample_block(self, indices: np.ndarray) -> np.ndarray:
        idx = np.asarray(indices, dtype=np.int64) % self.grid_length
        if self._freqs.size == 0:
            return np.zeros(idx.shape, dtype=np.complex128)
        out = np.empty(idx.shape, dtype=np.complex128)
        # Chunk so the (k, block) phase matrix stays small; reduce f*n mod M
        # in exact int64 before the only float conversion.
        step = max(1, (1 << 20) // max(1, self._freqs.size))
        for start in range(0, idx.size, step):
            part = idx[start : start + step]
            rem = (self._freqs[:, None] * part[None, :]) % self.grid_length
            phases = np.exp(2j * np.pi * rem / self.grid_length)
            out[start : start + part.size] = self._coeffs @ phases
        return out


class _DenseSource(SignalSource):
    def __init__(self, samples: np.ndarray, padded_length: int):
        self._samples = samples
        self.grid_length = padded_length
        self.original_length = samples.size

    def sample_block(self, indices: np.ndarray) -> np.ndarray:
        idx = np.asarray(indices, dtype=np.int64) % self.grid_length
        out = np.zeros(idx.shape, dtype=np.complex128)
        inside = idx < self._samples.size
        out[inside] = self._samples[idx[inside]]
        return out

    def repad(self, padded_length: int) -> "_DenseSource":
        return _DenseSource(self._samples, padded_length)


def synthesize(spectrum: SparseSpectrum) -> SignalSource:
    """Lazy time-domain oracle for a sparse spectrum: O(k) per sample."""
    if spectrum.grid_length > _MAX_GRID:
        raise ValueError(f"grid length {spectrum.grid_length} above supported maximum")
    return _SynthesizedSource(spectrum)


def from_dense(samples, padded_length: int | None = None) -> SignalSource:
    """Wrap a dense buffer, zero-extended to `padded_length` when larger.

    Tones that are exact on the original length-N grid are generally not
    exact on a longer padded grid, so padded dense inputs exercise the
    verification-and-fallback route rather than the exact fast path.
    """
    arr = np.ascontiguousarray(samples, dtype=np.complex128)
    if arr.ndim != 1 or arr.size == 0:
        raise ValueError("expected a non-empty 1-D sample buffer")
    if not np.isfinite(arr).all():
        raise NonFiniteError("dense input contains NaN or Inf samples")
    if padded_length is None:
        padded_length = arr.size
    if padded_length < arr.size:
        raise ValueError(f"padded length {padded_length} below signal length {arr.size}")
    return _DenseSource(arr, int(padded_length))


def save_spectrum(spectrum: SparseSpectrum, path) -> None:
    payload = {
        "grid_length": spectrum.grid_length,
        "entries": [
            {"f": int(f), "re": float(c.real), "im": float(c.imag)}
            for f, c in spectrum.entries
        ],
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_spectrum(path) -> SparseSpectrum:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            payload = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ParseError(f"cannot read spectrum file {path}: {exc}") from exc
    if not isinstance(payload, dict):
        raise ParseError("spectrum file must hold a JSON object")
    try:
        grid_length = int(payload["grid_length"])
        pairs = [(e["f"], complex(e["re"], e["im"])) for e in payload["entries"]]
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"malformed spectrum file {path}: {exc}") from exc
    return SparseSpectrum.from_pairs(pairs, grid_length)


def save_dense_binary(samples, path) -> None:
    arr = np.ascontiguousarray(samples, dtype=np.complex128)
    inter = np.empty(2 * arr.size, dtype="<f8")
    inter[0::2] = arr.real
    inter[1::2] = arr.imag
    with open(path, "wb") as fh:
        fh.write(struct.pack("<Q", arr.size))
        fh.write(inter.tobytes())


def load_dense_binary(path) -> np.ndarray:
    try:
        with open(path, "rb") as fh:
            raw = fh.read()
        (n,) = struct.unpack_from("<Q", raw, 0)
        body = np.frombuffer(raw, dtype="<f8", offset=8)
        if body.size != 2 * n:
            raise ValueError(f"header says {n} samples, body holds {body.size // 2}")
    except (OSError, struct.error, ValueError) as exc:
        raise ParseError(f"cannot read dense signal {path}: {exc}") from exc
    return (body[0::2] + 1j * body[1::2]).astype(np.complex128)


def save_dense_csv(samples, path) -> None:
    arr = np.ascontiguousarray(samples, dtype=np.complex128)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["index", "re", "im"])
        for i, value in enumerate(arr):
            writer.writerow([i, repr(float(value.real)), repr(float(value.imag))])


def load_dense_csv(path) -> np.ndarray:
    try:
        with open(path, "r", newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise ParseError(f"cannot read dense signal {path}: {exc}") from exc
    if not rows or [c.strip() for c in rows[0]] != ["index", "re", "im"]:
        raise ParseError(f"{path}: expected header 'index,re,im'")
    try:
        data = sorted((int(r[0]), float(r[1]), float(r[2])) for r in rows[1:] if r)
    except (IndexError, ValueError) as exc:
        raise ParseError(f"{path}: malformed row: {exc}") from exc
    if [i for i, _, _ in data] != list(range(len(data))):
        raise ParseError(f"{path}: indices must cover 0..n-1 exactly once")
    return np.array([re + 1j * im for _, re, im in data], dtype=np.complex128)
