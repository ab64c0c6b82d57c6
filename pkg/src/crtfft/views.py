"""Decimated, dilated, shifted observations of a signal.

For a view (m, sigma, b) over grid length M with stride d = M/m, shift s
collects the samples y[j] = x((sigma*j*d + s) mod M), modulates them by
e^{+2pi i b j/m}, and takes the length-m forward transform scaled by 1/m.
The resulting bin values are plain coefficient sums,

    value(r, s) = sum over f with (sigma*f + b) mod m == r of A_f e^{2pi i f s/M},

which is the contract every consumer (peeling, gating, verification) is
written against.  `build_view_from_spectrum` evaluates that sum directly
from a known spectrum; it serves both as the independent oracle for the FFT
path and as the bin predictor inside verification.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import dft
from .errors import StrideMismatchError
from .opcount import OpCounter
from .planner import ViewParams
from .signal import SignalSource, SparseSpectrum


@dataclass
class ViewSpectrum:
    """Per-shift bin values of one view; bins has shape (shift_count, m)."""

    params: ViewParams
    M: int
    bins: np.ndarray
    representation: str = "dense"

    @property
    def m(self) -> int:
        return self.params.m

    def magnitudes(self, shift: int = 0) -> np.ndarray:
        return np.abs(self.bins[shift])

    def occupied_count(self, floor: float, shift: int = 0) -> int:
        return int(np.count_nonzero(self.magnitudes(shift) > floor))

    def energy(self, shift: int = 0) -> float:
        return float(np.sum(self.magnitudes(shift) ** 2))

    def copy(self) -> "ViewSpectrum":
        return ViewSpectrum(self.params, self.M, self.bins.copy(), self.representation)


@dataclass(frozen=True)
class ResidueSet:
    """Occupied bins of one view, strongest first, at most capacity entries."""

    residues: tuple[tuple[int, float], ...]
    capacity: int

    def bins(self) -> tuple[int, ...]:
        return tuple(r for r, _ in self.residues)

    def __len__(self) -> int:
        return len(self.residues)


def _shift_indices(params: ViewParams, M: int, shift: int) -> np.ndarray:
    m = params.m
    if M % m != 0:
        raise StrideMismatchError(f"modulus {m} does not divide grid length {M}")
    if M > 3_000_000_000:
        raise ValueError(f"grid length {M} exceeds exact int64 index arithmetic")
    d = M // m
    j = np.arange(m, dtype=np.int64)
    # sigma < M and j*d < M, so the product stays below 2^63 under the guard.
    return (params.sigma * (j * d) + shift) % M


def build_view(
    source: SignalSource,
    params: ViewParams,
    M: int,
    op: OpCounter | None = None,
    phase: str = "views",
) -> ViewSpectrum:
    """FFT-path construction of one view from time samples."""
    m = params.m
    bins = np.empty((params.shift_count, m), dtype=np.complex128)
    j = np.arange(m, dtype=np.int64)
    modulation = None
    if params.b:
        modulation = np.exp(2j * np.pi * params.b * j / m)
    for s in range(params.shift_count):
        y = source.sample_block(_shift_indices(params, M, s))
        if modulation is not None:
            y = y * modulation
        bins[s] = dft.dft_forward(y) / m
        if op is not None:
            op.add(phase, m)                      # sample accesses
            op.add(phase, m if params.b else 0)   # modulation multiplies
            op.add(phase, dft.fft_op_count(m))
            op.add(phase, m)                      # normalization
    return ViewSpectrum(params=params, M=M, bins=bins)


def build_view_from_spectrum(
    spectrum: SparseSpectrum, params: ViewParams, M: int
) -> ViewSpectrum:
    """Direct alias-sum evaluation of the view of a known spectrum.

    Costs O(k) per shift.  Used as the oracle for the FFT path and as the
    bin predictor for candidate spectra during verification and peeling.
    """
    if M % params.m != 0:
        raise StrideMismatchError(f"modulus {params.m} does not divide grid length {M}")
    m = params.m
    bins = np.zeros((params.shift_count, m), dtype=np.complex128)
    if len(spectrum):
        freqs = spectrum.frequencies()
        coeffs = spectrum.coefficients()
        target = params.hash_frequency(freqs)
        for s in range(params.shift_count):
            phases = np.exp(2j * np.pi * ((freqs * s) % M) / M)
            np.add.at(bins[s], target, coeffs * phases)
    return ViewSpectrum(params=params, M=M, bins=bins)


def extract_residues(
    view: ViewSpectrum, alpha_k: int, noise_floor: float | None = None
) -> ResidueSet:
    """Top-alpha_k occupied bins by shift-0 magnitude; ties break upward."""
    if alpha_k < 1:
        raise ValueError(f"alpha_k must be >= 1, got {alpha_k}")
    mag = view.magnitudes(0)
    if noise_floor is None:
        peak = float(mag.max()) if mag.size else 0.0
        noise_floor = 1e-9 * peak
    occupied = np.flatnonzero(mag > noise_floor)
    if occupied.size == 0:
        return ResidueSet(residues=(), capacity=alpha_k)
    order = occupied[np.lexsort((occupied, -mag[occupied]))]
    top = order[:alpha_k]
    return ResidueSet(
        residues=tuple((int(r), float(mag[r])) for r in top),
        capacity=alpha_k,
    )


def view_energy(source: SignalSource, params: ViewParams, M: int) -> float:
    """Shift-0 time-domain energy of the view, straight from raw samples."""
    y = source.sample_block(_shift_indices(params, M, 0))
    return float(np.sum(np.abs(y) ** 2))
