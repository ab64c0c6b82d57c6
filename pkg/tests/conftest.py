import numpy as np
import pytest

from crtfft import SparseSpectrum


def spectra_close(got, want, tol=1e-9):
    """Same support, coefficients within tol (absolute)."""
    if [f for f, _ in got.entries] != [f for f, _ in want.entries]:
        return False
    return all(
        abs(a - b) <= tol for (_, a), (_, b) in zip(got.entries, want.entries)
    )


def random_spectrum(rng, k, grid, fmax=None, unit=False):
    """k distinct tones on [0, fmax or grid) with O(1) magnitudes."""
    top = grid if fmax is None else fmax
    support = set()
    while len(support) < k:
        support.add(int(rng.integers(0, top)))
    if unit:
        coeffs = np.exp(2j * np.pi * rng.random(k))
    else:
        mags = rng.uniform(0.5, 2.0, size=k)
        coeffs = mags * np.exp(2j * np.pi * rng.random(k))
    return SparseSpectrum.from_pairs(list(zip(sorted(support), coeffs)), grid)


@pytest.fixture
def rng():
    return np.random.default_rng(20240911)
