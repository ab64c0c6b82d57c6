"""Peeling recovery: singleton detection, subtraction, and recursion.

A bin is a singleton when it holds exactly one tone.  For a tone (f, A) the
shifted bin values form the geometric sequence A, A e^{2pi i f/M},
A e^{4pi i f/M}: constant magnitude across shifts, frequency readable from
one adjacent-shift phase ratio, and (with three shifts) a second ratio that
must agree with the first.  Multi-tone bins break at least one of those
tests in exact arithmetic, and a reading whose decoded frequency does not
hash back onto its own bin is discarded, so masquerading multi-bins fail
closed.

Peeling subtracts an accepted reading from every view at O(1) per bin and
repeats until the views are empty (Complete), no view offers a singleton
(TwoCore), or the round cap is hit (Stagnated).

Recursive view construction replaces the per-view dense FFT with sparse
recovery of the view signal itself.  That sub-problem is exact only when
the view length m splits into three pairwise coprime divisor moduli
(capacity >= 3) and the child load factor is inside the peeling threshold;
otherwise the node computes a dense length-m FFT, which is always correct.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from . import dft
from .config import Config
from .errors import DuplicateConflictError
from .numtheory import coprime_divisor_capacity, factorize
from .opcount import OpCounter
from .planner import ModuliPlan, ViewParams, rng_stream
from .planner import rehash as rehash  # re-exported: fresh hash params, same moduli
from .signal import SparseSpectrum
from .views import ViewSpectrum, build_view


class PeelStatus(enum.Enum):
    COMPLETE = "complete"
    TWO_CORE = "two-core"
    STAGNATED = "stagnated"


@dataclass(frozen=True)
class SingletonReading:
    view_index: int
    bin_index: int
    f_hat: int
    coeff: complex
    shift_ratio_error: float


@dataclass
class PeelState:
    """Mutable peeling workspace: three views plus the recovery ledger."""

    views: list[ViewSpectrum]
    M: int
    recovered: dict[int, complex] = field(default_factory=dict)
    round: int = 0
    noise_floor: float = 0.0
    op: OpCounter | None = None

    @classmethod
    def create(
        cls,
        views: list[ViewSpectrum],
        M: int,
        noise_floor_rel: float = 1e-9,
        op: OpCounter | None = None,
    ) -> "PeelState":
        peak = max((float(v.magnitudes(0).max(initial=0.0)) for v in views), default=0.0)
        return cls(views=list(views), M=M, noise_floor=noise_floor_rel * peak, op=op)

    def remaining_energy(self) -> float:
        return sum(float(np.sum(np.abs(v.bins) ** 2)) for v in self.views)

    def max_bin_magnitude(self) -> float:
        return max(
            (float(np.abs(v.bins).max(initial=0.0)) for v in self.views), default=0.0
        )


def detect_singletons(state: PeelState, tol: float = 1e-6) -> list[SingletonReading]:
    """All bins currently passing the singleton tests, in (view, bin) order."""
    readings: list[SingletonReading] = []
    M = state.M
    for vi, view in enumerate(state.views):
        bins = view.bins
        shifts = bins.shape[0]
        mag0 = np.abs(bins[0])
        cand = np.flatnonzero(mag0 > state.noise_floor)
        if state.op is not None:
            state.op.add("peel", 3 * bins.shape[1])
        if cand.size == 0:
            continue
        y0, y1 = bins[0][cand], bins[1][cand]
        ok = np.abs(y1) > 0
        err = np.zeros(cand.size)
        # (a) magnitudes agree across shifts
        for s in range(1, shifts):
            dev = np.abs(np.abs(bins[s][cand]) - mag0[cand]) / mag0[cand]
            err = np.maximum(err, dev)
        ok &= err <= tol
        # (b) frequency from the adjacent-shift phase ratio
        ratio1 = np.where(ok, y1 / np.where(y0 == 0, 1, y0), 0)
        f_hat = np.round(np.angle(ratio1) * M / (2 * np.pi)).astype(np.int64) % M
        # (c) decoded frequency must hash back onto this bin
        ok &= view.params.hash_frequency(f_hat) == cand
        # (d) with a third shift, the second ratio must repeat the first
        if shifts >= 3:
            y2 = bins[2][cand]
            ratio2 = y2 / np.where(y1 == 0, 1, y1)
            dev2 = np.abs(ratio2 - ratio1) / np.abs(np.where(ratio1 == 0, 1, ratio1))
            err = np.maximum(err, dev2)
            ok &= dev2 <= tol
        for idx in np.flatnonzero(ok):
            readings.append(
                SingletonReading(
                    view_index=vi,
                    bin_index=int(cand[idx]),
                    f_hat=int(f_hat[idx]),
                    coeff=complex(y0[idx]),
                    shift_ratio_error=float(err[idx]),
                )
            )
    return readings


def peel(state: PeelState, reading: SingletonReading) -> PeelState:
    """Subtract one recovered tone from every view and record it."""
    f, coeff = reading.f_hat, reading.coeff
    if f in state.recovered:
        if abs(coeff) <= state.noise_floor:
            raise DuplicateConflictError(
                f"frequency {f} re-detected with residual below the floor"
            )
        state.recovered[f] += coeff
    else:
        state.recovered[f] = coeff
    for view in state.views:
        target = int(view.params.hash_frequency(f))
        shifts = view.bins.shape[0]
        phase = np.exp(2j * np.pi * ((f * np.arange(shifts, dtype=np.int64)) % state.M) / state.M)
        view.bins[:, target] -= coeff * phase
        if state.op is not None:
            state.op.add("peel", 2 * shifts)
    return state


@dataclass(frozen=True)
class PeelOutcome:
    recovered: SparseSpectrum
    status: PeelStatus
    rounds: int


def _dedupe(readings: list[SingletonReading]) -> list[SingletonReading]:
    # The same tone may be isolated in several views at once; keep the
    # cleanest reading per frequency.
    best: dict[int, SingletonReading] = {}
    for r in readings:
        cur = best.get(r.f_hat)
        if cur is None or (r.shift_ratio_error, r.view_index) < (
            cur.shift_ratio_error,
            cur.view_index,
        ):
            best[r.f_hat] = r
    return [best[f] for f in sorted(best)]


def run_peeling(state: PeelState, plan: ModuliPlan, config: Config | None = None) -> PeelOutcome:
    """Detect-and-peel rounds until done, stuck, or over the round cap."""
    cfg = config or Config()
    cap = max(1, math.ceil(cfg.round_cap_c * math.log2(plan.k + 2)))
    status = None
    while True:
        if state.max_bin_magnitude() <= state.noise_floor:
            status = PeelStatus.COMPLETE
            break
        if state.round >= cap:
            status = PeelStatus.STAGNATED
            break
        readings = _dedupe(detect_singletons(state, cfg.singleton_tol))
        if not readings:
            status = PeelStatus.TWO_CORE
            break
        try:
            for reading in readings:
                peel(state, reading)
        except DuplicateConflictError:
            status = PeelStatus.STAGNATED
            break
        state.round += 1
    entries = [
        (f, c) for f, c in state.recovered.items() if abs(c) > state.noise_floor
    ]
    spectrum = SparseSpectrum.from_pairs(entries, state.M)
    return PeelOutcome(recovered=spectrum, status=status, rounds=state.round)


# ---------------------------------------------------------------------------
# Recursive view construction


def default_max_depth(n: int) -> int:
    """Depth budget ceil(log2 log2 n), at least 1."""
    if n < 4:
        return 1
    return max(1, math.ceil(math.log2(max(2.0, math.log2(n)))))


def divisor_moduli(m: int) -> tuple[int, int, int] | None:
    """Split m into three pairwise coprime moduli with product exactly m.

    Prime-power factors are distributed greedily onto the smallest bucket,
    which keeps the moduli near m^(1/3) when the factorization allows.
    Returns None when m has fewer than three distinct prime factors, in
    which case no exact three-view sub-decimation of a length-m grid exists.
    """
    if m < 8 or coprime_divisor_capacity(m) < 3:
        return None
    powers = sorted((p**e for p, e in factorize(m).items()), reverse=True)
    buckets = [1, 1, 1]
    for q in powers:
        buckets[int(np.argmin(buckets))] *= q
    if min(buckets) < 2:
        return None
    return tuple(sorted(buckets))  # type: ignore[return-value]


class _ShiftSliceSource:
    """Length-m child signal: one shift of a parent view, periodically extended."""

    def __init__(self, sampler, m: int):
        self._sampler = sampler
        self.grid_length = m
        self.original_length = m

    def sample_block(self, indices):
        return self._sampler(np.asarray(indices, dtype=np.int64) % self.grid_length)

    def sample(self, n):
        return complex(self.sample_block(np.array([n], dtype=np.int64))[0])


def recursive_spectrum(
    view_sampler,
    m: int,
    k: int,
    depth: int,
    config: Config | None = None,
    op: OpCounter | None = None,
    seed: int = 0,
    shift_count: int | None = None,
    phase: str = "views",
):
    """Per-shift spectra of a length-m view signal, sparsely when possible.

    `view_sampler(shift, indices)` must return the view samples at the given
    indices (any integers; the view signal is m-periodic).  Each shift is
    recovered independently.  A node recurses only when the length splits
    into three coprime divisor moduli and the child load factor stays under
    the peeling threshold; otherwise it computes the dense length-m
    transform, the universal escape that keeps every branch exact.

    Returns (spectra, info): spectra is a list of length-m coefficient
    arrays (synthesis convention, DFT/m), info records how many shifts
    recursed versus terminated dense.
    """
    cfg = config or Config()
    shifts = cfg.shift_count if shift_count is None else shift_count
    max_depth = cfg.max_depth if cfg.max_depth is not None else default_max_depth(m)
    moduli = divisor_moduli(m)
    can_recurse = (
        depth < max_depth
        and moduli is not None
        and k > 0
        and k / math.sqrt(m) <= cfg.lambda_threshold
        and k / min(moduli) <= cfg.lambda_threshold
        and int(round(cfg.alpha * k)) <= min(moduli)
    )
    info = {"recursed": 0, "dense_terminals": 0, "length": m, "depth": depth}
    spectra = []
    for s in range(shifts):
        result = None
        if can_recurse:
            result = _recurse_one_shift(view_sampler, s, m, k, depth, cfg, op, seed)
        if result is None:
            info["dense_terminals"] += 1
            y = view_sampler(s, np.arange(m, dtype=np.int64))
            if op is not None:
                op.add(phase, m + dft.fft_op_count(m) + m)
            result = dft.dft_forward(y) / m
        else:
            info["recursed"] += 1
        spectra.append(result)
    return spectra, info


def _recurse_one_shift(view_sampler, s, m, k, depth, cfg, op, seed):
    """Sparse recovery of one shifted view signal; None means fall back dense."""
    from . import pipeline  # deferred: pipeline drives recursion on children

    child_cfg = Config(
        alpha=cfg.alpha,
        lambda_threshold=cfg.lambda_threshold,
        t=min(cfg.t, 3),
        shift_count=cfg.shift_count,
        moduli_override=divisor_moduli(m),
        singleton_tol=cfg.singleton_tol,
        noise_floor_rel=cfg.noise_floor_rel,
        verify_eps_rel=cfg.verify_eps_rel,
        round_cap_c=cfg.round_cap_c,
        max_rehash=cfg.max_rehash,
        max_depth=(cfg.max_depth if cfg.max_depth is not None else default_max_depth(m)),
        view_mode="recursive",
        dense_budget=cfg.dense_budget,
    )
    source = _ShiftSliceSource(lambda idx, _s=s: view_sampler(_s, idx), m)
    child_seed = int(rng_stream(seed, f"recursion-{depth}-{s}-{m}").integers(0, 2**63 - 1))
    try:
        result = pipeline.sparse_fft(
            source, k, config=child_cfg, seed=child_seed, op=op, depth=depth + 1
        )
    except Exception:
        return None
    spectrum = result.spectrum
    # Resynthesis spot check: a wrong child spectrum disagrees with the view
    # samples somewhere; checking a few random indices catches it and the
    # dense terminal takes over.
    rng = rng_stream(child_seed, "recursion-spot-check")
    probes = np.unique(rng.integers(0, m, size=min(m, 8 * k + 8)))
    actual = view_sampler(s, probes)
    freqs = spectrum.frequencies()
    coeffs = spectrum.coefficients()
    if freqs.size:
        rem = (freqs[:, None] * probes[None, :]) % m
        predicted = coeffs @ np.exp(2j * np.pi * rem / m)
    else:
        predicted = np.zeros(probes.shape, dtype=np.complex128)
    scale = max(1.0, float(np.abs(actual).max(initial=0.0)))
    if np.abs(predicted - actual).max(initial=0.0) > 1e-7 * scale:
        return None
    dense = np.zeros(m, dtype=np.complex128)
    if freqs.size:
        dense[freqs] = coeffs
    return dense


def build_view_recursive(
    source,
    params: ViewParams,
    M: int,
    k: int,
    config: Config | None = None,
    op: OpCounter | None = None,
    depth: int = 0,
    seed: int = 0,
    phase: str = "views",
) -> ViewSpectrum:
    """Recursive-mode replacement for views.build_view with identical output.

    The sampler hands each shift of the view signal to recursive_spectrum;
    bin offsets (the +b modulation of the dense path) are applied as a
    cyclic shift of the recovered spectrum, since modulation in time is
    rotation in frequency.
    """
    cfg = config or Config()
    m = params.m
    if M % m != 0:
        from .errors import StrideMismatchError

        raise StrideMismatchError(f"modulus {m} does not divide grid length {M}")
    d = M // m

    def sampler(s, j):
        j = np.asarray(j, dtype=np.int64)
        idx = (params.sigma * ((j % m) * d) + s) % M
        if op is not None:
            op.add(phase, int(j.size))
        return source.sample_block(idx)

    spectra, _ = recursive_spectrum(
        sampler, m, k, depth, cfg, op, seed=seed, shift_count=params.shift_count,
        phase=phase,
    )
    bins = np.empty((params.shift_count, m), dtype=np.complex128)
    for s, c in enumerate(spectra):
        bins[s] = np.roll(c, params.b) if params.b else c
    return ViewSpectrum(params=params, M=M, bins=bins)
