import json

import numpy as np
import pytest

from crtfft.config import Config, replace
from crtfft.dft import dft_forward
from crtfft.errors import GridMismatchError, OracleCapExceededError
from crtfft.peeling import PeelStatus
from crtfft.pipeline import (
    Certificate,
    RecoveryPath,
    dense_fallback,
    sparse_fft,
    sparse_fft_dense,
    verify_certificate,
)
from crtfft.planner import make_plan
from crtfft.signal import SparseSpectrum, from_dense, synthesize
from conftest import random_spectrum, spectra_close

TOY_CFG = Config(moduli_override=(7, 11, 13), identity_hash=True, nominal_length=64)


def toy_instance(rng=None, entries=((7, 1.0), (41, 1.0))):
    spec = SparseSpectrum.from_pairs(list(entries), 1001)
    return spec, synthesize(spec)


class TestSparseFft:
    def test_worked_example_fast_path(self):
        spec, src = toy_instance()
        result = sparse_fft(src, 2, TOY_CFG, seed=1)
        assert result.path is RecoveryPath.FAST
        assert [f for f, _ in result.spectrum.entries] == [7, 41]
        assert spectra_close(result.spectrum, spec)

    def test_medium_instance_exact_and_cheaper_than_dense(self, rng):
        # full-size cell (N=2^14, t=8) runs in the acceptance suite
        cfg = Config(nominal_length=2**12)
        plan = make_plan(2**12, 8, 3, seed=3, config=cfg)
        spec = random_spectrum(rng, 8, plan.M, fmax=2**12)
        src = synthesize(spec)
        result = sparse_fft(src, 8, cfg, seed=3)
        assert result.path is RecoveryPath.FAST
        assert spectra_close(result.spectrum, spec)
        from crtfft.opcount import OpCounter

        dense_ops = OpCounter()
        dense = dense_fallback(src, 8, cfg, dense_ops)
        assert spectra_close(dense, spec)
        assert result.op_counts["total"] < dense_ops.total()

    def test_declared_sparsity_violation_falls_back(self, rng):
        # 2k true tones under a declared budget of k: top-k selection drops
        # half the energy, verification must catch it, fallback returns the
        # dense oracle's top-k
        cfg = Config(nominal_length=2**12)
        plan = make_plan(2**12, 4, 3, seed=4, config=cfg)
        spec = random_spectrum(rng, 8, plan.M, fmax=2**12)
        src = synthesize(spec)
        result = sparse_fft(src, 4, cfg, seed=4)
        assert result.path is RecoveryPath.FALLBACK
        dense = dense_fallback(src, 4, cfg)
        assert result.spectrum.entries == dense.entries

    def test_corrupted_candidate_hook_forces_exact_fallback(self, rng):
        cfg = Config(nominal_length=2**12)
        plan = make_plan(2**12, 5, 3, seed=5, config=cfg)
        spec = random_spectrum(rng, 5, plan.M, fmax=2**12)
        src = synthesize(spec)

        def corrupt(candidate):
            entries = list(candidate.entries)
            f, c = entries[0]
            entries[0] = ((f + 17) % candidate.grid_length, c)
            return SparseSpectrum.from_pairs(entries, candidate.grid_length)

        result = sparse_fft(src, 5, cfg, seed=5, corrupt_candidate=corrupt)
        assert result.path is RecoveryPath.FALLBACK
        assert spectra_close(result.spectrum, spec)
        assert result.certificate.payload["fallback_reason"] == "verification-failed"
        assert result.certificate.payload["escalation"]["extra_verify_views"] == 2

    def test_force_fallback_config(self):
        spec, src = toy_instance()
        result = sparse_fft(src, 2, replace(TOY_CFG, force_fallback=True), seed=1)
        assert result.path is RecoveryPath.FALLBACK
        assert spectra_close(result.spectrum, spec)

    def test_two_core_instance_falls_back_to_exact(self, rng):
        coeffs = np.exp(2j * np.pi * rng.random(4))
        spec = SparseSpectrum.from_pairs(list(zip((0, 7, 33, 117), coeffs)), 1001)
        src = synthesize(spec)
        cfg = replace(TOY_CFG, nominal_length=1001)
        result = sparse_fft(src, 4, cfg, seed=2)
        assert result.path is RecoveryPath.FALLBACK
        assert result.peel_status is PeelStatus.TWO_CORE
        assert result.certificate.payload["escalation"]["rehashes"] == 2
        assert spectra_close(result.spectrum, spec)

    def test_empty_spectrum(self):
        spec = SparseSpectrum.from_pairs([], 1001)
        result = sparse_fft(synthesize(spec), 0, TOY_CFG, seed=1)
        assert result.path is RecoveryPath.FAST
        assert len(result.spectrum) == 0

    def test_determinism_bytes(self, rng):
        cfg = Config(nominal_length=2**12)
        plan = make_plan(2**12, 4, 3, seed=6, config=cfg)
        spec = random_spectrum(rng, 4, plan.M, fmax=2**12)
        src = synthesize(spec)
        a = sparse_fft(src, 4, cfg, seed=6)
        b = sparse_fft(src, 4, cfg, seed=6)
        assert a.certificate.to_json() == b.certificate.to_json()
        assert a.op_counts == b.op_counts
        assert json.dumps(a.to_dict(), sort_keys=True) == json.dumps(b.to_dict(), sort_keys=True)

    def test_grid_mismatch_raises(self, rng):
        spec = random_spectrum(rng, 2, 999)  # 999 is not a plan grid
        with pytest.raises(GridMismatchError):
            sparse_fft(synthesize(spec), 2, Config(nominal_length=900), seed=0)

    def test_dense_regime_falls_back(self, rng):
        spec = random_spectrum(rng, 6, 100)
        src = from_dense(synthesize(spec).materialize())
        result = sparse_fft(src, 6, Config(), seed=0)
        assert result.path is RecoveryPath.FALLBACK
        assert "dense-regime" in result.certificate.payload["fallback_reason"]

    def test_dense_input_exercises_fallback_route(self, rng):
        # off-grid-on-the-padded-grid dense input: fast path cannot verify,
        # fallback result equals the padded dense transform exactly
        n = 64
        x = rng.normal(size=n) + 1j * rng.normal(size=n)
        cfg = Config(t=2)
        result = sparse_fft_dense(x, 3, cfg, seed=1)
        assert result.path is RecoveryPath.FALLBACK
        plan = make_plan(n, 3, 2, 1, cfg)
        padded = np.zeros(plan.M, dtype=complex)
        padded[:n] = x
        dense = dft_forward(padded) / plan.M
        for f, c in result.spectrum.entries:
            assert abs(dense[f] - c) < 1e-9

    def test_threads_do_not_change_results(self, rng):
        cfg = Config(nominal_length=2**12, view_mode="dense")
        plan = make_plan(2**12, 4, 3, seed=6, config=cfg)
        spec = random_spectrum(rng, 4, plan.M, fmax=2**12)
        src = synthesize(spec)
        a = sparse_fft(src, 4, cfg, seed=6)
        b = sparse_fft(src, 4, replace(cfg, threads=3), seed=6)
        assert a.certificate.to_json() == b.certificate.to_json()
        assert a.op_counts == b.op_counts


class TestDenseFallback:
    def test_exact_on_synthesized(self, rng):
        spec = random_spectrum(rng, 5, 1001)
        dense = dense_fallback(synthesize(spec), 5)
        assert spectra_close(dense, spec)

    def test_k_above_occupancy_returns_occupied_only(self, rng):
        spec = random_spectrum(rng, 3, 1001)
        dense = dense_fallback(synthesize(spec), 10)
        assert len(dense) == 3

    def test_toy_support(self):
        spec, src = toy_instance()
        dense = dense_fallback(src, 2)
        assert [f for f, _ in dense.entries] == [7, 41]

    def test_budget_respected(self, rng):
        spec = random_spectrum(rng, 2, 1001)
        with pytest.raises(OracleCapExceededError):
            dense_fallback(synthesize(spec), 2, Config(dense_budget=100))

    def test_tie_break_ascending_frequency(self):
        spec = SparseSpectrum.from_pairs([(3, 1.0), (900, 1.0), (41, 2.0)], 1001)
        dense = dense_fallback(synthesize(spec), 2)
        assert [f for f, _ in dense.entries] == [3, 41]


class TestCertificates:
    def make_fast_result(self, rng, gate_trail=False):
        cfg = replace(TOY_CFG, gate_trail=gate_trail, nominal_length=1001)
        spec = random_spectrum(rng, 3, 1001)
        src = synthesize(spec)
        return sparse_fft(src, 3, cfg, seed=9), src

    def test_roundtrip_no_violations(self, rng):
        result, src = self.make_fast_result(rng)
        cert = Certificate.from_json(result.certificate.to_json())
        assert verify_certificate(cert, src) == []

    def test_gate_trail_included_and_valid(self, rng):
        result, src = self.make_fast_result(rng, gate_trail=True)
        pairs = result.certificate.payload["gated_pairs"]
        assert pairs and all(len(row) == 5 for row in pairs)
        assert verify_certificate(result.certificate, src) == []

    def test_tampered_gate_pair_detected(self, rng):
        result, src = self.make_fast_result(rng, gate_trail=True)
        payload = json.loads(result.certificate.to_json())
        payload["gated_pairs"][0][3] = (payload["gated_pairs"][0][3] + 1) % 13
        cert = Certificate(payload=payload)
        violations = verify_certificate(cert, src)
        assert len(violations) == 1
        assert "gate" in violations[0]

    def test_tampered_frequency_detected(self, rng):
        result, src = self.make_fast_result(rng)
        payload = json.loads(result.certificate.to_json())
        payload["recovered"][0]["f"] += 1
        cert = Certificate(payload=payload)
        violations = verify_certificate(cert, src)
        assert violations  # residue replay and fresh residual both break

    def test_amplitude_below_threshold_detected(self, rng):
        result, src = self.make_fast_result(rng)
        payload = json.loads(result.certificate.to_json())
        f0 = payload["recovered"][0]["f"]
        tiny = payload["amplitude_threshold"] * 0.5
        payload["recovered"][0]["re"] = tiny
        payload["recovered"][0]["im"] = 0.0
        crt = payload["recovered"][0]["crt"]
        cert = Certificate(payload=payload)
        violations = verify_certificate(cert, src)
        assert any(v.startswith("amplitude-below-threshold") for v in violations)

    def test_declared_n_range_check(self, rng):
        cfg = replace(TOY_CFG, nominal_length=40)
        spec = SparseSpectrum.from_pairs([(7, 1.0), (41, 1.0)], 1001)
        result = sparse_fft(synthesize(spec), 2, cfg, seed=9)
        violations = verify_certificate(result.certificate, synthesize(spec))
        assert any("frequency-above-declared-n" in v for v in violations)

    def test_malformed_certificate(self):
        with pytest.raises(Exception):
            Certificate.from_json("{not json")
        with pytest.raises(Exception):
            Certificate.from_json('{"format": "something-else"}')
