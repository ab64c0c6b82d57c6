"""End-to-end orchestration: plan, views, peel, verify, accept or fall back.

The fast path is accepted only when peeling completes and every verification
view confirms the candidate.  Any failure (dense regime, a stuck residual
after the rehash budget, too many candidates, or a failed verification even
after extra views are appended) routes to the dense fallback, which
materializes the grid, transforms it, and returns the top-k bins exactly.
Every run emits a self-contained certificate from which a third party can
replay the moduli, the residue sets, each reconstruction, and the
verification outcomes against nothing but the certificate and the signal.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass

import numpy as np

from . import dft
from .config import Config
from .errors import (
    DenseRegimeError,
    GridMismatchError,
    OracleCapExceededError,
    ParseError,
)
from .gating import gate_pairs
from .numtheory import ModTriple, garner3_parts
from .opcount import OpCounter
from .peeling import (
    PeelState,
    PeelStatus,
    build_view_recursive,
    run_peeling,
)
from .planner import (
    ModuliPlan,
    Regime,
    ViewParams,
    make_plan,
    rehash,
    rng_stream,
    _draw_view_params,
)
from .signal import SignalSource, SparseSpectrum, from_dense, synthesize
from .verification import VerificationReport, residual_check, verify
from .views import ResidueSet, build_view, build_view_from_spectrum, extract_residues


class RecoveryPath(enum.Enum):
    FAST = "fast"
    FALLBACK = "fallback"


@dataclass(frozen=True)
class Certificate:
    """Replayable audit record of one recovery run."""

    payload: dict

    def to_json(self) -> str:
        return json.dumps(self.payload, sort_keys=True, separators=(",", ":"))

    @classmethod
    def from_json(cls, text: str) -> "Certificate":
        try:
            payload = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ParseError(f"malformed certificate: {exc}") from exc
        if not isinstance(payload, dict) or payload.get("format") != "crtfft-certificate/1":
            raise ParseError("not a crtfft certificate")
        return cls(payload=payload)


@dataclass(frozen=True)
class RecoveryResult:
    spectrum: SparseSpectrum
    path: RecoveryPath
    certificate: Certificate
    op_counts: dict
    peel_status: PeelStatus | None
    verification: VerificationReport | None

    def to_dict(self) -> dict:
        return {
            "path": self.path.value,
            "spectrum": {
                "grid_length": self.spectrum.grid_length,
                "entries": [
                    {"f": int(f), "re": float(c.real), "im": float(c.imag)}
                    for f, c in self.spectrum.entries
                ],
            },
            "op_counts": self.op_counts,
            "certificate": self.certificate.payload,
        }


def dense_fallback(
    source: SignalSource,
    k: int,
    config: Config | None = None,
    op: OpCounter | None = None,
) -> SparseSpectrum:
    """Exact dense transform of the grid, reduced to its top-k bins.

    Deterministic tie-break: magnitude descending, then frequency ascending.
    Bins at roundoff level (1e-12 of the peak) are not reported, so asking
    for more tones than the signal holds returns only the occupied bins.
    """
    cfg = config or Config()
    M = source.grid_length
    if M > cfg.dense_budget:
        raise OracleCapExceededError(
            f"grid length {M} exceeds the dense budget {cfg.dense_budget}"
        )
    samples = source.materialize()
    spectrum = dft.dft_forward(samples) / M
    if op is not None:
        op.add("fallback", M + dft.fft_op_count(M) + 2 * M)
    mags = np.abs(spectrum)
    peak = float(mags.max(initial=0.0))
    occupied = np.flatnonzero(mags > 1e-12 * max(peak, 1e-300))
    if occupied.size == 0:
        return SparseSpectrum.from_pairs([], M)
    order = occupied[np.lexsort((occupied, -mags[occupied]))]
    top = sorted(int(f) for f in order[: max(k, 0)])
    return SparseSpectrum.from_pairs([(f, complex(spectrum[f])) for f in top], M)


def _build_id_views(source, plan, cfg, op, seed, depth):
    if cfg.view_mode == "recursive":
        return [
            build_view_recursive(source, vp, plan.M, plan.k, cfg, op, depth=depth, seed=seed)
            for vp in plan.id_views
        ]
    if cfg.threads > 1:
        # Views are independent and the source is read-only; merge the
        # per-thread counters afterwards so totals stay deterministic.
        from concurrent.futures import ThreadPoolExecutor

        counters = [OpCounter() for _ in plan.id_views]
        with ThreadPoolExecutor(max_workers=min(cfg.threads, len(plan.id_views))) as pool:
            futures = [
                pool.submit(build_view, source, vp, plan.M, counters[i], "views")
                for i, vp in enumerate(plan.id_views)
            ]
            views = [f.result() for f in futures]
        if op is not None:
            for c in counters:
                for phase, count in c.phases.items():
                    op.add(phase, count)
        return views
    return [build_view(source, vp, plan.M, op, phase="views") for vp in plan.id_views]


def _subtract_spectrum(views, spectrum):
    for view in views:
        predicted = build_view_from_spectrum(spectrum, view.params, view.M)
        view.bins -= predicted.bins


def _top_k(entries: dict[int, complex], k: int, grid: int) -> SparseSpectrum:
    ranked = sorted(entries.items(), key=lambda fc: (-abs(fc[1]), fc[0]))
    return SparseSpectrum.from_pairs(ranked[: max(k, 0)], grid)


def sparse_fft(
    source: SignalSource,
    k: int,
    config: Config | None = None,
    seed: int = 0,
    op: OpCounter | None = None,
    depth: int = 0,
    corrupt_candidate=None,
) -> RecoveryResult:
    """Recover the k-sparse spectrum of `source` with a certificate.

    The source's grid length must equal the plan's modulus product; build
    the plan first (make_plan) and synthesize or pad onto plan.M, or use
    sparse_fft_dense for raw buffers.  `corrupt_candidate` is test
    instrumentation: it maps the candidate spectrum to a corrupted one just
    before verification, to exercise the fallback guarantee.
    """
    cfg = config or Config()
    op = op if op is not None else OpCounter()
    if k < 0:
        raise ValueError("k must be >= 0")
    N = cfg.nominal_length or source.original_length

    fallback_reason = None
    plan = None
    peel_status = None
    report = None
    residue_sets: list[ResidueSet] = []
    recovered: dict[int, complex] = {}
    rehashes = 0
    extra_views_used = 0
    candidate = None

    if cfg.force_fallback:
        fallback_reason = "forced"
    else:
        try:
            plan = make_plan(N, k, cfg.t, seed, cfg)
        except DenseRegimeError as exc:
            fallback_reason = f"dense-regime: {exc}"

    if plan is not None and plan.M != source.grid_length:
        repad = getattr(source, "repad", None)
        if repad is not None:
            source = repad(plan.M)
        else:
            raise GridMismatchError(
                f"source grid {source.grid_length} != plan grid {plan.M}; "
                "plan first and synthesize on plan.M"
            )

    if plan is not None and fallback_reason is None:
        views = _build_id_views(source, plan, cfg, op, seed, depth)
        alpha_k = max(1, int(round(cfg.alpha * max(k, 1))))
        residue_sets = [extract_residues(v, alpha_k) for v in views]
        state = PeelState.create(views, plan.M, cfg.noise_floor_rel, op)
        base_floor = state.noise_floor
        outcome = run_peeling(state, plan, cfg)
        while outcome.status is not PeelStatus.COMPLETE and rehashes < cfg.max_rehash:
            rehashes += 1
            plan = rehash(plan, seed, rehashes)
            partial = SparseSpectrum.from_pairs(
                [(f, c) for f, c in state.recovered.items() if abs(c) > state.noise_floor],
                plan.M,
            )
            views = _build_id_views(source, plan, cfg, op, seed + rehashes, depth)
            _subtract_spectrum(views, partial)
            if op is not None:
                op.add("rehash", 3 * len(partial))
            state = PeelState.create(views, plan.M, cfg.noise_floor_rel, op)
            # keep the original signal scale: a residual that is pure roundoff
            # must read as empty, not as new occupied bins
            state.noise_floor = max(state.noise_floor, base_floor)
            state.recovered = dict(partial.entries)
            outcome = run_peeling(state, plan, cfg)
        peel_status = outcome.status
        recovered = dict(outcome.recovered.entries)

        if outcome.status is not PeelStatus.COMPLETE:
            fallback_reason = f"peeling-{outcome.status.value}"
        elif k and len(recovered) > 2 * k:
            fallback_reason = f"candidate-overflow: {len(recovered)} > 2k"
        else:
            candidate = _top_k(recovered, k, plan.M)
            if corrupt_candidate is not None:
                candidate = corrupt_candidate(candidate)
            report = verify(source, plan, candidate, cfg, op, seed=seed, depth=depth)
            if not report.overall and cfg.max_extra_verify_views > 0:
                extra = tuple(
                    _draw_view_params(
                        plan.triple.moduli[j % 3],
                        plan.M,
                        rng_stream(seed, f"verify-extra-{j}"),
                        cfg.shift_count,
                    )
                    for j in range(cfg.max_extra_verify_views)
                )
                extra_views_used = len(extra)
                report = verify(
                    source, plan, candidate, cfg, op,
                    view_params=plan.verify_views + extra, seed=seed, depth=depth,
                )
            if not report.overall:
                fallback_reason = "verification-failed"

    if fallback_reason is None and plan is not None and candidate is not None:
        result_spectrum = candidate
        path = RecoveryPath.FAST
    else:
        result_spectrum = dense_fallback(source, k, cfg, op)
        path = RecoveryPath.FALLBACK

    cert = build_certificate(
        plan=plan,
        config=cfg,
        seed=seed,
        spectrum=result_spectrum,
        residue_sets=residue_sets,
        report=report,
        path=path,
        fallback_reason=fallback_reason,
        rehashes=rehashes,
        extra_views=extra_views_used,
        declared_n=cfg.nominal_length,
        k=k,
    )
    return RecoveryResult(
        spectrum=result_spectrum,
        path=path,
        certificate=cert,
        op_counts=op.snapshot(),
        peel_status=peel_status,
        verification=report,
    )


def sparse_fft_dense(samples, k: int, config: Config | None = None, seed: int = 0, **kw):
    """Convenience wrapper: plan from a raw buffer's length, pad, recover."""
    cfg = config or Config()
    arr = np.ascontiguousarray(samples, dtype=np.complex128)
    plan = make_plan(cfg.nominal_length or arr.size, k, cfg.t, seed, cfg)
    return sparse_fft(from_dense(arr, plan.M), k, cfg, seed, **kw)


# ---------------------------------------------------------------------------
# Certificates


def _view_dict(vp: ViewParams) -> dict:
    return {"m": vp.m, "sigma": vp.sigma, "b": vp.b, "shifts": vp.shift_count}


def build_certificate(
    plan: ModuliPlan | None,
    config: Config,
    seed: int,
    spectrum: SparseSpectrum,
    residue_sets,
    report: VerificationReport | None,
    path: RecoveryPath,
    fallback_reason: str | None,
    rehashes: int,
    extra_views: int,
    declared_n: int | None,
    k: int,
) -> Certificate:
    """Assemble the audit record for one run.

    Every recovered frequency carries its residues and Garner digits so the
    reconstruction can be replayed; the gate table is included only when
    configured, since the fast path does not enumerate pairs.
    """
    amplitudes = [abs(c) for _, c in spectrum.entries]
    tau = config.amplitude_threshold_rel * max(amplitudes, default=0.0)
    payload: dict = {
        "format": "crtfft-certificate/1",
        "k": k,
        "seed": seed,
        "path": path.value,
        "fallback_reason": fallback_reason,
        "escalation": {"rehashes": rehashes, "extra_verify_views": extra_views},
        "amplitude_threshold": tau,
        "declared_n": declared_n,
        "grid_length": spectrum.grid_length,
        "recovered": [],
        "plan": None,
        "residue_sets": None,
        "gated_pairs": None,
        "verification": report.to_dict() if report is not None else None,
    }
    if plan is not None:
        payload["plan"] = {
            "n": plan.N,
            "k": plan.k,
            "m": plan.M,
            "moduli": list(plan.triple.moduli),
            "gamma12": plan.triple.gamma12,
            "gamma23": plan.triple.gamma23,
            "regime": plan.regime.regime.value,
            "alpha": plan.regime.alpha,
            "id_views": [_view_dict(v) for v in plan.id_views],
            "verify_views": [_view_dict(v) for v in plan.verify_views],
        }
        payload["residue_sets"] = [
            {
                "view": i,
                "bins": [int(b) for b, _ in rs.residues],
                "magnitudes": [float(mag) for _, mag in rs.residues],
                "capacity": rs.capacity,
            }
            for i, rs in enumerate(residue_sets)
        ]
        triple = plan.triple
        for f, c in spectrum.entries:
            r1, r2, r3 = f % triple.m1, f % triple.m2, f % triple.m3
            _, u2, u3 = garner3_parts(r1, r2, r3, triple)
            payload["recovered"].append(
                {
                    "f": int(f),
                    "re": float(c.real),
                    "im": float(c.imag),
                    "crt": {"r1": r1, "r2": r2, "r3": r3, "u2": u2, "u3": u3},
                }
            )
        if config.gate_trail and len(residue_sets) == 3:
            table = gate_pairs(
                residue_sets[0], residue_sets[1], residue_sets[2], triple, plan.id_views
            )
            payload["gated_pairs"] = [
                [g.r1, g.r2, g.f12, g.r3_hat, g.passed] for g in table
            ]
    else:
        for f, c in spectrum.entries:
            payload["recovered"].append(
                {"f": int(f), "re": float(c.real), "im": float(c.imag), "crt": None}
            )
    return Certificate(payload=payload)


def verify_certificate(
    cert: Certificate,
    source: SignalSource,
    config: Config | None = None,
) -> list[str]:
    """Re-derive every certificate claim from scratch; empty list means valid.

    Checks: moduli consistency, Garner replay of every recovered frequency
    (digits and reconstruction), range against the declared nominal length,
    amplitudes against the recorded threshold, gate-table membership when a
    gate trail is present, and one fresh residual test of the recovered
    spectrum against the signal.
    """
    cfg = config or Config()
    violations: list[str] = []
    p = cert.payload
    plan_info = p.get("plan")
    try:
        spectrum = SparseSpectrum.from_pairs(
            [(e["f"], complex(e["re"], e["im"])) for e in p["recovered"]],
            p["grid_length"],
        )
    except (KeyError, TypeError) as exc:
        raise ParseError(f"certificate recovered list malformed: {exc}") from exc

    tau = float(p.get("amplitude_threshold", 0.0))
    for f, c in spectrum.entries:
        if abs(c) < tau:
            violations.append(f"amplitude-below-threshold: f={f} |a|={abs(c):.3e} < {tau:.3e}")

    declared_n = p.get("declared_n")
    if declared_n:
        for f, _ in spectrum.entries:
            if f >= declared_n:
                violations.append(f"frequency-above-declared-n: f={f} >= {declared_n}")

    if plan_info is not None:
        try:
            triple = ModTriple.create(*plan_info["moduli"])
        except Exception as exc:
            violations.append(f"bad-moduli: {exc}")
            return violations
        if triple.M != plan_info["m"]:
            violations.append("plan-product-mismatch")
        if triple.gamma12 != plan_info["gamma12"] or triple.gamma23 != plan_info["gamma23"]:
            violations.append("plan-inverse-mismatch")
        for entry in p["recovered"]:
            f = entry["f"]
            crt = entry.get("crt")
            if crt is None:
                violations.append(f"missing-crt-record: f={f}")
                continue
            expected = (f % triple.m1, f % triple.m2, f % triple.m3)
            if (crt["r1"], crt["r2"], crt["r3"]) != expected:
                violations.append(f"residue-mismatch: f={f}")
                continue
            g, u2, u3 = garner3_parts(crt["r1"], crt["r2"], crt["r3"], triple)
            if g != f or u2 != crt["u2"] or u3 != crt["u3"]:
                violations.append(f"garner-replay-failed: f={f}")
        if p.get("gated_pairs") is not None and p.get("residue_sets"):
            bins3 = set(p["residue_sets"][2]["bins"])
            id_views = tuple(
                ViewParams(m=v["m"], sigma=v["sigma"], b=v["b"], shift_count=v["shifts"])
                for v in plan_info["id_views"]
            )
            from .numtheory import garner2

            for r1, r2, f12, r3_hat, passed in p["gated_pairs"]:
                if garner2(r1, r2, triple.m1, triple.m2) != f12:
                    violations.append(f"gate-crt-mismatch: pair ({r1}, {r2})")
                    continue
                predicted = int((id_views[2].a * (f12 % triple.m3) + id_views[2].b) % triple.m3)
                if predicted != r3_hat:
                    violations.append(f"gate-prediction-mismatch: pair ({r1}, {r2})")
                elif passed != (r3_hat in bins3):
                    violations.append(f"gate-verdict-mismatch: pair ({r1}, {r2})")
        verify_views = plan_info.get("verify_views") or []
        if verify_views:
            vp = ViewParams(
                m=verify_views[0]["m"],
                sigma=verify_views[0]["sigma"],
                b=verify_views[0]["b"],
                shift_count=verify_views[0]["shifts"],
            )
            if source.grid_length != plan_info["m"]:
                violations.append("signal-grid-mismatch")
            else:
                built = build_view(source, vp, plan_info["m"])
                residual, ok = residual_check(built, spectrum, cfg.verify_eps_rel)
                if not ok:
                    violations.append(f"fresh-residual-failed: {residual:.3e}")
    return violations
