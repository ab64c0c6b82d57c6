"""Runtime configuration.

All tunables live in one frozen dataclass so that a (source, k, config, seed)
quadruple pins the entire run.  `load_config` reads a JSON object with the
same key names; unknown keys are rejected rather than ignored.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass

from .errors import ParseError


@dataclass(frozen=True)
class Config:
    # planning
    alpha: float = 15.0                 # residue-set capacity multiplier (alpha*k per view)
    lambda_threshold: float = 0.1       # max load factor k/m for peeling / recursion
    t: int = 3                          # verification view count
    shift_count: int = 3                # time shifts per view (2 or 3)
    rho_sparse: float = 0.3             # sparsity-ratio boundary sparse/moderate
    rho_dense: float = 0.5              # sparsity-ratio boundary moderate/dense
    moduli_override: tuple[int, ...] | None = None
    identity_hash: bool = False         # force sigma=1, b=0 in every view
    nominal_length: int | None = None   # planning length when it differs from the grid

    # numerical tolerances
    singleton_tol: float = 1e-6         # relative magnitude/ratio agreement for singletons
    noise_floor_rel: float = 1e-9       # occupied-bin floor, relative to max bin magnitude
    verify_eps_rel: float = 1e-6        # verification tolerance, relative to view energy
    amplitude_threshold_rel: float = 1e-6  # certificate amplitude floor, relative to max

    # control
    round_cap_c: float = 4.0            # peeling round cap = ceil(c * log2(k+2))
    max_rehash: int = 2
    max_extra_verify_views: int = 2
    max_depth: int | None = None        # recursion depth cap; default ceil(log2 log2 N)
    view_mode: str = "recursive"        # "recursive" or "dense" view construction
    oracle_cap: int = 8192              # dft_direct size cap
    dense_budget: int = 1 << 26         # largest grid the dense fallback materializes
    gate_trail: bool = False            # record the explicit gate table in certificates
    force_fallback: bool = False        # skip the fast path entirely
    threads: int = 1                    # view-construction parallelism

    def __post_init__(self):
        if self.shift_count not in (2, 3):
            raise ValueError(f"shift_count must be 2 or 3, got {self.shift_count}")
        if self.view_mode not in ("recursive", "dense"):
            raise ValueError(f"unknown view_mode {self.view_mode!r}")
        if self.t < 0:
            raise ValueError(f"t must be >= 0, got {self.t}")
        if not (0 < self.rho_sparse <= self.rho_dense):
            raise ValueError("regime thresholds must satisfy 0 < sparse <= dense")


def replace(config: Config, **changes) -> Config:
    return dataclasses.replace(config, **changes)


def load_config(path) -> Config:
    """Read a JSON config file; keys mirror the Config fields."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            payload = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ParseError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(payload, dict):
        raise ParseError("config file must hold a JSON object")
    known = {f.name for f in dataclasses.fields(Config)}
    unknown = sorted(set(payload) - known)
    if unknown:
        raise ParseError(f"unknown config keys: {', '.join(unknown)}")
    if "moduli_override" in payload and payload["moduli_override"] is not None:
        payload["moduli_override"] = tuple(int(m) for m in payload["moduli_override"])
    try:
        return Config(**payload)
    except (TypeError, ValueError) as exc:
        raise ParseError(f"invalid config values: {exc}") from exc
