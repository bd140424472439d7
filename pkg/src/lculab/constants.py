"""One record holding every tunable constant of the cost and round-count models.

Asymptotic prefactors default to 1.0 so that scaling fits never depend on them.
The few algorithmic constants (amplification rounds, Chebyshev sample count,
phase-estimation grid) carry their conventional defaults and are exposed here
so experiments can override them from a JSON file.
"""

from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass

from .errors import ValidationError


@dataclass(frozen=True)
class Constants:
    # Amplitude amplification: rounds = ceil(c / asin(a)).
    amp_round_constant: float = math.pi / 4
    # Phase-estimation grid size M = ceil(c / eps), rounded up to even.
    ae_query_constant: float = math.pi
    # Median-boost repetitions ~ c * ln(1/(1 - confidence)) above the base level.
    ae_boost_constant: float = 1.0
    # Chebyshev sample count M = ceil(c * variance / eps^2).
    mc_sample_constant: float = 16.0
    # Thermal pipeline: eps' = c * eps * sqrt(Z/N).
    gibbs_eps_prime_constant: float = 0.5
    # Hitting-time pipeline: eps' = c * eps * Delta / ln(1/(eps*Delta)).
    hitting_eps_prime_constant: float = 0.5
    # Coefficient-state gate cost C_B = c * ln(1/(Delta*eps)).
    b_gate_cost_constant: float = 1.0
    # Simulation cost model prefactors (queries / extra gates / total gates).
    query_cost_constant: float = 1.0
    gate_cost_constant: float = 1.0
    total_cost_constant: float = 1.0
    # Per-unitary gate cost C_U of the select oracle.
    unitary_gate_cost: float = 1.0
    # Sparse-access oracle costs C_P, C_U(marked membership) and C_sqrt_pi.
    sparse_oracle_cost: float = 1.0
    marked_oracle_cost: float = 1.0
    sqrt_pi_oracle_cost: float = 1.0

    def replace(self, **overrides: float) -> "Constants":
        return dataclasses.replace(self, **overrides)

    def to_dict(self) -> dict[str, float]:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, values: dict[str, float]) -> "Constants":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(values) - known
        if unknown:
            raise ValidationError(f"unknown constants: {sorted(unknown)}")
        for name, value in values.items():
            if not isinstance(value, (int, float)) or not math.isfinite(value) or value <= 0:
                raise ValidationError(f"constant {name!r} must be a positive finite number")
        return cls(**{k: float(v) for k, v in values.items()})

    @classmethod
    def from_json_file(cls, path: str) -> "Constants":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


DEFAULT_CONSTANTS = Constants()
