"""Command-line driver: schema-validated experiment configs, reproducible runs,
JSON summaries plus CSV tables and plot data.

One entry point reads a config JSON whose "command" field selects the
experiment; --seed, --out and --constants override the matching config fields.
Outputs are byte-identical for identical (config, seed) pairs: sweep points
may run in a worker pool, but results are merged in sorted order before
anything is written. Exit codes: 0 success, 1 malformed config, 2 a stated
precondition was violated during the run, 3 domain validation failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import os
import sys
import warnings
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import jsonschema
import numpy as np

from . import cost as cost_mod
from .constants import DEFAULT_CONSTANTS, Constants
from .errors import LculabError, PreconditionWarning, ValidationError
from .gap_amplification import (
    build_tilde_h,
    parse_pauli_lines,
    projectors_from_unitaries,
    psd_split,
)
from .gibbs import GibbsTask, prepare_gibbs
from .inverse import (
    HittingTimeTask,
    calibrate_inverse_grid,
    estimate_hitting_time,
    inverse_lcu,
)
from .markov import chain_from_json, discriminant_pair, expected_mc_cost, lazy_cycle, mark_states
from .operators import HermitianOperator, matrix_from_json, matrix_to_json
from .rand import random_hermitian_with_spectrum, random_state
from .sparse_chain import decomposition_manifest, sparse_oracle

logger = logging.getLogger("lculab.cli")

_MATRIX_SCHEMA = {
    "type": "object",
    "properties": {
        "dim": {"type": "integer", "minimum": 1},
        "re": {"type": "array", "items": {"type": "number"}},
        "im": {"type": "array", "items": {"type": "number"}},
    },
    "required": ["dim", "re", "im"],
    "additionalProperties": False,
}

_HAMILTONIAN_SCHEMA = {
    "oneOf": [
        {
            "type": "object",
            "properties": {"pauli": {"type": "string"}},
            "required": ["pauli"],
            "additionalProperties": False,
        },
        {
            "type": "object",
            "properties": {"matrix": _MATRIX_SCHEMA},
            "required": ["matrix"],
            "additionalProperties": False,
        },
    ]
}

_CHAIN_SCHEMA = {
    "type": "object",
    "properties": {
        "n_states": {"type": "integer", "minimum": 2},
        "entries": {
            "type": "array",
            "items": {"type": "array", "minItems": 3, "maxItems": 3},
        },
        "marked": {"type": "array", "items": {"type": "integer"}},
    },
    "required": ["n_states", "entries", "marked"],
    "additionalProperties": False,
}

_COMMON = {
    "command": {"type": "string"},
    "seed": {"type": "integer", "minimum": 0},
    "out": {"type": "string"},
    "constants": {"type": "object"},
}

_SCHEMAS = {
    "gibbs": {
        "type": "object",
        "properties": {
            **_COMMON,
            "hamiltonian": _HAMILTONIAN_SCHEMA,
            "beta": {"type": "number", "minimum": 0},
            "epsilon": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
            "mode": {"enum": ["desk", "oracle-free"]},
            "z_lower_bound": {"type": "number", "exclusiveMinimum": 0},
        },
        "required": ["command", "hamiltonian", "beta", "epsilon"],
        "additionalProperties": False,
    },
    "hitting": {
        "type": "object",
        "properties": {
            **_COMMON,
            "chain": _CHAIN_SCHEMA,
            "epsilon": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
            "confidence": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
            "mode": {"enum": ["desk", "oracle-free"]},
            "delta_lower_bound": {"type": "number", "exclusiveMinimum": 0},
        },
        "required": ["command", "chain", "epsilon"],
        "additionalProperties": False,
    },
    "appendix-verify": {
        "type": "object",
        "properties": {**_COMMON, "chain": _CHAIN_SCHEMA},
        "required": ["command", "chain"],
        "additionalProperties": False,
    },
    "lemma1-sweep": {
        "type": "object",
        "properties": {
            **_COMMON,
            "hamiltonian": _HAMILTONIAN_SCHEMA,
            "betas": {"type": "array", "items": {"type": "number", "minimum": 0}, "minItems": 1},
            "epsilons": {
                "type": "array",
                "items": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
                "minItems": 1,
            },
            "jobs": {"type": "integer", "minimum": 1},
        },
        "required": ["command", "hamiltonian", "betas", "epsilons"],
        "additionalProperties": False,
    },
    "lemma2-sweep": {
        "type": "object",
        "properties": {
            **_COMMON,
            "deltas": {
                "type": "array",
                "items": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
                "minItems": 1,
            },
            "epsilons": {
                "type": "array",
                "items": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
                "minItems": 1,
            },
            "dim": {"type": "integer", "minimum": 1, "maximum": 64},
            "samples": {"type": "integer", "minimum": 1, "maximum": 64},
            "jobs": {"type": "integer", "minimum": 1},
        },
        "required": ["command", "deltas", "epsilons"],
        "additionalProperties": False,
    },
    "cost-sweep": {
        "type": "object",
        "properties": {
            **_COMMON,
            "model": {"enum": ["hitting-quantum", "hitting-classical", "gibbs"]},
            "sweep_var": {"enum": ["delta", "epsilon", "beta"]},
            "values": {
                "type": "array",
                "items": {"type": "number", "exclusiveMinimum": 0},
                "minItems": 1,
            },
            "fixed": {"type": "object"},
            "jobs": {"type": "integer", "minimum": 1},
        },
        "required": ["command", "model", "sweep_var", "values"],
        "additionalProperties": False,
    },
}


def _configure_logging() -> None:
    level_name = os.environ.get("LCULAB_LOG", "normal").lower()
    level = {"quiet": logging.WARNING, "normal": logging.INFO, "debug": logging.DEBUG}.get(
        level_name, logging.INFO
    )
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")


def _hamiltonian_from_config(spec: dict) -> tuple[HermitianOperator, "object"]:
    if "pauli" in spec:
        unitaries = parse_pauli_lines(spec["pauli"])
        # The pipeline works with the PSD presentation, whose spectrum sits
        # at the parsed operator's plus the discarded identity offset.
        decomposition, _ = projectors_from_unitaries(unitaries)
        return HermitianOperator(decomposition.sum_matrix()), decomposition
    h = HermitianOperator(matrix_from_json(spec["matrix"]))
    return h, psd_split(h.matrix)


def _write_json(path: Path, payload: dict) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _write_csv(path: Path, header: list[str], rows: list[list]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def _write_plot(path: Path, xs, ys) -> None:
    _write_csv(path, ["x", "y"], [[float(x), float(y)] for x, y in zip(xs, ys)])


def _run_gibbs(config: dict, constants: Constants, out: Path, seed: int) -> dict:
    h, decomposition = _hamiltonian_from_config(config["hamiltonian"])
    task = GibbsTask(
        hamiltonian=h,
        beta=float(config["beta"]),
        epsilon=float(config["epsilon"]),
        decomposition=decomposition,
    )
    result = prepare_gibbs(
        task,
        constants=constants,
        mode=config.get("mode", "desk"),
        z_lower_bound=config.get("z_lower_bound"),
    )
    summary = {
        "command": "gibbs",
        "seed": seed,
        "beta": task.beta,
        "epsilon": task.epsilon,
        "eps_prime": result.epsilon_prime,
        "J": result.grid.j_max,
        "delta_y": result.grid.delta_y,
        "trace_dist": result.trace_dist,
        "success_amp": result.success_amplitude,
        "rounds": result.amplification_rounds,
        "partition_function": result.partition_function,
        "total_gate_model": result.cost.total,
        "cost": result.cost.to_json(),
        "precondition_warnings": list(result.precondition_warnings),
    }
    _write_json(out / "summary.json", summary)
    return summary


def _lemma1_point(args: tuple) -> dict:
    matrix_json, beta, epsilon, constants_dict = args
    h = HermitianOperator(matrix_from_json(matrix_json))
    constants = Constants.from_dict(constants_dict)
    task = GibbsTask(
        hamiltonian=h, beta=beta, epsilon=epsilon, decomposition=psd_split(h.matrix)
    )
    result = prepare_gibbs(task, constants=constants)
    return {
        "beta": beta,
        "epsilon": epsilon,
        "eps_prime": result.epsilon_prime,
        "J": result.grid.j_max,
        "delta_y": result.grid.delta_y,
        "trace_dist": result.trace_dist,
        "success_amp": result.success_amplitude,
        "rounds": result.amplification_rounds,
        "total_gate_model": result.cost.total,
        "warnings": len(result.precondition_warnings),
    }


def _run_lemma1_sweep(config: dict, constants: Constants, out: Path, seed: int) -> dict:
    h, _ = _hamiltonian_from_config(config["hamiltonian"])
    matrix_json = matrix_to_json(h.matrix)
    points = sorted(
        (float(beta), float(eps))
        for beta in config["betas"]
        for eps in config["epsilons"]
    )
    jobs = int(config.get("jobs", 1))
    payloads = [(matrix_json, beta, eps, constants.to_dict()) for beta, eps in points]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_lemma1_point, payloads))
    else:
        rows = [_lemma1_point(p) for p in payloads]
    header = [
        "beta", "epsilon", "eps_prime", "J", "delta_y",
        "trace_dist", "success_amp", "rounds", "total_gate_model",
    ]
    _write_csv(out / "lemma1_sweep.csv", header, [[row[k] for k in header] for row in rows])
    _write_plot(out / "plot_error_vs_beta.csv", [r["beta"] for r in rows], [r["trace_dist"] for r in rows])
    _write_plot(
        out / "plot_cost_vs_beta.csv", [r["beta"] for r in rows], [r["total_gate_model"] for r in rows]
    )
    summary = {"command": "lemma1-sweep", "seed": seed, "points": len(rows), "rows": rows}
    _write_json(out / "summary.json", summary)
    return summary


def _run_hitting(config: dict, constants: Constants, out: Path, seed: int) -> dict:
    chain, marked = chain_from_json(config["chain"])
    mp = mark_states(chain, marked)
    dp = discriminant_pair(mp)
    delta_lower = None
    if config.get("mode", "desk") == "oracle-free":
        if "delta_lower_bound" not in config:
            raise ValidationError("oracle-free mode needs delta_lower_bound")
        delta_lower = float(config["delta_lower_bound"])
    task = HittingTimeTask(
        partition=mp,
        pair=dp,
        epsilon=float(config["epsilon"]),
        confidence=float(config.get("confidence", 8 / math.pi**2)),
        delta_lower=delta_lower,
        constants=constants,
    )
    result = estimate_hitting_time(task, seed=seed)
    summary = {
        "command": "hitting",
        "seed": seed,
        "t_hat": result.estimate,
        "t_exact": result.exact_hitting_time,
        "error": abs(result.estimate - result.exact_hitting_time),
        "grover_queries": result.grover_queries,
        "exact_amplitude": result.exact_amplitude,
        "z_K": result.z_max,
        "cost_breakdown": {
            "C_W": result.cost.value("C_W"),
            "C_U": result.cost.value("C_U"),
            "C_sqrt_pi": result.cost.value("C_sqrt_pi"),
            "C_B": result.cost.value("C_B"),
            "total": result.cost.total,
        },
        "classical_comparison": {
            "samples": result.classical_cost_comparison[0],
            "expected_steps": result.classical_cost_comparison[1],
        },
    }
    _write_json(out / "result.json", summary)
    return summary


def _run_appendix_verify(config: dict, constants: Constants, out: Path, seed: int) -> dict:
    chain, marked = chain_from_json(config["chain"])
    oracle = sparse_oracle(chain, marked)
    manifest = decomposition_manifest(oracle)
    summary = {"command": "appendix-verify", "seed": seed, **manifest}
    _write_json(out / "manifest.json", summary)
    return summary


def _lemma2_point(args: tuple) -> dict:
    delta, epsilon, dim, n_samples, seed = args
    grid = calibrate_inverse_grid(delta, epsilon)
    rng = np.random.default_rng([seed, int(1 / delta), int(1 / epsilon)])
    h = HermitianOperator(random_hermitian_with_spectrum(rng, dim, delta, 1.0))
    g = build_tilde_h(psd_split(h.matrix))
    lcu = inverse_lcu(grid, g)
    h_inv = np.linalg.inv(h.matrix)
    worst = 0.0
    for _ in range(n_samples):
        phi = random_state(rng, dim)
        target = g.embed_sector_state(h_inv @ phi)
        image = lcu.apply_sum(g.embed_sector_state(phi))
        worst = max(worst, float(np.linalg.norm(target - image)))
    return {
        "delta": delta,
        "epsilon": epsilon,
        "z_K": grid.z_max,
        "K": grid.k_max,
        "J": grid.j_max,
        "delta_z": grid.delta_z,
        "delta_y": grid.delta_y,
        "gamma": grid.gamma,
        "gamma_gap": abs(grid.gamma - grid.z_max),
        "residual_max": worst,
    }


def _run_lemma2_sweep(config: dict, constants: Constants, out: Path, seed: int) -> dict:
    dim = int(config.get("dim", 8))
    n_samples = int(config.get("samples", 10))
    points = sorted(
        (float(d), float(e)) for d in config["deltas"] for e in config["epsilons"]
    )
    payloads = [(d, e, dim, n_samples, seed) for d, e in points]
    jobs = int(config.get("jobs", 1))
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_lemma2_point, payloads))
    else:
        rows = [_lemma2_point(p) for p in payloads]
    header = [
        "delta", "epsilon", "z_K", "K", "J", "delta_z", "delta_y",
        "gamma", "gamma_gap", "residual_max",
    ]
    _write_csv(out / "lemma2_sweep.csv", header, [[row[k] for k in header] for row in rows])
    _write_plot(
        out / "plot_error_vs_delta.csv", [r["delta"] for r in rows], [r["residual_max"] for r in rows]
    )
    summary = {"command": "lemma2-sweep", "seed": seed, "points": len(rows), "rows": rows}
    _write_json(out / "summary.json", summary)
    return summary


def _run_cost_sweep(config: dict, constants: Constants, out: Path, seed: int) -> dict:
    model = config["model"]
    fixed = dict(config.get("fixed", {}))
    values = sorted(float(v) for v in config["values"])
    rows = []
    entry_names: list[str] = []
    for value in values:
        reported_value = value
        if model == "hitting-quantum":
            delta = value if config["sweep_var"] == "delta" else float(fixed.get("delta", 0.25))
            epsilon = value if config["sweep_var"] == "epsilon" else float(fixed.get("epsilon", 0.1))
            report = cost_mod.theorem2_cost(
                delta, epsilon, float(fixed.get("d", 3)), float(fixed.get("n_states", 32)), constants
            )
        elif model == "hitting-classical":
            # lazy-cycle family: a delta sweep varies the laziness 1 - stay
            # and reports the chain's actual spectral gap as the x value
            n = int(fixed.get("n_states", 16))
            if config["sweep_var"] == "delta":
                if not 0.0 < value <= 0.5:
                    raise ValidationError("laziness sweep values must lie in (0, 0.5]")
                stay = 1.0 - value
            else:
                stay = float(fixed.get("stay", 0.75))
            chain = lazy_cycle(n, stay)
            mp = mark_states(chain, [0])
            if config["sweep_var"] == "delta":
                reported_value = discriminant_pair(mp).delta
            epsilon = value if config["sweep_var"] == "epsilon" else float(fixed.get("epsilon", 1.0))
            samples, steps = expected_mc_cost(mp, epsilon, constants)
            report = cost_mod.CostReport.build(
                entries={
                    "samples": cost_mod.CostEntry(samples, "ceil(c var / eps^2)"),
                    "expected_steps": cost_mod.CostEntry(steps, "samples * t_h"),
                },
                total=steps,
                total_formula="samples * t_h",
            )
        else:
            # self-consistent thermal model: a linear spectrum on [0, norm]
            # supplies the partition function at each beta
            beta = value if config["sweep_var"] == "beta" else float(fixed.get("beta", 4.0))
            epsilon = value if config["sweep_var"] == "epsilon" else float(fixed.get("epsilon", 0.1))
            n_dim = int(fixed.get("n_dim", 8))
            norm = float(fixed.get("norm", 1.0))
            energies = np.linspace(0.0, norm, n_dim)
            z = float(np.sum(np.exp(-beta * energies)))
            report = cost_mod.theorem1_cost(
                n_dim, z, beta, epsilon, norm_bound=norm, constants=constants
            )
        if not entry_names:
            entry_names = sorted(report.entries)
        rows.append(
            [config["sweep_var"], reported_value]
            + [report.entries[name].value for name in entry_names]
            + [report.total]
        )
    header = ["sweep_var", "value"] + entry_names + ["total"]
    _write_csv(out / "cost_sweep.csv", header, rows)
    _write_plot(out / "plot_cost_vs_value.csv", [r[1] for r in rows], [r[-1] for r in rows])
    summary = {
        "command": "cost-sweep",
        "seed": seed,
        "model": model,
        "sweep_var": config["sweep_var"],
        "points": len(rows),
    }
    _write_json(out / "summary.json", summary)
    return summary


_RUNNERS = {
    "gibbs": _run_gibbs,
    "hitting": _run_hitting,
    "appendix-verify": _run_appendix_verify,
    "lemma1-sweep": _run_lemma1_sweep,
    "lemma2-sweep": _run_lemma2_sweep,
    "cost-sweep": _run_cost_sweep,
}


def load_config(path: str) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            config = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ValidationError(f"cannot read config: {exc}") from exc
    if not isinstance(config, dict) or "command" not in config:
        raise ValidationError("config must be an object with a 'command' field")
    command = config["command"]
    if command not in _SCHEMAS:
        raise ValidationError(
            f"unknown command {command!r}; expected one of {sorted(_SCHEMAS)}"
        )
    jsonschema.validate(config, _SCHEMAS[command])
    return config


def main(argv: list[str] | None = None) -> int:
    _configure_logging()
    parser = argparse.ArgumentParser(
        prog="lculab",
        description="Run verification experiments for the LCU thermal-state and hitting-time pipelines.",
    )
    parser.add_argument("--config", required=True, help="experiment config JSON")
    parser.add_argument("--seed", type=int, default=None, help="64-bit seed override")
    parser.add_argument("--out", default=None, help="output directory")
    parser.add_argument("--jobs", type=int, default=None, help="worker pool size for sweeps")
    parser.add_argument("--constants", default=None, help="constants override JSON")
    args = parser.parse_args(argv)

    try:
        config = load_config(args.config)
    except (ValidationError, jsonschema.ValidationError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1

    if args.seed is not None:
        config["seed"] = args.seed
    if args.out is not None:
        config["out"] = args.out
    if args.jobs is not None and config["command"].endswith("sweep"):
        config["jobs"] = args.jobs

    constants = DEFAULT_CONSTANTS
    overrides = dict(config.get("constants", {}))
    if args.constants:
        try:
            with open(args.constants, "r", encoding="utf-8") as fh:
                overrides.update(json.load(fh))
        except (OSError, json.JSONDecodeError) as exc:
            print(f"config error: cannot read constants: {exc}", file=sys.stderr)
            return 1
    if overrides:
        try:
            constants = DEFAULT_CONSTANTS.replace(**Constants.from_dict(overrides).to_dict())
        except (ValidationError, TypeError) as exc:
            print(f"config error: {exc}", file=sys.stderr)
            return 1

    seed = int(config.get("seed", 0))
    out = Path(config.get("out", "lculab_out"))
    runner = _RUNNERS[config["command"]]

    precondition_messages: list[str] = []
    try:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always", PreconditionWarning)
            runner(config, constants, out, seed)
            precondition_messages = [
                str(w.message) for w in caught if issubclass(w.category, PreconditionWarning)
            ]
    except ValidationError as exc:
        print(f"validation failure: {exc}", file=sys.stderr)
        return 3
    except LculabError as exc:
        print(f"run failed: {exc}", file=sys.stderr)
        return 3

    logger.info("command %s finished; outputs in %s", config["command"], out)
    if precondition_messages:
        for message in precondition_messages:
            logger.warning("precondition violated: %s", message)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
