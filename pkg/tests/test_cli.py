import json
import math

import pytest

from lculab.cli import main
from lculab.markov import chain_to_json, symmetric_two_state


def _write_config(tmp_path, payload, name="config.json"):
    path = tmp_path / name
    path.write_text(json.dumps(payload))
    return str(path)


def _two_state_chain_json():
    return chain_to_json(symmetric_two_state(), [1])


@pytest.fixture
def one_qubit_matrix():
    return {"dim": 2, "re": [0.0, 0.0, 0.0, 1.0], "im": [0.0, 0.0, 0.0, 0.0]}


class TestGibbsCommand:
    def test_summary_meets_tolerance(self, tmp_path, one_qubit_matrix):
        config = _write_config(
            tmp_path,
            {
                "command": "gibbs",
                "hamiltonian": {"matrix": one_qubit_matrix},
                "beta": 8.0,
                "epsilon": 0.05,
                "out": str(tmp_path / "out"),
            },
        )
        assert main(["--config", config]) == 0
        summary = json.loads((tmp_path / "out" / "summary.json").read_text())
        assert summary["trace_dist"] <= 0.05
        assert summary["rounds"] >= 1
        for key in ("eps_prime", "J", "delta_y", "success_amp", "total_gate_model"):
            assert key in summary

    def test_precondition_violation_exits_two(self, tmp_path, one_qubit_matrix):
        config = _write_config(
            tmp_path,
            {
                "command": "gibbs",
                "hamiltonian": {"matrix": one_qubit_matrix},
                "beta": 1.0,
                "epsilon": 0.3,
                "out": str(tmp_path / "out"),
            },
        )
        assert main(["--config", config]) == 2

    def test_pauli_input(self, tmp_path):
        config = _write_config(
            tmp_path,
            {
                "command": "gibbs",
                "hamiltonian": {"pauli": "1.0 Z\n1.0 I"},
                "beta": 4.0,
                "epsilon": 0.1,
                "out": str(tmp_path / "out"),
            },
        )
        assert main(["--config", config]) == 0


class TestHittingCommand:
    def test_result_schema_and_value(self, tmp_path):
        config = _write_config(
            tmp_path,
            {
                "command": "hitting",
                "chain": _two_state_chain_json(),
                "epsilon": 0.1,
                "seed": 7,
                "out": str(tmp_path / "out"),
            },
        )
        assert main(["--config", config]) == 0
        result = json.loads((tmp_path / "out" / "result.json").read_text())
        assert abs(result["t_hat"] - 1.0) <= 0.4
        assert result["t_exact"] == pytest.approx(1.0)
        for key in ("C_W", "C_U", "C_sqrt_pi", "C_B", "total"):
            assert key in result["cost_breakdown"]

    def test_oracle_free_mode_needs_bound(self, tmp_path):
        base = {
            "command": "hitting",
            "chain": _two_state_chain_json(),
            "epsilon": 0.1,
            "mode": "oracle-free",
            "out": str(tmp_path / "out"),
        }
        config = _write_config(tmp_path, base, "missing.json")
        assert main(["--config", config]) == 3
        config = _write_config(
            tmp_path, {**base, "delta_lower_bound": 0.25}, "bounded.json"
        )
        assert main(["--config", config]) == 0
        result = json.loads((tmp_path / "out" / "result.json").read_text())
        assert abs(result["t_hat"] - 1.0) <= 0.4

    def test_non_reversible_chain_exits_three(self, tmp_path):
        bad = {
            "n_states": 3,
            "entries": [
                [0, 0, 0.5], [1, 0, 0.4], [2, 0, 0.1],
                [0, 1, 0.1], [1, 1, 0.5], [2, 1, 0.4],
                [0, 2, 0.4], [1, 2, 0.1], [2, 2, 0.5],
            ],
            "marked": [0],
        }
        config = _write_config(
            tmp_path,
            {"command": "hitting", "chain": bad, "epsilon": 0.1, "out": str(tmp_path / "o")},
        )
        assert main(["--config", config]) == 3


class TestAppendixVerify:
    def test_manifest(self, tmp_path):
        config = _write_config(
            tmp_path,
            {
                "command": "appendix-verify",
                "chain": _two_state_chain_json(),
                "out": str(tmp_path / "out"),
            },
        )
        assert main(["--config", config]) == 0
        manifest = json.loads((tmp_path / "out" / "manifest.json").read_text())
        assert manifest["reconstruction_residual"] <= 1e-10
        assert manifest["terms"] == len(manifest["alpha_list"])


class TestSweeps:
    def test_lemma1_sweep_csv_columns(self, tmp_path, one_qubit_matrix):
        config = _write_config(
            tmp_path,
            {
                "command": "lemma1-sweep",
                "hamiltonian": {"matrix": one_qubit_matrix},
                "betas": [6.0, 8.0],
                "epsilons": [0.02],
                "out": str(tmp_path / "out"),
            },
        )
        assert main(["--config", config]) == 0
        header = (tmp_path / "out" / "lemma1_sweep.csv").read_text().splitlines()[0]
        assert header == (
            "beta,epsilon,eps_prime,J,delta_y,trace_dist,success_amp,rounds,total_gate_model"
        )
        assert (tmp_path / "out" / "plot_error_vs_beta.csv").exists()
        assert (tmp_path / "out" / "plot_cost_vs_beta.csv").exists()

    def test_lemma2_sweep(self, tmp_path):
        config = _write_config(
            tmp_path,
            {
                "command": "lemma2-sweep",
                "deltas": [0.5],
                "epsilons": [0.1],
                "dim": 4,
                "samples": 3,
                "out": str(tmp_path / "out"),
            },
        )
        assert main(["--config", config]) == 0
        rows = (tmp_path / "out" / "lemma2_sweep.csv").read_text().splitlines()
        assert rows[0].startswith("delta,epsilon,z_K,K,J")
        values = rows[1].split(",")
        assert float(values[-1]) <= 0.05  # residual within eps/2

    def test_cost_sweep_classical_reports_true_gap(self, tmp_path):
        config = _write_config(
            tmp_path,
            {
                "command": "cost-sweep",
                "model": "hitting-classical",
                "sweep_var": "delta",
                "values": [0.5, 0.25, 0.125],
                "fixed": {"n_states": 8},
                "out": str(tmp_path / "out"),
            },
        )
        assert main(["--config", config]) == 0
        rows = (tmp_path / "out" / "cost_sweep.csv").read_text().splitlines()[1:]
        gaps = [float(r.split(",")[1]) for r in rows]
        # the emitted x values are the chains' actual spectral gaps
        assert all(0 < g < 0.2 for g in gaps)
        assert gaps == sorted(gaps)

    def test_cost_sweep_gibbs_model(self, tmp_path):
        config = _write_config(
            tmp_path,
            {
                "command": "cost-sweep",
                "model": "gibbs",
                "sweep_var": "beta",
                "values": [2.0, 8.0, 32.0],
                "fixed": {"n_dim": 8},
                "out": str(tmp_path / "out"),
            },
        )
        assert main(["--config", config]) == 0
        rows = (tmp_path / "out" / "cost_sweep.csv").read_text().splitlines()
        totals = [float(r.split(",")[-1]) for r in rows[1:]]
        assert totals == sorted(totals)  # colder is costlier

    def test_cost_sweep(self, tmp_path):
        config = _write_config(
            tmp_path,
            {
                "command": "cost-sweep",
                "model": "hitting-quantum",
                "sweep_var": "delta",
                "values": [0.5, 0.25, 0.125],
                "out": str(tmp_path / "out"),
            },
        )
        assert main(["--config", config]) == 0
        header = (tmp_path / "out" / "cost_sweep.csv").read_text().splitlines()[0]
        assert header.startswith("sweep_var,value,")
        assert header.endswith(",total")


class TestConfigHandling:
    def test_empty_config_rejected(self, tmp_path):
        config = _write_config(tmp_path, {})
        assert main(["--config", config]) == 1

    def test_unknown_field_rejected(self, tmp_path, one_qubit_matrix):
        config = _write_config(
            tmp_path,
            {
                "command": "gibbs",
                "hamiltonian": {"matrix": one_qubit_matrix},
                "beta": 8.0,
                "epsilon": 0.05,
                "typo_field": 1,
            },
        )
        assert main(["--config", config]) == 1

    def test_unknown_command_rejected(self, tmp_path):
        config = _write_config(tmp_path, {"command": "nonsense"})
        assert main(["--config", config]) == 1

    def test_byte_identical_reruns(self, tmp_path, one_qubit_matrix):
        payload = {
            "command": "gibbs",
            "hamiltonian": {"matrix": one_qubit_matrix},
            "beta": 8.0,
            "epsilon": 0.05,
        }
        c1 = _write_config(tmp_path, {**payload, "out": str(tmp_path / "a")}, "c1.json")
        c2 = _write_config(tmp_path, {**payload, "out": str(tmp_path / "b")}, "c2.json")
        assert main(["--config", c1, "--seed", "5"]) == 0
        assert main(["--config", c2, "--seed", "5"]) == 0
        a = (tmp_path / "a" / "summary.json").read_bytes()
        b = (tmp_path / "b" / "summary.json").read_bytes()
        assert a == b

    def test_constants_override_file(self, tmp_path, one_qubit_matrix):
        constants = tmp_path / "constants.json"
        constants.write_text(json.dumps({"mc_sample_constant": 8.0}))
        config = _write_config(
            tmp_path,
            {
                "command": "hitting",
                "chain": _two_state_chain_json(),
                "epsilon": 0.2,
                "out": str(tmp_path / "out"),
            },
        )
        assert main(["--config", config, "--constants", str(constants)]) == 0
        result = json.loads((tmp_path / "out" / "result.json").read_text())
        # halved Chebyshev constant halves the expected classical sample count
        assert result["classical_comparison"]["samples"] == math.ceil(8.0 * 2.0 / 0.04)

    def test_jobs_flag_keeps_outputs_identical(self, tmp_path, one_qubit_matrix):
        payload = {
            "command": "lemma1-sweep",
            "hamiltonian": {"matrix": one_qubit_matrix},
            "betas": [6.0, 8.0],
            "epsilons": [0.02],
        }
        c1 = _write_config(tmp_path, {**payload, "out": str(tmp_path / "serial")}, "s.json")
        c2 = _write_config(tmp_path, {**payload, "out": str(tmp_path / "pool")}, "p.json")
        assert main(["--config", c1]) == 0
        assert main(["--config", c2, "--jobs", "2"]) == 0
        a = (tmp_path / "serial" / "lemma1_sweep.csv").read_bytes()
        b = (tmp_path / "pool" / "lemma1_sweep.csv").read_bytes()
        assert a == b
