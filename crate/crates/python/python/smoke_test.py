"""Quick end-to-end check of the tchub_py extension.

Build and install with `maturin develop --release` (or `pip install .`) from
crates/python, then run `python python/smoke_test.py`.
"""

import math

import tchub_py as tc


def close(a, b, tol):
    assert abs(a - b) < tol, f"{a} vs {b} (tol {tol})"


def main():
    h = tc.hubbard_hamiltonian(2, t=1.0, u=4.0, representation="real")
    assert h.n_qubits == 4 and h.is_hermitian()
    close(tc.ground_energy(h), 2.0 - math.sqrt(20.0), 1e-9)

    back = tc.PauliSum.from_text(h.to_text(), h.n_qubits)
    assert len(back) == len(h)

    root = tc.optimize_j(2)
    close(root["j"], -0.481212, 1e-5)

    htc = tc.tc_hamiltonian(2, j=root["j"])
    assert not htc.is_hermitian()
    close(tc.ground_energy(htc), 2.0 - math.sqrt(20.0), 1e-8)

    w = tc.hf_weight_sweep(2, [-0.5, 0.0])
    assert w[0][1] > w[1][1]

    assert tc.validate_config('{"dt": -1}')
    assert tc.validate_config("{}") == []

    d = tc.describe({"nx": 2, "tc": True})
    assert d["n_qubits"] == 4 and d["n_params"] > 0

    run = tc.run_qite({"nx": 2, "tc": False, "max_steps": 60})
    assert run["summary"]["abs_err"] < 1e-3, run["summary"]
    assert run["records"][0]["step"] == 0

    vqe = tc.run_vqe({"nx": 2, "tc": False})
    close(vqe["energy"], run["summary"]["exact_energy"], 1e-6)
    try:
        tc.run_vqe({"nx": 2, "tc": True})
    except ValueError:
        pass
    else:
        raise AssertionError("vqe accepted a non-Hermitian Hamiltonian")

    counts = tc.sample([0.6, 0.0, 0.0, 0.8], 1000, seed=3)
    assert sum(counts.values()) == 1000 and set(counts) <= {"00", "11"}

    print("smoke test ok", tc.__version__)


if __name__ == "__main__":
    main()
