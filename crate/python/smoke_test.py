"""Smoke test for the dephcap extension module.

Build and install first:
    cd crates/python && maturin build --release -o dist && pip install dist/dephcap-*.whl
"""

import math

import dephcap


def close(a, b, tol):
    assert abs(a - b) <= tol, f"{a} vs {b}"


def main():
    g1 = dephcap.thermal_entropy(1.0)
    close(g1, 2.0, 1e-12)

    ident = dephcap.ThermalLossChannel.identity()
    close(ident.ea_capacity(1.0), 4.0, 1e-12)
    close(ident.hsw_capacity(1.0), 2.0, 1e-12)

    ch = dephcap.ThermalLossChannel(0.8, 10.0)
    print(ch, "C_EA/C =", ch.advantage_ratio(0.001))
    assert ch.loss_symbols(0.001)["d"] > 0

    close(dephcap.ea_capacity_pure_dephasing(1, 1.0), g1, 1e-10)
    sol = dephcap.solve_dephasing(20, 1.0)
    assert 1.86 <= sol["ratio"] <= 2.0
    close(math.fsum(sol["probs"]), 1.0, 1e-10)
    print("pure dephasing m=20: ratio", sol["ratio"], "lambda", sol["lambda1"])

    report = dephcap.bounds_report(100_000, ch, 0.001)
    assert report["lower_exact"] <= report["upper"]
    assert dephcap.entropy_total_asym(1, 0.001) is None

    chi = dephcap.holevo_phase_encoding(0.001, ch)
    assert abs(chi - ch.ea_capacity(0.001)) / ch.ea_capacity(0.001) < 0.01
    lb = dephcap.holevo_lower_bound(100_000, ch, 0.001)
    assert lb["per_mode"] < chi

    for bad in (lambda: dephcap.ThermalLossChannel(1.5, 0.0), lambda: dephcap.thermal_entropy(-1.0)):
        try:
            bad()
        except ValueError:
            pass
        else:
            raise AssertionError("expected ValueError")

    results = dephcap.verify(["dephasing_idempotence", "distribution_normalization"])
    assert all(r["status"] == "pass" for r in results), results
    print("smoke test passed")


if __name__ == "__main__":
    main()
