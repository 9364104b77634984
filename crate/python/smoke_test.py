"""Smoke test for the nsk extension module.

Build and install first:
    pip install --no-build-isolation ./crates/nsk-py
"""

import json
import math

import nsk


def main():
    p0 = nsk.FluidParams.preset("P0", 3)
    p1 = nsk.FluidParams(1.0, 1.0, 2.0, 1.0)
    assert abs(p0.alpha - 3.0) < 1e-14, p0.alpha
    assert p1.alpha < 0.0
    print(p0, "alpha", p0.alpha)

    sol = nsk.solve_mode(p0, [1.0, 0.0], 2 + 2j)
    ode, bc = sol.residuals()
    assert ode < 1e-9 and bc < 1e-9, (ode, bc)
    rho = sol.rho([0.0, 1.0, 5.0])
    assert abs(rho[2]) < abs(rho[0])
    print("mode h0", sol.h0, "residuals", ode, bc)

    gap = nsk.oracle_compare(p0, [1.0, 0.0], 2 + 2j)
    assert gap["max_gap"] < 1e-8, gap
    print("oracle gap", gap["max_gap"])

    f = nsk.field(p1, 1 + 1j, modes=16, period=12.0)
    spec, grid, rel = f.norms()
    assert f.residual() < 1e-8 and rel < 1e-10, (f.residual(), rel)
    print("field residual", f.residual(), "quotient", f.resolvent_quotient())

    tr = nsk.evolve(p1, [1], num_tau=1024, tau_max=100.0, modes=8)
    assert tr["causality_ratio"] < 1e-4, tr["causality_ratio"]
    assert tr["mr_ratio"] is not None and math.isfinite(tr["mr_ratio"])
    print("evolve mr ratio", tr["mr_ratio"], "kinematic", tr["kinematic_residual"])

    reps = json.loads(nsk.verify_symbols(p0, 0.87, points_per_shell=100))
    print("symbol reports", len(reps), sum(r["verdict"] == "PASS" for r in reps), "pass")

    try:
        nsk.FluidParams(-1.0, 1.0, 1.0, 1.0)
    except ValueError as e:
        print("rejected:", e)
    else:
        raise AssertionError("negative viscosity accepted")
    print("ok")


if __name__ == "__main__":
    main()
