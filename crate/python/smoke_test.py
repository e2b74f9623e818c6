"""Smoke test for the gffperc_py extension.

Build first:  pip install --no-build-isolation -e crates/py
Run:          python3 python/smoke_test.py
"""

import math
from fractions import Fraction

import gffperc_py as g


def main():
    g0 = g.green([0, 0, 0])
    assert abs(g0 - 1.516386) < 1e-6, g0

    s = g.highdim_scalars(50)
    assert abs(s["kappa"] - (1 - 7 / 100)) <= 50**-1.5, s
    assert abs(s["sigma2"] - 1 / (2 - s["kappa"])) < 1e-15

    num, den = g.peierls_sum(3)
    assert Fraction(int(num), int(den)) == Fraction(8, 125)

    assert abs(g.vtilde(0.5) - 1.0) < 1e-15
    assert abs(g.vtilde(3.0) - math.sqrt(6 * math.e) * math.exp(-3)) < 1e-15

    e = g.estimate_crossing(3, 3, -1e9, 10, 1, "2")
    assert e["value"] == 1.0 and e["n"] == 10

    slab = g.slab_pipeline(0.25, 2, 0.3)
    assert slab["d0"] == 7617, slab["d0"]

    rec = g.run_spec("command = renorm\nh0 = 16\nnmax = 10\n")
    trace = rec["tasks"][0]["json"]["trace"]
    assert trace["valid"] and abs(trace["rho"] - math.log(2) / math.log(100)) < 1e-12

    try:
        g.green([0, 0, 0], method="magic")
    except ValueError:
        pass
    else:
        raise AssertionError("bad method accepted")

    print("smoke test passed")


if __name__ == "__main__":
    main()
