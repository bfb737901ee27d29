"""Smoke test for the gpei extension module.

Build and run from the repository root:

    cargo build --release -p gpei-py --features extension-module
    cp target/release/libgpei_py.so python/gpei.so
    python3 python/smoke_test.py
"""

import math
import os
import sys
import tempfile

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

import gpei  # noqa: E402


def check(cond, what):
    if not cond:
        raise SystemExit(f"FAIL: {what}")
    print(f"ok   {what}")


def main():
    k = gpei.KernelSpec.matern(2.5, 0.2)
    r = math.sqrt(5.0)
    closed = (1 + r + r * r / 3) * math.exp(-r)
    check(abs(k.eval([0.0, 0.0], [0.2, 0.0]) - closed) < 1e-12, "matern 5/2 at r = l")
    check(k.eval([0.3], [0.3]) == 1.0, "unit variance")

    m = gpei.GpModel(k, 0.01, 1)
    m.update([0.4], 2.0)
    mean, sd = m.posterior([0.4])
    check(abs(mean - 2.0 / 1.01) < 1e-12, "one-point posterior mean")
    check(abs(sd - math.sqrt(1 - 1 / 1.01)) < 1e-9, "one-point posterior stddev")
    check(len(m) == 1, "model length")

    check(abs(gpei.tau(0.0) - 1 / math.sqrt(2 * math.pi)) < 1e-15, "tau(0)")
    check(gpei.ei_score(5.0, 3.0, 0.0) == 2.0, "ei with zero spread")
    check(abs(gpei.confidence_beta(0.0) - 3.826917852911185) < 1e-12, "beta at zero gain")
    check(abs(gpei.omega_at("poly-log", 1, horizon=100) - 2.651965701403206) < 1e-12, "poly-log omega")

    h3 = gpei.StandardFunction("hartmann3")
    check(abs(h3.optimum_value - 3.86278) < 1e-4, "hartmann3 optimum")

    f = gpei.RkhsFunction.generate(k, 2, m=50, seed=1, optimum_budget=2000)
    with tempfile.TemporaryDirectory() as d:
        path = os.path.join(d, "f.json")
        f.save(path)
        g = gpei.RkhsFunction.load(path)
        check(g.optimum_value == f.optimum_value, "rkhs file round trip")

    for alg in ["gp-ei", "improved-gp-ei", "pi-gp-ucb"]:
        t = gpei.run(alg, f, horizon=20, seed=3, acq_candidates=256, acq_refinements=5)
        check(len(t) == 20 and t.cum_regret[-1] >= 0.0, f"{alg} run of 20 steps")

    try:
        gpei.StandardFunction("rosenbrock")
    except ValueError:
        check(True, "unknown function rejected")
    else:
        check(False, "unknown function rejected")
    print("smoke test passed")


if __name__ == "__main__":
    main()
