"""Smoke test for the rsr extension module.

Build and run from the workspace root:

    cargo build --release -p rsr-py --features extension-module
    cp target/release/librsr.so python/rsr.so
    python3 python/smoke_test.py
"""

import math
import os
import random
import sys

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

import rsr  # noqa: E402


def main():
    g = rsr.Graph.us48()
    assert g.n == 48 and g.edge_count == 107, g
    ev = g.eigenvalues()
    assert abs(ev[-1]) < 1e-8 and ev[0] > ev[1]

    x = rsr.gen_covariate(g, 10, seed=1)
    rng = random.Random(2)
    y = [1.0 + 2.0 * xi + rng.gauss(0.0, 1.0) for xi in x]
    cov = [[xi] for xi in x]

    ns = rsr.Model("ns", g, cov)
    hh = rsr.Model("hh", g, cov, q=10)
    assert (ns.p, hh.q) == (2, 10)
    assert all(ok for _, ok, _ in hh.conditions())

    mean, cov_ns, _ = rsr.quadrature_moments(ns, y)
    beta_ols = rsr.ols(ns, y)
    assert max(abs(a - b) for a, b in zip(mean, beta_ols)) < 1e-8

    _, cov_hh, _ = rsr.quadrature_moments(hh, y)
    assert cov_hh[1][1] <= cov_ns[1][1] + 1e-12

    out = rsr.fit(hh, y, iters=4000, seed=3)
    s = out["summary"]["x1"]
    exact_sd = math.sqrt(cov_hh[1][1])
    assert abs(s["mean"] - mean[1]) < 4 * exact_sd, (s, mean)
    assert len(out["beta"]) == len(out["tau_eps"])

    counts = [float(round(math.exp(0.2 * xi) * 5)) for xi in x]
    pois = rsr.Model("rhz", g, cov, family="poisson", y=counts)
    pfit = rsr.fit(pois, counts, iters=2000, seed=4)
    assert 0.0 < pfit["acceptance_beta"] <= 1.0

    rows = rsr.overfit_demo(cov, y)
    assert rows[0][0] == 0 and len(rows) > 10

    checks = rsr.verify(instances=3, gibbs_iterations=2000, rotations=2,
                        lemma_instances=2, lemma_grid=5, tail_instances=1)
    assert checks and all(len(r) == 5 for r in checks)

    report, cells = rsr.simulate("sim1", replicates=2, iters=500)
    assert "Coverage" in report or "coverage" in report.lower()
    assert len(cells) == 9

    try:
        rsr.Model("bogus", g, cov)
    except ValueError:
        pass
    else:
        raise AssertionError("expected ValueError")

    print("rsr smoke test ok")


if __name__ == "__main__":
    main()
