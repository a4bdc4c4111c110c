"""Smoke test for the sleobs Python extension.

Build the module and run from the repository root:

    cargo build -p sleobs-py --release
    cp target/release/libsleobs.so python/sleobs.so
    python3 python/smoke_test.py
"""

import cmath
import math

import sleobs


def main():
    p = sleobs.Params(8 / 3)
    assert abs(p.a - math.sqrt(3 / 4)) < 1e-15
    assert abs(2 * p.a * (p.a + p.b) - 1) < 1e-14
    assert abs(p.lam - (p.mu + p.kappa * p.lam**2 / 2)) < 1e-14
    assert abs(p.c) < 1e-14
    try:
        sleobs.Params(-1.0)
    except sleobs.SleobsError:
        pass
    else:
        raise AssertionError("negative kappa accepted")

    d = sleobs.Driver.brownian(4.0, 1e-3, 200, seed=3)
    assert d.n_steps == 200 and len(d.theta) == 201
    assert sleobs.Driver.from_csv(d.to_csv()).theta == d.theta
    gamma = d.trace(5)
    assert len(gamma) == 5 and all(abs(g) <= 1 + 1e-6 for g in gamma)

    div = sleobs.Divisor("node 0,0.4 0.5 0.5; root -0.5 -0.5")
    assert div.is_neutral
    v0 = div.evaluate(p)
    times, values, swallow = div.along_path(p, d, every=50)
    assert times[0] == 0.0 and cmath.isclose(values[0], v0, rel_tol=1e-12)
    assert swallow is None

    cfg = sleobs.McConfig(2.0, 400, 1e-2, [0.1, 0.3], seed=1)
    rep = sleobs.martingale_test(cfg, "lsw_poisson", z=complex(0.1, 0.4))
    assert len(rep["rows"]) == 2 and rep["config"]["n_paths"] == 400

    fw = sleobs.fw_limit_check(math.pi / 2, 1e-4)
    assert fw["relative_error"] < 0.02
    assert abs(sleobs.bpz_residual_virasoro(complex(0.2, 0.3), sleobs.Params(6.0))) < 1e-9
    names = {e["name"] for e in sleobs.catalog(p)}
    assert "lsw_poisson" in names
    print("sleobs python smoke test: ok")


if __name__ == "__main__":
    main()
