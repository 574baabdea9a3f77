"""Smoke test for the Python bindings. Build first with
`pip install --no-build-isolation crates/python`, then run `python3 python/smoke_test.py`."""

import math

import degen_eigen_py as de


def j0_first_zero_squared():
    def j0(x):
        term, total = 1.0, 1.0
        for m in range(1, 60):
            term *= -(x * x / 4.0) / (m * m)
            total += term
        return total

    a, b = 2.0, 3.0
    for _ in range(200):
        m = 0.5 * (a + b)
        if j0(a) * j0(m) <= 0.0:
            b = m
        else:
            a = m
    return (0.5 * (a + b)) ** 2


def main():
    lap = de.Operator.laplacian(2)
    assert lap.symmetric and lap.n == 2
    assert abs(lap.eval([0.3, -0.1], [[1.0, 0.2], [0.2, 3.0]]) - 4.0) < 1e-12

    ops = de.Operator.builtins(2)
    assert len(ops) == 9
    for op in ops:
        report = op.check_conditions(seed=1, trials=200)
        assert report["a"]["passed"] and report["b"]["passed"] and report["c"]["passed"], op
    pseudo = de.Operator.from_json('{"family":"pseudo_plap","n":2,"params":{"p":2}}')
    assert not pseudo.symmetric
    assert not pseudo.check_conditions()["d"]["passed"]

    lam_star = de.eigen_radial(lap)["lambda_star"]
    assert abs(lam_star - j0_first_zero_squared()) < 1e-4 * lam_star, lam_star
    inf = de.Operator.inf_type(2)
    assert abs(de.eigen_radial(inf)["lambda_star"] - math.pi**4 / 64) < 1e-4
    assert de.scaling_invariant_check(inf, [0.5, 1.0, 2.0])["passed"]
    assert de.solve_radial(lap, 6.0) is None
    sol = de.solve_radial(lap, 4.0)
    assert abs(sol["v0"] - 1 / 0.2238907791412357) < 1e-4

    disk = de.Domain.disk(1.0, 1.0 / 16.0)
    field = de.solve_grid(lap, disk, 4.0)
    assert field.converged and field.inf() > 1.0
    assert len(field.values) == disk.n_interior == len(disk.positions())
    assert field.to_csv(disk).startswith("i,j,x,y,u")
    assert de.verify_solution(lap, field, disk)["passed"]
    assert de.solve_grid(lap, disk, 7.0).status == "blowup"

    threshold = disk.lambda_threshold(inf)["value"]
    f = de.solve_grid(inf, disk, 0.9 * threshold)
    assert f.converged and de.verify_solution(inf, f, disk)["passed"]

    square = de.Domain.rectangle(1.0, 1.0, 1.0 / 16.0)
    b = de.estimate_lambda(lap, square)
    assert b["lam_lo"] < 2 * math.pi**2 * 1.03 and b["lam_hi"] > 2 * math.pi**2 * 0.97, b

    probes = [(0.2 * math.cos(t), 0.2 * math.sin(t)) for t in (0.0, 1.0, 2.0)]
    d = de.lambda_derivative_check(lap, disk, [3.0, 3.5, 4.0], probes)
    assert d["passed"] and len(d["probes"]) == 6

    try:
        de.Operator.pucci_plus(2, 2.0, 1.0)
    except ValueError:
        pass
    else:
        raise AssertionError("lam > Lam must be rejected")
    print("python smoke test passed")


if __name__ == "__main__":
    main()
