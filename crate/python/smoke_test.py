"""Smoke test for the membrane_py extension.

Build and install first:  pip install --no-build-isolation -e crates/py
Then run:                 python3 python/smoke_test.py
"""

import json
import math
import sys

import membrane_py as mp


def check(name, ok, detail=""):
    print(f"{'ok  ' if ok else 'FAIL'} {name} {detail}")
    return ok


def main():
    results = []

    s = mp.solve_varsigma(5, 0.0)
    results.append(check("circle member varsigma", abs(s + 24 ** (1 / 3)) < 1e-10, f"{s:.12f}"))

    pts = mp.directrix(5, 0.0, samples=64)
    cx = sum(p[0] for p in pts) / len(pts)
    cy = sum(p[1] for p in pts) / len(pts)
    r = max(abs(math.hypot(p[0] - cx, p[1] - cy) - 4 * 3 ** (1 / 3)) for p in pts)
    results.append(check("circle member radius", r < 1e-8, f"{r:.1e}"))

    rep = mp.classify(5, 0.9, samples=300)
    n = sum(1 for i in rep["intersections"]["intersections"] if i["transversal"])
    results.append(check("rho = 0.9 crossings", n == 20, str(n)))

    fc = mp.FamilyConstants(-2.0, 0.4)
    res = fc.ode_residuals()
    results.append(check("ODE chain", res["eq3"] < 1e-8 and res["mkdv"] < 1e-6))

    k = mp.complete_k(0.5)
    sn, cn, dn = mp.jacobi(0.7, 0.5)
    results.append(check("elliptic", abs(sn * sn + cn * cn - 1) < 1e-14 and k > math.pi / 2))

    gauge = mp.ShapeModel.helfrich(mp.Material.circle_gauge())
    circle = json.dumps({"kind": "circle", "radius": 1.0})
    curve = mp.build_integral_curve(circle, "0.5", gauge, n=64)
    worst = max(v for _, v in curve.residuals(gauge))
    results.append(check("integral curve residuals", worst < 1e-12, f"{worst:.1e}"))

    patch = mp.march(curve, gauge, 1 / 32, 9)
    err = 0.0
    for j, row in enumerate(patch.positions()):
        for x, p in zip(curve.xs, row):
            want = (math.cos(x), math.sin(x), -j / 32)
            err = max(err, max(abs(a - b) for a, b in zip(p, want)))
    results.append(check("gauge cylinder march", err < 1e-12, f"{err:.1e}"))

    names = [n for n, _ in mp.ShapeModel.willmore().coefficients()]
    results.append(check("derived coefficients", names == ["B1", "B2", "D1", "D2"]))

    try:
        mp.build_integral_curve(circle, "2", gauge, n=16)
        results.append(check("inadmissible data rejected", False))
    except ValueError:
        results.append(check("inadmissible data rejected", True))

    return 0 if all(results) else 1


if __name__ == "__main__":
    sys.exit(main())
