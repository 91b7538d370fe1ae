"""Smoke test for the compiled extension. Run after `pip install --no-build-isolation ./crates/python`."""

import math

import infdensity_py as m


def main():
    names = m.builtins()
    assert "plane" in names and "catenoid" in names, names

    d = m.density("plane")
    assert d["verdict"]["kind"] == "converges", d["verdict"]
    assert abs(d["verdict"]["value"] - 1.0) < 1e-3

    d = m.density("catenoid")
    assert d["verdict"]["kind"] == "converges"
    assert abs(d["verdict"]["value"] - 2.0) < 1e-2

    d = m.density("plane", at_point=[0.0, 0.0, 0.0])
    assert abs(d["verdict"]["value"] - 1.0) < 1e-3

    text = 'scene "tilted" { ambient 3; dim 2; chart { params (u, v); domain { u in (-inf, inf); v in (-inf, inf) }; map (u, v, 0.5*u - 0.25*v) } meta { definable=true; minimal=true } }'
    d = m.density(text)
    assert abs(d["verdict"]["value"] - 1.0) < 1e-3, d["verdict"]

    p = m.profile("parabola", rmin=10.0, rmax=100.0, k=8)
    assert len(p["radii"]) == 8

    c = m.cone("plane")
    assert c["is_linear_subspace"]

    k = m.multiplicity("catenoid", [1.0, 0.0, 0.0])
    assert k["k"] == 2, k["k"]

    mu = dict(m.oracle("mu"))
    assert any(math.isclose(v, math.pi) for v in mu.values()), mu

    try:
        m.density("no_such_scene")
    except ValueError:
        pass
    else:
        raise AssertionError("unknown scene accepted")

    print("smoke test ok")


if __name__ == "__main__":
    main()
