"""Reference values for the `oracle` subcommand, computed with mpmath.

Run from this directory: python3 make_golden.py
"""
import mpmath as mp

mp.mp.dps = 40


def fmt(x):
    return mp.nstr(mp.mpf(x), 20, strip_zeros=False)


def unit_ball(n):
    return mp.pi ** (mp.mpf(n) / 2) / mp.gamma(mp.mpf(n) / 2 + 1)


def catenoid(r):
    z = mp.findroot(lambda z: mp.cosh(z) ** 2 + z ** 2 - r ** 2, mp.acosh(r))
    area = 2 * mp.pi * (z + mp.sinh(2 * z) / 2)
    return z, area


def helicoid_area(r):
    # (u cos v, u sin v, v): |x|^2 = u^2 + v^2, area element sqrt(1 + u^2)
    return mp.quad(lambda u: 2 * mp.sqrt(r ** 2 - u ** 2) * mp.sqrt(1 + u ** 2), [-r, 0, r])


def parabola_length(r):
    x = mp.sqrt((-1 + mp.sqrt(1 + 4 * r ** 2)) / 2)
    return 2 * mp.quad(lambda t: mp.sqrt(1 + 4 * t ** 2), [0, x])


def complex_power_theta(k, r):
    # graph of w^k: |x|^2 = t + t^k with t = |w|^2; area pi (t + k t^k)
    t = mp.findroot(lambda t: t + t ** k - r ** 2, r ** 2 / (1 + r))
    return (t + k * t ** k) / r ** 2


def staircase_length(r, a1=1):
    # segments over (a_{j-1}, a_j), a_j = a1 (2^j - 1); odd j at height 0, even j at +-1/2
    total = mp.mpf(0)
    j = 1
    while True:
        x0, x1 = a1 * (2 ** (j - 1) - 1), a1 * (2 ** j - 1)
        if x0 >= r:
            break
        heights = [0] if j % 2 else [mp.mpf(1) / 2, -mp.mpf(1) / 2]
        for h in heights:
            if abs(h) < r:
                xm = mp.sqrt(r ** 2 - h ** 2)
                total += max(mp.mpf(0), min(x1, xm) - x0)
        j += 1
    return total


def staircase_x_length(x_max, a1=1):
    # segments projected to the axis, counted with multiplicity, over (0, x_max)
    total = mp.mpf(0)
    j = 1
    while a1 * (2 ** (j - 1) - 1) < x_max:
        x0, x1 = a1 * (2 ** (j - 1) - 1), a1 * (2 ** j - 1)
        total += (1 if j % 2 else 2) * (min(x1, x_max) - x0)
        j += 1
    return total


def staircase_bands():
    # theta = length / (2 r) sampled finely over two full periods far out
    lo, hi = mp.inf, -mp.inf
    for j in (40, 41):
        a0, a1 = 2 ** (j - 1) - 1, 2 ** (j + 1) - 1
        for i in range(4001):
            r = a0 + (a1 - a0) * mp.mpf(i) / 4000
            th = staircase_length(r) / (2 * r)
            lo, hi = min(lo, th), max(hi, th)
    return lo, hi


def num(x):
    x = mp.mpf(x)
    return str(int(x)) if x == int(x) else mp.nstr(x, 15)


def tables():
    out = {}
    out["mu"] = [(f"mu_{n}", unit_ball(n)) for n in range(1, 5)]
    out["plane"] = [(f"area(B_{num(r)})", mp.pi * r ** 2) for r in (1, 10)]
    rows = []
    for a in (1, 3):
        rows.append((f"alpha={a}: area(B_1)", 2 * mp.pi / mp.sqrt(1 + a)))
        rows.append((f"alpha={a}: density", 2 / mp.sqrt(1 + a)))
    out["alpha_cone"] = rows
    rows = []
    for r in (2, 10, 50):
        z, area = catenoid(mp.mpf(r))
        rows += [(f"z*({r})", z), (f"area(B_{r})", area), (f"theta({r})", area / (mp.pi * r ** 2))]
    out["catenoid"] = rows
    out["helicoid"] = [(f"theta({r})", helicoid_area(mp.mpf(r)) / (mp.pi * r ** 2)) for r in (10, 100, 1000)]
    out["parabola"] = [(f"length(B_{r})", parabola_length(mp.mpf(r))) for r in (1, 10, 1000)]
    out["complex_parabola"] = [(f"theta({r})", complex_power_theta(2, mp.mpf(r))) for r in (1, 10, 1000)]
    out["complex_cubic"] = [(f"theta({r})", complex_power_theta(3, mp.mpf(r))) for r in (1, 10, 1000)]
    rows = [(f"length(0, a_{j})", staircase_x_length(mp.mpf(2 ** j - 1))) for j in range(1, 7)]
    lo, hi = staircase_bands()
    rows += [("liminf theta", lo), ("limsup theta", hi)]
    out["staircase"] = rows
    return out


if __name__ == "__main__":
    for name, rows in tables().items():
        with open(f"oracle_{name}.tsv", "w") as f:
            for q, v in rows:
                f.write(f"{q}\t{fmt(v)}\n")
