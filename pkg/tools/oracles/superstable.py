"""Superstable parameters c(2^k) at 40 digits by bisection on f_c^q(0).

Brackets come from the previous two values (ratio about 4.67), so no
double-precision code from the package is involved.
"""

import mpmath as mp

mp.mp.dps = 40


def orbit0(c, q):
    x = mp.mpf(0)
    for _ in range(q):
        x = x * x + c
    return x


def bisect(q, lo, hi):
    flo = orbit0(lo, q)
    for _ in range(200):
        m = (lo + hi) / 2
        fm = orbit0(m, q)
        if (fm > 0) == (flo > 0):
            lo, flo = m, fm
        else:
            hi = m
    return (lo + hi) / 2


def main(depth=10):
    cs = [mp.mpf(0), mp.mpf(-1)]
    for k in range(2, depth + 1):
        d = cs[-2] - cs[-1]
        cs.append(bisect(2 ** k, cs[-1] - d / 2, cs[-1] - d / 10))
    for k, c in enumerate(cs):
        print(f"c({2 ** k}) = {mp.nstr(c, 25)}")
    d = [cs[i] - cs[i + 1] for i in range(len(cs) - 1)]
    delta = d[-2] / d[-1]
    print(f"ratio {mp.nstr(delta, 15)}")
    print(f"extrapolated {mp.nstr(cs[-1] - d[-1] / (delta - 1), 20)}")


if __name__ == "__main__":
    main()
