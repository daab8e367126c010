"""Periodic points, rescaled critical values and multipliers at 30 digits.

For q = 2^k the boundary point beta of the periodic interval is the
fixed point of f^q on the relevant cycle; it is refined by mpmath's
findroot from the closed forms for q = 2, 4 and from four-digit
starting values otherwise.  Prints beta, g(0) = f^q(0)/beta, (f^q)'(beta) and the
solution j' > 1 of g(j') = L (in rescaled units beta is 1).
"""

import mpmath as mp

mp.mp.dps = 30
C_FEIG = mp.mpf("-1.4011551890926426")


def fq(c, x, q):
    for _ in range(q):
        x = x * x + c
    return x


def dfq(c, x, q):
    d = mp.mpf(1)
    for _ in range(q):
        d *= 2 * x
        x = x * x + c
    return d


def beta_of(c, q, guess):
    return mp.findroot(lambda x: fq(c, x, q) - x, guess)


def bisect(func, lo, hi, iters=150):
    flo = func(lo)
    for _ in range(iters):
        m = (lo + hi) / 2
        fm = func(m)
        if (fm > 0) == (flo > 0):
            lo, flo = m, fm
        else:
            hi = m
    return (lo + hi) / 2


def rescaled(c, q, beta, L):
    g = lambda x: fq(c, beta * x, q) / beta
    jp = bisect(lambda x: g(x) - L, mp.mpf(1), mp.mpf("1.1"))
    return g(0), dfq(c, beta, q), jp


def main():
    c = C_FEIG
    guesses = {2: (1 - mp.sqrt(1 - 4 * c)) / 2,
               4: (-1 + mp.sqrt(-3 - 4 * c)) / 2,
               8: mp.mpf("-0.1227"), 16: mp.mpf("0.04903"), 32: mp.mpf("-0.01959"),
               64: mp.mpf("0.007826")}
    betas = {}
    for q, guess in guesses.items():
        b = beta_of(c, q, guess)
        betas[q] = b
        g0, mult, jp = rescaled(c, q, b, mp.mpf("1.05"))
        print(f"q={q}: beta={mp.nstr(b, 20)} g0={mp.nstr(g0, 20)} "
              f"mult={mp.nstr(mult, 20)} jp={mp.nstr(jp, 20)}")
    qs = sorted(betas)
    print("ratios", [mp.nstr(abs(betas[a]) / abs(betas[b]), 17) for a, b in zip(qs, qs[1:])])
    c = mp.mpf(-1)
    b = (1 - mp.sqrt(5)) / 2
    g0, mult, jp = rescaled(c, 2, b, mp.mpf("1.05"))
    print(f"c=-1 q=2: beta={mp.nstr(b, 20)} g0={mp.nstr(g0, 20)} mult={mp.nstr(mult, 20)} "
          f"jp={mp.nstr(jp, 20)} w=1/|beta|={mp.nstr(1 / abs(b), 20)}")


if __name__ == "__main__":
    main()
