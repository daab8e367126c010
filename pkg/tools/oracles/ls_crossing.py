"""Reference values of the crossing point Z(K, theta) at 30 digits.

Walks the upper arc of the boundary of D((-K, 1), theta) by its polar
angle about the circle centre and bisects the sign of

    |sqrt(w) - i cot(theta)| - 1 / sin(theta),

i.e. membership of w in the square image of D((-1, 1), theta).  Shares
no code with the package.
"""

import sys

import mpmath as mp

mp.mp.dps = 30


def crossing(K, theta, scan=4000):
    K, theta = mp.mpf(K), mp.mpf(theta)
    mid, half = (1 - K) / 2, (1 + K) / 2
    C = mp.mpc(mid, half * mp.cot(theta))
    R = half / mp.sin(theta)
    cu, ru = mp.mpc(0, mp.cot(theta)), 1 / mp.sin(theta)
    p1 = mp.arg(1 - C)
    p2 = mp.arg(-K - C)
    if p2 < p1:
        p2 += 2 * mp.pi

    def g(phi):
        w = C + R * mp.expjpi(phi / mp.pi)
        return abs(mp.sqrt(w) - cu) - ru

    prev_phi, prev = None, None
    for k in range(1, scan):
        phi = p1 + (p2 - p1) * k / scan
        v = g(phi)
        if abs(v) < mp.mpf(10) ** -20:
            continue
        if prev is not None and (v > 0) != (prev > 0):
            lo, hi = prev_phi, phi
            for _ in range(200):
                m = (lo + hi) / 2
                if (g(m) > 0) == (prev > 0):
                    lo = m
                else:
                    hi = m
            return C + R * mp.expjpi(((lo + hi) / 2) / mp.pi)
        prev_phi, prev = phi, v
    return None


def main():
    cases = [(2, 0.2 / 2 ** j) for j in range(5)] + [(2, 0.01), (1.5, 0.05), (2, 3.0)]
    for K, th in cases:
        z = crossing(K, th)
        if z is None:
            print(f"K={K} theta={th!r}: no crossing")
        else:
            print(f"K={K} theta={th!r}: Z = {mp.nstr(z, 17)}  |Z-K^2| = "
                  f"{mp.nstr(abs(z - mp.mpf(K) ** 2), 17)}")


if __name__ == "__main__":
    sys.exit(main())
