#!/usr/bin/env python3
"""Regenerate data/spline_oracle.txt.

Each line holds alpha and the Gaussian integral of max(0, 1 - |x|)^alpha
in one dimension, computed with mpmath quadrature at 50 significant digits.

    python3 scripts/gen_spline_oracle.py > data/spline_oracle.txt
"""

import mpmath as mp

DPS = 50
ALPHAS = range(1, 9)


def spline_mass(alpha):
    rho = lambda x: mp.exp(-x * x / 2) / mp.sqrt(2 * mp.pi)
    return 2 * mp.quad(lambda x: (1 - x) ** alpha * rho(x), [0, 1])


def main():
    mp.mp.dps = DPS
    print("# Gaussian integral of max(0, 1 - |x|)^alpha over the real line")
    print(f"# generated by: python3 scripts/gen_spline_oracle.py (mpmath {mp.__version__}, dps = {DPS})")
    print("# alpha value")
    for alpha in ALPHAS:
        print(alpha, mp.nstr(spline_mass(alpha), 30, min_fixed=-1, max_fixed=1))


if __name__ == "__main__":
    main()
