"""Tabulate a Bessel kernel and its Hankel transform on a grid (CSV on stdout).

Example:
    python3 scripts/kernel_profile.py --kernel sym2 --T 20 --rho 0.5 > profile.csv
"""

import argparse
import sys

import numpy as np

from voronoi_twist import bessel, hankel
from voronoi_twist.cli import _params, csv_text


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--kernel", default="delta", help="delta, sym2, principal2 or principal3")
    ap.add_argument("--T", type=float, default=20.0)
    ap.add_argument("--rho", type=float, default=0.0)
    ap.add_argument("--points", type=int, default=200)
    args = ap.parse_args()
    p = _params(args.kernel)
    x = np.geomspace(0.05, 50, args.points)
    J = bessel.evaluate_real(p, x).value
    f = hankel.TestFunction(hankel.WeightSpec(args.T), args.rho)
    y = np.geomspace(1e-2, 1e3, args.points) / args.T
    ft = hankel.hankel_real(p, f, y, estimate_error=False).value
    rows = [(xv, jv.real, jv.imag, yv, fv.real, fv.imag) for xv, jv, yv, fv in zip(x, J, y, ft)]
    sys.stdout.write(csv_text(("x", "J_re", "J_im", "y", "ft_re", "ft_im"), rows))
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
