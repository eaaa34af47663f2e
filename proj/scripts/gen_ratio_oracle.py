#!/usr/bin/env python3
"""Generate the extended-precision oracle table for the Kummer ratio kernel.

Each row holds M(theta-1, omega, x) / M(theta, omega, x) where M is the
first-kind confluent hypergeometric series.  Both series are summed term by
term at 60 significant digits until the tail is below 1e-40 relative; the
result is cross-checked against mpmath.hyp1f1 before being written.

Usage: python3 scripts/gen_ratio_oracle.py > data/ratio_oracle.csv
"""
import itertools
import sys

from mpmath import mp, mpf, hyp1f1, nstr

mp.dps = 60

THETAS = ["0.6", "1.2", "2.5", "5.1"]
OMEGAS = ["1.3", "2.2", "5.24"]
XS = ["0", "0.01", "0.5", "1", "4", "10", "40", "100", "400", "800"]

# (theta, omega, x) points used by unit tests and the stress case
# lambda = 1.2, eta = 2.12 -> theta = 1/2 + eta - lambda = 1.42, omega = 5.24.
EXTRA = [
    ("1.7", "2.2", "0.5"), ("1.7", "2.2", "5"), ("1.7", "2.2", "100"),
    ("3.5", "2.0", "50"), ("2.0", "3.0", "0.01"), ("2.0", "3.0", "500"),
    ("1.42", "5.24", "800"), ("1.42", "5.24", "40"), ("1.42", "5.24", "700"),
    ("1.42", "5.24", "0.5"), ("1.42", "5.24", "2"), ("1.42", "5.24", "4"),
    ("3.0", "2.0", "1000"), ("3.0", "2.0", "10000"), ("0.6", "1.3", "10000"),
    ("5.1", "5.24", "10000"),
]


def kummer_series(a, b, x):
    term = mpf(1)
    total = mpf(1)
    s = 0
    while True:
        term *= (a + s) / ((b + s) * (s + 1)) * x
        total += term
        s += 1
        # past s > x + |a| the terms shrink monotonically
        if term == 0 or (s > x + abs(a) + 2 and abs(term) < abs(total) * mpf(10) ** -45):
            return total


def ratio(theta, omega, x):
    return kummer_series(theta - 1, omega, x) / kummer_series(theta, omega, x)


def main():
    out = sys.stdout
    out.write("theta,omega,x,value\n")
    rows = list(itertools.product(THETAS, OMEGAS, XS)) + EXTRA
    for t, o, x in rows:
        theta, omega, xv = mpf(t), mpf(o), mpf(x)
        value = ratio(theta, omega, xv)
        check = hyp1f1(theta - 1, omega, xv) / hyp1f1(theta, omega, xv)
        if abs(value - check) > abs(check) * mpf(10) ** -30:
            raise SystemExit(f"oracle mismatch at {t},{o},{x}: {value} vs {check}")
        out.write(f"{t},{o},{x},{nstr(value, 25, strip_zeros=False)}\n")


if __name__ == "__main__":
    main()
