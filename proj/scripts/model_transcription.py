#!/usr/bin/env python3
"""Independent transcription of the closed-form constants at 40 digits.

Prints the values frozen into tests/unit/test_model.cpp and the CIR
specialization values used by tests/unit/test_policy.cpp.

Usage: python3 scripts/model_transcription.py
"""
from mpmath import mp, mpf, sqrt, sinh, cosh, coth, tanh

mp.dps = 40


def constants(a, beta, c, alpha, r, gamma, scaled=True):
    d = 1 / (1 - gamma)
    L = sqrt(d) / (a**2 * abs(beta)) * sqrt(alpha**2 - gamma * r**2)
    lam = -mpf(1) / 2 - (mpf(1) / 2 - d * c) / (2 * beta)
    ct = c * a**2 if scaled else c
    eta = sqrt((lam + mpf(1) / 2) ** 2 + d * (1 - d) * ct**2 / (4 * a**4 * beta**2))
    Q = d * (alpha - gamma * r) / (L * beta * a**2)
    R = gamma * d * r / (a**2 * beta**2 * L) - 2 * Q * lam - d * (1 - d) * (alpha - r) * ct / (L * a**4 * beta**2)
    return dict(delta=d, Lambda=L, lam=lam, eta=eta, Q=Q, R=R, theta=mpf(1) / 2 + eta - lam, omega=1 + 2 * eta)


def show(tag, k):
    print(tag)
    for n, v in k.items():
        print(f"  {n:7s} {mp.nstr(v, 17)}")


a, beta, c, alpha, r, gamma = mpf("0.4"), mpf("-0.4"), mpf("0.8"), mpf("0.045"), mpf("0.04"), mpf(-4)
km = constants(a, beta, c, alpha, r, gamma, True)
ku = constants(a, beta, c, alpha, r, gamma, False)
show("model scaling", km)
show("unscaled", ku)
S = mpf(100)
print("z(S=100)", mp.nstr(km["Lambda"] * S ** (-2 * beta), 17))
print("tau(T-t=1)", mp.nstr(a**2 * beta**2 * km["Lambda"], 17))
tau, Q = mpf("0.7"), km["Q"]
A = 1 / (2 * sinh(tau) ** 2 * (coth(tau) + Q))
B = (Q**2 - 1) / (2 * (coth(tau) + Q))
D = sinh(tau) ** 2 * (coth(tau) + Q) ** 2
print("A,B,D(0.7)", mp.nstr(A, 17), mp.nstr(B, 17), mp.nstr(D, 17))

kappa, sbar, ac, g = mpf("0.1090"), mpf("1.32675"), mpf("0.28789"), mpf(-7)
d = 1 / (1 - g)
print("cir lambda", mp.nstr(-d * kappa * sbar / ac**2, 17))
kc = constants(ac, mpf("-0.5"), kappa * sbar / ac**2, -kappa, mpf(0), g, True)
show("cir model", kc)
