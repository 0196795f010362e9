"""High-precision reference values frozen into the unit tests.

Run with: python3 tests/oracles/derived_values.py
"""
import mpmath as mp

mp.mp.dps = 40


def lam(w):
    return 1 / (1 + mp.e ** (-w))


def phi_quad(z):
    # Gaussian density integrated by tanh-sinh quadrature.
    return mp.mpf("0.5") + mp.quad(lambda t: mp.e ** (-t * t / 2) / mp.sqrt(2 * mp.pi), [0, z])


print("logistic(2)           =", mp.nstr(lam(2), 20))
print("normal_cdf(1)         =", mp.nstr(phi_quad(1), 20))
print("icc_2pl(a=1,b=0,th=1) =", mp.nstr(lam(mp.mpf("1.7")), 20))
arg = mp.mpf("0.3") + mp.sqrt(mp.mpf("0.54")) + mp.mpf("0.6")
print("3pn arg               =", mp.nstr(arg, 20))
print("icc_3pn(.6,.3,0,1)    =", mp.nstr(phi_quad(arg), 20))
print("2pl at median 0.12    =", mp.nstr(lam(mp.mpf("1.7") * mp.mpf("0.12")), 20))
print("fig1a row             =", [mp.nstr(lam(w), 12) for w in (-4, -2, 0, 2, 4)])
y1 = lam(-1) / (lam(-1) + lam(1))
print("e_step toy posterior  =", mp.nstr(y1, 20), mp.nstr(1 - y1, 20))
print("log 3                 =", mp.nstr(mp.log(3), 20))
print("pi floor              =", mp.nstr(mp.mpf("1e-6") / (1 + mp.mpf("1e-6")), 20))
