"""Independent reference values frozen into the C++ tests.

Uses mpmath (Gauss-Legendre / tanh-sinh with interval splitting at 80 digits),
a code path unrelated to the library's MPFR quadrature.
Run: python3 tests/oracles/compute_oracles.py
"""
from mpmath import mp, mpf, quad, exp, sqrt, pi, log, e, erfc, findroot, ncdf, npdf

mp.dps = 80


def F(x):
    # v = 1/y turns the integral into a Gaussian-type tail; the integrand is
    # rescaled by e^{a^2/2} because mpmath's quad uses an absolute tolerance.
    x = mpf(x)
    a = 1 / x
    c = exp(-mpf(1) / 2) / sqrt(2 * pi)
    f = lambda y: exp(-(y * y - a * a) / 2 - 1 / (8 * y * y)) / (y * y)
    return c * exp(-a * a / 2) * quad(f, [a, a + 1, a + 3, a + 10, mp.inf])


def F_inv(y):
    L = log(1 / y)
    return findroot(lambda x: log(F(x)) - log(y), 1 / sqrt(2 * L) * mpf("1.2"))


def show(name, v, digits=50):
    print(f"{name} = {mp.nstr(v, digits)}")


show("F(1)", F(1))
show("F(0.2)", F(mpf("0.2")))
show("F(0.05)", F(mpf("0.05")))
show("F(3)", F(3))
show("F(0.1)", F(mpf("0.1")))
show("N(2)", ncdf(2))
show("npdf(3)", npdf(3))
show("F_inv(1/(2e))", F_inv(1 / (2 * e)))
show("F_inv(1e-8)", F_inv(mpf("1e-8")))
show("bs(1,0.9,1,0.25)", ncdf(log(1 / mpf("0.9")) / mpf("0.25") + mpf("0.125")) - mpf("0.9") * ncdf(log(1 / mpf("0.9")) / mpf("0.25") - mpf("0.125")))
