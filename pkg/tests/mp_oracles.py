"""High-precision quadrature references, independent of the closed forms under test."""

import mpmath as mp

mp.mp.dps = 30

R, DELTA, SIGMA, T = mp.mpf("0.03"), mp.mpf("0.04"), mp.mpf("0.4"), mp.mpf(1)


def density(z):
    return mp.exp(-z * z / 2) / mp.sqrt(2 * mp.pi)


def cdf_by_quadrature(z):
    return mp.quad(density, [-mp.inf, 0, z])


def put_by_quadrature(t, x, strike, r=R, delta=DELTA, sigma=SIGMA, T=T):
    """e^{-r tau} E (strike - X_T)^+ integrated against the lognormal law of X_T."""
    tau = mp.mpf(T) - t
    x, strike = mp.mpf(x), mp.mpf(strike)
    drift = (r - delta - sigma**2 / 2) * tau
    vol = sigma * mp.sqrt(tau)
    # payoff vanishes above z* where x exp(drift + vol z) = strike
    z_star = (mp.log(strike / x) - drift) / vol
    f = lambda z: (strike - x * mp.exp(drift + vol * z)) * density(z)
    return mp.exp(-r * tau) * mp.quad(f, [-mp.inf, z_star])


def tilted_tail_by_quadrature(t, u, x, z, r=R, delta=DELTA, sigma=SIGMA):
    """P(X_u >= z) when log X drifts at r - delta + sigma^2/2."""
    du = mp.mpf(u) - t
    m = mp.log(x) + (r - delta + sigma**2 / 2) * du
    s = sigma * mp.sqrt(du)
    return mp.quad(lambda y: density((y - m) / s) / s, [mp.log(z), m, mp.inf])


def h1_by_differentiation(t, r=R, delta=DELTA, sigma=SIGMA, T=T):
    vp = lambda s: put_by_quadrature(s, 1, 1, r, delta, sigma, T)
    return mp.diff(vp, mp.mpf(t)) - delta * vp(mp.mpf(t))


if __name__ == "__main__":
    print("cdf(1.96)", cdf_by_quadrature(mp.mpf("1.96")))
    print("pdf(1)", density(mp.mpf(1)))
    print("put(0,1,1)", put_by_quadrature(0, 1, 1))
    print("unit_put(0.5)", put_by_quadrature(mp.mpf("0.5"), 1, 1))
    print("qhat(0,1,1,1.2)", tilted_tail_by_quadrature(0, 1, 1, mp.mpf("1.2")))
    h = h1_by_differentiation(mp.mpf("0.9"))
    q = tilted_tail_by_quadrature(0, mp.mpf("0.9"), mp.mpf("1.3"), mp.mpf("1.1"))
    print("h1(0.9)", h, "qhat", q)
    print("kernel", -mp.mpf("1.3") * mp.exp(-DELTA * mp.mpf("0.9")) * h * q)
    print("h1(0.5)", h1_by_differentiation(mp.mpf("0.5")))
