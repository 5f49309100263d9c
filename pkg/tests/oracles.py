"""Reference implementations used only by the tests.

Everything here is written from the defining formulas with exact or
high-precision arithmetic and shares no code with the package.
"""

from fractions import Fraction
from math import comb

import mpmath


def exact(x):
    return x if isinstance(x, Fraction) else Fraction(x)


def forward_oracle(p, eta):
    """Q_m = sum_{n >= m} C(n, m) eta^m (1 - eta)^(n - m) P_n, term by term."""
    p = [exact(v) for v in p]
    e = exact(eta)
    return [
        sum((comb(n, m) * e**m * (1 - e) ** (n - m) * p[n] for n in range(m, len(p))), Fraction(0))
        for m in range(len(p))
    ]


def inverse_oracle(q, eta):
    """P_n = sum_{m >= n} C(m, n) eta^-n (1 - 1/eta)^(m - n) Q_m, term by term."""
    q = [exact(v) for v in q]
    e = exact(eta)
    return [
        sum((comb(m, n) * e ** (-n) * (1 - 1 / e) ** (m - n) * q[m] for m in range(n, len(q))), Fraction(0))
        for n in range(len(q))
    ]


def poisson_oracle(mean, m, dps=50):
    with mpmath.workdps(dps):
        mu = mpmath.mpf(mean)
        return mpmath.power(mu, m) * mpmath.exp(-mu) / mpmath.factorial(m)


def compound_poisson_oracle(mean, a, m, dps=50):
    """Gamma(a+m)/(m! Gamma(a)) (mean/a)^m (1 + mean/a)^-(m+a)."""
    with mpmath.workdps(dps):
        mu, a = mpmath.mpf(mean), mpmath.mpf(a)
        r = mu / a
        return (
            mpmath.gamma(a + m) / (mpmath.factorial(m) * mpmath.gamma(a))
            * mpmath.power(r, m) * mpmath.power(1 + r, -(m + a))
        )


def criterion_oracle(q, eta, n, m):
    """Direct evaluation of Q_{m+1} < Q_m (1 - n/(m+1)) eta/(1 - eta) in exact arithmetic."""
    e = exact(eta)
    q_m, q_next = exact(q[m]), exact(q[m + 1])
    if q_m == 0 and q_next == 0:
        return True
    return q_next < q_m * (1 - Fraction(n, m + 1)) * e / (1 - e)
