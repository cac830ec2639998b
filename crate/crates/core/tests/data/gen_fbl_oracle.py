"""Regenerates fbl_oracle.csv: Gaussian tail and decoding error by adaptive quadrature.

Run: python3 gen_fbl_oracle.py > fbl_oracle.csv   (needs mpmath)
"""
import random

from mpmath import mp, mpf, quad, exp, sqrt, pi, log, inf

mp.dps = 50


def tail(x):
    if x < 0:
        return 1 - tail(-x)
    # Substitute t = x + u and pull exp(-x^2/2) out, so deep tails keep full
    # relative precision; breakpoints follow the 1/x decay scale of the rest.
    s = 1 / max(x, mpf(1))
    body = quad(lambda u: exp(-x * u - u * u / 2), [0, s, 4 * s, 16 * s, 64 * s, inf])
    return exp(-x * x / 2) * body / sqrt(2 * pi)


def psi(g, m, d):
    g, m, d = mpf(g), mpf(m), mpf(d)
    v = 1 - 1 / (1 + g) ** 2
    return log(2) * sqrt(m / v) * (log(1 + g) / log(2) - d / m)


rng = random.Random(20240611)
print("kind,gamma_or_x,M,D,value")
for i in range(100):
    x = -6.0 + i * (37.0 - -6.0) / 99.0
    print(f"q,{x!r},0,0,{mp.nstr(tail(mpf(x)), 30)}")
rows = 0
while rows < 100:
    g = 10.0 ** rng.uniform(-1.0, 1.5)
    m = rng.choice([20, 50, 100, 110, 120, 130, 200, 500])
    d = rng.randint(10, 2 * m)
    p = psi(g, m, d)
    if not -8 < p < 37:
        continue
    print(f"eps,{g!r},{m},{d},{mp.nstr(tail(p), 30)}")
    rows += 1
