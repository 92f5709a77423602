"""High-precision reference values for the confidence thresholds and intervals.

Evaluates the closed forms with mpmath at 50 digits, and the Bernstein
interval endpoints both by root finding and by a dense grid scan.
"""
import numpy as np
from mpmath import mp, mpf, log, sqrt, findroot

mp.dps = 50
ETA = mpf("1.12")


def beta(n, delta):
    n, delta = mpf(n), mpf(delta)
    l1 = max(log(n), mpf(1))
    l2 = max(log(ETA * n), mpf(1))
    return ETA * log(l1 * l2 / (log(ETA) ** 2 * delta))


def beta_prime(n, delta):
    n, delta = mpf(n), mpf(delta)
    return sqrt(2 * (1 + 1 / n) * log(sqrt(n + 1) / delta) / n)


def l1_weissman(n, s, delta, t):
    n, s, delta, t = map(mpf, (n, s, delta, t))
    return sqrt((2 / n) * (s * log(2) + log(t * (t + 1) / delta)))


def l1_laplace(n, s, delta):
    n, s, delta = map(mpf, (n, s, delta))
    return sqrt((2 / n) * (1 + 1 / n) * (s * log(2) + log(sqrt(n + 1) / delta)))


def bernstein_root(p_hat, n, b, side):
    """Endpoint on `side` ("lo" or "hi") by bracketed root finding."""
    p_hat, n, b = map(mpf, (p_hat, n, b))
    f = lambda q: sqrt(2 * q * (1 - q) * b / n) + b / (3 * n) - abs(p_hat - q)
    bracket = (mpf(0), p_hat) if side == "lo" else (p_hat, mpf(1))
    return findroot(f, bracket, solver="anderson")


def bernstein_grid(p_hat, n, b, points=10**6 + 1):
    q = np.linspace(0.0, 1.0, points)
    ok = np.abs(p_hat - q) <= np.sqrt(2 * q * (1 - q) * b / n) + b / (3 * n)
    return q[ok].min(), q[ok].max()


def show(name, v):
    print(f"{name} = {mp.nstr(v, 17)}")


if __name__ == "__main__":
    show("beta(10, 0.05)", beta(10, 0.05))
    show("beta(100, 0.01)", beta(100, 0.01))
    show("beta(1, 0.05)", beta(1, 0.05))
    show("beta(2, 0.05)", beta(2, 0.05))
    show("beta(3, 0.05)", beta(3, 0.05))
    show("beta(1e6, 1e-4)", beta(10**6, mpf("1e-4")))
    show("beta_prime(1, 0.1)", beta_prime(1, 0.1))
    show("beta_prime(99, 0.05)", beta_prime(99, 0.05))
    show("beta_prime(1e4, 0.001)", beta_prime(10**4, mpf("0.001")))
    # reward example: mean 0.5, var 0.25, N 100, delta 0.01
    h = beta_prime(100, mpf("0.01")) / 2
    b = beta(100, mpf("0.01"))
    bern = sqrt(2 * mpf("0.25") * b / 100) + 7 * b / 300
    show("reward hoeffding(100, 0.01)", h)
    show("reward bernstein(0.25, 100, 0.01)", bern)
    b2 = beta(1000, mpf("0.02"))
    show("reward hoeffding(1000, 0.02)", beta_prime(1000, mpf("0.02")) / 2)
    show("reward bernstein(0.01, 1000, 0.02)", sqrt(2 * mpf("0.01") * b2 / 1000) + 7 * b2 / 3000)
    show("l1 weissman(1, 1, 0.5, t=1)", l1_weissman(1, 1, mpf("0.5"), 1))
    show("l1 weissman(50, 3, 0.001, t=1000)", l1_weissman(50, 3, mpf("0.001"), 1000))
    show("l1 laplace(100, 2, 0.01)", l1_laplace(100, 2, mpf("0.01")))
    show("l1 laplace(1, 6, 0.1)", l1_laplace(1, 6, mpf("0.1")))
    # Bernstein endpoints, p_hat 0.5, N 100, beta 5
    show("bernstein lo(0.5, 100, 5)", bernstein_root(0.5, 100, 5, "lo"))
    show("bernstein hi(0.5, 100, 5)", bernstein_root(0.5, 100, 5, "hi"))
    print("grid(0.5, 100, 5) =", bernstein_grid(0.5, 100, 5))
    show("bernstein hi(0, 10, 3)", bernstein_root(0, 10, 3, "hi"))
    print("grid(0, 10, 3) =", bernstein_grid(0.0, 10, 3))
    show("bernstein lo(0.9, 40, 8)", bernstein_root(0.9, 40, 8, "lo"))
    show("bernstein hi(0.9, 40, 8)", bernstein_root(0.9, 40, 8, "hi"))
    print("grid(0.9, 40, 8) =", bernstein_grid(0.9, 40, 8))
