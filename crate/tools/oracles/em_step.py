"""One EM step for a diagonal 2-component mixture, evaluated at 50 digits.

Densities are computed directly (no log-space tricks) so the result does not
share code paths with the Rust implementation.
"""
import mpmath as mp

mp.mp.dps = 50

CASES = {
    "one_d": dict(
        x=[[-0.5], [0.3], [1.2], [3.9], [5.1], [6.4]],
        w=[0.4, 0.6],
        mu=[[0.0], [5.0]],
        var=[[1.0], [2.0]],
    ),
    "two_d": dict(
        x=[[0.1, 0.2], [0.15, 0.1], [0.3, 0.35], [0.7, 0.8], [0.85, 0.75], [0.9, 0.95]],
        w=[0.5, 0.5],
        mu=[[0.2, 0.2], [0.8, 0.8]],
        var=[[0.02, 0.03], [0.01, 0.02]],
    ),
}


def density(x, mu, var):
    p = mp.mpf(1)
    for xi, mi, vi in zip(x, mu, var):
        xi, mi, vi = mp.mpf(xi), mp.mpf(mi), mp.mpf(vi)
        p *= mp.exp(-(xi - mi) ** 2 / (2 * vi)) / mp.sqrt(2 * mp.pi * vi)
    return p


def step(x, w, mu, var):
    joint = [[mp.mpf(w[c]) * density(p, mu[c], var[c]) for c in range(2)] for p in x]
    tot = [sum(j) for j in joint]
    resp = [[j[c] / t for c in range(2)] for j, t in zip(joint, tot)]
    ll = sum(mp.log(t) for t in tot)
    n = len(x)
    d = len(x[0])
    nw, nmu, nvar = [], [], []
    for c in range(2):
        nk = sum(r[c] for r in resp)
        m = [sum(r[c] * mp.mpf(p[i]) for r, p in zip(resp, x)) / nk for i in range(d)]
        v = [sum(r[c] * (mp.mpf(p[i]) - m[i]) ** 2 for r, p in zip(resp, x)) / nk for i in range(d)]
        nw.append(nk / n)
        nmu.append(m)
        nvar.append(v)
    return resp, ll, nw, nmu, nvar


def fmt(v):
    return mp.nstr(v, 20, min_fixed=-30, max_fixed=30)


for name, c in CASES.items():
    resp, ll, w, mu, var = step(**c)
    print(f"== {name}")
    print("resp_1 =", [fmt(r[1]) for r in resp])
    print("ll =", fmt(ll))
    print("weights =", [fmt(v) for v in w])
    print("means =", [[fmt(v) for v in m] for m in mu])
    print("variances =", [[fmt(v) for v in m] for m in var])
