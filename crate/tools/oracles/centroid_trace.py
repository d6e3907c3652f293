"""Manual trace of the centroid selection on hand-built 10-point arrays.

Plain float arithmetic, accumulated left to right with explicit loops so the
rounding sequence is the documented one. Values print with repr (round-trip).
"""
import math

CASES = [
    # name, values, mu_k, sigma_k, sigma source
    ("symmetric", [0.40, 0.42, 0.44, 0.46, 0.48, 0.52, 0.54, 0.56, 0.58, 0.60], (0.2, 0.8), (0.05, 0.05), "global"),
    ("asymmetric", [0.40, 0.42, 0.44, 0.46, 0.48, 0.52, 0.54, 0.56, 0.58, 0.60], (0.25, 0.85), (0.02, 0.09), "global"),
    ("outer", [0.30, 0.45, 0.47, 0.49, 0.50, 0.51, 0.53, 0.55, 0.58, 0.62], (0.05, 0.9), (0.1, 0.02), "global"),
    ("bimodal", [0.02, 0.05, 0.10, 0.12, 0.20, 0.55, 0.70, 0.88, 0.95, 1.00], (0.098, 0.816), (0.06, 0.12), "global"),
    ("asymmetric_cluster", [0.40, 0.42, 0.44, 0.46, 0.48, 0.52, 0.54, 0.56, 0.58, 0.60], (0.25, 0.85), (0.02, 0.09), "cluster"),
    ("outer_cluster", [0.30, 0.45, 0.47, 0.49, 0.50, 0.51, 0.53, 0.55, 0.58, 0.62], (0.05, 0.9), (0.1, 0.02), "cluster"),
    ("bimodal_cluster", [0.02, 0.05, 0.10, 0.12, 0.20, 0.55, 0.70, 0.88, 0.95, 1.00], (0.098, 0.816), (0.06, 0.12), "cluster"),
]


def trace(x, mu_k, sigma_k, source="global"):
    n = 0
    total = 0.0
    for v in x:
        total = total + v
        n = n + 1
    mu = total / n  # global mean
    ss = 0.0
    for v in x:
        ss = ss + (v - mu) * (v - mu)
    sigma = math.sqrt(ss / n)  # population std
    var_l = [abs(mu_k[0] + i * sigma_k[0] - (mu - i * sigma)) for i in (1.0, 2.0, 3.0, 4.0)]
    var_g = [abs(mu_k[1] - i * sigma_k[1] - (mu + i * sigma)) for i in (1.0, 2.0, 3.0, 4.0)]
    m_l = 1
    for i in range(1, 4):
        if var_l[i] < var_l[m_l - 1]:
            m_l = i + 1
    m_g = 1
    for i in range(1, 4):
        if var_g[i] < var_g[m_g - 1]:
            m_g = i + 1
    s_low, s_high = (sigma, sigma) if source == "global" else sigma_k
    out = {"mu": mu, "sigma": sigma, "m_low": m_l, "m_high": m_g}
    for side, cm, a, b in (
        ("low", mu_k[0], mu_k[0] + (m_l + 1.0) * s_low, mu),
        ("high", mu_k[1], mu, mu_k[1] - (m_g + 1.0) * s_high),
    ):
        members = [v for v in x if a <= v <= b]
        if cm == mu or a > b or not members:
            out[side] = cm
            out[side + "_fallback"] = True
        else:
            s = 0.0
            for v in members:
                s = s + v
            out[side] = s / len(members)
            out[side + "_fallback"] = False
        out[side + "_interval"] = (a, b)
        out[side + "_members"] = members
    return out


def rust(v):
    r = repr(float(v))
    return r if ("." in r or "e" in r) else r + ".0"


for name, x, mk, sk, src in CASES:
    t = trace(x, mk, sk, src)
    print(f"// {name}")
    print(
        f"({rust(t['mu'])}, {rust(t['sigma'])}, {t['m_low']}, {t['m_high']}, "
        f"{rust(t['low'])}, {rust(t['high'])}, {str(t['low_fallback']).lower()}, "
        f"{str(t['high_fallback']).lower()}),"
    )
