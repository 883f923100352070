"""Evaluate reference values at 40 digits and freeze them for the tests.

Runs with mpmath only; nothing here imports the package.  Re-run with
``python3 tools/derive_oracles.py`` to regenerate tests/data/oracle_values.json.
"""

import json
import os

import mpmath as mp

mp.mp.dps = 40
ln = mp.log

C, C0 = mp.mpf(8), 1 + mp.pi**2 / 3
G4 = [mp.mpf(0), mp.mpf("0.2"), mp.mpf("1.5"), mp.mpf("1.8")]
G5 = [mp.mpf(0), mp.mpf("0.2"), mp.mpf("0.5"), mp.mpf(1), mp.mpf("1.5")]


def h_parts(T, g, i):
    """(main, eta, informative) for arm i with alternative gap g[i]."""
    T = mp.mpf(T)
    d = g[i]
    others = [g[j] for j in range(len(g)) if j != i]
    s_ratio = sum(d / (d + x) for x in others)
    s_inv = sum(1 / (d + x) for x in others)
    c_k = C0 * sum(g)
    c_delta = sum(1 / x for x in g if x > 0)
    main = ln(T * d**2 / (2 * C * ln(T) * s_ratio))
    eta = (-(c_k + C * c_delta * ln(T)) / T * ln(T * d**2 / (c_k * d + C * ln(T) * s_ratio))
           - ln(1 + c_k / (C * ln(T) * s_inv)))
    informative = (c_k + C * c_delta * ln(T)) / T < 1 and (c_k + C * s_inv * ln(T)) / (T * d) < 1
    return main, eta, informative


def h_eff(T, g, i):
    main, eta, ok = h_parts(T, g, i)
    return main + eta if ok else mp.mpf(0)


def lb_passive_simple(T, g, eps, p):
    return sum(max(mp.mpf(0), h_eff(T, g, i) / (2 * g[i]) - eps * p[i] * T * g[i])
               for i in range(1, len(g)))


def lb_active_simple(T, g, eps):
    K = len(g)
    req = [mp.mpf(0)] + [max(mp.mpf(0), h_eff(T, g, j)) / (2 * g[j] ** 2) for j in range(1, K)]
    budget = eps * T
    for k in range(1, K):
        tail = sum(req[k + 1:])
        if tail <= budget:
            head = sum(max(mp.mpf(0), h_eff(T, g, i)) / (2 * g[i]) for i in range(1, k + 1))
            return max(mp.mpf(0), head - g[k] * (budget - tail))


def ocucb(N, means, t, eta, rho):
    out = []
    for i in range(len(N)):
        denom = sum(min(N[j], N[j] ** rho * N[i] ** (1 - rho)) for j in range(len(N)))
        B = max(mp.e, ln(t), t * ln(t) / denom)
        out.append(means[i] + mp.sqrt(2 * eta * ln(B) / N[i]))
    return out


def H(g, rank, rho):
    d = g[rank - 1]
    return rank / d**2 + sum(1 / (d ** (2 * (1 - rho)) * x ** (2 * rho)) for x in g[rank:])


def main():
    v = {}
    v["ucb_index_mean05_O4_t100"] = mp.mpf("0.5") + mp.sqrt(6 * ln(100) / 4)
    v["etc_radius_s100_T1e4"] = mp.sqrt(mp.mpf(2) / 100 * ln(mp.mpf(10**4) / 100))
    v["ocucb_N4_16_t20"] = ocucb([mp.mpf(4), mp.mpf(16)], [mp.mpf("0.5"), mp.mpf("0.4")], mp.mpf(20),
                                  mp.mpf(2), mp.mpf("0.5"))
    inv = [1 / x for x in G4[1:]]
    v["p_star_four_arm"] = [mp.mpf(0)] + [x / sum(inv) for x in inv]
    v["h_main_two_arm_T1e4"] = h_parts(10**4, [mp.mpf(0), mp.mpf("0.5")], 1)[0]
    v["lb_passive_simple_four_arm_T1e3"] = lb_passive_simple(1000, G4, mp.mpf("0.1"), [mp.mpf("0.25")] * 4)
    v["lb_passive_simple_four_arm_T1e5_eps1e-4"] = lb_passive_simple(10**5, G4, mp.mpf("1e-4"),
                                                                    [mp.mpf("0.25")] * 4)
    v["lb_active_simple_five_arm_T1e4"] = lb_active_simple(10**4, G5, mp.mpf("0.1"))
    v["lb_active_simple_five_arm_T1e5_eps1e-4"] = lb_active_simple(10**5, G5, mp.mpf("1e-4"))
    ep = mp.mpf("0.1") * mp.mpf("0.25")
    v["ub_ucb_passive_four_arm_finite"] = sum(
        24 / d * ln(50 / ep) + 24 / d * max(ln(1 / (mp.e * d**2)), ln(ln(20 / ep))) for d in G4[1:])
    v["ub_ucb_passive_four_arm_coef"] = sum(24 / d for d in G4[1:])
    s5 = sorted(G5)
    v["ub_active_five_arm_main"] = sum(
        4 / s5[r - 1] * max(ln(10), ln(mp.sqrt(H(s5, r, mp.mpf("0.5"))))) for r in range(2, 6)) + 51 * 5
    v["ub_active_five_arm_loglog"] = sum(ln(ln(H(s5, r, 1) / mp.mpf("0.1"))) ** 2 / s5[r - 1]
                                         for r in range(2, 6))
    v["lambert_w_100"] = mp.lambertw(100).real
    v["lambert_w_grid"] = {str(x): mp.lambertw(mp.mpf(x)).real
                           for x in ("-0.367879", "-0.3", "-0.1", "0.001", "0.5", "1", "10", "1e3", "1e6", "1e12")}
    v["maximal_threshold_t10_T1000_d01"] = mp.sqrt(mp.mpf("0.2") * ln(mp.mpf(1000) / (mp.mpf("0.1") * 10)))
    v["crossing_bound_d01"] = 6 * mp.mpf("0.1") * mp.sqrt(ln(10))
    v["crossing_bound_d001"] = 6 * mp.mpf("0.01") * mp.sqrt(ln(100))
    p, a, n = mp.mpf("0.1"), mp.mpf("0.05"), 100
    x = p - a
    v["binomial_kl_n100_p01_a005"] = mp.exp(-n * (x * ln(x / p) + (1 - x) * ln((1 - x) / (1 - p))))
    v["binomial_gauss_n100_p01_a005"] = mp.exp(-n * a**2 / (2 * p * (1 - p)))
    v["binary_t2_offset_p01_t1000"] = -100 + mp.sqrt(5 * 100 * ln(1000))
    v["epsilon_star_K4_D02_T1e4"] = mp.mpf(4) / (10**4 * mp.mpf("0.2") ** 2)

    def plain(obj):
        if isinstance(obj, dict):
            return {k: plain(x) for k, x in obj.items()}
        if isinstance(obj, list):
            return [plain(x) for x in obj]
        return float(obj)

    path = os.path.join(os.path.dirname(__file__), "..", "tests", "data", "oracle_values.json")
    with open(path, "w") as fh:
        json.dump(plain(v), fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(os.path.normpath(path))


if __name__ == "__main__":
    main()
