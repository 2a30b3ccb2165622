"""Independent reference values, frozen into ``frozen.json``.

Nothing here imports the package: partition functions are brute-force
enumerations in extended precision, posterior means are quadratures over
those enumerations.  Re-run with ``python tests/oracles/make_oracles.py``.
"""

import itertools
import json
from pathlib import Path

import mpmath as mp

mp.mp.dps = 40

THETAS = [-1.0, -0.4, 0.0, 0.4, 1.0]


def ising_pairs(rows, cols):
    out = []
    for r in range(rows):
        for c in range(cols):
            if r + 1 < rows:
                out.append(((r, c), (r + 1, c)))
            if c + 1 < cols:
                out.append(((r, c), (r, c + 1)))
    return out


def ising_stat_counts(rows, cols):
    """Multiplicity of each value of s over all 2^(rows*cols) lattices."""
    pairs = ising_pairs(rows, cols)
    counts = {}
    sites = [(r, c) for r in range(rows) for c in range(cols)]
    for spins in itertools.product((-1, 1), repeat=len(sites)):
        x = dict(zip(sites, spins))
        s = sum(x[a] * x[b] for a, b in pairs)
        counts[s] = counts.get(s, 0) + 1
    return counts


def log_z(counts, theta):
    return mp.log(mp.fsum(n * mp.exp(mp.mpf(theta) * s) for s, n in counts.items()))


def mean_s(counts, theta):
    z = mp.fsum(n * mp.exp(mp.mpf(theta) * s) for s, n in counts.items())
    return mp.fsum(n * s * mp.exp(mp.mpf(theta) * s) for s, n in counts.items()) / z


def ergm_stat_counts(n):
    pairs = list(itertools.combinations(range(n), 2))
    counts = {}
    for bits in itertools.product((0, 1), repeat=len(pairs)):
        deg = [0] * n
        for (i, j), b in zip(pairs, bits):
            deg[i] += b
            deg[j] += b
        key = (sum(bits), sum(d * (d - 1) // 2 for d in deg))
        counts[key] = counts.get(key, 0) + 1
    return counts


def ergm_log_z_and_mean(counts, theta):
    t1, t2 = (mp.mpf(v) for v in theta)
    w = {k: n * mp.exp(t1 * k[0] + t2 * k[1]) for k, n in counts.items()}
    z = mp.fsum(w.values())
    return mp.log(z), [mp.fsum(v * k[0] for k, v in w.items()) / z, mp.fsum(v * k[1] for k, v in w.items()) / z]


def ising_posterior_mean(counts, s_obs, prior_sd, lo=-4.0, hi=4.0):
    def dens(t):
        return mp.exp(t * s_obs - log_z(counts, t) - t * t / (2 * prior_sd**2))

    z = mp.quad(dens, [lo, 0, hi])
    return mp.quad(lambda t: t * dens(t), [lo, 0, hi]) / z


def main():
    out = {"ising": {}, "ergm": {}}
    for shape in [(3, 3), (2, 4), (1, 5), (4, 3)]:
        counts = ising_stat_counts(*shape)
        key = f"{shape[0]}x{shape[1]}"
        out["ising"][key] = {
            "theta": THETAS,
            "log_z": [float(log_z(counts, t)) for t in THETAS],
            "mean_s": [float(mean_s(counts, t)) for t in THETAS],
        }
    # posterior mean for a fixed 3x3 lattice under a N(0, 5^2) prior
    lattice = [[1, 1, -1], [1, 1, -1], [1, 1, 1]]
    pairs = ising_pairs(3, 3)
    s_obs = sum(lattice[a[0]][a[1]] * lattice[b[0]][b[1]] for a, b in pairs)
    counts = ising_stat_counts(3, 3)
    out["ising"]["posterior_3x3"] = {
        "lattice": lattice,
        "s_obs": s_obs,
        "prior_sd": 5.0,
        "mean": float(ising_posterior_mean(counts, s_obs, 5.0)),
    }
    ergm_thetas = [[0.0, 0.0], [-0.5, 0.2], [0.3, -0.4], [-1.0, 0.1]]
    for n in (2, 3, 4, 5):
        counts = ergm_stat_counts(n)
        vals = [ergm_log_z_and_mean(counts, t) for t in ergm_thetas]
        out["ergm"][str(n)] = {
            "theta": ergm_thetas,
            "log_z": [float(v[0]) for v in vals],
            "mean_s": [[float(x) for x in v[1]] for v in vals],
        }
    # exponential model: rho(K)^2 = 1/(1 + C/K) with C = 1/2 at phi = [0, 1/(2y)]
    out["exponential"] = {"C": 0.5, "rho_inf": 1.0, "rho_1": float(mp.sqrt(mp.mpf(2) / 3))}
    path = Path(__file__).with_name("frozen.json")
    path.write_text(json.dumps(out, indent=1) + "\n")
    print(path)


if __name__ == "__main__":
    main()
