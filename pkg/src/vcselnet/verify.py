"""Self-checks run by ``vcselnet verify``.

Each check returns ``(name, passed, detail)``. They need no external data
and finish in a few seconds.
"""

from __future__ import annotations

import itertools
from fractions import Fraction

import numpy as np

from . import allocation, bia, optics


def check_toy_example():
    ss = bia.build_supersymbol(2, 2)
    ok = ss.length == 3 and ss.dof_fraction() == Fraction(2, 3) and ss.sum_dof() == Fraction(4, 3)
    return "bia-toy-example", ok, f"length={ss.length} sum_dof={ss.sum_dof()}"


def check_dof_law(draws=20, seed=0):
    rng = np.random.default_rng(seed)
    bad = []
    for L, K in itertools.product(range(2, 5), range(1, 5)):
        ss = bia.build_supersymbol(L, K)
        if ss.dof_fraction() != Fraction(L, L + K - 1):
            bad.append((L, K, "dof"))
            continue
        for _ in range(draws):
            if not bia.verify_decodability(ss, rng.uniform(0.1, 1.0, size=(K, L, L))):
                bad.append((L, K, "decode"))
                break
    return "bia-dof-law", not bad, f"failures={bad}"


def check_noise_free_decoding(seed=1):
    rng = np.random.default_rng(seed)
    worst = 0.0
    for L, K in [(2, 2), (3, 2)]:
        ss = bia.build_supersymbol(L, K)
        H = rng.uniform(0.1, 1.0, size=(K, L, L))
        s = rng.normal(size=(K, ss.blocks_per_user, L))
        est = bia.decode(ss, H, bia.transmit(ss, H, s))
        worst = max(worst, float(np.abs(est - s).max()))
    return "bia-noise-free-decoding", worst < 1e-10, f"max_error={worst:.2e}"


def check_beam_optics():
    zr = optics.rayleigh_range(5e-6, 830e-9)
    ok = abs(zr - np.pi * 25e-12 / 830e-9) <= 1e-9 * zr and abs(zr - 9.4627e-5) < 5e-9
    return "optics-rayleigh-range", ok, f"z_R={zr:.6e} m"


def check_multipliers():
    ok = allocation.supply_vcsel_side(1.0) == 1.0
    eta = np.array([0.0, 0.5, 2.0])
    ok &= np.array_equal(allocation.update_eta(eta, [1, 2, 3], [1, 2, 3], 0.3), eta)
    ok &= bool(np.all(allocation.update_eta(eta, [9, 9, 9], [0, 0, 0], 1.0) >= 0))
    return "multiplier-mechanics", bool(ok), ""


def check_centralized_bruteforce(trials=20, seed=2):
    rng = np.random.default_rng(seed)
    for _ in range(trials):
        rp = rng.uniform(0.05, 2.0, size=(3, 2))
        best = max(
            allocation.partial_utility(rp, np.array(c)) for c in itertools.product(range(2), repeat=3)
        )
        link = bia.LinkRates(3, 2, np.zeros(0, int), np.arange(3), np.zeros(0, int),
                             np.zeros((0, 2)), rp, np.zeros(0), 0.0)
        got = allocation.centralized_solve(link, prune=False).total_utility
        if abs(got - best) > 1e-12 * max(1.0, abs(best)):
            return "centralized-bruteforce", False, f"{got} != {best}"
    return "centralized-bruteforce", True, f"{trials} instances"


CHECKS = (
    check_toy_example,
    check_dof_law,
    check_noise_free_decoding,
    check_beam_optics,
    check_multipliers,
    check_centralized_bruteforce,
)


def run_all():
    return [c() for c in CHECKS]
