"""Time the numba kernels against the numpy fallback.

    python benchmarks/bench_kernels.py [--repeat 5]

Both backend modules are imported directly, so the environment flag does
not matter here. The first numba call (compilation) is excluded.
"""

import argparse
import timeit

import numpy as np

from vcselnet._kernels import _numba, _numpy
from vcselnet.config import PAPER_TABLE1


def cases(rng):
    sc = PAPER_TABLE1.scenario(seed=0, num_users=200)
    rx = sc.users[0].receiver
    waist = np.full(sc.num_vcsels, 5e-6)
    rayleigh = np.pi * waist**2 / 830e-9
    gains_args = (
        sc.user_positions,
        np.ascontiguousarray(rx.face_offsets),
        np.ascontiguousarray(rx.orientations),
        sc.vcsel_positions,
        waist,
        rayleigh,
        rx.photodiode_area,
        np.cos(np.radians(rx.fov_half_angle)),
    )
    rates = rng.uniform(0.1, 2.0, size=(5, 4))
    start = np.full_like(rates, 0.2)
    cand = np.ascontiguousarray(np.argsort(-rng.uniform(size=(10, 4)), axis=1)[:, :3]).astype(np.int64)
    logr = np.log(rng.uniform(0.1, 2.0, size=(10, 3)))
    return {
        "los_gains (K=200, M=L=24)": ("los_gains", gains_args),
        "best_response (5x4)": ("best_response", (rates, np.full(4, 1.25))),
        "proportional_response (5x4)": ("proportional_response", (rates, start, 20000, 1e-13)),
        "enumerate_assignments (3^10)": ("enumerate_assignments", (cand, logr, 4)),
    }


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    rng = np.random.default_rng(0)
    print(f"{'kernel':32s} {'numpy [ms]':>12s} {'numba [ms]':>12s} {'speedup':>8s}")
    for label, (name, a) in cases(rng).items():
        fn_np, fn_nb = getattr(_numpy, name), getattr(_numba, name)
        fn_nb(*a)  # compile
        t_np = min(timeit.repeat(lambda: fn_np(*a), number=1, repeat=args.repeat))
        t_nb = min(timeit.repeat(lambda: fn_nb(*a), number=1, repeat=args.repeat))
        print(f"{label:32s} {t_np * 1e3:12.3f} {t_nb * 1e3:12.3f} {t_np / t_nb:8.1f}x")


if __name__ == "__main__":
    main()
