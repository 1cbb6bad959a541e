"""Reference schemes: zero-forcing transmit precoding and plain TDMA."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .optics import NoiseModel, link_snr, noise_variance


@dataclass(frozen=True)
class ZfPrecoder:
    """ZF precoder for one group of simultaneously served users.

    ``W`` is (L, n) with ``H_served @ W = I``. Intensity modulation needs a
    non-negative drive, so every laser is biased at ``P_t`` and the symbol
    swing is scaled by ``headroom`` so that no laser goes below zero or above
    twice its bias: ``headroom = 1 / max_l sum_k |W[l, k]|``.
    """

    W: np.ndarray
    served: np.ndarray
    dropped: np.ndarray
    headroom: float
    snr: np.ndarray
    feasible: bool


def best_modes(H: np.ndarray) -> np.ndarray:
    """Photodiode with the largest total gain for each user, shape (K,)."""
    return np.asarray(H).sum(axis=2).argmax(axis=1)


def independent_subset(rows: np.ndarray, rcond: float = 1e-10) -> np.ndarray:
    """Greedy maximal set of linearly independent rows, strongest first."""
    rows = np.asarray(rows, dtype=float)
    norms = np.linalg.norm(rows, axis=1)
    if norms.max(initial=0.0) == 0:
        return np.zeros(0, dtype=np.int64)
    keep = []
    for i in np.argsort(-norms, kind="stable"):
        if norms[i] <= rcond * norms.max():
            break
        trial = rows[keep + [i]]
        s = np.linalg.svd(trial, compute_uv=False)
        if s[-1] > rcond * s[0]:
            keep.append(int(i))
    return np.sort(np.array(keep, dtype=np.int64))


def zf_precoder(G: np.ndarray, noise_var: np.ndarray, responsivity: float, power: float) -> ZfPrecoder:
    """Build the precoder for stacked channel rows ``G`` (n, L).

    Rows that would make the stack rank-deficient are dropped; they get
    zero SNR.
    """
    G = np.atleast_2d(np.asarray(G, dtype=float))
    n, L = G.shape
    if n > L:
        raise ValueError(f"cannot zero-force {n} users with {L} transmitters")
    served = independent_subset(G)
    dropped = np.setdiff1d(np.arange(n), served)
    snr = np.zeros(n)
    if len(served) == 0:
        return ZfPrecoder(np.zeros((L, 0)), served, dropped, 0.0, snr, False)
    W = np.linalg.pinv(G[served])
    headroom = 1.0 / np.abs(W).sum(axis=1).max()
    amp = responsivity * power * headroom
    snr[served] = amp**2 / np.asarray(noise_var, dtype=float)[served]
    return ZfPrecoder(W, served, dropped, float(headroom), snr, len(dropped) == 0)


def zf_rate(H, noise: NoiseModel, powers, users=None, min_rate: float = 1e-4) -> np.ndarray:
    """Per-user spectral efficiency under ZF with round-robin scheduling.

    Users (default: everyone with a usable link) are served in groups of at
    most L, in index order, each group getting an equal share of time. Each
    user contributes the channel row of its strongest photodiode; the
    transmitter is granted perfect CSI.

    Returns
    -------
    ndarray, shape (K,)
        Zero for users not scheduled or dropped for rank.
    """
    H = np.asarray(H, dtype=float)
    powers = np.asarray(powers, dtype=float)
    K, M, L = H.shape
    if users is None:
        single = np.log2(1.0 + link_snr(H, noise, powers)).max(axis=1, initial=0.0)
        users = np.flatnonzero(single >= min_rate)
    users = np.asarray(users, dtype=np.int64)
    out = np.zeros(K)
    if len(users) == 0:
        return out
    if np.ptp(powers) > 0:
        raise ValueError("ZF baseline assumes equal laser powers")
    rows = H[users, best_modes(H)[users]]
    var = np.array([noise_variance(g, np.arange(L), noise, powers) for g in rows])
    groups = [np.arange(i, min(i + L, len(users))) for i in range(0, len(users), L)]
    for grp in groups:
        pre = zf_precoder(rows[grp], var[grp], noise.responsivity, float(powers[0]))
        out[users[grp]] = np.log2(1.0 + pre.snr) / len(groups)
    return out


def tdma_rate(H, noise: NoiseModel, powers) -> np.ndarray:
    """Each of the K users gets 1/K of the time on its best VCSEL, others silent."""
    H = np.asarray(H, dtype=float)
    K = H.shape[0]
    if K < 1:
        raise ValueError("need at least one user")
    single = np.log2(1.0 + link_snr(H, noise, powers)).max(axis=1)
    return single / K
