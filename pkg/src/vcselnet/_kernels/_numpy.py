"""Pure-numpy reference kernels. Every function here has a jitted twin in ``_numba``."""

import numpy as np


def los_gains(user_pos, face_offsets, normals, vcsel_pos, waist, rayleigh, area, cos_fov):
    """LoS power gains, shape (K, M, L); see ``optics.channel_matrices``."""
    p = user_pos[:, None, None, :] + face_offsets[None, :, None, :]
    s = vcsel_pos[None, None, :, :]
    d = s[..., 2] - p[..., 2]
    r2 = (p[..., 0] - s[..., 0]) ** 2 + (p[..., 1] - s[..., 1]) ** 2
    w2 = waist**2 * (1.0 + (d / rayleigh) ** 2)
    intensity = 2.0 / (np.pi * w2) * np.exp(-2.0 * r2 / w2)
    to_src = s - p
    dist = np.sqrt(np.sum(to_src**2, axis=-1))
    cos_psi = np.sum(to_src * normals[None, :, None, :], axis=-1) / dist
    visible = (d > 0) & (cos_psi >= cos_fov) & (cos_psi > 0)
    gain = np.where(visible, intensity * area * cos_psi, 0.0)
    return np.minimum(gain, 1.0)


def best_response(rates, prices):
    """Per-user maximiser of ``log(nu @ r) - prices @ nu`` over the unit box.

    Goods are bought in decreasing rate/price order until the marginal
    utility ``r_l / S`` falls to the price; at most one good is fractional.
    """
    rates = np.asarray(rates, dtype=float)
    K, L = rates.shape
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(prices[None, :] > 0, rates / prices[None, :], np.inf)
    ratio = np.where(rates > 0, ratio, 0.0)
    order = np.argsort(-ratio, axis=1, kind="stable")
    rs = np.take_along_axis(rates, order, axis=1)
    qs = np.take_along_axis(ratio, order, axis=1)
    incl = np.cumsum(rs, axis=1)
    excl = incl - rs
    full = (incl <= qs) & (rs > 0)
    # prefix property: first failure index per row
    first_fail = np.where(full.all(axis=1), L, np.argmin(full, axis=1))
    nu_sorted = np.where(full, 1.0, 0.0)
    prefix = np.arange(L)[None, :] < first_fail[:, None]
    nu_sorted = np.where(prefix, nu_sorted, 0.0)
    rows = np.flatnonzero(first_fail < L)
    j = first_fail[rows]
    a = excl[rows, j]
    q = qs[rows, j]
    r = rs[rows, j]
    frac = np.where((a < q) & (r > 0), (q - a) / np.where(r > 0, r, 1.0), 0.0)
    nu_sorted[rows, j] = np.clip(frac, 0.0, 1.0)
    nu = np.empty_like(nu_sorted)
    np.put_along_axis(nu, order, nu_sorted, axis=1)
    return nu


def proportional_response(rates, nu, max_iter, tol):
    """Fixed-point iteration on the stationarity conditions of the share problem.

    Each user splits a unit budget across VCSELs in proportion to the rate
    it currently draws from each; VCSELs price themselves at the total bid
    and hand out shares bid/price. Returns ``(nu, iterations)``.
    """
    nu = np.array(nu, dtype=float)
    prev = -np.inf
    it = 0
    for it in range(1, max_iter + 1):
        contrib = nu * rates
        s = contrib.sum(axis=1, keepdims=True)
        bids = contrib / s
        price = bids.sum(axis=0, keepdims=True)
        nu = np.where(price > 0, bids / np.where(price > 0, price, 1.0), 0.0)
        u = np.sum(np.log((nu * rates).sum(axis=1)))
        if abs(u - prev) <= tol * max(1.0, abs(u)):
            break
        prev = u
    return nu, it


def enumerate_assignments(cand, logr, L, chunk=1 << 15):
    """Exhaustive search over candidate VCSELs for each partial user.

    Utility of an assignment with equal time split is
    ``sum(logr) - sum_l n_l log n_l``. Returns ``(best_choice, best_utility)``
    where ``best_choice[k]`` indexes into ``cand[k]``; ties keep the lowest code.
    """
    Kp, C = cand.shape
    total = C**Kp
    weights = C ** np.arange(Kp)
    best_u = -np.inf
    best_code = 0
    rows = np.arange(Kp)
    for start in range(0, total, chunk):
        codes = np.arange(start, min(start + chunk, total), dtype=np.int64)
        digits = (codes[:, None] // weights[None, :]) % C
        vc = cand[rows[None, :], digits]
        lr = logr[rows[None, :], digits].sum(axis=1)
        counts = np.zeros((len(codes), L))
        np.add.at(counts, (np.repeat(np.arange(len(codes)), Kp), vc.ravel()), 1.0)
        with np.errstate(divide="ignore", invalid="ignore"):
            pen = np.where(counts > 0, counts * np.log(counts), 0.0).sum(axis=1)
        u = lr - pen
        i = int(np.argmax(u))
        if u[i] > best_u:
            best_u = float(u[i])
            best_code = int(codes[i])
    choice = (best_code // weights) % C
    return choice.astype(np.int64), best_u
