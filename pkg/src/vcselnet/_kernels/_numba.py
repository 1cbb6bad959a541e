"""Numba-jitted kernels; signatures and results match ``_numpy``."""

import math

import numpy as np
from numba import njit


@njit(cache=True)
def los_gains(user_pos, face_offsets, normals, vcsel_pos, waist, rayleigh, area, cos_fov):
    K = user_pos.shape[0]
    M = face_offsets.shape[0]
    L = vcsel_pos.shape[0]
    out = np.zeros((K, M, L))
    for k in range(K):
        for m in range(M):
            px = user_pos[k, 0] + face_offsets[m, 0]
            py = user_pos[k, 1] + face_offsets[m, 1]
            pz = user_pos[k, 2] + face_offsets[m, 2]
            for l in range(L):
                dx = vcsel_pos[l, 0] - px
                dy = vcsel_pos[l, 1] - py
                d = vcsel_pos[l, 2] - pz
                if d <= 0.0:
                    continue
                dist = math.sqrt(dx * dx + dy * dy + d * d)
                cos_psi = (dx * normals[m, 0] + dy * normals[m, 1] + d * normals[m, 2]) / dist
                if cos_psi < cos_fov or cos_psi <= 0.0:
                    continue
                q = d / rayleigh[l]
                w2 = waist[l] * waist[l] * (1.0 + q * q)
                g = 2.0 / (math.pi * w2) * math.exp(-2.0 * (dx * dx + dy * dy) / w2) * area * cos_psi
                out[k, m, l] = min(g, 1.0)
    return out


@njit(cache=True)
def best_response(rates, prices):
    K, L = rates.shape
    nu = np.zeros((K, L))
    ratio = np.empty(L)
    for k in range(K):
        for l in range(L):
            if rates[k, l] <= 0.0:
                ratio[l] = 0.0
            elif prices[l] > 0.0:
                ratio[l] = rates[k, l] / prices[l]
            else:
                ratio[l] = np.inf
        order = np.argsort(-ratio, kind="mergesort")
        acc = 0.0
        for idx in range(L):
            l = order[idx]
            r = rates[k, l]
            if r <= 0.0:
                break
            q = ratio[l]
            if acc + r <= q:
                nu[k, l] = 1.0
                acc += r
            else:
                if acc < q:
                    nu[k, l] = min(max((q - acc) / r, 0.0), 1.0)
                break
    return nu


@njit(cache=True)
def proportional_response(rates, nu, max_iter, tol):
    K, L = rates.shape
    nu = nu.copy()
    bids = np.empty((K, L))
    price = np.empty(L)
    prev = -np.inf
    it = 0
    for it in range(1, max_iter + 1):
        price[:] = 0.0
        for k in range(K):
            s = 0.0
            for l in range(L):
                s += nu[k, l] * rates[k, l]
            for l in range(L):
                b = nu[k, l] * rates[k, l] / s
                bids[k, l] = b
                price[l] += b
        u = 0.0
        for k in range(K):
            s = 0.0
            for l in range(L):
                v = bids[k, l] / price[l] if price[l] > 0.0 else 0.0
                nu[k, l] = v
                s += v * rates[k, l]
            u += math.log(s)
        if abs(u - prev) <= tol * max(1.0, abs(u)):
            break
        prev = u
    return nu, it


@njit(cache=True)
def enumerate_assignments(cand, logr, L):
    Kp, C = cand.shape
    digits = np.zeros(Kp, dtype=np.int64)
    counts = np.zeros(L)
    best_u = -np.inf
    best = np.zeros(Kp, dtype=np.int64)
    while True:
        counts[:] = 0.0
        lr = 0.0
        for k in range(Kp):
            counts[cand[k, digits[k]]] += 1.0
            lr += logr[k, digits[k]]
        pen = 0.0
        for l in range(L):
            if counts[l] > 0.0:
                pen += counts[l] * math.log(counts[l])
        u = lr - pen
        if u > best_u:
            best_u = u
            best[:] = digits
        # mixed-radix increment, least significant digit first
        k = 0
        while k < Kp:
            digits[k] += 1
            if digits[k] < C:
                break
            digits[k] = 0
            k += 1
        if k == Kp:
            break
    return best, best_u
