"""Blind interference alignment: supersymbol schedules, decoding and rates.

The schedule for ``L`` transmitters and ``K`` users has
``(L-1)**K + K*(L-1)**(K-1)`` slots. Slots come in two kinds:

* shared slots, indexed by a tuple ``a`` in ``{0..L-2}**K``; every user is
  in mode ``a[k]`` and every user receives one symbol;
* private slots of user ``j``, indexed by ``a`` with entry ``j`` removed;
  only user ``j``'s symbol is sent, user ``j`` is in mode ``L-1`` and every
  other user ``i`` repeats mode ``a[i]``.

User ``k``'s alignment block ``b = a_{-k}`` is the ``L-1`` shared slots that
agree with ``b`` plus its private slot ``b``. Other users use that private
slot to cancel the interference it caused in their shared slots.
"""

from __future__ import annotations

import csv
import itertools
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .optics import NoiseModel, noise_variance
from .scenario import Connectivity

DEFAULT_SLOT_CAP = 1_000_000


class SupersymbolTooLarge(ValueError):
    pass


def supersymbol_length(L: int, K: int) -> int:
    return (L - 1) ** K + K * (L - 1) ** (K - 1)


@dataclass(frozen=True)
class Supersymbol:
    """BIA schedule.

    Attributes
    ----------
    modes : ndarray, shape (K, N)
        0-based preset mode of each user in each slot.
    active : ndarray, shape (K, N)
        Block index of the symbol sent to user ``k`` in slot ``n``, or -1.
    owner : ndarray, shape (N,)
        -1 for shared slots, else the user whose private slot it is.
    blocks : list of list of ndarray
        ``blocks[k][b]`` holds the L slot indices of user k's block b, the
        private slot last.
    """

    L: int
    K: int
    modes: np.ndarray = field(repr=False)
    active: np.ndarray = field(repr=False)
    owner: np.ndarray = field(repr=False)
    blocks: list = field(repr=False)

    @property
    def length(self) -> int:
        return self.modes.shape[1]

    @property
    def blocks_per_user(self) -> int:
        return len(self.blocks[0])

    def dof_fraction(self) -> Fraction:
        """Degrees of freedom per slot delivered to each user."""
        return Fraction(self.blocks_per_user * self.L, self.length)

    def sum_dof(self) -> Fraction:
        return self.K * self.dof_fraction()

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["slot", "owner"] + [f"mode_user_{k + 1}" for k in range(self.K)])
            for n in range(self.length):
                own = "all" if self.owner[n] < 0 else str(self.owner[n] + 1)
                w.writerow([n + 1, own] + [int(m) + 1 for m in self.modes[:, n]])


def _block_id(tup, base):
    idx = 0
    for t in tup:
        idx = idx * base + t
    return idx


def build_supersymbol(L: int, K: int, slot_cap: int = DEFAULT_SLOT_CAP) -> Supersymbol:
    if L < 2 or K < 1:
        raise ValueError("need L >= 2 and K >= 1")
    N = supersymbol_length(L, K)
    if N > slot_cap:
        raise SupersymbolTooLarge(
            f"supersymbol too large: {N} slots for L={L}, K={K} (cap {slot_cap})"
        )
    base = L - 1
    modes = np.zeros((K, N), dtype=np.int64)
    active = np.full((K, N), -1, dtype=np.int64)
    owner = np.full(N, -1, dtype=np.int64)
    nblocks = base ** (K - 1)
    shared_of = [[[] for _ in range(nblocks)] for _ in range(K)]
    private_of = [[None] * nblocks for _ in range(K)]

    n = 0
    for a in itertools.product(range(base), repeat=K):
        for k in range(K):
            modes[k, n] = a[k]
            b = _block_id(a[:k] + a[k + 1 :], base)
            active[k, n] = b
            shared_of[k][b].append(n)
        n += 1
    for j in range(K):
        for rest in itertools.product(range(base), repeat=K - 1):
            b = _block_id(rest, base)
            a = rest[:j] + (L - 1,) + rest[j:]
            modes[:, n] = a
            active[j, n] = b
            owner[n] = j
            private_of[j][b] = n
            n += 1
    blocks = [
        [np.array(shared_of[k][b] + [private_of[k][b]], dtype=np.int64) for b in range(nblocks)]
        for k in range(K)
    ]
    return Supersymbol(L=L, K=K, modes=modes, active=active, owner=owner, blocks=blocks)


@dataclass(frozen=True)
class DecodabilityReport:
    ok: bool
    user: int | None = None
    block: int | None = None
    reason: str = ""

    def __bool__(self) -> bool:
        return self.ok


def _cancellation_slots(ss: Supersymbol, k: int, n: int):
    """Private slots user ``k`` subtracts from shared slot ``n``; None if impossible."""
    out = []
    for j in range(ss.K):
        if j == k or ss.active[j, n] < 0:
            continue
        cands = np.flatnonzero(
            (ss.owner == j) & (ss.active[j] == ss.active[j, n]) & (ss.modes[k] == ss.modes[k, n])
        )
        cands = [c for c in cands if np.count_nonzero(ss.active[:, c] >= 0) == 1]
        if not cands:
            return None
        out.append(int(cands[0]))
    return out


def _block_pipeline(ss: Supersymbol, k: int, b: int):
    """(slots, subtractions) for user k's block b, or a failure reason string."""
    slots = ss.blocks[k][b]
    subs = []
    for n in slots:
        c = _cancellation_slots(ss, k, n)
        if c is None:
            return f"no clean slot to cancel interference in slot {n}"
        subs.append(c)
    return slots, subs


def verify_decodability(ss: Supersymbol, H, rcond: float = 1e-10) -> DecodabilityReport:
    """Check every user can null interference and resolve every block it owns.

    ``H[k]`` is user k's (M, L) matrix of per-mode channel rows.
    """
    for k in range(ss.K):
        Hk = np.asarray(H[k], dtype=float)
        for b in range(ss.blocks_per_user):
            res = _block_pipeline(ss, k, b)
            if isinstance(res, str):
                return DecodabilityReport(False, k, b, res)
            slots, _ = res
            G = Hk[ss.modes[k, slots]]
            s = np.linalg.svd(G, compute_uv=False)
            if s[-1] <= rcond * s[0]:
                return DecodabilityReport(False, k, b, f"effective channel rank < {ss.L}")
    return DecodabilityReport(True)


def transmit(ss: Supersymbol, H, symbols, noise=None):
    """Received samples ``y[k, n]`` over one supersymbol.

    ``symbols[k, b]`` is the length-L symbol of user k's block b. ``noise``
    is an optional (K, N) additive array.
    """
    symbols = np.asarray(symbols, dtype=float)
    x = np.zeros((ss.length, ss.L))
    for k in range(ss.K):
        on = ss.active[k] >= 0
        x[on] += symbols[k, ss.active[k, on]]
    y = np.empty((ss.K, ss.length))
    for k in range(ss.K):
        Hk = np.asarray(H[k], dtype=float)
        y[k] = np.einsum("nl,nl->n", Hk[ss.modes[k]], x)
    if noise is not None:
        y = y + noise
    return y


def decode(ss: Supersymbol, H, y):
    """Interference subtraction followed by a per-block linear solve.

    Returns ``(K, blocks_per_user, L)`` symbol estimates.
    """
    out = np.empty((ss.K, ss.blocks_per_user, ss.L))
    for k in range(ss.K):
        Hk = np.asarray(H[k], dtype=float)
        for b in range(ss.blocks_per_user):
            res = _block_pipeline(ss, k, b)
            if isinstance(res, str):
                raise ValueError(res)
            slots, subs = res
            rhs = np.array([y[k, n] - sum(y[k, c] for c in cs) for n, cs in zip(slots, subs)])
            out[k, b] = np.linalg.solve(Hk[ss.modes[k, slots]], rhs)
    return out


def block_noise_multiplicity(ss: Supersymbol, k: int = 0, b: int = 0) -> np.ndarray:
    """Number of unit-variance noise terms on each row after subtraction."""
    slots, subs = _block_pipeline(ss, k, b)
    return np.array([1 + len(c) for c in subs], dtype=float)


def resource_fraction(cls, nu, L: int, K_f: int = 0, K_pl: int = 0) -> float:
    """Effective share of a user.

    Full users: ``sum_l nu_l / (L + K_f - 1)``; partial users on VCSEL l:
    ``nu / K_pl``.
    """
    cls = Connectivity(cls)
    if cls is Connectivity.FULL:
        if K_f < 1:
            raise ValueError("K_f must be >= 1 for a full user")
        return float(np.sum(nu)) / (L + K_f - 1)
    if K_pl <= 0:
        raise ValueError("serving VCSEL has no partial users (K_pl = 0)")
    return float(np.asarray(nu).item()) / K_pl


def noise_covariance(dim: int, count: int) -> np.ndarray:
    """``diag(count * I_{dim-1}, 1)``: subtraction-amplified noise covariance.

    For full users ``dim = L`` and ``count = K_f``; for partial users ``dim``
    is the served signal dimension and ``count = K_pl``.
    """
    if dim < 1 or count < 1:
        raise ValueError("dim and count must be >= 1")
    d = np.full(dim, float(count))
    d[-1] = 1.0
    return np.diag(d)


def _snr_matrix(H, noise_var, responsivity, powers, cov):
    HD = np.asarray(H, dtype=float) * np.asarray(powers, dtype=float)[None, :]
    return responsivity**2 / noise_var * HD.T @ np.linalg.solve(cov, HD)


def full_user_capacity(H, noise_var, responsivity, powers, K_f):
    """``log2 det(I + SNR)`` for a full user whose L used modes form ``H`` (L x L)."""
    H = np.asarray(H, dtype=float)
    L = H.shape[1]
    if H.shape[0] != L:
        raise ValueError("full user needs exactly L mode rows")
    s = np.linalg.svd(H, compute_uv=False)
    if s[0] == 0 or s[-1] <= 1e-12 * s[0]:
        raise np.linalg.LinAlgError("singular channel for a full user")
    G = _snr_matrix(H, noise_var, responsivity, powers, noise_covariance(L, K_f))
    sign, logdet = np.linalg.slogdet(np.eye(L) + G)
    return logdet / np.log(2)


def stream_sinr(H, noise_var, responsivity, powers, K_f):
    """Per-VCSEL stream SNR after a zero-forcing receiver on the block."""
    L = np.asarray(H).shape[1]
    G = _snr_matrix(H, noise_var, responsivity, powers, noise_covariance(L, K_f))
    return 1.0 / np.diag(np.linalg.inv(G))


def full_user_rate(H, nu_eff, noise_var, responsivity, powers, K_f):
    """Spectral efficiency ``nu_eff * log2 det(I + SNR)`` of a full user."""
    if nu_eff == 0:
        return 0.0
    return nu_eff * full_user_capacity(H, noise_var, responsivity, powers, K_f)


def partial_snr(gains, serving: int, noise: NoiseModel, powers) -> float:
    """Serving-link SNR with other VCSELs' signals and RIN treated as noise."""
    gains = np.asarray(gains, dtype=float)
    powers = np.asarray(powers, dtype=float)
    amp = noise.responsivity * gains * powers
    var = noise_variance(gains, serving, noise, powers)
    interference = np.sum(amp**2) - amp[serving] ** 2
    return float(amp[serving] ** 2 / (var + interference))


def partial_user_rate(gains, serving: int, nu_eff, noise: NoiseModel, powers) -> float:
    return nu_eff * float(np.log2(1.0 + partial_snr(gains, serving, noise, powers)))


@dataclass(frozen=True)
class LinkRates:
    """Per-(user, VCSEL) spectral efficiencies feeding the allocation step.

    ``full_rates[i, l]`` is the rate full user ``full[i]`` draws per unit
    share of VCSEL ``l``; it splits the user's block capacity across the L
    streams in proportion to their zero-forcing stream rates, so that equal
    shares on every VCSEL recover ``nu_eff * log2 det(I + SNR)`` exactly.
    ``partial_rates[i, l]`` is the single-link rate of partial user
    ``partial[i]`` if served alone by ``l``. Both already carry the
    orthogonal time split between the two classes (``beta`` for full,
    ``1 - beta`` for partial). Users with no usable link are in ``outage``.
    """

    num_users: int
    num_vcsels: int
    full: np.ndarray
    partial: np.ndarray
    outage: np.ndarray
    full_rates: np.ndarray
    partial_rates: np.ndarray
    full_capacity: np.ndarray
    beta: float


def _select_modes(Hk, L):
    if Hk.shape[0] == L:
        return Hk
    keep = np.sort(np.argsort(-Hk.sum(axis=1), kind="stable")[:L])
    return Hk[keep]


def link_rates(H, noise: NoiseModel, powers, full_idx, partial_idx, beta=None, min_rate=1e-4):
    """Build :class:`LinkRates` for one snapshot.

    Parameters
    ----------
    H : ndarray, shape (K, M, L)
    full_idx, partial_idx : array_like of int
        Connectivity classes (0-based user indices).
    beta : float, optional
        Fraction of time given to the full set; defaults to its user share.
    min_rate : float
        Users whose best spectral efficiency is below this are put in outage.
    """
    H = np.asarray(H, dtype=float)
    powers = np.asarray(powers, dtype=float)
    K, M, L = H.shape
    full_idx = np.asarray(full_idx, dtype=np.int64)
    partial_idx = np.asarray(partial_idx, dtype=np.int64)
    resp = noise.responsivity

    K_f = len(full_idx)
    cap = np.zeros(K_f)
    share = np.zeros((K_f, L))
    for i, k in enumerate(full_idx):
        Hk = _select_modes(H[k], L)
        var = noise_variance(Hk.mean(axis=0), np.arange(L), noise, powers)
        try:
            cap[i] = full_user_capacity(Hk, var, resp, powers, K_f)
            s = np.log2(1.0 + np.maximum(stream_sinr(Hk, var, resp, powers, K_f), 0.0))
        except np.linalg.LinAlgError:
            continue
        share[i] = L * s / s.sum() if s.sum() > 0 else 1.0

    pr = np.zeros((len(partial_idx), L))
    for i, k in enumerate(partial_idx):
        best_m = H[k].argmax(axis=0)
        for l in range(L):
            g = H[k, best_m[l]]
            if g[l] > 0:
                pr[i, l] = np.log2(1.0 + partial_snr(g, l, noise, powers))

    full_ok = cap >= min_rate
    part_ok = pr.max(axis=1, initial=0.0) >= min_rate
    outage = np.sort(np.concatenate([full_idx[~full_ok], partial_idx[~part_ok]]))
    full_idx, cap, share = full_idx[full_ok], cap[full_ok], share[full_ok]
    partial_idx, pr = partial_idx[part_ok], pr[part_ok]
    K_f, K_p = len(full_idx), len(partial_idx)
    if beta is None:
        beta = K_f / (K_f + K_p) if K_f + K_p else 0.0
    full_rates = beta * cap[:, None] * share / (L + K_f - 1) if K_f else np.zeros((0, L))
    return LinkRates(
        num_users=K,
        num_vcsels=L,
        full=full_idx,
        partial=partial_idx,
        outage=outage,
        full_rates=full_rates,
        partial_rates=(1.0 - beta) * pr,
        full_capacity=cap,
        beta=float(beta),
    )
