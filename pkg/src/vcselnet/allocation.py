"""Proportional-fair association and resource sharing.

Two solvers share one objective, ``sum_k log(sum_l x[l,k] nu[l,k] r[l,k])``:

* :func:`decentralized_solve` splits it into a full-connectivity share
  problem driven by VCSEL prices ``mu`` and a partial-connectivity
  association market driven by prices ``eta`` (supply ``exp(eta - 1)``
  against integer demand);
* :func:`centralized_solve` enumerates partial-user associations exactly
  and is used as the reference.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .bia import LinkRates


class UserStarved(ValueError):
    """A user would get zero rate, so the log utility is undefined."""


class EnumerationTooLarge(ValueError):
    pass


@dataclass(frozen=True)
class SolverConfig:
    """Step sizes ``kappa(i) = kappa / sqrt(i)`` and stopping rules."""

    kappa_mu: float = 1.0
    kappa_eta: float = 0.5
    max_iter: int = 100
    tol: float = 1e-6
    utility_tol: float = 1e-9
    patience: int = 5
    candidates: int = 3
    max_enum: int = 2_000_000
    polish_iter: int = 20_000
    polish_tol: float = 1e-13


def utility(rates, shares, assignment) -> float:
    """Sum of log rates; all arrays indexed ``[k, l]``."""
    per_user = np.sum(np.asarray(assignment) * np.asarray(shares) * np.asarray(rates), axis=1)
    if np.any(per_user <= 0):
        raise UserStarved(f"user(s) {np.flatnonzero(per_user <= 0).tolist()} starved")
    return float(np.sum(np.log(per_user)))


# -- full-connectivity users --------------------------------------------------


@dataclass
class FullInnerResult:
    shares: np.ndarray
    prices: np.ndarray
    utility: float
    trace: list = field(default_factory=list)
    dual_trace: list = field(default_factory=list)
    residual_trace: list = field(default_factory=list)
    iterations: int = 0
    converged: bool = False


def _dual_value(rates, prices, nu):
    s = np.sum(nu * rates, axis=1)
    return float(np.sum(np.log(s)) - np.sum(nu * prices[None, :]) + np.sum(prices))


def _feasible(nu):
    load = nu.sum(axis=0)
    return nu / np.maximum(load, 1.0)[None, :]


def solve_full_inner(rates, kappa=1.0, max_iter=100, tol=1e-6, polish_iter=20_000, polish_tol=1e-13):
    """Share every VCSEL among the full-connectivity users.

    Dual phase: prices start at ``K/L`` (the value at which each user's
    unit budget clears the market), users answer with their exact best
    response (KKT of the Lagrangian), then prices take a projected
    subgradient step ``mu <- [mu - kappa_i (1 - sum_k nu)]+`` with
    ``kappa_i = kappa/sqrt(i)``. A step is only accepted if the dual value
    does not rise; otherwise it is halved. The trace records the utility of
    the load-scaled running average of the responses.

    Primal recovery: the averaged responses seed a proportional-response
    iteration, which converges to the exact maximiser; its final bid totals
    are the reported prices.

    Parameters
    ----------
    rates : ndarray, shape (K_f, L)
        ``r[k, l] > 0``.
    """
    r = np.ascontiguousarray(rates, dtype=float)
    K, L = r.shape
    res = FullInnerResult(shares=np.zeros((K, L)), prices=np.zeros(L), utility=0.0)
    if K == 0:
        res.converged = True
        return res
    if np.any(r <= 0):
        raise UserStarved("full-user rates must be positive")

    # at the optimum every user spends a unit budget, so prices sum to K
    mu = np.full(L, K / L)
    nu = _kernels.best_response(r, mu)
    g = _dual_value(r, mu, nu)
    avg = np.zeros_like(r)
    for i in range(1, max_iter + 1):
        avg += nu
        resid = 1.0 - nu.sum(axis=0)
        res.dual_trace.append(g)
        res.residual_trace.append(resid.copy())
        res.trace.append(utility(r, _feasible(avg / i), 1.0))
        res.iterations = i
        slack = np.where(mu > 0, np.abs(resid), np.maximum(-resid, 0.0))
        if slack.max() < tol:
            res.converged = True
            break
        step = kappa / math.sqrt(i)
        for _ in range(40):
            mu_new = np.maximum(mu - step * resid, 0.0)
            nu_new = _kernels.best_response(r, mu_new)
            g_new = _dual_value(r, mu_new, nu_new)
            if g_new <= g + 1e-12 * max(1.0, abs(g)):
                mu, nu, g = mu_new, nu_new, g_new
                break
            step *= 0.5

    if res.converged:
        shares = nu
    else:
        start = 0.5 * _feasible(avg / res.iterations) + 0.5 / K
        shares, _ = _kernels.proportional_response(r, start, polish_iter, polish_tol)
        resid = 1.0 - shares.sum(axis=0)
        res.converged = bool(np.max(np.abs(resid)) < tol)
        contrib = shares * r
        mu = (contrib / contrib.sum(axis=1, keepdims=True)).sum(axis=0)
    res.shares = shares
    res.prices = mu
    res.utility = utility(r, shares, 1.0)
    return res


# -- partial-connectivity users ----------------------------------------------


def assign_user_side(rates, eta):
    """Each partial user picks ``argmax_l log r[k, l] - eta[l]`` (lowest index on ties).

    Returns
    -------
    choice : ndarray of int, shape (K_p,)
    demand : ndarray of float, shape (L,)
    """
    rates = np.asarray(rates, dtype=float)
    L = rates.shape[1]
    with np.errstate(divide="ignore"):
        score = np.log(rates) - np.asarray(eta, dtype=float)[None, :]
    choice = np.argmax(score, axis=1)
    demand = np.bincount(choice, minlength=L).astype(float)
    return choice, demand


def supply_vcsel_side(eta):
    """Number of users each VCSEL offers to serve, ``exp(eta - 1)``."""
    return np.exp(np.asarray(eta, dtype=float) - 1.0)


def update_eta(eta, supply, demand, kappa):
    """Projected price step; rises where demand exceeds supply."""
    if kappa <= 0:
        raise ValueError("kappa must be positive")
    return np.maximum(np.asarray(eta) - kappa * (np.asarray(supply) - np.asarray(demand)), 0.0)


def partial_utility(rates, choice) -> float:
    """Utility of an association under equal time split on each VCSEL."""
    rates = np.asarray(rates, dtype=float)
    if len(choice) == 0:
        return 0.0
    r = rates[np.arange(len(choice)), choice]
    if np.any(r <= 0):
        raise UserStarved("partial user assigned to a VCSEL it cannot hear")
    n = np.bincount(choice, minlength=rates.shape[1]).astype(float)
    return float(np.sum(np.log(r)) - np.sum(n[n > 0] * np.log(n[n > 0])))


# -- results ------------------------------------------------------------------


@dataclass
class AllocationResult:
    """Joint association and shares for one snapshot.

    ``assignment`` and ``shares`` are (L, K) as in the problem statement;
    ``rates`` are per-user spectral efficiencies (0 for users in outage).
    """

    assignment: np.ndarray
    shares: np.ndarray
    rates: np.ndarray
    utilities: np.ndarray
    total_utility: float
    trace: list
    residuals: list
    converged: bool
    iterations: int
    full_prices: np.ndarray
    partial_prices: np.ndarray
    link: LinkRates = field(repr=False)
    raw_trace: list = field(default_factory=list)
    eta_trace: list = field(default_factory=list)

    def constraint_violation(self) -> float:
        """Largest violation over all constraint groups of the joint problem."""
        x, nu, link = self.assignment, self.shares, self.link
        viol = [0.0]
        if len(link.partial):
            xp, nup = x[:, link.partial], nu[:, link.partial]
            viol.append(np.abs(xp.sum(axis=0) - 1).max())
            viol.append(np.maximum((xp * nup).sum(axis=1) - 1, 0).max())
        if len(link.full):
            viol.append(np.abs(x[:, link.full] - 1).max())
            viol.append(np.maximum(nu[:, link.full].sum(axis=1) - 1, 0).max())
        viol.append(np.abs(x * (1 - x)).max(initial=0.0))
        viol.append(np.maximum(-nu, 0).max(initial=0.0))
        viol.append(np.maximum(nu - 1, 0).max(initial=0.0))
        return float(max(viol))

    def trace_rows(self):
        for i, (u, res) in enumerate(zip(self.trace, self.residuals), start=1):
            yield [i, u] + list(res)

    def to_csv(self, path) -> None:
        L = self.assignment.shape[0]
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["iteration", "utility"] + [f"residual_{l + 1}" for l in range(L)])
            for row in self.trace_rows():
                w.writerow([row[0]] + [repr(float(v)) for v in row[1:]])


def _assemble(link: LinkRates, full, choice, trace, residuals, converged, iterations, eta):
    K, L = link.num_users, link.num_vcsels
    x = np.zeros((L, K))
    nu = np.zeros((L, K))
    rates = np.zeros(K)
    utils = np.zeros(K)
    if len(link.full):
        x[:, link.full] = 1.0
        nu[:, link.full] = full.shares.T
        rf = np.sum(full.shares * link.full_rates, axis=1)
        rates[link.full] = rf
        utils[link.full] = np.log(rf)
    if len(link.partial):
        n = np.bincount(choice, minlength=L)
        kp = np.arange(len(choice))
        x[choice, link.partial] = 1.0
        nu[choice, link.partial] = 1.0 / n[choice]
        rp = link.partial_rates[kp, choice] / n[choice]
        rates[link.partial] = rp
        utils[link.partial] = np.log(rp)
    served = np.concatenate([link.full, link.partial]).astype(np.int64)
    return AllocationResult(
        assignment=x,
        shares=nu,
        rates=rates,
        utilities=utils,
        total_utility=float(utils[served].sum()),
        trace=trace,
        residuals=residuals,
        converged=converged,
        iterations=iterations,
        full_prices=full.prices,
        partial_prices=eta,
        link=link,
    )


def decentralized_solve(link: LinkRates, config: SolverConfig = SolverConfig()) -> AllocationResult:
    """Run both price-coordinated sub-problems and merge them.

    The partial-user market starts at ``eta = 1`` (one user offered per
    VCSEL). The returned association is the best one visited by the market,
    so ``trace[i]`` is the utility of the solution held after iteration
    ``i + 1`` (both sub-problems' incumbents summed; a finished sub-problem
    carries its last value). ``raw_trace`` has the per-iteration values
    before taking the incumbent; ``eta_trace`` the prices each iteration
    started from.
    """
    L = link.num_vcsels
    full = solve_full_inner(
        link.full_rates,
        config.kappa_mu,
        config.max_iter,
        config.tol,
        config.polish_iter,
        config.polish_tol,
    )
    rp = link.partial_rates
    Kp = len(link.partial)

    eta = np.ones(L)
    p_trace, p_resid, etas = [], [], []
    best_choice, best_u = np.zeros(Kp, dtype=np.int64), -np.inf
    converged = Kp == 0
    it = 0
    if Kp:
        for it in range(1, config.max_iter + 1):
            etas.append(eta.copy())
            choice, demand = assign_user_side(rp, eta)
            u = partial_utility(rp, choice)
            if u > best_u:
                best_u, best_choice = u, choice
            supply = supply_vcsel_side(eta)
            p_trace.append(u)
            p_resid.append(supply - demand)
            if np.max(np.abs(supply - demand)) < config.tol:
                converged = True
                break
            if len(p_trace) > config.patience:
                window = p_trace[-config.patience - 1 :]
                if max(window) - min(window) < config.utility_tol:
                    converged = True
                    break
            eta = update_eta(eta, supply, demand, config.kappa_eta / math.sqrt(it))

    f_trace = full.trace + [full.utility] if len(link.full) else []
    n = max(len(f_trace), len(p_trace), 1)
    f_best = np.maximum.accumulate(f_trace) if f_trace else []
    p_best = np.maximum.accumulate(p_trace) if p_trace else []
    trace, raw, residuals = [], [], []
    for i in range(n):
        fi, pi = min(i, len(f_trace) - 1), min(i, len(p_trace) - 1)
        raw.append((f_trace[fi] if f_trace else 0.0) + (p_trace[pi] if p_trace else 0.0))
        trace.append(float((f_best[fi] if f_trace else 0.0) + (p_best[pi] if p_trace else 0.0)))
        fr = np.abs(full.residual_trace[min(i, len(full.residual_trace) - 1)]) if full.residual_trace else np.zeros(L)
        pr = np.abs(p_resid[min(i, len(p_resid) - 1)]) if p_resid else np.zeros(L)
        residuals.append(np.maximum(fr, pr))
    res = _assemble(
        link,
        full,
        best_choice,
        trace,
        residuals,
        bool(converged and full.converged),
        max(it, full.iterations),
        eta,
    )
    res.raw_trace = raw
    res.eta_trace = etas
    return res


def partial_candidates(rates, C):
    """Top-``C`` VCSELs per partial user by rate (ties to lower index)."""
    order = np.argsort(-np.asarray(rates), axis=1, kind="stable")
    return np.ascontiguousarray(order[:, :C])


def centralized_solve(
    link: LinkRates, config: SolverConfig = SolverConfig(), prune: bool = True
) -> AllocationResult:
    """Exact optimum over candidate associations.

    With ``prune`` each partial user only considers its ``config.candidates``
    best VCSELs; ``prune=False`` enumerates all ``L**K_p`` associations.
    Full users share VCSELs via :func:`solve_full_inner` (their problem
    does not couple with the association).
    """
    L = link.num_vcsels
    full = solve_full_inner(
        link.full_rates,
        config.kappa_mu,
        config.max_iter,
        config.tol,
        config.polish_iter,
        config.polish_tol,
    )
    rp = link.partial_rates
    Kp = len(link.partial)
    choice = np.zeros(0, dtype=np.int64)
    u_p = 0.0
    if Kp:
        C = min(config.candidates, L) if prune else L
        if C**Kp > config.max_enum:
            raise EnumerationTooLarge(
                f"{C}**{Kp} = {C**Kp} assignments exceeds max_enum={config.max_enum}; "
                "reduce the candidate count or the number of partial users"
            )
        cand = partial_candidates(rp, C)
        with np.errstate(divide="ignore"):
            logr = np.ascontiguousarray(np.log(np.take_along_axis(rp, cand, axis=1)))
        pick, u_p = _kernels.enumerate_assignments(cand.astype(np.int64), logr, L)
        choice = cand[np.arange(Kp), pick]
    u_f = full.utility if len(link.full) else 0.0
    return _assemble(
        link, full, choice, [u_f + u_p], [np.zeros(L)], full.converged, 1, np.zeros(L)
    )
