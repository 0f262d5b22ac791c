"""Unbiased estimation from L-lagged coupled chains.

Two copies of a finite-state chain run from the same initial law; the fresh
copy advances L steps alone, then both advance jointly under a maximal
coupling of their transition rows until they meet, after which the lagged
copy simply mirrors. The telescoping bias correction built from the pair is
an exactly unbiased estimator of a stationary expectation at any truncation
point k, the expected correction count upper-bounds the total variation
distance of the k-step marginal from stationarity, and the per-lag increments
double as control variates with 0/1 coefficients chosen from the meeting-time
tail.
"""
from __future__ import annotations

from dataclasses import dataclass
from math import fsum
from typing import Callable, Sequence

import numpy as np

from .cftp import NoCoalescenceError
from .chain import FiniteChainSpec, RecursionModel, as_distribution
from .noise import stream_at, subkey

_PILOT_DOMAIN = "cv-pilot"


def maximal_coupling_rows(p: np.ndarray, q: np.ndarray, atom: Sequence[float]):
    """Draw (i, j) with i ~ p, j ~ q, meeting with the largest possible
    probability 1 - TV(p, q). Consumes exactly three uniforms with fixed
    roles: branch, overlap index, residual-j index (the residual-i draw
    reuses the second slot; the residual supports are disjoint so i != j
    on that branch)."""
    u_branch, u_first, u_second = atom
    m = np.minimum(p, q)
    overlap = float(m.sum())
    if u_branch < overlap:
        cum = np.cumsum(m)
        i = int(min(np.searchsorted(cum, u_first * overlap, side="right"), len(m) - 1))
        return i, i
    rp = p - m
    rq = q - m
    cp = np.cumsum(rp)
    cq = np.cumsum(rq)
    i = int(min(np.searchsorted(cp, u_first * cp[-1], side="right"), len(m) - 1))
    j = int(min(np.searchsorted(cq, u_second * cq[-1], side="right"), len(m) - 1))
    return i, j


@dataclass(frozen=True)
class CoupledPair:
    """A realized lagged pair: x[t] and y[t] are state labels, tau is the
    first time t >= lag with x[t] == y[t - lag]; y mirrors x thereafter."""

    x: tuple
    y: tuple
    tau: int
    lag: int

    def meeting_corrections(self, k: int) -> int:
        """J: number of correction terms the estimator at truncation k needs."""
        return max(0, -(-(self.tau - self.lag - k) // self.lag))


def run_lagged_pair(model: RecursionModel, lag: int, seed: int, replicate: int = 0,
                    init=None, horizon: int = 0, cap: int = 1_000_000) -> CoupledPair:
    """Simulate one lagged pair to meeting (and to `horizon` x-steps if that
    is further). init is a label or distribution; uniform by default.

    All draws come off one sequential stream keyed by (seed, replicate), so a
    pair is exactly reproducible and replicates never overlap.
    """
    if model.chain_spec is None:
        raise ValueError("lagged pairs need the model's transition matrix")
    if lag < 1:
        raise ValueError("lag must be >= 1")
    spec = model.chain_spec
    matrix = spec.matrix
    stream = stream_at(seed, 0, replicate, purpose="lagged-pair")

    if init is None:
        init = np.full(spec.n, 1.0 / spec.n)
    init = as_distribution(spec, init)
    cum_init = np.cumsum(init)

    def draw_from(cum, u):
        return int(min(np.searchsorted(cum, u, side="right"), len(cum) - 1))

    x = [draw_from(cum_init, stream.random())]
    y = [draw_from(cum_init, stream.random())]
    cum_rows = np.cumsum(matrix, axis=1)
    for _ in range(lag):
        x.append(draw_from(cum_rows[x[-1]], stream.random()))

    tau = None
    if x[lag] == y[0]:
        tau = lag
    t = lag
    while tau is None:
        i, j = maximal_coupling_rows(matrix[x[-1]], matrix[y[-1]], stream.random(3))
        x.append(i)
        y.append(j)
        t += 1
        if x[t] == y[t - lag]:
            tau = t
        if t > cap:
            raise NoCoalescenceError(f"no meeting within {cap} steps")

    while len(x) - 1 < max(horizon, tau):
        x.append(draw_from(cum_rows[x[-1]], stream.random()))
    # lagged copy mirrors the fresh one from the meeting onward
    while len(y) - 1 < len(x) - 1 - lag:
        y.append(x[len(y) + lag])

    labels = spec.labels
    return CoupledPair(
        x=tuple(labels[i] for i in x),
        y=tuple(labels[j] for j in y),
        tau=tau,
        lag=lag,
    )


@dataclass(frozen=True)
class UnbiasedEstimate:
    value: float
    corrections: int        # J actually summed
    tau: int
    k: int
    lag: int


def h_estimate(pair: CoupledPair, h: Callable[[object], float], k: int) -> UnbiasedEstimate:
    """The unbiased estimator at truncation k.

    Computed in both algebraic arrangements - anchored at h(X_k) with lagged
    differences, and anchored at h(X_{k+JL}) with same-time differences - via
    exact summation; the two must agree bit for bit, being the same multiset
    of addends.
    """
    lag, tau = pair.lag, pair.tau
    j_count = pair.meeting_corrections(k)
    top = k + j_count * lag
    if top > len(pair.x) - 1:
        raise ValueError("pair horizon too short for this k; rerun with horizon")
    form_a = fsum(
        [h(pair.x[k])]
        + [h(pair.x[k + j * lag]) for j in range(1, j_count + 1)]
        + [-h(pair.y[k + (j - 1) * lag]) for j in range(1, j_count + 1)]
    )
    form_b = fsum(
        [h(pair.x[top])]
        + [h(pair.x[k + j * lag]) for j in range(j_count)]
        + [-h(pair.y[k + j * lag]) for j in range(j_count)]
    )
    if form_a != form_b:
        raise RuntimeError("estimator arrangements disagree; summation is broken")
    if j_count > 0 and not k + j_count * lag < tau:
        raise RuntimeError("correction count inconsistent with the meeting time")
    return UnbiasedEstimate(value=form_a, corrections=j_count, tau=tau, k=k, lag=lag)


@dataclass(frozen=True)
class TvBoundEstimate:
    """Monte Carlo mean of the correction count J, which upper-bounds the
    total variation distance between the k-step marginal and stationarity."""

    bound: float
    standard_error: float
    n_pairs: int


def tv_bound(model: RecursionModel, lag: int, k: int, n_pairs: int, seed: int,
             init=None) -> TvBoundEstimate:
    js = np.empty(n_pairs)
    for r in range(n_pairs):
        pair = run_lagged_pair(model, lag, seed, replicate=r, init=init)
        js[r] = pair.meeting_corrections(k)
    return TvBoundEstimate(
        bound=float(js.mean()),
        standard_error=float(js.std(ddof=1) / np.sqrt(n_pairs)),
        n_pairs=n_pairs,
    )


@dataclass(frozen=True)
class ControlVariatePlan:
    """0/1 coefficients eta_j for the same-time differences at j = 0..len-1,
    chosen from pilot meeting times: eta_j = 1 exactly when
    S_j = Pr(J > j) + 0.5 Pr(J = j) exceeds one half."""

    k: int
    lag: int
    eta: tuple[int, ...]
    s: tuple[float, ...]
    n_pilot: int

    @property
    def j_max(self) -> int:
        return len(self.eta)


def estimate_cv_plan(model: RecursionModel, lag: int, k: int, n_pilot: int,
                     seed: int, init=None) -> ControlVariatePlan:
    """Pilot the meeting-time tail on a reserved stream (a subkey of the
    master seed, so production replicates never see pilot noise)."""
    pilot_seed = subkey(seed, _PILOT_DOMAIN)
    js = np.empty(n_pilot, dtype=int)
    for r in range(n_pilot):
        pair = run_lagged_pair(model, lag, pilot_seed, replicate=r, init=init)
        js[r] = pair.meeting_corrections(k)
    j_hi = int(js.max())
    s_vals, eta = [], []
    for j in range(j_hi + 1):
        s_j = float(np.mean(js > j) + 0.5 * np.mean(js == j))
        s_vals.append(s_j)
        eta.append(int(s_j > 0.5))
    while eta and eta[-1] == 0:
        eta.pop()
        s_vals.pop()
    return ControlVariatePlan(k=k, lag=lag, eta=tuple(eta), s=tuple(s_vals),
                              n_pilot=n_pilot)


@dataclass(frozen=True)
class CvEstimate:
    value: float
    base: float             # plain unbiased estimate
    correction: float       # mean-zero sum subtracted from it


def cv_estimate(pair: CoupledPair, h: Callable[[object], float],
                plan: ControlVariatePlan) -> CvEstimate:
    """Unbiased estimate minus the planned mean-zero same-time differences.
    Each difference h(X_{k+jL}) - h(Y_{k+jL}) compares the two copies at the
    same number of steps from the same initial law, so any eta keeps the
    estimator unbiased; the plan's eta aims the subtraction at variance."""
    if plan.lag != pair.lag:
        raise ValueError(f"plan lag {plan.lag} != pair lag {pair.lag}")
    base = h_estimate(pair, h, plan.k)
    top = plan.k + max(plan.j_max - 1, 0) * plan.lag
    if plan.j_max > 0 and top > len(pair.y) - 1:
        raise ValueError("pair horizon too short for this plan; rerun with horizon")
    terms = [
        h(pair.x[plan.k + j * plan.lag]) - h(pair.y[plan.k + j * plan.lag])
        for j, e in enumerate(plan.eta) if e
    ]
    corr = fsum(terms)
    return CvEstimate(value=base.value - corr, base=base.value, correction=corr)


def required_horizon(plan: ControlVariatePlan) -> int:
    """x-length a pair must record for cv_estimate under this plan."""
    return plan.k + plan.j_max * plan.lag
