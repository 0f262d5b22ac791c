"""Auxiliary-variable Metropolis-Hastings for doubly intractable posteriors.

Target: p(theta | y) with likelihood q(y | theta) / C_theta whose normalizer
C_theta is unavailable. Each proposal theta' is paired with an auxiliary
dataset x' drawn *perfectly* from the likelihood at theta'; the acceptance
ratio

    p(theta') q(y | theta') q(x | theta)
    ------------------------------------
    p(theta)  q(y | theta)  q(x' | theta')

then cancels every normalizer, so the production chain never evaluates C.
The instance here is the Ising inverse-temperature posterior with a uniform
prior on (0, 1), a reflected Gaussian random walk on beta, and the monotone
Ising CFTP sampler supplying the auxiliary configurations.

A classical MH chain using the exact (enumerated) C-ratio is provided purely
as a cross-check oracle on lattices small enough to enumerate.
"""
from __future__ import annotations

from dataclasses import dataclass
from math import exp, fsum, log

import numpy as np

from .cftp import NoCoalescenceError
from .ising import ising_cftp, ising_log_z, ising_suff_stat
from .noise import stream_at, subkey

_AUX_DOMAIN = "moller-aux"


@dataclass(frozen=True)
class IsingPosterior:
    """Inverse-temperature posterior, uniform prior on (0, 1), proposal scale
    for the reflected random walk, and the observed bond statistic."""

    L: int
    s_y: int
    scale: float = 0.05

    @classmethod
    def from_data(cls, data: np.ndarray, scale: float = 0.05) -> "IsingPosterior":
        data = np.asarray(data)
        return cls(L=data.shape[0], s_y=ising_suff_stat(data), scale=scale)


def reflect_unit(x: float) -> float:
    """Fold the real line into (0, 1) by reflection at both walls."""
    x = x % 2.0
    return 2.0 - x if x > 1.0 else x


def moller_log_ratio(theta: float, s_x: int, theta_p: float, s_xp: int, s_y: int) -> float:
    """Log acceptance ratio with every normalizer cancelled; the flat prior
    contributes nothing inside (0, 1). Exactly antisymmetric under swapping
    the current and proposed pairs."""
    return fsum([
        theta_p * s_y,
        -theta * s_y,
        theta * s_x,
        -theta_p * s_xp,
    ])


@dataclass(frozen=True)
class MollerState:
    theta: float
    x: np.ndarray

    @property
    def s_x(self) -> int:
        return ising_suff_stat(self.x)


def perfect_aux_draw(post: IsingPosterior, theta: float, seed: int, replicate: int,
                     step_index: int, max_retries: int = 5) -> np.ndarray:
    """Auxiliary configuration from the exact likelihood at theta, retrying
    under fresh subkeys if a CFTP run hits its depth cap."""
    for retry in range(max_retries):
        sub = subkey(seed, _AUX_DOMAIN, replicate, step_index, retry)
        try:
            config, _ = ising_cftp(post.L, theta, sub)
            return config
        except NoCoalescenceError:
            continue
    raise NoCoalescenceError(
        f"auxiliary sampler failed {max_retries} times at beta={theta}"
    )


def moller_step(state: MollerState, step_index: int, seed: int, post: IsingPosterior,
                replicate: int = 0):
    """One auxiliary-variable MH step. Returns (new state, accepted).
    Evaluates no normalizing constant, ever."""
    stream = stream_at(seed, step_index, replicate, purpose="moller-chain")
    theta_p = reflect_unit(state.theta + post.scale * float(stream.standard_normal()))
    x_p = perfect_aux_draw(post, theta_p, seed, replicate, step_index)
    log_ratio = moller_log_ratio(state.theta, state.s_x, theta_p,
                                 ising_suff_stat(x_p), post.s_y)
    if log(float(stream.random())) < log_ratio:
        return MollerState(theta=theta_p, x=x_p), True
    return state, False


@dataclass(frozen=True)
class MollerRun:
    betas: np.ndarray
    acceptance_rate: float


def run_moller_chain(post: IsingPosterior, n_steps: int, seed: int,
                     replicate: int = 0, theta0: float = 0.5) -> MollerRun:
    """The full chain from theta0, auxiliary start drawn perfectly at theta0."""
    x0 = perfect_aux_draw(post, theta0, seed, replicate, step_index=-1)
    state = MollerState(theta=theta0, x=x0)
    betas = np.empty(n_steps)
    accepted = 0
    for m in range(n_steps):
        state, acc = moller_step(state, m, seed, post, replicate)
        accepted += acc
        betas[m] = state.theta
    return MollerRun(betas=betas, acceptance_rate=accepted / n_steps)


# ---------------------------------------------------------------------------
# enumeration-backed oracles


def naive_ratio(theta: float, theta_p: float, L: int) -> float:
    """C_theta / C_theta', from full enumeration. The classical acceptance
    ratio needs it; the auxiliary-variable chain replaces it. Oracle only."""
    return exp(ising_log_z(L, theta) - ising_log_z(L, theta_p))


def run_naive_chain(post: IsingPosterior, n_steps: int, seed: int,
                    replicate: int = 0, theta0: float = 0.5) -> MollerRun:
    """Classical MH with the exact C-ratio; feasible only where the lattice
    enumerates. Cross-check for the auxiliary-variable chain."""
    theta = theta0
    betas = np.empty(n_steps)
    accepted = 0
    for m in range(n_steps):
        stream = stream_at(seed, m, replicate, purpose="naive-chain")
        theta_p = reflect_unit(theta + post.scale * float(stream.standard_normal()))
        log_ratio = (theta_p - theta) * post.s_y + (
            ising_log_z(post.L, theta) - ising_log_z(post.L, theta_p)
        )
        if log(float(stream.random())) < log_ratio:
            theta = theta_p
            accepted += 1
        betas[m] = theta
    return MollerRun(betas=betas, acceptance_rate=accepted / n_steps)


def grid_posterior(post: IsingPosterior, grid: np.ndarray) -> np.ndarray:
    """Exact posterior density on a beta grid, normalized over the grid by
    trapezoid weights. Enumeration-backed; oracle only."""
    grid = np.asarray(grid, dtype=float)
    logw = grid * post.s_y - ising_log_z(post.L, grid)
    logw -= logw.max()
    dens = np.exp(logw)
    area = np.trapezoid(dens, grid)
    return dens / area


def posterior_bin_probabilities(post: IsingPosterior, edges: np.ndarray,
                                points_per_bin: int = 200) -> np.ndarray:
    """Exact bin masses of the posterior over (0, 1) for binned comparisons."""
    edges = np.asarray(edges, dtype=float)
    fine = np.linspace(edges[0], edges[-1], (len(edges) - 1) * points_per_bin + 1)
    logw = fine * post.s_y - ising_log_z(post.L, fine)
    logw -= logw.max()
    dens = np.exp(logw)
    masses = np.empty(len(edges) - 1)
    for b in range(len(edges) - 1):
        lo = b * points_per_bin
        hi = (b + 1) * points_per_bin + 1
        masses[b] = np.trapezoid(dens[lo:hi], fine[lo:hi])
    return masses / masses.sum()
