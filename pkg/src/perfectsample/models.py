"""Model zoo: small chains with known structure, used to exercise every sampler.

* ladder_walk      4-state monotone birth-death walk on {0.25, 0.5, 2, 4}
* three_state_walk non-monotone 3-state walk with a closed-form bounding table
* mixture_latent_chain
                   latent allocation count of a two-component location mixture,
                   collapsed to a one-shot update that is monotone in the count
* exp_decreasing   strictly decreasing density on (0, cutoff) for the slice
                   sampler, with its inverse supplied in closed form
"""
from __future__ import annotations

from dataclasses import dataclass
from importlib import resources
from math import exp, log, pi as _pi, sqrt
from typing import Callable

import numpy as np

from .chain import FiniteChainSpec, Order, RecursionModel
from .noise import NoiseAtom, NoiseShape, noise_at

# ---------------------------------------------------------------------------
# 4-state ladder walk


def ladder_walk(p: float) -> RecursionModel:
    """Birth-death walk on (0.25, 0.5, 2, 4): up with probability p, down with 1-p,
    sticking at the end it is already leaning on. Monotone in the natural order."""
    if not 0.0 < p < 1.0:
        raise ValueError("p must be inside (0, 1)")
    states = (0.25, 0.5, 2.0, 4.0)
    idx = {s: i for i, s in enumerate(states)}

    def step(x: float, atom: NoiseAtom) -> float:
        i = idx[x]
        if atom.bernoullis[0]:
            return states[min(i + 1, 3)]
        return states[max(i - 1, 0)]

    matrix = np.zeros((4, 4))
    for i in range(4):
        matrix[i, min(i + 1, 3)] += p
        matrix[i, max(i - 1, 0)] += 1.0 - p

    return RecursionModel(
        name=f"ladder_walk(p={p})",
        step=step,
        noise_shape=NoiseShape(bernoullis=1, bernoulli_p=p),
        states=states,
        order=Order(leq=lambda a, b: a <= b, min_state=0.25, max_state=4.0),
        chain_spec=FiniteChainSpec(states, matrix),
    )


# ---------------------------------------------------------------------------
# non-monotone 3-state walk with a bounding-set table

_W3_STATES = (0.25, 0.5, 2.0)

# closed-form set update: rows for both two-element sets and the warm-up from
# the full space; singletons fall through to the pointwise map
_W3_BOUND_TABLE = {
    (frozenset({0.25, 0.5}), 1): frozenset({0.25, 0.5}),
    (frozenset({0.25, 0.5}), 0): frozenset({0.5, 2.0}),
    (frozenset({0.5, 2.0}), 1): frozenset({0.25, 0.5}),
    (frozenset({0.5, 2.0}), 0): frozenset({2.0}),
    (frozenset({0.25, 2.0}), 1): frozenset({0.25}),
    (frozenset({0.25, 2.0}), 0): frozenset({0.5, 2.0}),
    (frozenset(_W3_STATES), 1): frozenset({0.25, 0.5}),
    (frozenset(_W3_STATES), 0): frozenset({0.5, 2.0}),
}


def three_state_walk(p: float) -> RecursionModel:
    """3-state walk that is not monotone in any state order: the high state
    drops to the bottom on the same coin that holds the low states still.
    Comes with the closed-form bounding-set update the CFTP variant needs."""
    if not 0.0 < p < 1.0:
        raise ValueError("p must be inside (0, 1)")
    up = {0.25: 0.25, 0.5: 0.5, 2.0: 0.25}   # coin = 1, probability p
    down = {0.25: 0.5, 0.5: 2.0, 2.0: 2.0}   # coin = 0

    def step(x: float, atom: NoiseAtom) -> float:
        return up[x] if atom.bernoullis[0] else down[x]

    def bounding_update(y: frozenset, atom: NoiseAtom) -> frozenset:
        if len(y) == 1:
            (x,) = y
            return frozenset({step(x, atom)})
        return _W3_BOUND_TABLE[(y, atom.bernoullis[0])]

    matrix = np.array([
        [p, 1.0 - p, 0.0],
        [0.0, p, 1.0 - p],
        [p, 0.0, 1.0 - p],
    ])

    return RecursionModel(
        name=f"three_state_walk(p={p})",
        step=step,
        noise_shape=NoiseShape(bernoullis=1, bernoulli_p=p),
        states=_W3_STATES,
        bounding_update=bounding_update,
        chain_spec=FiniteChainSpec(_W3_STATES, matrix),
    )


# ---------------------------------------------------------------------------
# two-component mixture: latent allocation count chain and the weight draw


def normal_density(mean: float, sd: float = 1.0) -> Callable[[float], float]:
    c = 1.0 / (sd * sqrt(2.0 * _pi))

    def f(x: float) -> float:
        z = (x - mean) / sd
        return c * exp(-0.5 * z * z)

    return f


def mixture_fixture_data() -> np.ndarray:
    """The packaged 10-point dataset, drawn once from 0.7*N(0,1) + 0.3*N(3,1)."""
    text = resources.files("perfectsample.data").joinpath("mixture_fixture.txt").read_text()
    return np.array([float(line) for line in text.split()])


@dataclass(frozen=True)
class MixtureSetup:
    """Data plus component densities; precomputes what the update needs."""

    data: np.ndarray
    f0: Callable[[float], float]
    f1: Callable[[float], float]

    @property
    def n(self) -> int:
        return len(self.data)

    def density_values(self) -> tuple[np.ndarray, np.ndarray]:
        d0 = np.array([self.f0(d) for d in self.data])
        d1 = np.array([self.f1(d) for d in self.data])
        return d0, d1


def default_mixture_setup() -> MixtureSetup:
    return MixtureSetup(mixture_fixture_data(), normal_density(0.0), normal_density(3.0))


def mixture_alpha_from_atom(l: int, atom: NoiseAtom, n: int) -> float:
    """Weight draw given the allocation count: with standard exponential slots
    w_1..w_{n+2}, alpha = sum of the first n+1-l over the sum of all n+2, which
    is Beta(n+1-l, l+1)."""
    w = atom.exponentials
    if len(w) != n + 2:
        raise ValueError(f"need {n + 2} exponential slots, got {len(w)}")
    return sum(w[: n + 1 - l]) / sum(w)


def mixture_latent_chain(setup: MixtureSetup | None = None) -> RecursionModel:
    """One-shot update of the allocation count l: draw alpha | l from its Beta
    law out of the atom's exponential slots, then re-threshold each point's
    membership uniform. Increasing in l under shared atoms, which is what the
    monotone sampler exploits (extremes 0 and n)."""
    if setup is None:
        setup = default_mixture_setup()
    n = setup.n
    d0, d1 = setup.density_values()

    def step(l: int, atom: NoiseAtom) -> int:
        alpha = mixture_alpha_from_atom(l, atom, n)
        u = np.asarray(atom.uniforms)
        p = (1.0 - alpha) * d1 / (alpha * d0 + (1.0 - alpha) * d1)
        return int(np.count_nonzero(u <= p))

    return RecursionModel(
        name=f"mixture_latent_chain(n={n})",
        step=step,
        noise_shape=NoiseShape(uniforms=n, exponentials=n + 2),
        states=tuple(range(n + 1)),
        order=Order(leq=lambda a, b: a <= b, min_state=0, max_state=n),
    )


def mixture_latent_spec(setup: MixtureSetup, grid: int = 4001) -> FiniteChainSpec:
    """Transition matrix of the allocation-count chain by quadrature over the
    Beta draw. Used only as an oracle; the sampler never sees it."""
    from scipy.integrate import simpson
    from scipy.stats import beta as beta_dist

    n = setup.n
    d0, d1 = setup.density_values()
    # both Beta shapes are >= 1 here, so the integrand is finite at 0 and 1
    alphas = np.linspace(0.0, 1.0, grid)
    p = (1.0 - alphas)[:, None] * d1 / (alphas[:, None] * d0 + (1.0 - alphas)[:, None] * d1)

    rows = np.zeros((n + 1, n + 1))
    for l in range(n + 1):
        w = beta_dist.pdf(alphas, n + 1 - l, l + 1)
        # allocation count given alpha: independent non-identical bernoullis
        dist = np.zeros((len(alphas), n + 1))
        dist[:, 0] = 1.0
        for i in range(n):
            shifted = np.zeros_like(dist)
            shifted[:, 1:] = dist[:, :-1]
            dist = dist * (1.0 - p[:, i : i + 1]) + shifted * p[:, i : i + 1]
        rows[l] = simpson(w[:, None] * dist, x=alphas, axis=0)
    drift = np.max(np.abs(rows.sum(axis=1) - 1.0))
    if drift > 1e-8:
        raise RuntimeError(f"quadrature drift {drift:.2e} too large for an oracle")
    rows /= rows.sum(axis=1, keepdims=True)
    return FiniteChainSpec(tuple(range(n + 1)), rows)


def mixture_posterior_density(setup: MixtureSetup, alphas: np.ndarray) -> np.ndarray:
    """Unnormalized posterior of the weight under a flat prior."""
    d0, d1 = setup.density_values()
    a = np.asarray(alphas)[:, None]
    return np.prod(a * d0 + (1.0 - a) * d1, axis=1)


def mixture_posterior_cdf(setup: MixtureSetup, grid: int = 10_001) -> Callable[[np.ndarray], np.ndarray]:
    """Grid-integrated posterior CDF of the weight, for KS checks."""
    xs = np.linspace(0.0, 1.0, grid)
    dens = mixture_posterior_density(setup, xs)
    cum = np.concatenate([[0.0], np.cumsum((dens[1:] + dens[:-1]) * 0.5 * np.diff(xs))])
    cum /= cum[-1]

    def cdf(q):
        return np.interp(q, xs, cum)

    return cdf


def mixture_alpha_cftp(setup: MixtureSetup | None = None, seed: int = 0, replicate: int = 0,
                       tmax: int = 2 ** 20):
    """Perfect draw of the mixture weight: coalesce the allocation-count chain
    backward, then push the coalesced count through the first future atom's
    Beta draw. Returns (alpha, count, certificate)."""
    from .cftp import BackoffSchedule, cftp_monotone

    if setup is None:
        setup = default_mixture_setup()
    model = mixture_latent_chain(setup)
    l0, cert = cftp_monotone(model, seed, replicate=replicate,
                             schedule=BackoffSchedule(tmax))
    atom = noise_at(seed, 0, replicate, model.noise_shape)
    alpha = mixture_alpha_from_atom(l0, atom, setup.n)
    return alpha, l0, cert


# ---------------------------------------------------------------------------
# strictly decreasing density on (0, cutoff), for the slice sampler


@dataclass(frozen=True)
class DecreasingDensity:
    """Unnormalized strictly decreasing density on (0, cutoff) with a
    closed-form inverse; the slice sampler's level sets are then intervals
    (0, upper(u)) with no root finding."""

    f: Callable[[float], float]
    f_inv: Callable[[float], float]
    cutoff: float

    def superlevel_upper(self, u: float) -> float:
        """Right endpoint of {y in (0, cutoff): f(y) >= u}."""
        if u <= self.f(self.cutoff):
            return self.cutoff
        return self.f_inv(u)


def exp_decreasing(cutoff: float = 3.0) -> DecreasingDensity:
    """exp(-y) truncated to (0, cutoff)."""
    return DecreasingDensity(f=lambda y: exp(-y), f_inv=lambda u: -log(u), cutoff=cutoff)
