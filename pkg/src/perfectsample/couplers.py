"""Coupling constructions for continuous-state chains.

Three ways to make distinct paths agree exactly in finite time without a
finite state space:

* splitting: write the kernel as rho * R + (1 - rho) * Q(.|x) with R free of
  x; on the shared rho-coin every path draws the identical R value. The
  multigamma coupler is the Gamma-family instance, and running the split
  backward gives a direct exact draw: a geometric regeneration time, one R
  draw, then residual steps.
* common proposal: random-walk Metropolis chains offered the same auxiliary
  point, each swapping it for its own proposal on a shared uniform with the
  auxiliary density weighting that keeps every chain's proposal law intact.
* slice: the shared-threshold level-set walk whose stopping index is monotone
  in the density, so two extremal chains certify coalescence for everything
  between them.
"""
from __future__ import annotations

from dataclasses import dataclass
from math import exp, gamma as gamma_fn, log, sqrt, pi as _pi
from typing import Callable, Sequence

import numpy as np
from numpy.random import Generator

from .cftp import BackoffSchedule, CoalescenceCertificate, NoCoalescenceError
from .models import DecreasingDensity
from .noise import stream_at, subkey


# ---------------------------------------------------------------------------
# splitting / multigamma

class RejectionCapError(RuntimeError):
    """Residual-kernel rejection loop exceeded its proposal cap."""


@dataclass(frozen=True)
class SplitKernelSpec:
    """A kernel density f(y|x) minorized by r(y) with mass rho, split as
    rho * R + (1 - rho) * Q(.|x)."""

    f: Callable[[float, float], float]          # f(y, x): kernel density
    r: Callable[[float], float]                 # minorizer, integrates to rho
    rho: float
    sample_r: Callable[[Generator], float]      # draw from R = r / rho
    sample_q: Callable[[float, Generator], float]   # draw from the residual

    def q_density(self, y: float, x: float) -> float:
        if self.rho >= 1.0:
            raise ValueError("residual has zero mass at rho = 1")
        return (self.f(y, x) - self.r(y)) / (1.0 - self.rho)


def gamma_minorizer(a: float, b0: float, b1: float, rejection_cap: int = 1_000_000) -> SplitKernelSpec:
    """Gamma-family split: the kernel at x is Gamma(a, rate b(x)) with
    b(x) = b0 + (b1 - b0)/(1 + x) ranging over (b0, b1), minorized by
    r(y) = y^(a-1) b0^a exp(-b1 y) / Gamma(a). The minorizer integrates to
    rho = (b0/b1)^a and renormalizes to Gamma(a, rate b1)."""
    if not (0.0 < b0 < b1):
        raise ValueError("need 0 < b0 < b1")
    if a <= 0:
        raise ValueError("need a > 0")
    lg = gamma_fn(a)
    rho = (b0 / b1) ** a

    def rate(x: float) -> float:
        return b0 + (b1 - b0) / (1.0 + x)

    def f(y: float, x: float) -> float:
        b = rate(x)
        return y ** (a - 1.0) * b ** a * exp(-b * y) / lg

    def r(y: float) -> float:
        return y ** (a - 1.0) * b0 ** a * exp(-b1 * y) / lg

    def sample_r(gen: Generator) -> float:
        return gen.gamma(a, 1.0 / b1)

    def sample_q(x: float, gen: Generator) -> float:
        # rejection against the kernel's own proposals: accept with the
        # residual fraction 1 - r(y)/f(y|x)
        b = rate(x)
        for _ in range(rejection_cap):
            y = gen.gamma(a, 1.0 / b)
            if gen.random() >= r(y) / f(y, x):
                return y
        raise RejectionCapError(f"no accept in {rejection_cap} proposals")

    return SplitKernelSpec(f=f, r=r, rho=rho, sample_r=sample_r, sample_q=sample_q)


@dataclass(frozen=True)
class SplitAtom:
    """Shared randomness for one split step: the regeneration uniform and the
    R stream are common to every chain on this time index; the residual
    stream is private to a chain."""

    u: float
    shared: Generator
    own: Generator


def split_atoms(seed: int, t: int, n_chains: int, replicate: int = 0) -> list[SplitAtom]:
    """Per-chain atoms for time t sharing the coin and the R stream.

    The shared generator is re-derived per chain from one key, so chains
    consume identical R draws without entangling each other's stream state.
    """
    u = float(stream_at(seed, t, replicate, purpose="split-coin").random())
    return [
        SplitAtom(
            u=u,
            shared=stream_at(seed, t, replicate, purpose="split-shared"),
            own=stream_at(seed, t, replicate, purpose=("split-own", i)),
        )
        for i in range(n_chains)
    ]


def split_step(spec: SplitKernelSpec, x: float, atom: SplitAtom):
    """One split-kernel transition. Returns (value, regenerated): on the
    shared coin every chain lands on the identical R value."""
    if atom.u < spec.rho:
        return spec.sample_r(atom.shared), True
    return spec.sample_q(x, atom.own), False


@dataclass(frozen=True)
class MultigammaDraw:
    value: float
    steps: int          # geometric regeneration time consumed


def multigamma_exact_draw(spec: SplitKernelSpec, seed: int, replicate: int = 0,
                          cap: int = 1_000_000) -> MultigammaDraw:
    """Exact stationary draw from the split chain, no backward simulation:
    look back a Geometric(rho) number of steps to the last regeneration,
    restart there from R, and run the residual kernel forward."""
    gen = stream_at(seed, 0, replicate, purpose="multigamma")
    steps = int(gen.geometric(spec.rho))
    if steps > cap:
        raise RuntimeError(f"regeneration time {steps} beyond cap {cap}")
    y = spec.sample_r(gen)
    for _ in range(steps - 1):
        y = spec.sample_q(y, gen)
    return MultigammaDraw(value=y, steps=steps)


# ---------------------------------------------------------------------------
# common-proposal coupler for random-walk Metropolis


@dataclass(frozen=True)
class GaussianAux:
    """Auxiliary proposal-overlap density: a fixed normal, wide by default."""

    mean: float = 0.0
    sd: float = 2.0

    def logpdf(self, v: float) -> float:
        z = (v - self.mean) / self.sd
        return -0.5 * z * z - log(self.sd) - 0.5 * log(2.0 * _pi)

    def from_normal(self, n: float) -> float:
        return self.mean + self.sd * n


def _std_normal_logpdf(z: float) -> float:
    return -0.5 * z * z - 0.5 * log(2.0 * _pi)


@dataclass(frozen=True)
class CommonProposalAtom:
    """Shared auxiliary point and swap uniform, plus each chain's own
    unit-normal proposal increment."""

    z: float
    u: float
    increments: tuple[float, ...]


def common_proposal_atom(seed: int, t: int, n_chains: int, replicate: int = 0,
                         aux: GaussianAux = GaussianAux()) -> CommonProposalAtom:
    gen = stream_at(seed, t, replicate, purpose="common-proposal")
    u = float(gen.random())
    z = aux.from_normal(float(gen.standard_normal()))
    inc = tuple(float(v) for v in gen.standard_normal(n_chains))
    return CommonProposalAtom(z=z, u=u, increments=inc)


def common_proposal_step(xs: Sequence[float], atom: CommonProposalAtom,
                         aux: GaussianAux = GaussianAux()) -> list[float]:
    """Offer every chain the same auxiliary point z: chain i keeps its own
    unit-normal proposal y_i unless the shared uniform clears the swap ratio
    N(z - x_i) g(y_i) / (N(y_i - x_i) g(z)). Each chain's proposal stays
    exactly N(x_i, 1); distinct chains get a positive chance of proposing
    the identical point."""
    if len(atom.increments) < len(xs):
        raise ValueError("atom has fewer increments than chains")
    log_u = log(atom.u)
    out = []
    for x, inc in zip(xs, atom.increments):
        y = x + inc
        log_ratio = (
            _std_normal_logpdf(atom.z - x) + aux.logpdf(y)
            - _std_normal_logpdf(inc) - aux.logpdf(atom.z)
        )
        out.append(atom.z if log_ratio > log_u else y)
    return out


def coupled_rw_mh(target_logpdf: Callable[[float], float], xs0: Sequence[float],
                  n_steps: int, seed: int, replicate: int = 0,
                  aux: GaussianAux = GaussianAux()):
    """Random-walk Metropolis chains coupled through the common-proposal
    construction, with a shared acceptance uniform so merged chains stay
    merged. Returns (paths array of shape (n_steps+1, n_chains),
    first time all chains are equal or None)."""
    xs = [float(x) for x in xs0]
    paths = [list(xs)]
    met = None
    for t in range(n_steps):
        atom = common_proposal_atom(seed, t, len(xs), replicate, aux)
        gen = stream_at(seed, t, replicate, purpose="mh-accept")
        log_acc = log(float(gen.random()))
        props = common_proposal_step(xs, atom, aux)
        xs = [
            w if log_acc < target_logpdf(w) - target_logpdf(x) else x
            for x, w in zip(xs, props)
        ]
        paths.append(list(xs))
        if met is None and all(x == xs[0] for x in xs[1:]):
            met = t + 1
    return np.array(paths), met


# ---------------------------------------------------------------------------
# perfect slice sampler for a strictly decreasing density


class WSequenceCapError(RuntimeError):
    """Level-set walk failed to assign every chain within the cap."""


def slice_update(density: DecreasingDensity, xs: Sequence[float], gen: Generator,
                 w_cap: int = 100_000, return_taus: bool = False):
    """Shared-threshold slice update of several chains at once.

    One threshold uniform eps serves every chain. The walk W_1, W_2, ...
    starts uniform on the whole support (the level set of the density's
    minimum) and each W_j is uniform on the level set at f(W_{j-1}), which
    for a decreasing density is just (0, W_{j-1}). Chain x adopts the first
    W_j inside the level set at eps * f(x); chains assigned at the same index
    receive the identical float, and the stopping index is monotone in the
    density, ordering the updates the same way as the inputs.
    """
    eps = float(gen.random())
    bounds = [density.superlevel_upper(eps * density.f(x)) for x in xs]
    values: list[float | None] = [None] * len(xs)
    taus = [0] * len(xs)
    w = density.cutoff
    remaining = len(xs)
    for j in range(1, w_cap + 1):
        w = w * float(gen.random())
        for i, b in enumerate(bounds):
            if values[i] is None and w <= b:
                values[i] = w
                taus[i] = j
                remaining -= 1
        if remaining == 0:
            return (values, taus) if return_taus else values
    raise WSequenceCapError(f"walk exhausted {w_cap} steps with chains unassigned")


def slice_cftp(density: DecreasingDensity, seed: int, replicate: int = 0,
               schedule: BackoffSchedule | None = None):
    """Monotone CFTP in the density order: the two extremal chains start at
    the density's maximum (0) and minimum (the cutoff); everything else is
    sandwiched between their level sets. Returns (draw, certificate)."""
    sched = schedule or BackoffSchedule()
    evals = 0
    deepest = 0
    for depth in sched.depths():
        deepest = depth
        hi, lo = 0.0, density.cutoff        # max-density and min-density starts
        merged_at = None
        for t in range(-depth, 0):
            gen = stream_at(seed, t, replicate, purpose="slice")
            hi, lo = slice_update(density, [hi, lo], gen)
            evals += 2
            if merged_at is None and hi == lo:
                merged_at = t + 1
        if merged_at is not None:
            return hi, CoalescenceCertificate(depth, merged_at, evals)
    raise NoCoalescenceError(f"no coalescence by depth cap {deepest}")
