"""Stochastic recursive sequences and exact finite-chain oracles.

A chain is written as X_{t+1} = phi(X_t, xi_{t+1}) with xi the noise atom at
that time index. Models carry the update map, the atom shape, and whatever
structure the samplers can exploit: a finite enumeration, a partial order
with extremal elements, a set-valued bounding update, and the transition
matrix used by the exact oracles.

The oracles in this module never simulate. The stationary law comes from
power iteration cross-checked against a dense linear solve, and k-step
marginals and total variation distances come from matrix arithmetic.
"""
from __future__ import annotations

from dataclasses import dataclass
from math import gcd
from typing import Any, Callable, Sequence

import numpy as np
from scipy.sparse.csgraph import connected_components

from .noise import NoiseAtom, NoiseShape, NoiseShapeError

State = Any


class ChainStructureError(ValueError):
    """Transition structure unfit for a stationary oracle (reducible/periodic)."""


def states_equal(a: State, b: State) -> bool:
    """Exact state equality; coalescence is never 'close enough'."""
    if isinstance(a, np.ndarray) or isinstance(b, np.ndarray):
        return np.array_equal(a, b)
    return a == b


@dataclass(frozen=True)
class Order:
    """Partial order with extremal elements, for monotone-coupling samplers."""

    leq: Callable[[State, State], bool]
    min_state: State
    max_state: State


@dataclass(frozen=True)
class FiniteChainSpec:
    """Labelled transition matrix; row i is the law of the next state from labels[i]."""

    labels: tuple
    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=float)
        object.__setattr__(self, "matrix", m)
        n = len(self.labels)
        if len(set(self.labels)) != n:
            raise ValueError("duplicate state labels")
        if m.shape != (n, n):
            raise ValueError(f"matrix shape {m.shape} does not match {n} labels")
        if np.any(m < 0):
            raise ValueError("negative transition probability")
        if np.max(np.abs(m.sum(axis=1) - 1.0)) > 1e-12:
            raise ValueError("rows must sum to 1 within 1e-12")

    @property
    def n(self) -> int:
        return len(self.labels)

    def index(self, label) -> int:
        return self.labels.index(label)


@dataclass(frozen=True)
class RecursionModel:
    """An SRS plus the structure the samplers and oracles need.

    step(x, atom) must be deterministic in (x, atom); all randomness lives in
    the atom. states/order/bounding_update/chain_spec are optional and each
    unlocks a family of algorithms.
    """

    name: str
    step: Callable[[State, NoiseAtom], State]
    noise_shape: NoiseShape
    states: tuple | None = None
    order: Order | None = None
    bounding_update: Callable[[frozenset, NoiseAtom], frozenset] | None = None
    chain_spec: FiniteChainSpec | None = None


def _check_atoms(model: RecursionModel, atoms: Sequence[NoiseAtom]) -> None:
    for a in atoms:
        if not a.matches(model.noise_shape):
            raise NoiseShapeError(
                f"atom does not match noise shape of model {model.name!r}"
            )


def forward_compose(model: RecursionModel, x: State, atoms: Sequence[NoiseAtom]) -> State:
    """Apply atoms oldest-first: phi(... phi(phi(x, a_1), a_2) ..., a_n)."""
    _check_atoms(model, atoms)
    for a in atoms:
        x = model.step(x, a)
    return x


def backward_compose(model: RecursionModel, x: State, atoms: Sequence[NoiseAtom]) -> State:
    """Apply atoms newest-first. Same law as forward under i.i.d. atoms."""
    _check_atoms(model, atoms)
    for a in reversed(atoms):
        x = model.step(x, a)
    return x


def _period(m: np.ndarray) -> int:
    # gcd of (d[u] + 1 - d[v]) over edges of a strongly connected graph
    n = m.shape[0]
    depth = np.full(n, -1)
    depth[0] = 0
    frontier = [0]
    edges = [(i, j) for i in range(n) for j in range(n) if m[i, j] > 0]
    while frontier:
        nxt = []
        for u in frontier:
            for v in range(n):
                if m[u, v] > 0 and depth[v] < 0:
                    depth[v] = depth[u] + 1
                    nxt.append(v)
        frontier = nxt
    g = 0
    for u, v in edges:
        g = gcd(g, depth[u] + 1 - depth[v])
    return abs(g)


class StationaryOracle:
    """Exact stationary law and k-step marginals of a validated finite chain."""

    def __init__(self, spec: FiniteChainSpec, pi: np.ndarray):
        self.spec = spec
        self.pi = pi

    def k_step_marginals(self, init, k: int) -> np.ndarray:
        """Distribution of X_k when X_0 ~ init (a label or a distribution)."""
        v = as_distribution(self.spec, init)
        for _ in range(k):
            v = v @ self.spec.matrix
        return v


def as_distribution(spec: FiniteChainSpec, init) -> np.ndarray:
    """Turn a label or probability vector into a validated distribution row."""
    if isinstance(init, np.ndarray) or isinstance(init, (list, tuple)):
        v = np.asarray(init, dtype=float)
        if v.shape != (spec.n,):
            raise ValueError("distribution length does not match state count")
        if np.any(v < 0) or abs(v.sum() - 1.0) > 1e-12:
            raise ValueError("init is not a distribution")
        return v.copy()
    v = np.zeros(spec.n)
    v[spec.index(init)] = 1.0
    return v


def exact_stationary(spec: FiniteChainSpec, residual: float = 1e-12, agree: float = 1e-10) -> StationaryOracle:
    """Stationary law by power iteration, cross-checked against a dense solve.

    The two routes must agree to `agree`; refusing to return otherwise keeps
    a silently broken oracle from blessing a broken sampler.
    """
    m = spec.matrix
    n = spec.n
    n_comp, _ = connected_components(m > 0, directed=True, connection="strong")
    if n_comp != 1:
        raise ChainStructureError(f"chain is reducible ({n_comp} strong components)")
    p = _period(m)
    if p != 1:
        raise ChainStructureError(f"chain is periodic with period {p}")

    v = np.full(n, 1.0 / n)
    for _ in range(1_000_000):
        nxt = v @ m
        if np.max(np.abs(nxt - v)) < residual:
            v = nxt
            break
        v = nxt
    else:
        raise ChainStructureError("power iteration did not reach residual")
    v = v / v.sum()

    a = (m.T - np.eye(n)).copy()
    a[-1, :] = 1.0
    b = np.zeros(n)
    b[-1] = 1.0
    direct = np.linalg.solve(a, b)
    if np.max(np.abs(direct - v)) > agree:
        raise ChainStructureError("stationary routes disagree beyond tolerance")
    return StationaryOracle(spec, v)


def exact_tv_at(spec: FiniteChainSpec, init, k: int) -> float:
    """Total variation distance between the k-step marginal from init and pi."""
    oracle = exact_stationary(spec)
    mk = oracle.k_step_marginals(init, k)
    return 0.5 * float(np.abs(mk - oracle.pi).sum())
