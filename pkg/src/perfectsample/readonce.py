"""Read-once coupling from the past: forward blocks, each atom read once.

Time is cut into consecutive blocks of K atoms. A block "coalesces" when the
composed map over the block is constant, so its end value is free of the
entry state. The stream then works forward: the value the followed path holds
just before a coalescent block is an exact stationary draw, and that block's
common end value restarts the path for the next sample. Atoms are consumed
strictly left to right, none stored, none revisited.

The number of blocks consumed per emitted sample is geometric in the block
coalescence probability p_K, so K is chosen by a pilot scan targeting
p_K >= 0.5 by default. Pilot noise lives under a subkey of the master seed,
so production replicates can never reuse it.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Sequence

from .chain import RecursionModel, State, states_equal
from .noise import NoiseAtom, future_atoms, subkey

_PILOT_DOMAIN = "read-once-pilot"


@dataclass(frozen=True)
class BlockSpec:
    """Chosen block size and the pilot estimate of its coalescence rate."""

    block_size: int
    coalescence_rate: float


@dataclass(frozen=True)
class RoSample:
    """One emitted draw and the number of blocks it consumed (the block count
    since the previous coalescent block, inclusive)."""

    value: State
    blocks: int


def block_coalesces(model: RecursionModel, atoms: Sequence[NoiseAtom]):
    """Whether the composed map over these atoms is constant, and its value.

    Decidable two ways: track the declared order's extremes (monotone), or
    track every state of a finite enumeration. Returns (coalesced, end_value).
    """
    if model.order is not None:
        lo, hi = model.order.min_state, model.order.max_state
        for atom in atoms:
            lo, hi = model.step(lo, atom), model.step(hi, atom)
        return states_equal(lo, hi), hi
    if model.states is not None:
        xs = list(model.states)
        for atom in atoms:
            xs = [model.step(x, atom) for x in xs]
        ok = all(states_equal(xs[0], x) for x in xs[1:])
        return ok, xs[0]
    raise ValueError("block coalescence needs an order or a finite enumeration")


def choose_block_size(model: RecursionModel, seed: int, target: float = 0.5,
                      n_pilot: int = 10_000, cap: int = 2 ** 16) -> BlockSpec:
    """Smallest power-of-two K whose pilot coalescence rate reaches the target.

    Pilot block j at size K reads atoms 0..K-1 of a dedicated replicate-j
    stream under a pilot subkey; doubling K extends the same blocks, so the
    rate estimate is exactly nondecreasing in K and the returned K is
    nondecreasing in the target for a fixed seed.
    """
    if not 0.0 < target < 1.0:
        raise ValueError("target must be inside (0, 1)")
    pilot_seed = subkey(seed, _PILOT_DOMAIN)
    k = 1
    while k <= cap:
        hits = 0
        for j in range(n_pilot):
            atoms = future_atoms(pilot_seed, j, 0, k, model.noise_shape)
            ok, _ = block_coalesces(model, atoms)
            hits += ok
        rate = hits / n_pilot
        if rate >= target:
            return BlockSpec(block_size=k, coalescence_rate=rate)
        k *= 2
    raise RuntimeError(f"no block size up to {cap} reached target rate {target}")


def iter_ro_cftp(model: RecursionModel, spec: BlockSpec, seed: int,
                 replicate: int = 0, max_blocks_per_sample: int = 1_000_000) -> Iterator[RoSample]:
    """Endless sample stream. Memory is constant: one path value, one counter."""
    k = spec.block_size
    value = None       # followed path; None until the first coalescent block
    since = 0
    b = 0
    while True:
        atoms = future_atoms(seed, replicate, b * k, k, model.noise_shape)
        b += 1
        since += 1
        coalesced, end = block_coalesces(model, atoms)
        if coalesced:
            if value is not None:
                yield RoSample(value=value, blocks=since)
            value = end
            since = 0
        elif value is not None:
            for atom in atoms:
                value = model.step(value, atom)
        if since >= max_blocks_per_sample:
            raise RuntimeError(
                f"{since} blocks without coalescence; block size {k} unsuited"
            )


def ro_cftp_stream(model: RecursionModel, spec: BlockSpec, seed: int, n: int,
                   replicate: int = 0):
    """First n samples of the stream, with their per-sample block counts."""
    values, blocks = [], []
    gen = iter_ro_cftp(model, spec, seed, replicate)
    for _ in range(n):
        s = next(gen)
        values.append(s.value)
        blocks.append(s.blocks)
    return values, blocks
