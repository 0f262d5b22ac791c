"""Keyed counter-based noise streams.

Every sampler in this package reads randomness through this module. A deviate
is addressed by (seed, time index, replicate, slot) and derived on demand from
a Philox counter generator whose 128-bit key is hashed from the address. The
same address always yields the same bits. That is the property the samplers
lean on: a backward run at depth 2T reuses the depth-T noise exactly, and
replicates never share a stream.

Two kinds of access are provided:

* a fixed-width grid of atoms, one atom per time index, where each atom holds
  a declared number of uniform / normal / bernoulli / exponential slots
  (`noise_at`, `past_atoms`, `future_atoms`, and the raw-word variants);
* per-time-index open-ended streams for consumers whose draw count is not
  known in advance, e.g. rejection loops (`stream_at`).

Positioning is O(1) in |t|: Philox.advance moves the counter without
generating. One advance unit is a counter block of 4 output words, so the
per-index word stride is padded up to a multiple of 4.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.random import Generator, Philox
from scipy.special import ndtri

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15

# domain tags keeping the atom grid, per-index streams and derived seeds apart
_TAG_GRID = 0x47524944
_TAG_STREAM = 0x53545245
_TAG_SUBKEY = 0x5355424B

_PAST = 0
_FUTURE = 1

# smallest grid value substituted for an exact 0.0 so uniform slots stay in (0,1)
_U_FLOOR = 2.0 ** -53


class NoiseShapeError(ValueError):
    """Raised when an atom does not match the shape a model declared."""


def _splitmix64(x: int) -> int:
    x = (x + _GOLDEN) & _MASK64
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def _fold(h: int, part) -> int:
    if isinstance(part, str):
        data = part.encode("utf-8")
        h = _splitmix64(h ^ len(data))
        for i in range(0, len(data), 8):
            h = _splitmix64(h ^ int.from_bytes(data[i : i + 8], "little"))
        return h
    if isinstance(part, tuple):
        h = _splitmix64(h ^ len(part))
        for p in part:
            h = _fold(h, p)
        return h
    return _splitmix64(h ^ (part & _MASK64))


def _mix(*parts: int | str) -> int:
    h = 0x243F6A8885A308D3
    for p in parts:
        h = _fold(h, p)
    return h


def _key128(*parts: int | str) -> tuple[int, int]:
    return _mix(*parts, 1), _mix(*parts, 2)


def subkey(seed: int, *parts: int | str) -> int:
    """Derive a child master seed, domain-separated from every stream key.

    Used wherever a sampler embeds another sampler (pilot runs, nested
    perfect draws) so the child's noise can never collide with the parent's
    replicate streams.
    """
    return _mix(_TAG_SUBKEY, seed, *parts)


@dataclass(frozen=True)
class NoiseShape:
    """Per-step slot layout of a model's noise atom.

    Slot order within a time index is fixed: uniforms, then normals, then
    bernoulli bits, then exponentials. Every slot consumes one underlying
    uniform word, so changing `bernoulli_p` re-thresholds the same bits
    without disturbing any other slot.
    """

    uniforms: int = 0
    normals: int = 0
    bernoullis: int = 0
    exponentials: int = 0
    bernoulli_p: float | None = None

    def __post_init__(self):
        for name in ("uniforms", "normals", "bernoullis", "exponentials"):
            if getattr(self, name) < 0:
                raise NoiseShapeError(f"{name} must be >= 0")
        if self.words == 0:
            raise NoiseShapeError("shape has no slots")
        if self.bernoullis > 0:
            if self.bernoulli_p is None:
                raise NoiseShapeError("bernoulli slots need bernoulli_p")
            if not 0.0 <= self.bernoulli_p <= 1.0:
                raise NoiseShapeError("bernoulli_p outside [0, 1]")
        elif self.bernoulli_p is not None:
            raise NoiseShapeError("bernoulli_p given but no bernoulli slots")

    @property
    def words(self) -> int:
        return self.uniforms + self.normals + self.bernoullis + self.exponentials

    @property
    def stride(self) -> int:
        # counter blocks are 4 words; pad so t -> word offset stays advance-exact
        return -(-self.words // 4) * 4


@dataclass(frozen=True)
class NoiseAtom:
    """One time index worth of realized noise."""

    uniforms: tuple[float, ...] = ()
    normals: tuple[float, ...] = ()
    bernoullis: tuple[int, ...] = ()
    exponentials: tuple[float, ...] = ()

    def matches(self, shape: NoiseShape) -> bool:
        return (
            len(self.uniforms) == shape.uniforms
            and len(self.normals) == shape.normals
            and len(self.bernoullis) == shape.bernoullis
            and len(self.exponentials) == shape.exponentials
        )


def _grid_generator(seed: int, replicate: int, direction: int, stride: int) -> Generator:
    return Generator(Philox(key=_key128(_TAG_GRID, seed, replicate, direction, stride)))


def _guard(u: np.ndarray) -> np.ndarray:
    u[u == 0.0] = _U_FLOOR
    return u


def _words_block(seed: int, replicate: int, direction: int, start: int, count: int, shape: NoiseShape) -> np.ndarray:
    gen = _grid_generator(seed, replicate, direction, shape.stride)
    if start:
        gen.bit_generator.advance(start * shape.stride // 4)
    block = gen.random((count, shape.stride))
    return _guard(block[:, : shape.words])


def past_word_block(seed: int, replicate: int, depth: int, shape: NoiseShape) -> np.ndarray:
    """Raw uniform words for t = -depth..-1, one row per index, in time order.

    Doubling the depth reproduces the shallower block as the suffix of the
    deeper one bit-for-bit; that is what makes backing off further in time
    reuse the already-seen noise.
    """
    if depth <= 0:
        raise ValueError("depth must be positive")
    block = _words_block(seed, replicate, _PAST, 0, depth, shape)
    return np.ascontiguousarray(block[::-1])


def future_word_block(seed: int, replicate: int, start: int, count: int, shape: NoiseShape) -> np.ndarray:
    """Raw uniform words for t = start..start+count-1 (start >= 0)."""
    if start < 0:
        raise ValueError("future blocks start at t >= 0")
    return _words_block(seed, replicate, _FUTURE, start, count, shape)


def atom_from_words(words: np.ndarray, shape: NoiseShape) -> NoiseAtom:
    """Interpret one row of raw words as an atom under the shape's slot layout."""
    if len(words) != shape.words:
        raise NoiseShapeError(f"expected {shape.words} words, got {len(words)}")
    i = 0
    uni = tuple(float(w) for w in words[i : i + shape.uniforms])
    i += shape.uniforms
    nor = tuple(float(ndtri(w)) for w in words[i : i + shape.normals])
    i += shape.normals
    ber = tuple(int(w < shape.bernoulli_p) for w in words[i : i + shape.bernoullis])
    i += shape.bernoullis
    exp = tuple(float(-np.log1p(-w)) for w in words[i : i + shape.exponentials])
    return NoiseAtom(uniforms=uni, normals=nor, bernoullis=ber, exponentials=exp)


def noise_at(seed: int, t: int, replicate: int, shape: NoiseShape) -> NoiseAtom:
    """The atom at time index t. Cost does not grow with |t|."""
    if t < 0:
        words = _words_block(seed, replicate, _PAST, -t - 1, 1, shape)
    else:
        words = _words_block(seed, replicate, _FUTURE, t, 1, shape)
    return atom_from_words(words[0], shape)


def past_atoms(seed: int, replicate: int, depth: int, shape: NoiseShape) -> list[NoiseAtom]:
    """Atoms for t = -depth..-1 in time order (element 0 is the oldest)."""
    block = past_word_block(seed, replicate, depth, shape)
    return [atom_from_words(row, shape) for row in block]


def future_atoms(seed: int, replicate: int, start: int, count: int, shape: NoiseShape) -> list[NoiseAtom]:
    """Atoms for t = start..start+count-1, start >= 0."""
    block = future_word_block(seed, replicate, start, count, shape)
    return [atom_from_words(row, shape) for row in block]


def stream_at(seed: int, t: int, replicate: int = 0, purpose: int | str = 0) -> Generator:
    """Open-ended generator bound to (seed, t, replicate, purpose).

    For consumers whose draw count is data-dependent (rejection loops, the
    level-set walk of the slice sampler). Re-deriving the stream replays it
    from the start, so a deeper backward pass sees the same sequence at the
    same index.
    """
    return Generator(Philox(key=_key128(_TAG_STREAM, seed, replicate, t, purpose)))
