"""Coupling from the past with binary back-off.

All three variants share the same skeleton: pick a depth T, run coupled paths
from time -T to 0 using the atoms pinned to those time indices, and if the
paths have not merged by time 0, double T and try again. The atoms at a given
index never change between attempts; deeper runs only prepend older noise.
Coalescence always means exact state equality.

Variants differ in what they track:

* cftp_bruteforce  one path per state of a finite space
* cftp_monotone    only the paths from the top and bottom of a declared order
* cftp_bounding    one set-valued path contracted by the model's bounding map

Atom sources: by default atoms come off the keyed grid for (seed, replicate);
a FixedAtomSource replays an explicit sequence instead, which is how the
hand-worked traces and the CLI's --atoms flag drive the machinery.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .chain import RecursionModel, State, states_equal
from .noise import NoiseAtom, NoiseShape, past_atoms

DEFAULT_TMAX = 2 ** 20


class NoCoalescenceError(RuntimeError):
    """Paths failed to merge by the schedule's depth cap."""


class MonotonicityError(RuntimeError):
    """A step broke the declared order; the coupling is not monotone."""


@dataclass(frozen=True)
class BackoffSchedule:
    """Doubling depths 1, 2, 4, ..., tmax."""

    tmax: int = DEFAULT_TMAX

    def __post_init__(self):
        if self.tmax < 1 or (self.tmax & (self.tmax - 1)) != 0:
            raise ValueError("tmax must be a power of two >= 1")

    def depths(self):
        d = 1
        while d <= self.tmax:
            yield d
            d *= 2


@dataclass(frozen=True)
class CoalescenceCertificate:
    """What a successful run proves: merged by `coalesced_within` (a time
    index <= 0) on the attempt of depth `depth`, after `map_evaluations`
    update applications across all attempts."""

    depth: int
    coalesced_within: int
    map_evaluations: int


class KeyedAtomSource:
    """Atoms off the (seed, replicate) grid; the production path."""

    max_depth = None

    def __init__(self, seed: int, replicate: int = 0):
        self.seed = seed
        self.replicate = replicate

    def depth_atoms(self, depth: int, shape: NoiseShape) -> list[NoiseAtom]:
        return past_atoms(self.seed, self.replicate, depth, shape)


class FixedAtomSource:
    """Replays an explicit atom sequence for t = -len..-1 (oldest first)."""

    def __init__(self, atoms: Sequence[NoiseAtom]):
        self.atoms = list(atoms)
        self.max_depth = len(self.atoms)

    def depth_atoms(self, depth: int, shape: NoiseShape) -> list[NoiseAtom]:
        if depth > len(self.atoms):
            raise ValueError("fixed source exhausted")
        return self.atoms[len(self.atoms) - depth :]


def bernoulli_atoms(bits: Sequence[int]) -> list[NoiseAtom]:
    """Convenience for coin-driven models: bits oldest-first."""
    return [NoiseAtom(bernoullis=(int(b),)) for b in bits]


def _source(seed, replicate, source):
    return KeyedAtomSource(seed, replicate) if source is None else source


def _schedule_depths(schedule: BackoffSchedule | None, source):
    sched = schedule or BackoffSchedule()
    for d in sched.depths():
        if source.max_depth is not None and d > source.max_depth:
            return
        yield d


def cftp_bruteforce(model: RecursionModel, seed: int = 0, replicate: int = 0,
                    schedule: BackoffSchedule | None = None, source=None):
    """CFTP tracking one path per state. Needs only a finite enumeration."""
    if model.states is None:
        raise ValueError("brute-force CFTP needs a finite state enumeration")
    source = _source(seed, replicate, source)
    evals = 0
    deepest = 0
    for depth in _schedule_depths(schedule, source):
        deepest = depth
        atoms = source.depth_atoms(depth, model.noise_shape)
        xs = list(model.states)
        merged_at = None
        for k, atom in enumerate(atoms):
            xs = [model.step(x, atom) for x in xs]
            evals += len(xs)
            if merged_at is None and all(states_equal(xs[0], x) for x in xs[1:]):
                merged_at = -depth + k + 1
        if merged_at is not None:
            return xs[0], CoalescenceCertificate(depth, merged_at, evals)
    raise NoCoalescenceError(f"no coalescence by depth cap {deepest}")


def cftp_monotone(model: RecursionModel, seed: int = 0, replicate: int = 0,
                  schedule: BackoffSchedule | None = None, source=None):
    """CFTP tracking only the two extremal paths of a monotone model.

    Audits the order at every step: the coupling must send the bottom path
    below the top path, otherwise the sandwich argument is void and we stop
    rather than return a silently biased draw.
    """
    if model.order is None:
        raise ValueError("monotone CFTP needs a declared order")
    order = model.order
    source = _source(seed, replicate, source)
    evals = 0
    deepest = 0
    for depth in _schedule_depths(schedule, source):
        deepest = depth
        atoms = source.depth_atoms(depth, model.noise_shape)
        lo, hi = order.min_state, order.max_state
        merged_at = None
        for k, atom in enumerate(atoms):
            lo_next, hi_next = model.step(lo, atom), model.step(hi, atom)
            evals += 2
            if not order.leq(lo_next, hi_next):
                raise MonotonicityError(
                    f"order violated stepping ({lo!r}, {hi!r}) with atom {atom!r}"
                )
            lo, hi = lo_next, hi_next
            if merged_at is None and states_equal(lo, hi):
                merged_at = -depth + k + 1
        if merged_at is not None:
            return hi, CoalescenceCertificate(depth, merged_at, evals)
    raise NoCoalescenceError(f"no coalescence by depth cap {deepest}")


def cftp_bounding(model: RecursionModel, seed: int = 0, replicate: int = 0,
                  schedule: BackoffSchedule | None = None, source=None,
                  audit: bool = True):
    """CFTP on a set-valued chain that contains every pointwise path.

    With audit=True (cheap on the toy spaces this is for), every pointwise
    path is run alongside and membership Y_t ∋ X_t is asserted at each step,
    so an unsound bounding map fails loudly instead of biasing draws.
    """
    if model.bounding_update is None:
        raise ValueError("bounding CFTP needs a bounding update")
    if model.states is None:
        raise ValueError("bounding CFTP needs the finite enumeration")
    source = _source(seed, replicate, source)
    evals = 0
    deepest = 0
    for depth in _schedule_depths(schedule, source):
        deepest = depth
        atoms = source.depth_atoms(depth, model.noise_shape)
        y = frozenset(model.states)
        xs = list(model.states) if audit else None
        merged_at = None
        for k, atom in enumerate(atoms):
            y = model.bounding_update(y, atom)
            evals += 1
            if audit:
                xs = [model.step(x, atom) for x in xs]
                evals += len(xs)
                for x in xs:
                    if x not in y:
                        raise RuntimeError(
                            f"bounding set {set(y)!r} lost path value {x!r}"
                        )
            if merged_at is None and len(y) == 1:
                merged_at = -depth + k + 1
        if len(y) == 1:
            (value,) = y
            return value, CoalescenceCertificate(depth, merged_at, evals)
    raise NoCoalescenceError(f"no coalescence by depth cap {deepest}")


def backward_trace(model: RecursionModel, atoms: Sequence[NoiseAtom],
                   starts: Sequence[State] | None = None):
    """Paths from every start through a fixed atom sequence, for plots and the
    trace CLI. Returns (times, {start: [state at each time]})."""
    if starts is None:
        if model.states is None:
            raise ValueError("no starts given and model has no enumeration")
        starts = model.states
    depth = len(atoms)
    times = list(range(-depth, 1))
    paths = {}
    for s in starts:
        vals = [s]
        x = s
        for atom in atoms:
            x = model.step(x, atom)
            vals.append(x)
        paths[s] = vals
    return times, paths


def bounding_trace(model: RecursionModel, atoms: Sequence[NoiseAtom]):
    """Set-valued path from the full space through a fixed atom sequence."""
    if model.bounding_update is None:
        raise ValueError("model has no bounding update")
    y = frozenset(model.states)
    sets = [y]
    for atom in atoms:
        y = model.bounding_update(y, atom)
        sets.append(y)
    return list(range(-len(atoms), 1)), sets
