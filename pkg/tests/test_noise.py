"""Keyed noise: determinism, slot semantics, independence, and reuse layout."""
from __future__ import annotations

import time

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import ndtr

from perfectsample.noise import (
    NoiseAtom,
    NoiseShape,
    NoiseShapeError,
    atom_from_words,
    future_atoms,
    future_word_block,
    noise_at,
    past_atoms,
    past_word_block,
    stream_at,
    subkey,
)

SHAPE_MIXED = NoiseShape(uniforms=2, normals=1, bernoullis=1, exponentials=1, bernoulli_p=0.3)


def test_same_key_is_bit_identical():
    a = noise_at(12345, -7, 3, SHAPE_MIXED)
    b = noise_at(12345, -7, 3, SHAPE_MIXED)
    assert a == b
    c = noise_at(12345, 7, 3, SHAPE_MIXED)
    d = noise_at(12345, 7, 3, SHAPE_MIXED)
    assert c == d


def test_distinct_keys_differ():
    base = noise_at(1, -1, 0, SHAPE_MIXED)
    assert noise_at(2, -1, 0, SHAPE_MIXED) != base
    assert noise_at(1, -2, 0, SHAPE_MIXED) != base
    assert noise_at(1, -1, 1, SHAPE_MIXED) != base
    assert noise_at(1, 1, 0, SHAPE_MIXED) != base


def test_adjacent_time_indices_uncorrelated():
    # empirical correlation across seeds of the uniforms at t=-1 and t=-2
    shape = NoiseShape(uniforms=1)
    n = 100_000
    u1 = np.empty(n)
    u2 = np.empty(n)
    for s in range(n):
        u1[s] = noise_at(s, -1, 0, shape).uniforms[0]
        u2[s] = noise_at(s, -2, 0, shape).uniforms[0]
    corr = float(np.corrcoef(u1, u2)[0, 1])
    assert abs(corr) < 0.02
    # and each margin is uniform to first order
    assert abs(u1.mean() - 0.5) < 0.005
    assert abs(u2.mean() - 0.5) < 0.005


def test_distant_index_is_constant_time():
    shape = NoiseShape(uniforms=1)
    noise_at(0, -1, 0, shape)  # warm any lazy setup
    t0 = time.perf_counter()
    far = noise_at(0, -(10 ** 6), 0, shape)
    elapsed = time.perf_counter() - t0
    assert 0.0 < far.uniforms[0] < 1.0
    # generating 1e6 intermediate atoms would take seconds, not milliseconds
    assert elapsed < 0.05
    # and it agrees with the grid block covering that index
    block = past_word_block(0, 0, 10 ** 6, shape)
    assert block[0, 0] == far.uniforms[0]


def test_slot_semantics_derive_from_uniform_words():
    words = np.array([0.25, 0.75, 0.9, 0.1, 0.5])
    atom = atom_from_words(words, SHAPE_MIXED)
    assert atom.uniforms == (0.25, 0.75)
    # normal slot is the inverse standard normal CDF of its word
    assert ndtr(atom.normals[0]) == pytest.approx(0.9, abs=1e-12)
    assert atom.bernoullis == (1,)  # 0.1 < p = 0.3
    assert atom.exponentials[0] == pytest.approx(-np.log1p(-0.5), abs=0.0)


def test_bernoulli_threshold_uses_dedicated_word():
    words = np.array([0.42])
    hot = atom_from_words(words, NoiseShape(bernoullis=1, bernoulli_p=0.5))
    cold = atom_from_words(words, NoiseShape(bernoullis=1, bernoulli_p=0.3))
    assert hot.bernoullis == (1,)
    assert cold.bernoullis == (0,)


def test_uniform_slots_never_zero():
    # the guard maps an exact 0.0 word to the smallest positive grid value
    shape = NoiseShape(uniforms=4, exponentials=2)
    for t in range(-50, 50):
        a = noise_at(9, t, 0, shape)
        assert all(0.0 < u < 1.0 for u in a.uniforms)
        assert all(e > 0.0 for e in a.exponentials)


def test_past_block_suffix_reuse():
    # the depth-T block is the suffix of the depth-2T block, bit for bit
    shape = NoiseShape(uniforms=3)
    for depth in (1, 2, 4, 8, 64):
        shallow = past_word_block(31, 2, depth, shape)
        deep = past_word_block(31, 2, 2 * depth, shape)
        assert np.array_equal(deep[depth:], shallow)


def test_past_atoms_oldest_first():
    shape = NoiseShape(uniforms=1)
    atoms = past_atoms(5, 0, 4, shape)
    assert len(atoms) == 4
    assert atoms[-1] == noise_at(5, -1, 0, shape)
    assert atoms[0] == noise_at(5, -4, 0, shape)


def test_future_block_matches_pointwise_atoms():
    shape = NoiseShape(uniforms=2, normals=1)
    block = future_atoms(17, 1, 5, 6, shape)
    for i, atom in enumerate(block):
        assert atom == noise_at(17, 5 + i, 1, shape)
    with pytest.raises(ValueError):
        future_word_block(17, 1, -1, 3, shape)


def test_stream_replays_and_separates_purposes():
    a = stream_at(3, -2, 0, purpose="walk").random(8)
    b = stream_at(3, -2, 0, purpose="walk").random(8)
    assert np.array_equal(a, b)
    c = stream_at(3, -2, 0, purpose="other").random(8)
    assert not np.array_equal(a, c)


def test_subkey_separates_children_from_parent():
    shape = NoiseShape(uniforms=1)
    child = subkey(11, "pilot")
    assert child != 11
    assert subkey(11, "pilot") == child
    assert subkey(11, "pilot", 2) != subkey(11, "pilot", 3)
    assert noise_at(child, -1, 0, shape) != noise_at(11, -1, 0, shape)


def test_shape_validation():
    with pytest.raises(NoiseShapeError):
        NoiseShape()  # no slots
    with pytest.raises(NoiseShapeError):
        NoiseShape(bernoullis=1)  # missing p
    with pytest.raises(NoiseShapeError):
        NoiseShape(uniforms=1, bernoulli_p=0.5)  # p without coin slots
    with pytest.raises(NoiseShapeError):
        NoiseShape(uniforms=-1, normals=2)


def test_atom_shape_matching():
    atom = NoiseAtom(uniforms=(0.5,), bernoullis=(1,))
    assert atom.matches(NoiseShape(uniforms=1, bernoullis=1, bernoulli_p=0.5))
    assert not atom.matches(NoiseShape(uniforms=1))


@given(
    seed=st.integers(min_value=0, max_value=2 ** 63 - 1),
    t=st.integers(min_value=-(2 ** 40), max_value=2 ** 40),
    replicate=st.integers(min_value=0, max_value=2 ** 20),
)
@settings(max_examples=60, deadline=None)
def test_replay_determinism_property(seed, t, replicate):
    shape = NoiseShape(uniforms=1, bernoullis=1, bernoulli_p=0.25)
    assert noise_at(seed, t, replicate, shape) == noise_at(seed, t, replicate, shape)


@given(st.integers(min_value=1, max_value=9), st.integers(min_value=0, max_value=3))
@settings(max_examples=30, deadline=None)
def test_stride_padding_keeps_grid_stable_property(uniforms, normals):
    # atoms on the padded word grid never alias across time indices
    shape = NoiseShape(uniforms=uniforms, normals=normals)
    a = noise_at(7, -3, 0, shape)
    b = noise_at(7, -4, 0, shape)
    assert a != b
