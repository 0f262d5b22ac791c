"""Read-once CFTP: block coalescence, block-size choice, and the sample stream."""
from __future__ import annotations

import numpy as np
import pytest
from scipy import stats

from perfectsample.chain import Order, RecursionModel, exact_stationary
from perfectsample.cftp import bernoulli_atoms, cftp_bruteforce
from perfectsample.models import ladder_walk, three_state_walk
from perfectsample.noise import NoiseAtom, NoiseShape, future_atoms
from perfectsample.readonce import BlockSpec, block_coalesces, choose_block_size, ro_cftp_stream
from tests.conftest import chisq_pvalue


def single_state_model() -> RecursionModel:
    return RecursionModel(
        name="point",
        step=lambda x, atom: x,
        noise_shape=NoiseShape(uniforms=1),
        states=("only",),
    )


def swap_model() -> RecursionModel:
    """Two-state chain whose update is a permutation for either coin value:
    injective per atom, so no single step can merge distinct states."""

    def step(x: int, atom: NoiseAtom) -> int:
        return 1 - x if atom.bernoullis[0] else x

    return RecursionModel(
        name="swap",
        step=step,
        noise_shape=NoiseShape(bernoullis=1, bernoulli_p=0.5),
        states=(0, 1),
    )


def test_known_coalescent_block():
    model = ladder_walk(0.5)
    ok, value = block_coalesces(model, bernoulli_atoms([1, 1, 1, 0]))
    assert ok
    assert value == 2.0


def test_known_non_coalescent_blocks():
    model = ladder_walk(0.5)
    for bits in ([0], [1, 0], [1, 1]):
        ok, _ = block_coalesces(model, bernoulli_atoms(bits))
        assert not ok


def test_injective_updates_never_merge_in_one_step():
    model = swap_model()
    for bits in ([0], [1]):
        ok, _ = block_coalesces(model, bernoulli_atoms(bits))
        assert not ok


def test_single_state_block_always_coalesces():
    model = single_state_model()
    ok, value = block_coalesces(model, [NoiseAtom(uniforms=(0.5,))])
    assert ok
    assert value == "only"


def test_block_decision_agrees_between_extremal_and_exhaustive_tracking():
    # the monotone shortcut and the all-states check see the same blocks
    lad = ladder_walk(0.4)
    exhaustive = RecursionModel(
        name="ladder_all",
        step=lad.step,
        noise_shape=lad.noise_shape,
        states=lad.states,
    )
    for r in range(2000):
        atoms = future_atoms(7, r, 0, 6, lad.noise_shape)
        ok_fast, v_fast = block_coalesces(lad, atoms)
        ok_full, v_full = block_coalesces(exhaustive, atoms)
        assert ok_fast == ok_full
        if ok_fast:
            assert v_fast == v_full


def test_block_decision_is_a_pure_function_of_its_atoms():
    model = ladder_walk(0.5)
    atoms = future_atoms(9, 0, 24, 8, model.noise_shape)
    first = block_coalesces(model, atoms)
    # interleave unrelated work, then re-ask: identical answer
    block_coalesces(model, future_atoms(9, 1, 0, 8, model.noise_shape))
    assert block_coalesces(model, atoms) == first


def test_choose_block_size_single_state():
    spec = choose_block_size(single_state_model(), seed=1, n_pilot=100)
    assert spec.block_size == 1
    assert spec.coalescence_rate == 1.0


def test_choose_block_size_reaches_target():
    spec = choose_block_size(ladder_walk(0.5), seed=2, n_pilot=10_000)
    assert spec.coalescence_rate >= 0.5
    # pilot rate at the chosen size should be a fair estimate: re-measure on
    # an independent stream and compare within binomial error
    model = ladder_walk(0.5)
    hits = sum(
        block_coalesces(model, future_atoms(90210, r, 0, spec.block_size, model.noise_shape))[0]
        for r in range(10_000)
    )
    rate = hits / 10_000
    se = np.sqrt(rate * (1 - rate) / 10_000)
    assert abs(rate - spec.coalescence_rate) <= 4 * se + 0.01


def test_block_size_is_monotone_in_the_target():
    model = ladder_walk(0.5)
    loose = choose_block_size(model, seed=3, target=0.5, n_pilot=3000)
    tight = choose_block_size(model, seed=3, target=0.999, n_pilot=3000)
    assert tight.block_size > loose.block_size
    assert tight.coalescence_rate >= 0.999


def test_choose_block_size_validates_target():
    with pytest.raises(ValueError):
        choose_block_size(ladder_walk(0.5), seed=1, target=1.0)
    with pytest.raises(ValueError):
        choose_block_size(ladder_walk(0.5), seed=1, target=0.0)


def test_stream_on_single_state_chain():
    values, blocks = ro_cftp_stream(single_state_model(), BlockSpec(1, 1.0), seed=4, n=50)
    assert values == ["only"] * 50
    assert blocks == [1] * 50


def test_stream_matches_backward_sampler_law():
    model = ladder_walk(0.3)
    spec = choose_block_size(model, seed=5, n_pilot=5000)
    values, _ = ro_cftp_stream(model, spec, seed=5, n=20_000)
    labels = {s: i for i, s in enumerate(model.chain_spec.labels)}
    ro_counts = np.zeros(4)
    for v in values:
        ro_counts[labels[v]] += 1
    cftp_counts = np.zeros(4)
    for r in range(20_000):
        draw, _ = cftp_bruteforce(model, seed=6, replicate=r)
        cftp_counts[labels[draw]] += 1
    _, p, _, _ = stats.chi2_contingency(np.vstack([ro_counts, cftp_counts]))
    assert p > 0.001


def test_stream_law_matches_exact_stationary():
    model = three_state_walk(0.45)
    spec = choose_block_size(model, seed=7, n_pilot=5000)
    values, _ = ro_cftp_stream(model, spec, seed=7, n=20_000)
    oracle = exact_stationary(model.chain_spec)
    labels = {s: i for i, s in enumerate(model.chain_spec.labels)}
    counts = np.zeros(3)
    for v in values:
        counts[labels[v]] += 1
    assert chisq_pvalue(counts, oracle.pi) > 0.001


def test_block_counts_are_geometric():
    model = ladder_walk(0.5)
    spec = choose_block_size(model, seed=8, n_pilot=20_000)
    _, blocks = ro_cftp_stream(model, spec, seed=8, n=20_000)
    blocks = np.asarray(blocks, dtype=float)
    se = blocks.std(ddof=1) / np.sqrt(len(blocks))
    pilot_se = np.sqrt(spec.coalescence_rate * (1 - spec.coalescence_rate) / 20_000)
    slack = pilot_se / spec.coalescence_rate ** 2  # error 1/p inherits from p
    assert abs(blocks.mean() - 1.0 / spec.coalescence_rate) <= 3 * se + 3 * slack
    # full shape check against the geometric pmf, tail binned together
    kmax = 6
    counts = np.array([(blocks == k).sum() for k in range(1, kmax)] + [(blocks >= kmax).sum()], dtype=float)
    p = spec.coalescence_rate
    probs = np.array([p * (1 - p) ** (k - 1) for k in range(1, kmax)] + [(1 - p) ** (kmax - 1)])
    assert chisq_pvalue(counts, probs) > 0.001


def test_emitted_draws_are_uncorrelated():
    model = ladder_walk(0.5)
    spec = choose_block_size(model, seed=9, n_pilot=5000)
    values, _ = ro_cftp_stream(model, spec, seed=9, n=20_000)
    x = np.asarray(values, dtype=float)
    x = x - x.mean()
    lag1 = float(np.dot(x[:-1], x[1:]) / np.dot(x, x))
    assert abs(lag1) < 3.0 / np.sqrt(len(x))


def test_stream_is_replayable():
    model = ladder_walk(0.5)
    spec = BlockSpec(8, 0.8)
    assert ro_cftp_stream(model, spec, seed=10, n=200) == ro_cftp_stream(model, spec, seed=10, n=200)
    # replicates do not share noise
    other = ro_cftp_stream(model, spec, seed=10, n=200, replicate=1)
    assert other != ro_cftp_stream(model, spec, seed=10, n=200)
