"""Model zoo: update rules, declared structure, and their brute-force oracles."""
from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from perfectsample.chain import exact_stationary
from perfectsample.models import (
    MixtureSetup,
    default_mixture_setup,
    exp_decreasing,
    ladder_walk,
    mixture_alpha_cftp,
    mixture_alpha_from_atom,
    mixture_fixture_data,
    mixture_latent_chain,
    mixture_latent_spec,
    mixture_posterior_cdf,
    normal_density,
    three_state_walk,
)
from perfectsample.noise import NoiseAtom, noise_at, past_atoms


def coin(b: int) -> NoiseAtom:
    return NoiseAtom(bernoullis=(int(b),))


# ---------------------------------------------------------------------------
# ladder walk


def test_ladder_step_rules():
    model = ladder_walk(0.5)
    assert model.step(4.0, coin(1)) == 4.0     # ceiling holds
    assert model.step(4.0, coin(0)) == 2.0
    assert model.step(0.25, coin(0)) == 0.25   # floor holds
    assert model.step(0.25, coin(1)) == 0.5
    assert model.step(0.5, coin(1)) == 2.0
    assert model.step(2.0, coin(0)) == 0.5


def test_ladder_matrix_is_the_step_law():
    p = 0.3
    spec = ladder_walk(p).chain_spec
    expected = np.array([
        [0.7, 0.3, 0.0, 0.0],
        [0.7, 0.0, 0.3, 0.0],
        [0.0, 0.7, 0.0, 0.3],
        [0.0, 0.0, 0.7, 0.3],
    ])
    assert np.allclose(spec.matrix, expected, atol=0.0)


def test_ladder_rejects_degenerate_p():
    with pytest.raises(ValueError):
        ladder_walk(0.0)
    with pytest.raises(ValueError):
        ladder_walk(1.0)


@given(st.lists(st.integers(min_value=0, max_value=1), min_size=1, max_size=30))
@settings(max_examples=80, deadline=None)
def test_ladder_is_monotone_along_any_coin_sequence(bits):
    # shared coins keep every dominated pair dominated, step after step
    model = ladder_walk(0.5)
    states = list(model.states)
    for b in bits:
        states = [model.step(x, coin(b)) for x in states]
        assert all(a <= c for a, c in zip(states, states[1:]))


# ---------------------------------------------------------------------------
# 3-state walk


def test_walk3_matrix_rows():
    p = 0.4
    spec = three_state_walk(p).chain_spec
    expected = np.array([
        [p, 1 - p, 0.0],
        [0.0, p, 1 - p],
        [p, 0.0, 1 - p],
    ])
    assert np.allclose(spec.matrix, expected, atol=0.0)


def test_walk3_is_not_monotone_in_the_natural_order():
    # the top state falls to the bottom on the coin that holds the others
    model = three_state_walk(0.5)
    assert model.step(0.25, coin(1)) == 0.25
    assert model.step(0.5, coin(1)) == 0.5
    assert model.step(2.0, coin(1)) == 0.25
    assert model.order is None


def test_walk3_bounding_rows_equal_pointwise_unions():
    model = three_state_walk(0.5)
    sets = [
        frozenset({0.25, 0.5}),
        frozenset({0.5, 2.0}),
        frozenset({0.25, 2.0}),
        frozenset({0.25, 0.5, 2.0}),
        frozenset({0.25}),
        frozenset({0.5}),
        frozenset({2.0}),
    ]
    for y in sets:
        for b in (0, 1):
            image = frozenset(model.step(x, coin(b)) for x in y)
            got = model.bounding_update(y, coin(b))
            assert got == image, f"set {set(y)} coin {b}"


# ---------------------------------------------------------------------------
# mixture augmentation


def test_fixture_data_is_stable():
    data = mixture_fixture_data()
    assert data.shape == (10,)
    assert np.array_equal(data, mixture_fixture_data())


def test_alpha_draw_with_equal_slots_is_a_count_ratio():
    n = 10
    atom = NoiseAtom(exponentials=(0.7,) * (n + 2))
    for l in range(n + 1):
        alpha = mixture_alpha_from_atom(l, atom, n)
        assert alpha == pytest.approx((n + 1 - l) / (n + 2), rel=1e-12)


def test_alpha_draw_needs_full_slot_count():
    with pytest.raises(ValueError):
        mixture_alpha_from_atom(0, NoiseAtom(exponentials=(1.0, 2.0)), 10)


def test_alpha_draw_mean_at_empty_allocation():
    n = 10
    model = mixture_latent_chain()
    draws = np.empty(100_000)
    for r in range(len(draws)):
        atom = noise_at(62, 0, r, model.noise_shape)
        draws[r] = mixture_alpha_from_atom(0, atom, n)
    mean = (n + 1) / (n + 2)
    sd = np.sqrt(mean * (1 - mean) / (n + 3))
    assert abs(draws.mean() - mean) <= 3.0 * sd / np.sqrt(len(draws))


def test_alpha_draw_is_beta_distributed():
    n, l = 10, 4
    model = mixture_latent_chain()
    draws = np.empty(100_000)
    for r in range(len(draws)):
        atom = noise_at(63, 0, r, model.noise_shape)
        draws[r] = mixture_alpha_from_atom(l, atom, n)
    p = stats.kstest(draws, stats.beta(n + 1 - l, l + 1).cdf).pvalue
    assert p > 0.001


def test_latent_step_saturates_when_components_agree():
    # equal component densities and zero-threshold uniforms allocate everything
    data = np.zeros(6)
    f = normal_density(0.0)
    setup = MixtureSetup(data, f, f)
    model = mixture_latent_chain(setup)
    atom = NoiseAtom(uniforms=(0.0,) * 6, exponentials=(1.0,) * 8)
    for l in range(7):
        assert model.step(l, atom) == 6


def test_latent_step_is_monotone_in_the_count():
    model = mixture_latent_chain()
    n = 10
    for r in range(1000):
        atom = noise_at(64, 0, r, model.noise_shape)
        outs = [model.step(l, atom) for l in range(n + 1)]
        assert all(a <= b for a, b in zip(outs, outs[1:]))


def test_latent_step_equals_two_stage_simulation():
    # draw alpha from the atom, then re-threshold memberships by hand
    setup = default_mixture_setup()
    model = mixture_latent_chain(setup)
    d0, d1 = setup.density_values()
    n = setup.n
    for r in range(200):
        atom = noise_at(65, 0, r, model.noise_shape)
        for l in (0, 3, 7, 10):
            alpha = mixture_alpha_from_atom(l, atom, n)
            probs = (1 - alpha) * d1 / (alpha * d0 + (1 - alpha) * d1)
            direct = int(np.sum(np.asarray(atom.uniforms) <= probs))
            assert model.step(l, atom) == direct


def test_latent_transition_matrix_matches_the_step_law():
    # quadrature rows vs empirical one-step frequencies of the SRS
    setup = default_mixture_setup()
    model = mixture_latent_chain(setup)
    spec = mixture_latent_spec(setup)
    n_draws = 20_000
    for start in (0, 5, 10):
        counts = np.zeros(spec.n)
        for r in range(n_draws):
            atom = noise_at(900 + start, 0, r, model.noise_shape)
            counts[model.step(start, atom)] += 1
        freq = counts / n_draws
        row = spec.matrix[start]
        se = np.sqrt(row * (1.0 - row) / n_draws)
        assert np.all(np.abs(freq - row) <= 3.0 * se + 1e-6)


def test_perfect_alpha_draws_match_grid_posterior():
    setup = default_mixture_setup()
    draws = np.array([mixture_alpha_cftp(setup, seed=12, replicate=r)[0] for r in range(10_000)])
    p = stats.kstest(draws, mixture_posterior_cdf(setup)).pvalue
    assert p > 0.001


def test_latent_chain_stationary_law_matches_cftp_counts():
    setup = default_mixture_setup()
    oracle = exact_stationary(mixture_latent_spec(setup))
    counts = np.zeros(setup.n + 1)
    for r in range(10_000):
        _, l, _ = mixture_alpha_cftp(setup, seed=13, replicate=r)
        counts[l] += 1
    # merge the vanishing left tail so expected cell counts stay above 5
    probs = oracle.pi.copy()
    keep = probs * counts.sum() >= 5.0
    first = int(np.argmax(keep))
    merged_counts = np.concatenate([[counts[: first + 1].sum()], counts[first + 1 :]])
    merged_probs = np.concatenate([[probs[: first + 1].sum()], probs[first + 1 :]])
    stat = float(((merged_counts - merged_probs * counts.sum()) ** 2 / (merged_probs * counts.sum())).sum())
    p = float(stats.chi2.sf(stat, len(merged_counts) - 1))
    assert p > 0.001


# ---------------------------------------------------------------------------
# decreasing density


def test_decreasing_density_inverse_round_trip():
    dens = exp_decreasing(3.0)
    ys = np.linspace(1e-6, 3.0 - 1e-6, 500)
    for y in ys:
        assert dens.f_inv(dens.f(y)) == pytest.approx(y, abs=1e-12)


def test_superlevel_interval_endpoint():
    dens = exp_decreasing(3.0)
    assert dens.superlevel_upper(1.0) == pytest.approx(0.0, abs=1e-12)
    assert dens.superlevel_upper(np.exp(-1.5)) == pytest.approx(1.5, rel=1e-12)
    # thresholds below the density minimum open the whole support
    assert dens.superlevel_upper(np.exp(-3.0) / 2) == 3.0
