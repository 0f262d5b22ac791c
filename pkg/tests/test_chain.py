"""Path composition and the exact finite-chain oracles."""
from __future__ import annotations

import numpy as np
import pytest
from scipy import stats

from perfectsample.chain import (
    ChainStructureError,
    FiniteChainSpec,
    RecursionModel,
    as_distribution,
    backward_compose,
    exact_stationary,
    exact_tv_at,
    forward_compose,
)
from perfectsample.models import ladder_walk, three_state_walk
from perfectsample.noise import NoiseAtom, NoiseShape, NoiseShapeError, past_atoms
from tests.conftest import chisq_pvalue


def echo_model() -> RecursionModel:
    """Degenerate chain whose update ignores the state: phi(x, xi) = xi."""
    return RecursionModel(
        name="echo",
        step=lambda x, atom: atom.uniforms[0],
        noise_shape=NoiseShape(uniforms=1),
    )


def uniform_atoms(values) -> list[NoiseAtom]:
    return [NoiseAtom(uniforms=(float(v),)) for v in values]


def coin_atoms(bits) -> list[NoiseAtom]:
    return [NoiseAtom(bernoullis=(int(b),)) for b in bits]


def test_forward_compose_on_state_free_update_returns_last_atom():
    atoms = uniform_atoms([0.1, 0.7, 0.4, 0.9])
    assert forward_compose(echo_model(), 0.5, atoms) == 0.9


def test_backward_compose_on_state_free_update_returns_first_atom():
    atoms = uniform_atoms([0.1, 0.7, 0.4, 0.9])
    assert backward_compose(echo_model(), 0.5, atoms) == 0.1


def test_empty_composition_returns_start():
    model = echo_model()
    assert forward_compose(model, 0.5, []) == 0.5
    assert backward_compose(model, 0.5, []) == 0.5


def test_single_atom_forward_equals_backward():
    model = ladder_walk(0.4)
    atom = coin_atoms([1])
    for x in model.states:
        assert forward_compose(model, x, atom) == backward_compose(model, x, atom)


def test_three_up_moves_climb_the_ladder():
    model = ladder_walk(0.7)
    assert forward_compose(model, 0.25, coin_atoms([1, 1, 1])) == 4.0


def test_compose_rejects_mismatched_atoms():
    model = ladder_walk(0.5)
    with pytest.raises(NoiseShapeError):
        forward_compose(model, 0.25, uniform_atoms([0.5]))


def test_forward_and_backward_laws_agree():
    # same i.i.d. atoms read in opposite orders: identical distribution
    model = ladder_walk(0.35)
    depth = 6
    n = 100_000
    labels = {s: i for i, s in enumerate(model.states)}
    fwd = np.zeros(4, dtype=int)
    bwd = np.zeros(4, dtype=int)
    for r in range(n):
        atoms = past_atoms(2024, r, depth, model.noise_shape)
        fwd[labels[forward_compose(model, 4.0, atoms)]] += 1
        bwd[labels[backward_compose(model, 4.0, atoms)]] += 1
    table = np.vstack([fwd, bwd])
    _, p, _, _ = stats.chi2_contingency(table)
    assert p > 0.001


def test_stationary_uniform_at_balanced_walk():
    oracle = exact_stationary(ladder_walk(0.5).chain_spec)
    assert np.allclose(oracle.pi, 0.25, atol=1e-10)


@pytest.mark.parametrize("p", [0.1, 0.3, 0.62])
def test_stationary_geometric_profile(p):
    # birth-death balance: pi proportional to (1, r, r^2, r^3) with r = p/(1-p)
    oracle = exact_stationary(ladder_walk(p).chain_spec)
    r = p / (1.0 - p)
    expected = np.array([1.0, r, r ** 2, r ** 3])
    expected /= expected.sum()
    assert np.allclose(oracle.pi, expected, atol=1e-10)


def test_stationary_matches_brute_force_power():
    spec = three_state_walk(0.3).chain_spec
    oracle = exact_stationary(spec)
    powered = np.linalg.matrix_power(spec.matrix, 4096)[0]
    assert np.allclose(oracle.pi, powered, atol=1e-9)
    assert np.allclose(oracle.pi @ spec.matrix, oracle.pi, atol=1e-12)


def test_reducible_chain_is_rejected():
    spec = FiniteChainSpec((0, 1), np.eye(2))
    with pytest.raises(ChainStructureError, match="reducible"):
        exact_stationary(spec)


def test_periodic_chain_is_rejected():
    flip = FiniteChainSpec((0, 1), np.array([[0.0, 1.0], [1.0, 0.0]]))
    with pytest.raises(ChainStructureError, match="periodic"):
        exact_stationary(flip)


def test_tv_zero_from_stationary_start():
    # pi itself carries the power-iteration residual, so "zero" means 1e-10
    spec = ladder_walk(0.3).chain_spec
    pi = exact_stationary(spec).pi
    for k in (0, 1, 5):
        assert exact_tv_at(spec, pi, k) == pytest.approx(0.0, abs=1e-10)


def test_tv_at_zero_steps_from_point_mass():
    spec = ladder_walk(0.3).chain_spec
    pi = exact_stationary(spec).pi
    for i, label in enumerate(spec.labels):
        assert exact_tv_at(spec, label, 0) == pytest.approx(1.0 - pi[i], abs=1e-12)


def test_tv_matches_direct_matrix_power():
    spec = ladder_walk(0.1).chain_spec
    pi = exact_stationary(spec).pi
    row = np.zeros(4)
    row[spec.index(4.0)] = 1.0
    marginal = row @ np.linalg.matrix_power(spec.matrix, 5)
    direct = 0.5 * np.abs(marginal - pi).sum()
    assert exact_tv_at(spec, 4.0, 5) == pytest.approx(direct, abs=1e-14)


def test_as_distribution_validates():
    spec = ladder_walk(0.5).chain_spec
    v = as_distribution(spec, 2.0)
    assert v.tolist() == [0.0, 0.0, 1.0, 0.0]
    with pytest.raises(ValueError):
        as_distribution(spec, [0.5, 0.5, 0.5, -0.5])
    with pytest.raises(ValueError):
        as_distribution(spec, [1.0, 0.0])


def test_spec_validation():
    with pytest.raises(ValueError, match="sum"):
        FiniteChainSpec((0, 1), np.array([[0.5, 0.4], [0.0, 1.0]]))
    with pytest.raises(ValueError, match="negative"):
        FiniteChainSpec((0, 1), np.array([[1.5, -0.5], [0.0, 1.0]]))
    with pytest.raises(ValueError, match="labels"):
        FiniteChainSpec((0, 0), np.eye(2))


@pytest.mark.parametrize("model_fn,p", [(ladder_walk, 0.3), (three_state_walk, 0.45)])
def test_one_step_frequencies_match_matrix_rows(model_fn, p):
    # the declared transition matrix is the law of the SRS, row by row
    model = model_fn(p)
    spec = model.chain_spec
    n = 100_000
    for i, start in enumerate(spec.labels):
        atoms = past_atoms(500 + i, 0, n, model.noise_shape)
        counts = np.zeros(spec.n)
        for atom in atoms:
            counts[spec.index(model.step(start, atom))] += 1
        freq = counts / n
        se = np.sqrt(spec.matrix[i] * (1.0 - spec.matrix[i]) / n)
        assert np.all(np.abs(freq - spec.matrix[i]) <= 3.0 * se + 1e-12)
