"""Fill's interruptible perfect sampler, plus the two-block Gibbs reversal
it generalizes.

The finite monotone version runs in two stages. Stage one draws Z from an
arbitrary starting law, then simulates the time-reversed kernel T steps down
to a candidate X_0. Stage two couples forward paths from every state through
the noise conditioned on reproducing the realized path; the candidate is
accepted exactly when the extremal paths meet by time T. Rejection is a
normal outcome - the draw is abandoned wholesale and a fresh attempt made -
which is what makes the sampler interruptible: accepted draws carry no
dependence on how many attempts were thrown away.

The Gibbs half of the module is the continuous warm-up for the same idea on
a two-block sampler of a bimodal density: closed-form reverse steps and exact
recovery of the update noise from a realized path.
"""
from __future__ import annotations

from dataclasses import dataclass
from math import sqrt

import numpy as np

from .chain import FiniteChainSpec, RecursionModel, exact_stationary, states_equal
from .cftp import NoCoalescenceError
from .noise import NoiseAtom, stream_at


def reverse_kernel(spec: FiniteChainSpec) -> FiniteChainSpec:
    """Time-reversed transition matrix: row z gives the law of the state a
    stationary chain sat in one step before z."""
    pi = exact_stationary(spec).pi
    if np.any(pi <= 0):
        raise ValueError("stationary law must be strictly positive to reverse")
    rev = spec.matrix.T * pi[None, :] / pi[:, None]
    # rev[z, x] = k(z | x) pi(x) / pi(z); rows sum to 1 because pi is stationary,
    # up to the residual pi itself carries, which gets scrubbed off here
    drift = np.max(np.abs(rev.sum(axis=1) - 1.0))
    if drift > 1e-9:
        raise ValueError(f"reversed rows drift {drift:.2e} from 1; pi is suspect")
    rev /= rev.sum(axis=1, keepdims=True)
    return FiniteChainSpec(spec.labels, rev)


def conditioned_noise_law(model: RecursionModel, src, dst):
    """Law of a coin atom given that it drives src -> dst: the prior restricted
    to the bits realizing the transition. Returns ((bit, prob), ...)."""
    shape = model.noise_shape
    if shape.words != 1 or shape.bernoullis != 1:
        raise ValueError("conditioned noise implemented for single-coin models")
    p = shape.bernoulli_p
    weights = []
    for bit, w in ((0, 1.0 - p), (1, p)):
        if w > 0 and states_equal(model.step(src, NoiseAtom(bernoullis=(bit,))), dst):
            weights.append((bit, w))
    if not weights:
        raise ValueError(f"transition {src!r} -> {dst!r} has no realizing atom")
    total = sum(w for _, w in weights)
    return tuple((bit, w / total) for bit, w in weights)


@dataclass(frozen=True)
class FillResult:
    accepted: bool
    value: object          # candidate X_0; meaningful when accepted
    depth: int


def _inverse_cdf(row: np.ndarray, u: float) -> int:
    return int(min(np.searchsorted(np.cumsum(row), u, side="right"), len(row) - 1))


def fill_sample(model: RecursionModel, depth: int, seed: int, replicate: int = 0,
                attempt: int = 0, start_law=None) -> FillResult:
    """One attempt of the two-stage sampler at a fixed horizon `depth`.

    start_law defaults to uniform over the enumeration. One uniform is
    consumed per stage-two step whether or not the conditioned law is a point
    mass, so the stream layout does not shift with the path.
    """
    if model.order is None or model.chain_spec is None:
        raise ValueError("fill sampler needs a monotone model with a chain spec")
    spec = model.chain_spec
    stream = stream_at(seed, 0, replicate, purpose=("fill", attempt))

    if start_law is None:
        start_law = np.full(spec.n, 1.0 / spec.n)
    rev = reverse_kernel(spec)

    # stage one: Z = X_T, then reversed steps down to the candidate X_0
    z = _inverse_cdf(np.asarray(start_law, dtype=float), stream.random())
    path = [z]
    for _ in range(depth):
        z = _inverse_cdf(rev.matrix[z], stream.random())
        path.append(z)
    path.reverse()                      # path[t] = index of X_t

    # stage two: couple all states forward through the conditioned noise
    lo, hi = model.order.min_state, model.order.max_state
    for t in range(depth):
        src, dst = spec.labels[path[t]], spec.labels[path[t + 1]]
        law = conditioned_noise_law(model, src, dst)
        u = stream.random()
        acc = 0.0
        bit = law[-1][0]
        for b, w in law:
            acc += w
            if u < acc:
                bit = b
                break
        atom = NoiseAtom(bernoullis=(bit,))
        if not states_equal(model.step(src, atom), dst):
            raise RuntimeError("conditioned atom failed to reproduce the path")
        lo, hi = model.step(lo, atom), model.step(hi, atom)

    return FillResult(accepted=states_equal(lo, hi), value=spec.labels[path[0]],
                      depth=depth)


def fill_draw(model: RecursionModel, seed: int, replicate: int = 0,
              depth0: int = 16, max_attempts: int = 40):
    """Attempt until acceptance, doubling the horizon after each rejection.
    Returns (value, attempts_used, depth_used)."""
    depth = depth0
    for attempt in range(max_attempts):
        res = fill_sample(model, depth, seed, replicate, attempt=attempt)
        if res.accepted:
            return res.value, attempt + 1, depth
        depth *= 2
    raise NoCoalescenceError(f"no acceptance in {max_attempts} attempts")


# ---------------------------------------------------------------------------
# two-block Gibbs for a bimodal density, with exact noise recovery
#
# target: exp(-(8 x^2 y^2 + x^2 + y^2 - 4xy - 8x - 8y) / 2), whose two full
# conditionals are both normal with mean (2c + 4)/(8c^2 + 1) and variance
# 1/(8c^2 + 1) given the other coordinate c.


def _cond_mean(c: float) -> float:
    return (2.0 * c + 4.0) / (8.0 * c * c + 1.0)


def _cond_scale(c: float) -> float:
    return 1.0 / sqrt(8.0 * c * c + 1.0)


def gibbs_forward_step(x: float, y: float, u: float, w: float) -> tuple[float, float]:
    """x-update then y-update, each a draw from its normal full conditional
    written as mean + noise * scale."""
    x1 = _cond_mean(y) + u * _cond_scale(y)
    y1 = _cond_mean(x1) + w * _cond_scale(x1)
    return x1, y1


def gibbs_reverse_step(x1: float, y1: float, z: float, v: float) -> tuple[float, float]:
    """One step of the reversed sweep: the y-update runs first (driven by z,
    conditioning on the later x), then the x-update (driven by v)."""
    y0 = _cond_mean(x1) + z * _cond_scale(x1)
    x0 = _cond_mean(y0) + v * _cond_scale(y0)
    return x0, y0


def recover_gibbs_noise(path: np.ndarray) -> np.ndarray:
    """Invert the forward sweeps along a realized path.

    path has rows (x_t, y_t), t = 0..T. Row t-1 of the result holds the pair
    (u_t, w_t) that gibbs_forward_step consumed between t-1 and t; because
    each conditional is a location-scale normal, the inversion is exact.
    """
    path = np.asarray(path, dtype=float)
    out = np.empty((len(path) - 1, 2))
    for t in range(1, len(path)):
        x_prev, y_prev = path[t - 1]
        x, y = path[t]
        out[t - 1, 0] = (x - _cond_mean(y_prev)) / _cond_scale(y_prev)
        out[t - 1, 1] = (y - _cond_mean(x)) / _cond_scale(x)
    return out


def recover_gibbs_reverse_noise(path: np.ndarray) -> np.ndarray:
    """Noise pairs (z_t, v_t) the reversed sweep would need to walk the same
    path downward. Distinct from the forward pairs: the reversal conditions
    the y-update on the later x, not the earlier one."""
    path = np.asarray(path, dtype=float)
    out = np.empty((len(path) - 1, 2))
    for t in range(len(path) - 1):
        x, y = path[t]
        x_next = path[t + 1, 0]
        out[t, 0] = (y - _cond_mean(x_next)) / _cond_scale(x_next)
        out[t, 1] = (x - _cond_mean(y)) / _cond_scale(y)
    return out


def gibbs_forward_path(x0: float, y0: float, noise: np.ndarray) -> np.ndarray:
    """Roll the forward sweep along given (u, w) rows; returns the full path."""
    noise = np.asarray(noise, dtype=float)
    path = np.empty((len(noise) + 1, 2))
    path[0] = (x0, y0)
    x, y = x0, y0
    for t, (u, w) in enumerate(noise, start=1):
        x, y = gibbs_forward_step(x, y, u, w)
        path[t] = (x, y)
    return path
