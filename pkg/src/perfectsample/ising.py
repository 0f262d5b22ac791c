"""Square-lattice Ising model: heat-bath sweeps, monotone CFTP, and an
exact enumeration oracle for small lattices.

Free boundary, raster-scan heat bath: site (i, j) is set to +1 exactly when
its uniform is at or below 1/(1 + exp(-2 beta * neighbor_sum)). One sweep
consumes L*L uniforms, one per site in scan order, so a sweep is a single
atom of the keyed grid and the coupled top/bottom CFTP pass reads the same
words the single-chain sweep would.

The inner loops are jitted; the Moller chain upstream runs on the order of
1e5 embedded perfect draws, which pure Python cannot afford.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numba import njit
from scipy.special import logsumexp

from .cftp import BackoffSchedule, CoalescenceCertificate, NoCoalescenceError
from .chain import Order, RecursionModel
from .noise import NoiseShape, past_word_block


def ising_prob_table(beta: float) -> np.ndarray:
    """P(site -> +1) indexed by neighbor sum + 4."""
    return 1.0 / (1.0 + np.exp(-2.0 * beta * np.arange(-4, 5)))


@njit(cache=True)
def _sweep(spins, u_row, table, L):
    for i in range(L):
        for j in range(L):
            s = 0
            if i > 0:
                s += spins[i - 1, j]
            if i < L - 1:
                s += spins[i + 1, j]
            if j > 0:
                s += spins[i, j - 1]
            if j < L - 1:
                s += spins[i, j + 1]
            spins[i, j] = 1 if u_row[i * L + j] <= table[s + 4] else -1


@njit(cache=True)
def _cftp_pass(u_block, table, L, top, bot):
    """Run the coupled extremal chains through all sweeps of u_block.
    Returns the first sweep index after which they agree, or -1."""
    merged = -1
    for t in range(u_block.shape[0]):
        _sweep(top, u_block[t], table, L)
        _sweep(bot, u_block[t], table, L)
        if merged < 0:
            equal = True
            for i in range(L):
                for j in range(L):
                    if top[i, j] != bot[i, j]:
                        equal = False
            if equal:
                merged = t
    return merged


def ising_heatbath_sweep(config: np.ndarray, beta: float, uniforms: np.ndarray) -> np.ndarray:
    """One raster-scan heat-bath sweep; returns a new configuration."""
    spins = np.array(config, dtype=np.int8)
    L = spins.shape[0]
    u = np.ascontiguousarray(uniforms, dtype=np.float64).ravel()
    if len(u) != L * L:
        raise ValueError(f"need {L * L} uniforms, got {len(u)}")
    _sweep(spins, u, ising_prob_table(beta), L)
    return spins


def ising_noise_shape(L: int) -> NoiseShape:
    return NoiseShape(uniforms=L * L)


def ising_model(L: int, beta: float) -> RecursionModel:
    """The sweep chain as a recursion model: componentwise spin order with the
    all-minus and all-plus configurations as extremes. Exercised by the
    generic monotone machinery in tests; production CFTP uses the fused pass."""
    table = ising_prob_table(beta)

    def step(x: np.ndarray, atom) -> np.ndarray:
        spins = np.array(x, dtype=np.int8)
        _sweep(spins, np.asarray(atom.uniforms), table, L)
        return spins

    return RecursionModel(
        name=f"ising(L={L}, beta={beta})",
        step=step,
        noise_shape=ising_noise_shape(L),
        order=Order(
            leq=lambda a, b: bool(np.all(a <= b)),
            min_state=-np.ones((L, L), dtype=np.int8),
            max_state=np.ones((L, L), dtype=np.int8),
        ),
    )


def ising_cftp(L: int, beta: float, seed: int, replicate: int = 0,
               schedule: BackoffSchedule | None = None):
    """Perfect draw by monotone CFTP over sweeps. Returns (config, certificate)."""
    table = ising_prob_table(beta)
    shape = ising_noise_shape(L)
    sched = schedule or BackoffSchedule()
    evals = 0
    deepest = 0
    for depth in sched.depths():
        deepest = depth
        block = past_word_block(seed, replicate, depth, shape)
        top = np.ones((L, L), dtype=np.int8)
        bot = -np.ones((L, L), dtype=np.int8)
        merged = _cftp_pass(block, table, L, top, bot)
        evals += 2 * depth
        if merged >= 0:
            cert = CoalescenceCertificate(depth, -depth + merged + 1, evals)
            return top, cert
    raise NoCoalescenceError(f"no coalescence by depth cap {deepest}")


# ---------------------------------------------------------------------------
# exact enumeration oracle


def ising_bonds(L: int) -> list[tuple[int, int]]:
    """Nearest-neighbor site index pairs under free boundary, sites in
    raster order."""
    bonds = []
    for i in range(L):
        for j in range(L):
            if j < L - 1:
                bonds.append((i * L + j, i * L + j + 1))
            if i < L - 1:
                bonds.append((i * L + j, (i + 1) * L + j))
    return bonds


def ising_suff_stat(config: np.ndarray) -> int:
    """Sum of spin products over bonds; the exponent alongside beta."""
    s = np.asarray(config).ravel()
    return int(sum(int(s[a]) * int(s[b]) for a, b in ising_bonds(int(np.sqrt(s.size)))))


@lru_cache(maxsize=8)
def ising_state_tables(L: int):
    """Enumeration digest for L*L lattices (L <= 4): per-state bond sums,
    |magnetization| counts, and the spin matrix, reused by every oracle."""
    if L > 4:
        raise ValueError("enumeration limited to L <= 4")
    n = L * L
    codes = np.arange(1 << n, dtype=np.uint32)
    spins = (((codes[:, None] >> np.arange(n)) & 1) * 2 - 1).astype(np.int8)
    bond_sum = np.zeros(1 << n, dtype=np.int32)
    for a, b in ising_bonds(L):
        bond_sum += spins[:, a].astype(np.int32) * spins[:, b].astype(np.int32)
    abs_mag = np.abs(spins.sum(axis=1)).astype(np.int32)
    return bond_sum, abs_mag, spins


def ising_log_z(L: int, beta) -> np.ndarray | float:
    """log of the partition function at one beta or a vector of betas."""
    bond_sum, _, _ = ising_state_tables(L)
    b = np.atleast_1d(np.asarray(beta, dtype=float))
    out = logsumexp(b[:, None] * bond_sum[None, :], axis=1)
    return out if np.ndim(beta) else float(out[0])


@dataclass(frozen=True)
class IsingMoments:
    L: int
    beta: float
    log_z: float
    mean_abs_magnetization: float
    pair_expectations: np.ndarray       # E[s_a s_b], sites in raster order


def ising_exact_moments(L: int, beta: float) -> IsingMoments:
    """Exact moments by full enumeration; the yardstick for the sampler."""
    bond_sum, abs_mag, spins = ising_state_tables(L)
    logw = beta * bond_sum
    logw -= logsumexp(logw)
    w = np.exp(logw)
    mean_abs = float((abs_mag * w).sum() / (L * L))
    sf = spins.astype(float)
    pair = sf.T @ (sf * w[:, None])
    return IsingMoments(L=L, beta=beta, log_z=ising_log_z(L, beta),
                        mean_abs_magnetization=mean_abs, pair_expectations=pair)
