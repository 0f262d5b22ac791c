"""Perfect sampling toolkit: exact draws from Markov chain stationary laws.

Coupling-from-the-past variants (vanilla, monotone, bounding-chain,
read-once), Fill's interruptible algorithm, small-set and common-proposal
couplers, a perfect slice sampler, lagged-pair unbiased estimation with TV
bounds and control variates, and an auxiliary-variable sampler for the
doubly intractable Ising posterior. Every sampler draws its randomness from
keyed counter-based streams, so runs are exactly reproducible and backward
extensions reuse already-revealed noise bit for bit.
"""

from .cftp import (BackoffSchedule, CoalescenceCertificate, FixedAtomSource,
                   KeyedAtomSource, MonotonicityError, NoCoalescenceError,
                   backward_trace, bernoulli_atoms, bounding_trace,
                   cftp_bounding, cftp_bruteforce, cftp_monotone)
from .chain import (ChainStructureError, FiniteChainSpec, Order,
                    RecursionModel, StationaryOracle, as_distribution,
                    backward_compose, exact_stationary, exact_tv_at,
                    forward_compose, states_equal)
from .couplers import (CommonProposalAtom, GaussianAux, MultigammaDraw,
                       RejectionCapError, SplitAtom, SplitKernelSpec,
                       WSequenceCapError, common_proposal_atom,
                       common_proposal_step, coupled_rw_mh, gamma_minorizer,
                       multigamma_exact_draw, slice_cftp, slice_update,
                       split_atoms, split_step)
from .fill import (FillResult, conditioned_noise_law, fill_draw, fill_sample,
                   gibbs_forward_path, gibbs_forward_step, gibbs_reverse_step,
                   recover_gibbs_noise, recover_gibbs_reverse_noise,
                   reverse_kernel)
from .gof import (GofReport, binned_tv, chisq_counts, chisq_gof,
                  chisq_two_sample, count_labels, ks_gof, ks_two_sample)
from .ising import (IsingMoments, ising_cftp, ising_exact_moments,
                    ising_heatbath_sweep, ising_log_z, ising_model,
                    ising_suff_stat)
from .models import (DecreasingDensity, MixtureSetup, default_mixture_setup,
                     exp_decreasing, ladder_walk, mixture_alpha_cftp,
                     mixture_latent_chain, mixture_latent_spec,
                     mixture_posterior_cdf, normal_density, three_state_walk)
from .moller import (IsingPosterior, MollerRun, grid_posterior,
                     moller_log_ratio, moller_step, run_moller_chain,
                     run_naive_chain)
from .noise import (NoiseAtom, NoiseShape, NoiseShapeError, future_atoms,
                    noise_at, past_atoms, stream_at, subkey)
from .readonce import (BlockSpec, RoSample, block_coalesces, choose_block_size,
                       iter_ro_cftp, ro_cftp_stream)
from .umcmc import (ControlVariatePlan, CoupledPair, CvEstimate,
                    TvBoundEstimate, UnbiasedEstimate, cv_estimate,
                    estimate_cv_plan, h_estimate, maximal_coupling_rows,
                    required_horizon, run_lagged_pair, tv_bound)

__version__ = "0.1.0"
