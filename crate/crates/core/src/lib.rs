//! Disordered pinning of a renewal (return-time) process at a defect site:
//! exact finite-volume partition functions, rate functions, free energies,
//! critical points, exact Gibbs sampling and strategy lower bounds.

pub mod critical;
pub mod disorder;
pub mod error;
pub mod excursion;
pub mod extreal;
pub mod free_energy;
pub mod numeric;
pub mod partition;
pub mod quadrature;
pub mod rng;
pub mod sampler;
pub mod special;
pub mod tail_bounds;

pub use error::{PinningError, Result};
pub use excursion::{ExcursionAnalytics, ExcursionFamily, ExcursionLaw, ExcursionSpec, TailClass, TailDecay};
pub use disorder::{DisorderFamily, DisorderLaw, DisorderRealization, DisorderSpec};
pub use partition::{contact_moments, contact_resolved, trace, ContactMoments, ContactResolved, LawTable, PartitionTrace, PinningSystem, Side};
pub use free_energy::{free_energy_annealed, free_energy_det, free_energy_finite, free_energy_quenched_mc, FreeEnergyEstimate, Method};
pub use critical::{contact_fraction, ld_rate_contacts, transition_order, u_c_annealed, u_c_det, u_c_quenched_estimate, CriticalReport, QuenchedConfig, QuenchedInterval, TransitionOrder};
pub use sampler::{block_stats, good_block_diagnostic, sample_path, BlockStats, GoodBlockReport, PathSample, PathSampler};
pub use tail_bounds::{corollary17_verdict, greedy_bound, optimize_threshold, StrategyBound, Verdict, VerdictReport};
