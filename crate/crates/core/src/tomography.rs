//! Maximum-likelihood reconstruction of three-qubit density matrices from
//! measured counts, with fidelity, purity and Monte-Carlo error bars.
//!
//! The reconstruction is the fixed-point iteration ρ ← R ρ R / Tr[R ρ R]
//! with R = (1/N) Σ (n/p) Π over all setting-outcome projectors, started
//! from the maximally mixed state. The form keeps ρ positive semidefinite
//! and unit trace at every step; a diluted fallback step (damping halved
//! until the likelihood stops decreasing) guards monotonicity.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::logical::{DensityMatrix, LogicalState};
use crate::measurement::{all_qst_settings, CountRecord};

/// Iteration limits and convergence threshold.
#[derive(Copy, Clone, Debug)]
pub struct MleOptions {
    pub max_iterations: usize,
    /// Max-abs elementwise change of ρ below which iteration stops.
    pub convergence_tol: f64,
}

impl Default for MleOptions {
    fn default() -> Self {
        Self {
            max_iterations: 10_000,
            convergence_tol: 1e-10,
        }
    }
}

/// Reconstruction output. `converged` is false when the iteration cap was
/// hit before the update dropped below tolerance.
#[derive(Clone, Debug)]
pub struct MleSolution {
    pub rho: DensityMatrix,
    pub log_likelihood: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Fidelity of a reconstructed matrix against a pure target, ⟨t|ρ|t⟩.
pub fn fidelity(rho: &DensityMatrix, target: &LogicalState) -> Result<f64> {
    rho.fidelity_to(target)
}

/// Tr[ρ²].
pub fn purity(rho: &DensityMatrix) -> f64 {
    rho.purity()
}

struct Projectors {
    vectors: Vec<DVector<Complex64>>,
    counts: Vec<f64>,
    total: f64,
}

fn assemble(records: &[CountRecord]) -> Result<Projectors> {
    if records.is_empty() {
        return Err(Error::InvalidCounts("no measurement records".into()));
    }
    let expected: Vec<String> = all_qst_settings().iter().map(|s| s.name()).collect();
    for name in &expected {
        if !records.iter().any(|r| &r.setting.name() == name) {
            return Err(Error::InvalidCounts(format!(
                "records do not cover setting {name}"
            )));
        }
    }
    let mut vectors = Vec::with_capacity(records.len() * 8);
    let mut counts = Vec::with_capacity(records.len() * 8);
    let mut total = 0.0;
    for record in records {
        for o in 0..8 {
            vectors.push(record.setting.projector_state(o).amplitudes().clone());
            counts.push(record.counts[o] as f64);
            total += record.counts[o] as f64;
        }
    }
    if total <= 0.0 {
        return Err(Error::InvalidCounts("all counts are zero".into()));
    }
    Ok(Projectors {
        vectors,
        counts,
        total,
    })
}

fn log_likelihood(rho: &DMatrix<Complex64>, proj: &Projectors) -> f64 {
    let mut ll = 0.0;
    for (v, &n) in proj.vectors.iter().zip(&proj.counts) {
        if n > 0.0 {
            let p = expectation(rho, v).max(1e-300);
            ll += n * p.ln();
        }
    }
    ll
}

fn expectation(rho: &DMatrix<Complex64>, v: &DVector<Complex64>) -> f64 {
    // ⟨v|ρ|v⟩ for a rank-one projector.
    let rv = rho * v;
    v.dotc(&rv).re
}

fn r_operator(rho: &DMatrix<Complex64>, proj: &Projectors) -> DMatrix<Complex64> {
    let dim = rho.nrows();
    let mut r = DMatrix::zeros(dim, dim);
    for (v, &n) in proj.vectors.iter().zip(&proj.counts) {
        if n > 0.0 {
            let p = expectation(rho, v).max(1e-15);
            r += (v * v.adjoint()) * Complex64::new(n / p, 0.0);
        }
    }
    r / Complex64::new(proj.total, 0.0)
}

fn step(rho: &DMatrix<Complex64>, r: &DMatrix<Complex64>, damping: f64) -> DMatrix<Complex64> {
    let dim = rho.nrows();
    let op = if damping >= 1.0 {
        r.clone()
    } else {
        DMatrix::identity(dim, dim) * Complex64::new(1.0 - damping, 0.0)
            + r * Complex64::new(damping, 0.0)
    };
    let mut next = &op * rho * &op;
    let tr = next.trace().re;
    next /= Complex64::new(tr, 0.0);
    // Re-symmetrize to shed accumulated floating-point skew.
    let herm = (next.adjoint() + &next) * Complex64::new(0.5, 0.0);
    herm
}

/// Reconstructs a density matrix from counts covering all 27 X/Y/Z settings.
pub fn mle_reconstruct_with(records: &[CountRecord], options: MleOptions) -> Result<MleSolution> {
    let proj = assemble(records)?;
    let dim = 8;
    let mut rho: DMatrix<Complex64> =
        DMatrix::identity(dim, dim) / Complex64::new(dim as f64, 0.0);
    let mut ll = log_likelihood(&rho, &proj);
    let mut iterations = 0;
    let mut converged = false;

    while iterations < options.max_iterations {
        iterations += 1;
        let r = r_operator(&rho, &proj);
        let mut damping = 1.0;
        let mut next = step(&rho, &r, damping);
        let mut next_ll = log_likelihood(&next, &proj);
        // Likelihood must not decrease; halve the step toward the identity
        // until it recovers.
        while next_ll < ll - 1e-12 && damping > 1e-4 {
            damping *= 0.5;
            next = step(&rho, &r, damping);
            next_ll = log_likelihood(&next, &proj);
        }
        let max_update = (&next - &rho)
            .iter()
            .map(|c| c.norm())
            .fold(0.0f64, f64::max);
        rho = next;
        ll = next_ll;
        if max_update < options.convergence_tol {
            converged = true;
            break;
        }
    }

    Ok(MleSolution {
        rho: DensityMatrix::from_matrix(rho)?,
        log_likelihood: ll,
        iterations,
        converged,
    })
}

/// Reconstruction with default iteration limits.
pub fn mle_reconstruct(records: &[CountRecord]) -> Result<MleSolution> {
    mle_reconstruct_with(records, MleOptions::default())
}

/// Standard deviations of fidelity and purity over Monte-Carlo replicas.
#[derive(Copy, Clone, Debug)]
pub struct McErrors {
    pub sigma_fidelity: f64,
    pub sigma_purity: f64,
    pub n_samples: usize,
}

/// Re-samples every count from a Poisson distribution with the observed
/// value as mean, re-runs the reconstruction per replica, and reports the
/// standard deviation of fidelity and purity. Replicas draw from
/// independent, seed-derived generator streams and run in parallel.
pub fn monte_carlo_errors(
    records: &[CountRecord],
    target: &LogicalState,
    n_samples: usize,
    seed: u64,
) -> Result<McErrors> {
    if n_samples < 2 {
        return Err(Error::InvalidParameter {
            name: "n_samples",
            value: n_samples as f64,
            range: "[2, ∞)",
        });
    }
    // Replicas only need enough precision for the spread, not the final
    // 1e-10 fixed point; a looser tolerance keeps 500 replicas fast.
    let options = MleOptions {
        max_iterations: 2_000,
        convergence_tol: 1e-8,
    };
    let results: Result<Vec<(f64, f64)>> = (0..n_samples)
        .into_par_iter()
        .map(|replica| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(replica as u64 + 1);
            let resampled: Vec<CountRecord> = records
                .iter()
                .map(|record| {
                    let mut counts = [0u64; 8];
                    for (o, &n) in record.counts.iter().enumerate() {
                        counts[o] = if n == 0 {
                            0
                        } else {
                            Poisson::new(n as f64)
                                .expect("positive mean")
                                .sample(&mut rng) as u64
                        };
                    }
                    CountRecord {
                        setting: record.setting.clone(),
                        counts,
                    }
                })
                .collect();
            let solution = mle_reconstruct_with(&resampled, options)?;
            Ok((
                solution.rho.fidelity_to(target)?,
                solution.rho.purity(),
            ))
        })
        .collect();
    let results = results?;

    let std_dev = |values: &[f64]| {
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        let var = values
            .iter()
            .map(|v| (v - mean) * (v - mean))
            .sum::<f64>()
            / (values.len() - 1) as f64;
        var.sqrt()
    };
    let fids: Vec<f64> = results.iter().map(|r| r.0).collect();
    let purs: Vec<f64> = results.iter().map(|r| r.1).collect();
    Ok(McErrors {
        sigma_fidelity: std_dev(&fids),
        sigma_purity: std_dev(&purs),
        n_samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measurement::{outcome_probs, sample_counts, split_events};
    use approx::assert_relative_eq;

    fn records_from_state(
        rho: &DensityMatrix,
        total_events: u64,
        seed: u64,
    ) -> Vec<CountRecord> {
        let settings = all_qst_settings();
        let budgets = split_events(total_events, settings.len());
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        settings
            .into_iter()
            .zip(budgets)
            .map(|(setting, n)| {
                let probs = outcome_probs(rho, &setting).unwrap();
                let counts = sample_counts(&probs, n, &mut rng);
                CountRecord { setting, counts }
            })
            .collect()
    }

    fn exact_records(rho: &DensityMatrix, events_per_setting: f64) -> Vec<CountRecord> {
        // "Counts" proportional to the exact probabilities, rounded.
        all_qst_settings()
            .into_iter()
            .map(|setting| {
                let probs = outcome_probs(rho, &setting).unwrap();
                let mut counts = [0u64; 8];
                for (o, p) in probs.iter().enumerate() {
                    counts[o] = (p * events_per_setting).round() as u64;
                }
                CountRecord { setting, counts }
            })
            .collect()
    }

    #[test]
    fn reconstructs_a_basis_state_from_large_counts() {
        let target = LogicalState::basis(3, 0);
        let rho = DensityMatrix::from_pure(&target);
        let records = records_from_state(&rho, 200_000, 11);
        let solution = mle_reconstruct(&records).unwrap();
        assert!(solution.converged);
        let f = fidelity(&solution.rho, &target).unwrap();
        assert!(f >= 0.999, "fidelity {f}");
        solution.rho.validate().unwrap();
    }

    #[test]
    fn reconstructs_ghz_at_paper_scale_budget() {
        let target = LogicalState::two_term(3, 0b001, 0b110, 0.0);
        let rho = DensityMatrix::from_pure(&target);
        let records = records_from_state(&rho, 5029, 23);
        let solution = mle_reconstruct(&records).unwrap();
        let f = fidelity(&solution.rho, &target).unwrap();
        assert!(f >= 0.98, "fidelity {f}");
        solution.rho.validate().unwrap();
    }

    #[test]
    fn dephased_ghz_fidelity_matches_model() {
        // Coherence ζ between the two branches gives fidelity (1+ζ)/2 and
        // purity (1+ζ²)/2; MLE at a finite budget lands within ±0.02.
        let zeta = 0.9;
        let target = LogicalState::two_term(3, 0b001, 0b110, 0.0);
        let anti = LogicalState::two_term(3, 0b001, 0b110, std::f64::consts::PI);
        let rho = DensityMatrix::mixture(&[
            ((1.0 + zeta) / 2.0, DensityMatrix::from_pure(&target)),
            ((1.0 - zeta) / 2.0, DensityMatrix::from_pure(&anti)),
        ])
        .unwrap();
        assert_relative_eq!(rho.fidelity_to(&target).unwrap(), 0.95, epsilon = 1e-12);

        let records = records_from_state(&rho, 5029, 37);
        let solution = mle_reconstruct(&records).unwrap();
        let f = fidelity(&solution.rho, &target).unwrap();
        assert!((f - 0.95).abs() <= 0.02, "fidelity {f}");
    }

    #[test]
    fn purity_bounds() {
        assert_relative_eq!(purity(&DensityMatrix::maximally_mixed(3)), 0.125);
        let pure = DensityMatrix::from_pure(&LogicalState::two_term(3, 2, 5, 0.0));
        assert_relative_eq!(purity(&pure), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn likelihood_never_decreases() {
        let target = LogicalState::two_term(3, 0b001, 0b110, 0.0);
        let rho = DensityMatrix::from_pure(&target);
        let records = records_from_state(&rho, 2000, 5);
        let proj = assemble(&records).unwrap();

        let dim = 8;
        let mut state: DMatrix<Complex64> =
            DMatrix::identity(dim, dim) / Complex64::new(dim as f64, 0.0);
        let mut ll = log_likelihood(&state, &proj);
        for _ in 0..200 {
            let r = r_operator(&state, &proj);
            let next = step(&state, &r, 1.0);
            let next_ll = log_likelihood(&next, &proj);
            assert!(next_ll >= ll - 1e-9, "{next_ll} < {ll}");
            state = next;
            ll = next_ll;
        }
    }

    #[test]
    fn adversarial_counts_still_give_a_valid_state() {
        // A single nonzero count in one setting, zeros everywhere else.
        let mut records = exact_records(&DensityMatrix::maximally_mixed(3), 0.0);
        records[13].counts[5] = 1;
        let solution = mle_reconstruct(&records).unwrap();
        solution.rho.validate().unwrap();

        // Wildly uneven counts.
        let mut records = exact_records(&DensityMatrix::maximally_mixed(3), 0.0);
        for (i, record) in records.iter_mut().enumerate() {
            record.counts[i % 8] = (i as u64 * 977) % 4096;
        }
        records[0].counts[0] += 1; // ensure nonzero total
        let solution = mle_reconstruct(&records).unwrap();
        solution.rho.validate().unwrap();
    }

    #[test]
    fn empty_or_incomplete_records_are_rejected() {
        assert!(mle_reconstruct(&[]).is_err());
        let target = LogicalState::basis(3, 0);
        let rho = DensityMatrix::from_pure(&target);
        let mut records = records_from_state(&rho, 1000, 3);
        records.pop();
        assert!(mle_reconstruct(&records).is_err());
        // zero totals
        let zeroed = exact_records(&DensityMatrix::maximally_mixed(3), 0.0);
        assert!(mle_reconstruct(&zeroed).is_err());
    }

    #[test]
    fn asymptotic_consistency_in_kl_divergence() {
        let target = LogicalState::two_term(3, 0b001, 0b110, 0.0);
        let rho_true = DensityMatrix::from_pure(&target);
        let mut last_kl = f64::INFINITY;
        for (i, n) in [1_000u64, 10_000, 100_000].into_iter().enumerate() {
            let records = records_from_state(&rho_true, n, 101 + i as u64);
            let solution = mle_reconstruct(&records).unwrap();
            let mut kl = 0.0;
            for setting in all_qst_settings() {
                let p = outcome_probs(&rho_true, &setting).unwrap();
                let q = outcome_probs(&solution.rho, &setting).unwrap();
                for o in 0..8 {
                    if p[o] > 1e-15 {
                        kl += p[o] * (p[o] / q[o].max(1e-15)).ln();
                    }
                }
            }
            kl /= 27.0;
            // Monotone decrease within generous sampling-noise slack.
            assert!(
                kl < last_kl * 1.5 + 1e-4,
                "KL did not shrink: {kl} after {last_kl}"
            );
            last_kl = kl;
        }
        assert!(last_kl < 1e-3, "KL at N=1e5: {last_kl}");
    }

    #[test]
    fn monte_carlo_errors_are_deterministic_and_shrink() {
        let target = LogicalState::two_term(3, 0b001, 0b110, 0.0);
        let rho = DensityMatrix::from_pure(&target);
        let records = records_from_state(&rho, 5029, 41);
        let a = monte_carlo_errors(&records, &target, 24, 7).unwrap();
        let b = monte_carlo_errors(&records, &target, 24, 7).unwrap();
        assert_eq!(a.sigma_fidelity.to_bits(), b.sigma_fidelity.to_bits());
        assert_eq!(a.sigma_purity.to_bits(), b.sigma_purity.to_bits());

        // Ten-fold larger counts shrink the spread markedly.
        let big = records_from_state(&rho, 500_000, 43);
        let small_err = monte_carlo_errors(&records, &target, 24, 9).unwrap();
        let big_err = monte_carlo_errors(&big, &target, 24, 9).unwrap();
        assert!(big_err.sigma_fidelity < small_err.sigma_fidelity);
    }
}
