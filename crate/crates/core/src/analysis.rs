//! Derived quantities: logical truth table and overlap, three-particle
//! correlation statistics, interferometric overlap/purity fringes, and
//! mixed-state aggregation.

use nalgebra::{Matrix3, Vector3};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::circuit::{run_gate, GateConfig, QubitPreparation};
use crate::error::{Error, Result};
use crate::logical::{DensityMatrix, Qubit};
use crate::measurement::{
    outcome_probs, sample_counts, split_events, svetlichny_settings, Basis, BasisSetting,
    CountRecord,
};

/// 8x8 matrix of output probabilities, one row per logical input
/// |000⟩ … |111⟩.
#[derive(Clone, Debug)]
pub struct TruthTable {
    pub probs: [[f64; 8]; 8],
}

impl TruthTable {
    /// Mean overlap Tr(M_exp · M_idealᵀ) / Tr(M_ideal · M_idealᵀ).
    pub fn overlap(&self, ideal: &TruthTable) -> f64 {
        let mut num = 0.0;
        let mut den = 0.0;
        for i in 0..8 {
            for j in 0..8 {
                num += self.probs[i][j] * ideal.probs[i][j];
                den += ideal.probs[i][j] * ideal.probs[i][j];
            }
        }
        num / den
    }

    pub fn row_sums(&self) -> [f64; 8] {
        let mut sums = [0.0; 8];
        for (i, row) in self.probs.iter().enumerate() {
            sums[i] = row.iter().sum();
        }
        sums
    }
}

/// Output basis index of the controlled-SWAP on a basis input: the two
/// target bits exchange when the control bit is set.
pub fn fredkin_output_index(input: usize) -> usize {
    let c = (input >> 2) & 1;
    let t1 = (input >> 1) & 1;
    let t2 = input & 1;
    if c == 1 {
        (c << 2) | (t2 << 1) | t1
    } else {
        input
    }
}

/// The ideal permutation truth table.
pub fn fredkin_ideal() -> TruthTable {
    let mut probs = [[0.0; 8]; 8];
    for (input, row) in probs.iter_mut().enumerate() {
        row[fredkin_output_index(input)] = 1.0;
    }
    TruthTable { probs }
}

/// Measures all eight logical basis inputs in the H/V basis.
///
/// `shots`: `None` uses exact probabilities; `Some((per_input, seed))` draws
/// that many events per input and normalizes the counts. `extinction` mixes
/// each prepared qubit with its orthogonal state with the given weight,
/// modeling imperfect polarizer extinction.
pub fn truth_table(
    cfg: &GateConfig,
    shots: Option<(u64, u64)>,
    extinction: f64,
) -> Result<(TruthTable, f64)> {
    if !(0.0..=0.5).contains(&extinction) {
        return Err(Error::InvalidParameter {
            name: "extinction",
            value: extinction,
            range: "[0, 0.5]",
        });
    }
    let zzz = BasisSetting::new([Basis::Z, Basis::Z, Basis::Z]);
    let mut probs = [[0.0; 8]; 8];
    for input in 0..8 {
        // Mixture over per-qubit flips with weights (1-ε) and ε.
        let mut parts: Vec<(f64, DensityMatrix)> = Vec::new();
        let mut total_weight_prob = 0.0;
        for mask in 0..8usize {
            let mut weight = 1.0;
            for q in 0..3 {
                weight *= if (mask >> q) & 1 == 1 {
                    extinction
                } else {
                    1.0 - extinction
                };
            }
            if weight == 0.0 {
                continue;
            }
            let prep = QubitPreparation::from_index(input ^ mask);
            let outcome = run_gate(&prep, cfg)?;
            if outcome.is_empty() {
                continue;
            }
            let rho = outcome.merged_density(cfg.trigger)?;
            total_weight_prob += weight * outcome.total_success;
            parts.push((weight * outcome.total_success, rho));
        }
        for (w, _) in &mut parts {
            *w /= total_weight_prob;
        }
        let rho = DensityMatrix::mixture(&parts)?;
        let outcome_p = outcome_probs(&rho, &zzz)?;
        // Outcome index uses "+" (= H = logical 1) first; logical column
        // index is the bitwise complement.
        let mut row = [0.0; 8];
        for (o, p) in outcome_p.iter().enumerate() {
            row[7 - o] = *p;
        }
        if let Some((n, seed)) = shots {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(input as u64 + 1);
            let counts = sample_counts(&row, n, &mut rng);
            for (j, c) in counts.iter().enumerate() {
                row[j] = *c as f64 / n as f64;
            }
        }
        probs[input] = row;
    }
    let table = TruthTable { probs };
    let overlap = table.overlap(&fredkin_ideal());
    Ok((table, overlap))
}

/// Three-qubit correlation function E = Σ (±1 parity) · P(outcome) for one
/// basis per qubit.
pub fn correlator(rho: &DensityMatrix, a: &Basis, b: &Basis, c: &Basis) -> Result<f64> {
    let setting = BasisSetting::new([a.clone(), b.clone(), c.clone()]);
    let probs = outcome_probs(rho, &setting)?;
    Ok(parity_sum(&probs))
}

fn parity_sum(probs: &[f64; 8]) -> f64 {
    probs
        .iter()
        .enumerate()
        .map(|(o, p)| if o.count_ones() % 2 == 0 { *p } else { -*p })
        .sum()
}

/// One correlation statistic with its per-term breakdown.
#[derive(Clone, Debug)]
pub struct InequalityResult {
    /// (setting name, sign in the combination, E value)
    pub terms: Vec<(String, f64, f64)>,
    pub value: f64,
    /// Local (Mermin) or bipartite-nonlocal (Svetlichny) bound.
    pub bound: f64,
}

fn mermin_terms() -> Vec<(f64, [Basis; 3])> {
    // |E(a′,b,c′) + E(a,b′,c′) + E(a,b,c) − E(a′,b′,c)| with a=b=c = X and
    // a′=b′=c′ = Y.
    vec![
        (1.0, [Basis::Y, Basis::X, Basis::Y]),
        (1.0, [Basis::X, Basis::Y, Basis::Y]),
        (1.0, [Basis::X, Basis::X, Basis::X]),
        (-1.0, [Basis::Y, Basis::Y, Basis::X]),
    ]
}

fn svetlichny_terms() -> Vec<(f64, [Basis; 3])> {
    let s = svetlichny_settings();
    vec![
        (1.0, [s.a.clone(), s.b.clone(), s.c.clone()]),
        (1.0, [s.a.clone(), s.b.clone(), s.c_prime.clone()]),
        (1.0, [s.a.clone(), s.b_prime.clone(), s.c.clone()]),
        (-1.0, [s.a.clone(), s.b_prime.clone(), s.c_prime.clone()]),
        (1.0, [s.a_prime.clone(), s.b.clone(), s.c.clone()]),
        (-1.0, [s.a_prime.clone(), s.b.clone(), s.c_prime.clone()]),
        (-1.0, [s.a_prime.clone(), s.b_prime.clone(), s.c.clone()]),
        (-1.0, [s.a_prime.clone(), s.b_prime.clone(), s.c_prime.clone()]),
    ]
}

fn inequality(
    rho: &DensityMatrix,
    terms: Vec<(f64, [Basis; 3])>,
    bound: f64,
) -> Result<InequalityResult> {
    let mut out_terms = Vec::with_capacity(terms.len());
    let mut sum = 0.0;
    for (sign, [a, b, c]) in terms {
        let e = correlator(rho, &a, &b, &c)?;
        let name = format!("{}{}{}", a.name(), b.name(), c.name());
        sum += sign * e;
        out_terms.push((name, sign, e));
    }
    Ok(InequalityResult {
        terms: out_terms,
        value: sum.abs(),
        bound,
    })
}

/// Three-particle correlation statistic bounded by 2 for local models;
/// the quantum maximum is 4.
pub fn mermin(rho: &DensityMatrix) -> Result<InequalityResult> {
    inequality(rho, mermin_terms(), 2.0)
}

/// Three-particle statistic bounded by 4 for bipartite nonlocal models;
/// the quantum maximum is 4√2.
pub fn svetlichny(rho: &DensityMatrix) -> Result<InequalityResult> {
    inequality(rho, svetlichny_terms(), 4.0)
}

/// A sampled correlation statistic with its propagated counting error.
#[derive(Clone, Debug)]
pub struct SampledInequality {
    pub result: InequalityResult,
    pub sigma: f64,
    /// (value − bound) / sigma.
    pub significance: f64,
    pub records: Vec<CountRecord>,
    pub total_events: u64,
}

fn inequality_sampled(
    rho: &DensityMatrix,
    terms: Vec<(f64, [Basis; 3])>,
    bound: f64,
    total_events: u64,
    seed: u64,
) -> Result<SampledInequality> {
    if total_events == 0 {
        return Err(Error::InvalidCounts("zero event budget".into()));
    }
    let budgets = split_events(total_events, terms.len());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out_terms = Vec::with_capacity(terms.len());
    let mut records = Vec::with_capacity(terms.len());
    let mut sum = 0.0;
    let mut var = 0.0;
    for ((sign, [a, b, c]), n) in terms.into_iter().zip(budgets) {
        let setting = BasisSetting::new([a, b, c]);
        let probs = outcome_probs(rho, &setting)?;
        let counts = sample_counts(&probs, n, &mut rng);
        let total = n as f64;
        let e = counts
            .iter()
            .enumerate()
            .map(|(o, &cnt)| {
                let p = cnt as f64 / total;
                if o.count_ones() % 2 == 0 {
                    p
                } else {
                    -p
                }
            })
            .sum::<f64>();
        // Poissonian counting statistics give Var[E] = (1 − E²)/N.
        var += (1.0 - e * e) / total;
        sum += sign * e;
        out_terms.push((setting.name(), sign, e));
        records.push(CountRecord { setting, counts });
    }
    let value = sum.abs();
    let sigma = var.sqrt();
    Ok(SampledInequality {
        result: InequalityResult {
            terms: out_terms,
            value,
            bound,
        },
        sigma,
        significance: if sigma > 0.0 {
            (value - bound) / sigma
        } else {
            f64::INFINITY
        },
        records,
        total_events,
    })
}

pub fn mermin_sampled(
    rho: &DensityMatrix,
    total_events: u64,
    seed: u64,
) -> Result<SampledInequality> {
    inequality_sampled(rho, mermin_terms(), 2.0, total_events, seed)
}

pub fn svetlichny_sampled(
    rho: &DensityMatrix,
    total_events: u64,
    seed: u64,
) -> Result<SampledInequality> {
    inequality_sampled(rho, svetlichny_terms(), 4.0, total_events, seed)
}

/// Least-squares cosine fit of a fringe.
#[derive(Copy, Clone, Debug)]
pub struct VisibilityFit {
    /// Fringe visibility, clipped to [0, 1].
    pub visibility: f64,
    pub sigma: f64,
    /// Phase offset δ in value = baseline + (v/2)·cos(θ + δ).
    pub offset: f64,
    pub baseline: f64,
}

/// A scanned fringe with its fitted visibility.
#[derive(Clone, Debug)]
pub struct FringeScan {
    pub points: Vec<(f64, f64)>,
    pub fit: VisibilityFit,
}

/// Unweighted least squares of `value = a + b·cosθ + c·sinθ`, reported as
/// visibility v = 2√(b² + c²) with σ_v from the residual covariance.
pub fn fit_visibility(points: &[(f64, f64)]) -> Result<VisibilityFit> {
    let mut distinct: Vec<f64> = Vec::new();
    for (theta, _) in points {
        if !distinct.iter().any(|t| (t - theta).abs() < 1e-12) {
            distinct.push(*theta);
        }
    }
    if distinct.len() < 3 {
        return Err(Error::FitFailure(format!(
            "{} distinct phase points, need at least 3",
            distinct.len()
        )));
    }

    let n = points.len() as f64;
    let mut m = Matrix3::<f64>::zeros();
    let mut rhs = Vector3::<f64>::zeros();
    for &(theta, y) in points {
        let row = [1.0, theta.cos(), theta.sin()];
        for i in 0..3 {
            for j in 0..3 {
                m[(i, j)] += row[i] * row[j];
            }
            rhs[i] += row[i] * y;
        }
    }
    let inv = m
        .try_inverse()
        .ok_or_else(|| Error::FitFailure("singular normal equations".into()))?;
    let coeffs = inv * rhs;
    let (a, b, c) = (coeffs[0], coeffs[1], coeffs[2]);

    let amplitude = (b * b + c * c).sqrt();
    let visibility = (2.0 * amplitude).clamp(0.0, 1.0);
    let offset = (-c).atan2(b);

    let dof = n - 3.0;
    let sigma = if dof > 0.0 {
        let ssr: f64 = points
            .iter()
            .map(|&(theta, y)| {
                let fit = a + b * theta.cos() + c * theta.sin();
                (y - fit) * (y - fit)
            })
            .sum();
        let s2 = ssr / dof;
        if amplitude > 1e-12 {
            // Delta method on v = 2√(b²+c²).
            let gb = 2.0 * b / amplitude;
            let gc = 2.0 * c / amplitude;
            let var = s2
                * (gb * gb * inv[(1, 1)] + 2.0 * gb * gc * inv[(1, 2)] + gc * gc * inv[(2, 2)]);
            var.max(0.0).sqrt()
        } else {
            (s2 * (inv[(1, 1)] + inv[(2, 2)])).max(0.0).sqrt() * 2.0
        }
    } else {
        0.0
    };

    Ok(VisibilityFit {
        visibility,
        sigma,
        offset,
        baseline: a,
    })
}

/// Probability of the "+" control outcome in the σx basis, targets traced
/// out, for one gate run.
fn control_plus_probability(
    prep: &QubitPreparation,
    cfg: &GateConfig,
) -> Result<f64> {
    let outcome = run_gate(prep, cfg)?;
    let rho = outcome.merged_density(cfg.trigger)?;
    let setting = BasisSetting::new([Basis::X, Basis::Z, Basis::Z]);
    let probs = outcome_probs(&rho, &setting)?;
    Ok(probs[0] + probs[1] + probs[2] + probs[3])
}

/// Interference pattern of the overlap estimation circuit: the control is
/// prepared in (|0⟩+|1⟩)/√2, the compensating phase is swept over `thetas`,
/// and the control is read out in the σx basis. The fitted visibility equals
/// Tr[ϱ_T1 ϱ_T2] for ideal mode overlap.
///
/// Mixed targets are decomposed spectrally and their pure components
/// aggregated with spectral weights. `shots` draws the given number of
/// events per grid point instead of using exact probabilities.
pub fn swap_test_fringe(
    rho_t1: &DensityMatrix,
    rho_t2: &DensityMatrix,
    thetas: &[f64],
    cfg: &GateConfig,
    shots: Option<(u64, u64)>,
) -> Result<FringeScan> {
    if rho_t1.dim() != 2 || rho_t2.dim() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            got: rho_t1.dim().max(rho_t2.dim()),
        });
    }
    let parts1 = rho_t1.eigen_decomposition();
    let parts2 = rho_t2.eigen_decomposition();
    let mut components = Vec::new();
    for (w1, s1) in &parts1 {
        for (w2, s2) in &parts2 {
            let q1 = Qubit::new(s1.amplitudes()[0], s1.amplitudes()[1])?;
            let q2 = Qubit::new(s2.amplitudes()[0], s2.amplitudes()[1])?;
            components.push((w1 * w2, q1, q2));
        }
    }
    scan_fringe(&components, thetas, cfg, shots, |_| 0.0)
}

/// Fringe-phase convention for aggregating the mixed-state preparations.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum MixtureConvention {
    /// All four pure preparations interfere with the same fringe phase; the
    /// aggregated visibility is the purity (1 + m²)/2.
    EqualPhase,
    /// The |1⟩|1⟩ preparation enters half a period out of phase; the
    /// aggregated visibility is the Bloch-vector length m.
    AntiPhase11,
}

/// Mixing weights of the four pure target preparations for mixture parameter
/// m: [|00⟩, |01⟩, |10⟩, |11⟩].
pub fn mixture_weights(m: f64) -> [f64; 4] {
    [
        0.25 * (1.0 + m) * (1.0 + m),
        0.25 * (1.0 - m * m),
        0.25 * (1.0 - m * m),
        0.25 * (1.0 - m) * (1.0 - m),
    ]
}

/// Degree of mixture, m ∈ [0, 1].
#[derive(Copy, Clone, Debug)]
pub struct MixtureParam(f64);

impl MixtureParam {
    pub fn new(m: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&m) {
            return Err(Error::InvalidParameter {
                name: "m",
                value: m,
                range: "[0, 1]",
            });
        }
        Ok(Self(m))
    }

    pub fn value(&self) -> f64 {
        self.0
    }
}

/// Aggregated fringe of the four pure preparations weighted per the mixture
/// parameter, under the chosen fringe-phase convention.
///
/// The two conventions disagree at m = 0 (0.5 against 0): the equal-phase
/// reading reproduces the mixed state's purity, the anti-phase reading its
/// Bloch-vector length. Both are exposed because the reported maximally
/// mixed visibility is compatible only with the anti-phase convention while
/// the stated weights alone suggest equal phases.
pub fn mixed_state_run(
    m: MixtureParam,
    thetas: &[f64],
    cfg: &GateConfig,
    convention: MixtureConvention,
    shots: Option<(u64, u64)>,
) -> Result<FringeScan> {
    let weights = mixture_weights(m.value());
    let preps = [
        (Qubit::zero(), Qubit::zero()),
        (Qubit::zero(), Qubit::one()),
        (Qubit::one(), Qubit::zero()),
        (Qubit::one(), Qubit::one()),
    ];
    let components: Vec<(f64, Qubit, Qubit)> = weights
        .iter()
        .zip(preps)
        .map(|(&w, (q1, q2))| (w, q1, q2))
        .collect();
    scan_fringe(&components, thetas, cfg, shots, |idx| {
        if convention == MixtureConvention::AntiPhase11 && idx == 3 {
            std::f64::consts::PI
        } else {
            0.0
        }
    })
}

fn scan_fringe<F>(
    components: &[(f64, Qubit, Qubit)],
    thetas: &[f64],
    cfg: &GateConfig,
    shots: Option<(u64, u64)>,
    component_phase: F,
) -> Result<FringeScan>
where
    F: Fn(usize) -> f64,
{
    if thetas.is_empty() {
        return Err(Error::FitFailure("empty phase grid".into()));
    }
    let mut rng = shots.map(|(_, seed)| ChaCha8Rng::seed_from_u64(seed));
    let mut points = Vec::with_capacity(thetas.len());
    for &theta in thetas {
        let mut value = 0.0;
        let mut weight_prob = 0.0;
        for (idx, (w, q1, q2)) in components.iter().enumerate() {
            let prep = QubitPreparation::new(Qubit::d(), *q1, *q2)?;
            let shifted = cfg.with_theta(theta + component_phase(idx));
            let outcome = run_gate(&prep, &shifted)?;
            let p_plus = {
                let rho = outcome.merged_density(cfg.trigger)?;
                let setting = BasisSetting::new([Basis::X, Basis::Z, Basis::Z]);
                let probs = outcome_probs(&rho, &setting)?;
                probs[0] + probs[1] + probs[2] + probs[3]
            };
            value += w * outcome.total_success * p_plus;
            weight_prob += w * outcome.total_success;
        }
        let mut p = value / weight_prob;
        if let (Some((n, _)), Some(rng)) = (shots, rng.as_mut()) {
            let probs = [p, 1.0 - p, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0];
            let counts = sample_counts(&probs, n, rng);
            p = counts[0] as f64 / n as f64;
        }
        points.push((theta, p));
    }
    let fit = fit_visibility(&points)?;
    Ok(FringeScan { points, fit })
}

// Re-exported for the pipeline: σx readout of the control with targets
// traced out.
pub fn swap_test_point(prep: &QubitPreparation, cfg: &GateConfig) -> Result<f64> {
    control_plus_probability(prep, cfg)
}
