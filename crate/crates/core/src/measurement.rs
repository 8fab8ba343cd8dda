//! Projective polarization measurements: per-qubit bases, multi-setting
//! outcome probabilities, and seeded count sampling.
//!
//! The three standard settings follow the optics conventions: X projects
//! onto D/A, Y onto R/L (|R⟩ = (|H⟩ + i|V⟩)/√2) and Z onto H/V. The "+"
//! outcome is listed first for every qubit, so outcome index
//! `4·o_c + 2·o_t1 + o_t2` runs lexicographically with 0 = "+" and 1 = "−".

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::logical::{DensityMatrix, LogicalState, Qubit};

/// Single-qubit measurement basis.
#[derive(Clone, Debug)]
pub enum Basis {
    X,
    Y,
    Z,
    Custom {
        name: String,
        plus: Qubit,
        minus: Qubit,
    },
}

impl Basis {
    /// Custom basis; the two vectors must be orthonormal.
    pub fn custom(name: impl Into<String>, plus: Qubit, minus: Qubit) -> Result<Self> {
        let overlap = plus.inner(&minus).norm();
        if overlap > 1e-10 {
            return Err(Error::InvalidParameter {
                name: "custom basis overlap",
                value: overlap,
                range: "0 ± 1e-10",
            });
        }
        Ok(Self::Custom {
            name: name.into(),
            plus,
            minus,
        })
    }

    /// (+, −) eigenvectors.
    pub fn vectors(&self) -> (Qubit, Qubit) {
        match self {
            Basis::X => (Qubit::d(), Qubit::a()),
            Basis::Y => (Qubit::r(), Qubit::l()),
            Basis::Z => (Qubit::h(), Qubit::v()),
            Basis::Custom { plus, minus, .. } => (*plus, *minus),
        }
    }

    pub fn name(&self) -> String {
        match self {
            Basis::X => "X".into(),
            Basis::Y => "Y".into(),
            Basis::Z => "Z".into(),
            Basis::Custom { name, .. } => name.clone(),
        }
    }
}

/// One three-qubit measurement setting (control, target 1, target 2).
#[derive(Clone, Debug)]
pub struct BasisSetting(pub [Basis; 3]);

impl BasisSetting {
    pub fn new(bases: [Basis; 3]) -> Self {
        Self(bases)
    }

    pub fn name(&self) -> String {
        let names: Vec<String> = self.0.iter().map(|b| b.name()).collect();
        names.join("")
    }

    /// Product projector vector for one of the eight outcomes.
    pub fn projector_state(&self, outcome: usize) -> LogicalState {
        let qubits: Vec<Qubit> = (0..3)
            .map(|q| {
                let bit = (outcome >> (2 - q)) & 1;
                let (plus, minus) = self.0[q].vectors();
                if bit == 0 {
                    plus
                } else {
                    minus
                }
            })
            .collect();
        LogicalState::product(&qubits)
    }
}

/// The 27 X/Y/Z setting combinations in lexicographic order (XXX, XXY, …).
pub fn all_qst_settings() -> Vec<BasisSetting> {
    let letters = [Basis::X, Basis::Y, Basis::Z];
    let mut out = Vec::with_capacity(27);
    for a in &letters {
        for b in &letters {
            for c in &letters {
                out.push(BasisSetting::new([a.clone(), b.clone(), c.clone()]));
            }
        }
    }
    out
}

/// The six single-qubit bases of the three-particle nonlocality test: the
/// first qubit uses (|H⟩ ± e^{i3π/4}|V⟩)/√2 and (|H⟩ ± e^{iπ/4}|V⟩)/√2,
/// the others alternate between σy and σx.
pub struct SvetlichnySettings {
    pub a: Basis,
    pub a_prime: Basis,
    pub b: Basis,
    pub b_prime: Basis,
    pub c: Basis,
    pub c_prime: Basis,
}

pub fn svetlichny_settings() -> SvetlichnySettings {
    let sv = |name: &str, phi: f64| {
        Basis::custom(
            name,
            Qubit::equatorial(phi),
            Qubit::equatorial(phi + std::f64::consts::PI),
        )
        .expect("equatorial pairs are orthonormal")
    };
    SvetlichnySettings {
        a: sv("Sv1", 3.0 * std::f64::consts::FRAC_PI_4),
        a_prime: sv("Sv2", std::f64::consts::FRAC_PI_4),
        b: Basis::Y,
        b_prime: Basis::X,
        c: Basis::X,
        c_prime: Basis::Y,
    }
}

/// Probabilities of the eight outcomes of one measurement setting.
pub fn outcome_probs(rho: &DensityMatrix, setting: &BasisSetting) -> Result<[f64; 8]> {
    if rho.dim() != 8 {
        return Err(Error::DimensionMismatch {
            expected: 8,
            got: rho.dim(),
        });
    }
    let mut probs = [0.0; 8];
    for (o, p) in probs.iter_mut().enumerate() {
        let v = setting.projector_state(o);
        *p = rho.fidelity_to(&v)?;
    }
    let total: f64 = probs.iter().sum();
    debug_assert!((total - 1.0).abs() < 1e-9, "projector completeness: {total}");
    Ok(probs)
}

/// Counts for one measurement setting, outcome order as documented above.
#[derive(Clone, Debug)]
pub struct CountRecord {
    pub setting: BasisSetting,
    pub counts: [u64; 8],
}

impl CountRecord {
    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }
}

/// Multinomial draw of `n` events over the eight outcomes. Deterministic for
/// a fixed generator state.
pub fn sample_counts(probs: &[f64; 8], n: u64, rng: &mut ChaCha8Rng) -> [u64; 8] {
    let mut cumulative = [0.0; 8];
    let mut acc = 0.0;
    for (i, p) in probs.iter().enumerate() {
        acc += p.max(0.0);
        cumulative[i] = acc;
    }
    let total = acc;
    let mut counts = [0u64; 8];
    for _ in 0..n {
        let u: f64 = rng.gen::<f64>() * total;
        let idx = cumulative.iter().position(|&c| u < c).unwrap_or(7);
        counts[idx] += 1;
    }
    counts
}

/// Splits a total event budget equally over `n` settings, spreading the
/// remainder over the first settings.
pub fn split_events(total: u64, n: usize) -> Vec<u64> {
    let base = total / n as u64;
    let rem = (total % n as u64) as usize;
    (0..n)
        .map(|i| if i < rem { base + 1 } else { base })
        .collect()
}
