//! The full controlled-SWAP gate: sources, interferometers, path
//! rearrangement and trigger, producing conditional logical states, success
//! probabilities, phase calibration and resource accounting.

mod layout;
mod resources;

pub use layout::GateLayout;
pub use resources::{heralded_resources, GateVariant, ResourceReport};

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::fock::PhotonicState;
use crate::logical::{DensityMatrix, LogicalOutput, LogicalState, Qubit};
use crate::measurement::{outcome_probs, Basis, BasisSetting};

/// The three prepared input qubits.
#[derive(Copy, Clone, Debug)]
pub struct QubitPreparation {
    pub control: Qubit,
    pub target1: Qubit,
    pub target2: Qubit,
}

impl QubitPreparation {
    pub fn new(control: Qubit, target1: Qubit, target2: Qubit) -> Result<Self> {
        Ok(Self {
            control,
            target1,
            target2,
        })
    }

    /// Logical basis preparation from three bits (1 ≡ H).
    pub fn from_bits(control: u8, target1: u8, target2: u8) -> Self {
        let q = |b: u8| if b == 1 { Qubit::one() } else { Qubit::zero() };
        Self {
            control: q(control),
            target1: q(target1),
            target2: q(target2),
        }
    }

    /// Basis preparation from a 3-bit index (control is the most significant
    /// bit).
    pub fn from_index(index: usize) -> Self {
        Self::from_bits(
            ((index >> 2) & 1) as u8,
            ((index >> 1) & 1) as u8,
            (index & 1) as u8,
        )
    }
}

/// Which target-splitter outputs are accepted.
#[derive(Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum CollectionMode {
    SinglePort,
    BothPorts,
}

/// How the two trigger outcomes enter the reported output state. Both
/// detectors always count toward the success probability; this only selects
/// how the conditional states are merged.
#[derive(Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum TriggerMode {
    /// Keep only events with the D-polarized trigger outcome.
    DOnly,
    /// Keep both outcomes, flipping the sign of the control's |1⟩ component
    /// for A events before merging.
    BothWithFeedforward,
}

/// Trigger detector that fired.
#[derive(Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum TriggerOutcome {
    D,
    A,
}

/// Target-splitter output in a detection pattern.
#[derive(Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum PortChoice {
    Designated,
    Alternate,
}

/// Gate parameters.
#[derive(Copy, Clone, Debug)]
pub struct GateConfig {
    /// Net intrinsic phase of the SWAP branch, radians.
    pub phi: f64,
    /// Compensating phase applied to the control's |1⟩ component, radians.
    pub theta: f64,
    /// Amplitude overlap at the target-1 splitter (2R against 1G).
    pub zeta1: f64,
    /// Amplitude overlap at the target-2 splitter (1Y against 2B).
    pub zeta2: f64,
    pub collection: CollectionMode,
    pub trigger: TriggerMode,
}

impl Default for GateConfig {
    fn default() -> Self {
        Self {
            phi: 0.0,
            theta: 0.0,
            zeta1: 1.0,
            zeta2: 1.0,
            collection: CollectionMode::SinglePort,
            trigger: TriggerMode::DOnly,
        }
    }
}

impl GateConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, z) in [("zeta1", self.zeta1), ("zeta2", self.zeta2)] {
            if !(0.0..=1.0).contains(&z) {
                return Err(Error::InvalidParameter {
                    name,
                    value: z,
                    range: "[0, 1]",
                });
            }
        }
        for (name, p) in [("phi", self.phi), ("theta", self.theta)] {
            if !p.is_finite() {
                return Err(Error::InvalidParameter {
                    name,
                    value: p,
                    range: "finite",
                });
            }
        }
        Ok(())
    }

    pub fn with_theta(mut self, theta: f64) -> Self {
        self.theta = theta;
        self
    }
}

/// One accepted detector pattern.
#[derive(Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct PatternKey {
    pub target1: PortChoice,
    pub target2: PortChoice,
    pub trigger: TriggerOutcome,
}

impl PatternKey {
    /// Number of sign corrections this pattern needs relative to the
    /// designated D pattern: one per alternate port plus one for an A
    /// trigger.
    pub fn correction_parity(&self) -> usize {
        let mut k = 0;
        if self.target1 == PortChoice::Alternate {
            k += 1;
        }
        if self.target2 == PortChoice::Alternate {
            k += 1;
        }
        if self.trigger == TriggerOutcome::A {
            k += 1;
        }
        k
    }

    pub fn label(&self) -> String {
        let port = |p: PortChoice| match p {
            PortChoice::Designated => "out",
            PortChoice::Alternate => "alt",
        };
        let trig = match self.trigger {
            TriggerOutcome::D => "D",
            TriggerOutcome::A => "A",
        };
        format!("t1:{} t2:{} trig:{}", port(self.target1), port(self.target2), trig)
    }
}

/// Conditional result of one accepted pattern.
#[derive(Clone, Debug)]
pub struct PatternResult {
    pub probability: f64,
    pub state: LogicalOutput,
}

/// All accepted detector patterns with their probabilities and conditional
/// three-qubit states.
#[derive(Clone, Debug)]
pub struct GateOutcome {
    pub patterns: BTreeMap<PatternKey, PatternResult>,
    pub total_success: f64,
}

impl GateOutcome {
    pub fn is_empty(&self) -> bool {
        self.patterns.is_empty()
    }

    /// Sign flip on the control's |1⟩ component, the per-pattern correction
    /// established by the pattern-state audit.
    fn control_sign_flip(rho: &DensityMatrix) -> DensityMatrix {
        let dim = rho.dim();
        let signs: Vec<f64> = (0..dim)
            .map(|i| if i & (dim >> 1) != 0 { -1.0 } else { 1.0 })
            .collect();
        rho.conjugate_by_signs(&signs)
    }

    /// Merges the accepted patterns into one conditional density matrix,
    /// applying each pattern's phase correction first. With `DOnly` the A
    /// events are dropped (they still count toward `total_success`).
    pub fn merged_density(&self, trigger: TriggerMode) -> Result<DensityMatrix> {
        let mut parts = Vec::new();
        let mut total = 0.0;
        for (key, result) in &self.patterns {
            if trigger == TriggerMode::DOnly && key.trigger == TriggerOutcome::A {
                continue;
            }
            let mut rho = result.state.density_matrix();
            if key.correction_parity() % 2 == 1 {
                rho = Self::control_sign_flip(&rho);
            }
            total += result.probability;
            parts.push((result.probability, rho));
        }
        if parts.is_empty() || total == 0.0 {
            return Err(Error::InvalidCounts(
                "no accepted patterns with nonzero probability".into(),
            ));
        }
        for (w, _) in &mut parts {
            *w /= total;
        }
        DensityMatrix::mixture(&parts)
    }

    /// Probability of each accepted pattern.
    pub fn pattern_probabilities(&self) -> Vec<(PatternKey, f64)> {
        self.patterns
            .iter()
            .map(|(k, r)| (*k, r.probability))
            .collect()
    }
}

/// Emitted pair state of one source over the gate's path modes.
pub fn spdc_pair_state(source: u8) -> Result<PhotonicState> {
    GateLayout::get().spdc_pair_state(source)
}

/// The encoded four-photon input: sources, path distribution, polarization
/// preparation on both path modes of each photon, then post-selection on the
/// branch-matching coincidence pattern. Returns the familiar two-branch
/// state with amplitude 1/√2 per branch and the trigger markers H / V.
pub fn build_input(prep: &QubitPreparation) -> Result<PhotonicState> {
    let layout = GateLayout::get();
    let mut state = layout
        .spdc_pair_state(1)?
        .tensor(&layout.spdc_pair_state(2)?)?;
    for element in layout.encoding_elements(prep)? {
        state = state.apply(&element)?;
    }
    let (_, cond) = state.post_select(&layout.resource_pattern())?;
    cond.ok_or_else(|| Error::Encoding("branch-matching pattern has zero weight".into()))
}

/// Runs the gate end to end and collects every accepted four-fold pattern.
///
/// Both trigger detectors always contribute patterns; `cfg.collection`
/// selects whether the alternate target ports are accepted as well.
pub fn run_gate(prep: &QubitPreparation, cfg: &GateConfig) -> Result<GateOutcome> {
    cfg.validate()?;
    let layout = GateLayout::get();
    let swap_phase = cfg.phi - layout.convention_phase();
    let ens = layout.run_to_detectors(prep, swap_phase, cfg.theta, cfg.zeta1, cfg.zeta2)?;

    let ports: &[PortChoice] = match cfg.collection {
        CollectionMode::SinglePort => &[PortChoice::Designated],
        CollectionMode::BothPorts => &[PortChoice::Designated, PortChoice::Alternate],
    };
    let mut patterns = BTreeMap::new();
    let mut total = 0.0;
    for &t1 in ports {
        for &t2 in ports {
            for trigger in [TriggerOutcome::D, TriggerOutcome::A] {
                let pattern = layout.detection_pattern(t1, t2, trigger);
                let (p, cond) = ens.post_select(&pattern)?;
                if let Some(cond) = cond {
                    let pairs = layout.qubit_pairs(t1, t2);
                    let state = cond.reduce_to_qubits(&pairs)?;
                    patterns.insert(
                        PatternKey {
                            target1: t1,
                            target2: t2,
                            trigger,
                        },
                        PatternResult {
                            probability: p,
                            state,
                        },
                    );
                    total += p;
                }
            }
        }
    }
    Ok(GateOutcome {
        patterns,
        total_success: total,
    })
}

/// The four entangled targets reachable from basis targets and a control in
/// an equal superposition: family 1 is (|010⟩ ± |101⟩)/√2, family 2 is
/// (|001⟩ ± |110⟩)/√2.
pub fn ghz_target(family: u8, plus: bool) -> Result<LogicalState> {
    let (a, b) = match family {
        1 => (0b010, 0b101),
        2 => (0b001, 0b110),
        other => {
            return Err(Error::InvalidParameter {
                name: "family",
                value: other as f64,
                range: "{1, 2}",
            })
        }
    };
    let phase = if plus { 0.0 } else { std::f64::consts::PI };
    Ok(LogicalState::two_term(3, a, b, phase))
}

/// Preparation that produces the requested entangled family: control in
/// (|0⟩ ± |1⟩)/√2, targets |1⟩|0⟩ (family 1) or |0⟩|1⟩ (family 2).
pub fn ghz_preparation(family: u8, plus: bool) -> Result<QubitPreparation> {
    let control = if plus { Qubit::d() } else { Qubit::a() };
    match family {
        1 => QubitPreparation::new(control, Qubit::one(), Qubit::zero()),
        2 => QubitPreparation::new(control, Qubit::zero(), Qubit::one()),
        other => Err(Error::InvalidParameter {
            name: "family",
            value: other as f64,
            range: "{1, 2}",
        }),
    }
}

/// Outcome indices of the σx σy σy setting whose parity product is +1; their
/// summed probability traces the calibration fringe.
const FRINGE_OUTCOMES: [usize; 4] = [0b000, 0b011, 0b101, 0b110];

fn fringe_value(cfg: &GateConfig, theta: f64) -> Result<f64> {
    let prep = ghz_preparation(1, true)?;
    let outcome = run_gate(&prep, &cfg.with_theta(theta))?;
    let rho = outcome.merged_density(cfg.trigger)?;
    let setting = BasisSetting::new([Basis::X, Basis::Y, Basis::Y]);
    let probs = outcome_probs(&rho, &setting)?;
    Ok(FRINGE_OUTCOMES.iter().map(|&o| probs[o]).sum())
}

/// Scans the compensating phase and returns θ* that maximizes the
/// even-parity σx σy σy coincidence rate, i.e. the θ for which the total
/// SWAP-branch phase vanishes modulo 2π.
///
/// The fringe is an exact cosine in θ, so a uniform scan plus one complex
/// projection recovers the peak to machine precision.
pub fn calibrate_phase(cfg: &GateConfig) -> Result<f64> {
    cfg.validate()?;
    const POINTS: usize = 16;
    let mut z = num_complex::Complex64::new(0.0, 0.0);
    for k in 0..POINTS {
        let theta = 2.0 * std::f64::consts::PI * k as f64 / POINTS as f64;
        let value = fringe_value(cfg, theta)?;
        z += num_complex::Complex64::from_polar(value, -theta);
    }
    z *= num_complex::Complex64::new(2.0 / POINTS as f64, 0.0);
    if z.norm() < 1e-9 {
        return Err(Error::CalibrationFailure(format!(
            "fringe amplitude {:.3e} is flat; mode overlap too small",
            z.norm()
        )));
    }
    // fringe(θ) = A + B cos(θ + δ) with z = B e^{iδ}; the maximum sits at −δ.
    let mut theta_star = -z.arg();
    if theta_star < 0.0 {
        theta_star += 2.0 * std::f64::consts::PI;
    }
    Ok(theta_star % (2.0 * std::f64::consts::PI))
}

/// Two-photon interference visibility implied by an amplitude overlap ζ.
pub fn hom_visibility(zeta: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&zeta) {
        return Err(Error::InvalidParameter {
            name: "zeta",
            value: zeta,
            range: "[0, 1]",
        });
    }
    Ok(zeta * zeta)
}

/// Coincidence probability for the two-photon bunching test at overlap ζ:
/// (1 − ζ²)/2, i.e. half the distinguishable rate at ζ = 0 and zero at ζ = 1.
pub fn hom_coincidence(zeta: f64) -> Result<f64> {
    Ok((1.0 - hom_visibility(zeta)?) / 2.0)
}

/// Coincidence dip against relative delay, with a Gaussian overlap envelope
/// ζ(τ) = ζ_max · exp(−τ²/(2σ²)).
pub fn hom_scan(delays: &[f64], sigma: f64, zeta_max: f64) -> Result<Vec<(f64, f64)>> {
    if sigma <= 0.0 {
        return Err(Error::InvalidParameter {
            name: "sigma",
            value: sigma,
            range: "(0, ∞)",
        });
    }
    if !(0.0..=1.0).contains(&zeta_max) {
        return Err(Error::InvalidParameter {
            name: "zeta_max",
            value: zeta_max,
            range: "[0, 1]",
        });
    }
    Ok(delays
        .iter()
        .map(|&tau| {
            let zeta = zeta_max * (-tau * tau / (2.0 * sigma * sigma)).exp();
            (tau, (1.0 - zeta * zeta) / 2.0)
        })
        .collect())
}
