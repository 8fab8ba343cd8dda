//! Fixed geometry of the gate: mode registry, source states, element wiring
//! and detector patterns.
//!
//! Path naming. The two pair sources emit into path modes 1B/2B/1R/2R and
//! 1G/2G/1Y/2Y; the hybrid splitter's polarizing pass distributes each
//! photon's H and V components onto those paths. Source states are written
//! directly over the destination labels, so the distribution itself is pure
//! relabeling and its reflection phases are folded into the gate's intrinsic
//! phase (which calibration removes). Downstream:
//!
//! * control: paths 1B (H branch) and 1R (V branch) recombine in a beam
//!   displacer onto `c-out`;
//! * target 1: paths 2R and 1G meet on a 50:50 splitter with outputs
//!   `t1-out` (2R transmits) and `t1-dump`;
//! * target 2: paths 1Y and 2B meet on a 50:50 splitter with outputs
//!   `t2-out` (1Y transmits) and `t2-dump`;
//! * trigger: paths 2G and 2Y merge on a polarizing splitter onto `tr-out`,
//!   then a half-wave plate at 22.5° maps H/V to the D/A detector pair.
//!
//! The path rearrangement that feeds 2B and 1G across to the opposite target
//! splitters is what turns the control's polarization into a SWAP/identity
//! selector.

use std::sync::{Arc, OnceLock};

use num_complex::Complex64;

use crate::error::Result;
use crate::fock::{
    DetectionPattern, ElementTransform, ModeRegistry, PhotonicEnsemble, PhotonicState,
    Polarization,
};
use crate::logical::Qubit;
use crate::optics;

use super::{PortChoice, QubitPreparation, TriggerOutcome};

const PATHS: [&str; 16] = [
    "1B", "1R", "2R", "2B", "1G", "1Y", "2G", "2Y", "c-out", "c-dump", "t1-out", "t1-dump",
    "t2-out", "t2-dump", "tr-out", "tr-dump",
];

/// Immutable wiring shared by every gate run.
pub struct GateLayout {
    registry: Arc<ModeRegistry>,
    control_merge: ElementTransform,
    npbs_t1: ElementTransform,
    npbs_t2: ElementTransform,
    trigger_merge: ElementTransform,
    trigger_hwp: ElementTransform,
    sagnac_a_modes: [usize; 2],
    sagnac_b_modes: [usize; 2],
    convention_phase: f64,
}

static LAYOUT: OnceLock<GateLayout> = OnceLock::new();

impl GateLayout {
    /// The shared layout instance.
    pub fn get() -> &'static GateLayout {
        LAYOUT.get_or_init(|| Self::build().expect("gate layout construction"))
    }

    fn build() -> Result<Self> {
        let registry = ModeRegistry::dual_rail(&PATHS)?;
        let control_merge =
            optics::beam_displacer_merge(&registry, "1B", "1R", "c-out", "c-dump")?;
        let npbs_t1 = optics::npbs_routed(&registry, "2R", "1G", "t1-out", "t1-dump")?;
        let npbs_t2 = optics::npbs_routed(&registry, "1Y", "2B", "t2-out", "t2-dump")?;
        let trigger_merge = optics::pbs_routed(&registry, "2G", "2Y", "tr-out", "tr-dump")?;
        let trigger_hwp = optics::jones_on_path(&registry, "tr-out", &optics::hwp(22.5))?;
        let sagnac_a_modes = [
            registry.mode("1G", Polarization::H)?,
            registry.mode("1G", Polarization::V)?,
        ];
        let sagnac_b_modes = [
            registry.mode("2B", Polarization::H)?,
            registry.mode("2B", Polarization::V)?,
        ];

        let mut layout = Self {
            registry,
            control_merge,
            npbs_t1,
            npbs_t2,
            trigger_merge,
            trigger_hwp,
            sagnac_a_modes,
            sagnac_b_modes,
            convention_phase: 0.0,
        };
        layout.convention_phase = layout.measure_convention_phase()?;
        Ok(layout)
    }

    /// Relative phase the element conventions imprint on the SWAP branch,
    /// probed once with a reference preparation. Gate runs subtract it so
    /// the configured intrinsic phase is the net branch phase.
    fn measure_convention_phase(&self) -> Result<f64> {
        let prep = QubitPreparation::new(Qubit::d(), Qubit::one(), Qubit::zero())?;
        let ens = self.run_to_detectors(&prep, 0.0, 0.0, 1.0, 1.0)?;
        let pattern = self.detection_pattern(
            PortChoice::Designated,
            PortChoice::Designated,
            TriggerOutcome::D,
        );
        let (_, cond) = ens.post_select(&pattern)?;
        let cond = cond.expect("reference gate run has nonzero success");
        let pairs =
            self.qubit_pairs(PortChoice::Designated, PortChoice::Designated);
        let out = cond.reduce_to_qubits(&pairs)?;
        let psi = out.as_pure().expect("reference gate run stays pure");
        // |010⟩ carries the identity branch, |101⟩ the swap branch.
        let identity = psi.amplitudes()[0b010];
        let swap = psi.amplitudes()[0b101];
        Ok((swap / identity).arg())
    }

    pub fn registry(&self) -> &Arc<ModeRegistry> {
        &self.registry
    }

    pub fn convention_phase(&self) -> f64 {
        self.convention_phase
    }

    /// Emitted pair state of one source, written over the destination path
    /// labels: source 1 gives (|H⟩_1B|V⟩_2B + |V⟩_1R|H⟩_2R)/√2 and source 2
    /// gives (|H⟩_1Y|V⟩_2Y + |V⟩_1G|H⟩_2G)/√2.
    pub fn spdc_pair_state(&self, source: u8) -> Result<PhotonicState> {
        let reg = &self.registry;
        let s = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        let (branch_a, branch_b) = match source {
            1 => (
                [("1B", Polarization::H), ("2B", Polarization::V)],
                [("1R", Polarization::V), ("2R", Polarization::H)],
            ),
            2 => (
                [("1G", Polarization::V), ("2G", Polarization::H)],
                [("1Y", Polarization::H), ("2Y", Polarization::V)],
            ),
            other => {
                return Err(crate::error::Error::InvalidParameter {
                    name: "source",
                    value: other as f64,
                    range: "{1, 2}",
                })
            }
        };
        let occ = |modes: [(&str, Polarization); 2]| -> Result<crate::fock::Occupation> {
            let idx = [
                reg.mode(modes[0].0, modes[0].1)?,
                reg.mode(modes[1].0, modes[1].1)?,
            ];
            Ok(crate::fock::Occupation::with_photons(reg.len(), &idx))
        };
        PhotonicState::from_terms(
            self.registry.clone(),
            [(occ(branch_a)?, s), (occ(branch_b)?, s)],
        )
    }

    /// Polarization preparation applied to both path modes of each photon:
    /// the control state is written onto 1B (from H) and 1R (from V), target
    /// 1 onto 2R/2B, target 2 onto 1Y/1G. The trigger markers stay H on 2G
    /// and V on 2Y.
    pub fn encoding_elements(&self, prep: &QubitPreparation) -> Result<Vec<ElementTransform>> {
        let reg = &self.registry;
        Ok(vec![
            optics::jones_on_path(reg, "1B", &jones_from_h(&prep.control))?,
            optics::jones_on_path(reg, "1R", &jones_from_v(&prep.control))?,
            optics::jones_on_path(reg, "2R", &jones_from_h(&prep.target1))?,
            optics::jones_on_path(reg, "2B", &jones_from_v(&prep.target1))?,
            optics::jones_on_path(reg, "1Y", &jones_from_h(&prep.target2))?,
            optics::jones_on_path(reg, "1G", &jones_from_v(&prep.target2))?,
        ])
    }

    /// Runs sources, encoding, dephasing, interferometers and the trigger
    /// projection optics; stops just before the detectors.
    ///
    /// `swap_phase` is injected on path 1G (a SWAP-branch path) and `theta`
    /// is the compensating phase applied to the recombined control's H
    /// component.
    pub fn run_to_detectors(
        &self,
        prep: &QubitPreparation,
        swap_phase: f64,
        theta: f64,
        zeta1: f64,
        zeta2: f64,
    ) -> Result<PhotonicEnsemble> {
        let mut state = self
            .spdc_pair_state(1)?
            .tensor(&self.spdc_pair_state(2)?)?;
        for element in self.encoding_elements(prep)? {
            state = state.apply(&element)?;
        }
        state = state.apply(&optics::path_phase(&self.registry, "1G", swap_phase)?)?;

        // Which-path distinguishability at each target splitter, applied as
        // branch dephasing before the modes are mixed.
        let a_modes = self.sagnac_a_modes;
        let ens = crate::fock::dephase_branches(
            &state,
            move |occ| occ.get(a_modes[0]) + occ.get(a_modes[1]) > 0,
            zeta1,
        )?;
        let b_modes = self.sagnac_b_modes;
        let ens = ens.dephase_branches(
            move |occ| occ.get(b_modes[0]) + occ.get(b_modes[1]) > 0,
            zeta2,
        )?;

        let theta_element = ElementTransform::mode_phase(
            self.registry.mode("c-out", Polarization::H)?,
            theta,
        );
        let ens = ens
            .apply(&self.control_merge)?
            .apply(&theta_element)?
            .apply(&self.npbs_t1)?
            .apply(&self.npbs_t2)?
            .apply(&self.trigger_merge)?
            .apply(&self.trigger_hwp)?;
        Ok(ens)
    }

    fn port_path(role: u8, port: PortChoice) -> &'static str {
        match (role, port) {
            (1, PortChoice::Designated) => "t1-out",
            (1, PortChoice::Alternate) => "t1-dump",
            (2, PortChoice::Designated) => "t2-out",
            (2, PortChoice::Alternate) => "t2-dump",
            _ => unreachable!(),
        }
    }

    /// Four-fold coincidence pattern: one photon at the control output, one
    /// at each selected target port, and one at the chosen trigger detector.
    pub fn detection_pattern(
        &self,
        t1: PortChoice,
        t2: PortChoice,
        trigger: TriggerOutcome,
    ) -> DetectionPattern {
        let reg = &self.registry;
        let path_group = |path: &str| {
            vec![
                reg.mode(path, Polarization::H).expect("layout path"),
                reg.mode(path, Polarization::V).expect("layout path"),
            ]
        };
        let trigger_mode = match trigger {
            TriggerOutcome::D => reg.mode("tr-out", Polarization::H).expect("layout path"),
            TriggerOutcome::A => reg.mode("tr-out", Polarization::V).expect("layout path"),
        };
        DetectionPattern::new(vec![
            ("control".into(), path_group("c-out")),
            ("target1".into(), path_group(Self::port_path(1, t1))),
            ("target2".into(), path_group(Self::port_path(2, t2))),
            ("trigger".into(), vec![trigger_mode]),
        ])
    }

    /// Dual-rail pairs (H mode, V mode) for the three logical qubits at the
    /// selected ports, ordered control, target 1, target 2.
    pub fn qubit_pairs(&self, t1: PortChoice, t2: PortChoice) -> Vec<(usize, usize)> {
        let reg = &self.registry;
        let pair = |path: &str| {
            (
                reg.mode(path, Polarization::H).expect("layout path"),
                reg.mode(path, Polarization::V).expect("layout path"),
            )
        };
        vec![
            pair("c-out"),
            pair(Self::port_path(1, t1)),
            pair(Self::port_path(2, t2)),
        ]
    }

    /// The pattern whose coincidences select the path-entangled resource
    /// state: one photon at the control pair, one per target splitter pair,
    /// one at the trigger pair.
    pub fn resource_pattern(&self) -> DetectionPattern {
        let reg = &self.registry;
        let group = |paths: [&str; 2]| {
            let mut modes = Vec::with_capacity(4);
            for p in paths {
                modes.push(reg.mode(p, Polarization::H).expect("layout path"));
                modes.push(reg.mode(p, Polarization::V).expect("layout path"));
            }
            modes
        };
        DetectionPattern::new(vec![
            ("control".into(), group(["1B", "1R"])),
            ("sagnac-a".into(), group(["2R", "1G"])),
            ("sagnac-b".into(), group(["2B", "1Y"])),
            ("trigger".into(), group(["2G", "2Y"])),
        ])
    }
}

/// Unitary whose first column carries |H⟩ to the prepared state.
fn jones_from_h(q: &Qubit) -> nalgebra::Matrix2<Complex64> {
    nalgebra::Matrix2::new(q.c1, -q.c0.conj(), q.c0, q.c1.conj())
}

/// Unitary whose second column carries |V⟩ to the prepared state.
fn jones_from_v(q: &Qubit) -> nalgebra::Matrix2<Complex64> {
    nalgebra::Matrix2::new(q.c0.conj(), q.c1, -q.c1.conj(), q.c0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn spdc_states_have_two_balanced_terms() {
        let layout = GateLayout::get();
        for source in [1u8, 2] {
            let state = layout.spdc_pair_state(source).unwrap();
            assert_eq!(state.n_terms(), 2);
            assert_eq!(state.photons(), 2);
            for (_, amp) in state.terms() {
                assert_relative_eq!(
                    amp.norm(),
                    std::f64::consts::FRAC_1_SQRT_2,
                    epsilon = 1e-12
                );
            }
            assert!(state.is_normalized());
        }
        assert!(layout.spdc_pair_state(3).is_err());
    }

    #[test]
    fn encoding_matrices_prepare_the_requested_state() {
        let q = Qubit::new(
            Complex64::new(0.6, 0.0),
            Complex64::new(0.0, 0.8),
        )
        .unwrap();
        let from_h = jones_from_h(&q);
        let h_in = nalgebra::Vector2::new(Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0));
        let out = from_h * h_in;
        // (H, V) components must be (c1, c0).
        assert_relative_eq!((out[0] - q.c1).norm(), 0.0, epsilon = 1e-12);
        assert_relative_eq!((out[1] - q.c0).norm(), 0.0, epsilon = 1e-12);

        let from_v = jones_from_v(&q);
        let v_in = nalgebra::Vector2::new(Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0));
        let out = from_v * v_in;
        assert_relative_eq!((out[0] - q.c1).norm(), 0.0, epsilon = 1e-12);
        assert_relative_eq!((out[1] - q.c0).norm(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn convention_phase_is_quarter_turn() {
        // With transmission 1/√2, reflection i/√2, and the polarizing merge
        // phases chosen here, the SWAP branch leads the identity branch by
        // exactly π/2 before normalization.
        let layout = GateLayout::get();
        assert_relative_eq!(
            layout.convention_phase(),
            std::f64::consts::FRAC_PI_2,
            epsilon = 1e-10
        );
    }
}
