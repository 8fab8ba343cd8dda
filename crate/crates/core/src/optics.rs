//! Calibrated transforms for the physical elements: wave plates, phase
//! shifters, polarizing and non-polarizing beam splitters, and beam
//! displacers.
//!
//! Beam-splitter phase convention: the NPBS is symmetric with transmission
//! amplitude 1/√2 and reflection amplitude i/√2; the in-place PBS reflects V
//! with phases (i, −i) so that applying it twice is the identity. Any
//! consistent unitary convention works; the gate's intrinsic phase absorbs
//! the difference and the calibration step removes it.

use nalgebra::{DMatrix, Matrix2};
use num_complex::Complex64;

use crate::error::Result;
use crate::fock::{ElementTransform, ModeRegistry, Polarization};

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Wave plate kind for a [`WavePlateSetting`].
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum WavePlateKind {
    Half,
    Quarter,
}

/// A wave plate with its optic axis at `angle_deg` (interpreted modulo 180°).
#[derive(Copy, Clone, Debug)]
pub struct WavePlateSetting {
    pub kind: WavePlateKind,
    pub angle_deg: f64,
}

impl WavePlateSetting {
    pub fn jones(&self) -> Matrix2<Complex64> {
        match self.kind {
            WavePlateKind::Half => hwp(self.angle_deg),
            WavePlateKind::Quarter => qwp(self.angle_deg),
        }
    }
}

/// A compensating phase θ, with the physical wave-plate tilt that realizes
/// it kept only as metadata.
#[derive(Copy, Clone, Debug)]
pub struct PhaseSetting {
    pub theta: f64,
    pub tilt_deg: Option<f64>,
}

impl PhaseSetting {
    pub fn new(theta: f64) -> Self {
        Self { theta, tilt_deg: None }
    }
}

/// Half-wave plate Jones matrix in the (H, V) basis,
/// [[cos2θ, sin2θ], [sin2θ, −cos2θ]].
pub fn hwp(angle_deg: f64) -> Matrix2<Complex64> {
    let t = 2.0 * angle_deg.to_radians();
    Matrix2::new(
        c(t.cos(), 0.0),
        c(t.sin(), 0.0),
        c(t.sin(), 0.0),
        c(-t.cos(), 0.0),
    )
}

/// Quarter-wave plate Jones matrix in the (H, V) basis (global phase fixed so
/// that qwp(0°)|H⟩ = |H⟩ and qwp(45°)|H⟩ ∝ |R⟩).
pub fn qwp(angle_deg: f64) -> Matrix2<Complex64> {
    let t = angle_deg.to_radians();
    let (s, co) = (t.sin(), t.cos());
    let (s2, c2, sc) = (s * s, co * co, s * co);
    Matrix2::new(
        c(c2, -s2),
        c(sc, sc),
        c(sc, sc),
        c(s2, -c2),
    )
}

/// Relative phase diag(1, e^{iθ}) between the two amplitudes of a mode pair.
pub fn phase_shift(setting: &PhaseSetting) -> Matrix2<Complex64> {
    Matrix2::new(
        c(1.0, 0.0),
        c(0.0, 0.0),
        c(0.0, 0.0),
        Complex64::from_polar(1.0, setting.theta),
    )
}

/// A Jones matrix acting on the (H, V) pair of one path.
pub fn jones_on_path(
    registry: &ModeRegistry,
    path: &str,
    jones: &Matrix2<Complex64>,
) -> Result<ElementTransform> {
    let h = registry.mode(path, Polarization::H)?;
    let v = registry.mode(path, Polarization::V)?;
    let m = DMatrix::from_row_slice(
        2,
        2,
        &[jones[(0, 0)], jones[(0, 1)], jones[(1, 0)], jones[(1, 1)]],
    );
    ElementTransform::new(vec![h, v], m)
}

/// A common phase e^{iθ} on both polarizations of one path.
pub fn path_phase(registry: &ModeRegistry, path: &str, theta: f64) -> Result<ElementTransform> {
    let [h, v] = registry.path_modes(path)?;
    let p = Complex64::from_polar(1.0, theta);
    let m = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![p, p]));
    ElementTransform::new(vec![h, v], m)
}

/// In-place polarizing beam splitter on two spatial ports: H transmits
/// (port-preserving), V reflects (port-swapping) with phases (i, −i).
/// Applying the element twice is the identity.
pub fn pbs(registry: &ModeRegistry, port_a: &str, port_b: &str) -> Result<ElementTransform> {
    let [ah, av] = registry.path_modes(port_a)?;
    let [bh, bv] = registry.path_modes(port_b)?;
    ElementTransform::routing(&[
        (ah, ah, c(1.0, 0.0)),
        (bh, bh, c(1.0, 0.0)),
        (av, bv, c(0.0, 1.0)),
        (bv, av, c(0.0, -1.0)),
    ])
}

/// In-place 50:50 non-polarizing beam splitter on two spatial ports,
/// polarization-independent, with the symmetric (i-reflection) convention.
pub fn npbs(registry: &ModeRegistry, port_a: &str, port_b: &str) -> Result<ElementTransform> {
    let [ah, av] = registry.path_modes(port_a)?;
    let [bh, bv] = registry.path_modes(port_b)?;
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let t = c(s, 0.0);
    let r = c(0.0, s);
    let z = c(0.0, 0.0);
    // Per polarization: a -> (a + i b)/√2, b -> (i a + b)/√2.
    let m = DMatrix::from_row_slice(
        4,
        4,
        &[
            t, z, r, z, //
            z, t, z, r, //
            r, z, t, z, //
            z, r, z, t,
        ],
    );
    ElementTransform::new(vec![ah, av, bh, bv], m)
}

/// 50:50 splitter routing two input paths onto two output paths:
/// `in_a` transmits to `out`, `in_b` reflects into `out` with phase i.
pub fn npbs_routed(
    registry: &ModeRegistry,
    in_a: &str,
    in_b: &str,
    out: &str,
    dump: &str,
) -> Result<ElementTransform> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let t = c(s, 0.0);
    let r = c(0.0, s);
    let mut modes = Vec::with_capacity(8);
    for path in [in_a, in_b, out, dump] {
        let [h, v] = registry.path_modes(path)?;
        modes.push(h);
        modes.push(v);
    }
    // Mode order (in_a, in_b, out, dump) x (H, V); the out/dump columns
    // route back to the inputs so the 8x8 element is unitary. Those return
    // paths are never occupied when the element is used.
    let mut m = DMatrix::zeros(8, 8);
    for p in 0..2 {
        let (ia, ib, ou, du) = (p, 2 + p, 4 + p, 6 + p);
        m[(ou, ia)] = t;
        m[(du, ia)] = r;
        m[(ou, ib)] = r;
        m[(du, ib)] = t;
        m[(ia, ou)] = t;
        m[(ib, ou)] = r;
        m[(ia, du)] = r;
        m[(ib, du)] = t;
    }
    ElementTransform::new(modes, m)
}

/// Polarizing merge routing H of `in_h` and V of `in_v` onto `out`; the
/// complementary components leave through `dump`. V picks up the reflection
/// phase i.
pub fn pbs_routed(
    registry: &ModeRegistry,
    in_a: &str,
    in_b: &str,
    out: &str,
    dump: &str,
) -> Result<ElementTransform> {
    let [a_h, a_v] = registry.path_modes(in_a)?;
    let [b_h, b_v] = registry.path_modes(in_b)?;
    let [o_h, o_v] = registry.path_modes(out)?;
    let [d_h, d_v] = registry.path_modes(dump)?;
    let one = c(1.0, 0.0);
    let i = c(0.0, 1.0);
    ElementTransform::routing(&[
        // H transmits straight through; V reflects across.
        (a_h, o_h, one),
        (o_h, a_h, one),
        (a_v, d_v, i),
        (d_v, a_v, i),
        (b_h, d_h, one),
        (d_h, b_h, one),
        (b_v, o_v, i),
        (o_v, b_v, i),
    ])
}

/// Calcite beam displacer splitting one path by polarization: H continues on
/// `out_h`, V is displaced onto `out_v`. Pure mode relabeling.
pub fn beam_displacer_split(
    registry: &ModeRegistry,
    input: &str,
    out_h: &str,
    out_v: &str,
) -> Result<ElementTransform> {
    let [i_h, i_v] = registry.path_modes(input)?;
    let [oh_h, oh_v] = registry.path_modes(out_h)?;
    let [ov_h, ov_v] = registry.path_modes(out_v)?;
    let one = c(1.0, 0.0);
    ElementTransform::routing(&[
        (i_h, oh_h, one),
        (oh_h, i_h, one),
        (i_v, ov_v, one),
        (ov_v, i_v, one),
        (oh_v, ov_h, one),
        (ov_h, oh_v, one),
    ])
}

/// The recombining displacer: H of `in_h` and V of `in_v` merge onto `out`;
/// the orthogonal components land on `dump`. Pure mode relabeling.
pub fn beam_displacer_merge(
    registry: &ModeRegistry,
    in_h: &str,
    in_v: &str,
    out: &str,
    dump: &str,
) -> Result<ElementTransform> {
    let [ih_h, ih_v] = registry.path_modes(in_h)?;
    let [iv_h, iv_v] = registry.path_modes(in_v)?;
    let [o_h, o_v] = registry.path_modes(out)?;
    let [d_h, d_v] = registry.path_modes(dump)?;
    let one = c(1.0, 0.0);
    ElementTransform::routing(&[
        (ih_h, o_h, one),
        (o_h, ih_h, one),
        (iv_v, o_v, one),
        (o_v, iv_v, one),
        (ih_v, d_v, one),
        (d_v, ih_v, one),
        (iv_h, d_h, one),
        (d_h, iv_h, one),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{unitarity_deviation, Occupation, PhotonicState};
    use approx::assert_relative_eq;
    use nalgebra::Vector2;

    fn apply2(m: &Matrix2<Complex64>, h: Complex64, v: Complex64) -> Vector2<Complex64> {
        m * Vector2::new(h, v)
    }

    fn up_to_phase(a: &Vector2<Complex64>, b: &Vector2<Complex64>) -> f64 {
        // 1 - |⟨a|b⟩| for unit vectors
        1.0 - (a.adjoint() * b)[(0, 0)].norm()
    }

    #[test]
    fn hwp_values() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        // hwp(22.5°)|H⟩ = |D⟩
        let d = apply2(&hwp(22.5), c(1.0, 0.0), c(0.0, 0.0));
        assert_relative_eq!(d[0].re, s, epsilon = 1e-12);
        assert_relative_eq!(d[1].re, s, epsilon = 1e-12);
        // hwp(45°)|H⟩ = |V⟩
        let v = apply2(&hwp(45.0), c(1.0, 0.0), c(0.0, 0.0));
        assert_relative_eq!(v[0].norm(), 0.0, epsilon = 1e-12);
        assert_relative_eq!(v[1].re, 1.0, epsilon = 1e-12);
        // hwp(0°)|V⟩ = −|V⟩
        let mv = apply2(&hwp(0.0), c(0.0, 0.0), c(1.0, 0.0));
        assert_relative_eq!(mv[1].re, -1.0, epsilon = 1e-12);
    }

    #[test]
    fn qwp_values() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        // qwp(45°)|H⟩ ∝ |R⟩ = (|H⟩ + i|V⟩)/√2
        let r = apply2(&qwp(45.0), c(1.0, 0.0), c(0.0, 0.0));
        let r_target = Vector2::new(c(s, 0.0), c(0.0, s));
        assert!(up_to_phase(&r, &r_target) < 1e-12);
        // qwp(0°)|H⟩ ∝ |H⟩
        let h = apply2(&qwp(0.0), c(1.0, 0.0), c(0.0, 0.0));
        assert!(up_to_phase(&h, &Vector2::new(c(1.0, 0.0), c(0.0, 0.0))) < 1e-12);
    }

    #[test]
    fn two_quarter_waves_make_a_half_wave() {
        for deg in [0.0, 13.0, 22.5, 45.0, 77.0] {
            let q2 = qwp(deg) * qwp(deg);
            let h = hwp(deg);
            // compare up to a global phase via the largest element
            let mut phase = c(0.0, 0.0);
            'outer: for i in 0..2 {
                for j in 0..2 {
                    if h[(i, j)].norm() > 0.5 {
                        phase = q2[(i, j)] / h[(i, j)];
                        break 'outer;
                    }
                }
            }
            for i in 0..2 {
                for j in 0..2 {
                    assert_relative_eq!(
                        (q2[(i, j)] - phase * h[(i, j)]).norm(),
                        0.0,
                        epsilon = 1e-10
                    );
                }
            }
        }
    }

    #[test]
    fn wave_plates_are_unitary_on_a_degree_grid() {
        for k in 0..180 {
            let deg = k as f64;
            for m in [hwp(deg), qwp(deg)] {
                let dm = DMatrix::from_row_slice(
                    2,
                    2,
                    &[m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]],
                );
                assert!(unitarity_deviation(&dm) < 1e-10, "angle {deg}");
            }
            let h2 = hwp(deg) * hwp(deg);
            assert_relative_eq!((h2 - Matrix2::identity()).norm(), 0.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn phase_shift_values() {
        let id = phase_shift(&PhaseSetting::new(0.0));
        assert_relative_eq!((id - Matrix2::identity()).norm(), 0.0, epsilon = 1e-12);
        let pi = phase_shift(&PhaseSetting::new(std::f64::consts::PI));
        let out = apply2(&pi, c(1.0, 0.0), c(1.0, 0.0));
        assert_relative_eq!(out[0].re, 1.0, epsilon = 1e-12);
        assert_relative_eq!(out[1].re, -1.0, epsilon = 1e-12);
    }

    #[test]
    fn pbs_transmits_h_reflects_v() {
        let reg = ModeRegistry::dual_rail(&["a", "b"]).unwrap();
        let element = pbs(&reg, "a", "b").unwrap();

        let h_in = PhotonicState::single_photons(reg.clone(), &[0]).unwrap();
        let h_out = h_in.apply(&element).unwrap();
        assert_relative_eq!(
            h_out.amplitude(&Occupation::with_photons(4, &[0])).re,
            1.0,
            epsilon = 1e-12
        );

        let v_in = PhotonicState::single_photons(reg.clone(), &[1]).unwrap();
        let v_out = v_in.apply(&element).unwrap();
        let reflected = Occupation::with_photons(4, &[3]);
        assert_relative_eq!(v_out.amplitude(&reflected).norm(), 1.0, epsilon = 1e-12);

        // Twice = identity (not just up to phase, with this convention).
        let back = v_out.apply(&element).unwrap();
        assert_relative_eq!(
            back.amplitude(&Occupation::with_photons(4, &[1])).re,
            1.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn pbs_splits_mixed_polarization_pair() {
        let reg = ModeRegistry::dual_rail(&["a", "b"]).unwrap();
        let element = pbs(&reg, "a", "b").unwrap();
        // |HV⟩ both in port a -> H stays in a, V hops to b.
        let hv = PhotonicState::single_photons(reg, &[0, 1]).unwrap();
        let out = hv.apply(&element).unwrap();
        let split = Occupation::with_photons(4, &[0, 3]);
        assert_relative_eq!(out.amplitude(&split).norm(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn npbs_balances_a_single_photon() {
        let reg = ModeRegistry::dual_rail(&["a", "b"]).unwrap();
        let element = npbs(&reg, "a", "b").unwrap();
        let one = PhotonicState::single_photons(reg, &[0]).unwrap();
        let out = one.apply(&element).unwrap();
        let stay = Occupation::with_photons(4, &[0]);
        let hop = Occupation::with_photons(4, &[2]);
        assert_relative_eq!(out.amplitude(&stay).norm_sqr(), 0.5, epsilon = 1e-12);
        assert_relative_eq!(out.amplitude(&hop).norm_sqr(), 0.5, epsilon = 1e-12);
    }

    #[test]
    fn npbs_suppresses_coincidences() {
        let reg = ModeRegistry::dual_rail(&["a", "b"]).unwrap();
        let element = npbs(&reg, "a", "b").unwrap();
        // Indistinguishable photons, one per port, same polarization.
        let pair = PhotonicState::single_photons(reg, &[0, 2]).unwrap();
        let out = pair.apply(&element).unwrap();
        let coincidence = Occupation::with_photons(4, &[0, 2]);
        assert_relative_eq!(out.amplitude(&coincidence).norm(), 0.0, epsilon = 1e-12);
        assert!(out.is_normalized());
    }

    #[test]
    fn displacer_split_and_merge_round_trip() {
        let reg = ModeRegistry::dual_rail(&["in", "p1", "p2", "out", "dump"]).unwrap();
        let split = beam_displacer_split(&reg, "in", "p1", "p2").unwrap();
        let merge = beam_displacer_merge(&reg, "p1", "p2", "out", "dump").unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let psi = PhotonicState::from_terms(
            reg.clone(),
            [
                (
                    Occupation::with_photons(10, &[reg.mode("in", Polarization::H).unwrap()]),
                    c(s, 0.0),
                ),
                (
                    Occupation::with_photons(10, &[reg.mode("in", Polarization::V).unwrap()]),
                    c(0.0, s),
                ),
            ],
        )
        .unwrap();
        let displaced = psi.apply(&split).unwrap();
        // α|H⟩ on p1, β|V⟩ on p2
        let p1h = Occupation::with_photons(10, &[reg.mode("p1", Polarization::H).unwrap()]);
        let p2v = Occupation::with_photons(10, &[reg.mode("p2", Polarization::V).unwrap()]);
        assert_relative_eq!(displaced.amplitude(&p1h).re, s, epsilon = 1e-12);
        assert_relative_eq!(displaced.amplitude(&p2v).im, s, epsilon = 1e-12);
        // Recombination restores the original polarization state on "out".
        let merged = displaced.apply(&merge).unwrap();
        let out_h = Occupation::with_photons(10, &[reg.mode("out", Polarization::H).unwrap()]);
        let out_v = Occupation::with_photons(10, &[reg.mode("out", Polarization::V).unwrap()]);
        assert_relative_eq!(merged.amplitude(&out_h).re, s, epsilon = 1e-12);
        assert_relative_eq!(merged.amplitude(&out_v).im, s, epsilon = 1e-12);
    }
}
