use std::collections::BTreeMap;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fock::registry::ModeRegistry;
use crate::fock::transform::ElementTransform;
use crate::logical::{DensityMatrix, LogicalOutput, LogicalState};

/// Amplitudes below this magnitude are pruned after every operation.
pub const AMPLITUDE_TOL: f64 = 1e-12;
/// Allowed deviation of Σ|amplitude|² from one for normalized states.
pub const NORM_TOL: f64 = 1e-10;

/// Photon counts per mode. Total over all modes is the photon number.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Occupation(Box<[u8]>);

impl Occupation {
    pub fn empty(n_modes: usize) -> Self {
        Self(vec![0u8; n_modes].into_boxed_slice())
    }

    pub fn from_counts(counts: &[u8]) -> Self {
        Self(counts.to_vec().into_boxed_slice())
    }

    /// One photon in each of the listed modes (repeats stack up).
    pub fn with_photons(n_modes: usize, modes: &[usize]) -> Self {
        let mut counts = vec![0u8; n_modes];
        for &m in modes {
            counts[m] += 1;
        }
        Self(counts.into_boxed_slice())
    }

    pub fn get(&self, mode: usize) -> u8 {
        self.0[mode]
    }

    pub fn counts(&self) -> &[u8] {
        &self.0
    }

    pub fn total(&self) -> u32 {
        self.0.iter().map(|&c| c as u32).sum()
    }

    /// Sum of photons over a set of modes.
    pub fn group_total(&self, modes: &[usize]) -> u32 {
        modes.iter().map(|&m| self.0[m] as u32).sum()
    }

    fn with_replaced(&self, modes: &[usize], new_counts: &[u8]) -> Self {
        let mut counts = self.0.to_vec();
        for (&m, &c) in modes.iter().zip(new_counts) {
            counts[m] = c;
        }
        Self(counts.into_boxed_slice())
    }
}

/// One exactly-one-photon constraint per named mode group.
#[derive(Clone, Debug)]
pub struct DetectionPattern {
    groups: Vec<(String, Vec<usize>)>,
}

impl DetectionPattern {
    pub fn new(groups: Vec<(String, Vec<usize>)>) -> Self {
        Self { groups }
    }

    pub fn groups(&self) -> &[(String, Vec<usize>)] {
        &self.groups
    }

    fn validate(&self, registry: &ModeRegistry) -> Result<()> {
        for (name, modes) in &self.groups {
            for &m in modes {
                if m >= registry.len() {
                    return Err(Error::UnknownMode(format!(
                        "pattern group {name} references mode index {m}"
                    )));
                }
            }
        }
        Ok(())
    }

    fn accepts(&self, occ: &Occupation) -> bool {
        self.groups
            .iter()
            .all(|(_, modes)| occ.group_total(modes) == 1)
    }
}

/// Sparse superposition of multi-photon occupation vectors over the modes of
/// a shared registry. Terms are kept in a sorted map so state traversal is
/// deterministic.
#[derive(Clone, Debug)]
pub struct PhotonicState {
    registry: Arc<ModeRegistry>,
    terms: BTreeMap<Occupation, Complex64>,
    photons: u32,
}

impl PhotonicState {
    /// Builds a state from explicit terms. All occupation vectors must carry
    /// the same photon number; near-zero amplitudes are pruned.
    pub fn from_terms(
        registry: Arc<ModeRegistry>,
        terms: impl IntoIterator<Item = (Occupation, Complex64)>,
    ) -> Result<Self> {
        let mut map = BTreeMap::new();
        let mut photons: Option<u32> = None;
        for (occ, amp) in terms {
            if occ.counts().len() != registry.len() {
                return Err(Error::DimensionMismatch {
                    expected: registry.len(),
                    got: occ.counts().len(),
                });
            }
            let n = occ.total();
            match photons {
                None => photons = Some(n),
                Some(p) if p != n => {
                    return Err(Error::Encoding(format!(
                        "mixed photon numbers in one state: {p} and {n}"
                    )))
                }
                _ => {}
            }
            if amp.norm() > AMPLITUDE_TOL {
                let entry = map.entry(occ).or_insert(Complex64::new(0.0, 0.0));
                *entry += amp;
            }
        }
        map.retain(|_, a| a.norm() > AMPLITUDE_TOL);
        Ok(Self {
            registry,
            terms: map,
            photons: photons.unwrap_or(0),
        })
    }

    /// Product state with one photon in each listed (path, polarization) mode.
    pub fn single_photons(
        registry: Arc<ModeRegistry>,
        modes: &[usize],
    ) -> Result<Self> {
        let occ = Occupation::with_photons(registry.len(), modes);
        Self::from_terms(registry, [(occ, Complex64::new(1.0, 0.0))])
    }

    pub fn registry(&self) -> &Arc<ModeRegistry> {
        &self.registry
    }

    pub fn photons(&self) -> u32 {
        self.photons
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Occupation, &Complex64)> {
        self.terms.iter()
    }

    pub fn n_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn amplitude(&self, occ: &Occupation) -> Complex64 {
        self.terms
            .get(occ)
            .copied()
            .unwrap_or(Complex64::new(0.0, 0.0))
    }

    pub fn norm_sqr(&self) -> f64 {
        self.terms.values().map(|a| a.norm_sqr()).sum()
    }

    pub fn is_normalized(&self) -> bool {
        (self.norm_sqr() - 1.0).abs() <= NORM_TOL
    }

    /// Rescaled copy with unit norm. Empty states are returned unchanged.
    pub fn normalized(&self) -> Self {
        let n = self.norm_sqr().sqrt();
        if n == 0.0 {
            return self.clone();
        }
        let mut out = self.clone();
        for amp in out.terms.values_mut() {
            *amp /= n;
        }
        out
    }

    /// Multiplies every amplitude by a scalar (used when assembling
    /// superpositions term-wise in tests).
    pub fn scaled(&self, factor: Complex64) -> Self {
        let mut out = self.clone();
        for amp in out.terms.values_mut() {
            *amp *= factor;
        }
        out.terms.retain(|_, a| a.norm() > AMPLITUDE_TOL);
        out
    }

    /// Term-wise sum of two states over the same registry.
    pub fn sum(&self, other: &Self) -> Result<Self> {
        if !Arc::ptr_eq(&self.registry, &other.registry) && self.registry != other.registry {
            return Err(Error::RegistryConflict(
                "sum of states over different registries".into(),
            ));
        }
        Self::from_terms(
            self.registry.clone(),
            self.terms
                .iter()
                .chain(other.terms.iter())
                .map(|(o, a)| (o.clone(), *a)),
        )
    }

    /// Tensor product. Registries must be identical (then every term pair
    /// must occupy disjoint modes) or have disjoint label sets, in which case
    /// the result lives on the concatenated registry.
    pub fn tensor(&self, other: &Self) -> Result<Self> {
        let same = Arc::ptr_eq(&self.registry, &other.registry)
            || *self.registry == *other.registry;
        if same {
            let mut terms = Vec::with_capacity(self.terms.len() * other.terms.len());
            for (occ_a, amp_a) in &self.terms {
                for (occ_b, amp_b) in &other.terms {
                    let mut counts = occ_a.counts().to_vec();
                    for (m, &c) in occ_b.counts().iter().enumerate() {
                        if c > 0 {
                            if counts[m] > 0 {
                                return Err(Error::RegistryConflict(format!(
                                    "tensor factors both occupy mode {}",
                                    self.registry.label(m)
                                )));
                            }
                            counts[m] = c;
                        }
                    }
                    terms.push((Occupation::from_counts(&counts), amp_a * amp_b));
                }
            }
            return Self::from_terms(self.registry.clone(), terms);
        }

        // Disjoint registries: concatenate labels and shift the second factor.
        let mut labels = self.registry.labels().to_vec();
        for label in other.registry.labels() {
            if labels.contains(label) {
                return Err(Error::RegistryConflict(format!(
                    "registries share label {label} but are not identical"
                )));
            }
            labels.push(label.clone());
        }
        let registry = ModeRegistry::new(labels)?;
        let offset = self.registry.len();
        let total = registry.len();
        let mut terms = Vec::with_capacity(self.terms.len() * other.terms.len());
        for (occ_a, amp_a) in &self.terms {
            for (occ_b, amp_b) in &other.terms {
                let mut counts = vec![0u8; total];
                counts[..offset].copy_from_slice(occ_a.counts());
                counts[offset..].copy_from_slice(occ_b.counts());
                terms.push((Occupation::from_counts(&counts), amp_a * amp_b));
            }
        }
        Self::from_terms(registry, terms)
    }

    /// Applies a mode-subset unitary by rewriting creation operators:
    /// `a†_i -> Σ_j U_ji a†_j` for every mode `i` the element touches.
    pub fn apply(&self, t: &ElementTransform) -> Result<Self> {
        let modes = t.modes();
        for &m in modes {
            if m >= self.registry.len() {
                return Err(Error::UnknownMode(format!("transform mode index {m}")));
            }
        }
        let u = t.matrix();
        let k = modes.len();
        let mut out: BTreeMap<Occupation, Complex64> = BTreeMap::new();

        for (occ, amp) in &self.terms {
            let local: Vec<u8> = modes.iter().map(|&m| occ.get(m)).collect();
            // |n⟩ = Π (a†)^n / √(n!) |0⟩, so divide by the source factorials
            // up front and multiply the destination factorials back in at the
            // end of the expansion.
            let mut norm_in = 1.0;
            for &n in &local {
                norm_in *= factorial(n);
            }
            let base = amp / norm_in.sqrt();

            // Monomials over the local modes, built photon by photon.
            let mut poly: BTreeMap<Vec<u8>, Complex64> = BTreeMap::new();
            poly.insert(vec![0u8; k], base);
            for (i, &n) in local.iter().enumerate() {
                for _ in 0..n {
                    let mut next: BTreeMap<Vec<u8>, Complex64> = BTreeMap::new();
                    for (mono, coeff) in &poly {
                        for j in 0..k {
                            let term = u[(j, i)] * coeff;
                            if term.norm() == 0.0 {
                                continue;
                            }
                            let mut m = mono.clone();
                            m[j] += 1;
                            *next.entry(m).or_insert(Complex64::new(0.0, 0.0)) += term;
                        }
                    }
                    poly = next;
                }
            }

            for (mono, coeff) in poly {
                let mut norm_out = 1.0;
                for &n in &mono {
                    norm_out *= factorial(n);
                }
                let occ_out = occ.with_replaced(modes, &mono);
                *out.entry(occ_out).or_insert(Complex64::new(0.0, 0.0)) +=
                    coeff * norm_out.sqrt();
            }
        }

        out.retain(|_, a| a.norm() > AMPLITUDE_TOL);
        Ok(Self {
            registry: self.registry.clone(),
            terms: out,
            photons: self.photons,
        })
    }

    /// Projects onto the detection pattern. Returns the pattern probability
    /// and the renormalized conditional state, or `None` when the projected
    /// component is empty (a legitimate outcome for, e.g., bunched terms).
    pub fn post_select(&self, pattern: &DetectionPattern) -> Result<(f64, Option<Self>)> {
        pattern.validate(&self.registry)?;
        let kept: BTreeMap<Occupation, Complex64> = self
            .terms
            .iter()
            .filter(|(occ, _)| pattern.accepts(occ))
            .map(|(o, a)| (o.clone(), *a))
            .collect();
        let prob: f64 = kept.values().map(|a| a.norm_sqr()).sum();
        if prob == 0.0 {
            return Ok((0.0, None));
        }
        let scale = prob.sqrt();
        let terms = kept
            .into_iter()
            .map(|(o, a)| (o, a / scale))
            .collect::<BTreeMap<_, _>>();
        Ok((
            prob,
            Some(Self {
                registry: self.registry.clone(),
                terms,
                photons: self.photons,
            }),
        ))
    }

    /// Distribution of photon counts over a list of disjoint mode groups.
    /// Exhaustive by construction: the probabilities sum to the state norm.
    pub fn group_count_distribution(
        &self,
        groups: &[Vec<usize>],
    ) -> BTreeMap<Vec<u32>, f64> {
        let mut dist: BTreeMap<Vec<u32>, f64> = BTreeMap::new();
        for (occ, amp) in &self.terms {
            let counts: Vec<u32> = groups.iter().map(|g| occ.group_total(g)).collect();
            *dist.entry(counts).or_insert(0.0) += amp.norm_sqr();
        }
        dist
    }

    /// Reads the state as logical qubits over dual-rail pairs, |1⟩ ≡ H and
    /// |0⟩ ≡ V. Every term must place exactly one photon in each pair; modes
    /// outside the pairs are traced out, so a state still entangled with
    /// residual modes reduces to a density matrix.
    pub fn reduce_to_qubits(&self, pairs: &[(usize, usize)]) -> Result<LogicalOutput> {
        let n = pairs.len();
        let dim = 1usize << n;
        let mut groups: BTreeMap<Occupation, Vec<Complex64>> = BTreeMap::new();

        let pair_modes: Vec<usize> = pairs.iter().flat_map(|&(h, v)| [h, v]).collect();
        for &m in &pair_modes {
            if m >= self.registry.len() {
                return Err(Error::UnknownMode(format!("qubit pair mode index {m}")));
            }
        }

        for (occ, amp) in &self.terms {
            let mut index = 0usize;
            for &(h, v) in pairs {
                let (nh, nv) = (occ.get(h), occ.get(v));
                let bit = match (nh, nv) {
                    (1, 0) => 1usize,
                    (0, 1) => 0usize,
                    _ => {
                        return Err(Error::Encoding(format!(
                            "occupation ({nh},{nv}) on pair ({},{}) is outside the dual-rail subspace",
                            self.registry.label(h),
                            self.registry.label(v),
                        )))
                    }
                };
                index = (index << 1) | bit;
            }
            let residual = occ.with_replaced(&pair_modes, &vec![0u8; pair_modes.len()]);
            let slot = groups
                .entry(residual)
                .or_insert_with(|| vec![Complex64::new(0.0, 0.0); dim]);
            slot[index] += amp;
        }

        if groups.len() == 1 {
            let amps = groups.into_values().next().unwrap();
            return Ok(LogicalOutput::Pure(LogicalState::new(amps)?));
        }
        // Residual modes differ between terms: trace them out.
        let mut rho = DensityMatrix::zeros(n);
        for amps in groups.values() {
            rho.add_outer_product(amps);
        }
        Ok(LogicalOutput::Mixed(rho))
    }
}

fn factorial(n: u8) -> f64 {
    (1..=n as u64).product::<u64>() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::DMatrix;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn two_mode_registry() -> Arc<ModeRegistry> {
        ModeRegistry::dual_rail(&["a"]).unwrap()
    }

    /// 50:50 coupler with the real (Hadamard-like) convention, used to pin
    /// down the textbook bunching algebra independent of the circuit's own
    /// beam-splitter phase choice.
    fn real_coupler() -> ElementTransform {
        let s = 1.0 / 2f64.sqrt();
        let m = DMatrix::from_row_slice(
            2,
            2,
            &[c(s, 0.0), c(s, 0.0), c(s, 0.0), c(-s, 0.0)],
        );
        ElementTransform::new(vec![0, 1], m).unwrap()
    }

    #[test]
    fn tensor_of_single_photons_is_a_product_state() {
        let ra = ModeRegistry::dual_rail(&["a"]).unwrap();
        let rb = ModeRegistry::dual_rail(&["b"]).unwrap();
        let a = PhotonicState::single_photons(ra.clone(), &[0]).unwrap();
        let b = PhotonicState::single_photons(rb, &[0]).unwrap();
        let ab = a.tensor(&b).unwrap();
        assert_eq!(ab.photons(), 2);
        assert_eq!(ab.n_terms(), 1);
        let occ = Occupation::with_photons(4, &[0, 2]);
        assert_relative_eq!(ab.amplitude(&occ).re, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn tensor_distributes_over_superpositions() {
        let reg = ModeRegistry::dual_rail(&["a", "b", "c"]).unwrap();
        let s = 1.0 / 2f64.sqrt();
        // (|10⟩ + |01⟩)/√2 over modes a:H, b:H
        let sup = PhotonicState::from_terms(
            reg.clone(),
            [
                (Occupation::with_photons(6, &[0]), c(s, 0.0)),
                (Occupation::with_photons(6, &[2]), c(s, 0.0)),
            ],
        )
        .unwrap();
        let one = PhotonicState::single_photons(reg, &[4]).unwrap();
        let out = sup.tensor(&one).unwrap();
        assert_eq!(out.n_terms(), 2);
        assert_relative_eq!(
            out.amplitude(&Occupation::with_photons(6, &[0, 4])).re,
            s,
            epsilon = 1e-12
        );
        assert_relative_eq!(
            out.amplitude(&Occupation::with_photons(6, &[2, 4])).re,
            s,
            epsilon = 1e-12
        );
    }

    #[test]
    fn tensor_with_overlapping_occupation_is_rejected() {
        let reg = two_mode_registry();
        let a = PhotonicState::single_photons(reg.clone(), &[0]).unwrap();
        let b = PhotonicState::single_photons(reg, &[0]).unwrap();
        assert!(matches!(a.tensor(&b), Err(Error::RegistryConflict(_))));
    }

    #[test]
    fn coupler_splits_a_single_photon() {
        let reg = two_mode_registry();
        let one = PhotonicState::single_photons(reg, &[0]).unwrap();
        let out = one.apply(&real_coupler()).unwrap();
        let s = 1.0 / 2f64.sqrt();
        assert_relative_eq!(
            out.amplitude(&Occupation::with_photons(2, &[0])).re,
            s,
            epsilon = 1e-12
        );
        assert_relative_eq!(
            out.amplitude(&Occupation::with_photons(2, &[1])).re,
            s,
            epsilon = 1e-12
        );
        assert!(out.is_normalized());
    }

    #[test]
    fn coupler_bunches_photon_pairs() {
        let reg = two_mode_registry();
        let pair = PhotonicState::single_photons(reg, &[0, 1]).unwrap();
        let out = pair.apply(&real_coupler()).unwrap();
        let s = 1.0 / 2f64.sqrt();
        let both = Occupation::with_photons(2, &[0, 1]);
        let two_a = Occupation::from_counts(&[2, 0]);
        let two_b = Occupation::from_counts(&[0, 2]);
        assert_relative_eq!(out.amplitude(&both).norm(), 0.0, epsilon = 1e-12);
        assert_relative_eq!(out.amplitude(&two_a).re, s, epsilon = 1e-12);
        assert_relative_eq!(out.amplitude(&two_b).re, -s, epsilon = 1e-12);
        assert!(out.is_normalized());
    }

    #[test]
    fn identity_transform_preserves_state() {
        let reg = two_mode_registry();
        let s = 1.0 / 2f64.sqrt();
        let state = PhotonicState::from_terms(
            reg,
            [
                (Occupation::with_photons(2, &[0]), c(s, 0.0)),
                (Occupation::with_photons(2, &[1]), c(0.0, s)),
            ],
        )
        .unwrap();
        let id = ElementTransform::new(vec![0, 1], DMatrix::identity(2, 2)).unwrap();
        let out = state.apply(&id).unwrap();
        for (occ, amp) in state.terms() {
            assert_relative_eq!((out.amplitude(occ) - amp).norm(), 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn apply_then_dagger_round_trips() {
        let reg = two_mode_registry();
        let pair = PhotonicState::single_photons(reg, &[0, 1]).unwrap();
        let bs = real_coupler();
        let back = pair.apply(&bs).unwrap().apply(&bs.dagger()).unwrap();
        assert_eq!(back.n_terms(), 1);
        assert_relative_eq!(
            back.amplitude(&Occupation::with_photons(2, &[0, 1])).re,
            1.0,
            epsilon = 1e-10
        );
    }

    #[test]
    fn post_select_rejects_bunched_terms() {
        let reg = two_mode_registry();
        let bunched = PhotonicState::from_terms(
            reg,
            [(Occupation::from_counts(&[2, 0]), c(1.0, 0.0))],
        )
        .unwrap();
        let pattern = DetectionPattern::new(vec![
            ("a".into(), vec![0]),
            ("b".into(), vec![1]),
        ]);
        let (p, cond) = bunched.post_select(&pattern).unwrap();
        assert_eq!(p, 0.0);
        assert!(cond.is_none());
    }

    #[test]
    fn post_select_unknown_mode_errors() {
        let reg = two_mode_registry();
        let state = PhotonicState::single_photons(reg, &[0]).unwrap();
        let pattern = DetectionPattern::new(vec![("g".into(), vec![7])]);
        assert!(state.post_select(&pattern).is_err());
    }

    #[test]
    fn group_distribution_is_exhaustive() {
        let reg = two_mode_registry();
        let pair = PhotonicState::single_photons(reg, &[0, 1]).unwrap();
        let out = pair.apply(&real_coupler()).unwrap();
        let dist = out.group_count_distribution(&[vec![0], vec![1]]);
        let total: f64 = dist.values().sum();
        assert_relative_eq!(total, 1.0, epsilon = 1e-10);
    }

    #[test]
    fn reduce_single_photon_polarization() {
        let reg = two_mode_registry();
        // photon in H only -> logical |1⟩
        let h = PhotonicState::single_photons(reg.clone(), &[0]).unwrap();
        match h.reduce_to_qubits(&[(0, 1)]).unwrap() {
            LogicalOutput::Pure(state) => {
                assert_relative_eq!(state.amplitudes()[1].re, 1.0, epsilon = 1e-12);
                assert_relative_eq!(state.amplitudes()[0].norm(), 0.0, epsilon = 1e-12);
            }
            other => panic!("expected pure state, got {other:?}"),
        }
        // (H + V)/√2 -> (|1⟩ + |0⟩)/√2
        let s = 1.0 / 2f64.sqrt();
        let sup = PhotonicState::from_terms(
            reg,
            [
                (Occupation::with_photons(2, &[0]), c(s, 0.0)),
                (Occupation::with_photons(2, &[1]), c(s, 0.0)),
            ],
        )
        .unwrap();
        match sup.reduce_to_qubits(&[(0, 1)]).unwrap() {
            LogicalOutput::Pure(state) => {
                assert_relative_eq!(state.amplitudes()[0].re, s, epsilon = 1e-12);
                assert_relative_eq!(state.amplitudes()[1].re, s, epsilon = 1e-12);
            }
            other => panic!("expected pure state, got {other:?}"),
        }
    }

    #[test]
    fn reduce_rejects_non_dual_rail_occupation() {
        let reg = two_mode_registry();
        let bunched = PhotonicState::from_terms(
            reg,
            [(Occupation::from_counts(&[2, 0]), c(1.0, 0.0))],
        )
        .unwrap();
        assert!(matches!(
            bunched.reduce_to_qubits(&[(0, 1)]),
            Err(Error::Encoding(_))
        ));
    }
}
