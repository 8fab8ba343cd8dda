use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Photon polarization along the horizontal or vertical axis.
#[derive(Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Polarization {
    H,
    V,
}

impl fmt::Display for Polarization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Polarization::H => write!(f, "H"),
            Polarization::V => write!(f, "V"),
        }
    }
}

/// A single optical mode: a named spatial path carrying one polarization.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ModeLabel {
    pub path: String,
    pub pol: Polarization,
}

impl ModeLabel {
    pub fn new(path: impl Into<String>, pol: Polarization) -> Self {
        Self {
            path: path.into(),
            pol,
        }
    }
}

impl fmt::Display for ModeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.path, self.pol)
    }
}

/// Ordered, immutable list of mode labels. The position of a label is the
/// mode index used by occupation vectors for the life of every state built
/// on this registry.
#[derive(Debug, PartialEq, Eq)]
pub struct ModeRegistry {
    labels: Vec<ModeLabel>,
    index: BTreeMap<ModeLabel, usize>,
}

impl ModeRegistry {
    /// Builds a registry from explicit labels. Labels must be unique.
    pub fn new(labels: Vec<ModeLabel>) -> Result<Arc<Self>> {
        let mut index = BTreeMap::new();
        for (i, label) in labels.iter().enumerate() {
            if index.insert(label.clone(), i).is_some() {
                return Err(Error::RegistryConflict(format!(
                    "duplicate mode label {label}"
                )));
            }
        }
        Ok(Arc::new(Self { labels, index }))
    }

    /// Builds a registry with an H and a V mode for every path, in path order.
    pub fn dual_rail(paths: &[&str]) -> Result<Arc<Self>> {
        let mut labels = Vec::with_capacity(paths.len() * 2);
        for path in paths {
            labels.push(ModeLabel::new(*path, Polarization::H));
            labels.push(ModeLabel::new(*path, Polarization::V));
        }
        Self::new(labels)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn label(&self, index: usize) -> &ModeLabel {
        &self.labels[index]
    }

    pub fn labels(&self) -> &[ModeLabel] {
        &self.labels
    }

    /// Index of the mode with the given path and polarization.
    pub fn mode(&self, path: &str, pol: Polarization) -> Result<usize> {
        self.index
            .get(&ModeLabel::new(path, pol))
            .copied()
            .ok_or_else(|| Error::UnknownMode(format!("{path}:{pol}")))
    }

    /// Both mode indices of a path, H first.
    pub fn path_modes(&self, path: &str) -> Result<[usize; 2]> {
        Ok([
            self.mode(path, Polarization::H)?,
            self.mode(path, Polarization::V)?,
        ])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn registry_indexes_are_stable() {
        let reg = ModeRegistry::dual_rail(&["1B", "2B"]).unwrap();
        assert_eq!(reg.len(), 4);
        assert_eq!(reg.mode("1B", Polarization::H).unwrap(), 0);
        assert_eq!(reg.mode("2B", Polarization::V).unwrap(), 3);
        assert_eq!(reg.label(2), &ModeLabel::new("2B", Polarization::H));
    }

    #[test]
    fn duplicate_labels_rejected() {
        let labels = vec![
            ModeLabel::new("a", Polarization::H),
            ModeLabel::new("a", Polarization::H),
        ];
        assert!(ModeRegistry::new(labels).is_err());
    }

    #[test]
    fn unknown_mode_is_an_error() {
        let reg = ModeRegistry::dual_rail(&["1B"]).unwrap();
        assert!(reg.mode("9Z", Polarization::H).is_err());
    }
}
