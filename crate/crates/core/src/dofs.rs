//! Actuator orderings and remapping of joint-value vectors between them.

use std::collections::{HashMap, HashSet};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DofError {
    #[error("duplicate joint `{0}` in DoF config")]
    DuplicateJoint(String),
    #[error("joint `{joint}` has invalid scale {scale} (must be finite and nonzero)")]
    BadScale { joint: String, scale: f64 },
    #[error("joint `{0}` has a non-finite offset or default")]
    NonFinite(String),
    #[error("destination joint `{0}` is absent from the source and has no default")]
    MissingDefault(String),
    #[error("value vector has length {found}, source config has {expected} joints")]
    LengthMismatch { expected: usize, found: usize },
}

/// One actuator: `external = internal · scale + offset`.
///
/// `kp` / `kd` are carried through untouched so a controller-side config can
/// live in the same file.
#[derive(Debug, Clone, PartialEq)]
pub struct DofEntry {
    pub name: String,
    pub scale: f64,
    pub offset: f64,
    pub default: Option<f64>,
    pub kp: Option<f64>,
    pub kd: Option<f64>,
}

impl DofEntry {
    pub fn new(name: impl Into<String>) -> Self {
        Self { name: name.into(), scale: 1.0, offset: 0.0, default: None, kp: None, kd: None }
    }

    pub fn with_default(mut self, default: f64) -> Self {
        self.default = Some(default);
        self
    }

    pub fn with_scale_offset(mut self, scale: f64, offset: f64) -> Self {
        self.scale = scale;
        self.offset = offset;
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DofConfig {
    entries: Vec<DofEntry>,
}

impl DofConfig {
    pub fn new(entries: Vec<DofEntry>) -> Result<Self, DofError> {
        let mut seen = HashSet::new();
        for e in &entries {
            if !seen.insert(e.name.as_str()) {
                return Err(DofError::DuplicateJoint(e.name.clone()));
            }
            if !e.scale.is_finite() || e.scale == 0.0 {
                return Err(DofError::BadScale { joint: e.name.clone(), scale: e.scale });
            }
            if !e.offset.is_finite() || e.default.is_some_and(|d| !d.is_finite()) {
                return Err(DofError::NonFinite(e.name.clone()));
            }
        }
        Ok(Self { entries })
    }

    /// Unit scale, zero offset, no defaults.
    pub fn from_names<S: AsRef<str>>(names: &[S]) -> Result<Self, DofError> {
        Self::new(names.iter().map(|n| DofEntry::new(n.as_ref())).collect())
    }

    pub fn entries(&self) -> &[DofEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Reorders and rescales `values` (ordered by `src`) into `dst`'s ordering.
///
/// Each destination joint present in `src` gets
/// `(v − src.offset) / src.scale · dst.scale + dst.offset`; joints missing from
/// `src` take their default; joints only in `src` are dropped.
pub fn remap_dofs(values: &[f64], src: &DofConfig, dst: &DofConfig) -> Result<Vec<f64>, DofError> {
    if values.len() != src.len() {
        return Err(DofError::LengthMismatch { expected: src.len(), found: values.len() });
    }
    let index: HashMap<&str, usize> = src.entries.iter().enumerate().map(|(i, e)| (e.name.as_str(), i)).collect();
    dst.entries
        .iter()
        .map(|d| match index.get(d.name.as_str()) {
            Some(&i) => {
                let s = &src.entries[i];
                Ok((values[i] - s.offset) / s.scale * d.scale + d.offset)
            }
            None => d.default.ok_or_else(|| DofError::MissingDefault(d.name.clone())),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_and_permutation() {
        let a = DofConfig::from_names(&["hip", "knee"]).unwrap();
        assert_eq!(remap_dofs(&[0.1, 0.2], &a, &a).unwrap(), vec![0.1, 0.2]);
        let b = DofConfig::from_names(&["knee", "hip"]).unwrap();
        assert_eq!(remap_dofs(&[0.1, 0.2], &a, &b).unwrap(), vec![0.2, 0.1]);
    }

    #[test]
    fn scale_offset_and_defaults() {
        let src = DofConfig::new(vec![DofEntry::new("a").with_scale_offset(2.0, 1.0), DofEntry::new("b")]).unwrap();
        let dst = DofConfig::new(vec![
            DofEntry::new("c").with_default(0.5),
            DofEntry::new("a").with_scale_offset(-1.0, 0.25),
        ])
        .unwrap();
        // (3 - 1) / 2 * -1 + 0.25
        assert_eq!(remap_dofs(&[3.0, 9.0], &src, &dst).unwrap(), vec![0.5, -0.75]);
    }

    #[test]
    fn errors() {
        let src = DofConfig::from_names(&["a"]).unwrap();
        let dst = DofConfig::from_names(&["a", "b"]).unwrap();
        assert_eq!(remap_dofs(&[1.0], &src, &dst).unwrap_err(), DofError::MissingDefault("b".into()));
        assert!(matches!(remap_dofs(&[1.0, 2.0], &src, &dst).unwrap_err(), DofError::LengthMismatch { .. }));
        assert!(DofConfig::from_names(&["a", "a"]).is_err());
        assert!(DofConfig::new(vec![DofEntry::new("a").with_scale_offset(0.0, 0.0)]).is_err());
    }
}
