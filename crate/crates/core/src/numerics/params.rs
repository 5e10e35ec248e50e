use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One named block of a flat parameter array.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayoutEntry {
    pub name: String,
    pub offset: usize,
    pub shape: Vec<usize>,
}

impl LayoutEntry {
    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Flat parameter array with a named layout. Entries partition the array in
/// order with no gaps.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(try_from = "ParamDocument", into = "ParamDocument")]
pub struct ParamVector {
    layout: Vec<LayoutEntry>,
    values: Vec<f64>,
}

impl ParamVector {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends a zero-filled block and returns its offset.
    pub fn push(&mut self, name: impl Into<String>, shape: Vec<usize>) -> usize {
        let offset = self.values.len();
        let entry = LayoutEntry {
            name: name.into(),
            offset,
            shape,
        };
        self.values.resize(offset + entry.len(), 0.0);
        self.layout.push(entry);
        offset
    }

    pub fn from_parts(layout: Vec<LayoutEntry>, values: Vec<f64>) -> Result<Self> {
        let p = Self { layout, values };
        p.validate()?;
        Ok(p)
    }

    /// Checks the layout partitions the array and all values are finite.
    pub fn validate(&self) -> Result<()> {
        let mut cursor = 0;
        for entry in &self.layout {
            if entry.offset != cursor {
                return Err(Error::Dimension(format!(
                    "layout entry {} starts at {} instead of {cursor}",
                    entry.name, entry.offset
                )));
            }
            cursor += entry.len();
        }
        if cursor != self.values.len() {
            return Err(Error::Dimension(format!(
                "layout covers {cursor} values but array has {}",
                self.values.len()
            )));
        }
        if let Some(i) = self.values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("parameter {i}")));
        }
        Ok(())
    }

    pub fn layout(&self) -> &[LayoutEntry] {
        &self.layout
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn entry(&self, name: &str) -> Option<&LayoutEntry> {
        self.layout.iter().find(|e| e.name == name)
    }

    pub fn get(&self, name: &str) -> Option<&[f64]> {
        self.entry(name)
            .map(|e| &self.values[e.offset..e.offset + e.len()])
    }
}

/// Checkpoint form of a [`ParamVector`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ParamDocument {
    pub version: u32,
    pub layout: Vec<LayoutEntry>,
    pub values: Vec<f64>,
}

pub const PARAM_DOCUMENT_VERSION: u32 = 1;

impl From<ParamVector> for ParamDocument {
    fn from(p: ParamVector) -> Self {
        Self {
            version: PARAM_DOCUMENT_VERSION,
            layout: p.layout,
            values: p.values,
        }
    }
}

impl TryFrom<ParamDocument> for ParamVector {
    type Error = Error;

    fn try_from(doc: ParamDocument) -> Result<Self> {
        if doc.version != PARAM_DOCUMENT_VERSION {
            return Err(Error::Config(format!(
                "unsupported parameter document version {}",
                doc.version
            )));
        }
        ParamVector::from_parts(doc.layout, doc.values)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn layout_partitions_values() {
        let mut p = ParamVector::new();
        assert_eq!(p.push("a", vec![2, 3]), 0);
        assert_eq!(p.push("b", vec![4]), 6);
        assert_eq!(p.len(), 10);
        p.validate().unwrap();
        assert_eq!(p.get("b").unwrap().len(), 4);
        assert!(p.get("c").is_none());
    }

    #[test]
    fn rejects_gaps_and_non_finite() {
        let layout = vec![LayoutEntry {
            name: "a".into(),
            offset: 1,
            shape: vec![2],
        }];
        assert!(ParamVector::from_parts(layout, vec![0.0; 3]).is_err());
        let layout = vec![LayoutEntry {
            name: "a".into(),
            offset: 0,
            shape: vec![2],
        }];
        assert!(ParamVector::from_parts(layout, vec![0.0, f64::NAN]).is_err());
    }

    #[test]
    fn document_requires_version() {
        let json = r#"{"layout":[],"values":[]}"#;
        assert!(serde_json::from_str::<ParamVector>(json).is_err());
        let json = r#"{"version":9,"layout":[],"values":[]}"#;
        assert!(serde_json::from_str::<ParamVector>(json).is_err());
    }

    proptest! {
        #[test]
        fn round_trips_bit_exactly(values in proptest::collection::vec(-1e6f64..1e6, 1..40)) {
            let mut p = ParamVector::new();
            p.push("w", vec![values.len()]);
            p.values_mut().copy_from_slice(&values);
            let json = serde_json::to_string(&p).unwrap();
            let back: ParamVector = serde_json::from_str(&json).unwrap();
            let bits = |v: &ParamVector| v.values().iter().map(|x| x.to_bits()).collect::<Vec<_>>();
            prop_assert_eq!(bits(&p), bits(&back));
            prop_assert_eq!(p.layout(), back.layout());
        }
    }
}
