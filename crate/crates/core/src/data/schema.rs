use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Attribute {
    pub name: String,
    pub values: Vec<String>,
}

/// The finite attribute sets, plus which attribute is the label and which is the nuisance.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttributeSchema {
    pub attributes: Vec<Attribute>,
    pub label_index: usize,
    pub nuisance_index: usize,
}

impl AttributeSchema {
    pub fn new(attributes: Vec<Attribute>, label_index: usize, nuisance_index: usize) -> Result<Self> {
        let schema = AttributeSchema {
            attributes,
            label_index,
            nuisance_index,
        };
        schema.validate()?;
        Ok(schema)
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.attributes.len();
        if k == 0 {
            return Err(Error::Schema("no attributes".into()));
        }
        if self.label_index >= k || self.nuisance_index >= k {
            return Err(Error::Schema(format!(
                "label/nuisance index ({}, {}) out of range for {k} attributes",
                self.label_index, self.nuisance_index
            )));
        }
        if self.label_index == self.nuisance_index {
            return Err(Error::Schema("label and nuisance attributes coincide".into()));
        }
        let mut names = HashSet::new();
        for attr in &self.attributes {
            if !names.insert(attr.name.as_str()) {
                return Err(Error::Schema(format!("duplicate attribute name {:?}", attr.name)));
            }
            if attr.values.is_empty() {
                return Err(Error::Schema(format!("attribute {:?} has no values", attr.name)));
            }
            if attr.values.len() > u32::MAX as usize {
                return Err(Error::Schema(format!("attribute {:?} has too many values", attr.name)));
            }
            let mut seen = HashSet::new();
            for v in &attr.values {
                if !seen.insert(v.as_str()) {
                    return Err(Error::Schema(format!(
                        "duplicate value {v:?} in attribute {:?}",
                        attr.name
                    )));
                }
            }
        }
        Ok(())
    }

    /// Same attributes with different label/nuisance roles.
    pub fn with_roles(&self, label_index: usize, nuisance_index: usize) -> Result<Self> {
        Self::new(self.attributes.clone(), label_index, nuisance_index)
    }

    pub fn num_attributes(&self) -> usize {
        self.attributes.len()
    }

    pub fn cardinality(&self, k: usize) -> usize {
        self.attributes[k].values.len()
    }

    pub fn num_labels(&self) -> usize {
        self.cardinality(self.label_index)
    }

    pub fn num_nuisance(&self) -> usize {
        self.cardinality(self.nuisance_index)
    }

    pub fn value_index(&self, k: usize, name: &str) -> Option<u32> {
        self.attributes[k]
            .values
            .iter()
            .position(|v| v == name)
            .map(|i| i as u32)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("schema serializes")
    }
}

pub fn load_schema(text: &str) -> Result<AttributeSchema> {
    let schema: AttributeSchema = serde_json::from_str(text).map_err(|e| Error::Parse(format!("schema: {e}")))?;
    schema.validate()?;
    Ok(schema)
}
