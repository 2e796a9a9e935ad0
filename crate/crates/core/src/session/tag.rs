use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TagIdentity {
    pub label: String,
    pub epc: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RegistryError {
    #[error("EPC must be 24 hexadecimal characters, got {0:?}")]
    InvalidEpc(String),
    #[error("label must be non-empty")]
    EmptyLabel,
    #[error("label {0:?} is already registered")]
    DuplicateLabel(String),
    #[error("EPC {0} is already registered")]
    DuplicateEpc(String),
    #[error("no tag labelled {0:?}")]
    UnknownLabel(String),
}

impl RegistryError {
    pub fn is_conflict(&self) -> bool {
        matches!(self, Self::DuplicateLabel(_) | Self::DuplicateEpc(_))
    }
}

/// Uppercases a 96-bit EPC after checking its shape.
pub fn normalize_epc(epc: &str) -> Result<String, RegistryError> {
    if epc.len() == 24 && epc.bytes().all(|b| b.is_ascii_hexdigit()) {
        Ok(epc.to_ascii_uppercase())
    } else {
        Err(RegistryError::InvalidEpc(epc.to_string()))
    }
}

impl TagIdentity {
    pub fn new(label: impl Into<String>, epc: &str) -> Result<Self, RegistryError> {
        let label = label.into();
        if label.trim().is_empty() {
            return Err(RegistryError::EmptyLabel);
        }
        Ok(Self {
            label,
            epc: normalize_epc(epc)?,
        })
    }
}

/// Label and EPC uniqueness over a set of tags, in registration order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TagRegistry {
    tags: Vec<TagIdentity>,
}

impl TagRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn register(&mut self, label: &str, epc: &str) -> Result<TagIdentity, RegistryError> {
        let tag = TagIdentity::new(label, epc)?;
        if self.tags.iter().any(|t| t.label == tag.label) {
            return Err(RegistryError::DuplicateLabel(tag.label));
        }
        if self.tags.iter().any(|t| t.epc == tag.epc) {
            return Err(RegistryError::DuplicateEpc(tag.epc));
        }
        self.tags.push(tag.clone());
        Ok(tag)
    }

    pub fn remove(&mut self, label: &str) -> Result<TagIdentity, RegistryError> {
        let i = self
            .tags
            .iter()
            .position(|t| t.label == label)
            .ok_or_else(|| RegistryError::UnknownLabel(label.to_string()))?;
        Ok(self.tags.remove(i))
    }

    pub fn by_epc(&self, epc: &str) -> Option<&TagIdentity> {
        self.tags.iter().find(|t| t.epc.eq_ignore_ascii_case(epc))
    }

    pub fn by_label(&self, label: &str) -> Option<&TagIdentity> {
        self.tags.iter().find(|t| t.label == label)
    }

    pub fn tags(&self) -> &[TagIdentity] {
        &self.tags
    }

    pub fn len(&self) -> usize {
        self.tags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tags.is_empty()
    }
}
