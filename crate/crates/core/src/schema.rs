//! Feature schema: names, semantic kinds, and policy flags.
//!
//! Policy flags drive predictor exclusion: features carrying a flagged
//! provenance (discretionary priors, juvenile priors) can be dropped from a
//! dataset before training, identically for every group.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Semantic kind of a feature column.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureKind {
    /// Nonnegative integer count (e.g. number of prior arrests).
    Count,
    /// A value measured in years (age-like).
    Years,
    /// 0/1 indicator.
    Binary,
    /// Pre-encoded categorical code.
    Category,
}

/// Policy/provenance flag attached to a feature.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize,
)]
#[serde(rename_all = "snake_case")]
pub enum FeatureFlag {
    /// Derived from prior arrests for crimes where police exercise wide
    /// discretion.
    DiscretionaryPrior,
    /// Derived from arrests as a juvenile.
    JuvenilePrior,
    /// Derived from prior arrests for serious (felony-grade) crimes.
    SeriousPrior,
    /// Derived from the charges of the instant case.
    InstantCharge,
    /// Biographical attribute (age, gender, ...).
    Biographical,
}

impl FeatureFlag {
    pub const ALL: [FeatureFlag; 5] = [
        FeatureFlag::DiscretionaryPrior,
        FeatureFlag::JuvenilePrior,
        FeatureFlag::SeriousPrior,
        FeatureFlag::InstantCharge,
        FeatureFlag::Biographical,
    ];
}

/// One feature column: a unique name, a kind, and zero or more flags.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Feature {
    pub name: String,
    pub kind: FeatureKind,
    #[serde(default, skip_serializing_if = "BTreeSet::is_empty")]
    pub flags: BTreeSet<FeatureFlag>,
}

impl Feature {
    pub fn new(name: impl Into<String>, kind: FeatureKind) -> Self {
        Feature {
            name: name.into(),
            kind,
            flags: BTreeSet::new(),
        }
    }

    pub fn with_flags<I: IntoIterator<Item = FeatureFlag>>(mut self, flags: I) -> Self {
        self.flags = flags.into_iter().collect();
        self
    }

    pub fn has_any_flag(&self, flags: &BTreeSet<FeatureFlag>) -> bool {
        self.flags.iter().any(|f| flags.contains(f))
    }
}

/// Ordered list of features; the column layout of every row vector.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schema {
    features: Vec<Feature>,
}

impl Schema {
    /// Build a schema, rejecting empty or duplicate feature names.
    pub fn new(features: Vec<Feature>) -> Result<Self> {
        let mut seen = BTreeSet::new();
        for f in &features {
            if f.name.is_empty() {
                return Err(Error::Schema("feature name must be nonempty".into()));
            }
            if !seen.insert(f.name.clone()) {
                return Err(Error::Schema(format!(
                    "duplicate feature name {:?}",
                    f.name
                )));
            }
        }
        Ok(Schema { features })
    }

    pub fn features(&self) -> &[Feature] {
        &self.features
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.features.iter().map(|f| f.name.as_str())
    }

    /// Index of a feature by name.
    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.features.iter().position(|f| f.name == name)
    }

    pub fn feature(&self, index: usize) -> &Feature {
        &self.features[index]
    }

    /// Indices of features carrying any of the given flags.
    pub fn flagged_indices(&self, flags: &BTreeSet<FeatureFlag>) -> Vec<usize> {
        self.features
            .iter()
            .enumerate()
            .filter(|(_, f)| f.has_any_flag(flags))
            .map(|(i, _)| i)
            .collect()
    }

    /// Schema with every feature carrying any of `flags` removed.
    pub fn without_flags(&self, flags: &BTreeSet<FeatureFlag>) -> Result<Schema> {
        let kept: Vec<Feature> = self
            .features
            .iter()
            .filter(|f| !f.has_any_flag(flags))
            .cloned()
            .collect();
        if kept.is_empty() {
            return Err(Error::Schema(
                "exclusion would drop every feature".into(),
            ));
        }
        Schema::new(kept)
    }

    /// Stable hex fingerprint of the schema layout.
    pub fn fingerprint(&self) -> String {
        crate::hash::hex_digest(&serde_json::to_vec(self).expect("schema serializes"))
    }
}
