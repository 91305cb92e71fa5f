use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::Scalar;

/// Which bound a report was produced by.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundKind {
    SteinUnivariate,
    SteinMultivariate,
    FieldUnivariate,
    FieldMultivariate,
    Voter,
    VoterMultivariate,
    Contact,
    ContactMultivariate,
}

impl BoundKind {
    pub fn as_str(self) -> &'static str {
        match self {
            BoundKind::SteinUnivariate => "stein_univariate",
            BoundKind::SteinMultivariate => "stein_multivariate",
            BoundKind::FieldUnivariate => "field_univariate",
            BoundKind::FieldMultivariate => "field_multivariate",
            BoundKind::Voter => "voter",
            BoundKind::VoterMultivariate => "voter_multivariate",
            BoundKind::Contact => "contact",
            BoundKind::ContactMultivariate => "contact_multivariate",
        }
    }
}

impl std::fmt::Display for BoundKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A bound value together with the threshold (on `n` or `t`) from which it
/// holds and every input used to compute it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct BoundReport<S: Scalar> {
    pub theorem_id: BoundKind,
    pub value: S,
    pub valid_from: S,
    /// `at >= valid_from`, where `at` is the `n` or `t` the bound was
    /// evaluated for.
    pub applicable: bool,
    /// False when the bound carries an unknown multiplicative constant that
    /// was set by the caller (default 1).
    pub constant_tracked: bool,
    pub inputs: BTreeMap<String, S>,
}

impl<S: Scalar> BoundReport<S> {
    pub(crate) fn new(
        theorem_id: BoundKind,
        value: S,
        valid_from: S,
        at: S,
        constant_tracked: bool,
        inputs: &[(&str, S)],
    ) -> Self {
        let mut map: BTreeMap<String, S> = inputs
            .iter()
            .map(|(k, v)| (k.to_string(), *v))
            .collect();
        map.insert("at".into(), at);
        BoundReport {
            theorem_id,
            value,
            valid_from,
            applicable: at >= valid_from,
            constant_tracked,
            inputs: map,
        }
    }

    /// Report for a bound with no range restriction.
    pub fn unconditional(theorem_id: BoundKind, value: S, inputs: &[(&str, S)]) -> Self {
        Self::new(theorem_id, value, S::zero(), S::zero(), true, inputs)
    }

    /// Whether this bound may be compared against an empirical distance.
    pub fn usable(&self) -> bool {
        self.applicable && self.value.is_finite()
    }

    pub fn to_f64(&self) -> BoundReport<f64> {
        BoundReport {
            theorem_id: self.theorem_id,
            value: self.value.as_f64(),
            valid_from: self.valid_from.as_f64(),
            applicable: self.applicable,
            constant_tracked: self.constant_tracked,
            inputs: self.inputs.iter().map(|(k, v)| (k.clone(), v.as_f64())).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn serializes_with_required_fields() {
        let r = BoundReport::<f64>::new(BoundKind::FieldUnivariate, 0.5, 10.0, 4.0, true, &[("k", 1.0)]);
        assert!(!r.applicable);
        let v: serde_json::Value = serde_json::to_value(&r).unwrap();
        for key in ["theorem_id", "value", "valid_from", "applicable", "constant_tracked", "inputs"] {
            assert!(v.get(key).is_some(), "missing {key}");
        }
        assert_eq!(v["theorem_id"], "field_univariate");
        let back: BoundReport<f64> = serde_json::from_value(v).unwrap();
        assert_eq!(back, r);
    }
}
