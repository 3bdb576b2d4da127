use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

/// Accept/reject decision of a tester, with the measurements behind it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TesterVerdict {
    pub test: String,
    pub accepted: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
    pub diagnostics: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub subtests: Vec<TesterVerdict>,
}

impl TesterVerdict {
    pub fn new(test: impl Into<String>) -> Self {
        Self {
            test: test.into(),
            accepted: true,
            reason: None,
            diagnostics: BTreeMap::new(),
            subtests: Vec::new(),
        }
    }

    /// Records a measurement. Infinite values are clamped to `±f64::MAX` and
    /// NaN is dropped, so diagnostics stay finite.
    pub fn diag(&mut self, name: impl Into<String>, value: f64) -> &mut Self {
        if !value.is_nan() {
            self.diagnostics
                .insert(name.into(), value.clamp(-f64::MAX, f64::MAX));
        }
        self
    }

    pub fn reject(&mut self, reason: impl Into<String>) -> &mut Self {
        if self.accepted {
            self.reason = Some(reason.into());
        }
        self.accepted = false;
        self
    }

    /// Attaches a sub-verdict; a rejected sub-test rejects `self`.
    pub fn push(&mut self, sub: TesterVerdict) -> &mut Self {
        if !sub.accepted {
            let why = match &sub.reason {
                Some(r) => format!("{}: {r}", sub.test),
                None => sub.test.clone(),
            };
            self.reject(why);
        }
        self.subtests.push(sub);
        self
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.diagnostics.get(name).copied()
    }

    pub fn find(&self, test: &str) -> Option<&TesterVerdict> {
        if self.test == test {
            return Some(self);
        }
        self.subtests.iter().find_map(|s| s.find(test))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejection_propagates_with_first_reason() {
        let mut child = TesterVerdict::new("strip");
        child.reject("too much mass").diag("p", f64::INFINITY);
        let mut parent = TesterVerdict::new("parent");
        parent.push(child).reject("later");
        assert!(!parent.accepted);
        assert_eq!(parent.reason.as_deref(), Some("strip: too much mass"));
        assert_eq!(parent.find("strip").unwrap().get("p"), Some(f64::MAX));
    }
}
