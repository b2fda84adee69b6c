use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Event times of a `dim`-variate point process observed on `[0, window_end]`.
///
/// Each component list is sorted ascending; construction enforces both that
/// and the window bounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventSequence {
    window_end: f64,
    events: Vec<Vec<f64>>,
}

impl EventSequence {
    pub fn new(window_end: f64, events: Vec<Vec<f64>>) -> Result<Self> {
        if !(window_end.is_finite() && window_end > 0.0) {
            return Err(Error::InvalidEvents(format!(
                "window end must be finite and > 0, got {window_end}"
            )));
        }
        if events.is_empty() {
            return Err(Error::InvalidEvents("at least one component is required".into()));
        }
        for (j, times) in events.iter().enumerate() {
            if let Some(t) = times.iter().find(|t| !(**t >= 0.0 && **t <= window_end)) {
                return Err(Error::InvalidEvents(format!(
                    "component {j}: time {t} outside [0, {window_end}]"
                )));
            }
            if times.windows(2).any(|w| w[0] > w[1]) {
                return Err(Error::InvalidEvents(format!("component {j} is not sorted")));
            }
        }
        Ok(EventSequence { window_end, events })
    }

    /// Sorts each component before validating.
    pub fn from_unsorted(window_end: f64, mut events: Vec<Vec<f64>>) -> Result<Self> {
        for times in &mut events {
            times.sort_by(f64::total_cmp);
        }
        Self::new(window_end, events)
    }

    pub fn empty(dim: usize, window_end: f64) -> Result<Self> {
        Self::new(window_end, vec![Vec::new(); dim])
    }

    pub fn dim(&self) -> usize {
        self.events.len()
    }

    pub fn window_end(&self) -> f64 {
        self.window_end
    }

    pub fn component(&self, j: usize) -> &[f64] {
        &self.events[j]
    }

    pub fn components(&self) -> &[Vec<f64>] {
        &self.events
    }

    pub fn counts(&self) -> Vec<usize> {
        self.events.iter().map(Vec::len).collect()
    }

    pub fn total_events(&self) -> usize {
        self.events.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.total_events() == 0
    }

    /// Component-wise union of two sequences on the longer window.
    pub fn merge(&self, other: &EventSequence) -> Result<Self> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        let events = self
            .events
            .iter()
            .zip(&other.events)
            .map(|(a, b)| {
                let mut merged = Vec::with_capacity(a.len() + b.len());
                let (mut i, mut k) = (0, 0);
                while i < a.len() && k < b.len() {
                    if a[i] <= b[k] {
                        merged.push(a[i]);
                        i += 1;
                    } else {
                        merged.push(b[k]);
                        k += 1;
                    }
                }
                merged.extend_from_slice(&a[i..]);
                merged.extend_from_slice(&b[k..]);
                merged
            })
            .collect();
        Self::new(self.window_end.max(other.window_end), events)
    }

    /// Reorders components: component `j` of the result is component
    /// `perm[j]` of `self`.
    pub fn permute(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: perm.len(),
            });
        }
        Self::new(
            self.window_end,
            perm.iter().map(|&p| self.events[p].clone()).collect(),
        )
    }

    /// All events merged into one time-ordered list of `(time, component)`.
    /// Ties are broken by component index so the order is deterministic.
    pub fn flatten(&self) -> Vec<(f64, usize)> {
        let mut all: Vec<(f64, usize)> = self
            .events
            .iter()
            .enumerate()
            .flat_map(|(j, ts)| ts.iter().map(move |&t| (t, j)))
            .collect();
        all.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        all
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub id: String,
    pub events: EventSequence,
    pub label: Option<String>,
}

impl Record {
    /// Observation time `T_i`.
    pub fn observation_time(&self) -> f64 {
        self.events.window_end()
    }
}

/// A cohort of patients sharing the same code dimension.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Dataset {
    pub records: Vec<Record>,
}

impl Dataset {
    pub fn new(records: Vec<Record>) -> Result<Self> {
        if let Some(first) = records.first() {
            let d = first.events.dim();
            if let Some(r) = records.iter().find(|r| r.events.dim() != d) {
                return Err(Error::InvalidEvents(format!(
                    "record {:?} has {} codes, expected {d}",
                    r.id,
                    r.events.dim()
                )));
            }
        }
        Ok(Dataset { records })
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn dim(&self) -> Option<usize> {
        self.records.first().map(|r| r.events.dim())
    }

    pub fn labels(&self) -> Option<Vec<&str>> {
        self.records.iter().map(|r| r.label.as_deref()).collect()
    }

    pub fn sequences(&self) -> impl Iterator<Item = &EventSequence> {
        self.records.iter().map(|r| &r.events)
    }

    /// Distinct labels in first-appearance order, and every record's index
    /// into that list. `None` when some record is unlabelled.
    pub fn label_indices(&self) -> Option<(Vec<String>, Vec<usize>)> {
        let labels = self.labels()?;
        let mut alphabet: Vec<String> = Vec::new();
        let idx = labels
            .iter()
            .map(|l| match alphabet.iter().position(|a| a == l) {
                Some(i) => i,
                None => {
                    alphabet.push(l.to_string());
                    alphabet.len() - 1
                }
            })
            .collect();
        Some((alphabet, idx))
    }
}
