use std::io::{BufRead, Write};

use super::OptMode;
use crate::error::{Error, Result};
use crate::numfmt::sig17;
use crate::pa::{ActionId, StateId};

pub const CSV_HEADER: &str = "state_index,action_index,probability";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SafetyEntry {
    pub state: StateId,
    pub action: ActionId,
    pub probability: f64,
}

/// Lookup table `(state, action) -> safety probability` for one horizon
/// and optimization direction.
#[derive(Debug, Clone, PartialEq)]
pub struct SafetyTable {
    horizon: usize,
    mode: OptMode,
    entries: Vec<SafetyEntry>,
    offsets: Vec<usize>,
}

impl SafetyTable {
    /// Entries must be sorted by `(state, action)` without duplicates and
    /// hold probabilities in `[0, 1]`.
    pub fn from_entries(
        num_states: usize,
        horizon: usize,
        mode: OptMode,
        entries: Vec<SafetyEntry>,
    ) -> Result<Self> {
        for w in entries.windows(2) {
            if (w[0].state, w[0].action) >= (w[1].state, w[1].action) {
                return Err(Error::InvalidQuery(format!(
                    "table entries out of order at state {} action {}",
                    w[1].state, w[1].action
                )));
            }
        }
        let mut offsets = vec![0usize; num_states + 1];
        for e in &entries {
            if e.state >= num_states {
                return Err(Error::UnknownState(e.state));
            }
            if !(0.0..=1.0).contains(&e.probability) {
                return Err(Error::InvalidQuery(format!(
                    "probability {} out of range for state {}",
                    e.probability, e.state
                )));
            }
            offsets[e.state + 1] += 1;
        }
        for i in 0..num_states {
            offsets[i + 1] += offsets[i];
        }
        Ok(SafetyTable {
            horizon,
            mode,
            entries,
            offsets,
        })
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn mode(&self) -> OptMode {
        self.mode
    }

    pub fn num_states(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[SafetyEntry] {
        &self.entries
    }

    pub fn entries_for(&self, state: StateId) -> &[SafetyEntry] {
        &self.entries[self.offsets[state]..self.offsets[state + 1]]
    }

    pub fn lookup(&self, state: StateId, action: ActionId) -> Option<f64> {
        if state + 1 >= self.offsets.len() {
            return None;
        }
        let row = self.entries_for(state);
        row.binary_search_by_key(&action, |e| e.action)
            .ok()
            .map(|i| row[i].probability)
    }

    pub fn get(&self, state: StateId, action: ActionId) -> Result<f64> {
        self.lookup(state, action)
            .ok_or(Error::MissingEntry { state, action })
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "{CSV_HEADER}")?;
        for e in &self.entries {
            writeln!(out, "{},{},{}", e.state, e.action, sig17(e.probability))?;
        }
        out.flush()
    }

    /// Reads the CSV form; `num_states`, `horizon` and `mode` come from the
    /// sidecar. Lines starting with `#` are comments.
    pub fn read_csv<R: BufRead>(
        input: R,
        num_states: usize,
        horizon: usize,
        mode: OptMode,
    ) -> Result<Self> {
        let mut entries = Vec::new();
        let mut header = false;
        for (i, line) in input.lines().enumerate() {
            let line = line.map_err(|e| Error::Parse {
                line: i + 1,
                msg: e.to_string(),
            })?;
            if line.starts_with('#') {
                continue;
            }
            if !header {
                if line.trim() != CSV_HEADER {
                    return Err(Error::Parse {
                        line: i + 1,
                        msg: format!("expected header {CSV_HEADER}"),
                    });
                }
                header = true;
                continue;
            }
            if line.trim().is_empty() {
                continue;
            }
            let bad = |msg: &str| Error::Parse {
                line: i + 1,
                msg: msg.to_string(),
            };
            let mut cols = line.split(',');
            let state = cols
                .next()
                .and_then(|c| c.parse().ok())
                .ok_or_else(|| bad("bad state index"))?;
            let action = cols
                .next()
                .and_then(|c| c.parse().ok())
                .ok_or_else(|| bad("bad action index"))?;
            let probability = cols
                .next()
                .and_then(|c| c.parse().ok())
                .ok_or_else(|| bad("bad probability"))?;
            if cols.next().is_some() {
                return Err(bad("too many columns"));
            }
            entries.push(SafetyEntry {
                state,
                action,
                probability,
            });
        }
        Self::from_entries(num_states, horizon, mode, entries)
    }
}
