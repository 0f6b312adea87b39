use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::similarity::{objective, RowSimilarity};
use super::ReorderError;
use crate::sparse::check_permutation;

/// A row order together with its adjacent-dissimilarity objective.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Permutation {
    pub order: Vec<usize>,
    pub objective: f64,
}

impl Permutation {
    /// Wraps `order` and scores it under `s`.
    pub fn scored<S: RowSimilarity + ?Sized>(order: Vec<usize>, s: &S) -> Self {
        let objective = objective(s, &order);
        Self { order, objective }
    }

    pub fn identity<S: RowSimilarity + ?Sized>(s: &S) -> Self {
        Self::scored((0..s.n_rows()).collect(), s)
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    pub fn check(&self) -> Result<(), ReorderError> {
        Ok(check_permutation(&self.order, self.order.len())?)
    }

    /// Text form: `# objective=<value>` then one 0-based row index per line.
    pub fn write_text<W: Write>(&self, mut w: W) -> Result<(), ReorderError> {
        writeln!(w, "# objective={}", self.objective)?;
        for i in &self.order {
            writeln!(w, "{i}")?;
        }
        Ok(())
    }

    pub fn read_text<R: BufRead>(r: R) -> Result<Self, ReorderError> {
        let mut objective = None;
        let mut order = Vec::new();
        for (n, line) in r.lines().enumerate() {
            let line = line?;
            let t = line.trim();
            if let Some(rest) = t.strip_prefix('#') {
                if let Some(v) = rest.trim().strip_prefix("objective=") {
                    objective = Some(
                        v.parse::<f64>()
                            .map_err(|_| ReorderError::Format(format!("line {}: bad objective '{v}'", n + 1)))?,
                    );
                }
                continue;
            }
            if t.is_empty() {
                continue;
            }
            order.push(
                t.parse::<usize>().map_err(|_| ReorderError::Format(format!("line {}: bad row index '{t}'", n + 1)))?,
            );
        }
        let objective = objective.ok_or_else(|| ReorderError::Format("missing '# objective=' line".into()))?;
        let p = Self { order, objective };
        p.check()?;
        Ok(p)
    }
}
