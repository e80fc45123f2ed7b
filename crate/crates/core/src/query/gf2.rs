//! Linear systems over GF(2) for the parity constraints used by hashing-based
//! counting. Each constraint says that the number of true indicators in a
//! row is odd (`parity = true`) or even.

use fixedbitset::FixedBitSet;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("parity system is inconsistent")]
pub struct Inconsistent;

/// `⊕_{i ∈ vars} xᵢ = parity` over indicator indices.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct XorConstraint {
    pub vars: Vec<usize>,
    pub parity: bool,
}

impl XorConstraint {
    pub fn new(vars: impl IntoIterator<Item = usize>, parity: bool) -> Self {
        let mut vars: Vec<usize> = vars.into_iter().collect();
        vars.sort_unstable();
        // x ⊕ x = 0
        let mut out: Vec<usize> = Vec::with_capacity(vars.len());
        for v in vars {
            if out.last() == Some(&v) {
                out.pop();
            } else {
                out.push(v);
            }
        }
        XorConstraint { vars: out, parity }
    }

    pub fn holds(&self, value: impl Fn(usize) -> bool) -> bool {
        self.vars.iter().filter(|&&v| value(v)).count() % 2 == usize::from(self.parity)
    }
}

#[derive(Clone, Debug)]
pub struct Gf2System {
    width: usize,
    rows: Vec<FixedBitSet>,
    rhs: Vec<bool>,
}

impl Gf2System {
    pub fn new(width: usize, xors: &[XorConstraint]) -> Self {
        let mut rows = Vec::with_capacity(xors.len());
        let mut rhs = Vec::with_capacity(xors.len());
        for x in xors {
            let mut row = FixedBitSet::with_capacity(width);
            for &v in &x.vars {
                assert!(v < width, "indicator {v} outside system of width {width}");
                row.insert(v);
            }
            rows.push(row);
            rhs.push(x.parity);
        }
        Gf2System { width, rows, rhs }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Gauss-Jordan elimination in place; returns the rank or an error when
    /// a row reduces to `0 = 1`.
    pub fn eliminate(&mut self) -> Result<usize, Inconsistent> {
        let mut rank = 0;
        for i in 0..self.rows.len() {
            let Some(pivot) = self.rows[i].minimum() else {
                if self.rhs[i] {
                    return Err(Inconsistent);
                }
                continue;
            };
            rank += 1;
            let (pivot_row, pivot_rhs) = (self.rows[i].clone(), self.rhs[i]);
            for j in 0..self.rows.len() {
                if j != i && self.rows[j].contains(pivot) {
                    self.rows[j].symmetric_difference_with(&pivot_row);
                    self.rhs[j] ^= pivot_rhs;
                }
            }
        }
        Ok(rank)
    }

    /// Substitutes the fixed indicators, eliminates, and returns every
    /// indicator whose value the system now forces.
    pub fn propagate(&self, fixed: &[Option<bool>]) -> Result<Vec<(usize, bool)>, Inconsistent> {
        let mut known = FixedBitSet::with_capacity(self.width);
        let mut ones = FixedBitSet::with_capacity(self.width);
        for (i, f) in fixed.iter().enumerate().take(self.width) {
            if let Some(b) = f {
                known.insert(i);
                if *b {
                    ones.insert(i);
                }
            }
        }
        self.propagate_masks(&known, &ones)
    }

    pub(crate) fn propagate_masks(
        &self,
        known: &FixedBitSet,
        ones: &FixedBitSet,
    ) -> Result<Vec<(usize, bool)>, Inconsistent> {
        let mut sys = self.clone();
        for (row, rhs) in sys.rows.iter_mut().zip(sys.rhs.iter_mut()) {
            if row.intersection_count(ones) % 2 == 1 {
                *rhs ^= true;
            }
            row.difference_with(known);
        }
        sys.eliminate()?;
        Ok(sys
            .rows
            .iter()
            .zip(&sys.rhs)
            .filter(|(row, _)| row.count_ones(..) == 1)
            .map(|(row, &rhs)| (row.minimum().unwrap(), rhs))
            .collect())
    }

    /// The current rows as constraints, `0 = 0` rows dropped.
    pub fn constraints(&self) -> Vec<XorConstraint> {
        self.rows
            .iter()
            .zip(&self.rhs)
            .filter(|(row, &rhs)| rhs || !row.is_clear())
            .map(|(row, &rhs)| XorConstraint::new(row.ones(), rhs))
            .collect()
    }

    pub fn satisfied_by(&self, x: &FixedBitSet) -> bool {
        self.rows.iter().zip(&self.rhs).all(|(row, &rhs)| (row.intersection_count(x) % 2 == 1) == rhs)
    }
}
