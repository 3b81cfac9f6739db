use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{ArmId, BordaEntry, BordaVector};
use crate::error::{Error, Result};

const COMPLEMENT_TOLERANCE: f64 = 1e-9;

/// Ground-truth duel probabilities: `prob(i, j)` is the chance that `i` beats `j`.
///
/// Stored row-major. The diagonal holds 0.5 and is never consulted.
#[derive(Debug, Clone, PartialEq)]
pub struct PreferenceMatrix {
    k: usize,
    q: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct MatrixFile {
    k: usize,
    q: Vec<Vec<f64>>,
}

/// A triple `(i, j, l)` where `i` weakly beats `j`, `j` weakly beats `l`, yet
/// `i` beats `l` by less than the larger of the two margins.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SstViolation(pub ArmId, pub ArmId, pub ArmId);

impl PreferenceMatrix {
    /// Builds a matrix from rows, validating shape, range and complementarity.
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let k = rows.len();
        if k < 2 {
            return Err(Error::InvalidMatrix(format!("pool size {k} < 2")));
        }
        let mut q = Vec::with_capacity(k * k);
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != k {
                return Err(Error::InvalidMatrix(format!(
                    "row {i} has {} entries, expected {k}",
                    row.len()
                )));
            }
            q.extend(row);
        }
        let mut m = PreferenceMatrix { k, q };
        m.validate()?;
        for i in 0..k {
            m.q[i * k + i] = 0.5;
        }
        Ok(m)
    }

    /// Builds a matrix from a function giving `prob(i, j)` for `i < j`.
    pub fn from_upper<F>(k: usize, mut upper: F) -> Result<Self>
    where
        F: FnMut(usize, usize) -> f64,
    {
        if k < 2 {
            return Err(Error::invalid(format!("pool size {k} < 2")));
        }
        let mut q = vec![0.5; k * k];
        for i in 0..k {
            for j in (i + 1)..k {
                let p = upper(i, j);
                q[i * k + j] = p;
                q[j * k + i] = 1.0 - p;
            }
        }
        let m = PreferenceMatrix { k, q };
        m.validate()?;
        Ok(m)
    }

    fn validate(&self) -> Result<()> {
        let k = self.k;
        for i in 0..k {
            for j in 0..k {
                if i == j {
                    continue;
                }
                let p = self.q[i * k + j];
                if !(0.0..=1.0).contains(&p) || p.is_nan() {
                    return Err(Error::InvalidMatrix(format!(
                        "q[{i}][{j}] = {p} outside [0, 1]"
                    )));
                }
                let sum = p + self.q[j * k + i];
                if (sum - 1.0).abs() > COMPLEMENT_TOLERANCE {
                    return Err(Error::InvalidMatrix(format!(
                        "q[{i}][{j}] + q[{j}][{i}] = {sum}, expected 1"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Total order with no ties: lower index beats higher index with 0.75.
    pub fn case_a(k: usize) -> Result<Self> {
        Self::from_upper(k, |_, _| 0.75)
    }

    /// Two tied winners (0 and 1) that beat everyone else with 0.75; all other
    /// pairs tie.
    pub fn case_b(k: usize) -> Result<Self> {
        if k < 3 {
            return Err(Error::invalid(format!("case B needs k >= 3, got {k}")));
        }
        Self::from_upper(k, |i, j| match (i, j) {
            (0, 1) => 0.5,
            (0 | 1, _) => 0.75,
            _ => 0.5,
        })
    }

    /// Authoritative total order: `i < j` means `i` always wins.
    pub fn total_order(k: usize) -> Result<Self> {
        Self::from_upper(k, |_, _| 1.0)
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Probability that `i` beats `j`. Unchecked; the diagonal reads 0.5.
    #[inline]
    pub fn prob(&self, i: ArmId, j: ArmId) -> f64 {
        self.q[i.0 * self.k + j.0]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.q.chunks(self.k).map(<[f64]>::to_vec).collect()
    }

    fn check_pair(&self, i: ArmId, j: ArmId) -> Result<()> {
        if i == j {
            return Err(Error::invalid(format!("arm {i} cannot duel itself")));
        }
        if i.0 >= self.k || j.0 >= self.k {
            return Err(Error::invalid(format!(
                "pair ({i}, {j}) out of range for k = {}",
                self.k
            )));
        }
        Ok(())
    }

    /// Margin by which `i` is expected to beat `j`.
    pub fn delta(&self, i: ArmId, j: ArmId) -> Result<f64> {
        self.check_pair(i, j)?;
        Ok(self.prob(i, j) - 0.5)
    }

    /// Exact Borda scores: the mean probability of beating each other arm.
    pub fn borda_scores(&self) -> BordaVector {
        let k = self.k;
        let denom = (k - 1) as f64;
        (0..k)
            .map(|i| {
                let s: f64 = (0..k).filter(|&j| j != i).map(|j| self.q[i * k + j]).sum();
                (
                    ArmId(i),
                    BordaEntry {
                        score: s / denom,
                        count: (k - 1) as u32,
                    },
                )
            })
            .collect()
    }

    /// Arms beating (strictly, q > 0.5) the largest number of other arms.
    pub fn copeland_winners(&self) -> BTreeSet<ArmId> {
        let k = self.k;
        let beats: Vec<usize> = (0..k)
            .map(|i| {
                (0..k)
                    .filter(|&j| j != i && self.q[i * k + j] > 0.5)
                    .count()
            })
            .collect();
        let best = beats.iter().copied().max().unwrap_or(0);
        (0..k).filter(|&i| beats[i] == best).map(ArmId).collect()
    }

    /// Every triple breaking strong stochastic transitivity. Empty means SST holds.
    pub fn sst_violations(&self) -> Vec<SstViolation> {
        let k = self.k;
        let d = |a: usize, b: usize| self.q[a * k + b] - 0.5;
        let mut out = Vec::new();
        for i in 0..k {
            for j in 0..k {
                if j == i || d(i, j) < 0.0 {
                    continue;
                }
                for l in 0..k {
                    if l == i || l == j || d(j, l) < 0.0 {
                        continue;
                    }
                    if d(i, l) < d(i, j).max(d(j, l)) {
                        out.push(SstViolation(ArmId(i), ArmId(j), ArmId(l)));
                    }
                }
            }
        }
        out
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: MatrixFile = serde_json::from_str(text)?;
        if file.q.len() != file.k {
            return Err(Error::InvalidMatrix(format!(
                "declared k = {} but {} rows given",
                file.k,
                file.q.len()
            )));
        }
        Self::from_rows(file.q)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&MatrixFile {
            k: self.k,
            q: self.rows(),
        })
        .expect("matrix serializes")
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        Self::from_json(&text)
    }
}
