//! Labeled design matrix shared by the learners and the evaluation harness.

use chrono::{Days, NaiveDate};

use crate::error::{Error, Result};

/// Rows x named features, binary labels, and a date per row. Features are
/// stored row-major in one flat buffer.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub feature_names: Vec<String>,
    pub dates: Vec<NaiveDate>,
    x: Vec<f64>,
    pub y: Vec<u8>,
}

impl Dataset {
    pub fn new(feature_names: Vec<String>, dates: Vec<NaiveDate>, rows: Vec<Vec<f64>>, y: Vec<u8>) -> Result<Self> {
        let p = feature_names.len();
        if let Some(bad) = rows.iter().find(|r| r.len() != p) {
            return Err(Error::Dimension {
                expected: p,
                actual: bad.len(),
            });
        }
        Self::from_flat(feature_names, dates, rows.concat(), y)
    }

    pub fn from_flat(feature_names: Vec<String>, dates: Vec<NaiveDate>, x: Vec<f64>, y: Vec<u8>) -> Result<Self> {
        let n = y.len();
        if dates.len() != n || x.len() != n * feature_names.len() {
            return Err(Error::param(format!(
                "dataset sizes disagree: {} labels, {} dates, {} values for {} features",
                n,
                dates.len(),
                x.len(),
                feature_names.len()
            )));
        }
        if let Some(i) = x.iter().position(|v| !v.is_finite()) {
            return Err(Error::param(format!("undefined feature value in row {}", i / feature_names.len().max(1))));
        }
        if let Some(l) = y.iter().find(|&&l| l > 1) {
            return Err(Error::param(format!("label {l} is not 0 or 1")));
        }
        Ok(Self {
            feature_names,
            dates,
            x,
            y,
        })
    }

    /// Dataset without meaningful dates: row `i` gets day `i` after 1970-01-01.
    pub fn from_rows(rows: Vec<Vec<f64>>, y: Vec<u8>) -> Result<Self> {
        let p = rows.first().map_or(0, Vec::len);
        let names = (0..p).map(|j| format!("x{j}")).collect();
        let dates = (0..y.len()).map(|i| epoch() + Days::new(i as u64)).collect();
        Self::new(names, dates, rows, y)
    }

    pub fn n_rows(&self) -> usize {
        self.y.len()
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let p = self.n_features();
        &self.x[i * p..(i + 1) * p]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        (0..self.n_rows()).map(move |i| self.row(i))
    }

    pub fn values(&self) -> &[f64] {
        &self.x
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.rows().map(|r| r[j]).collect()
    }

    /// `[negatives, positives]`.
    pub fn class_counts(&self) -> [usize; 2] {
        let pos = self.y.iter().filter(|&&l| l == 1).count();
        [self.n_rows() - pos, pos]
    }

    pub fn subset(&self, indices: &[usize]) -> Self {
        let p = self.n_features();
        let mut x = Vec::with_capacity(indices.len() * p);
        for &i in indices {
            x.extend_from_slice(self.row(i));
        }
        Self {
            feature_names: self.feature_names.clone(),
            dates: indices.iter().map(|&i| self.dates[i]).collect(),
            x,
            y: indices.iter().map(|&i| self.y[i]).collect(),
        }
    }

    /// Keeps only the named features, in the given order.
    pub fn select_features(&self, names: &[String]) -> Result<Self> {
        let idx: Vec<usize> = names
            .iter()
            .map(|n| {
                self.feature_names
                    .iter()
                    .position(|f| f == n)
                    .ok_or_else(|| Error::param(format!("unknown feature `{n}`")))
            })
            .collect::<Result<_>>()?;
        let mut x = Vec::with_capacity(self.n_rows() * idx.len());
        for r in self.rows() {
            x.extend(idx.iter().map(|&j| r[j]));
        }
        Ok(Self {
            feature_names: names.to_vec(),
            dates: self.dates.clone(),
            x,
            y: self.y.clone(),
        })
    }

    pub fn push_row(&mut self, date: NaiveDate, row: &[f64], label: u8) -> Result<()> {
        if row.len() != self.n_features() {
            return Err(Error::Dimension {
                expected: self.n_features(),
                actual: row.len(),
            });
        }
        self.x.extend_from_slice(row);
        self.dates.push(date);
        self.y.push(label);
        Ok(())
    }

    /// Same rows with a new label vector.
    pub fn with_labels(&self, y: Vec<u8>) -> Result<Self> {
        Self::from_flat(self.feature_names.clone(), self.dates.clone(), self.x.clone(), y)
    }

    /// Applies `f(column, value)` to every entry.
    pub fn map_values(&self, f: impl Fn(usize, f64) -> f64) -> Self {
        let p = self.n_features().max(1);
        let x = self.x.iter().enumerate().map(|(i, v)| f(i % p, *v)).collect();
        Self {
            x,
            ..self.clone()
        }
    }
}

fn epoch() -> NaiveDate {
    NaiveDate::from_ymd_opt(1970, 1, 1).expect("valid date")
}
