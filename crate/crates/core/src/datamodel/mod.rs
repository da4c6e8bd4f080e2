//! Observations, qualities, the observed-cell set and synthetic data.

mod generate;

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use generate::{generate_bias, generate_noise, generate_uniform_group_bias, synthesize};

use crate::poset::{ElementId, PosetError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DataError {
    #[error("{name} must be non-negative, got {value}")]
    NegativeScale { name: &'static str, value: f64 },
    #[error("course {0} has no observed cells")]
    EmptyCourse(usize),
    #[error("observation set has no courses")]
    NoCourses,
    #[error("non-finite value at {0}")]
    NonFinite(ElementId),
    #[error("shapes differ: {0}")]
    ShapeMismatch(String),
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("cell {0} listed twice")]
    DuplicateCell(ElementId),
    #[error("ordering does not cover the observed cells: {0}")]
    Ordering(#[from] PosetError),
    #[error("csv: {0}")]
    Csv(String),
}

/// Observed cells, one sorted list of slot indices per course.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObservationSet {
    cells: Vec<Vec<usize>>,
}

impl ObservationSet {
    /// Slots are sorted and must be distinct; every course needs a cell.
    pub fn new(mut cells: Vec<Vec<usize>>) -> Result<Self, DataError> {
        if cells.is_empty() {
            return Err(DataError::NoCourses);
        }
        for (i, c) in cells.iter_mut().enumerate() {
            if c.is_empty() {
                return Err(DataError::EmptyCourse(i));
            }
            c.sort_unstable();
            if let Some(w) = c.windows(2).find(|w| w[0] == w[1]) {
                return Err(DataError::DuplicateCell(ElementId::new(i, w[0])));
            }
        }
        Ok(Self { cells })
    }

    /// Every slot `0..sizes[i]` of every course.
    pub fn full(sizes: &[usize]) -> Result<Self, DataError> {
        Self::new(sizes.iter().map(|&n| (0..n).collect()).collect())
    }

    /// Cells grouped by course. Courses must be dense from zero.
    pub fn from_elements(elements: &[ElementId]) -> Result<Self, DataError> {
        let d = elements.iter().map(|e| e.course + 1).max().ok_or(DataError::NoCourses)?;
        let mut cells = vec![Vec::new(); d];
        for e in elements {
            cells[e.course].push(e.slot);
        }
        Self::new(cells)
    }

    pub fn courses(&self) -> usize {
        self.cells.len()
    }

    pub fn cells(&self, course: usize) -> &[usize] {
        &self.cells[course]
    }

    pub fn all_cells(&self) -> &[Vec<usize>] {
        &self.cells
    }

    /// Cell count per course.
    pub fn sizes(&self) -> Vec<usize> {
        self.cells.iter().map(Vec::len).collect()
    }

    /// Total cell count.
    pub fn len(&self) -> usize {
        self.cells.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Row lengths able to hold every cell (largest slot + 1 per course).
    pub fn shape(&self) -> Vec<usize> {
        self.cells.iter().map(|c| c.last().map_or(0, |s| s + 1)).collect()
    }

    pub fn contains(&self, e: ElementId) -> bool {
        self.cells
            .get(e.course)
            .is_some_and(|c| c.binary_search(&e.slot).is_ok())
    }

    /// Cells in course-major order; this is the flat indexing used by the
    /// solvers.
    pub fn elements(&self) -> Vec<ElementId> {
        self.cells
            .iter()
            .enumerate()
            .flat_map(|(i, c)| c.iter().map(move |&s| ElementId::new(i, s)))
            .collect()
    }

    /// Course of every flat index.
    pub fn course_of_flat(&self) -> Vec<usize> {
        self.cells
            .iter()
            .enumerate()
            .flat_map(|(i, c)| std::iter::repeat_n(i, c.len()))
            .collect()
    }
}

/// Ragged matrix of ratings (or biases, noise) indexed by `(course, slot)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatingMatrix {
    rows: Vec<Vec<f64>>,
}

impl RatingMatrix {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self, DataError> {
        for (i, r) in rows.iter().enumerate() {
            if let Some(j) = r.iter().position(|v| !v.is_finite()) {
                return Err(DataError::NonFinite(ElementId::new(i, j)));
            }
        }
        Ok(Self { rows })
    }

    pub fn zeros(shape: &[usize]) -> Self {
        Self {
            rows: shape.iter().map(|&n| vec![0.0; n]).collect(),
        }
    }

    /// Values at the cells of `omega` in flat order, zero elsewhere.
    pub fn scatter(omega: &ObservationSet, shape: &[usize], values: &[f64]) -> Self {
        let mut m = Self::zeros(shape);
        for (e, &v) in omega.elements().iter().zip(values) {
            m.rows[e.course][e.slot] = v;
        }
        m
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn row(&self, course: usize) -> &[f64] {
        &self.rows[course]
    }

    pub fn shape(&self) -> Vec<usize> {
        self.rows.iter().map(Vec::len).collect()
    }

    pub fn get(&self, e: ElementId) -> Option<f64> {
        self.rows.get(e.course)?.get(e.slot).copied()
    }

    pub fn set(&mut self, e: ElementId, v: f64) {
        self.rows[e.course][e.slot] = v;
    }

    /// Values at the cells of `omega` in flat order.
    pub fn gather(&self, omega: &ObservationSet) -> Result<Vec<f64>, DataError> {
        let mut out = Vec::with_capacity(omega.len());
        for (i, cells) in omega.all_cells().iter().enumerate() {
            for &s in cells {
                let e = ElementId::new(i, s);
                out.push(self.get(e).ok_or_else(|| DataError::ShapeMismatch(format!("no entry for {e}")))?);
            }
        }
        Ok(out)
    }

    /// Sum of squares over the cells of `omega`.
    pub fn sq_norm(&self, omega: &ObservationSet) -> Result<f64, DataError> {
        Ok(self.gather(omega)?.iter().map(|v| v * v).sum())
    }

    /// Read `course,slot,value` rows. The observed set is exactly the rows
    /// present; unlisted cells are zero in the matrix.
    pub fn read_csv<R: Read>(reader: R) -> Result<(Self, ObservationSet), DataError> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let mut entries = Vec::new();
        for rec in rdr.deserialize::<CsvCell>() {
            let rec = rec.map_err(|e| DataError::Csv(e.to_string()))?;
            let e = ElementId::new(rec.course, rec.slot);
            if !rec.value.is_finite() {
                return Err(DataError::NonFinite(e));
            }
            entries.push((e, rec.value));
        }
        let elements: Vec<ElementId> = entries.iter().map(|&(e, _)| e).collect();
        let omega = ObservationSet::from_elements(&elements)?;
        if omega.len() != entries.len() {
            let mut seen = std::collections::HashSet::new();
            let dup = elements.iter().find(|e| !seen.insert(**e)).copied();
            return Err(DataError::DuplicateCell(dup.expect("duplicate exists")));
        }
        let mut m = Self::zeros(&omega.shape());
        for (e, v) in entries {
            m.set(e, v);
        }
        Ok((m, omega))
    }

    pub fn read_csv_path(path: impl AsRef<Path>) -> Result<(Self, ObservationSet), DataError> {
        let f = std::fs::File::open(path).map_err(|e| DataError::Csv(e.to_string()))?;
        Self::read_csv(f)
    }

    /// Write the cells of `omega` as `course,slot,value` rows.
    pub fn write_csv<W: Write>(&self, omega: &ObservationSet, writer: W) -> Result<(), DataError> {
        let mut w = csv::Writer::from_writer(writer);
        let values = self.gather(omega)?;
        for (e, value) in omega.elements().into_iter().zip(values) {
            w.serialize(CsvCell {
                course: e.course,
                slot: e.slot,
                value,
            })
            .map_err(|e| DataError::Csv(e.to_string()))?;
        }
        w.flush().map_err(|e| DataError::Csv(e.to_string()))
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct CsvCell {
    course: usize,
    slot: usize,
    value: f64,
}

/// Per-course quality values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QualityVector(pub Vec<f64>);

impl QualityVector {
    pub fn zeros(d: usize) -> Self {
        Self(vec![0.0; d])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Bias and noise scales plus the seed of a synthetic draw.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GenParams {
    pub sigma: f64,
    pub eta: f64,
    pub seed: u64,
}

impl GenParams {
    pub fn validate(&self) -> Result<(), DataError> {
        check_scale("sigma", self.sigma)?;
        check_scale("eta", self.eta)
    }
}

pub(crate) fn check_scale(name: &'static str, value: f64) -> Result<(), DataError> {
    if value >= 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(DataError::NegativeScale { name, value })
    }
}

/// Per-course means of flat values laid out course-major with the given
/// course sizes. Shared by every code path that needs plain course means so
/// they agree to the last bit.
pub(crate) fn course_means(values: &[f64], sizes: &[usize]) -> Vec<f64> {
    let mut out = Vec::with_capacity(sizes.len());
    let mut start = 0;
    for &n in sizes {
        let s: f64 = values[start..start + n].iter().sum();
        out.push(s / n as f64);
        start += n;
    }
    out
}

/// Normalized squared error `(1/d) * sum (x_hat - x_star)^2`.
pub fn sq_error(x_hat: &QualityVector, x_star: &QualityVector) -> Result<f64, DataError> {
    if x_hat.len() != x_star.len() {
        return Err(DataError::LengthMismatch {
            left: x_hat.len(),
            right: x_star.len(),
        });
    }
    if x_hat.is_empty() {
        return Ok(0.0);
    }
    let s: f64 = x_hat.0.iter().zip(&x_star.0).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok(s / x_hat.len() as f64)
}
