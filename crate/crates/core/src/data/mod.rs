//! Plaintext side of a fit: ingestion, standardization, simulation,
//! bootstrap and benchmark harnesses.

use std::io::Read;
use std::path::Path;

use crate::error::{ElsError, Result};
use crate::linalg::Matrix;
use crate::scalar::{decimal_to_rational, Scalar};

pub mod benchmark;
pub mod bootstrap;
pub mod pipeline;
pub mod simulate;

pub use benchmark::{BenchmarkRecord, FixedDepthSuite};
pub use bootstrap::{bootstrap_se, BootstrapResult};
pub use pipeline::{encode_bundle, fit_on_backend, plan_for, reference_fit, PipelineFit};
pub use simulate::{simulate, simulate_ar2, Ar2Spec, Simulated, SimulationSpec};

/// Standardized covariates, centred response and the statistics needed to
/// map fitted coefficients back to the original units.
#[derive(Clone, Debug, PartialEq)]
pub struct DatasetBundle<T> {
    pub names: Vec<String>,
    pub response: String,
    pub raw_x: Matrix<T>,
    pub raw_y: Vec<T>,
    pub x: Matrix<T>,
    pub y: Vec<T>,
    pub means: Vec<T>,
    pub scales: Vec<T>,
    pub y_mean: T,
}

fn mean<T: Scalar>(v: &[T]) -> T {
    v.iter().fold(T::zero(), |a, b| a + b.clone()) / T::from_usize(v.len()).unwrap()
}

/// Sample standard deviation (n - 1 denominator); the square root is taken
/// in f64.
fn sample_sd<T: Scalar>(v: &[T], m: &T) -> T {
    let ss = v.iter().fold(T::zero(), |a, b| {
        let d = b.clone() - m.clone();
        a + d.clone() * d
    });
    let var = ss / T::from_usize(v.len() - 1).unwrap();
    T::from_f64(var.to_f64_lossy().sqrt()).unwrap()
}

impl<T: Scalar> DatasetBundle<T> {
    pub fn from_raw(names: Vec<String>, response: String, raw_x: Matrix<T>, raw_y: Vec<T>) -> Result<DatasetBundle<T>> {
        let (n, p) = (raw_x.rows(), raw_x.cols());
        if n != raw_y.len() {
            return Err(ElsError::Data(format!("{n} rows but {} responses", raw_y.len())));
        }
        if n < 2 || p == 0 {
            return Err(ElsError::Data(format!("need at least 2 rows and 1 covariate, got {n}x{p}")));
        }
        if names.len() != p {
            return Err(ElsError::Data(format!("{} names for {p} columns", names.len())));
        }
        let mut means = Vec::with_capacity(p);
        let mut scales = Vec::with_capacity(p);
        for j in 0..p {
            let col = raw_x.column(j);
            let m = mean(&col);
            let sd = sample_sd(&col, &m);
            if sd.is_zero() {
                return Err(ElsError::Data(format!("column {:?} has zero variance", names[j])));
            }
            means.push(m);
            scales.push(sd);
        }
        let x = Matrix::from_fn(n, p, |i, j| (raw_x.get(i, j).clone() - means[j].clone()) / scales[j].clone());
        let y_mean = mean(&raw_y);
        let y = raw_y.iter().map(|v| v.clone() - y_mean.clone()).collect();
        Ok(DatasetBundle {
            names,
            response,
            raw_x,
            raw_y,
            x,
            y,
            means,
            scales,
            y_mean,
        })
    }

    /// Wraps data that is already standardized and centred.
    pub fn prepared(x: Matrix<T>, y: Vec<T>) -> Result<DatasetBundle<T>> {
        if x.rows() != y.len() {
            return Err(ElsError::Data(format!("{} rows but {} responses", x.rows(), y.len())));
        }
        let p = x.cols();
        Ok(DatasetBundle {
            names: (1..=p).map(|j| format!("x{j}")).collect(),
            response: "y".into(),
            raw_x: x.clone(),
            raw_y: y.clone(),
            x,
            y,
            means: vec![T::zero(); p],
            scales: vec![T::one(); p],
            y_mean: T::zero(),
        })
    }

    pub fn n(&self) -> usize {
        self.x.rows()
    }

    pub fn p(&self) -> usize {
        self.x.cols()
    }

    /// Intercept and slopes in the original units.
    pub fn destandardize(&self, beta: &[T]) -> (T, Vec<T>) {
        let slopes: Vec<T> = beta.iter().zip(&self.scales).map(|(b, s)| b.clone() / s.clone()).collect();
        let shift = slopes
            .iter()
            .zip(&self.means)
            .fold(T::zero(), |a, (b, m)| a + b.clone() * m.clone());
        (self.y_mean.clone() - shift, slopes)
    }

    /// Largest absolute value among the standardized covariates and the
    /// centred response.
    pub fn max_abs(&self) -> f64 {
        self.x
            .data()
            .iter()
            .chain(&self.y)
            .map(|v| v.to_f64_lossy().abs())
            .fold(0.0, f64::max)
    }

    /// Rows `idx` of the standardized data, kept on the original scale.
    pub fn resample(&self, idx: &[usize]) -> DatasetBundle<T> {
        DatasetBundle {
            raw_x: self.raw_x.select_rows(idx),
            raw_y: idx.iter().map(|&i| self.raw_y[i].clone()).collect(),
            x: self.x.select_rows(idx),
            y: idx.iter().map(|&i| self.y[i].clone()).collect(),
            ..self.clone()
        }
    }
}

fn is_missing(cell: &str) -> bool {
    matches!(cell.trim(), "" | "NA" | "na" | "NaN" | "nan" | "null" | "?")
}

/// Reads a numeric CSV with a header row; `response` names the y column.
pub fn ingest_csv<T: Scalar>(path: &Path, response: &str) -> Result<DatasetBundle<T>> {
    let file = std::fs::File::open(path)?;
    parse_csv(file, response)
}

pub fn parse_csv<T: Scalar, R: Read>(input: R, response: &str) -> Result<DatasetBundle<T>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| ElsError::Data(e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();
    let yi = header
        .iter()
        .position(|h| h == response)
        .ok_or_else(|| ElsError::Data(format!("no column named {response:?}")))?;
    let names: Vec<String> = header.iter().enumerate().filter(|(i, _)| *i != yi).map(|(_, h)| h.clone()).collect();
    let mut cells = Vec::new();
    let mut ys = Vec::new();
    for (r, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| ElsError::Data(e.to_string()))?;
        if rec.len() != header.len() {
            return Err(ElsError::Data(format!("row {} has {} cells, expected {}", r + 1, rec.len(), header.len())));
        }
        for (c, cell) in rec.iter().enumerate() {
            if is_missing(cell) {
                return Err(ElsError::Data(format!("missing value in row {}, column {:?}", r + 1, header[c])));
            }
            let v = decimal_to_rational(cell)
                .ok_or_else(|| ElsError::Data(format!("non-numeric cell {cell:?} in row {}, column {:?}", r + 1, header[c])))?;
            let v = T::from_rational(&v);
            if c == yi {
                ys.push(v);
            } else {
                cells.push(v);
            }
        }
    }
    let n = ys.len();
    DatasetBundle::from_raw(names.clone(), response.into(), Matrix::new(n, names.len(), cells), ys)
}
