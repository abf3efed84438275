//! Datasets in points-as-columns layout, their ground-truth labels, and a
//! seeded generator for labeled union-of-subspaces data with outliers.

use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::DatasetError;

/// Columns with norm below this are rejected as zero.
pub const ZERO_COLUMN_TOL: f64 = 1e-14;

/// A `D x N` real matrix whose columns are data points.
#[derive(Debug, Clone, PartialEq)]
pub struct DataMatrix {
    values: DMatrix<f64>,
    unit_columns: bool,
}

impl DataMatrix {
    /// Wraps a matrix as-is. No normalization is applied.
    pub fn new(values: DMatrix<f64>) -> Self {
        Self {
            values,
            unit_columns: false,
        }
    }

    pub fn from_columns(columns: &[Vec<f64>]) -> Result<Self, DatasetError> {
        let dim = columns
            .first()
            .map(Vec::len)
            .ok_or(DatasetError::EmptyFile)?;
        if let Some((idx, c)) = columns.iter().enumerate().find(|(_, c)| c.len() != dim) {
            return Err(DatasetError::RaggedRows {
                line: idx + 1,
                expected: dim,
                found: c.len(),
            });
        }
        let values = DMatrix::from_fn(dim, columns.len(), |r, c| columns[c][r]);
        Ok(Self::new(values))
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn into_values(self) -> DMatrix<f64> {
        self.values
    }

    pub fn ambient_dim(&self) -> usize {
        self.values.nrows()
    }

    pub fn n_points(&self) -> usize {
        self.values.ncols()
    }

    pub fn is_unit_normalized(&self) -> bool {
        self.unit_columns
    }

    pub fn column(&self, j: usize) -> nalgebra::DVectorView<'_, f64> {
        self.values.column(j)
    }

    /// Gram matrix `XᵀX` of all pairwise inner products.
    pub fn gram(&self) -> DMatrix<f64> {
        self.values.tr_mul(&self.values)
    }

    /// Returns a copy restricted to the given columns, in order.
    pub fn select_columns(&self, idx: &[usize]) -> DataMatrix {
        DataMatrix {
            values: self.values.select_columns(idx),
            unit_columns: self.unit_columns,
        }
    }

    /// First column whose norm is below [`ZERO_COLUMN_TOL`].
    pub fn find_zero_column(&self) -> Option<usize> {
        (0..self.n_points()).find(|&j| self.values.column(j).norm() < ZERO_COLUMN_TOL)
    }
}

/// Scales every column to unit ℓ2 norm.
pub fn normalize_columns(x: &DataMatrix) -> Result<DataMatrix, DatasetError> {
    let mut values = x.values.clone();
    for (j, mut col) in values.column_iter_mut().enumerate() {
        let norm = col.norm();
        if norm < ZERO_COLUMN_TOL {
            return Err(DatasetError::ZeroColumn(j));
        }
        col /= norm;
    }
    Ok(DataMatrix {
        values,
        unit_columns: true,
    })
}

/// Ground-truth tag of a point. Subspace indices are 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Label {
    Inlier(usize),
    Outlier,
}

impl Label {
    pub fn is_outlier(self) -> bool {
        matches!(self, Label::Outlier)
    }

    pub fn subspace(self) -> Option<usize> {
        match self {
            Label::Inlier(l) => Some(l),
            Label::Outlier => None,
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Label::Inlier(l) => write!(f, "in:{l}"),
            Label::Outlier => f.write_str("out"),
        }
    }
}

impl FromStr for Label {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s == "out" {
            return Ok(Label::Outlier);
        }
        let idx = s
            .strip_prefix("in:")
            .ok_or_else(|| format!("expected `in:<k>` or `out`, got {s:?}"))?;
        match idx.parse::<usize>() {
            Ok(l) if l >= 1 => Ok(Label::Inlier(l)),
            _ => Err(format!("invalid subspace index {idx:?}")),
        }
    }
}

#[derive(Debug, Clone)]
pub struct LabeledDataset {
    pub data: DataMatrix,
    pub labels: Vec<Label>,
    /// Orthonormal `D x d_l` bases; `bases[l - 1]` spans subspace `l`.
    pub bases: Option<Vec<DMatrix<f64>>>,
}

impl LabeledDataset {
    pub fn n_outliers(&self) -> usize {
        self.labels.iter().filter(|l| l.is_outlier()).count()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenConfig {
    pub ambient_dim: usize,
    pub subspace_dims: Vec<usize>,
    pub points_per_subspace: Vec<usize>,
    pub outlier_count: usize,
    pub seed: u64,
}

impl GenConfig {
    pub fn validate(&self) -> Result<(), DatasetError> {
        let bad = |m: String| Err(DatasetError::InvalidConfig(m));
        if self.ambient_dim == 0 {
            return bad("ambient dimension must be positive".into());
        }
        if self.subspace_dims.len() != self.points_per_subspace.len() {
            return bad(format!(
                "{} subspace dims but {} point counts",
                self.subspace_dims.len(),
                self.points_per_subspace.len()
            ));
        }
        if let Some(&d) = self
            .subspace_dims
            .iter()
            .find(|&&d| d == 0 || d >= self.ambient_dim)
        {
            return bad(format!(
                "subspace dim {d} must be in 1..{}",
                self.ambient_dim
            ));
        }
        if self.points_per_subspace.contains(&0) {
            return bad("points per subspace must be positive".into());
        }
        if self.n_points() == 0 {
            return bad("no points requested".into());
        }
        Ok(())
    }

    pub fn n_points(&self) -> usize {
        self.points_per_subspace.iter().sum::<usize>() + self.outlier_count
    }
}

fn gaussian_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    // Filled column by column so the draw order is fixed.
    let mut m = DMatrix::zeros(rows, cols);
    for c in 0..cols {
        for r in 0..rows {
            m[(r, c)] = StandardNormal.sample(rng);
        }
    }
    m
}

/// Draws a labeled dataset: inliers from random subspaces, outliers uniform
/// on the unit sphere. Inliers come first, grouped by subspace.
pub fn generate_synthetic(cfg: &GenConfig) -> Result<LabeledDataset, DatasetError> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let dim = cfg.ambient_dim;
    let n = cfg.n_points();

    let mut values = DMatrix::zeros(dim, n);
    let mut labels = Vec::with_capacity(n);
    let mut bases = Vec::with_capacity(cfg.subspace_dims.len());
    let mut col = 0;

    for (l, (&d, &count)) in cfg
        .subspace_dims
        .iter()
        .zip(&cfg.points_per_subspace)
        .enumerate()
    {
        let basis = gaussian_matrix(&mut rng, dim, d).qr().q();
        for _ in 0..count {
            let coeffs = DVector::from_iterator(d, (0..d).map(|_| StandardNormal.sample(&mut rng)));
            let mut x = &basis * coeffs;
            let norm = x.norm();
            x /= norm;
            values.set_column(col, &x);
            labels.push(Label::Inlier(l + 1));
            col += 1;
        }
        bases.push(basis);
    }

    for _ in 0..cfg.outlier_count {
        let mut x = DVector::from_iterator(dim, (0..dim).map(|_| StandardNormal.sample(&mut rng)));
        let norm = x.norm();
        x /= norm;
        values.set_column(col, &x);
        labels.push(Label::Outlier);
        col += 1;
    }

    Ok(LabeledDataset {
        data: DataMatrix {
            values,
            unit_columns: true,
        },
        labels,
        bases: Some(bases),
    })
}

/// Norm of the component of `x` orthogonal to the span of an orthonormal basis.
pub fn projection_residual(basis: &DMatrix<f64>, x: &DVector<f64>) -> f64 {
    let coeffs = basis.tr_mul(x);
    (x - basis * coeffs).norm()
}

/// Layout of a CSV file on disk.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    /// Each CSV column is a point (rows are coordinates).
    PointsAsColumns,
    /// Each CSV row is a point.
    PointsAsRows,
}

/// Reads a rectangular numeric CSV. The result always stores points as columns.
pub fn load_csv(
    path: impl AsRef<Path>,
    orientation: Orientation,
    has_header: bool,
) -> Result<DataMatrix, DatasetError> {
    let file = File::open(path)?;
    read_csv(file, orientation, has_header)
}

pub fn read_csv<R: std::io::Read>(
    reader: R,
    orientation: Orientation,
    has_header: bool,
) -> Result<DataMatrix, DatasetError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(has_header)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);

    let mut rows: Vec<Vec<f64>> = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| DatasetError::ParseError {
            line: e.position().map_or(0, |p| p.line() as usize),
            message: e.to_string(),
        })?;
        let line = record
            .position()
            .map_or(rows.len() + 1, |p| p.line() as usize);
        if record.iter().all(str::is_empty) {
            continue;
        }
        let row = record
            .iter()
            .map(|cell| {
                cell.parse::<f64>().map_err(|_| DatasetError::ParseError {
                    line,
                    message: format!("non-numeric cell {cell:?}"),
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(DatasetError::RaggedRows {
                    line,
                    expected: first.len(),
                    found: row.len(),
                });
            }
        }
        rows.push(row);
    }

    let n_rows = rows.len();
    let n_cols = rows.first().map_or(0, Vec::len);
    if n_rows == 0 || n_cols == 0 {
        return Err(DatasetError::EmptyFile);
    }
    let values = match orientation {
        Orientation::PointsAsColumns => DMatrix::from_fn(n_rows, n_cols, |r, c| rows[r][c]),
        Orientation::PointsAsRows => DMatrix::from_fn(n_cols, n_rows, |r, c| rows[c][r]),
    };
    Ok(DataMatrix::new(values))
}

/// Writes values with shortest round-trip formatting.
pub fn write_csv(
    x: &DataMatrix,
    path: impl AsRef<Path>,
    orientation: Orientation,
) -> Result<(), DatasetError> {
    let mut w = BufWriter::new(File::create(path)?);
    let m = match orientation {
        Orientation::PointsAsColumns => x.values.clone(),
        Orientation::PointsAsRows => x.values.transpose(),
    };
    for r in 0..m.nrows() {
        let line = m
            .row(r)
            .iter()
            .map(|v| v.to_string())
            .collect::<Vec<_>>()
            .join(",");
        writeln!(w, "{line}")?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_labels(path: impl AsRef<Path>) -> Result<Vec<Label>, DatasetError> {
    let reader = BufReader::new(File::open(path)?);
    let mut labels = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let label = line
            .parse()
            .map_err(|m| DatasetError::Labels(format!("line {}: {m}", i + 1)))?;
        labels.push(label);
    }
    Ok(labels)
}

pub fn write_labels(labels: &[Label], path: impl AsRef<Path>) -> Result<(), DatasetError> {
    let mut w = BufWriter::new(File::create(path)?);
    for l in labels {
        writeln!(w, "{l}")?;
    }
    w.flush()?;
    Ok(())
}

/// Sidecar written next to generated data.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GenManifest {
    pub seed: u64,
    pub ambient_dim: usize,
    pub subspace_dims: Vec<usize>,
    pub points_per_subspace: Vec<usize>,
    pub outlier_count: usize,
    pub n_points: usize,
}

impl From<&GenConfig> for GenManifest {
    fn from(cfg: &GenConfig) -> Self {
        Self {
            seed: cfg.seed,
            ambient_dim: cfg.ambient_dim,
            subspace_dims: cfg.subspace_dims.clone(),
            points_per_subspace: cfg.points_per_subspace.clone(),
            outlier_count: cfg.outlier_count,
            n_points: cfg.n_points(),
        }
    }
}
