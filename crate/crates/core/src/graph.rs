//! The directed representation graph and its random-walk transition matrix.
//!
//! Point `j` has an edge to point `i` with weight `|r_ij|` whenever `x_i`
//! takes part in the representation of `x_j`, so row `i` of `P` is column
//! `i` of `|R|` divided by its ℓ1 norm.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::elasticnet::RepresentationMatrix;
use crate::error::GraphError;

/// How to fill the row of a state whose representation vector is all zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DanglingPolicy {
    /// Move uniformly to every other state.
    #[default]
    Uniform,
    /// Refuse to build the matrix.
    Error,
}

impl FromStr for DanglingPolicy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "uniform" => Ok(Self::Uniform),
            "error" => Ok(Self::Error),
            other => Err(format!("unknown dangling policy {other:?}")),
        }
    }
}

/// Row-stochastic sparse matrix; rows hold `(column, probability)` pairs
/// sorted by column.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionMatrix {
    rows: Vec<Vec<(usize, f64)>>,
    dangling: Vec<usize>,
}

impl TransitionMatrix {
    /// Wraps explicit rows. Zero entries are dropped; rows are not checked
    /// for stochasticity (see [`TransitionMatrix::max_row_defect`]).
    pub fn from_rows(rows: Vec<Vec<(usize, f64)>>) -> Self {
        let rows = rows
            .into_iter()
            .map(|mut row| {
                row.retain(|&(_, p)| p != 0.0);
                row.sort_by_key(|&(j, _)| j);
                row
            })
            .collect();
        Self {
            rows,
            dangling: Vec::new(),
        }
    }

    pub fn from_dense(p: &nalgebra::DMatrix<f64>) -> Self {
        let rows = (0..p.nrows())
            .map(|i| (0..p.ncols()).map(|j| (j, p[(i, j)])).collect())
            .collect();
        Self::from_rows(rows)
    }

    pub fn n(&self) -> usize {
        self.rows.len()
    }

    pub fn row(&self, i: usize) -> &[(usize, f64)] {
        &self.rows[i]
    }

    pub fn rows(&self) -> &[Vec<(usize, f64)>] {
        &self.rows
    }

    /// States whose representation vector was entirely zero.
    pub fn dangling(&self) -> &[usize] {
        &self.dangling
    }

    pub fn nnz(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.rows[i]
            .binary_search_by_key(&j, |&(c, _)| c)
            .map_or(0.0, |k| self.rows[i][k].1)
    }

    pub fn to_dense(&self) -> nalgebra::DMatrix<f64> {
        let n = self.n();
        let mut m = nalgebra::DMatrix::zeros(n, n);
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, p) in row {
                m[(i, j)] = p;
            }
        }
        m
    }

    /// Largest `|Σ_j p_ij − 1|`, or infinity if any entry is negative.
    pub fn max_row_defect(&self) -> f64 {
        self.rows
            .iter()
            .map(|row| {
                if row.iter().any(|&(_, p)| p < 0.0 || !p.is_finite()) {
                    f64::INFINITY
                } else {
                    (row.iter().map(|&(_, p)| p).sum::<f64>() - 1.0).abs()
                }
            })
            .fold(0.0, f64::max)
    }

    /// Out-neighbours of every state under positive-probability edges.
    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        self.rows
            .iter()
            .map(|row| {
                row.iter()
                    .filter(|&&(_, p)| p > 0.0)
                    .map(|&(j, _)| j)
                    .collect()
            })
            .collect()
    }

    /// `π P` for a row vector `π`.
    pub fn left_mul(&self, pi: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        for (row, &w) in self.rows.iter().zip(pi) {
            if w == 0.0 {
                continue;
            }
            for &(j, p) in row {
                out[j] += w * p;
            }
        }
    }

    /// Same matrix with states relabelled: new state `perm[i]` is old state `i`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        let mut rows = vec![Vec::new(); self.n()];
        for (i, row) in self.rows.iter().enumerate() {
            rows[perm[i]] = row.iter().map(|&(j, p)| (perm[j], p)).collect();
        }
        let mut out = Self::from_rows(rows);
        out.dangling = self.dangling.iter().map(|&d| perm[d]).collect();
        out.dangling.sort_unstable();
        out
    }

    /// Writes a `N,dangling_count` header followed by `i,j,p` lines.
    pub fn write_coo(&self, path: impl AsRef<Path>) -> std::io::Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        self.write_coo_to(&mut w)?;
        w.flush()
    }

    pub fn write_coo_to<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        writeln!(w, "{},{}", self.n(), self.dangling.len())?;
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, p) in row {
                writeln!(w, "{i},{j},{p}")?;
            }
        }
        Ok(())
    }

    pub fn read_coo(path: impl AsRef<Path>) -> Result<Self, GraphError> {
        Self::read_coo_from(BufReader::new(File::open(path)?))
    }

    /// Parses the format written by [`TransitionMatrix::write_coo`].
    ///
    /// The file records only the number of dangling states; they are
    /// recovered as the rows equal to the uniform off-diagonal row, and the
    /// count must match the header.
    pub fn read_coo_from<R: BufRead>(reader: R) -> Result<Self, GraphError> {
        let mut lines = reader.lines().enumerate();
        let header = loop {
            match lines.next() {
                Some((_, line)) => {
                    let line = line?;
                    if !line.trim().is_empty() {
                        break line;
                    }
                }
                None => return Err(GraphError::Format("empty file".into())),
            }
        };
        let bad_header = || {
            GraphError::Format(format!(
                "bad header {header:?}, expected `N,dangling_count`"
            ))
        };
        let (n, n_dangling) = header
            .split_once(',')
            .and_then(|(a, b)| {
                Some((
                    a.trim().parse::<usize>().ok()?,
                    b.trim().parse::<usize>().ok()?,
                ))
            })
            .ok_or_else(bad_header)?;

        let mut rows = vec![Vec::new(); n];
        for (lineno, line) in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let err = || GraphError::Format(format!("line {}: expected `i,j,p`", lineno + 1));
            let mut fields = line.split(',').map(str::trim);
            let i: usize = fields.next().and_then(|f| f.parse().ok()).ok_or_else(err)?;
            let j: usize = fields.next().and_then(|f| f.parse().ok()).ok_or_else(err)?;
            let p: f64 = fields.next().and_then(|f| f.parse().ok()).ok_or_else(err)?;
            if fields.next().is_some() || i >= n || j >= n {
                return Err(err());
            }
            rows[i].push((j, p));
        }
        let mut out = Self::from_rows(rows);
        if n_dangling > 0 {
            let uniform = uniform_row(0, n);
            let dangling: Vec<usize> = (0..n)
                .filter(|&i| {
                    let row = out.row(i);
                    row.len() == n - 1
                        && row
                            .iter()
                            .all(|&(j, p)| j != i && (p - uniform[0].1).abs() <= 1e-15)
                })
                .collect();
            if dangling.len() != n_dangling {
                return Err(GraphError::Format(format!(
                    "header declares {n_dangling} dangling states but {} uniform rows were found",
                    dangling.len()
                )));
            }
            out.dangling = dangling;
        }
        Ok(out)
    }
}

fn uniform_row(i: usize, n: usize) -> Vec<(usize, f64)> {
    if n == 1 {
        return vec![(0, 1.0)];
    }
    let p = 1.0 / (n - 1) as f64;
    (0..n).filter(|&j| j != i).map(|j| (j, p)).collect()
}

/// `p_ij = |r_ji| / ‖r_i‖₁`, with all-zero columns of `R` handled per `policy`.
pub fn transition_matrix(
    r: &RepresentationMatrix,
    policy: DanglingPolicy,
) -> Result<TransitionMatrix, GraphError> {
    let n = r.n();
    let mut rows = Vec::with_capacity(n);
    let mut dangling = Vec::new();
    for i in 0..n {
        let norm = r.column_l1(i);
        if norm > 0.0 {
            rows.push(
                r.column(i)
                    .iter()
                    .map(|&(j, v)| (j, v.abs() / norm))
                    .collect(),
            );
        } else {
            dangling.push(i);
            rows.push(uniform_row(i, n));
        }
    }
    if policy == DanglingPolicy::Error && !dangling.is_empty() {
        return Err(GraphError::DanglingStates(dangling));
    }
    Ok(TransitionMatrix { rows, dangling })
}
