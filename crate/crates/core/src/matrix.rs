//! Dense nonnegative network matrices and the structural predicates
//! (irreducibility, primitivity, marginal stability) that gate the
//! energy bounds.
//!
//! Edge convention: `A[(i, j)] > 0` means there is an edge `j -> i`.

use std::collections::VecDeque;
use std::fmt::Write as _;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use nalgebra::{Complex, DMatrix, DVector, Schur};

use crate::error::{Error, Result};

/// Square matrix with nonnegative finite entries.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightMatrix(DMatrix<f64>);

impl WeightMatrix {
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if m.nrows() == 0 || m.nrows() != m.ncols() {
            return Err(Error::InvalidMatrix(format!(
                "expected a nonempty square matrix, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        if let Some((k, x)) = m.iter().enumerate().find(|(_, x)| !x.is_finite() || **x < 0.0) {
            let n = m.nrows();
            return Err(Error::InvalidMatrix(format!(
                "entry ({}, {}) = {x} is negative or not finite",
                k % n,
                k / n
            )));
        }
        Ok(Self(m))
    }

    /// Builds a matrix from row slices.
    pub fn from_rows(rows: &[&[f64]]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidMatrix("rows have inconsistent length".into()));
        }
        Self::new(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
    }

    pub fn identity(n: usize) -> Self {
        Self(DMatrix::identity(n, n))
    }

    pub fn n(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.0
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0[(i, j)]
    }

    pub fn transpose(&self) -> Self {
        Self(self.0.transpose())
    }

    pub fn column_sums(&self) -> DVector<f64> {
        DVector::from_iterator(self.n(), self.0.column_iter().map(|c| c.sum()))
    }

    pub fn is_column_stochastic(&self, tol: f64) -> bool {
        self.column_sums().iter().all(|s| (s - 1.0).abs() <= tol)
    }

    pub fn has_positive_diagonal(&self) -> bool {
        self.0.diagonal().iter().all(|&d| d > 0.0)
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        let n = self.n();
        (0..n).all(|i| (0..i).all(|j| (self.0[(i, j)] - self.0[(j, i)]).abs() <= tol))
    }

    /// Out-neighbour lists of the nonzero pattern: `out[j]` holds every `i`
    /// with `A[(i, j)] > 0`.
    pub(crate) fn out_neighbours(&self) -> Vec<Vec<usize>> {
        let n = self.n();
        (0..n)
            .map(|j| (0..n).filter(|&i| self.0[(i, j)] > 0.0).collect())
            .collect()
    }

    /// 0/1 matrix of the nonzero pattern of `A Aᵀ`.
    pub fn product_pattern(&self) -> WeightMatrix {
        let n = self.n();
        let rows: Vec<Vec<usize>> = (0..n)
            .map(|i| (0..n).filter(|&k| self.0[(i, k)] > 0.0).collect())
            .collect();
        let mut p = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                // (A Aᵀ)_ij = Σ_k A_ik A_jk
                if rows[i].iter().any(|&k| self.0[(j, k)] > 0.0) {
                    p[(i, j)] = 1.0;
                }
            }
        }
        WeightMatrix(p)
    }

    /// Reads the plain-text format: a line holding `n`, then `n` rows of `n`
    /// whitespace-separated reals.
    pub fn read_from<R: Read>(reader: R) -> Result<Self> {
        let (n, values) = read_numbers(reader)?;
        if values.len() != n * n {
            return Err(Error::Parse {
                line: 0,
                msg: format!("expected {} entries, found {}", n * n, values.len()),
            });
        }
        Self::new(DMatrix::from_row_slice(n, n, &values))
    }

    pub fn write_to<W: Write>(&self, mut writer: W) -> Result<()> {
        writer.write_all(format_matrix(&self.0).as_bytes())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::read_from(std::fs::File::open(path)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let f = std::fs::File::create(path)?;
        self.write_to(std::io::BufWriter::new(f))
    }
}

/// Formats any square matrix in the matrix file format with 17 significant
/// digits.
pub fn format_matrix(m: &DMatrix<f64>) -> String {
    let n = m.nrows();
    let mut out = format!("{n}\n");
    for i in 0..n {
        for j in 0..m.ncols() {
            if j > 0 {
                out.push(' ');
            }
            let _ = write!(out, "{:.16e}", m[(i, j)]);
        }
        out.push('\n');
    }
    out
}

/// Reads a vector stored as a count line followed by that many reals.
pub fn read_vector<R: Read>(reader: R) -> Result<DVector<f64>> {
    let (n, values) = read_numbers(reader)?;
    if values.len() != n {
        return Err(Error::Parse {
            line: 0,
            msg: format!("expected {n} entries, found {}", values.len()),
        });
    }
    Ok(DVector::from_vec(values))
}

fn read_numbers<R: Read>(reader: R) -> Result<(usize, Vec<f64>)> {
    let mut n = None;
    let mut values = Vec::new();
    for (idx, line) in BufReader::new(reader).lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if n.is_none() {
            n = Some(line.parse::<usize>().map_err(|e| Error::Parse {
                line: idx + 1,
                msg: format!("bad size header {line:?}: {e}"),
            })?);
            continue;
        }
        for tok in line.split_whitespace() {
            values.push(tok.parse::<f64>().map_err(|e| Error::Parse {
                line: idx + 1,
                msg: format!("bad number {tok:?}: {e}"),
            })?);
        }
    }
    let n = n.ok_or(Error::Parse { line: 0, msg: "empty input".into() })?;
    Ok((n, values))
}

fn reachable(adj: &[Vec<usize>], start: usize) -> Vec<Option<usize>> {
    let mut dist = vec![None; adj.len()];
    dist[start] = Some(0);
    let mut queue = VecDeque::from([start]);
    while let Some(u) = queue.pop_front() {
        let d = dist[u].unwrap_or(0);
        for &v in &adj[u] {
            if dist[v].is_none() {
                dist[v] = Some(d + 1);
                queue.push_back(v);
            }
        }
    }
    dist
}

/// True iff the directed graph of the nonzero pattern is strongly connected.
pub fn is_irreducible(a: &WeightMatrix) -> bool {
    let out = a.out_neighbours();
    if reachable(&out, 0).iter().any(Option::is_none) {
        return false;
    }
    let mut rev = vec![Vec::new(); a.n()];
    for (u, targets) in out.iter().enumerate() {
        for &v in targets {
            rev[v].push(u);
        }
    }
    reachable(&rev, 0).iter().all(Option::is_some)
}

/// Period of an irreducible pattern (gcd of its cycle lengths).
pub fn period(a: &WeightMatrix) -> Option<usize> {
    if !is_irreducible(a) {
        return None;
    }
    let out = a.out_neighbours();
    let dist = reachable(&out, 0);
    let mut g = 0usize;
    for (u, targets) in out.iter().enumerate() {
        let du = dist[u]? as i64;
        for &v in targets {
            let dv = dist[v]? as i64;
            g = gcd(g, (du + 1 - dv).unsigned_abs() as usize);
        }
    }
    Some(g)
}

fn gcd(mut a: usize, mut b: usize) -> usize {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// True iff the nonzero pattern is irreducible and aperiodic, i.e. some power
/// of the matrix is entrywise positive.
pub fn is_pattern_primitive(m: &WeightMatrix) -> bool {
    period(m) == Some(1)
}

/// Largest singular value.
pub fn spectral_norm(a: &WeightMatrix) -> f64 {
    a.0.clone().singular_values().max()
}

#[derive(Debug, Clone, PartialEq)]
pub struct StructuralReport {
    pub irreducible: bool,
    pub marginally_stable: bool,
    pub strictly_stable: bool,
    pub spectral_radius: f64,
    pub product_pattern_primitive: bool,
    pub positive_diagonal: bool,
    /// Some eigenvalue lies within `tol` of the unit circle, so the
    /// marginal-stability verdict rests on the numerical semisimplicity test.
    pub near_unit_circle: bool,
}

const SCHUR_ITERATIONS_PER_ROW: usize = 1_000;

pub(crate) fn eigenvalues(a: &DMatrix<f64>) -> Result<Vec<Complex<f64>>> {
    let n = a.nrows();
    let cap = SCHUR_ITERATIONS_PER_ROW * n;
    // Equal-modulus eigenvalues (e.g. ±1 of a bipartite walk) can stall the
    // shifted QR sweep; a diagonal shift separates them.
    let scale = a.amax().max(f64::MIN_POSITIVE);
    for shift in [0.0, 0.5, -0.37, 1.13] {
        let shifted = a + DMatrix::identity(n, n) * (shift * scale);
        if let Some(schur) = Schur::try_new(shifted, f64::EPSILON, cap) {
            let c = Complex::new(shift * scale, 0.0);
            return Ok(schur.complex_eigenvalues().iter().map(|z| z - c).collect());
        }
    }
    Err(Error::NoConvergence { what: "Schur decomposition", iterations: cap })
}

/// Structural report for `A`. `tol` (default `1e-9`) sets how close to the
/// unit circle an eigenvalue may sit before it counts as on it.
pub fn stability_report(a: &WeightMatrix, tol: f64) -> Result<StructuralReport> {
    let eig = eigenvalues(&a.0)?;
    let radius = eig.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let norm = spectral_norm(a);
    let strictly_stable = radius < 1.0 - tol;
    let near_unit_circle = eig.iter().any(|z| (z.norm() - 1.0).abs() <= tol);

    let marginally_stable = radius <= 1.0 + tol && {
        let peripheral: Vec<_> = eig.iter().copied().filter(|z| z.norm() >= 1.0 - tol).collect();
        semisimple(&a.0, &peripheral, norm)
    };

    Ok(StructuralReport {
        irreducible: is_irreducible(a),
        marginally_stable: marginally_stable || strictly_stable,
        strictly_stable,
        spectral_radius: radius,
        product_pattern_primitive: is_pattern_primitive(&a.product_pattern()),
        positive_diagonal: a.has_positive_diagonal(),
        near_unit_circle,
    })
}

/// Checks geometric = algebraic multiplicity for each eigenvalue cluster in
/// `targets`; ranks use threshold `1e-8 * ‖A‖₂`.
fn semisimple(a: &DMatrix<f64>, targets: &[Complex<f64>], norm: f64) -> bool {
    let n = a.nrows();
    let cluster_tol = 1e-6 * norm.max(1.0);
    let rank_tol = 1e-8 * norm;
    let mut seen = vec![false; targets.len()];
    for i in 0..targets.len() {
        if seen[i] {
            continue;
        }
        let members: Vec<usize> = (i..targets.len())
            .filter(|&j| !seen[j] && (targets[j] - targets[i]).norm() <= cluster_tol)
            .collect();
        for &j in &members {
            seen[j] = true;
        }
        let centre = members.iter().map(|&j| targets[j]).sum::<Complex<f64>>() / members.len() as f64;
        let shifted = DMatrix::from_fn(n, n, |r, c| {
            let x = Complex::new(a[(r, c)], 0.0);
            if r == c { x - centre } else { x }
        });
        let rank = shifted.singular_values().iter().filter(|&&s| s > rank_tol).count();
        if n - rank != members.len() {
            return false;
        }
    }
    true
}
