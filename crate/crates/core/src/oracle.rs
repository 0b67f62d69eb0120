//! Numerical steady-state solver for explicit finite Markov chains.
//!
//! The solver knows nothing about the models. It is the independent check
//! for every closed-form stationary distribution in this crate.

use std::collections::HashMap;
use std::fmt;

use faer::linalg::solvers::Solve;
use faer::sparse::{SparseColMat, Triplet};
use faer::Mat;
use thiserror::Error;

/// Row sums must equal one within this tolerance.
pub const ROW_SUM_TOLERANCE: f64 = 1e-12;
/// Largest accepted `max |πP − π|` after the solve.
pub const RESIDUAL_TOLERANCE: f64 = 1e-10;
const REFINEMENT_STEPS: usize = 3;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error("transition matrix is not stochastic: {0}")]
    NonStochasticMatrix(String),
    #[error("steady-state solve failed (residual {residual:e})")]
    NoConvergence { residual: f64 },
    #[error("unknown chain kind `{0}`")]
    UnknownChainKind(String),
    #[error("invalid chain parameters: {0}")]
    InvalidParameters(String),
}

/// Human-readable names of the states, in matrix order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct StateLabels {
    names: Vec<String>,
    index: HashMap<String, usize>,
}

impl StateLabels {
    pub fn new(names: Vec<String>) -> Result<Self, OracleError> {
        let mut index = HashMap::with_capacity(names.len());
        for (i, name) in names.iter().enumerate() {
            if index.insert(name.clone(), i).is_some() {
                return Err(OracleError::InvalidParameters(format!(
                    "duplicate state label `{name}`"
                )));
            }
        }
        Ok(Self { names, index })
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn name(&self, i: usize) -> &str {
        &self.names[i]
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }
}

/// Sparse row-stochastic matrix with labelled states.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionMatrix {
    rows: Vec<Vec<(usize, f64)>>,
    labels: StateLabels,
}

/// Accumulates transitions; repeated `(from, to)` pairs are summed.
#[derive(Debug, Clone)]
pub struct TransitionMatrixBuilder {
    rows: Vec<Vec<(usize, f64)>>,
    labels: Vec<String>,
}

impl TransitionMatrixBuilder {
    pub fn new(labels: Vec<String>) -> Self {
        Self {
            rows: vec![Vec::new(); labels.len()],
            labels,
        }
    }

    pub fn add(&mut self, from: usize, to: usize, p: f64) -> &mut Self {
        self.rows[from].push((to, p));
        self
    }

    pub fn build(self) -> Result<TransitionMatrix, OracleError> {
        let labels = StateLabels::new(self.labels)?;
        let n = labels.len();
        if n == 0 {
            return Err(OracleError::NonStochasticMatrix("matrix has no states".into()));
        }
        let mut rows = Vec::with_capacity(n);
        for (i, mut row) in self.rows.into_iter().enumerate() {
            row.sort_by_key(|&(j, _)| j);
            let mut merged: Vec<(usize, f64)> = Vec::with_capacity(row.len());
            for (j, p) in row {
                if j >= n {
                    return Err(OracleError::NonStochasticMatrix(format!(
                        "row {i} points at state {j}, only {n} states exist"
                    )));
                }
                if !p.is_finite() {
                    return Err(OracleError::NonStochasticMatrix(format!(
                        "entry ({}, {}) is {p}",
                        labels.name(i),
                        labels.name(j)
                    )));
                }
                match merged.last_mut() {
                    Some(last) if last.0 == j => last.1 += p,
                    _ => merged.push((j, p)),
                }
            }
            merged.retain(|&(_, p)| p != 0.0);
            let mut sum = 0.0;
            for &(j, p) in &merged {
                if !(0.0..=1.0 + ROW_SUM_TOLERANCE).contains(&p) {
                    return Err(OracleError::NonStochasticMatrix(format!(
                        "entry ({}, {}) = {p} is outside [0, 1]",
                        labels.name(i),
                        labels.name(j)
                    )));
                }
                sum += p;
            }
            if (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
                return Err(OracleError::NonStochasticMatrix(format!(
                    "row {} sums to {sum}",
                    labels.name(i)
                )));
            }
            rows.push(merged);
        }
        Ok(TransitionMatrix { rows, labels })
    }
}

impl TransitionMatrix {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn labels(&self) -> &StateLabels {
        &self.labels
    }

    /// Non-zero entries of row `i` as `(column, probability)`, sorted by column.
    pub fn row(&self, i: usize) -> &[(usize, f64)] {
        &self.rows[i]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.rows[i]
            .binary_search_by_key(&j, |&(c, _)| c)
            .map(|k| self.rows[i][k].1)
            .unwrap_or(0.0)
    }

    pub fn nnz(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    /// Returns the chain relabelled so that old state `i` becomes `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<TransitionMatrix, OracleError> {
        let n = self.len();
        let mut seen = vec![false; n];
        if perm.len() != n || perm.iter().any(|&k| k >= n || std::mem::replace(&mut seen[k], true)) {
            return Err(OracleError::InvalidParameters("not a permutation".into()));
        }
        let mut names = vec![String::new(); n];
        for (i, &k) in perm.iter().enumerate() {
            names[k] = self.labels.name(i).to_owned();
        }
        let mut b = TransitionMatrixBuilder::new(names);
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, p) in row {
                b.add(perm[i], perm[j], p);
            }
        }
        b.build()
    }

    /// `x P` for a row vector `x`.
    pub fn left_multiply(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.len()];
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, p) in row {
                out[j] += x[i] * p;
            }
        }
        out
    }
}

/// Stationary distribution together with the achieved residual.
#[derive(Debug, Clone, PartialEq)]
pub struct SteadyStateVector {
    pub probabilities: Vec<f64>,
    pub labels: StateLabels,
    /// `max_j |(πP)_j − π_j|`.
    pub residual: f64,
}

impl SteadyStateVector {
    pub fn get(&self, label: &str) -> Option<f64> {
        self.labels.index_of(label).map(|i| self.probabilities[i])
    }

    pub fn sum(&self) -> f64 {
        self.probabilities.iter().sum()
    }
}

impl fmt::Display for SteadyStateVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (name, p) in self.labels.names().iter().zip(&self.probabilities) {
            writeln!(f, "{name}\t{p:.12e}")?;
        }
        Ok(())
    }
}

/// Solves `πP = π`, `Σπ = 1` with a sparse LU factorisation.
///
/// The last balance equation is replaced by the normalisation row, which
/// makes the system non-singular whenever the chain has a single recurrent
/// class. A few steps of iterative refinement follow the direct solve.
pub fn solve_steady_state(m: &TransitionMatrix) -> Result<SteadyStateVector, OracleError> {
    let n = m.len();
    let last = n - 1;

    // A = (P^T - I) with its last row overwritten by ones.
    let mut entries: HashMap<(usize, usize), f64> = HashMap::with_capacity(m.nnz() + 2 * n);
    for (i, row) in m.rows.iter().enumerate() {
        for &(j, p) in row {
            if j != last {
                *entries.entry((j, i)).or_insert(0.0) += p;
            }
        }
    }
    for i in 0..last {
        *entries.entry((i, i)).or_insert(0.0) -= 1.0;
    }
    for i in 0..n {
        entries.insert((last, i), 1.0);
    }
    let mut triplets: Vec<Triplet<usize, usize, f64>> = entries
        .into_iter()
        .map(|((row, col), val)| Triplet { row, col, val })
        .collect();
    triplets.sort_by_key(|t| (t.col, t.row));

    let a = SparseColMat::<usize, f64>::try_new_from_triplets(n, n, &triplets)
        .map_err(|_| OracleError::NoConvergence { residual: f64::INFINITY })?;
    let lu = a
        .sp_lu()
        .map_err(|_| OracleError::NoConvergence { residual: f64::INFINITY })?;

    let rhs = Mat::<f64>::from_fn(n, 1, |i, _| if i == last { 1.0 } else { 0.0 });
    let mut x = lu.solve(&rhs);
    for _ in 0..REFINEMENT_STEPS {
        let ax = &a * &x;
        let r = &rhs - &ax;
        let dx = lu.solve(&r);
        x += &dx;
    }

    let mut pi: Vec<f64> = (0..n).map(|i| x[(i, 0)]).collect();
    if pi.iter().any(|v| !v.is_finite()) {
        return Err(OracleError::NoConvergence { residual: f64::INFINITY });
    }
    if let Some(&worst) = pi.iter().min_by(|a, b| a.total_cmp(b)) {
        if worst < -RESIDUAL_TOLERANCE {
            return Err(OracleError::NoConvergence { residual: -worst });
        }
    }
    for v in &mut pi {
        *v = v.max(0.0);
    }
    let total: f64 = pi.iter().sum();
    for v in &mut pi {
        *v /= total;
    }
    let residual = m
        .left_multiply(&pi)
        .iter()
        .zip(&pi)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    if residual > RESIDUAL_TOLERANCE {
        return Err(OracleError::NoConvergence { residual });
    }
    Ok(SteadyStateVector {
        probabilities: pi,
        labels: m.labels.clone(),
        residual,
    })
}
