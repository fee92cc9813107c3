//! Solvers for the constrained symmetric positive definite system.

use std::time::Instant;

use nalgebra::DVector;

use crate::assembly::SparseSystem;
use crate::error::{Error, Result};
use crate::sparse::CsrMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveMethod {
    /// Jacobi-preconditioned conjugate gradient.
    ConjugateGradient,
    /// Dense Cholesky factorization, limited to [`DENSE_LIMIT`] unknowns.
    DenseCholesky,
}

pub const DENSE_LIMIT: usize = 2000;
pub const DEFAULT_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct SolveOptions {
    pub method: SolveMethod,
    /// Relative residual `‖Kφ − b‖₂ / ‖b‖₂` to reach.
    pub tolerance: f64,
    pub max_iterations: usize,
    pub initial_guess: Option<Vec<f64>>,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            method: SolveMethod::ConjugateGradient,
            tolerance: DEFAULT_TOLERANCE,
            max_iterations: 20_000,
            initial_guess: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub solution: Vec<f64>,
    pub iterations: usize,
    pub final_relative_residual: f64,
    pub method: SolveMethod,
    pub wall_time: f64,
}

pub fn solve(system: &SparseSystem, options: &SolveOptions) -> Result<SolveReport> {
    if !(options.tolerance > 0.0 && options.tolerance < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "tolerance must lie in (0, 1), got {}",
            options.tolerance
        )));
    }
    let start = Instant::now();
    let (solution, iterations) = match options.method {
        SolveMethod::ConjugateGradient => conjugate_gradient(
            &system.matrix,
            &system.rhs,
            options.tolerance,
            options.max_iterations,
            options.initial_guess.as_deref(),
        )?,
        SolveMethod::DenseCholesky => (dense_cholesky(&system.matrix, &system.rhs)?, 0),
    };
    let final_relative_residual = relative_residual(&system.matrix, &system.rhs, &solution);
    Ok(SolveReport {
        solution,
        iterations,
        final_relative_residual,
        method: options.method,
        wall_time: start.elapsed().as_secs_f64(),
    })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn relative_residual(a: &CsrMatrix, b: &[f64], x: &[f64]) -> f64 {
    let ax = a.mul_vec(x);
    let r: f64 = ax.iter().zip(b).map(|(p, q)| (q - p) * (q - p)).sum::<f64>().sqrt();
    let nb = dot(b, b).sqrt();
    if nb == 0.0 {
        r
    } else {
        r / nb
    }
}

/// Jacobi-preconditioned CG. Returns the solution and the iteration count.
pub fn conjugate_gradient(
    a: &CsrMatrix,
    b: &[f64],
    tolerance: f64,
    max_iterations: usize,
    initial_guess: Option<&[f64]>,
) -> Result<(Vec<f64>, usize)> {
    let n = b.len();
    let b_norm = dot(b, b).sqrt();
    if b_norm == 0.0 {
        return Ok((vec![0.0; n], 0));
    }
    let diag = a.diagonal();
    if let Some(i) = diag.iter().position(|&d| !(d > 0.0)) {
        return Err(Error::Singular(format!("non-positive diagonal entry at row {i}")));
    }
    let inv_diag: Vec<f64> = diag.iter().map(|d| 1.0 / d).collect();

    let mut x = initial_guess.map_or_else(|| vec![0.0; n], <[f64]>::to_vec);
    let mut r = b.to_vec();
    let mut q = vec![0.0; n];
    if initial_guess.is_some() {
        a.mul_vec_into(&x, &mut q);
        for (ri, qi) in r.iter_mut().zip(&q) {
            *ri -= qi;
        }
    }
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(r, d)| r * d).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut history = Vec::new();

    let mut residual = dot(&r, &r).sqrt() / b_norm;
    if residual <= tolerance {
        return Ok((x, 0));
    }
    for it in 1..=max_iterations {
        a.mul_vec_into(&p, &mut q);
        let pq = dot(&p, &q);
        if !(pq > 0.0) {
            return Err(Error::Singular(format!("conjugate gradient breakdown (pᵀKp = {pq:e}) at iteration {it}")));
        }
        let step = rz / pq;
        for i in 0..n {
            x[i] += step * p[i];
            r[i] -= step * q[i];
        }
        residual = dot(&r, &r).sqrt() / b_norm;
        history.push(residual);
        if residual <= tolerance {
            // confirm against the true residual, drift can hide a few digits
            let true_residual = relative_residual(a, b, &x);
            if true_residual <= tolerance {
                return Ok((x, it));
            }
            r = b.to_vec();
            a.mul_vec_into(&x, &mut q);
            for (ri, qi) in r.iter_mut().zip(&q) {
                *ri -= qi;
            }
        }
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_next = dot(&r, &z);
        let beta = rz_next / rz;
        rz = rz_next;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(Error::NotConverged {
        iterations: max_iterations,
        residual,
        history,
    })
}

pub fn dense_cholesky(a: &CsrMatrix, b: &[f64]) -> Result<Vec<f64>> {
    if a.dim() > DENSE_LIMIT {
        return Err(Error::InvalidArgument(format!(
            "dense Cholesky is limited to {DENSE_LIMIT} unknowns, system has {}",
            a.dim()
        )));
    }
    let chol = a.to_dense().cholesky().ok_or(Error::IndefiniteMatrix)?;
    Ok(chol.solve(&DVector::from_column_slice(b)).as_slice().to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::collections::BTreeMap;

    fn system(matrix: CsrMatrix, rhs: Vec<f64>) -> SparseSystem {
        SparseSystem {
            matrix,
            rhs,
            dirichlet: BTreeMap::new(),
        }
    }

    fn random_spd(n: usize, seed: u64) -> (CsrMatrix, Vec<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
        let a = &m * m.transpose() + DMatrix::identity(n, n) * (n as f64 * 0.1);
        let b = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        (CsrMatrix::from_dense(&a), b)
    }

    #[test]
    fn identity_in_one_iteration() {
        let b = vec![1.0, -2.0, 3.5];
        let report = solve(&system(CsrMatrix::identity(3), b.clone()), &SolveOptions::default()).unwrap();
        assert_eq!(report.solution, b);
        assert_eq!(report.iterations, 1);
    }

    #[test]
    fn cg_agrees_with_cholesky() {
        let (a, b) = random_spd(50, 5);
        let sys = system(a, b);
        let cg = solve(&sys, &SolveOptions::default()).unwrap();
        let chol = solve(
            &sys,
            &SolveOptions {
                method: SolveMethod::DenseCholesky,
                ..SolveOptions::default()
            },
        )
        .unwrap();
        let diff: f64 = cg.solution.iter().zip(&chol.solution).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
        let norm: f64 = chol.solution.iter().map(|x| x * x).sum::<f64>().sqrt();
        assert!(diff / norm < 1e-8);
        assert!(cg.final_relative_residual <= 1e-10);
    }

    #[test]
    fn initial_guess_and_scaling_do_not_matter() {
        let (a, b) = random_spd(30, 9);
        let base = solve(&system(a.clone(), b.clone()), &SolveOptions::default()).unwrap();
        let guess: Vec<f64> = (0..30).map(|i| (i as f64).sin()).collect();
        let warm = solve(
            &system(a.clone(), b.clone()),
            &SolveOptions {
                initial_guess: Some(guess),
                ..SolveOptions::default()
            },
        )
        .unwrap();
        let scaled = solve(
            &system(a.scaled(7.5), b.iter().map(|x| x * 7.5).collect()),
            &SolveOptions::default(),
        )
        .unwrap();
        let norm: f64 = base.solution.iter().map(|x| x * x).sum::<f64>().sqrt();
        for other in [&warm, &scaled] {
            let diff: f64 = other.solution.iter().zip(&base.solution).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
            assert!(diff / norm < 1e-8);
        }
    }

    #[test]
    fn zero_rhs_gives_zero() {
        let (a, _) = random_spd(10, 1);
        let report = solve(&system(a, vec![0.0; 10]), &SolveOptions::default()).unwrap();
        assert!(report.solution.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn failures_are_reported() {
        let (a, b) = random_spd(40, 2);
        let err = solve(
            &system(a, b),
            &SolveOptions {
                max_iterations: 2,
                ..SolveOptions::default()
            },
        )
        .unwrap_err();
        match err {
            Error::NotConverged { iterations, history, .. } => {
                assert_eq!(iterations, 2);
                assert_eq!(history.len(), 2);
            }
            other => panic!("unexpected {other:?}"),
        }
        let indefinite = CsrMatrix::from_triplets(2, &[(0, 0, 1.0), (1, 1, -1.0)]);
        let opts = SolveOptions {
            method: SolveMethod::DenseCholesky,
            ..SolveOptions::default()
        };
        assert!(matches!(solve(&system(indefinite, vec![1.0, 1.0]), &opts), Err(Error::IndefiniteMatrix)));
        assert!(solve(&system(CsrMatrix::identity(2), vec![1.0, 1.0]), &SolveOptions { tolerance: 0.0, ..SolveOptions::default() }).is_err());
    }
}
