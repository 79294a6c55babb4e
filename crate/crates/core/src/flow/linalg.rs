//! Sparse matrices and the two linear solvers used by the flow step.

use faer::linalg::solvers::Solve;
use faer::sparse::linalg::solvers::{Lu, SymbolicLu};
use faer::sparse::{SparseColMat, Triplet};
use faer::Mat;

use crate::error::{Error, Result};

/// Compressed sparse rows with duplicates summed.
#[derive(Debug, Clone)]
pub struct Csr {
    n: usize,
    row_ptr: Vec<usize>,
    col: Vec<usize>,
    val: Vec<f64>,
}

impl Csr {
    pub fn from_triplets(n: usize, entries: &[(usize, usize, f64)]) -> Csr {
        let mut counts = vec![0usize; n + 1];
        for &(r, _, _) in entries {
            counts[r + 1] += 1;
        }
        for k in 0..n {
            counts[k + 1] += counts[k];
        }
        let mut fill = counts.clone();
        let mut raw: Vec<(usize, f64)> = vec![(0, 0.0); entries.len()];
        for &(r, c, v) in entries {
            raw[fill[r]] = (c, v);
            fill[r] += 1;
        }
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut col = Vec::with_capacity(entries.len());
        let mut val = Vec::with_capacity(entries.len());
        row_ptr.push(0);
        for r in 0..n {
            let row = &mut raw[counts[r]..counts[r + 1]];
            row.sort_unstable_by_key(|e| e.0);
            for &(c, v) in row.iter() {
                if col.len() > row_ptr[r] && *col.last().unwrap() == c {
                    *val.last_mut().unwrap() += v;
                } else {
                    col.push(c);
                    val.push(v);
                }
            }
            row_ptr.push(col.len());
        }
        Csr { n, row_ptr, col, val }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn mul(&self, x: &[f64], y: &mut [f64]) {
        for (r, out) in y.iter_mut().enumerate().take(self.n) {
            let mut s = 0.0;
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                s += self.val[k] * x[self.col[k]];
            }
            *out = s;
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n)
            .map(|r| {
                (self.row_ptr[r]..self.row_ptr[r + 1])
                    .find(|&k| self.col[k] == r)
                    .map_or(0.0, |k| self.val[k])
            })
            .collect()
    }
}

/// Outcome of an iterative solve.
#[derive(Debug, Clone, Default)]
pub struct SolveReport {
    pub iterations: usize,
    pub residual: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Jacobi-preconditioned conjugate gradients on an SPD matrix. `x` holds the
/// initial guess on entry. Converged when `|r| <= tol |b|`.
pub fn pcg(a: &Csr, b: &[f64], x: &mut [f64], tol: f64, max_iters: usize, solver: &'static str) -> Result<SolveReport> {
    let n = a.n();
    let bnorm = dot(b, b).sqrt();
    if bnorm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return Ok(SolveReport::default());
    }
    let inv_diag: Vec<f64> = a
        .diagonal()
        .into_iter()
        .map(|d| if d > 0.0 { 1.0 / d } else { 1.0 })
        .collect();
    let mut r = vec![0.0; n];
    a.mul(x, &mut r);
    for k in 0..n {
        r[k] = b[k] - r[k];
    }
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(r, d)| r * d).collect();
    let mut p = z.clone();
    let mut ap = vec![0.0; n];
    let mut rz = dot(&r, &z);
    let mut history = Vec::new();
    let mut rel = dot(&r, &r).sqrt() / bnorm;
    history.push(rel);
    let mut it = 0;
    while rel > tol {
        if it == max_iters || !rel.is_finite() {
            return Err(Error::SolverDiverged {
                solver,
                iterations: it,
                residual: rel,
                history,
            });
        }
        a.mul(&p, &mut ap);
        let alpha = rz / dot(&p, &ap);
        for k in 0..n {
            x[k] += alpha * p[k];
            r[k] -= alpha * ap[k];
        }
        for k in 0..n {
            z[k] = r[k] * inv_diag[k];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for k in 0..n {
            p[k] = z[k] + beta * p[k];
        }
        it += 1;
        rel = dot(&r, &r).sqrt() / bnorm;
        history.push(rel);
    }
    Ok(SolveReport {
        iterations: it,
        residual: rel,
    })
}

/// Sparse LU with the symbolic analysis kept across solves that share a
/// sparsity pattern.
#[derive(Default)]
pub struct DirectSolver {
    cached: Option<(Vec<usize>, Vec<usize>, SymbolicLu<usize>)>,
}

impl DirectSolver {
    pub fn solve(&mut self, n: usize, entries: &[(usize, usize, f64)], rhs: &[f64]) -> Result<Vec<f64>> {
        let triplets: Vec<Triplet<usize, usize, f64>> =
            entries.iter().map(|&(r, c, v)| Triplet::new(r, c, v)).collect();
        let mat = SparseColMat::<usize, f64>::try_new_from_triplets(n, n, &triplets)
            .map_err(|e| Error::Layout(format!("sparse assembly failed: {e:?}")))?;
        let pattern_matches = self
            .cached
            .as_ref()
            .is_some_and(|(cp, ri, _)| cp.as_slice() == mat.col_ptr() && ri.as_slice() == mat.row_idx());
        if !pattern_matches {
            let symbolic = SymbolicLu::try_new(mat.symbolic()).map_err(|e| Error::Layout(format!("{e:?}")))?;
            self.cached = Some((mat.col_ptr().to_vec(), mat.row_idx().to_vec(), symbolic));
        }
        let symbolic = self.cached.as_ref().unwrap().2.clone();
        let lu = Lu::try_new_with_symbolic(symbolic, mat.as_ref()).map_err(|e| {
            log::error!("sparse LU factorisation failed: {e:?}");
            Error::SolverDiverged {
                solver: "stokes",
                iterations: 0,
                residual: f64::INFINITY,
                history: vec![],
            }
        })?;
        let b = Mat::<f64>::from_fn(n, 1, |i, _| rhs[i]);
        let x = lu.solve(&b);
        let out: Vec<f64> = (0..n).map(|i| x[(i, 0)]).collect();
        if out.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("direct solve"));
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn laplace_1d(n: usize) -> Vec<(usize, usize, f64)> {
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.0));
            if i > 0 {
                t.push((i, i - 1, -1.0));
            }
            if i + 1 < n {
                t.push((i, i + 1, -1.0));
            }
        }
        t
    }

    #[test]
    fn csr_sums_duplicates() {
        let a = Csr::from_triplets(2, &[(0, 0, 1.0), (0, 0, 2.0), (1, 0, 4.0), (0, 1, 1.0)]);
        let mut y = [0.0; 2];
        a.mul(&[1.0, 2.0], &mut y);
        assert_eq!(y, [5.0, 4.0]);
        assert_eq!(a.diagonal(), vec![3.0, 0.0]);
    }

    #[test]
    fn pcg_solves_poisson() {
        let n = 50;
        let a = Csr::from_triplets(n, &laplace_1d(n));
        let b = vec![1.0; n];
        let mut x = vec![0.0; n];
        let rep = pcg(&a, &b, &mut x, 1e-12, 500, "test").unwrap();
        assert!(rep.iterations <= n + 1);
        let mut ax = vec![0.0; n];
        a.mul(&x, &mut ax);
        let err: f64 = ax.iter().zip(&b).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
        assert!(err < 1e-9);
    }

    #[test]
    fn pcg_reports_history_on_failure() {
        let n = 50;
        let a = Csr::from_triplets(n, &laplace_1d(n));
        let mut x = vec![0.0; n];
        match pcg(&a, &vec![1.0; n], &mut x, 1e-14, 3, "test") {
            Err(Error::SolverDiverged {
                iterations, history, ..
            }) => {
                assert_eq!(iterations, 3);
                assert_eq!(history.len(), 4);
            }
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn direct_solver_reuses_pattern() {
        let n = 20;
        let mut s = DirectSolver::default();
        let t = laplace_1d(n);
        let x1 = s.solve(n, &t, &vec![1.0; n]).unwrap();
        let t2: Vec<_> = t.iter().map(|&(r, c, v)| (r, c, 2.0 * v)).collect();
        let x2 = s.solve(n, &t2, &vec![1.0; n]).unwrap();
        for (a, b) in x1.iter().zip(&x2) {
            assert!((a - 2.0 * b).abs() < 1e-10);
        }
    }
}
