//! Vector kernels, operator traits, conjugate gradients and a thin wrapper
//! over nalgebra's dense symmetric eigensolver.

use alloc::vec;
use alloc::vec::Vec;
use nalgebra::DMatrix;
#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::error::{Error, Result};

/// A real symmetric operator applied matrix-free.
pub trait LinearOperator {
    fn dim(&self) -> usize;

    /// `out = A x`. `out` is overwritten.
    fn apply(&self, x: &[f64], out: &mut [f64]);

    fn apply_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.apply(x, &mut out);
        out
    }
}

/// An orthogonal projection applied matrix-free.
pub trait Projector {
    fn dim(&self) -> usize;

    /// `out = Q x`. `out` is overwritten.
    fn project(&self, x: &[f64], out: &mut [f64]);

    fn project_in_place(&self, x: &mut [f64]) {
        let mut out = vec![0.0; x.len()];
        self.project(x, &mut out);
        x.copy_from_slice(&out);
    }
}

impl<T: LinearOperator + ?Sized> LinearOperator for &T {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn apply(&self, x: &[f64], out: &mut [f64]) {
        (**self).apply(x, out)
    }
}

impl<T: Projector + ?Sized> Projector for &T {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn project(&self, x: &[f64], out: &mut [f64]) {
        (**self).project(x, out)
    }
}

/// Composition `Q_1 Q_2 ... Q_m` of mutually commuting projections.
pub struct ProjectorChain<'a> {
    parts: Vec<&'a dyn Projector>,
}

impl<'a> ProjectorChain<'a> {
    pub fn new(parts: Vec<&'a dyn Projector>) -> Self {
        Self { parts }
    }
}

impl Projector for ProjectorChain<'_> {
    fn dim(&self) -> usize {
        self.parts.first().map(|p| p.dim()).unwrap_or(0)
    }

    fn project(&self, x: &[f64], out: &mut [f64]) {
        out.copy_from_slice(x);
        for p in self.parts.iter().rev() {
            p.project_in_place(out);
        }
    }
}

/// `Q (A - shift) Q` for a projection `Q` and a scalar shift.
pub struct CompressedOperator<'a> {
    pub op: &'a dyn LinearOperator,
    pub projector: Option<&'a dyn Projector>,
    pub shift: f64,
}

impl LinearOperator for CompressedOperator<'_> {
    fn dim(&self) -> usize {
        self.op.dim()
    }

    fn apply(&self, x: &[f64], out: &mut [f64]) {
        match self.projector {
            Some(q) => {
                let mut qx = vec![0.0; x.len()];
                q.project(x, &mut qx);
                self.op.apply(&qx, out);
                axpy(-self.shift, &qx, out);
                q.project_in_place(out);
            }
            None => {
                self.op.apply(x, out);
                axpy(-self.shift, x, out);
            }
        }
    }
}

/// Dense symmetric matrix stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseSymmetric {
    pub n: usize,
    pub data: Vec<f64>,
}

impl DenseSymmetric {
    pub fn from_fn(n: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                data[i * n + j] = f(i, j);
            }
        }
        Self { n, data }
    }

    /// Columns `A e_j` of a matrix-free operator.
    pub fn materialize(op: &dyn LinearOperator) -> Self {
        let n = op.dim();
        let mut data = vec![0.0; n * n];
        let mut e = vec![0.0; n];
        let mut col = vec![0.0; n];
        for j in 0..n {
            e[j] = 1.0;
            op.apply(&e, &mut col);
            e[j] = 0.0;
            for i in 0..n {
                data[i * n + j] = col[i];
            }
        }
        Self { n, data }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn max_asymmetry(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.n {
            for j in 0..i {
                worst = worst.max((self.get(i, j) - self.get(j, i)).abs());
            }
        }
        worst
    }

    pub fn symmetrized(&self) -> Self {
        Self::from_fn(self.n, |i, j| 0.5 * (self.get(i, j) + self.get(j, i)))
    }

    fn to_nalgebra(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.n, self.n, &self.data)
    }
}

impl LinearOperator for DenseSymmetric {
    fn dim(&self) -> usize {
        self.n
    }

    fn apply(&self, x: &[f64], out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            *o = dot(&self.data[i * self.n..(i + 1) * self.n], x);
        }
    }
}

/// Ascending eigenvalues with matching unit eigenvectors.
#[derive(Debug, Clone)]
pub struct DenseEigen {
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
}

pub fn symmetric_eigen(m: &DenseSymmetric) -> DenseEigen {
    let eig = m.symmetrized().to_nalgebra().symmetric_eigen();
    let mut order: Vec<usize> = (0..m.n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = order
        .iter()
        .map(|&k| eig.eigenvectors.column(k).iter().copied().collect())
        .collect();
    DenseEigen { values, vectors }
}

/// Inverse of a symmetric positive-definite matrix together with its
/// extreme eigenvalues.
pub struct SpdInverse {
    pub inverse: DenseSymmetric,
    pub min_eigenvalue: f64,
    pub max_eigenvalue: f64,
}

pub fn spd_inverse(m: &DenseSymmetric, floor: f64) -> Result<SpdInverse> {
    let eig = symmetric_eigen(m);
    let min_eigenvalue = eig.values.first().copied().unwrap_or(0.0);
    let max_eigenvalue = eig.values.last().copied().unwrap_or(0.0);
    if m.n > 0 && min_eigenvalue < floor {
        return Err(Error::SingularGram { min_eigenvalue });
    }
    let chol = m
        .symmetrized()
        .to_nalgebra()
        .cholesky()
        .ok_or(Error::SingularGram { min_eigenvalue })?;
    let inv = chol.inverse();
    let inverse = DenseSymmetric::from_fn(m.n, |i, j| 0.5 * (inv[(i, j)] + inv[(j, i)]));
    Ok(SpdInverse {
        inverse,
        min_eigenvalue,
        max_eigenvalue,
    })
}

/// Symmetric inverse square root `M^{-1/2}` of a positive-definite matrix.
pub fn inverse_sqrt(m: &DenseSymmetric) -> DenseSymmetric {
    let eig = symmetric_eigen(m);
    DenseSymmetric::from_fn(m.n, |i, j| {
        eig.values
            .iter()
            .zip(&eig.vectors)
            .map(|(&l, v)| v[i] * v[j] / l.sqrt())
            .sum()
    })
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    // four accumulators keep the reduction vectorizable
    let mut acc = [0.0f64; 4];
    let chunks = a.len() / 4;
    for c in 0..chunks {
        let k = 4 * c;
        acc[0] += a[k] * b[k];
        acc[1] += a[k + 1] * b[k + 1];
        acc[2] += a[k + 2] * b[k + 2];
        acc[3] += a[k + 3] * b[k + 3];
    }
    let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for k in 4 * chunks..a.len() {
        s += a[k] * b[k];
    }
    s
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// `y += alpha x`
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub fn scale(alpha: f64, x: &mut [f64]) {
    for xi in x.iter_mut() {
        *xi *= alpha;
    }
}

/// Normalizes in place and returns the original norm.
pub fn normalize(x: &mut [f64]) -> f64 {
    let n = norm(x);
    if n > 0.0 {
        scale(1.0 / n, x);
    }
    n
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn max_abs(a: &[f64]) -> f64 {
    a.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

/// Orthogonalizes `v` against the orthonormal set `basis` (two passes of
/// classical Gram–Schmidt) and returns the remaining norm before
/// normalization.
pub fn orthogonalize(basis: &[Vec<f64>], v: &mut [f64]) -> f64 {
    for _ in 0..2 {
        for b in basis {
            let c = dot(b, v);
            axpy(-c, b, v);
        }
    }
    normalize(v)
}

/// Approximate inverse of an operator, applied to residuals.
pub trait Preconditioner {
    fn dim(&self) -> usize;
    fn precondition(&self, r: &[f64], out: &mut [f64]);
}

/// Family of approximate inverses of `A + s`, indexed by the shift `s`.
pub trait ShiftedInverse {
    fn dim(&self) -> usize;
    fn apply_shifted(&self, r: &[f64], shift: f64, out: &mut [f64]);
}

/// Result of a conjugate-gradient solve.
#[derive(Debug, Clone)]
pub struct CgOutcome {
    pub solution: Vec<f64>,
    pub iterations: usize,
    pub relative_residual: f64,
}

/// Conjugate gradients for a symmetric positive-definite operator. When a
/// projector is given, the right-hand side and every search direction are
/// kept inside its range.
pub fn conjugate_gradient(
    op: &dyn LinearOperator,
    projector: Option<&dyn Projector>,
    rhs: &[f64],
    rel_tol: f64,
    max_iter: usize,
) -> Result<CgOutcome> {
    preconditioned_cg(op, projector, None, rhs, None, rel_tol, max_iter)
}

/// Preconditioned conjugate gradients on the range of `projector`, with an
/// optional starting guess. The preconditioned residual is projected back
/// into the range, so `Q M⁻¹ Q` acts as the preconditioner there.
pub fn preconditioned_cg(
    op: &dyn LinearOperator,
    projector: Option<&dyn Projector>,
    preconditioner: Option<&dyn Preconditioner>,
    rhs: &[f64],
    x0: Option<&[f64]>,
    rel_tol: f64,
    max_iter: usize,
) -> Result<CgOutcome> {
    let n = op.dim();
    if rhs.len() != n {
        return Err(Error::ShapeMismatch {
            expected: n,
            actual: rhs.len(),
        });
    }
    let project = |v: &mut [f64]| {
        if let Some(q) = projector {
            q.project_in_place(v);
        }
    };
    let mut b = rhs.to_vec();
    project(&mut b);
    let b_norm = norm(&b);
    let mut x = vec![0.0; n];
    if b_norm == 0.0 {
        return Ok(CgOutcome {
            solution: x,
            iterations: 0,
            relative_residual: 0.0,
        });
    }
    let mut ap = vec![0.0; n];
    let mut r = b.clone();
    if let Some(x0) = x0 {
        x.copy_from_slice(x0);
        project(&mut x);
        op.apply(&x, &mut ap);
        project(&mut ap);
        axpy(-1.0, &ap, &mut r);
        if !(norm(&r) < b_norm) {
            // a guess worse than zero only costs accuracy
            x.iter_mut().for_each(|v| *v = 0.0);
            r.copy_from_slice(&b);
        }
    }
    let precondition = |r: &[f64], z: &mut Vec<f64>| {
        match preconditioner {
            Some(m) => {
                m.precondition(r, z);
                if let Some(q) = projector {
                    q.project_in_place(z);
                }
            }
            None => z.copy_from_slice(r),
        }
    };
    let mut rel = norm(&r) / b_norm;
    if rel <= rel_tol {
        return Ok(CgOutcome {
            solution: x,
            iterations: 0,
            relative_residual: rel,
        });
    }
    let mut z = vec![0.0; n];
    precondition(&r, &mut z);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    for it in 1..=max_iter {
        op.apply(&p, &mut ap);
        project(&mut ap);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(Error::NotConverged {
                solver: "conjugate gradient (operator not positive definite)",
                iterations: it,
                residual: rel,
            });
        }
        let alpha = rz / pap;
        axpy(alpha, &p, &mut x);
        axpy(-alpha, &ap, &mut r);
        if it % 50 == 0 {
            // refresh the recursive residual
            op.apply(&x, &mut ap);
            project(&mut ap);
            r.copy_from_slice(&b);
            axpy(-1.0, &ap, &mut r);
        }
        rel = norm(&r) / b_norm;
        if rel <= rel_tol {
            return Ok(CgOutcome {
                solution: x,
                iterations: it,
                relative_residual: rel,
            });
        }
        precondition(&r, &mut z);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for (pi, zi) in p.iter_mut().zip(&z) {
            *pi = zi + beta * *pi;
        }
        project(&mut p);
    }
    Err(Error::NotConverged {
        solver: "conjugate gradient",
        iterations: max_iter,
        residual: rel,
    })
}
