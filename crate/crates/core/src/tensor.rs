//! Dense complex linear algebra used by the channel constructions: tensor
//! products, partial trace/transpose, Hermitian eigendecomposition, matrix
//! exponential and the von Neumann entropy.
//!
//! Conventions, stated once and used everywhere:
//! - tensor factors are big-endian: the first factor varies slowest,
//! - all logarithms are base 2, entropies and capacities are in (qu)bits,
//! - entropy eigenvalues below [`ENTROPY_CLIP`] contribute zero.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex;

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;
pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

/// Eigenvalues below this threshold are treated as exact zeros when
/// evaluating `-λ log₂ λ`, so roundoff-negative eigenvalues cannot poison an
/// entropy.
pub const ENTROPY_CLIP: f64 = 1e-12;

pub fn cr(x: f64) -> C64 {
    C64::new(x, 0.0)
}

pub fn ci(x: f64) -> C64 {
    C64::new(0.0, x)
}

/// An ordered factorization of a total dimension into local dimensions.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize)]
pub struct SubsystemShape {
    pub dims: Vec<usize>,
}

impl SubsystemShape {
    pub fn new(dims: Vec<usize>) -> Self {
        Self { dims }
    }

    pub fn total(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn check(&self, dim: usize) -> Result<()> {
        if self.total() != dim {
            return Err(Error::DimensionMismatch(format!(
                "shape {:?} has total {} but matrix dimension is {}",
                self.dims,
                self.total(),
                dim
            )));
        }
        Ok(())
    }

    /// Big-endian strides: `stride[k]` is the product of the dimensions after
    /// factor `k`.
    pub fn strides(&self) -> Vec<usize> {
        let mut s = vec![1usize; self.dims.len()];
        for k in (0..self.dims.len().saturating_sub(1)).rev() {
            s[k] = s[k + 1] * self.dims[k + 1];
        }
        s
    }
}

/// Standard tensor (Kronecker) product, first factor slowest.
pub fn kron(a: &CMat, b: &CMat) -> CMat {
    a.kronecker(b)
}

pub fn identity(dim: usize) -> CMat {
    CMat::identity(dim, dim)
}

pub fn max_abs(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn hermiticity_residual(m: &CMat) -> f64 {
    max_abs(&(m - m.adjoint()))
}

fn multi_indices(dims: &[usize]) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    for &d in dims {
        let mut next = Vec::with_capacity(out.len() * d);
        for base in &out {
            for k in 0..d {
                let mut v = base.clone();
                v.push(k);
                next.push(v);
            }
        }
        out = next;
    }
    out
}

/// Partial trace over the factors *not* listed in `keep`.
pub fn partial_trace(m: &CMat, shape: &SubsystemShape, keep: &[usize]) -> Result<CMat> {
    shape.check(m.nrows())?;
    if m.nrows() != m.ncols() {
        return Err(Error::DimensionMismatch("partial_trace needs a square matrix".into()));
    }
    let n = shape.dims.len();
    if keep.iter().any(|&k| k >= n) {
        return Err(Error::DimensionMismatch("keep index out of range".into()));
    }
    let traced: Vec<usize> = (0..n).filter(|k| !keep.contains(k)).collect();
    let strides = shape.strides();
    let keep_dims: Vec<usize> = keep.iter().map(|&k| shape.dims[k]).collect();
    let traced_dims: Vec<usize> = traced.iter().map(|&k| shape.dims[k]).collect();
    let out_dim: usize = keep_dims.iter().product();
    let mut out = CMat::zeros(out_dim, out_dim);

    let keep_idx = multi_indices(&keep_dims);
    let traced_idx = multi_indices(&traced_dims);
    for (ri, rmi) in keep_idx.iter().enumerate() {
        for (ci, cmi) in keep_idx.iter().enumerate() {
            let mut acc = C64::new(0.0, 0.0);
            for tmi in &traced_idx {
                let mut row = 0usize;
                let mut col = 0usize;
                for (pos, &f) in keep.iter().enumerate() {
                    row += rmi[pos] * strides[f];
                    col += cmi[pos] * strides[f];
                }
                for (pos, &f) in traced.iter().enumerate() {
                    row += tmi[pos] * strides[f];
                    col += tmi[pos] * strides[f];
                }
                acc += m[(row, col)];
            }
            out[(ri, ci)] = acc;
        }
    }
    Ok(out)
}

/// Transpose a single tensor factor in place; applying twice is the identity.
pub fn partial_transpose(m: &CMat, shape: &SubsystemShape, which: usize) -> Result<CMat> {
    shape.check(m.nrows())?;
    if which >= shape.dims.len() {
        return Err(Error::DimensionMismatch("transpose index out of range".into()));
    }
    let strides = shape.strides();
    let dw = shape.dims[which];
    let sw = strides[which];
    let dim = m.nrows();
    let mut out = CMat::zeros(dim, dim);
    for row in 0..dim {
        let rw = (row / sw) % dw;
        let row_rest = row - rw * sw;
        for col in 0..dim {
            let cw = (col / sw) % dw;
            let col_rest = col - cw * sw;
            out[(row_rest + cw * sw, col_rest + rw * sw)] = m[(row, col)];
        }
    }
    Ok(out)
}

/// Eigenvalues of a real symmetric tridiagonal matrix by the implicit-shift
/// QL algorithm. `diag` holds the diagonal, `off[i]` couples `i` and `i+1`.
fn tridiagonal_eigenvalues(diag: &mut [f64], off: &mut Vec<f64>) -> Result<()> {
    let n = diag.len();
    off.push(0.0);
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = diag[m].abs() + diag[m + 1].abs();
                if off[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 50 {
                return Err(Error::ContractViolation(
                    "tridiagonal QL failed to converge".into(),
                ));
            }
            let mut g = (diag[l + 1] - diag[l]) / (2.0 * off[l]);
            let mut r = g.hypot(1.0);
            g = diag[m] - diag[l] + off[l] / (g + r.copysign(g));
            let (mut s, mut c) = (1.0, 1.0);
            let mut p = 0.0;
            for i in (l..m).rev() {
                let f = s * off[i];
                let b = c * off[i];
                r = f.hypot(g);
                off[i + 1] = r;
                if r == 0.0 {
                    diag[i + 1] -= p;
                    off[m] = 0.0;
                    break;
                }
                s = f / r;
                c = g / r;
                g = diag[i + 1] - p;
                r = (diag[i] - g) * s + 2.0 * c * b;
                p = s * r;
                diag[i + 1] = g + p;
                g = c * r - b;
                if i == l {
                    diag[l] -= p;
                    off[l] = g;
                    off[m] = 0.0;
                }
            }
        }
    }
    off.pop();
    Ok(())
}

/// Hermitian eigenvalues only, unsorted. Uses a cheap QL path when the matrix
/// is tridiagonal (the constructed block channels are), otherwise a full
/// symmetric eigendecomposition.
pub fn hermitian_eigenvalues(m: &CMat) -> Result<Vec<f64>> {
    let n = m.nrows();
    if n == 0 {
        return Ok(vec![]);
    }
    if n == 1 {
        return Ok(vec![m[(0, 0)].re]);
    }
    if n == 2 {
        let (a, d) = (m[(0, 0)].re, m[(1, 1)].re);
        let b = m[(0, 1)].norm();
        let mid = 0.5 * (a + d);
        let rad = (0.25 * (a - d) * (a - d) + b * b).sqrt();
        return Ok(vec![mid + rad, mid - rad]);
    }
    // bandwidth check
    let scale = max_abs(m).max(1.0);
    let mut tridiag = true;
    'outer: for i in 0..n {
        for j in 0..n {
            if j > i + 1 && m[(i, j)].norm() > 1e-14 * scale {
                tridiag = false;
                break 'outer;
            }
        }
    }
    if tridiag {
        let mut diag: Vec<f64> = (0..n).map(|i| m[(i, i)].re).collect();
        // unitary diagonal phase transformation makes the off-diagonal real
        let mut off: Vec<f64> = (0..n - 1).map(|i| m[(i, i + 1)].norm()).collect();
        tridiagonal_eigenvalues(&mut diag, &mut off)?;
        return Ok(diag);
    }
    let eig = nalgebra::SymmetricEigen::new(m.clone());
    Ok(eig.eigenvalues.iter().copied().collect())
}

/// Full Hermitian eigendecomposition, eigenvalues sorted descending with
/// matching eigenvector columns. Errors when the input is not Hermitian
/// within 1e-10.
pub fn eig_hermitian(m: &CMat) -> Result<(Vec<f64>, CMat)> {
    if m.nrows() != m.ncols() {
        return Err(Error::DimensionMismatch("eig_hermitian needs a square matrix".into()));
    }
    let resid = hermiticity_residual(m);
    if resid > 1e-10 {
        return Err(Error::ContractViolation(format!(
            "eig_hermitian: input deviates from Hermitian by {resid:.3e}"
        )));
    }
    let herm = (m + m.adjoint()).scale(0.5);
    let eig = nalgebra::SymmetricEigen::new(herm);
    let n = m.nrows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].partial_cmp(&eig.eigenvalues[a]).unwrap());
    let values: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut vectors = CMat::zeros(n, n);
    for (new, &old) in order.iter().enumerate() {
        vectors.set_column(new, &eig.eigenvectors.column(old));
    }
    Ok((values, vectors))
}

fn matrix_one_norm(m: &CMat) -> f64 {
    (0..m.ncols())
        .map(|j| m.column(j).iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Matrix exponential. Hermitian and anti-Hermitian inputs go through the
/// eigendecomposition; the general case uses Padé(13) scaling and squaring.
pub fn matrix_exp(m: &CMat) -> Result<CMat> {
    if m.nrows() != m.ncols() {
        return Err(Error::DimensionMismatch("matrix_exp needs a square matrix".into()));
    }
    let n = m.nrows();
    if n == 0 {
        return Ok(CMat::zeros(0, 0));
    }
    let scale = max_abs(m).max(1.0);
    if hermiticity_residual(m) <= 1e-13 * scale {
        let (vals, vecs) = eig_hermitian(m)?;
        let d = CMat::from_diagonal(&CVec::from_iterator(n, vals.iter().map(|&v| cr(v.exp()))));
        return Ok(&vecs * d * vecs.adjoint());
    }
    let anti = max_abs(&(m + m.adjoint()));
    if anti <= 1e-13 * scale {
        // m = iH with H Hermitian
        let h = m.map(|z| z * ci(-1.0));
        let (vals, vecs) = eig_hermitian(&h)?;
        let d = CMat::from_diagonal(&CVec::from_iterator(
            n,
            vals.iter().map(|&v| C64::new(v.cos(), v.sin())),
        ));
        return Ok(&vecs * d * vecs.adjoint());
    }
    pade13_exp(m)
}

fn pade13_exp(m: &CMat) -> Result<CMat> {
    const B: [f64; 14] = [
        64764752532480000.0,
        32382376266240000.0,
        7771770303897600.0,
        1187353796428800.0,
        129060195264000.0,
        10559470521600.0,
        670442572800.0,
        33522128640.0,
        1323241920.0,
        40840800.0,
        960960.0,
        16380.0,
        182.0,
        1.0,
    ];
    const THETA13: f64 = 5.371920351148152;
    let norm = matrix_one_norm(m);
    let s = if norm > THETA13 {
        ((norm / THETA13).log2().ceil() as i32).max(0)
    } else {
        0
    };
    let a = m.map(|z| z / cr(2f64.powi(s)));
    let n = a.nrows();
    let id = identity(n);
    let a2 = &a * &a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let u_inner = &a6 * (a6.scale(B[13]) + a4.scale(B[11]) + a2.scale(B[9]))
        + a6.scale(B[7])
        + a4.scale(B[5])
        + a2.scale(B[3])
        + id.scale(B[1]);
    let u = &a * u_inner;
    let v = &a6 * (a6.scale(B[12]) + a4.scale(B[10]) + a2.scale(B[8]))
        + a6.scale(B[6])
        + a4.scale(B[4])
        + a2.scale(B[2])
        + id.scale(B[0]);
    let lhs = &v - &u;
    let rhs = &v + &u;
    let mut x = lhs
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::ContractViolation("matrix_exp: Padé solve failed".into()))?;
    for _ in 0..s {
        x = &x * &x;
    }
    Ok(x)
}

/// Hermitian, positive semidefinite, unit-trace matrix.
#[derive(Debug, Clone)]
pub struct DensityMatrix {
    mat: CMat,
}

impl DensityMatrix {
    /// Validates Hermiticity (1e-12), unit trace (1e-10) and positivity
    /// (minimum eigenvalue ≥ -1e-10).
    pub fn new(mat: CMat) -> Result<Self> {
        if mat.nrows() != mat.ncols() {
            return Err(Error::DimensionMismatch("density matrix must be square".into()));
        }
        let herm = hermiticity_residual(&mat);
        if herm > 1e-12 {
            return Err(Error::ContractViolation(format!(
                "density matrix Hermiticity residual {herm:.3e}"
            )));
        }
        let tr = mat.trace();
        if (tr.re - 1.0).abs() > 1e-10 || tr.im.abs() > 1e-10 {
            return Err(Error::ContractViolation(format!("density matrix trace {tr}")));
        }
        let min = hermitian_eigenvalues(&mat)?
            .into_iter()
            .fold(f64::INFINITY, f64::min);
        if min < -1e-10 {
            return Err(Error::ContractViolation(format!(
                "density matrix minimum eigenvalue {min:.3e}"
            )));
        }
        Ok(Self { mat })
    }

    pub fn from_pure(state: &CVec) -> Result<Self> {
        let norm = state.norm();
        if (norm - 1.0).abs() > 1e-10 {
            return Err(Error::ContractViolation(format!("pure state norm {norm}")));
        }
        Ok(Self { mat: state * state.adjoint() })
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self { mat: identity(dim).scale(1.0 / dim as f64) }
    }

    /// Qubit state from Bloch-ball coordinates, |n| ≤ 1.
    pub fn from_bloch(n: [f64; 3]) -> Result<Self> {
        let r2 = n[0] * n[0] + n[1] * n[1] + n[2] * n[2];
        if r2 > 1.0 + 1e-9 {
            return Err(Error::InvalidParameter(format!(
                "Bloch vector norm {} exceeds 1",
                r2.sqrt()
            )));
        }
        let mut m = CMat::zeros(2, 2);
        m[(0, 0)] = cr(0.5 * (1.0 + n[2]));
        m[(1, 1)] = cr(0.5 * (1.0 - n[2]));
        m[(0, 1)] = C64::new(0.5 * n[0], -0.5 * n[1]);
        m[(1, 0)] = C64::new(0.5 * n[0], 0.5 * n[1]);
        Ok(Self { mat: m })
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &CMat {
        &self.mat
    }

    pub fn into_matrix(self) -> CMat {
        self.mat
    }
}

/// `-Σ λ log₂ λ` over clipped eigenvalues. Accepts any set of nonnegative
/// weights, so it applies directly to the unnormalized blocks of a
/// direct-sum output.
pub fn entropy_of_eigenvalues(eigs: &[f64]) -> f64 {
    eigs.iter()
        .filter(|&&l| l > ENTROPY_CLIP)
        .map(|&l| -l * l.log2())
        .sum()
}

/// Von Neumann entropy in bits.
pub fn von_neumann_entropy(rho: &DensityMatrix) -> Result<f64> {
    let eigs = hermitian_eigenvalues(rho.matrix())?;
    Ok(entropy_of_eigenvalues(&eigs))
}

/// Entropy of a Hermitian PSD matrix without the density-matrix validation;
/// trace need not be 1 (used for direct-sum blocks).
pub fn entropy_of_matrix(m: &CMat) -> Result<f64> {
    Ok(entropy_of_eigenvalues(&hermitian_eigenvalues(m)?))
}
