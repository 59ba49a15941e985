//! Channel representations: Stinespring isometries, Choi matrices, Kraus
//! decompositions, the direct-sum block structure of the dual-rail horizon
//! channels, and the closed-form cloning/depolarizing block maps built from
//! su(2) generators.

use crate::error::{Error, Result};
use crate::tensor::{
    cr, hermitian_eigenvalues, identity, max_abs, partial_trace, C64, CMat, CVec, SubsystemShape,
};

/// Complex matrix `V` with `V†V = I` plus the declared output/environment
/// factorization. The channel is `ρ ↦ Tr_E(VρV†)`, the complementary channel
/// traces over `B` instead.
#[derive(Debug, Clone)]
pub struct StinespringIsometry {
    v: CMat,
    pub input_dim: usize,
    pub output_shape: SubsystemShape,
    pub b_factors: Vec<usize>,
    /// Raw truncation deficit per column, before renormalization.
    pub column_residuals: Vec<f64>,
}

impl StinespringIsometry {
    pub fn new(
        v: CMat,
        output_shape: SubsystemShape,
        b_factors: Vec<usize>,
        column_residuals: Vec<f64>,
    ) -> Result<Self> {
        output_shape.check(v.nrows())?;
        let input_dim = v.ncols();
        let gram = v.adjoint() * &v;
        let resid = max_abs(&(gram - identity(input_dim)));
        if resid > 1e-9 {
            return Err(Error::ContractViolation(format!(
                "isometry deviates from V†V = I by {resid:.3e}"
            )));
        }
        Ok(Self { v, input_dim, output_shape, b_factors, column_residuals })
    }

    pub fn matrix(&self) -> &CMat {
        &self.v
    }

    pub fn e_factors(&self) -> Vec<usize> {
        (0..self.output_shape.dims.len())
            .filter(|k| !self.b_factors.contains(k))
            .collect()
    }

    pub fn output_dim(&self) -> usize {
        self.b_factors.iter().map(|&k| self.output_shape.dims[k]).product()
    }

    pub fn env_dim(&self) -> usize {
        self.e_factors().iter().map(|&k| self.output_shape.dims[k]).product()
    }

    /// The same isometry with the roles of output and environment swapped.
    pub fn swapped(&self) -> Self {
        Self {
            v: self.v.clone(),
            input_dim: self.input_dim,
            output_shape: self.output_shape.clone(),
            b_factors: self.e_factors(),
            column_residuals: self.column_residuals.clone(),
        }
    }

    fn check_input(&self, rho: &CMat) -> Result<()> {
        if rho.nrows() != self.input_dim || rho.ncols() != self.input_dim {
            return Err(Error::DimensionMismatch(format!(
                "input is {}×{}, isometry expects {}",
                rho.nrows(),
                rho.ncols(),
                self.input_dim
            )));
        }
        Ok(())
    }

    /// `Tr_E(VρV†) = Σ_ij ρ_ij M_i M_j†` with `M_i` the column reshapes;
    /// the full `VρV†` is never materialized.
    pub fn apply(&self, rho: &CMat) -> Result<CMat> {
        self.check_input(rho)?;
        let cols: Vec<CMat> = (0..self.input_dim).map(|i| self.column_as_output_env(i)).collect();
        let b = self.output_dim();
        let mut out = CMat::zeros(b, b);
        for i in 0..self.input_dim {
            for j in 0..self.input_dim {
                if rho[(i, j)].norm() < 1e-300 {
                    continue;
                }
                out += (&cols[i] * cols[j].adjoint()).map(|z| z * rho[(i, j)]);
            }
        }
        Ok(out)
    }

    /// `Tr_B(VρV†) = Σ_ij ρ_ij M_iᵀ conj(M_j)`.
    pub fn complement_apply(&self, rho: &CMat) -> Result<CMat> {
        self.check_input(rho)?;
        let cols: Vec<CMat> = (0..self.input_dim).map(|i| self.column_as_output_env(i)).collect();
        let e = self.env_dim();
        let mut out = CMat::zeros(e, e);
        for i in 0..self.input_dim {
            for j in 0..self.input_dim {
                if rho[(i, j)].norm() < 1e-300 {
                    continue;
                }
                out += (cols[i].transpose() * cols[j].map(|z| z.conj())).map(|z| z * rho[(i, j)]);
            }
        }
        Ok(out)
    }

    /// Column `col` reshaped into a `output_dim × env_dim` matrix with the
    /// output index slowest.
    pub fn column_as_output_env(&self, col: usize) -> CMat {
        let dims = &self.output_shape.dims;
        let strides = self.output_shape.strides();
        let e_factors = self.e_factors();
        let b_dim = self.output_dim();
        let e_dim = self.env_dim();
        let mut m = CMat::zeros(b_dim, e_dim);
        for full in 0..self.output_shape.total() {
            let mut b_idx = 0usize;
            for &f in &self.b_factors {
                b_idx = b_idx * dims[f] + (full / strides[f]) % dims[f];
            }
            let mut e_idx = 0usize;
            for &f in &e_factors {
                e_idx = e_idx * dims[f] + (full / strides[f]) % dims[f];
            }
            m[(b_idx, e_idx)] = self.v[(full, col)];
        }
        m
    }
}

/// Identity channel on dimension `d`, as an isometry with a trivial
/// environment.
pub fn identity_isometry(d: usize) -> StinespringIsometry {
    StinespringIsometry::new(
        identity(d),
        SubsystemShape::new(vec![d, 1]),
        vec![0],
        vec![0.0; d],
    )
    .expect("identity is an isometry")
}

/// Choi matrix on `input ⊗ output`, normalized to unit trace (density-matrix
/// convention).
#[derive(Debug, Clone)]
pub struct ChoiMatrix {
    pub matrix: CMat,
    pub input_dim: usize,
    pub output_dim: usize,
}

impl ChoiMatrix {
    pub fn shape(&self) -> SubsystemShape {
        SubsystemShape::new(vec![self.input_dim, self.output_dim])
    }

    pub fn min_eigenvalue(&self) -> Result<f64> {
        Ok(hermitian_eigenvalues(&self.matrix)?
            .into_iter()
            .fold(f64::INFINITY, f64::min))
    }

    /// Residual of the trace-preservation condition
    /// `Tr_out(C) = I / input_dim`.
    pub fn trace_preservation_residual(&self) -> Result<f64> {
        let red = partial_trace(&self.matrix, &self.shape(), &[0])?;
        let expect = identity(self.input_dim).scale(1.0 / self.input_dim as f64);
        Ok(max_abs(&(red - expect)))
    }
}

/// `(id ⊗ channel)` applied to the maximally entangled state.
pub fn choi_of<F>(channel: F, input_dim: usize) -> Result<ChoiMatrix>
where
    F: Fn(&CMat) -> Result<CMat>,
{
    let mut output_dim = 0usize;
    let mut blocks: Vec<Vec<CMat>> = Vec::with_capacity(input_dim);
    for i in 0..input_dim {
        let mut row = Vec::with_capacity(input_dim);
        for j in 0..input_dim {
            let mut e = CMat::zeros(input_dim, input_dim);
            e[(i, j)] = cr(1.0);
            let out = channel(&e)?;
            output_dim = out.nrows();
            row.push(out);
        }
        blocks.push(row);
    }
    let dim = input_dim * output_dim;
    let mut c = CMat::zeros(dim, dim);
    for i in 0..input_dim {
        for j in 0..input_dim {
            for o in 0..output_dim {
                for p in 0..output_dim {
                    c[(i * output_dim + o, j * output_dim + p)] =
                        blocks[i][j][(o, p)] / cr(input_dim as f64);
                }
            }
        }
    }
    Ok(ChoiMatrix { matrix: c, input_dim, output_dim })
}

/// Kraus operators from a Choi matrix; eigenvalues below 1e-12 are dropped.
pub fn kraus_from_choi(choi: &ChoiMatrix) -> Result<Vec<CMat>> {
    let scaled = choi.matrix.scale(choi.input_dim as f64);
    let (vals, vecs) = crate::tensor::eig_hermitian(&scaled)?;
    let mut kraus = Vec::new();
    for (k, &l) in vals.iter().enumerate() {
        if l < 1e-12 {
            continue;
        }
        let mut op = CMat::zeros(choi.output_dim, choi.input_dim);
        for i in 0..choi.input_dim {
            for o in 0..choi.output_dim {
                op[(o, i)] = vecs[(i * choi.output_dim + o, k)] * cr(l.sqrt());
            }
        }
        kraus.push(op);
    }
    Ok(kraus)
}

/// Stinespring dilation `V|i⟩ = Σ_k (K_k|i⟩) ⊗ |k⟩_E` from Kraus operators.
pub fn stinespring_from_kraus(kraus: &[CMat]) -> Result<StinespringIsometry> {
    if kraus.is_empty() {
        return Err(Error::InvalidParameter("empty Kraus set".into()));
    }
    let out_dim = kraus[0].nrows();
    let in_dim = kraus[0].ncols();
    let rank = kraus.len();
    let mut v = CMat::zeros(out_dim * rank, in_dim);
    for (k, op) in kraus.iter().enumerate() {
        for i in 0..in_dim {
            for o in 0..out_dim {
                v[(o * rank + k, i)] = op[(o, i)];
            }
        }
    }
    StinespringIsometry::new(
        v,
        SubsystemShape::new(vec![out_dim, rank]),
        vec![0],
        vec![0.0; in_dim],
    )
}

/// su(2) generators in the spin-j representation of dimension `d = 2j+1`.
/// `J_z = diag(j, j-1, ..., -j)`.
#[derive(Debug, Clone)]
pub struct SpinGenerators {
    pub dim: usize,
    pub jx: CMat,
    pub jy: CMat,
    pub jz: CMat,
}

pub fn su2_generators(d: usize) -> Result<SpinGenerators> {
    if d == 0 {
        return Err(Error::InvalidParameter("su(2) representation dimension must be ≥ 1".into()));
    }
    let j = (d as f64 - 1.0) / 2.0;
    let mut jz = CMat::zeros(d, d);
    let mut jp = CMat::zeros(d, d);
    for k in 0..d {
        let m = j - k as f64;
        jz[(k, k)] = cr(m);
        if k > 0 {
            // J₊ |j, m⟩ = √(j(j+1) - m(m+1)) |j, m+1⟩
            jp[(k - 1, k)] = cr((j * (j + 1.0) - m * (m + 1.0)).sqrt());
        }
    }
    let jm = jp.adjoint();
    let jx = (&jp + &jm).scale(0.5);
    let jy = (&jp - &jm).map(|z| z * C64::new(0.0, -0.5));
    Ok(SpinGenerators { dim: d, jx, jy, jz })
}

/// Bloch coefficients `n_i = 2 Tr(ρ J_i^{(2)})`; for a pure dual-rail input
/// with amplitudes (a, b) this reduces to `n_x = āb + ab̄`,
/// `n_y = i(-āb + ab̄)`, `n_z = |a|² - |b|²`. The coefficients are kept
/// complex so the extension to arbitrary (non-Hermitian) operators stays
/// linear; for density matrices they are real.
pub fn bloch_coefficients(rho: &CMat) -> Result<[C64; 3]> {
    if rho.nrows() != 2 || rho.ncols() != 2 {
        return Err(Error::DimensionMismatch("bloch_coefficients needs a 2×2 matrix".into()));
    }
    let nx = rho[(0, 1)] + rho[(1, 0)];
    let ny = (rho[(0, 1)] - rho[(1, 0)]) * C64::new(0.0, 1.0);
    let nz = rho[(0, 0)] - rho[(1, 1)];
    Ok([nx, ny, nz])
}

/// Amplitude pair encoding a qubit on span{|01⟩, |10⟩}; the first amplitude
/// is the logical |0⟩.
#[derive(Debug, Clone, Copy)]
pub struct DualRailQubit {
    pub a: C64,
    pub b: C64,
}

impl DualRailQubit {
    pub fn new(a: C64, b: C64) -> Result<Self> {
        let norm = (a.norm_sqr() + b.norm_sqr()).sqrt();
        if (norm - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter(format!("dual-rail norm {norm} ≠ 1")));
        }
        Ok(Self { a, b })
    }

    pub fn normalized(a: C64, b: C64) -> Result<Self> {
        let norm = (a.norm_sqr() + b.norm_sqr()).sqrt();
        if norm < 1e-300 {
            return Err(Error::InvalidParameter("zero dual-rail amplitudes".into()));
        }
        Ok(Self { a: a / cr(norm), b: b / cr(norm) })
    }

    pub fn to_density(&self) -> CMat {
        let v = CVec::from_vec(vec![self.a, self.b]);
        &v * v.adjoint()
    }
}

fn affine_su2_output(dim: usize, trace_coef: C64, coeffs: [C64; 3]) -> Result<CMat> {
    let gens = su2_generators(dim)?;
    let mut out = identity(dim).map(|z| z * trace_coef);
    out += gens.jx.map(|z| z * coeffs[0]);
    out += gens.jy.map(|z| z * coeffs[1]);
    out += gens.jz.map(|z| z * coeffs[2]);
    Ok(out)
}

/// Optimal 1→ℓ cloning map
/// `Cl_ℓ(ρ) = 2/(ℓ(ℓ+1)) (ℓ/2 id_{ℓ+1} + Σ n_i J_i^{(ℓ+1)})`.
pub fn cloning_apply(ell: usize, rho: &CMat) -> Result<CMat> {
    if ell == 0 {
        return Err(Error::InvalidParameter("cloning channel needs ℓ ≥ 1".into()));
    }
    let n = bloch_coefficients(rho)?;
    let tr = rho.trace();
    let scale = cr(2.0 / (ell as f64 * (ell + 1) as f64));
    affine_su2_output(
        ell + 1,
        scale * cr(ell as f64 / 2.0) * tr,
        [scale * n[0], scale * n[1], scale * n[2]],
    )
}

/// Complementary cloning map on dimension ℓ with `m = (n_x, -n_y, n_z)`.
pub fn cloning_complement_apply(ell: usize, rho: &CMat) -> Result<CMat> {
    if ell == 0 {
        return Err(Error::InvalidParameter("cloning channel needs ℓ ≥ 1".into()));
    }
    let tr = rho.trace();
    if ell == 1 {
        return Ok(CMat::from_element(1, 1, tr));
    }
    let n = bloch_coefficients(rho)?;
    let scale = cr(2.0 / (ell as f64 * (ell + 1) as f64));
    affine_su2_output(
        ell,
        scale * cr((ell + 1) as f64 / 2.0) * tr,
        [scale * n[0], -scale * n[1], scale * n[2]],
    )
}

/// Qubit depolarizing channel `(1-q)ρ + q/2 id₂`, defined for 0 ≤ q ≤ 4/3.
pub fn depolarizing_apply(q: f64, rho: &CMat) -> Result<CMat> {
    if !(0.0..=4.0 / 3.0 + 1e-12).contains(&q) {
        return Err(Error::InvalidParameter(format!("q = {q} outside [0, 4/3]")));
    }
    if rho.nrows() != 2 || rho.ncols() != 2 {
        return Err(Error::DimensionMismatch("depolarizing channel acts on qubits".into()));
    }
    Ok(rho.scale(1.0 - q) + identity(2).map(|z| z * rho.trace()).scale(q / 2.0))
}

/// Block form of the depolarizing family,
/// `D_ℓ(ρ) = 2/(ℓ(ℓ+1)) (ℓ/2 id_{ℓ+1} + Σ k_i J_i^{(ℓ+1)})` with
/// `k_i = (1-q) n_i`. The sign of the k coefficients is fixed by the
/// matrix-exponential oracle of the absorbing isometry, which reproduces the
/// ordinary depolarizing channel at ℓ = 1.
pub fn block_depolarizing_apply(ell: usize, q: f64, rho: &CMat) -> Result<CMat> {
    if ell == 0 {
        return Err(Error::InvalidParameter("block depolarizing needs ℓ ≥ 1".into()));
    }
    let n = bloch_coefficients(rho)?;
    let tr = rho.trace();
    let scale = cr(2.0 / (ell as f64 * (ell + 1) as f64));
    let k = cr(1.0 - q);
    affine_su2_output(
        ell + 1,
        scale * cr(ell as f64 / 2.0) * tr,
        [scale * k * n[0], scale * k * n[1], scale * k * n[2]],
    )
}

/// Block weights `p_ℓ = ½(1-z)³ ℓ(ℓ+1) z^{ℓ-1}` for ℓ = 1..ℓ_max, plus the
/// analytic tail mass.
pub fn block_weights(z: f64, ell_max: usize) -> Result<(Vec<f64>, f64)> {
    if !(0.0..1.0).contains(&z) {
        return Err(Error::InvalidParameter(format!("z = {z} must lie in [0, 1)")));
    }
    let pref = 0.5 * (1.0 - z).powi(3);
    let weights: Vec<f64> = (1..=ell_max)
        .map(|l| pref * (l * (l + 1)) as f64 * z.powi(l as i32 - 1))
        .collect();
    // Σ_{ℓ≥m} ℓ(ℓ+1) z^{ℓ-1} in closed form, m = ell_max + 1
    let m = (ell_max + 1) as f64;
    let tail = if z == 0.0 {
        0.0
    } else {
        pref * (m * (m + 1.0) * z.powf(m - 1.0) / (1.0 - z)
            + 2.0 * (m + 1.0) * z.powf(m) / (1.0 - z).powi(2)
            + 2.0 * z.powf(m + 1.0) / (1.0 - z).powi(3))
    };
    Ok((weights, tail))
}

/// Linear qubit-input map stored by its action on the matrix units E_pq.
#[derive(Debug, Clone)]
pub struct QubitMap {
    pub on_basis: [CMat; 4],
}

impl QubitMap {
    pub fn output_dim(&self) -> usize {
        self.on_basis[0].nrows()
    }

    pub fn apply(&self, rho: &CMat) -> Result<CMat> {
        if rho.nrows() != 2 || rho.ncols() != 2 {
            return Err(Error::DimensionMismatch("QubitMap acts on 2×2 inputs".into()));
        }
        let mut out = CMat::zeros(self.output_dim(), self.output_dim());
        for p in 0..2 {
            for q in 0..2 {
                out += self.on_basis[p * 2 + q].map(|z| z * rho[(p, q)]);
            }
        }
        Ok(out)
    }

    pub fn choi(&self) -> Result<ChoiMatrix> {
        choi_of(|rho| self.apply(rho), 2)
    }
}

/// Direct-sum channel: ordered blocks (weight, conditional qubit map), the
/// matching environment-side maps, and the unaccounted tail mass.
#[derive(Debug, Clone)]
pub struct ChannelBlock {
    pub ell: usize,
    pub weight: f64,
    pub map: QubitMap,
    pub env_map: Option<QubitMap>,
}

#[derive(Debug, Clone)]
pub struct BlockChannel {
    pub blocks: Vec<ChannelBlock>,
    pub tail_mass: f64,
}

impl BlockChannel {
    pub fn block(&self, ell: usize) -> Option<&ChannelBlock> {
        self.blocks.iter().find(|b| b.ell == ell)
    }

    pub fn weights(&self) -> Vec<f64> {
        self.blocks.iter().map(|b| b.weight).collect()
    }
}

/// Two copies of a single-rail isometry carrying a dual-rail qubit.
///
/// Everything is derived from the partial products
/// `R_pq = Tr_E(ψ_p ψ_q†)` and `S_pq = Tr_B(ψ_p ψ_q†)` of the two relevant
/// isometry columns, so channel outputs never require forming the full
/// two-rail operator: `N(ρ) = Σ_pq ρ_pq R_pq ⊗ R_{p̄q̄}` and similarly for
/// the complement with S.
#[derive(Debug, Clone)]
pub struct TwoRailChannel {
    pub b_dim: usize,
    pub e_dim: usize,
    r: [CMat; 4],
    s: [CMat; 4],
    pub column_residuals: Vec<f64>,
}

impl TwoRailChannel {
    /// Build from the |0⟩ and |1⟩ columns of a single-mode isometry.
    pub fn from_isometry(iso: &StinespringIsometry) -> Result<Self> {
        if iso.input_dim < 2 {
            return Err(Error::DimensionMismatch(
                "dual-rail construction needs isometry columns for |0⟩ and |1⟩".into(),
            ));
        }
        let m0 = iso.column_as_output_env(0);
        let m1 = iso.column_as_output_env(1);
        let cols = [&m0, &m1];
        let r = std::array::from_fn(|k| {
            let (p, q) = (k / 2, k % 2);
            cols[p] * cols[q].adjoint()
        });
        let s = std::array::from_fn(|k| {
            let (p, q) = (k / 2, k % 2);
            cols[p].transpose() * cols[q].map(|z| z.conj())
        });
        Ok(Self {
            b_dim: iso.output_dim(),
            e_dim: iso.env_dim(),
            r,
            s,
            column_residuals: iso.column_residuals.clone(),
        })
    }

    pub fn max_total_occupation(&self) -> usize {
        2 * (self.b_dim - 1)
    }

    fn block_indices(dim: usize, ell: usize) -> Vec<usize> {
        let lo = ell.saturating_sub(dim - 1);
        let hi = ell.min(dim - 1);
        (lo..=hi).collect()
    }

    fn block_of(parts: &[CMat; 4], dim: usize, ell: usize, rho: &CMat) -> CMat {
        let idx = Self::block_indices(dim, ell);
        let n = idx.len();
        let mut out = CMat::zeros(n, n);
        for (ii, &i) in idx.iter().enumerate() {
            for (jj, &j) in idx.iter().enumerate() {
                let mut acc = C64::new(0.0, 0.0);
                for p in 0..2 {
                    for q in 0..2 {
                        acc += rho[(p, q)]
                            * parts[p * 2 + q][(i, j)]
                            * parts[(1 - p) * 2 + (1 - q)][(ell - i, ell - j)];
                    }
                }
                out[(ii, jj)] = acc;
            }
        }
        out
    }

    /// Unnormalized output block with total occupation `ell`.
    pub fn output_block(&self, ell: usize, rho: &CMat) -> CMat {
        Self::block_of(&self.r, self.b_dim, ell, rho)
    }

    /// Unnormalized environment block with total occupation `ell`.
    pub fn env_block(&self, ell: usize, rho: &CMat) -> CMat {
        Self::block_of(&self.s, self.e_dim, ell, rho)
    }

    pub fn output_blocks(&self, rho: &CMat, ell_max: usize) -> Vec<CMat> {
        (0..=ell_max.min(self.max_total_occupation()))
            .map(|l| self.output_block(l, rho))
            .collect()
    }

    pub fn env_blocks(&self, rho: &CMat, ell_max: usize) -> Vec<CMat> {
        (0..=ell_max.min(2 * (self.e_dim - 1)))
            .map(|l| self.env_block(l, rho))
            .collect()
    }

    /// Block masses for the maximally mixed input.
    pub fn weights(&self, ell_max: usize) -> Vec<f64> {
        let mixed = identity(2).scale(0.5);
        (0..=ell_max.min(self.max_total_occupation()))
            .map(|l| self.output_block(l, &mixed).trace().re)
            .collect()
    }

    /// Largest matrix element connecting different total-occupation sectors
    /// of the output. O(b_dim⁴); intended for moderate cutoffs.
    pub fn cross_block_coherence(&self, rho: &CMat) -> f64 {
        let d = self.b_dim;
        let mut worst = 0.0f64;
        for i1 in 0..d {
            for i2 in 0..d {
                for j1 in 0..d {
                    for j2 in 0..d {
                        if i1 + i2 == j1 + j2 {
                            continue;
                        }
                        let mut acc = C64::new(0.0, 0.0);
                        for p in 0..2 {
                            for q in 0..2 {
                                acc += rho[(p, q)]
                                    * self.r[p * 2 + q][(i1, j1)]
                                    * self.r[(1 - p) * 2 + (1 - q)][(i2, j2)];
                            }
                        }
                        worst = worst.max(acc.norm());
                    }
                }
            }
        }
        worst
    }

    /// Extract the direct-sum decomposition up to `ell_max`. Fails with a
    /// structure violation when cross-block coherences exceed `tol` or when
    /// block masses depend on the input beyond `tol`.
    pub fn to_block_channel(&self, ell_max: usize, tol: f64) -> Result<BlockChannel> {
        use rand::SeedableRng;
        let mixed = identity(2).scale(0.5);
        if self.b_dim <= 80 {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0x0b10c5);
            for probe in random_qubit_states(&mut rng, 3) {
                let coh = self.cross_block_coherence(&probe);
                if coh > tol {
                    return Err(Error::StructureViolation(format!(
                        "cross-block coherence {coh:.3e} exceeds {tol:.1e}"
                    )));
                }
            }
        }
        // input-independence of the block masses
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0x5eed);
        let probes = random_qubit_states(&mut rng, 10);
        let ell_cap = ell_max.min(self.max_total_occupation());
        let weights: Vec<f64> =
            (0..=ell_cap).map(|l| self.output_block(l, &mixed).trace().re).collect();
        for probe in &probes {
            for (l, &w) in weights.iter().enumerate() {
                let wp = self.output_block(l, probe).trace().re;
                if (wp - w).abs() > tol.max(1e-9) {
                    return Err(Error::StructureViolation(format!(
                        "block {l} mass varies with input by {:.3e}",
                        (wp - w).abs()
                    )));
                }
            }
        }

        let mut blocks = Vec::new();
        let mut mass = 0.0;
        for (l, &w) in weights.iter().enumerate() {
            mass += w;
            if w <= 1e-12 {
                continue;
            }
            let basis = |builder: &dyn Fn(&CMat) -> CMat| -> [CMat; 4] {
                std::array::from_fn(|k| {
                    let mut e = CMat::zeros(2, 2);
                    e[(k / 2, k % 2)] = cr(1.0);
                    builder(&e).scale(1.0 / w)
                })
            };
            let map = QubitMap { on_basis: basis(&|e| self.output_block(l, e)) };
            let env_map = if l >= 1 && self.e_dim > 1 {
                Some(QubitMap { on_basis: basis(&|e| self.env_block(l - 1, e)) })
            } else {
                None
            };
            blocks.push(ChannelBlock { ell: l, weight: w, map, env_map });
        }
        Ok(BlockChannel { blocks, tail_mass: (1.0 - mass).max(0.0) })
    }
}

/// Deterministic pseudo-random pure qubit density matrices.
pub fn random_qubit_states(rng: &mut impl rand::Rng, count: usize) -> Vec<CMat> {
    (0..count)
        .map(|_| {
            let mut sample = || C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            let (a, b) = (sample(), sample());
            let norm = (a.norm_sqr() + b.norm_sqr()).sqrt();
            let v = CVec::from_vec(vec![a / cr(norm), b / cr(norm)]);
            &v * v.adjoint()
        })
        .collect()
}

/// Orthogonal convex sum of channels: both the output and the environment
/// receive a classical flag, `V|ψ⟩ = Σ_x √p_x (V_x|ψ⟩) ⊗ |x⟩_B ⊗ |x⟩_E`.
/// Output factors are ordered `[B_max, flag_B, E_max, flag_E]`.
pub fn direct_sum_channel(
    channels: &[&StinespringIsometry],
    probs: &[f64],
) -> Result<StinespringIsometry> {
    if channels.is_empty() || channels.len() != probs.len() {
        return Err(Error::InvalidParameter("channels and probs must match and be nonempty".into()));
    }
    let input_dim = channels[0].input_dim;
    if channels.iter().any(|c| c.input_dim != input_dim) {
        return Err(Error::DimensionMismatch("direct sum needs equal input dimensions".into()));
    }
    let psum: f64 = probs.iter().sum();
    if (psum - 1.0).abs() > 1e-12 || probs.iter().any(|&p| p < 0.0) {
        return Err(Error::InvalidParameter("probabilities must be nonnegative and sum to 1".into()));
    }
    let x = channels.len();
    let b_max = channels.iter().map(|c| c.output_dim()).max().unwrap();
    let e_max = channels.iter().map(|c| c.env_dim()).max().unwrap();
    let total = b_max * x * e_max * x;
    let mut v = CMat::zeros(total, input_dim);
    for (xi, (ch, &p)) in channels.iter().zip(probs).enumerate() {
        let w = cr(p.sqrt());
        for i in 0..input_dim {
            let col = ch.column_as_output_env_of_input(i);
            for b in 0..ch.output_dim() {
                for e in 0..ch.env_dim() {
                    let row = ((b * x + xi) * e_max + e) * x + xi;
                    v[(row, i)] += w * col[(b, e)];
                }
            }
        }
    }
    StinespringIsometry::new(
        v,
        SubsystemShape::new(vec![b_max, x, e_max, x]),
        vec![0, 1],
        vec![0.0; input_dim],
    )
}

impl StinespringIsometry {
    /// `V|i⟩` reshaped to `output_dim × env_dim`.
    pub fn column_as_output_env_of_input(&self, i: usize) -> CMat {
        self.column_as_output_env(i)
    }
}

/// Treat a pure bipartite state as a channel with one-dimensional input:
/// the first factor is the output, the rest the environment.
pub fn isometry_from_pure_state(state: &crate::fock::PureStateVector) -> Result<StinespringIsometry> {
    let v = CMat::from_iterator(state.dim(), 1, state.amplitudes.iter().copied());
    StinespringIsometry::new(v, state.shape.clone(), vec![0], vec![state.truncation_residual])
}

/// Fit the depolarizing parameter of a qubit block map via
/// `q/2 = ⟨1|D(|0⟩⟨0|)|1⟩`, cross-validated on the |+⟩ input. Returns the
/// fitted q and the cross-validation residual.
pub fn fit_depolarizing_q(map: &QubitMap) -> Result<(f64, f64)> {
    let mut e00 = CMat::zeros(2, 2);
    e00[(0, 0)] = cr(1.0);
    let out = map.apply(&e00)?;
    if out.nrows() != 2 {
        return Err(Error::DimensionMismatch("depolarizing fit needs a 2×2 output".into()));
    }
    let q = 2.0 * out[(1, 1)].re;
    let plus = CMat::from_element(2, 2, cr(0.5));
    let residual = max_abs(&(map.apply(&plus)? - depolarizing_apply(q, &plus)?));
    Ok((q, residual))
}

/// Fit the block-depolarizing parameter of an ℓ-block map from the J_z
/// response to |0⟩⟨0|, with the residual taken against the closed form on
/// deterministic random inputs.
pub fn fit_block_depolarizing_q(ell: usize, map: &QubitMap) -> Result<(f64, f64)> {
    use rand::SeedableRng;
    let d = ell + 1;
    if map.output_dim() != d {
        return Err(Error::DimensionMismatch(format!(
            "block map output dim {} ≠ ℓ+1 = {d}",
            map.output_dim()
        )));
    }
    let gens = su2_generators(d)?;
    let mut e00 = CMat::zeros(2, 2);
    e00[(0, 0)] = cr(1.0);
    let out = map.apply(&e00)?;
    let j = (d as f64 - 1.0) / 2.0;
    let jz_sq_trace = j * (j + 1.0) * d as f64 / 3.0;
    let k = (&out * &gens.jz).trace().re * (ell * (ell + 1)) as f64 / 2.0 / jz_sq_trace;
    let q = 1.0 - k;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0xf17);
    let mut residual = 0.0f64;
    for probe in random_qubit_states(&mut rng, 10) {
        let diff = max_abs(&(map.apply(&probe)? - block_depolarizing_apply(ell, q, &probe)?));
        residual = residual.max(diff);
    }
    Ok((q, residual))
}

/// Stinespring dilation of the 1→ℓ cloning channel, obtained from its Choi
/// matrix. The environment basis is the Kraus index, which leaves all
/// entropic quantities of the complement unchanged.
pub fn cloner_isometry(ell: usize) -> Result<StinespringIsometry> {
    let choi = choi_of(|rho| cloning_apply(ell, rho), 2)?;
    let kraus = kraus_from_choi(&choi)?;
    stinespring_from_kraus(&kraus)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{unruh_isometry, FockCutoff, SqueezeParam};

    fn pure_input(a: C64, b: C64) -> CMat {
        DualRailQubit::normalized(a, b).unwrap().to_density()
    }

    #[test]
    fn su2_small_representations() {
        let g = su2_generators(2).unwrap();
        assert!((g.jz[(0, 0)].re - 0.5).abs() < 1e-15);
        assert!((g.jx[(0, 1)].re - 0.5).abs() < 1e-15);
        let g = su2_generators(3).unwrap();
        assert!((g.jz[(0, 0)].re - 1.0).abs() < 1e-15);
        assert!(g.jz[(1, 1)].norm() < 1e-15);
        assert!((g.jz[(2, 2)].re + 1.0).abs() < 1e-15);
        assert!(su2_generators(0).is_err());
    }

    #[test]
    fn su2_algebra_invariants() {
        for d in 2..=12 {
            let g = su2_generators(d).unwrap();
            let comm = &g.jx * &g.jy - &g.jy * &g.jx;
            let expect = g.jz.map(|z| z * C64::new(0.0, 1.0));
            assert!(max_abs(&(comm - expect)) < 1e-12, "commutator failed at d={d}");
            let j = (d as f64 - 1.0) / 2.0;
            let casimir = &g.jx * &g.jx + &g.jy * &g.jy + &g.jz * &g.jz;
            assert!(
                max_abs(&(casimir - identity(d).scale(j * (j + 1.0)))) < 1e-12,
                "casimir failed at d={d}"
            );
        }
    }

    #[test]
    fn bloch_coefficient_values() {
        let n = bloch_coefficients(&pure_input(cr(1.0), cr(0.0))).unwrap();
        assert!((n[2].re - 1.0).abs() < 1e-14 && n[0].norm() < 1e-14 && n[1].norm() < 1e-14);
        let n = bloch_coefficients(&pure_input(cr(1.0), cr(1.0))).unwrap();
        assert!((n[0].re - 1.0).abs() < 1e-14 && n[1].norm() < 1e-14 && n[2].norm() < 1e-14);
        let n = bloch_coefficients(&identity(2).scale(0.5)).unwrap();
        assert!(n.iter().all(|c| c.norm() < 1e-14));
    }

    #[test]
    fn cloning_small_cases() {
        let rho = pure_input(C64::new(0.3, 0.4), C64::new(-0.5, 0.2));
        let out = cloning_apply(1, &rho).unwrap();
        assert!(max_abs(&(out - &rho)) < 1e-14);

        let out = cloning_apply(2, &pure_input(cr(1.0), cr(0.0))).unwrap();
        let expect =
            CMat::from_diagonal(&CVec::from_vec(vec![cr(2.0 / 3.0), cr(1.0 / 3.0), cr(0.0)]));
        assert!(max_abs(&(out - expect)) < 1e-14);

        let out = cloning_apply(4, &identity(2).scale(0.5)).unwrap();
        assert!(max_abs(&(out - identity(5).scale(0.2))) < 1e-14);
        assert!(cloning_apply(0, &rho).is_err());
    }

    #[test]
    fn cloning_complement_small_cases() {
        let rho = pure_input(C64::new(0.3, 0.4), C64::new(-0.5, 0.2));
        let out = cloning_complement_apply(1, &rho).unwrap();
        assert!((out[(0, 0)].re - 1.0).abs() < 1e-14);

        let out = cloning_complement_apply(2, &pure_input(cr(1.0), cr(0.0))).unwrap();
        let expect = CMat::from_diagonal(&CVec::from_vec(vec![cr(2.0 / 3.0), cr(1.0 / 3.0)]));
        assert!(max_abs(&(out - expect)) < 1e-14);

        let out = cloning_complement_apply(3, &identity(2).scale(0.5)).unwrap();
        assert!(max_abs(&(out - identity(3).scale(1.0 / 3.0))) < 1e-14);
    }

    #[test]
    fn depolarizing_cases() {
        let rho = pure_input(C64::new(0.6, 0.0), C64::new(0.0, 0.8));
        assert!(max_abs(&(depolarizing_apply(0.0, &rho).unwrap() - &rho)) < 1e-15);
        assert!(
            max_abs(&(depolarizing_apply(1.0, &rho).unwrap() - identity(2).scale(0.5))) < 1e-15
        );
        let out = depolarizing_apply(2.0 / 3.0, &pure_input(cr(1.0), cr(0.0))).unwrap();
        assert!((out[(0, 0)].re - 2.0 / 3.0).abs() < 1e-14);
        assert!((out[(1, 1)].re - 1.0 / 3.0).abs() < 1e-14);
        assert!(depolarizing_apply(1.5, &rho).is_err());
    }

    #[test]
    fn block_depolarizing_cases() {
        let rho = pure_input(C64::new(0.3, 0.4), C64::new(-0.5, 0.2));
        let a = block_depolarizing_apply(1, 2.0 / 3.0, &rho).unwrap();
        let b = depolarizing_apply(2.0 / 3.0, &rho).unwrap();
        assert!(max_abs(&(a - b)) < 1e-12);

        let out = block_depolarizing_apply(3, 1.0, &rho).unwrap();
        assert!(max_abs(&(out - identity(4).scale(0.25))) < 1e-14);

        // ℓ=2, q=2/3, |0⟩⟨0|: (1/3)(I₃ + (1/3)J_z) = diag(4/9, 3/9, 2/9)
        let out = block_depolarizing_apply(2, 2.0 / 3.0, &pure_input(cr(1.0), cr(0.0))).unwrap();
        let expect = CMat::from_diagonal(&CVec::from_vec(vec![
            cr(4.0 / 9.0),
            cr(3.0 / 9.0),
            cr(2.0 / 9.0),
        ]));
        assert!(max_abs(&(out - expect)) < 1e-14);
    }

    #[test]
    fn block_weight_values() {
        let (w, tail) = block_weights(0.0, 4).unwrap();
        assert!((w[0] - 1.0).abs() < 1e-15 && w[1].abs() < 1e-15 && tail.abs() < 1e-15);
        let (w, _) = block_weights(0.5, 4).unwrap();
        assert!((w[0] - 0.125).abs() < 1e-15);
        let (w, tail) = block_weights(0.9, 400).unwrap();
        let total: f64 = w.iter().sum::<f64>() + tail;
        assert!((total - 1.0).abs() < 1e-10);
        assert!(tail < 1e-8);
        assert!(block_weights(1.0, 3).is_err());
    }

    #[test]
    fn choi_of_identity_and_depolarizing() {
        let c = choi_of(|rho| Ok(rho.clone()), 2).unwrap();
        // maximally entangled projector
        assert!((c.matrix[(0, 0)].re - 0.5).abs() < 1e-14);
        assert!((c.matrix[(0, 3)].re - 0.5).abs() < 1e-14);
        assert!(c.trace_preservation_residual().unwrap() < 1e-12);

        let c = choi_of(|rho| depolarizing_apply(1.0, rho), 2).unwrap();
        assert!(max_abs(&(c.matrix.clone() - identity(4).scale(0.25))) < 1e-14);
    }

    #[test]
    fn kraus_round_trip() {
        let choi = choi_of(|rho| depolarizing_apply(0.7, rho), 2).unwrap();
        let kraus = kraus_from_choi(&choi).unwrap();
        let rho = pure_input(C64::new(0.3, 0.4), C64::new(-0.5, 0.2));
        let mut out = CMat::zeros(2, 2);
        for k in &kraus {
            out += k * &rho * k.adjoint();
        }
        let expect = depolarizing_apply(0.7, &rho).unwrap();
        assert!(max_abs(&(out - expect)) < 1e-12);

        let iso = stinespring_from_kraus(&kraus).unwrap();
        let out = iso.apply(&rho).unwrap();
        let expect = depolarizing_apply(0.7, &rho).unwrap();
        assert!(max_abs(&(out - expect)) < 1e-12);
    }

    #[test]
    fn complement_involution() {
        let iso = cloner_isometry(2).unwrap();
        let rho = pure_input(C64::new(0.3, 0.4), C64::new(-0.5, 0.2));
        let direct = iso.apply(&rho).unwrap();
        let double = iso.swapped().swapped().apply(&rho).unwrap();
        assert!(max_abs(&(direct - double)) < 1e-14);
        // complement of the identity embedding is a constant pure state
        let id = identity_isometry(3);
        let comp = id.complement_apply(&identity(3).scale(1.0 / 3.0)).unwrap();
        assert!((comp[(0, 0)].re - 1.0).abs() < 1e-14);
    }

    #[test]
    fn unruh_two_rail_blocks_match_cloners() {
        let p = SqueezeParam::from_z(0.5).unwrap();
        let c = FockCutoff::new(40).unwrap();
        let iso = unruh_isometry(&p, &c).unwrap();
        let rail = TwoRailChannel::from_isometry(&iso).unwrap();
        let rho = pure_input(C64::new(0.6, 0.0), C64::new(0.0, 0.8));
        let (expect_w, _) = block_weights(0.5, 6).unwrap();
        let block = rail.to_block_channel(6, 1e-9).unwrap();
        for l in 1..=6usize {
            let b = block.block(l).unwrap();
            assert!((b.weight - expect_w[l - 1]).abs() < 1e-9, "weight mismatch at ℓ={l}");
            let got = b.map.apply(&rho).unwrap();
            let expect = cloning_apply(l, &rho).unwrap();
            assert!(max_abs(&(got - expect)) < 1e-9, "map mismatch at ℓ={l}");
            let got = b.env_map.as_ref().unwrap().apply(&rho).unwrap();
            let expect = cloning_complement_apply(l, &rho).unwrap();
            assert!(max_abs(&(got - expect)) < 1e-9, "env map mismatch at ℓ={l}");
        }
    }

    #[test]
    fn unruh_two_rail_zero_squeezing_is_identity() {
        let p = SqueezeParam::from_z(0.0).unwrap();
        let c = FockCutoff::new(4).unwrap();
        let iso = unruh_isometry(&p, &c).unwrap();
        let rail = TwoRailChannel::from_isometry(&iso).unwrap();
        let block = rail.to_block_channel(6, 1e-10).unwrap();
        assert_eq!(block.blocks.len(), 1);
        let b = &block.blocks[0];
        assert_eq!(b.ell, 1);
        assert!((b.weight - 1.0).abs() < 1e-12);
        let rho = pure_input(C64::new(0.3, 0.4), C64::new(-0.5, 0.2));
        assert!(max_abs(&(b.map.apply(&rho).unwrap() - &rho)) < 1e-12);
    }

    #[test]
    fn direct_sum_structure() {
        let id2 = identity_isometry(2);
        let ds = direct_sum_channel(&[&id2, &id2], &[0.5, 0.5]).unwrap();
        let rho = pure_input(C64::new(0.3, 0.4), C64::new(-0.5, 0.2));
        let out = ds.apply(&rho).unwrap();
        // (½,½) classical mixture of two copies in orthogonal flag sectors
        let shape = SubsystemShape::new(vec![2, 2]);
        let flag = partial_trace(&out, &shape, &[1]).unwrap();
        assert!(max_abs(&(flag - identity(2).scale(0.5))) < 1e-12);
        let payload = partial_trace(&out, &shape, &[0]).unwrap();
        assert!(max_abs(&(payload - &rho)) < 1e-12);

        // single channel with p=1 reduces to the original channel
        let ds = direct_sum_channel(&[&id2], &[1.0]).unwrap();
        let out = ds.apply(&rho).unwrap();
        assert!(max_abs(&(out - &rho)) < 1e-12);
    }
}
