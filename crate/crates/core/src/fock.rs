//! Truncated Fock-space states and isometries: the two-mode squeezer fed by
//! vacuum, the single-mode stimulated-emission isometry, the
//! beam-splitter-plus-squeezer absorbing isometry (closed form and a
//! matrix-exponential oracle), and the physical-parameter conversions that
//! map black-hole data onto the squeezing parameter z or the coupling g.

use crate::channels::StinespringIsometry;
use crate::error::{Error, Result};
use crate::tensor::{ci, cr, C64, CMat, CVec, SubsystemShape};

/// Squeezing parameter bundle. All channel math keys off `z = tanh²r`;
/// mode frequency and surface gravity are carried as optional metadata.
#[derive(Debug, Clone, Copy)]
pub struct SqueezeParam {
    pub r: f64,
    pub z: f64,
    pub omega: Option<f64>,
    pub kappa: Option<f64>,
    /// Recorded as `1 + β²` when built from a reflection coefficient.
    pub gamma_sq: Option<f64>,
}

impl SqueezeParam {
    pub fn from_r(r: f64) -> Result<Self> {
        if !(r >= 0.0) || !r.is_finite() {
            return Err(Error::InvalidParameter(format!("squeezing r = {r} must be ≥ 0")));
        }
        let t = r.tanh();
        Ok(Self { r, z: t * t, omega: None, kappa: None, gamma_sq: None })
    }

    pub fn from_z(z: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&z) {
            return Err(Error::InvalidParameter(format!("z = {z} must lie in [0, 1)")));
        }
        Ok(Self { r: z.sqrt().atanh(), z, omega: None, kappa: None, gamma_sq: None })
    }

    /// Mode frequency and surface gravity: `tanh r = exp(-πω/κ)`.
    pub fn from_mode(omega: f64, kappa: f64) -> Result<Self> {
        if omega <= 0.0 || kappa <= 0.0 {
            return Err(Error::InvalidParameter("omega and kappa must be positive".into()));
        }
        let t = (-std::f64::consts::PI * omega / kappa).exp();
        Ok(Self {
            r: t.atanh(),
            z: t * t,
            omega: Some(omega),
            kappa: Some(kappa),
            gamma_sq: None,
        })
    }

    pub fn tanh_r(&self) -> f64 {
        self.z.sqrt()
    }

    /// `cosh²r = 1/(1-z)`.
    pub fn cosh2_r(&self) -> f64 {
        1.0 / (1.0 - self.z)
    }
}

/// Perfectly reflecting horizon: `z = β²/(1+β²)`, recording `γ² = 1+β²`.
pub fn reflecting_params(beta: f64) -> Result<SqueezeParam> {
    if !(beta >= 0.0) || !beta.is_finite() {
        return Err(Error::InvalidParameter(format!("beta = {beta} must be ≥ 0")));
    }
    let z = beta * beta / (1.0 + beta * beta);
    let mut p = SqueezeParam::from_z(z)?;
    p.gamma_sq = Some(1.0 + beta * beta);
    Ok(p)
}

/// Grey-body conversion `α² = Γ/(1 - e^{-ω/T})`, returning `α ≥ 0`.
pub fn greybody_alpha(gamma: f64, omega: f64, temperature: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&gamma) && gamma != 0.0 {
        return Err(Error::InvalidParameter(format!("Γ = {gamma} must lie in [0, 1)")));
    }
    if omega <= 0.0 || temperature <= 0.0 {
        return Err(Error::InvalidParameter("omega and T must be positive".into()));
    }
    let alpha_sq = gamma / (1.0 - (-omega / temperature).exp());
    Ok(alpha_sq.sqrt())
}

/// Absorbing-horizon coupling with the derived expansion coefficients
/// `A = 2g/(2+g²)` and `B = -g²/(2+g²)`.
#[derive(Debug, Clone, Copy)]
pub struct AbsorbParam {
    pub g: f64,
    pub a_coef: f64,
    pub b_coef: f64,
}

impl AbsorbParam {
    pub fn new(g: f64) -> Result<Self> {
        if !(g > 0.0) || !g.is_finite() {
            return Err(Error::InvalidParameter(format!("coupling g = {g} must be > 0")));
        }
        let denom = 2.0 + g * g;
        Ok(Self { g, a_coef: 2.0 * g / denom, b_coef: -g * g / denom })
    }
}

/// Per-mode occupation cutoff, inclusive.
#[derive(Debug, Clone, Copy)]
pub struct FockCutoff {
    pub n_max: usize,
}

impl FockCutoff {
    pub fn new(n_max: usize) -> Result<Self> {
        if n_max < 1 {
            return Err(Error::InvalidParameter("n_max must be ≥ 1".into()));
        }
        Ok(Self { n_max })
    }

    pub fn dim(&self) -> usize {
        self.n_max + 1
    }

    /// Amplitudes decay geometrically in z, so `n_max ≥ ⌈log tol / log z⌉`
    /// caps the truncation residual at `tol`.
    pub fn for_tolerance(z: f64, tol: f64) -> Self {
        let n_max = if z <= 0.0 {
            1
        } else {
            (tol.ln() / z.ln()).ceil().max(1.0) as usize
        };
        Self { n_max: n_max.clamp(1, 2000) }
    }
}

/// Normalized state vector on a truncated multimode Fock space. The raw
/// truncation deficit `1 - Σ|amp|²` is kept as convergence metadata.
#[derive(Debug, Clone)]
pub struct PureStateVector {
    pub amplitudes: CVec,
    pub shape: SubsystemShape,
    pub truncation_residual: f64,
}

impl PureStateVector {
    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }
}

/// Two-mode squeezed vacuum on `B ⊗ E`, amplitude `tanhⁿr / cosh r` on
/// `|n⟩_B|n⟩_E`.
pub fn squeezer_vacuum_state(p: &SqueezeParam, c: &FockCutoff) -> Result<PureStateVector> {
    let d = c.dim();
    let mut amps = CVec::zeros(d * d);
    let mut norm_sq = 0.0;
    for n in 0..d {
        // |amp|² = (1-z) zⁿ
        let a2 = (1.0 - p.z) * p.z.powi(n as i32);
        amps[n * d + n] = cr(a2.sqrt());
        norm_sq += a2;
    }
    let residual = (1.0 - norm_sq).max(0.0);
    let amps = amps.scale(1.0 / norm_sq.sqrt());
    Ok(PureStateVector {
        amplitudes: amps,
        shape: SubsystemShape::new(vec![d, d]),
        truncation_residual: residual,
    })
}

/// Single-mode stimulated-emission isometry `A → B ⊗ E`. Column `n` carries
/// amplitude `√binom(n+m, n) tanhᵐr / cosh^{1+n}r` on `|n+m⟩_B|m⟩_E`.
/// Columns are renormalized; raw per-column deficits are recorded.
pub fn unruh_isometry(p: &SqueezeParam, c: &FockCutoff) -> Result<StinespringIsometry> {
    let d = c.dim();
    let mut v = CMat::zeros(d * d, d);
    let mut residuals = Vec::with_capacity(d);
    for n in 0..d {
        // |amp(m)|² follows the recurrence amp²(m+1)/amp²(m) = z(n+m+1)/(m+1)
        let mut a2 = (1.0 - p.z).powi(n as i32 + 1);
        let mut norm_sq = 0.0;
        for m in 0..=(c.n_max - n) {
            v[((n + m) * d + m, n)] = cr(a2.sqrt());
            norm_sq += a2;
            a2 *= p.z * (n + m + 1) as f64 / (m + 1) as f64;
        }
        residuals.push((1.0 - norm_sq).max(0.0));
        let col = v.column(n) / cr(norm_sq.sqrt());
        v.set_column(n, &col);
    }
    StinespringIsometry::new(v, SubsystemShape::new(vec![d, d]), vec![0], residuals)
}

fn mode_index(d: usize, na: usize, nb: usize, nc: usize) -> usize {
    (na * d + nb) * d + nc
}

/// Nonzero entries `(row, col, value)` of the beam-splitter-plus-squeezer
/// Hamiltonian `H = i g (a†b† - ab + a†c - a c†)` on the truncated 3-mode
/// `a,b,c` space; ≤ 4 entries per column.
pub fn sorkin_hamiltonian_triplets(g: &AbsorbParam, c: &FockCutoff) -> Vec<(usize, usize, C64)> {
    let d = c.dim();
    let ig = ci(g.g);
    let mut entries = Vec::new();
    for na in 0..d {
        for nb in 0..d {
            for nc in 0..d {
                let col = mode_index(d, na, nb, nc);
                // a†b† |na, nb, nc>
                if na + 1 < d && nb + 1 < d {
                    let amp = (((na + 1) * (nb + 1)) as f64).sqrt();
                    entries.push((mode_index(d, na + 1, nb + 1, nc), col, ig * cr(amp)));
                }
                // -ab
                if na >= 1 && nb >= 1 {
                    let amp = ((na * nb) as f64).sqrt();
                    entries.push((mode_index(d, na - 1, nb - 1, nc), col, -ig * cr(amp)));
                }
                // a†c
                if na + 1 < d && nc >= 1 {
                    let amp = (((na + 1) * nc) as f64).sqrt();
                    entries.push((mode_index(d, na + 1, nb, nc - 1), col, ig * cr(amp)));
                }
                // -a c†
                if na >= 1 && nc + 1 < d {
                    let amp = ((na * (nc + 1)) as f64).sqrt();
                    entries.push((mode_index(d, na - 1, nb, nc + 1), col, -ig * cr(amp)));
                }
            }
        }
    }
    entries
}

/// Dense form of the truncated 3-mode Hamiltonian.
pub fn sorkin_hamiltonian(g: &AbsorbParam, c: &FockCutoff) -> CMat {
    let d = c.dim();
    let dim = d * d * d;
    let mut h = CMat::zeros(dim, dim);
    for (row, col, val) in sorkin_hamiltonian_triplets(g, c) {
        h[(row, col)] += val;
    }
    h
}

/// `exp(scale·H)|v⟩` for a sparse-triplet operator, by sub-stepped Taylor
/// summation.
pub fn matrix_exp_apply_triplets(
    dim: usize,
    entries: &[(usize, usize, C64)],
    v: &CVec,
    scale: C64,
) -> CVec {
    let mut col_sums = vec![0.0f64; dim];
    for &(_, col, val) in entries {
        col_sums[col] += val.norm();
    }
    let norm1 = col_sums.into_iter().fold(0.0, f64::max) * scale.norm();
    let steps = norm1.ceil().max(1.0) as usize;
    let step_scale = scale / cr(steps as f64);
    let mut state = v.clone();
    for _ in 0..steps {
        let mut term = state.clone();
        let mut acc = state.clone();
        let mut k = 1usize;
        loop {
            let mut next = CVec::zeros(dim);
            for &(row, col, val) in entries {
                next[row] += val * term[col];
            }
            term = next.map(|z| z * step_scale / cr(k as f64));
            acc += &term;
            if term.norm() < 1e-16 * acc.norm().max(1.0) || k > 60 {
                break;
            }
            k += 1;
        }
        state = acc;
    }
    state
}

/// `exp(scale·H)|v⟩` by sub-stepped Taylor summation; avoids forming the
/// dense exponential of the 3-mode Hamiltonian.
pub fn matrix_exp_apply(h: &CMat, v: &CVec, scale: C64) -> CVec {
    let norm1 = (0..h.ncols())
        .map(|j| h.column(j).iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
        * scale.norm();
    let steps = norm1.ceil().max(1.0) as usize;
    let step_scale = scale / cr(steps as f64);
    let mut state = v.clone();
    for _ in 0..steps {
        let mut term = state.clone();
        let mut acc = state.clone();
        let mut k = 1usize;
        loop {
            term = (h * &term).map(|z| z * step_scale / cr(k as f64));
            acc += &term;
            if term.norm() < 1e-16 * acc.norm().max(1.0) || k > 60 {
                break;
            }
            k += 1;
        }
        state = acc;
    }
    state
}

/// Closed-form absorbing isometry restricted to late-time occupation 0 or 1.
/// Input basis `{|0⟩_c, |1⟩_c}` with the `a` and `b` modes in vacuum; output
/// factors ordered `a ⊗ b ⊗ c` with the `a` mode as the channel output.
/// Out-of-range binomials are zero; columns are renormalized with the raw
/// deficit recorded.
pub fn absorb_isometry_closed_form(
    g: &AbsorbParam,
    c: &FockCutoff,
) -> Result<StinespringIsometry> {
    let d = c.dim();
    let dim = d * d * d;
    let mut v = CMat::zeros(dim, 2);
    let (a, b) = (g.a_coef, g.b_coef);
    let pref0 = 2.0 / (2.0 + g.g * g.g);

    // V|000⟩ = pref0 Σ_{n,k≤n} A^{n-k} B^k √binom(n,k) |n-k, n, k⟩
    for n in 0..d {
        let mut binom = 1.0f64; // binom(n, k), updated over k
        for k in 0..=n {
            let amp = pref0 * a.powi((n - k) as i32) * b.powi(k as i32) * binom.sqrt();
            if k < d {
                v[(mode_index(d, n - k, n, k), 0)] += cr(amp);
            }
            binom *= (n - k) as f64 / (k + 1) as f64;
        }
    }

    // V|001⟩ = pref0² Σ_{n,k} A^{n-k} B^k √binom(n,k)
    //          (√(k+1)|n-k, n, k+1⟩ + g √(n-k+1)|n-k+1, n, k⟩)
    let pref1 = pref0 * pref0;
    for n in 0..d {
        let mut binom = 1.0f64;
        for k in 0..=n {
            let base = pref1 * a.powi((n - k) as i32) * b.powi(k as i32) * binom.sqrt();
            if k + 1 < d {
                v[(mode_index(d, n - k, n, k + 1), 1)] += cr(base * ((k + 1) as f64).sqrt());
            }
            if n - k + 1 < d {
                v[(mode_index(d, n - k + 1, n, k), 1)] +=
                    cr(base * g.g * ((n - k + 1) as f64).sqrt());
            }
            binom *= (n - k) as f64 / (k + 1) as f64;
        }
    }

    let mut residuals = Vec::with_capacity(2);
    for j in 0..2 {
        let norm_sq: f64 = v.column(j).iter().map(|z| z.norm_sqr()).sum();
        residuals.push((1.0 - norm_sq).max(0.0));
        let col = v.column(j) / cr(norm_sq.sqrt());
        v.set_column(j, &col);
    }
    StinespringIsometry::new(v, SubsystemShape::new(vec![d, d, d]), vec![0], residuals)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::{hermiticity_residual, identity, matrix_exp, max_abs};

    #[test]
    fn squeeze_param_relations() {
        let p = SqueezeParam::from_r(0.7).unwrap();
        assert!((p.z - 0.7f64.tanh().powi(2)).abs() < 1e-14);
        let q = SqueezeParam::from_mode(1.0, 2.0).unwrap();
        assert!((q.tanh_r() - (-std::f64::consts::PI / 2.0).exp()).abs() < 1e-12);
        assert!(SqueezeParam::from_z(1.0).is_err());
    }

    #[test]
    fn reflecting_param_values() {
        assert!(reflecting_params(0.0).unwrap().z.abs() < 1e-15);
        let p = reflecting_params(1.0).unwrap();
        assert!((p.z - 0.5).abs() < 1e-14);
        assert!((p.gamma_sq.unwrap() - 2.0).abs() < 1e-14);
        assert!(reflecting_params(1e4).unwrap().z > 1.0 - 1e-7);
    }

    #[test]
    fn greybody_values() {
        // ω/T large: Boltzmann factor vanishes, α² → Γ
        let a = greybody_alpha(0.3, 100.0, 1.0).unwrap();
        assert!((a * a - 0.3).abs() < 1e-12);
        assert!(greybody_alpha(0.0, 1.0, 1.0).unwrap().abs() < 1e-15);
        let a = greybody_alpha(0.5, 1.0, 1.0).unwrap();
        assert!((a * a - 0.5 / (1.0 - (-1.0f64).exp())).abs() < 1e-12);
    }

    #[test]
    fn squeezer_state_amplitudes() {
        let p = SqueezeParam::from_r(0.0).unwrap();
        let c = FockCutoff::new(5).unwrap();
        let s = squeezer_vacuum_state(&p, &c).unwrap();
        assert!((s.amplitudes[0].re - 1.0).abs() < 1e-14);
        assert!(s.truncation_residual < 1e-15);

        let p = SqueezeParam::from_z(0.25).unwrap();
        let c = FockCutoff::new(40).unwrap();
        let s = squeezer_vacuum_state(&p, &c).unwrap();
        let d = c.dim();
        for n in 0..10 {
            let expect = ((1.0 - 0.25) * 0.25f64.powi(n as i32)).sqrt();
            assert!((s.amplitudes[n * d + n].re - expect).abs() < 1e-14);
        }
        assert!(s.truncation_residual <= 0.25f64.powi(41) + 1e-30);
    }

    #[test]
    fn unruh_isometry_at_zero_squeezing() {
        let p = SqueezeParam::from_r(0.0).unwrap();
        let c = FockCutoff::new(4).unwrap();
        let iso = unruh_isometry(&p, &c).unwrap();
        let d = c.dim();
        for n in 0..d {
            // V|n⟩ = |n⟩_B |0⟩_E
            assert!((iso.matrix()[(n * d, n)].re - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn unruh_isometry_amplitude_formula() {
        let p = SqueezeParam::from_z(0.5).unwrap();
        let c = FockCutoff::new(60).unwrap();
        let iso = unruh_isometry(&p, &c).unwrap();
        let d = c.dim();
        // n=1, m=2: √binom(3,1) tanh²r / cosh²r, cosh²r = 1/(1-z) = 2
        let expect = 3f64.sqrt() * 0.5 / 2.0;
        let got = iso.matrix()[(3 * d + 2, 1)].re;
        assert!((got - expect).abs() < 1e-9, "{got} vs {expect}");
        // n=0 column reproduces the squeezer vacuum state
        let sv = squeezer_vacuum_state(&p, &c).unwrap();
        let diff: f64 = (0..d * d)
            .map(|i| (iso.matrix()[(i, 0)] - sv.amplitudes[i]).norm())
            .fold(0.0, f64::max);
        assert!(diff < 1e-12);
    }

    #[test]
    fn sorkin_hamiltonian_elements() {
        let g = AbsorbParam::new(0.3).unwrap();
        let c = FockCutoff::new(3).unwrap();
        let h = sorkin_hamiltonian(&g, &c);
        assert!(hermiticity_residual(&h) < 1e-12);
        let d = c.dim();
        // ⟨110|H|000⟩ = i g
        let e = h[(mode_index(d, 1, 1, 0), mode_index(d, 0, 0, 0))];
        assert!((e - ci(0.3)).norm() < 1e-14);
        // ⟨100|H|001⟩ = i g
        let e = h[(mode_index(d, 1, 0, 0), mode_index(d, 0, 0, 1))];
        assert!((e - ci(0.3)).norm() < 1e-14);
    }

    #[test]
    fn sorkin_exponential_is_unitary() {
        let g = AbsorbParam::new(0.5).unwrap();
        let c = FockCutoff::new(3).unwrap();
        let h = sorkin_hamiltonian(&g, &c);
        let v = matrix_exp(&h.map(|z| z * ci(-1.0))).unwrap();
        let dim = v.nrows();
        assert!(max_abs(&(&v * v.adjoint() - identity(dim))) < 1e-9);
    }

    #[test]
    fn exp_apply_matches_dense_exp() {
        let g = AbsorbParam::new(0.5).unwrap();
        let c = FockCutoff::new(3).unwrap();
        let h = sorkin_hamiltonian(&g, &c);
        let v = matrix_exp(&h.map(|z| z * ci(-1.0))).unwrap();
        let mut e0 = CVec::zeros(h.nrows());
        e0[0] = cr(1.0);
        let fast = matrix_exp_apply(&h, &e0, ci(-1.0));
        let slow = &v * &e0;
        assert!((fast - slow).norm() < 1e-10);
    }

    #[test]
    fn absorbing_closed_form_basics() {
        // g → 0: V|001⟩ → |001⟩
        let g = AbsorbParam::new(1e-8).unwrap();
        let c = FockCutoff::new(4).unwrap();
        let iso = absorb_isometry_closed_form(&g, &c).unwrap();
        let d = c.dim();
        assert!((iso.matrix()[(mode_index(d, 0, 0, 1), 1)].re - 1.0).abs() < 1e-7);
        // n=0,k=0 amplitude of V|000⟩ is 2/(2+g²)
        let g = AbsorbParam::new(0.5).unwrap();
        let iso = absorb_isometry_closed_form(&g, &c).unwrap();
        let raw = 2.0 / (2.0 + 0.25);
        let norm = (1.0 - iso.column_residuals[0]).sqrt();
        assert!((iso.matrix()[(0, 0)].re - raw / norm).abs() < 1e-12);
    }

    #[test]
    fn absorbing_closed_form_matches_exponential_oracle() {
        let g = AbsorbParam::new(0.5).unwrap();
        let c = FockCutoff::new(8).unwrap();
        let iso = absorb_isometry_closed_form(&g, &c).unwrap();
        let h = sorkin_hamiltonian(&g, &c);
        let d = c.dim();
        let dim = d * d * d;
        for (col, input) in [(0usize, 0usize), (1, 1)] {
            let mut e = CVec::zeros(dim);
            e[input] = cr(1.0);
            let oracle = matrix_exp_apply(&h, &e, ci(-1.0));
            let mut dev = 0.0f64;
            for na in 0..d {
                for nb in 0..d {
                    for nc in 0..d {
                        if na + nb + nc <= 4 {
                            let i = mode_index(d, na, nb, nc);
                            dev = dev.max((iso.matrix()[(i, col)] - oracle[i]).norm());
                        }
                    }
                }
            }
            // truncation-limited at n_max = 8; the verification suite runs
            // the 1e-6 comparison at n_max = 12
            assert!(dev < 5e-6, "column {col}: deviation {dev:.3e}");
        }
    }
}
