//! Entropic quantities: coherent information, its deterministic optimization
//! over the Bloch ball, closed-form capacities, the Unruh capacity series,
//! PPT and symmetric-channel tests, the direct-sum capacity lemma, and clone
//! fidelities.

use crate::channels::{
    cloning_apply, cloning_complement_apply, direct_sum_channel, ChoiMatrix, DualRailQubit,
    QubitMap, StinespringIsometry, TwoRailChannel,
};
use crate::error::{Error, Result};
use crate::par;
use crate::tensor::{
    cr, entropy_of_eigenvalues, hermitian_eigenvalues, max_abs, partial_trace, partial_transpose,
    CMat, CVec, DensityMatrix, SubsystemShape,
};

/// A channel together with its complement, reduced to the output/environment
/// eigenvalue lists needed by entropic quantities. Blockwise channels return
/// the concatenated (unnormalized) block spectra.
pub struct ChannelPair<'a> {
    pub input_dim: usize,
    output_spectra: Box<dyn Fn(&CMat) -> Result<Vec<f64>> + Sync + 'a>,
    env_spectra: Box<dyn Fn(&CMat) -> Result<Vec<f64>> + Sync + 'a>,
}

impl<'a> ChannelPair<'a> {
    pub fn from_isometry(iso: &'a StinespringIsometry) -> Self {
        Self {
            input_dim: iso.input_dim,
            output_spectra: Box::new(move |rho| hermitian_eigenvalues(&iso.apply(rho)?)),
            env_spectra: Box::new(move |rho| hermitian_eigenvalues(&iso.complement_apply(rho)?)),
        }
    }

    pub fn from_two_rail(rail: &'a TwoRailChannel) -> Self {
        Self::from_two_rail_capped(rail, usize::MAX)
    }

    /// As [`Self::from_two_rail`] but ignoring output blocks above `ell_cap`
    /// (environment blocks above `ell_cap - 1`, keeping the B/E pairing).
    pub fn from_two_rail_capped(rail: &'a TwoRailChannel, ell_cap: usize) -> Self {
        let out_max = rail.max_total_occupation().min(ell_cap);
        let env_max = (2 * (rail.e_dim.max(1) - 1)).min(ell_cap.saturating_sub(1));
        Self {
            input_dim: 2,
            output_spectra: Box::new(move |rho| block_spectra(rail.output_blocks(rho, out_max))),
            env_spectra: Box::new(move |rho| block_spectra(rail.env_blocks(rho, env_max))),
        }
    }

    pub fn from_cloner(ell: usize) -> Self {
        Self {
            input_dim: 2,
            output_spectra: Box::new(move |rho| hermitian_eigenvalues(&cloning_apply(ell, rho)?)),
            env_spectra: Box::new(move |rho| {
                hermitian_eigenvalues(&cloning_complement_apply(ell, rho)?)
            }),
        }
    }

    /// The complementary cloner Ĉl_ℓ taken as the channel itself.
    pub fn from_cloner_complement(ell: usize) -> Self {
        Self {
            input_dim: 2,
            output_spectra: Box::new(move |rho| {
                hermitian_eigenvalues(&cloning_complement_apply(ell, rho)?)
            }),
            env_spectra: Box::new(move |rho| hermitian_eigenvalues(&cloning_apply(ell, rho)?)),
        }
    }

    /// A single extracted block with its environment-side map. A missing
    /// environment (trivial E) contributes zero entropy.
    pub fn from_block_maps(map: &'a QubitMap, env_map: Option<&'a QubitMap>) -> Self {
        Self {
            input_dim: 2,
            output_spectra: Box::new(move |rho| hermitian_eigenvalues(&map.apply(rho)?)),
            env_spectra: Box::new(move |rho| match env_map {
                Some(e) => hermitian_eigenvalues(&e.apply(rho)?),
                None => Ok(vec![rho.trace().re]),
            }),
        }
    }
}

fn block_spectra(blocks: Vec<CMat>) -> Result<Vec<f64>> {
    let mut all = Vec::new();
    for b in &blocks {
        if b.nrows() == 0 || b.trace().norm() < 1e-15 {
            continue;
        }
        all.extend(hermitian_eigenvalues(b)?);
    }
    Ok(all)
}

/// `I_c(ρ) = H(N(ρ)) − H(N̂(ρ))` in bits.
pub fn coherent_information(pair: &ChannelPair, rho: &CMat) -> Result<f64> {
    let hb = entropy_of_eigenvalues(&(pair.output_spectra)(rho)?);
    let he = entropy_of_eigenvalues(&(pair.env_spectra)(rho)?);
    Ok(hb - he)
}

/// Optimization outcome with convergence metadata.
#[derive(Debug, Clone)]
pub struct CapacityResult {
    pub value: f64,
    pub optimizer_input: DensityMatrix,
    pub iterations: usize,
    /// Final refinement step size; an iteration-cap hit is reported here
    /// rather than as an error.
    pub residual: f64,
    pub cutoffs: (usize, usize),
    pub tail_bound: f64,
}

impl CapacityResult {
    pub fn optimizer_bloch_radius(&self) -> f64 {
        let m = self.optimizer_input.matrix();
        match crate::channels::bloch_coefficients(m) {
            Ok(n) => (n[0].re.powi(2) + n[1].re.powi(2) + n[2].re.powi(2)).sqrt(),
            Err(_) => 0.0,
        }
    }
}

fn bloch_density(n: [f64; 3]) -> CMat {
    DensityMatrix::from_bloch(n).expect("point inside Bloch ball").into_matrix()
}

/// Deterministic Bloch-ball grid: Fibonacci-lattice sphere directions times
/// 8 radii, plus the center.
pub fn bloch_grid() -> Vec<[f64; 3]> {
    let directions = 72usize;
    let golden = (1.0 + 5.0f64.sqrt()) / 2.0;
    let mut pts = vec![[0.0, 0.0, 0.0]];
    for k in 0..directions {
        let cos_t = 1.0 - 2.0 * (k as f64 + 0.5) / directions as f64;
        let sin_t = (1.0 - cos_t * cos_t).sqrt();
        let phi = 2.0 * std::f64::consts::PI * (k as f64 / golden).fract();
        let dir = [sin_t * phi.cos(), sin_t * phi.sin(), cos_t];
        for ri in 1..=8 {
            let r = ri as f64 / 8.0 * 0.995;
            pts.push([r * dir[0], r * dir[1], r * dir[2]]);
        }
    }
    pts
}

fn clamp_to_ball(n: [f64; 3]) -> [f64; 3] {
    let r = (n[0] * n[0] + n[1] * n[1] + n[2] * n[2]).sqrt();
    let cap = 1.0 - 1e-12;
    if r <= cap {
        n
    } else {
        [n[0] * cap / r, n[1] * cap / r, n[2] * cap / r]
    }
}

/// Maximize the coherent information over the Bloch ball: a deterministic
/// coarse grid (577 points) followed by coordinate descent. The reduction
/// order over grid points is fixed, so the result does not depend on whether
/// the grid is evaluated in parallel.
pub fn optimize_coherent_information(pair: &ChannelPair, tol: f64) -> Result<CapacityResult> {
    if pair.input_dim != 2 {
        return Err(Error::DimensionMismatch(
            "coherent-information optimization expects a qubit-input channel".into(),
        ));
    }
    let grid = bloch_grid();
    let values = par::map_ordered(grid.clone(), |n| coherent_information(pair, &bloch_density(n)));
    let mut best = f64::NEG_INFINITY;
    let mut best_n = [0.0; 3];
    for (n, v) in grid.iter().zip(values) {
        let v = v?;
        if v > best {
            best = v;
            best_n = *n;
        }
    }

    let mut step = 0.125;
    let mut iterations = 0usize;
    let step_floor = tol.max(1e-12);
    let cap = 600usize;
    while step > step_floor && iterations < cap {
        iterations += 1;
        let mut improved = false;
        for axis in 0..3 {
            for sign in [-1.0, 1.0] {
                let mut cand = best_n;
                cand[axis] += sign * step;
                let cand = clamp_to_ball(cand);
                let v = coherent_information(pair, &bloch_density(cand))?;
                if v > best + 1e-15 {
                    best = v;
                    best_n = cand;
                    improved = true;
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    Ok(CapacityResult {
        value: best,
        optimizer_input: DensityMatrix::from_bloch(best_n)?,
        iterations,
        residual: step,
        cutoffs: (0, 0),
        tail_bound: 0.0,
    })
}

/// `Q(Cl_ℓ) = log₂((ℓ+1)/ℓ)`.
pub fn capacity_cloner(ell: usize) -> Result<f64> {
    if ell == 0 {
        return Err(Error::InvalidParameter("cloner capacity needs ℓ ≥ 1".into()));
    }
    Ok(((ell + 1) as f64 / ell as f64).log2())
}

/// Truncated capacity series with its analytic tail bound.
#[derive(Debug, Clone)]
pub struct SeriesCapacity {
    pub value: f64,
    pub terms: usize,
    pub tail_bound: f64,
}

/// `Q(z) = ½(1−z)³ Σ_ℓ ℓ(ℓ+1) z^{ℓ−1} log₂((ℓ+1)/ℓ)`, truncated once the
/// tail bound from `log₂((ℓ+1)/ℓ) ≤ 1/(ℓ ln 2)` drops below `tol`.
pub fn unruh_capacity(z: f64, tol: f64) -> Result<SeriesCapacity> {
    if !(0.0..1.0).contains(&z) {
        return Err(Error::InvalidParameter(format!("z = {z} must lie in [0, 1)")));
    }
    if tol <= 0.0 {
        return Err(Error::InvalidParameter("tolerance must be positive".into()));
    }
    if z == 0.0 {
        return Ok(SeriesCapacity { value: 1.0, terms: 1, tail_bound: 0.0 });
    }
    let pref = 0.5 * (1.0 - z).powi(3);
    let ln2 = std::f64::consts::LN_2;
    let mut value = 0.0;
    let mut zpow = 1.0; // z^{ℓ-1}
    for ell in 1..=1_000_000usize {
        let l = ell as f64;
        value += pref * l * (l + 1.0) * zpow * ((l + 1.0) / l).log2();
        zpow *= z;
        // Σ_{ℓ≥m} (ℓ+1) z^{ℓ-1} = (m+1) z^{m-1}/(1-z) + z^m/(1-z)²
        let m = l + 1.0;
        let tail =
            pref / ln2 * ((m + 1.0) * zpow / (1.0 - z) + zpow * z / (1.0 - z).powi(2));
        if tail < tol {
            return Ok(SeriesCapacity { value, terms: ell, tail_bound: tail });
        }
    }
    Err(Error::ContractViolation("Unruh capacity series failed to converge".into()))
}

/// PPT verdict of a Choi matrix: transpose the input factor, eigensolve.
pub fn ppt_check(choi: &ChoiMatrix, tol: f64) -> Result<(bool, f64)> {
    let pt = partial_transpose(&choi.matrix, &choi.shape(), 0)?;
    let min = hermitian_eigenvalues(&pt)?.into_iter().fold(f64::INFINITY, f64::min);
    Ok((min >= -tol, min))
}

/// True iff the B and E marginals of `VρV†` agree entrywise within `tol`
/// for the vacuum input and 5 deterministic random inputs. Channels with
/// mismatched output/environment dimensions are never symmetric.
pub fn symmetric_channel_check(iso: &StinespringIsometry, tol: f64) -> Result<bool> {
    use rand::SeedableRng;
    if iso.output_dim() != iso.env_dim() {
        return Ok(false);
    }
    let d = iso.input_dim;
    let mut inputs = Vec::new();
    let mut vacuum = CMat::zeros(d, d);
    vacuum[(0, 0)] = cr(1.0);
    inputs.push(vacuum);
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0x5e11);
    use rand::Rng;
    for _ in 0..5 {
        let mut v = CVec::zeros(d);
        for k in 0..d {
            v[k] = crate::tensor::C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        }
        let v = v.clone() / cr(v.norm());
        inputs.push(&v * v.adjoint());
    }
    for rho in &inputs {
        let b = iso.apply(rho)?;
        let e = iso.complement_apply(rho)?;
        if max_abs(&(b - e)) > tol {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Both sides of the direct-sum capacity identity
/// `Q⁽¹⁾(⊕ p_x N_x) = Σ p_x Q⁽¹⁾(N_x)`.
#[derive(Debug, Clone)]
pub struct DirectSumReport {
    pub combined: CapacityResult,
    pub weighted_sum: f64,
    pub difference: f64,
}

pub fn verify_direct_sum_lemma(
    channels: &[&StinespringIsometry],
    probs: &[f64],
    tol: f64,
) -> Result<DirectSumReport> {
    let mut weighted = 0.0;
    for (ch, &p) in channels.iter().zip(probs) {
        let pair = ChannelPair::from_isometry(ch);
        weighted += p * optimize_coherent_information(&pair, tol)?.value;
    }
    let combined_iso = direct_sum_channel(channels, probs)?;
    let pair = ChannelPair::from_isometry(&combined_iso);
    let combined = optimize_coherent_information(&pair, tol)?;
    let difference = (combined.value - weighted).abs();
    Ok(DirectSumReport { combined, weighted_sum: weighted, difference })
}

fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let mut acc = 1.0f64;
    for i in 0..k.min(n - k) {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc
}

/// Isometric embedding of the (ℓ+1)-dim symmetric subspace into ℓ qubits:
/// column k is the equal-weight superposition of bitstrings with k ones.
pub fn dicke_embedding(ell: usize) -> Result<CMat> {
    if !(1..=6).contains(&ell) {
        return Err(Error::InvalidParameter(format!("Dicke embedding supports ℓ ≤ 6, got {ell}")));
    }
    let dim = 1usize << ell;
    let mut t = CMat::zeros(dim, ell + 1);
    for bits in 0..dim {
        let k = (bits as u32).count_ones() as usize;
        t[(bits, k)] = cr(1.0 / binomial(ell, k).sqrt());
    }
    Ok(t)
}

/// Overlap of one clone with the input: Dicke-embed `Cl_ℓ(φ)` into ℓ qubits,
/// trace down to the first, and evaluate `⟨φ|ρ_clone|φ⟩`.
pub fn clone_fidelity(ell: usize, phi: &DualRailQubit) -> Result<f64> {
    if !(2..=6).contains(&ell) {
        return Err(Error::InvalidParameter(format!("clone fidelity supports 2 ≤ ℓ ≤ 6, got {ell}")));
    }
    let rho = phi.to_density();
    let sym = cloning_apply(ell, &rho)?;
    let t = dicke_embedding(ell)?;
    let full = &t * sym * t.adjoint();
    let shape = SubsystemShape::new(vec![2; ell]);
    let one = partial_trace(&full, &shape, &[0])?;
    let psi = CVec::from_vec(vec![phi.a, phi.b]);
    Ok((psi.adjoint() * one * psi)[(0, 0)].re)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::{choi_of, cloner_isometry, depolarizing_apply, identity_isometry};
    use crate::fock::{squeezer_vacuum_state, unruh_isometry, FockCutoff, SqueezeParam};
    use crate::tensor::{identity, C64};

    #[test]
    fn coherent_information_cloners() {
        let mixed = identity(2).scale(0.5);
        let pair = ChannelPair::from_cloner(1);
        assert!((coherent_information(&pair, &mixed).unwrap() - 1.0).abs() < 1e-12);
        let pair = ChannelPair::from_cloner(2);
        let expect = (3.0f64 / 2.0).log2();
        assert!((coherent_information(&pair, &mixed).unwrap() - expect).abs() < 1e-12);
        // pure input → equal marginals → zero
        let mut pure = CMat::zeros(2, 2);
        pure[(0, 0)] = cr(1.0);
        assert!(coherent_information(&pair, &pure).unwrap().abs() < 1e-12);
    }

    #[test]
    fn optimizer_matches_cloner_capacities() {
        for ell in 1..=4usize {
            let pair = ChannelPair::from_cloner(ell);
            let res = optimize_coherent_information(&pair, 1e-8).unwrap();
            let expect = capacity_cloner(ell).unwrap();
            assert!(
                (res.value - expect).abs() < 1e-7,
                "ℓ={ell}: got {} expected {expect}",
                res.value
            );
            assert!(res.optimizer_bloch_radius() < 1e-3, "argmax not at center for ℓ={ell}");
        }
    }

    #[test]
    fn optimizer_complement_cloners_flat() {
        for ell in 1..=4usize {
            let pair = ChannelPair::from_cloner_complement(ell);
            let res = optimize_coherent_information(&pair, 1e-8).unwrap();
            assert!(res.value <= 1e-8, "Ĉl_{ell} optimum {} > 0", res.value);
        }
    }

    #[test]
    fn unruh_capacity_values() {
        let q = unruh_capacity(0.0, 1e-10).unwrap();
        assert!((q.value - 1.0).abs() < 1e-15 && q.tail_bound == 0.0);
        let q = unruh_capacity(0.5, 1e-12).unwrap();
        // independent partial sums: Σ p_ℓ log₂((ℓ+1)/ℓ)
        let mut brute = 0.0;
        for ell in 1..2000usize {
            let l = ell as f64;
            brute += 0.5 * 0.125 * l * (l + 1.0) * 0.5f64.powi(ell as i32 - 1)
                * ((l + 1.0) / l).log2();
        }
        assert!((q.value - brute).abs() < 1e-12);
        // monotone decrease over a grid
        let mut prev = 1.0 + 1e-12;
        for k in 1..=19 {
            let z = k as f64 * 0.05;
            let v = unruh_capacity(z, 1e-10).unwrap().value;
            assert!(v < prev, "capacity not decreasing at z={z}");
            prev = v;
        }
        assert!(unruh_capacity(1.0, 1e-8).is_err());
    }

    #[test]
    fn two_rail_capacity_matches_series() {
        let z = 0.3;
        let p = SqueezeParam::from_z(z).unwrap();
        let c = FockCutoff::for_tolerance(z, 1e-9);
        let iso = unruh_isometry(&p, &c).unwrap();
        let rail = TwoRailChannel::from_isometry(&iso).unwrap();
        let pair = ChannelPair::from_two_rail(&rail);
        let res = optimize_coherent_information(&pair, 1e-7).unwrap();
        let expect = unruh_capacity(z, 1e-10).unwrap().value;
        assert!((res.value - expect).abs() < 1e-5, "got {} expected {expect}", res.value);
    }

    #[test]
    fn ppt_checks() {
        let id_choi = choi_of(|rho| Ok(rho.clone()), 2).unwrap();
        let (is_ppt, min) = ppt_check(&id_choi, 1e-10).unwrap();
        assert!(!is_ppt && (min + 0.5).abs() < 1e-12);

        let dep = choi_of(|rho| depolarizing_apply(2.0 / 3.0, rho), 2).unwrap();
        let (is_ppt, min) = ppt_check(&dep, 1e-10).unwrap();
        assert!(is_ppt && min.abs() < 1e-10);

        for ell in 1..=6usize {
            let choi = choi_of(|rho| cloning_complement_apply(ell, rho), 2).unwrap();
            let (is_ppt, min) = ppt_check(&choi, 1e-10).unwrap();
            assert!(is_ppt, "Ĉl_{ell} not PPT, min PT eig {min}");
        }
    }

    #[test]
    fn symmetric_checks() {
        let p = SqueezeParam::from_z(0.5).unwrap();
        let c = FockCutoff::new(40).unwrap();
        let state = squeezer_vacuum_state(&p, &c).unwrap();
        let iso = crate::channels::isometry_from_pure_state(&state).unwrap();
        assert!(symmetric_channel_check(&iso, 1e-10).unwrap());

        assert!(!symmetric_channel_check(&identity_isometry(2), 1e-10).unwrap());

        let unruh = unruh_isometry(&p, &FockCutoff::new(30).unwrap()).unwrap();
        assert!(!symmetric_channel_check(&unruh, 1e-10).unwrap());
    }

    #[test]
    fn direct_sum_lemma_single_channel() {
        let id2 = identity_isometry(2);
        let report = verify_direct_sum_lemma(&[&id2], &[1.0], 1e-7).unwrap();
        assert!((report.combined.value - 1.0).abs() < 1e-7);
        assert!(report.difference < 1e-7);
    }

    #[test]
    fn direct_sum_lemma_two_cloners() {
        let c1 = cloner_isometry(1).unwrap();
        let c2 = cloner_isometry(2).unwrap();
        let report = verify_direct_sum_lemma(&[&c1, &c2], &[0.5, 0.5], 1e-7).unwrap();
        let expect = 0.5 + 0.5 * (1.5f64).log2();
        assert!(
            (report.combined.value - expect).abs() < 1e-6,
            "got {} expected {expect}",
            report.combined.value
        );
    }

    #[test]
    fn clone_fidelities() {
        let phi = DualRailQubit::normalized(C64::new(0.3, -0.7), C64::new(0.2, 0.55)).unwrap();
        let f = clone_fidelity(2, &phi).unwrap();
        assert!((f - 5.0 / 6.0).abs() < 1e-12, "ℓ=2 fidelity {f}");
        let f = clone_fidelity(3, &phi).unwrap();
        assert!((f - 7.0 / 9.0).abs() < 1e-12, "ℓ=3 fidelity {f}");
        assert!(clone_fidelity(1, &phi).is_err());
        assert!(clone_fidelity(7, &phi).is_err());
    }

    #[test]
    fn capacity_cloner_values() {
        assert!((capacity_cloner(1).unwrap() - 1.0).abs() < 1e-15);
        assert!((capacity_cloner(2).unwrap() - 1.5f64.log2()).abs() < 1e-15);
        let mut prev = f64::INFINITY;
        for ell in 1..40 {
            let q = capacity_cloner(ell).unwrap();
            assert!(q < prev);
            prev = q;
        }
        assert!(capacity_cloner(0).is_err());
    }
}
