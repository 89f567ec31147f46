//! Matrix empirical Bernstein confidence sequence: a time-uniform bound on
//! gamma_max(Xbar_t - M_t), the largest absolute eigenvalue of the deviation
//! of the sample mean from the average conditional mean, for streams of
//! symmetric matrices with eigenvalues in [0,1]. Includes a weighted
//! (Wang-Ramdas style) baseline bound for comparison.
//!
//! The eigensolver is a cyclic Jacobi iteration: deterministic, accurate to
//! ~1e-14 off-diagonal mass, and entirely adequate for desk-scale d.

use crate::error::{CsError, Result};
use crate::kernel;

/// Dense symmetric matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    pub dim: usize,
    data: Vec<f64>,
}

impl SymMatrix {
    /// Builds from row-major entries, checking symmetry to 1e-12 and then
    /// symmetrizing exactly so downstream code never sees asymmetry.
    pub fn new(dim: usize, entries: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(CsError::Config("matrix dimension must be positive".into()));
        }
        if entries.len() != dim * dim {
            return Err(CsError::Config(format!(
                "expected {} entries for a {dim}x{dim} matrix, got {}",
                dim * dim,
                entries.len()
            )));
        }
        if entries.iter().any(|x| !x.is_finite()) {
            return Err(CsError::Domain("matrix entries must be finite".into()));
        }
        let mut data = entries;
        for i in 0..dim {
            for j in (i + 1)..dim {
                let a = data[i * dim + j];
                let b = data[j * dim + i];
                if (a - b).abs() > 1e-12 {
                    return Err(CsError::Domain(format!(
                        "matrix not symmetric at ({i},{j}): {a} vs {b}"
                    )));
                }
                let m = 0.5 * (a + b);
                data[i * dim + j] = m;
                data[j * dim + i] = m;
            }
        }
        Ok(Self { dim, data })
    }

    pub fn zeros(dim: usize) -> Self {
        Self { dim, data: vec![0.0; dim * dim] }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.data[i * dim + i] = 1.0;
        }
        m
    }

    pub fn scaled_identity(dim: usize, c: f64) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.data[i * dim + i] = c;
        }
        m
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }

    pub fn entries(&self) -> &[f64] {
        &self.data
    }

    pub fn add_scaled(&mut self, other: &SymMatrix, c: f64) {
        debug_assert_eq!(self.dim, other.dim);
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += c * b;
        }
    }

    pub fn scale(&self, c: f64) -> SymMatrix {
        SymMatrix { dim: self.dim, data: self.data.iter().map(|x| c * x).collect() }
    }

    pub fn sub(&self, other: &SymMatrix) -> SymMatrix {
        debug_assert_eq!(self.dim, other.dim);
        SymMatrix {
            dim: self.dim,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
        }
    }

    pub fn max_abs_entry(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }
}

/// Eigenvalues (descending) and the orthogonal basis that diagonalizes the
/// input: A = Q diag(eigenvalues) Q^T, columns of Q are eigenvectors.
#[derive(Debug, Clone)]
pub struct EigDecomposition {
    pub eigenvalues: Vec<f64>,
    /// Row-major d x d orthogonal matrix; column k pairs with eigenvalue k.
    pub basis: Vec<f64>,
}

/// Cyclic Jacobi eigendecomposition. Deterministic sweep order; stops when
/// the off-diagonal Frobenius mass falls below 1e-14 (relative to the
/// largest entry), errs after 100 sweeps.
pub fn sym_eig(a: &SymMatrix) -> Result<EigDecomposition> {
    let d = a.dim;
    let mut m = a.data.clone();
    let mut q = vec![0.0; d * d];
    for i in 0..d {
        q[i * d + i] = 1.0;
    }
    let scale = a.max_abs_entry().max(1.0);
    let tol = 1e-14 * scale;

    let mut converged = false;
    for _sweep in 0..100 {
        let mut off = 0.0_f64;
        for p in 0..d {
            for r in (p + 1)..d {
                off = off.max(m[p * d + r].abs());
            }
        }
        if off <= tol {
            converged = true;
            break;
        }
        for p in 0..d {
            for r in (p + 1)..d {
                let apq = m[p * d + r];
                if apq.abs() <= tol * 1e-2 {
                    continue;
                }
                let app = m[p * d + p];
                let aqq = m[r * d + r];
                let theta = (aqq - app) / (2.0 * apq);
                // smaller-root tangent for numerical stability
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..d {
                    let mkp = m[k * d + p];
                    let mkq = m[k * d + r];
                    m[k * d + p] = c * mkp - s * mkq;
                    m[k * d + r] = s * mkp + c * mkq;
                }
                for k in 0..d {
                    let mpk = m[p * d + k];
                    let mqk = m[r * d + k];
                    m[p * d + k] = c * mpk - s * mqk;
                    m[r * d + k] = s * mpk + c * mqk;
                }
                for k in 0..d {
                    let qkp = q[k * d + p];
                    let qkq = q[k * d + r];
                    q[k * d + p] = c * qkp - s * qkq;
                    q[k * d + r] = s * qkp + c * qkq;
                }
            }
        }
    }
    if !converged {
        return Err(CsError::Convergence(format!(
            "jacobi eigensolver did not converge in 100 sweeps (d = {d})"
        )));
    }

    let mut pairs: Vec<(f64, usize)> = (0..d).map(|i| (m[i * d + i], i)).collect();
    pairs.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
    let eigenvalues: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let mut basis = vec![0.0; d * d];
    for (new_col, &(_, old_col)) in pairs.iter().enumerate() {
        for k in 0..d {
            basis[k * d + new_col] = q[k * d + old_col];
        }
    }
    Ok(EigDecomposition { eigenvalues, basis })
}

/// Largest absolute eigenvalue.
pub fn gamma_max(a: &SymMatrix) -> Result<f64> {
    let eig = sym_eig(a)?;
    Ok(eig.eigenvalues.iter().fold(0.0_f64, |m, &l| m.max(l.abs())))
}

/// Applies a scalar function to the spectrum: Q f(Lambda) Q^T.
pub fn spectral_map<F>(a: &SymMatrix, f: F) -> Result<SymMatrix>
where
    F: Fn(f64) -> Result<f64>,
{
    let d = a.dim;
    let eig = sym_eig(a)?;
    let mapped: Vec<f64> = eig.eigenvalues.iter().map(|&l| f(l)).collect::<Result<_>>()?;
    let mut out = vec![0.0; d * d];
    for i in 0..d {
        for j in i..d {
            let mut acc = 0.0;
            for k in 0..d {
                acc += eig.basis[i * d + k] * mapped[k] * eig.basis[j * d + k];
            }
            out[i * d + j] = acc;
            out[j * d + i] = acc;
        }
    }
    Ok(SymMatrix { dim: d, data: out })
}

/// psi_E applied to the spectral absolute value of `a`.
pub fn psi_e_abs(a: &SymMatrix) -> Result<SymMatrix> {
    spectral_map(a, |l| kernel::psi_e(l.abs()))
}

#[derive(Debug, Clone)]
pub struct MatrixEbConfig {
    pub alpha: f64,
    pub kappa: f64,
    pub dim: usize,
}

impl MatrixEbConfig {
    pub fn new(alpha: f64, kappa: f64, dim: usize) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(CsError::Config(format!("alpha must be in (0,1), got {alpha}")));
        }
        if !(kappa > 0.0) {
            return Err(CsError::Config(format!("kappa must be positive, got {kappa}")));
        }
        if dim == 0 {
            return Err(CsError::Config("dimension must be positive".into()));
        }
        Ok(Self { alpha, kappa, dim })
    }

    pub fn z(&self) -> f64 {
        kernel::erf(1.0 / (self.kappa * std::f64::consts::SQRT_2))
    }
}

#[derive(Debug, Clone)]
pub struct MatrixEbState {
    pub t: u64,
    /// Sum of observations.
    pub s_mat: SymMatrix,
    /// V_t = sum of psi_E(|X_i - Xhat_i|).
    pub v_mat: SymMatrix,
    /// U_t = 1/(2 kappa^2) + gamma_max(V_t).
    pub u_t: f64,
    /// Xhat_{t+1} = (I/2 + sum X_j) / (t+1).
    pub predictor: SymMatrix,
    accum: SymMatrix,
}

pub fn matrix_new_state(config: &MatrixEbConfig) -> MatrixEbState {
    let d = config.dim;
    MatrixEbState {
        t: 0,
        s_mat: SymMatrix::zeros(d),
        v_mat: SymMatrix::zeros(d),
        u_t: 1.0 / (2.0 * config.kappa * config.kappa),
        predictor: SymMatrix::scaled_identity(d, 0.5),
        accum: SymMatrix::scaled_identity(d, 0.5),
    }
}

/// Eigenvalue range check for observations; tolerance absorbs eigensolver noise.
fn check_eig_range(x: &SymMatrix) -> Result<()> {
    let eig = sym_eig(x)?;
    for &l in &eig.eigenvalues {
        if !(-1e-9..=1.0 + 1e-9).contains(&l) {
            return Err(CsError::Domain(format!(
                "observation eigenvalue {l} outside [0,1]"
            )));
        }
    }
    Ok(())
}

pub fn matrix_update(state: &mut MatrixEbState, x: &SymMatrix, config: &MatrixEbConfig) -> Result<()> {
    if x.dim != config.dim {
        return Err(CsError::Domain(format!(
            "observation dimension {} does not match configured {}",
            x.dim, config.dim
        )));
    }
    check_eig_range(x)?;
    let residual = x.sub(&state.predictor);
    let psi = psi_e_abs(&residual)?;
    state.t += 1;
    state.s_mat.add_scaled(x, 1.0);
    state.v_mat.add_scaled(&psi, 1.0);
    state.u_t = 1.0 / (2.0 * config.kappa * config.kappa) + gamma_max(&state.v_mat)?;
    state.accum.add_scaled(x, 1.0);
    state.predictor = state.accum.scale(1.0 / (state.t + 1) as f64);
    Ok(())
}

/// Bound on gamma_max of the deviation of the sample mean from the average
/// conditional mean, with a validity flag for the hitting-time condition.
#[derive(Debug, Clone, Copy)]
pub struct MatrixBound {
    pub t: u64,
    pub halfwidth: f64,
    pub valid: bool,
}

/// Closed-form matrix halfwidth (2/t) sqrt(U_t (l_{alpha,d} + log(2 U_t)/2))
/// with l_{alpha,d} = log(d kappa Z / alpha) - log(1 - exp(-U_t/4)).
pub fn matrix_halfwidth(state: &MatrixEbState, config: &MatrixEbConfig) -> MatrixBound {
    let u = state.u_t;
    let log_denom = if u > 200.0 { 0.0 } else { (-(-u / 4.0).exp()).ln_1p() };
    let ell = (config.dim as f64 * config.kappa * config.z() / config.alpha).ln() - log_denom;
    let w = 2.0 / state.t as f64 * (u * (ell + 0.5 * (2.0 * u).ln())).sqrt();
    MatrixBound { t: state.t, halfwidth: w, valid: matrix_t0_holds(u, config) }
}

/// Hitting-time condition with the dimension-inflated threshold
/// G_{alpha,d} = d kappa Z sqrt(2 pi) / alpha, checked in log space.
fn matrix_t0_holds(u: f64, config: &MatrixEbConfig) -> bool {
    let log_g = (config.dim as f64 * config.kappa * config.z()
        * (2.0 * std::f64::consts::PI).sqrt()
        / config.alpha)
        .ln();
    let log_big = u / 4.0 + (-0.5 * (-u / 4.0).exp()).ln_1p();
    0.5 * (std::f64::consts::PI.ln() - u.ln()) + log_big >= log_g
}

/// Weighted-deviation baseline: a predictable schedule lambda_t in (0,1)
/// and the bound (log(2d/alpha) + gamma_max(sum psi_E(lambda_i)(X_i-Xhat_i)^2))
/// / sum lambda_i on gamma_max of the lambda-weighted mean deviation.
#[derive(Debug, Clone)]
pub struct WangRamdasState {
    pub t: u64,
    pub sum_lambda: f64,
    /// sum lambda_i X_i (for the weighted center).
    pub weighted_sum: SymMatrix,
    /// sum psi_E(lambda_i) (X_i - Xhat_i)^2 (symmetric PSD).
    pub penalty: SymMatrix,
    /// Running mean of gamma_max((X_i - Xhat_i)^2), smoothed with 1/4.
    pub vbar: f64,
    predictor: SymMatrix,
    accum: SymMatrix,
    sum_gamma_sq: f64,
}

impl WangRamdasState {
    pub fn new(dim: usize) -> Self {
        Self {
            t: 0,
            sum_lambda: 0.0,
            weighted_sum: SymMatrix::zeros(dim),
            penalty: SymMatrix::zeros(dim),
            vbar: 0.25,
            predictor: SymMatrix::scaled_identity(dim, 0.5),
            accum: SymMatrix::scaled_identity(dim, 0.5),
            sum_gamma_sq: 0.0,
        }
    }

    /// Schedule analogous to the scalar predictable plug-in:
    /// lambda_t = min(1/2, sqrt(2 log(2d/alpha) / (vbar_{t-1} t log(1+t)))).
    pub fn next_lambda(&self, dim: usize, alpha: f64) -> f64 {
        let t = (self.t + 1) as f64;
        let num = 2.0 * (2.0 * dim as f64 / alpha).ln();
        (num / (self.vbar * t * (1.0 + t).ln())).sqrt().min(0.5)
    }

    pub fn update(&mut self, x: &SymMatrix, alpha: f64) -> Result<()> {
        self.update_with_lambda(x, self.next_lambda(x.dim, alpha))
    }

    pub fn update_with_lambda(&mut self, x: &SymMatrix, lambda: f64) -> Result<()> {
        if !(lambda > 0.0 && lambda < 1.0) {
            return Err(CsError::Config(format!("lambda must lie in (0,1), got {lambda}")));
        }
        check_eig_range(x)?;
        let residual = x.sub(&self.predictor);
        // (X - Xhat)^2 via the spectral square of the symmetric residual
        let sq = spectral_map(&residual, |l| Ok(l * l))?;
        self.t += 1;
        self.sum_lambda += lambda;
        self.weighted_sum.add_scaled(x, lambda);
        self.penalty.add_scaled(&sq, kernel::psi_e(lambda)?);
        self.sum_gamma_sq += gamma_max(&sq)?;
        self.vbar = (0.25 + self.sum_gamma_sq) / (self.t + 1) as f64;
        self.accum.add_scaled(x, 1.0);
        self.predictor = self.accum.scale(1.0 / (self.t + 1) as f64);
        Ok(())
    }
}

pub fn wang_ramdas_halfwidth(state: &WangRamdasState, alpha: f64) -> Result<f64> {
    if state.t == 0 {
        return Err(CsError::Precondition("wang_ramdas_halfwidth requires t >= 1".into()));
    }
    let d = state.penalty.dim as f64;
    Ok(((2.0 * d / alpha).ln() + gamma_max(&state.penalty)?) / state.sum_lambda)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha12Rng;

    fn random_sym(d: usize, rng: &mut ChaCha12Rng, scale: f64) -> SymMatrix {
        let mut e = vec![0.0; d * d];
        for i in 0..d {
            for j in i..d {
                let v = (rng.gen::<f64>() - 0.5) * scale;
                e[i * d + j] = v;
                e[j * d + i] = v;
            }
        }
        SymMatrix::new(d, e).unwrap()
    }

    #[test]
    fn constructor_checks() {
        assert!(SymMatrix::new(2, vec![1.0, 0.5, 0.5, 1.0]).is_ok());
        assert!(SymMatrix::new(2, vec![1.0, 0.5, 0.4, 1.0]).is_err());
        assert!(SymMatrix::new(2, vec![1.0; 3]).is_err());
        assert!(SymMatrix::new(0, vec![]).is_err());
        assert!(SymMatrix::new(1, vec![f64::NAN]).is_err());
    }

    #[test]
    fn eig_trivial_cases() {
        let eig = sym_eig(&SymMatrix::identity(3)).unwrap();
        for &l in &eig.eigenvalues {
            assert!((l - 1.0).abs() < 1e-14);
        }
        let d = SymMatrix::new(2, vec![0.2, 0.0, 0.0, 0.7]).unwrap();
        let eig = sym_eig(&d).unwrap();
        assert!((eig.eigenvalues[0] - 0.7).abs() < 1e-14);
        assert!((eig.eigenvalues[1] - 0.2).abs() < 1e-14);
    }

    #[test]
    fn eig_reconstruction_and_orthogonality() {
        let mut rng = ChaCha12Rng::seed_from_u64(11);
        for _ in 0..20 {
            let a = random_sym(5, &mut rng, 2.0);
            let eig = sym_eig(&a).unwrap();
            let d = 5;
            // reconstruction
            let mut err = 0.0_f64;
            for i in 0..d {
                for j in 0..d {
                    let mut acc = 0.0;
                    for k in 0..d {
                        acc += eig.basis[i * d + k] * eig.eigenvalues[k] * eig.basis[j * d + k];
                    }
                    err = err.max((acc - a.get(i, j)).abs());
                }
            }
            assert!(err <= 1e-10 * a.max_abs_entry().max(1.0), "reconstruction err {err}");
            // orthogonality
            for i in 0..d {
                for j in 0..d {
                    let mut acc = 0.0;
                    for k in 0..d {
                        acc += eig.basis[k * d + i] * eig.basis[k * d + j];
                    }
                    let target = if i == j { 1.0 } else { 0.0 };
                    assert!((acc - target).abs() < 1e-10);
                }
            }
            // descending order
            for w in eig.eigenvalues.windows(2) {
                assert!(w[0] >= w[1]);
            }
        }
    }

    #[test]
    fn spectral_map_cases() {
        let a = SymMatrix::new(2, vec![0.5, 0.0, 0.0, -0.5]).unwrap();
        let p = psi_e_abs(&a).unwrap();
        let expected = 0.19314718055994531;
        assert!((p.get(0, 0) - expected).abs() < 1e-12);
        assert!((p.get(1, 1) - expected).abs() < 1e-12);
        assert!(p.get(0, 1).abs() < 1e-12);

        // identity map returns the input
        let mut rng = ChaCha12Rng::seed_from_u64(5);
        let a = random_sym(4, &mut rng, 1.0);
        let b = spectral_map(&a, Ok).unwrap();
        assert!(a.sub(&b).max_abs_entry() < 1e-12);

        // |A| is PSD
        let abs = spectral_map(&a, |l| Ok(l.abs())).unwrap();
        let eig = sym_eig(&abs).unwrap();
        assert!(eig.eigenvalues.iter().all(|&l| l >= -1e-12));

        // domain error propagates
        let big = SymMatrix::new(1, vec![1.5]).unwrap();
        assert!(psi_e_abs(&big).is_err());
    }

    #[test]
    fn d1_reduces_to_scalar() {
        use crate::eb::{self, EbConfig};
        let c_m = MatrixEbConfig::new(0.05, 0.25, 1).unwrap();
        let c_s = EbConfig::new(0.05, 0.25);
        let mut ms = matrix_new_state(&c_m);
        let mut ss = eb::new_state(&c_s).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(9);
        for _ in 0..100 {
            let x: f64 = rng.gen();
            matrix_update(&mut ms, &SymMatrix::new(1, vec![x]).unwrap(), &c_m).unwrap();
            eb::update(&mut ss, x, &c_s).unwrap();
            assert!((ms.u_t - ss.u).abs() < 1e-10);
            assert!((ms.s_mat.get(0, 0) - ss.s).abs() < 1e-10);
        }
        let mb = matrix_halfwidth(&ms, &c_m);
        let ws = eb::halfwidth_apx(&ss, &c_s);
        assert!((mb.halfwidth - ws).abs() < 1e-10);
        assert_eq!(mb.valid, ss.t0_reached);
    }

    #[test]
    fn update_semantics() {
        let c = MatrixEbConfig::new(0.05, 0.25, 2).unwrap();
        let mut s = matrix_new_state(&c);
        // feeding the predictor exactly leaves v_mat at zero
        let pred = s.predictor.clone();
        matrix_update(&mut s, &pred, &c).unwrap();
        assert!(s.v_mat.max_abs_entry() < 1e-12);
        assert!((s.u_t - 8.0).abs() < 1e-12);

        // eigenvalue range enforcement
        let bad = SymMatrix::new(2, vec![1.4, 0.0, 0.0, 0.2]).unwrap();
        assert!(matrix_update(&mut s, &bad, &c).is_err());
    }

    #[test]
    fn diagonal_stream_matches_per_coordinate_scalar() {
        use crate::eb::{self, EbConfig};
        let c_m = MatrixEbConfig::new(0.05, 0.25, 2).unwrap();
        let c_s = EbConfig::new(0.05, 0.25);
        let mut ms = matrix_new_state(&c_m);
        let mut s0 = eb::new_state(&c_s).unwrap();
        let mut s1 = eb::new_state(&c_s).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(21);
        for _ in 0..200 {
            let (a, b): (f64, f64) = (rng.gen(), rng.gen());
            let x = SymMatrix::new(2, vec![a, 0.0, 0.0, b]).unwrap();
            matrix_update(&mut ms, &x, &c_m).unwrap();
            eb::update(&mut s0, a, &c_s).unwrap();
            eb::update(&mut s1, b, &c_s).unwrap();
        }
        let v0 = s0.v(&c_s);
        let v1 = s1.v(&c_s);
        assert!((ms.v_mat.get(0, 0) - v0).abs() < 1e-9);
        assert!((ms.v_mat.get(1, 1) - v1).abs() < 1e-9);
        assert!(ms.v_mat.get(0, 1).abs() < 1e-9);
        assert!((ms.u_t - (8.0 + v0.max(v1))).abs() < 1e-9);
    }

    #[test]
    fn halfwidth_dimension_monotone_and_frozen() {
        // U = 100, t = 1000, kappa = 0.25, alpha = 0.05:
        // l_{alpha,d} = l_alpha + log d
        let mk = |d: usize| {
            let c = MatrixEbConfig::new(0.05, 0.25, d).unwrap();
            let mut s = matrix_new_state(&c);
            s.t = 1000;
            s.u_t = 100.0;
            (matrix_halfwidth(&s, &c), c)
        };
        let (b1, _) = mk(1);
        assert!((b1.halfwidth - 0.041272427848296594).abs() < 1e-12);
        let (b5, c5) = mk(5);
        let ell = (5.0 * 0.25 * c5.z() / 0.05).ln();
        let expected = 2.0 / 1000.0 * (100.0 * (ell + 0.5 * 200.0f64.ln())).sqrt();
        assert!((b5.halfwidth - expected).abs() < 1e-12);
        let (b10, _) = mk(10);
        assert!(b1.halfwidth < b5.halfwidth && b5.halfwidth < b10.halfwidth);
        assert!(b10.valid);
    }

    #[test]
    fn matrix_fan_transfer_on_diagonal() {
        // On diagonal A the matrix inequality exp(xi A - xi^2 psi_E(|A|))
        // <= I + xi A reduces to the scalar inequality per eigenvalue.
        for &xi in &[-1.0, -0.3, 0.4, 1.0] {
            for &l in &[-0.99_f64, -0.5, 0.0, 0.3, 0.99] {
                let lhs = (xi * l - xi * xi * kernel::psi_e(l.abs()).unwrap()).exp();
                assert!(lhs <= 1.0 + xi * l + 1e-10, "xi={xi} l={l}");
            }
        }
    }

    #[test]
    fn wang_ramdas_d1_reduction_and_double_entry() {
        // d = 1 with the same schedule values must match a straight-line
        // scalar reimplementation of the displayed bound.
        let alpha = 0.05;
        let mut rng = ChaCha12Rng::seed_from_u64(33);
        let xs: Vec<f64> = (0..1000).map(|_| rng.gen()).collect();

        let mut st = WangRamdasState::new(1);
        for &x in &xs {
            st.update(&SymMatrix::new(1, vec![x]).unwrap(), alpha).unwrap();
        }
        let w = wang_ramdas_halfwidth(&st, alpha).unwrap();

        // straight-line re-run
        let mut sum_l = 0.0;
        let mut pen = 0.0;
        let mut vbar = 0.25;
        let mut acc = 0.5;
        let mut pred = 0.5;
        let mut sgs = 0.0;
        for (i, &x) in xs.iter().enumerate() {
            let t = i as f64 + 1.0;
            let l = (2.0 * (2.0 / alpha).ln() / (vbar * t * (1.0 + t).ln())).sqrt().min(0.5);
            let r = x - pred;
            sum_l += l;
            pen += kernel::psi_e(l).unwrap() * r * r;
            sgs += r * r;
            vbar = (0.25 + sgs) / (t + 1.0);
            acc += x;
            pred = acc / (t + 1.0);
        }
        let w2 = ((2.0 / alpha).ln() + pen) / sum_l;
        assert!((w - w2).abs() < 1e-12, "w = {w}, w2 = {w2}");

        assert!(st.next_lambda(1, alpha) <= 0.5);
        let bad = SymMatrix::new(1, vec![0.5]).unwrap();
        let mut st2 = WangRamdasState::new(1);
        assert!(st2.update_with_lambda(&bad, 1.0).is_err());
    }

    #[test]
    fn wang_ramdas_constant_stream() {
        let alpha = 0.05;
        let mut st = WangRamdasState::new(2);
        let x = SymMatrix::scaled_identity(2, 0.5);
        for _ in 0..100 {
            st.update(&x, alpha).unwrap();
        }
        // predictor equals the stream, so the penalty matrix stays zero
        assert!(gamma_max(&st.penalty).unwrap() < 1e-12);
        let center = st.weighted_sum.scale(1.0 / st.sum_lambda);
        assert!((center.get(0, 0) - 0.5).abs() < 1e-12);
        assert!(center.get(0, 1).abs() < 1e-12);
    }
}
