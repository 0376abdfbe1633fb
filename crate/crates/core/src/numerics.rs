//! Dense complex linear algebra shared by every other module.
//!
//! Matrices are `nalgebra::DMatrix<Complex64>`. Eigen- and singular value
//! decompositions run in faer (nalgebra's complex solvers return wrong
//! factorizations on some structured inputs) and are wrapped with the checks,
//! orderings and phase conventions the rest of the crate relies on:
//! eigenvalues ascending, singular values descending, and the first nonzero
//! entry of every left singular vector real and nonnegative.

use faer::{Mat, MatRef, Side};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type DenseMatrix = DMatrix<Complex64>;
pub type StateVector = DVector<Complex64>;

/// Default relative residual tolerance for decompositions.
pub const DEFAULT_TOL: f64 = 1e-10;

pub const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
pub const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };
pub const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn real(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

fn to_faer(a: &DenseMatrix) -> Mat<Complex64> {
    Mat::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)])
}

fn from_faer(m: MatRef<'_, Complex64>) -> DenseMatrix {
    DenseMatrix::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

#[derive(Debug, Clone)]
pub struct HermitianEig {
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    /// Columns are the eigenvectors, in the order of `eigenvalues`.
    pub eigenvectors: DenseMatrix,
}

impl HermitianEig {
    pub fn reconstruct(&self) -> DenseMatrix {
        let d = DMatrix::from_diagonal(&DVector::from_iterator(
            self.eigenvalues.len(),
            self.eigenvalues.iter().map(|&x| real(x)),
        ));
        &self.eigenvectors * d * self.eigenvectors.adjoint()
    }

    /// Applies a real function to the spectrum: V f(Λ) V†.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> DenseMatrix {
        let d = self.eigenvectors.nrows();
        let mut scaled = self.eigenvectors.clone();
        for (j, &lam) in self.eigenvalues.iter().enumerate() {
            let w = f(lam);
            for i in 0..d {
                scaled[(i, j)] *= w;
            }
        }
        scaled * self.eigenvectors.adjoint()
    }

    /// Projector onto the span of the eigenvectors selected by `keep`.
    pub fn projector(&self, keep: impl Fn(f64) -> bool) -> DenseMatrix {
        self.map(|x| if keep(x) { 1.0 } else { 0.0 })
    }
}

#[derive(Debug, Clone)]
pub struct Svd {
    pub u: DenseMatrix,
    /// Descending.
    pub s: Vec<f64>,
    pub v: DenseMatrix,
}

impl Svd {
    pub fn reconstruct(&self) -> DenseMatrix {
        self.transform(|x| x)
    }

    /// Singular-value transform U f(S) V†.
    pub fn transform(&self, f: impl Fn(f64) -> f64) -> DenseMatrix {
        let mut us = self.u.clone();
        for (j, &sv) in self.s.iter().enumerate() {
            let w = f(sv);
            for i in 0..us.nrows() {
                us[(i, j)] *= w;
            }
        }
        us * self.v.adjoint()
    }

    /// U₁V₁† built from the leading `r` singular triplets.
    pub fn leading_block(&self, r: usize) -> DenseMatrix {
        let u1 = self.u.columns(0, r);
        let v1 = self.v.columns(0, r);
        u1 * v1.adjoint()
    }
}

pub fn frobenius(a: &DenseMatrix) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// ‖A − A†‖_F.
pub fn hermiticity_residual(a: &DenseMatrix) -> f64 {
    frobenius(&(a - a.adjoint()))
}

pub fn identity(dim: usize) -> DenseMatrix {
    DenseMatrix::identity(dim, dim)
}

pub fn trace(a: &DenseMatrix) -> Complex64 {
    a.trace()
}

pub fn kron(a: &DenseMatrix, b: &DenseMatrix) -> DenseMatrix {
    a.kronecker(b)
}

/// Entrywise complex conjugate in the computational basis.
pub fn conj(a: &DenseMatrix) -> DenseMatrix {
    a.map(|z| z.conj())
}

pub fn is_finite(a: &DenseMatrix) -> bool {
    a.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

/// Spectral norm (largest singular value).
pub fn op_norm(a: &DenseMatrix) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    // A failed solve yields NaN, which no tolerance check accepts.
    to_faer(a)
        .singular_values()
        .map(|s| s.first().copied().unwrap_or(0.0))
        .unwrap_or(f64::NAN)
}

pub fn hermitian_eigendecompose(a: &DenseMatrix, tol: f64) -> Result<HermitianEig> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "eigendecomposition of a {}x{} matrix",
            a.nrows(),
            a.ncols()
        )));
    }
    let scale = frobenius(a).max(1.0);
    let residual = hermiticity_residual(a);
    if residual > tol * scale {
        return Err(Error::NotHermitian { residual, tol: tol * scale });
    }
    let sym = (a + a.adjoint()).scale(0.5);
    let dim = sym.nrows();
    let eig = to_faer(&sym)
        .self_adjoint_eigen(Side::Lower)
        .map_err(|_| Error::NoConvergence("hermitian eigendecomposition"))?;
    let values: Vec<f64> = eig.S().column_vector().iter().map(|z| z.re).collect();
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&i, &j| values[i].total_cmp(&values[j]).then(i.cmp(&j)));
    let eigenvalues = order.iter().map(|&i| values[i]).collect();
    let vecs = eig.U();
    let eigenvectors = DenseMatrix::from_fn(dim, dim, |r, col| vecs[(r, order[col])]);
    Ok(HermitianEig { eigenvalues, eigenvectors })
}

/// Eigendecomposition with the default Hermiticity tolerance.
pub fn eigh(a: &DenseMatrix) -> Result<HermitianEig> {
    hermitian_eigendecompose(a, DEFAULT_TOL)
}

/// Eigenvalues (ascending) of a Hermitian matrix.
pub fn eigvalsh(a: &DenseMatrix) -> Result<Vec<f64>> {
    Ok(eigh(a)?.eigenvalues)
}

pub fn singular_value_decompose(a: &DenseMatrix) -> Result<Svd> {
    if a.is_empty() {
        return Ok(Svd { u: DenseMatrix::zeros(a.nrows(), 0), s: Vec::new(), v: DenseMatrix::zeros(a.ncols(), 0) });
    }
    let svd = to_faer(a).thin_svd().map_err(|_| Error::NoConvergence("singular value decomposition"))?;
    let mut u = from_faer(svd.U());
    let mut v = from_faer(svd.V());
    let s: Vec<f64> = svd.S().column_vector().iter().map(|z| z.re).collect();
    for j in 0..u.ncols() {
        let pivot = u.column(j).iter().cloned().find(|z| z.norm() > 1e-12);
        if let Some(p) = pivot {
            let phase = p.conj() / p.norm();
            for i in 0..u.nrows() {
                u[(i, j)] *= phase;
            }
            if j < v.ncols() {
                for i in 0..v.nrows() {
                    v[(i, j)] *= phase;
                }
            }
        }
    }
    let out = Svd { u, s, v };
    if frobenius(&(out.reconstruct() - a)) > 1e-10 * frobenius(a).max(1.0) {
        return Err(Error::NoConvergence("singular value decomposition"));
    }
    Ok(out)
}

pub fn matrix_exponential(a: &DenseMatrix) -> Result<DenseMatrix> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch("exponential of a non-square matrix".into()));
    }
    let e = a.exp();
    if !is_finite(&e) {
        return Err(Error::OverflowDetected);
    }
    Ok(e)
}

/// Schatten-1 norm of ρ − σ.
pub fn schatten1_distance(rho: &DenseMatrix, sigma: &DenseMatrix) -> Result<f64> {
    if rho.shape() != sigma.shape() || !rho.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "{:?} vs {:?}",
            rho.shape(),
            sigma.shape()
        )));
    }
    let diff = rho - sigma;
    let scale = frobenius(&diff).max(1.0);
    if hermiticity_residual(&diff) <= 1e-12 * scale {
        Ok(eigh(&diff)?.eigenvalues.iter().map(|x| x.abs()).sum())
    } else {
        Ok(singular_value_decompose(&diff)?.s.iter().sum())
    }
}

/// Reduced matrix on the sites in `keep` (ascending site order), tracing out
/// the rest. Site 0 is the most significant tensor factor.
pub fn partial_trace(rho: &DenseMatrix, keep: &[usize], dims: &[usize]) -> Result<DenseMatrix> {
    let total: usize = dims.iter().product();
    if !rho.is_square() || rho.nrows() != total {
        return Err(Error::BadDimensionFactorization { dim: rho.nrows(), dims: dims.to_vec() });
    }
    let mut kept: Vec<usize> = keep.to_vec();
    kept.sort_unstable();
    kept.dedup();
    if kept.iter().any(|&s| s >= dims.len()) {
        return Err(Error::BadDimensionFactorization { dim: rho.nrows(), dims: dims.to_vec() });
    }
    let traced: Vec<usize> = (0..dims.len()).filter(|s| !kept.contains(s)).collect();
    let mut strides = vec![1usize; dims.len()];
    for s in (0..dims.len().saturating_sub(1)).rev() {
        strides[s] = strides[s + 1] * dims[s + 1];
    }
    let offsets = |sites: &[usize]| -> Vec<usize> {
        let mut out = vec![0usize];
        for &s in sites {
            let mut next = Vec::with_capacity(out.len() * dims[s]);
            for &o in &out {
                for d in 0..dims[s] {
                    next.push(o + d * strides[s]);
                }
            }
            out = next;
        }
        out
    };
    let keep_off = offsets(&kept);
    let trace_off = offsets(&traced);
    let dk = keep_off.len();
    Ok(DenseMatrix::from_fn(dk, dk, |a, b| {
        trace_off
            .iter()
            .map(|&t| rho[(keep_off[a] + t, keep_off[b] + t)])
            .sum()
    }))
}

/// σ^p for a positive semidefinite σ; eigenvalues below `floor` are clamped to
/// it before exponentiating.
pub fn psd_power(sigma: &DenseMatrix, p: f64, floor: f64) -> Result<DenseMatrix> {
    Ok(eigh(sigma)?.map(|x| x.max(floor).powf(p)))
}

pub fn outer(a: &StateVector, b: &StateVector) -> DenseMatrix {
    a * b.adjoint()
}

pub fn inner(a: &StateVector, b: &StateVector) -> Complex64 {
    a.dotc(b)
}

pub fn basis_state(dim: usize, index: usize) -> StateVector {
    let mut v = StateVector::zeros(dim);
    v[index] = ONE;
    v
}

pub mod paulis {
    use super::*;

    pub fn x() -> DenseMatrix {
        DenseMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO])
    }
    pub fn y() -> DenseMatrix {
        DenseMatrix::from_row_slice(2, 2, &[ZERO, -I, I, ZERO])
    }
    pub fn z() -> DenseMatrix {
        DenseMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, -ONE])
    }
    pub fn id() -> DenseMatrix {
        identity(2)
    }
}

/// Seeded random matrices and states.
pub mod random {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    pub fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    /// Independent stream `stream` derived from `seed`.
    pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        r.set_stream(stream);
        r
    }

    pub fn gaussian(rng: &mut impl Rng) -> Complex64 {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        c(re, im) / std::f64::consts::SQRT_2
    }

    pub fn ginibre(dim: usize, rng: &mut impl Rng) -> DenseMatrix {
        DenseMatrix::from_fn(dim, dim, |_, _| gaussian(rng))
    }

    pub fn hermitian(dim: usize, rng: &mut impl Rng) -> DenseMatrix {
        let g = ginibre(dim, rng);
        (&g + g.adjoint()).scale(0.5)
    }

    /// Haar-random unitary via QR of a Ginibre matrix with phase fixing.
    pub fn unitary(dim: usize, rng: &mut impl Rng) -> DenseMatrix {
        let qr = ginibre(dim, rng).qr();
        let (mut q, r) = qr.unpack();
        for j in 0..dim {
            let d = r[(j, j)];
            let phase = if d.norm() > 0.0 { d / d.norm() } else { ONE };
            for i in 0..dim {
                q[(i, j)] *= phase;
            }
        }
        q
    }

    pub fn unit_vector(dim: usize, rng: &mut impl Rng) -> StateVector {
        let v = StateVector::from_fn(dim, |_, _| gaussian(rng));
        let n = v.norm();
        v / real(n)
    }

    /// Random full-rank density matrix G G† / Tr.
    pub fn density_matrix(dim: usize, rng: &mut impl Rng) -> DenseMatrix {
        let g = ginibre(dim, rng);
        let rho = &g * g.adjoint();
        let t = rho.trace();
        rho / t
    }
}

#[cfg(test)]
mod tests {
    use super::paulis::*;
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn identity_eigenvalues() {
        let e = eigh(&identity(2)).unwrap();
        assert_eq!(e.eigenvalues.len(), 2);
        for lam in e.eigenvalues {
            assert_abs_diff_eq!(lam, 1.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn pauli_z_eigenvalues_ascending() {
        let e = eigh(&z()).unwrap();
        assert_abs_diff_eq!(e.eigenvalues[0], -1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(e.eigenvalues[1], 1.0, epsilon = 1e-14);
    }

    #[test]
    fn pauli_x_eigenvectors() {
        let e = eigh(&x()).unwrap();
        assert_abs_diff_eq!(e.eigenvalues[0], -1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(e.eigenvalues[1], 1.0, epsilon = 1e-14);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let minus = StateVector::from_vec(vec![real(h), real(-h)]);
        let plus = StateVector::from_vec(vec![real(h), real(h)]);
        let v0 = e.eigenvectors.column(0).into_owned();
        let v1 = e.eigenvectors.column(1).into_owned();
        assert_abs_diff_eq!(inner(&minus, &v0).norm(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(inner(&plus, &v1).norm(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn non_hermitian_is_rejected() {
        let a = DenseMatrix::from_row_slice(2, 2, &[ONE, ONE, ZERO, ONE]);
        assert!(matches!(eigh(&a), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn svd_examples() {
        let zero = DenseMatrix::zeros(3, 3);
        assert!(singular_value_decompose(&zero).unwrap().s.iter().all(|&s| s == 0.0));

        let d = DenseMatrix::from_row_slice(2, 2, &[real(3.0), ZERO, ZERO, real(-2.0)]);
        let svd = singular_value_decompose(&d).unwrap();
        assert_abs_diff_eq!(svd.s[0], 3.0, epsilon = 1e-14);
        assert_abs_diff_eq!(svd.s[1], 2.0, epsilon = 1e-14);
        assert!(frobenius(&(svd.reconstruct() - &d)) < 1e-13);

        // |0><+|
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let r1 = DenseMatrix::from_row_slice(2, 2, &[real(h), real(h), ZERO, ZERO]);
        let svd = singular_value_decompose(&r1).unwrap();
        assert_abs_diff_eq!(svd.s[0], 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(svd.s[1], 0.0, epsilon = 1e-14);
    }

    #[test]
    fn svd_phase_convention() {
        let mut rng = random::rng(3);
        let a = random::ginibre(6, &mut rng);
        let svd = singular_value_decompose(&a).unwrap();
        for j in 0..6 {
            let first = svd.u.column(j).iter().cloned().find(|z| z.norm() > 1e-12).unwrap();
            assert!(first.im.abs() < 1e-14 && first.re > 0.0);
        }
        assert!(frobenius(&(svd.reconstruct() - &a)) < 1e-12);
        let uu = svd.u.adjoint() * &svd.u;
        let vv = svd.v.adjoint() * &svd.v;
        assert!(frobenius(&(uu - identity(6))) < 1e-12);
        assert!(frobenius(&(vv - identity(6))) < 1e-12);
    }

    #[test]
    fn svd_of_nearly_rank_one_products() {
        let mut rng = random::rng(11);
        for _ in 0..20 {
            let a = random::unit_vector(16, &mut rng);
            let mut b = &a + random::unit_vector(16, &mut rng).scale(0.1);
            b /= real(b.norm());
            let noise = random::ginibre(16, &mut rng).scale(1e-15);
            let m = outer(&b, &b) * outer(&a, &a) + noise;
            let svd = singular_value_decompose(&m).unwrap();
            assert!(frobenius(&(svd.reconstruct() - &m)) < 1e-12);
            assert_abs_diff_eq!(svd.s[0], inner(&a, &b).norm(), epsilon = 1e-12);
            assert!(svd.s.windows(2).all(|w| w[0] >= w[1]));
        }
    }

    #[test]
    fn exponential_examples() {
        let e0 = matrix_exponential(&DenseMatrix::zeros(2, 2)).unwrap();
        assert!(frobenius(&(e0 - identity(2))) < 1e-15);

        let d = DenseMatrix::from_row_slice(2, 2, &[real(2f64.ln()), ZERO, ZERO, ZERO]);
        let e = matrix_exponential(&d).unwrap();
        assert_abs_diff_eq!(e[(0, 0)].re, 2.0, epsilon = 1e-14);
        assert_abs_diff_eq!(e[(1, 1)].re, 1.0, epsilon = 1e-14);

        // e^{iπX/2} = iX
        let a = x() * c(0.0, std::f64::consts::FRAC_PI_2);
        let e = matrix_exponential(&a).unwrap();
        assert!(frobenius(&(e - x() * I)) < 1e-13);
    }

    #[test]
    fn schatten_examples() {
        let s = DenseMatrix::from_row_slice(2, 2, &[real(0.5), ZERO, ZERO, real(0.5)]);
        assert_abs_diff_eq!(schatten1_distance(&s, &s).unwrap(), 0.0, epsilon = 1e-15);
        let p0 = outer(&basis_state(2, 0), &basis_state(2, 0));
        let p1 = outer(&basis_state(2, 1), &basis_state(2, 1));
        assert_abs_diff_eq!(schatten1_distance(&p0, &p1).unwrap(), 2.0, epsilon = 1e-14);
        let r = DenseMatrix::from_row_slice(2, 2, &[real(0.7), ZERO, ZERO, real(0.3)]);
        assert_abs_diff_eq!(schatten1_distance(&r, &s).unwrap(), 0.4, epsilon = 1e-14);
        assert!(matches!(
            schatten1_distance(&r, &identity(3)),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn partial_trace_examples() {
        let mut rng = random::rng(11);
        let a = random::density_matrix(2, &mut rng);
        let b = random::density_matrix(2, &mut rng);
        let red = partial_trace(&kron(&a, &b), &[0], &[2, 2]).unwrap();
        assert!(frobenius(&(red - &a)) < 1e-14);

        let h = std::f64::consts::FRAC_1_SQRT_2;
        let bell = StateVector::from_vec(vec![real(h), ZERO, ZERO, real(h)]);
        let red = partial_trace(&outer(&bell, &bell), &[0], &[2, 2]).unwrap();
        assert!(frobenius(&(red - identity(2).scale(0.5))) < 1e-15);

        // v(√σ) for σ = diag(0.8, 0.2): √0.8|00> + √0.2|11>
        let psi = StateVector::from_vec(vec![real(0.8f64.sqrt()), ZERO, ZERO, real(0.2f64.sqrt())]);
        let red = partial_trace(&outer(&psi, &psi), &[0], &[2, 2]).unwrap();
        assert_abs_diff_eq!(red[(0, 0)].re, 0.8, epsilon = 1e-15);
        assert_abs_diff_eq!(red[(1, 1)].re, 0.2, epsilon = 1e-15);
        assert_abs_diff_eq!(red[(0, 1)].norm(), 0.0, epsilon = 1e-15);

        assert!(matches!(
            partial_trace(&identity(4), &[0], &[2, 3]),
            Err(Error::BadDimensionFactorization { .. })
        ));
    }

    #[test]
    fn partial_trace_middle_site() {
        let mut rng = random::rng(5);
        let a = random::density_matrix(2, &mut rng);
        let b = random::density_matrix(2, &mut rng);
        let d = random::density_matrix(2, &mut rng);
        let full = kron(&kron(&a, &b), &d);
        let red = partial_trace(&full, &[0, 2], &[2, 2, 2]).unwrap();
        assert!(frobenius(&(red - kron(&a, &d))) < 1e-14);
    }
}
