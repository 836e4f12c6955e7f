//! Dense complex linear algebra used by every other module.
//!
//! Bipartite operators use A-major ordering throughout: row/column index
//! `i * dim_b + j` corresponds to `|i⟩_A ⊗ |j⟩_B`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::qcore::tolerances::{PSD_TOL, RANK_TOL, UNITARY_TOL};

pub type C64 = Complex64;
pub type ComplexMatrix = DMatrix<C64>;
pub type ComplexVector = DVector<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);

#[inline]
pub fn real(x: f64) -> C64 {
    C64::new(x, 0.0)
}

pub fn identity(d: usize) -> ComplexMatrix {
    ComplexMatrix::identity(d, d)
}

pub fn zeros(rows: usize, cols: usize) -> ComplexMatrix {
    ComplexMatrix::zeros(rows, cols)
}

/// Computational basis vector `|i⟩` in dimension `d`.
pub fn ket(d: usize, i: usize) -> ComplexVector {
    let mut v = ComplexVector::zeros(d);
    v[i] = ONE;
    v
}

/// `|v⟩⟨w|`.
pub fn outer(v: &ComplexVector, w: &ComplexVector) -> ComplexMatrix {
    v * w.adjoint()
}

pub fn projector(v: &ComplexVector) -> ComplexMatrix {
    outer(v, v)
}

pub fn trace(m: &ComplexMatrix) -> C64 {
    m.trace()
}

/// `Re Tr(A B)` without forming the product.
pub fn re_trace_product(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    debug_assert_eq!(a.ncols(), b.nrows());
    debug_assert_eq!(a.nrows(), b.ncols());
    let mut acc = 0.0;
    for i in 0..a.nrows() {
        for k in 0..a.ncols() {
            let x = a[(i, k)] * b[(k, i)];
            acc += x.re;
        }
    }
    acc
}

pub fn max_abs(m: &ComplexMatrix) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

pub fn max_abs_diff(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    if a.shape() != b.shape() {
        return f64::INFINITY;
    }
    a.iter()
        .zip(b.iter())
        .fold(0.0, |acc, (x, y)| acc.max((x - y).norm()))
}

pub fn is_finite(m: &ComplexMatrix) -> bool {
    m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

/// Max abs entry of `M - M†`.
pub fn hermitian_deviation(m: &ComplexMatrix) -> f64 {
    if !m.is_square() {
        return f64::INFINITY;
    }
    let n = m.nrows();
    let mut dev: f64 = 0.0;
    for i in 0..n {
        for j in i..n {
            dev = dev.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    dev
}

pub fn hermitian_part(m: &ComplexMatrix) -> ComplexMatrix {
    (m + m.adjoint()) * real(0.5)
}

/// Kronecker product `A ⊗ B`.
pub fn tensor(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a.kronecker(b)
}

pub fn tensor_vec(a: &ComplexVector, b: &ComplexVector) -> ComplexVector {
    a.kronecker(b)
}

/// Which subsystem of a bipartite operator survives a partial trace.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Subsystem {
    A,
    B,
}

/// Partial trace of a `(dim_a·dim_b)`-square operator, keeping `keep`.
pub fn partial_trace_matrix(
    m: &ComplexMatrix,
    dim_a: usize,
    dim_b: usize,
    keep: Subsystem,
) -> Result<ComplexMatrix> {
    let n = dim_a * dim_b;
    if m.nrows() != n || m.ncols() != n {
        return Err(Error::DimensionMismatch(format!(
            "operator is {}x{}, subsystems {}x{}",
            m.nrows(),
            m.ncols(),
            dim_a,
            dim_b
        )));
    }
    Ok(match keep {
        Subsystem::A => ComplexMatrix::from_fn(dim_a, dim_a, |i, k| {
            (0..dim_b).map(|j| m[(i * dim_b + j, k * dim_b + j)]).sum()
        }),
        Subsystem::B => ComplexMatrix::from_fn(dim_b, dim_b, |j, l| {
            (0..dim_a).map(|i| m[(i * dim_b + j, i * dim_b + l)]).sum()
        }),
    })
}

/// Partial transpose on subsystem B.
pub fn partial_transpose_b(m: &ComplexMatrix, dim_a: usize, dim_b: usize) -> ComplexMatrix {
    let n = dim_a * dim_b;
    assert_eq!(m.shape(), (n, n), "partial transpose dimension mismatch");
    let mut out = zeros(n, n);
    for i in 0..dim_a {
        for k in 0..dim_a {
            for j in 0..dim_b {
                for l in 0..dim_b {
                    out[(i * dim_b + j, k * dim_b + l)] = m[(i * dim_b + l, k * dim_b + j)];
                }
            }
        }
    }
    out
}

/// Eigendecomposition of the Hermitian part of `m`, eigenvalues ascending.
pub fn eigh(m: &ComplexMatrix) -> (DVector<f64>, ComplexMatrix) {
    let n = m.nrows();
    if n == 0 {
        return (DVector::zeros(0), zeros(0, 0));
    }
    let eig = hermitian_part(m).symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
    let mut vectors = zeros(n, n);
    for (col, &i) in order.iter().enumerate() {
        vectors.set_column(col, &eig.eigenvectors.column(i));
    }
    (values, vectors)
}

pub fn eigenvalues_h(m: &ComplexMatrix) -> DVector<f64> {
    eigh(m).0
}

pub fn min_eigenvalue(m: &ComplexMatrix) -> f64 {
    if m.nrows() == 0 {
        return 0.0;
    }
    eigenvalues_h(m).min()
}

/// `V f(D) V†` for a Hermitian matrix with eigendecomposition `V D V†`.
pub fn spectral_map(m: &ComplexMatrix, f: impl Fn(f64) -> f64) -> ComplexMatrix {
    let (values, vectors) = eigh(m);
    let mut scaled = vectors.clone();
    for (j, &lambda) in values.iter().enumerate() {
        let s = f(lambda);
        for e in scaled.column_mut(j).iter_mut() {
            *e *= s;
        }
    }
    scaled * vectors.adjoint()
}

fn check_hermitian(m: &ComplexMatrix, tol: f64) -> Result<()> {
    if !m.is_square() {
        return Err(Error::Shape(format!(
            "expected a square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    if !is_finite(m) {
        return Err(Error::NonFinite);
    }
    let deviation = hermitian_deviation(m);
    if deviation > tol * (1.0 + max_abs(m)) {
        return Err(Error::NotHermitian { deviation });
    }
    Ok(())
}

/// Square root of a Hermitian PSD matrix; eigenvalues below `PSD_TOL` are
/// clamped to zero.
pub fn psd_sqrt(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    check_hermitian(m, crate::qcore::tolerances::HERMITIAN_TOL)?;
    Ok(spectral_map(m, |x| if x > PSD_TOL { x.sqrt() } else { 0.0 }))
}

/// Pseudo-inverse square root on the support of `m` and the projector onto
/// that support. Eigenvalues at or below `RANK_TOL` are treated as zero.
pub fn psd_pinv_sqrt(m: &ComplexMatrix) -> (ComplexMatrix, ComplexMatrix) {
    let (values, vectors) = eigh(m);
    let n = m.nrows();
    let mut inv = zeros(n, n);
    let mut support = zeros(n, n);
    for (j, &lambda) in values.iter().enumerate() {
        if lambda > RANK_TOL {
            let v = vectors.column(j).into_owned();
            let p = projector(&v);
            inv += &p * real(1.0 / lambda.sqrt());
            support += p;
        }
    }
    (inv, support)
}

/// Orthonormal basis (as columns) of the eigenspace with eigenvalues above
/// `RANK_TOL`, ordered by decreasing eigenvalue.
pub fn support_isometry(m: &ComplexMatrix) -> ComplexMatrix {
    let (values, vectors) = eigh(m);
    let cols: Vec<usize> = (0..values.len()).rev().filter(|&j| values[j] > RANK_TOL).collect();
    let mut iso = zeros(m.nrows(), cols.len());
    for (c, &j) in cols.iter().enumerate() {
        iso.set_column(c, &vectors.column(j));
    }
    iso
}

pub fn unitarity_deviation(u: &ComplexMatrix) -> f64 {
    if !u.is_square() {
        return f64::INFINITY;
    }
    max_abs_diff(&(u.adjoint() * u), &identity(u.nrows()))
}

/// Transpose of `m` with respect to the orthonormal basis given by the
/// columns of `basis`: `U (U† M U)ᵀ U†`. With `basis = I` this is the plain
/// transpose.
pub fn transpose_in_basis(m: &ComplexMatrix, basis: &ComplexMatrix) -> Result<ComplexMatrix> {
    if basis.nrows() != m.nrows() || !m.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "matrix {}x{} vs basis {}x{}",
            m.nrows(),
            m.ncols(),
            basis.nrows(),
            basis.ncols()
        )));
    }
    let deviation = unitarity_deviation(basis);
    if deviation > UNITARY_TOL {
        return Err(Error::NotUnitary { deviation });
    }
    let in_basis = basis.adjoint() * m * basis;
    Ok(basis * in_basis.transpose() * basis.adjoint())
}

pub fn singular_values(m: &ComplexMatrix) -> DVector<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return DVector::zeros(0);
    }
    m.clone().svd(false, false).singular_values
}

/// Number of singular values strictly above `tol`.
pub fn rank_with_tol(m: &ComplexMatrix, tol: f64) -> usize {
    singular_values(m).iter().filter(|&&s| s > tol).count()
}

/// Rank with the cutoff `1e-8 · σ_max`.
pub fn rank(m: &ComplexMatrix) -> usize {
    let sv = singular_values(m);
    let smax = sv.iter().cloned().fold(0.0, f64::max);
    if smax == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > RANK_TOL * smax).count()
}

/// Computational basis and the discrete Fourier basis
/// `|φ_b⟩ = Σ_a exp(2πi ab/d)/√d |a⟩`, a pair of mutually unbiased bases.
pub fn fourier_mub_pair(d: usize) -> Result<(Vec<ComplexVector>, Vec<ComplexVector>)> {
    if d < 2 {
        return Err(Error::OutOfRange {
            name: "d",
            value: d as f64,
            range: "d >= 2",
        });
    }
    let computational = (0..d).map(|a| ket(d, a)).collect();
    let norm = 1.0 / (d as f64).sqrt();
    let fourier = (0..d)
        .map(|b| {
            ComplexVector::from_fn(d, |a, _| {
                let phase = 2.0 * std::f64::consts::PI * ((a * b) % d) as f64 / d as f64;
                C64::from_polar(norm, phase)
            })
        })
        .collect();
    Ok((computational, fourier))
}

/// Matrix whose columns are the given vectors.
pub fn columns_to_matrix(vectors: &[ComplexVector]) -> ComplexMatrix {
    let rows = vectors.first().map_or(0, |v| v.len());
    let mut m = zeros(rows, vectors.len());
    for (j, v) in vectors.iter().enumerate() {
        m.set_column(j, v);
    }
    m
}

/// Row-major reshape of a vector on `A ⊗ B` into its `dim_a × dim_b`
/// coefficient matrix `ψ_{ij}`.
pub fn coefficient_matrix(psi: &ComplexVector, dim_a: usize, dim_b: usize) -> ComplexMatrix {
    assert_eq!(psi.len(), dim_a * dim_b, "vector length does not match dims");
    ComplexMatrix::from_fn(dim_a, dim_b, |i, j| psi[i * dim_b + j])
}

/// Inverse of [`coefficient_matrix`].
pub fn vectorize(coeffs: &ComplexMatrix) -> ComplexVector {
    let (ra, cb) = coeffs.shape();
    ComplexVector::from_fn(ra * cb, |k, _| coeffs[(k / cb, k % cb)])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pauli_x() -> ComplexMatrix {
        ComplexMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO])
    }

    fn pauli_y() -> ComplexMatrix {
        let i = C64::new(0.0, 1.0);
        ComplexMatrix::from_row_slice(2, 2, &[ZERO, -i, i, ZERO])
    }

    fn diag(values: &[f64]) -> ComplexMatrix {
        ComplexMatrix::from_diagonal(&DVector::from_iterator(
            values.len(),
            values.iter().map(|&x| real(x)),
        ))
    }

    fn phi_plus(d: usize) -> ComplexVector {
        let mut v = ComplexVector::zeros(d * d);
        for i in 0..d {
            v[i * d + i] = real(1.0 / (d as f64).sqrt());
        }
        v
    }

    #[test]
    fn tensor_identities_and_projectors() {
        assert_eq!(tensor(&identity(2), &identity(2)), identity(4));
        assert_eq!(
            tensor(&diag(&[1.0, 0.0]), &diag(&[0.0, 1.0])),
            diag(&[0.0, 1.0, 0.0, 0.0])
        );
    }

    #[test]
    fn xx_stabilises_phi_plus() {
        let xx = tensor(&pauli_x(), &pauli_x());
        let v = phi_plus(2);
        let out = &xx * &v;
        assert!((out - v).norm() < 1e-15);
    }

    #[test]
    fn partial_trace_of_phi_plus_is_maximally_mixed() {
        let rho = projector(&phi_plus(2));
        let b = partial_trace_matrix(&rho, 2, 2, Subsystem::B).unwrap();
        assert!(max_abs_diff(&b, &(identity(2) * real(0.5))) < 1e-15);
    }

    #[test]
    fn partial_trace_of_product_returns_factor() {
        let rho = diag(&[0.7, 0.3]);
        let tau = diag(&[0.2, 0.5, 0.3]);
        let prod = tensor(&rho, &tau);
        let a = partial_trace_matrix(&prod, 2, 3, Subsystem::A).unwrap();
        let b = partial_trace_matrix(&prod, 2, 3, Subsystem::B).unwrap();
        assert!(max_abs_diff(&a, &rho) < 1e-12);
        assert!(max_abs_diff(&b, &tau) < 1e-12);
    }

    #[test]
    fn partial_trace_rejects_bad_dims() {
        assert!(partial_trace_matrix(&identity(5), 2, 2, Subsystem::A).is_err());
    }

    #[test]
    fn psd_sqrt_examples() {
        assert!(max_abs_diff(&psd_sqrt(&identity(3)).unwrap(), &identity(3)) < 1e-14);
        let s = psd_sqrt(&diag(&[4.0, 9.0])).unwrap();
        assert!(max_abs_diff(&s, &diag(&[2.0, 3.0])) < 1e-13);
        let bad = ComplexMatrix::from_row_slice(2, 2, &[ONE, ONE, ZERO, ONE]);
        assert!(matches!(psd_sqrt(&bad), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn pinv_sqrt_examples() {
        let (inv, p) = psd_pinv_sqrt(&(identity(3) * real(1.0 / 3.0)));
        assert!(max_abs_diff(&inv, &(identity(3) * real(3f64.sqrt()))) < 1e-12);
        assert!(max_abs_diff(&p, &identity(3)) < 1e-12);

        let (inv, p) = psd_pinv_sqrt(&diag(&[4.0, 0.0]));
        assert!(max_abs_diff(&inv, &diag(&[0.5, 0.0])) < 1e-14);
        assert!(max_abs_diff(&p, &diag(&[1.0, 0.0])) < 1e-14);
    }

    #[test]
    fn transpose_examples() {
        let y = pauli_y();
        let t = transpose_in_basis(&y, &identity(2)).unwrap();
        assert!(max_abs_diff(&t, &(-y.clone())) < 1e-15);
        let tt = transpose_in_basis(&t, &identity(2)).unwrap();
        assert!(max_abs_diff(&tt, &y) < 1e-15);
        let not_unitary = diag(&[1.0, 2.0]);
        assert!(matches!(
            transpose_in_basis(&y, &not_unitary),
            Err(Error::NotUnitary { .. })
        ));
    }

    #[test]
    fn transpose_in_own_eigenbasis_is_identity_map() {
        let i = C64::new(0.0, 1.0);
        let rho = ComplexMatrix::from_row_slice(
            2,
            2,
            &[real(0.6), real(0.1) + i * 0.2, real(0.1) - i * 0.2, real(0.4)],
        );
        let (_, basis) = eigh(&rho);
        let t = transpose_in_basis(&rho, &basis).unwrap();
        assert!(max_abs_diff(&t, &rho) < 1e-14);
        let s = psd_sqrt(&rho).unwrap();
        let ts = transpose_in_basis(&s, &basis).unwrap();
        assert!(max_abs_diff(&ts, &s) < 1e-14);
        // computational transpose does not fix a complex ρ
        assert!(max_abs_diff(&rho.transpose(), &rho) > 0.1);
    }

    #[test]
    fn rank_examples() {
        assert_eq!(rank(&identity(4)), 4);
        assert_eq!(rank_with_tol(&identity(4), 1e-8), 4);
        assert_eq!(rank(&outer(&ket(2, 0), &ket(2, 1))), 1);
        assert_eq!(rank(&zeros(3, 3)), 0);
    }

    #[test]
    fn fourier_pair_qubit_is_hadamard_basis() {
        let (comp, four) = fourier_mub_pair(2).unwrap();
        assert_eq!(comp[0], ket(2, 0));
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((four[0][0] - real(h)).norm() < 1e-15 && (four[0][1] - real(h)).norm() < 1e-15);
        assert!((four[1][0] - real(h)).norm() < 1e-15 && (four[1][1] + real(h)).norm() < 1e-15);
        assert!(fourier_mub_pair(1).is_err());
    }

    #[test]
    fn fourier_pair_is_unbiased_and_complete() {
        for d in 2..=8 {
            let (comp, four) = fourier_mub_pair(d).unwrap();
            for a in &comp {
                for b in &four {
                    let overlap = a.dotc(b).norm_sqr();
                    assert!((overlap - 1.0 / d as f64).abs() < 1e-12, "d={d}");
                }
            }
            for basis in [&comp, &four] {
                let sum = basis.iter().fold(zeros(d, d), |acc, v| acc + projector(v));
                assert!(max_abs_diff(&sum, &identity(d)) < 1e-12);
            }
        }
    }

    #[test]
    fn coefficient_matrix_roundtrip() {
        let psi = ComplexVector::from_fn(6, |k, _| C64::new(k as f64, -(k as f64)));
        let c = coefficient_matrix(&psi, 2, 3);
        assert_eq!(c[(1, 2)], psi[5]);
        assert_eq!(vectorize(&c), psi);
    }

    #[test]
    fn partial_transpose_of_phi_plus_is_swap() {
        let rho = projector(&phi_plus(2));
        let pt = partial_transpose_b(&rho, 2, 2);
        let ev = eigenvalues_h(&pt);
        assert!((ev[0] + 0.5).abs() < 1e-14);
    }
}
