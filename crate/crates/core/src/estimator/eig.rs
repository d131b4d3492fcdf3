//! Cyclic Jacobi eigensolver for small complex Hermitian matrices.
//!
//! Each rotation first removes the phase of the pivot `a_pq` with a diagonal
//! unitary, then applies the classic real symmetric Jacobi rotation.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

const MAX_SWEEPS: usize = 64;

/// Relative asymmetry accepted as Hermitian.
pub const HERMITIAN_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct EigenDecomposition {
    /// Eigenvalues in descending order.
    pub values: Vec<f64>,
    /// Orthonormal eigenvectors, column `i` pairs with `values[i]`.
    pub vectors: DMatrix<Complex64>,
}

impl EigenDecomposition {
    /// Columns `sources..N`.
    pub fn noise_subspace(&self, sources: usize) -> DMatrix<Complex64> {
        let n = self.vectors.ncols();
        self.vectors.columns(sources.min(n), n - sources.min(n)).into_owned()
    }

    pub fn reconstruct(&self) -> DMatrix<Complex64> {
        let mut scaled = self.vectors.clone();
        for (j, &l) in self.values.iter().enumerate() {
            scaled.column_mut(j).scale_mut(l);
        }
        &scaled * self.vectors.adjoint()
    }
}

pub fn hermitian_eig(m: &DMatrix<Complex64>) -> Result<EigenDecomposition> {
    let n = m.nrows();
    if n != m.ncols() {
        return Err(Error::domain(format!("matrix is {}x{}, not square", m.nrows(), m.ncols())));
    }
    if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::Numerical("non-finite matrix entry".into()));
    }
    let norm = m.norm();
    let asym = (m - m.adjoint()).norm();
    if asym > HERMITIAN_TOLERANCE * norm {
        return Err(Error::NotHermitian(if norm > 0.0 { asym / norm } else { asym }));
    }

    let mut a = m.clone();
    // symmetrize and make the diagonal exactly real
    for i in 0..n {
        a[(i, i)] = Complex64::new(a[(i, i)].re, 0.0);
        for j in i + 1..n {
            let avg = 0.5 * (a[(i, j)] + a[(j, i)].conj());
            a[(i, j)] = avg;
            a[(j, i)] = avg.conj();
        }
    }
    let mut v = DMatrix::<Complex64>::identity(n, n);

    let off = |a: &DMatrix<Complex64>| {
        let mut s = 0.0;
        for i in 0..n {
            for j in i + 1..n {
                s += a[(i, j)].norm_sqr();
            }
        }
        s.sqrt()
    };
    let threshold = n as f64 * f64::EPSILON * norm;

    let mut sweeps = 0;
    let mut residual = off(&a);
    while residual > threshold {
        if sweeps == MAX_SWEEPS {
            return Err(Error::Numerical(format!("Jacobi did not converge in {MAX_SWEEPS} sweeps")));
        }
        sweeps += 1;
        for p in 0..n {
            for q in p + 1..n {
                rotate(&mut a, &mut v, p, q);
            }
        }
        let next = off(&a);
        // rounding floor reached
        if next >= residual {
            break;
        }
        residual = next;
    }

    let mut order: Vec<usize> = (0..n).collect();
    let diag: Vec<f64> = (0..n).map(|i| a[(i, i)].re).collect();
    order.sort_by(|&i, &j| diag[j].total_cmp(&diag[i]).then(i.cmp(&j)));
    let values = order.iter().map(|&i| diag[i]).collect();
    let vectors = DMatrix::from_fn(n, n, |r, c| v[(r, order[c])]);
    Ok(EigenDecomposition { values, vectors })
}

/// Zeroes `a[p][q]` with `a ← Wᴴ a W`, accumulating `v ← v W`.
fn rotate(a: &mut DMatrix<Complex64>, v: &mut DMatrix<Complex64>, p: usize, q: usize) {
    let apq = a[(p, q)];
    let mag = apq.norm();
    if mag == 0.0 {
        return;
    }
    let phase = apq / mag;
    let app = a[(p, p)].re;
    let aqq = a[(q, q)].re;
    let theta = (aqq - app) / (2.0 * mag);
    let t =
        if theta.abs() > 1e150 { 0.5 / theta } else { theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt()) };
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;

    // W = diag(1, conj(phase)) · [[c, s], [-s, c]]
    let w_pp = Complex64::new(c, 0.0);
    let w_pq = Complex64::new(s, 0.0);
    let w_qp = -phase.conj() * s;
    let w_qq = phase.conj() * c;

    let n = a.nrows();
    // a ← a W
    for k in 0..n {
        let akp = a[(k, p)];
        let akq = a[(k, q)];
        a[(k, p)] = akp * w_pp + akq * w_qp;
        a[(k, q)] = akp * w_pq + akq * w_qq;
    }
    // a ← Wᴴ a
    for k in 0..n {
        let apk = a[(p, k)];
        let aqk = a[(q, k)];
        a[(p, k)] = w_pp.conj() * apk + w_qp.conj() * aqk;
        a[(q, k)] = w_pq.conj() * apk + w_qq.conj() * aqk;
    }
    a[(p, q)] = Complex64::new(0.0, 0.0);
    a[(q, p)] = Complex64::new(0.0, 0.0);
    a[(p, p)] = Complex64::new(a[(p, p)].re, 0.0);
    a[(q, q)] = Complex64::new(a[(q, q)].re, 0.0);

    for k in 0..n {
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = vkp * w_pp + vkq * w_qp;
        v[(k, q)] = vkp * w_pq + vkq * w_qq;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DVector;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random_hermitian(n: usize, rng: &mut impl Rng) -> DMatrix<Complex64> {
        let g = DMatrix::from_fn(n, n, |_, _| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
        (&g + g.adjoint()) * c(0.5, 0.0)
    }

    fn check(m: &DMatrix<Complex64>, e: &EigenDecomposition) {
        let n = m.nrows();
        let rec = (e.reconstruct() - m).norm() / m.norm().max(f64::MIN_POSITIVE);
        assert!(rec < 1e-10, "reconstruction {rec:e}");
        let gram = e.vectors.adjoint() * &e.vectors - DMatrix::identity(n, n);
        assert!(gram.norm() < 1e-10, "orthonormality {:e}", gram.norm());
        assert!(e.values.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn diagonal() {
        let m = DMatrix::from_diagonal(&DVector::from_vec(vec![c(1.0, 0.0), c(2.0, 0.0)]));
        let e = hermitian_eig(&m).unwrap();
        assert_eq!(e.values, vec![2.0, 1.0]);
        assert_eq!(e.vectors[(1, 0)].norm(), 1.0);
        assert_eq!(e.vectors[(0, 1)].norm(), 1.0);
    }

    #[test]
    fn rank_one_outer_product() {
        let y = DVector::from_vec(vec![c(1.0, 2.0), c(-0.5, 0.3), c(0.0, -1.0), c(2.0, 0.0)]);
        let m = &y * y.adjoint();
        let e = hermitian_eig(&m).unwrap();
        check(&m, &e);
        assert!((e.values[0] - y.norm_squared()).abs() < 1e-12 * y.norm_squared());
        for &l in &e.values[1..] {
            assert!(l.abs() < 1e-12 * y.norm_squared());
        }
        let top = e.vectors.column(0);
        let overlap = (top.adjoint() * &y)[(0, 0)].norm() / y.norm();
        assert!((overlap - 1.0).abs() < 1e-12);
    }

    #[test]
    fn random_eight_by_eight() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..50 {
            let m = random_hermitian(8, &mut rng);
            check(&m, &hermitian_eig(&m).unwrap());
        }
    }

    #[test]
    fn tiny_scale_covariance() {
        // covariance entries near 1e-38, typical of received pulse spectra
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let y = DVector::from_fn(8, |_, _| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)) * 1e-19);
        let m = &y * y.adjoint();
        let e = hermitian_eig(&m).unwrap();
        check(&m, &e);
        assert!(e.values.iter().all(|&l| l >= -1e-12 * e.values[0]));
    }

    #[test]
    fn zero_matrix() {
        let m = DMatrix::<Complex64>::zeros(4, 4);
        let e = hermitian_eig(&m).unwrap();
        assert!(e.values.iter().all(|&l| l == 0.0));
    }

    #[test]
    fn rejects_non_hermitian() {
        let mut m = DMatrix::<Complex64>::identity(3, 3);
        m[(0, 1)] = c(0.5, 0.0);
        assert!(matches!(hermitian_eig(&m), Err(Error::NotHermitian(_))));
        assert!(hermitian_eig(&DMatrix::<Complex64>::zeros(2, 3)).is_err());
    }

    #[test]
    fn noise_subspace_is_complement() {
        let y = DVector::from_vec(vec![c(1.0, 0.0), c(0.0, 1.0), c(-1.0, 0.0)]);
        let e = hermitian_eig(&(&y * y.adjoint())).unwrap();
        let en = e.noise_subspace(1);
        assert_eq!(en.ncols(), 2);
        assert!((en.adjoint() * &y).norm() < 1e-12);
    }
}
