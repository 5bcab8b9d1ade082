use nalgebra::{DMatrix, DVector};

use crate::problem::max_asymmetry;
use crate::LmiError;

/// Eigenvalues of a symmetric matrix, ascending.
pub fn sym_eigenvalues(m: &DMatrix<f64>) -> Vec<f64> {
    let mut ev: Vec<f64> = m
        .clone()
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .copied()
        .collect();
    ev.sort_by(f64::total_cmp);
    ev
}

/// Tests `lambda_min(M) >= margin` for a symmetric matrix and returns the
/// smallest eigenvalue alongside the verdict.
pub fn check_psd(m: &DMatrix<f64>, margin: f64) -> Result<(bool, f64), LmiError> {
    if m.nrows() != m.ncols() {
        return Err(LmiError::Malformed("check_psd needs a square matrix".into()));
    }
    let asym = max_asymmetry(m);
    if asym > 1e-10 {
        return Err(LmiError::NotSymmetric(asym));
    }
    let min_eig = sym_eigenvalues(m)[0];
    Ok((min_eig >= margin, min_eig))
}

/// Projects a symmetric matrix onto `{ M : M >= floor * I }` by clipping
/// its eigenvalues from below.
pub fn closest_psd(m: &DMatrix<f64>, floor: f64) -> DMatrix<f64> {
    let eig = m.clone().symmetric_eigen();
    let clipped = DVector::from_iterator(
        eig.eigenvalues.len(),
        eig.eigenvalues.iter().map(|&l| l.max(floor)),
    );
    &eig.eigenvectors * DMatrix::from_diagonal(&clipped) * eig.eigenvectors.transpose()
}

/// Packs the upper triangle of a symmetric matrix into a vector, scaling
/// off-diagonal entries by sqrt(2) so Frobenius inner products carry over.
pub fn svec_into(m: &DMatrix<f64>, out: &mut [f64]) {
    let n = m.nrows();
    let mut k = 0;
    for j in 0..n {
        for i in 0..=j {
            out[k] = if i == j {
                m[(i, i)]
            } else {
                std::f64::consts::SQRT_2 * m[(i, j)]
            };
            k += 1;
        }
    }
    debug_assert_eq!(k, n * (n + 1) / 2);
}

/// Inverse of [`svec_into`].
pub fn smat_from(v: &[f64], n: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(n, n);
    let mut k = 0;
    for j in 0..n {
        for i in 0..=j {
            if i == j {
                m[(i, i)] = v[k];
            } else {
                let x = v[k] / std::f64::consts::SQRT_2;
                m[(i, j)] = x;
                m[(j, i)] = x;
            }
            k += 1;
        }
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn check_psd_identity() {
        let (ok, min_eig) = check_psd(&DMatrix::identity(3, 3), 0.5).unwrap();
        assert!(ok);
        assert_relative_eq!(min_eig, 1.0, max_relative = 1e-12);
    }

    #[test]
    fn check_psd_indefinite_diag() {
        let m = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, -0.1]));
        let (ok, min_eig) = check_psd(&m, 0.0).unwrap();
        assert!(!ok);
        assert_relative_eq!(min_eig, -0.1, max_relative = 1e-12);
    }

    #[test]
    fn check_psd_rejects_asymmetric() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 1.0]);
        assert!(matches!(check_psd(&m, 0.0), Err(LmiError::NotSymmetric(_))));
    }

    /// Eigenvalues of a symmetric 3x3 via the trigonometric closed form,
    /// used as an oracle independent of the library eigensolver.
    fn eig3_closed_form(m: &DMatrix<f64>) -> [f64; 3] {
        let (a, b, c) = (m[(0, 0)], m[(1, 1)], m[(2, 2)]);
        let (d, e, f) = (m[(0, 1)], m[(0, 2)], m[(1, 2)]);
        let q = (a + b + c) / 3.0;
        let p2 = (a - q).powi(2) + (b - q).powi(2) + (c - q).powi(2)
            + 2.0 * (d * d + e * e + f * f);
        let p = (p2 / 6.0).sqrt();
        if p < 1e-300 {
            return [q, q, q];
        }
        let bm = m.map(|x| x) - DMatrix::identity(3, 3) * q;
        let det_b = bm[(0, 0)] * (bm[(1, 1)] * bm[(2, 2)] - bm[(1, 2)] * bm[(2, 1)])
            - bm[(0, 1)] * (bm[(1, 0)] * bm[(2, 2)] - bm[(1, 2)] * bm[(2, 0)])
            + bm[(0, 2)] * (bm[(1, 0)] * bm[(2, 1)] - bm[(1, 1)] * bm[(2, 0)]);
        let r = (det_b / (2.0 * p * p * p)).clamp(-1.0, 1.0);
        let phi = r.acos() / 3.0;
        let l1 = q + 2.0 * p * phi.cos();
        let l3 = q + 2.0 * p * (phi + 2.0 * std::f64::consts::FRAC_PI_3).cos();
        let l2 = 3.0 * q - l1 - l3;
        let mut ev = [l1, l2, l3];
        ev.sort_by(f64::total_cmp);
        ev
    }

    #[test]
    fn min_eig_matches_closed_form_oracle_3x3() {
        let mut seed = 0x5eed_u64;
        let mut next = move || {
            seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((seed >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
        };
        for _ in 0..50 {
            let a = DMatrix::from_fn(3, 3, |_, _| next());
            let m = &a * a.transpose() + DMatrix::identity(3, 3) * 0.01;
            let oracle = eig3_closed_form(&m);
            let (ok, min_eig) = check_psd(&m, 0.0).unwrap();
            assert!(ok);
            assert!(min_eig >= 0.01 - 1e-12);
            assert_relative_eq!(min_eig, oracle[0], max_relative = 1e-8, epsilon = 1e-10);
        }
    }

    #[test]
    fn svec_round_trip_preserves_inner_product() {
        let a = DMatrix::from_row_slice(3, 3, &[2.0, 1.0, 0.5, 1.0, 3.0, -1.0, 0.5, -1.0, 4.0]);
        let b = DMatrix::from_row_slice(3, 3, &[1.0, 0.2, 0.0, 0.2, 2.0, 0.3, 0.0, 0.3, 1.5]);
        let mut va = vec![0.0; 6];
        let mut vb = vec![0.0; 6];
        svec_into(&a, &mut va);
        svec_into(&b, &mut vb);
        let dot: f64 = va.iter().zip(&vb).map(|(x, y)| x * y).sum();
        let frob = (a.transpose() * &b).trace();
        assert_relative_eq!(dot, frob, max_relative = 1e-12);
        assert_relative_eq!((smat_from(&va, 3) - a).norm(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn closest_psd_clips_negative_modes() {
        let m = DMatrix::from_diagonal(&DVector::from_vec(vec![5.0, -5.0]));
        let p = closest_psd(&m, 0.0);
        let (ok, min_eig) = check_psd(&p, 0.0).unwrap();
        assert!(ok);
        assert!(min_eig >= -1e-12);
        assert_relative_eq!(p[(0, 0)], 5.0, max_relative = 1e-12);
        assert_relative_eq!(p[(1, 1)], 0.0, epsilon = 1e-12);
    }
}
