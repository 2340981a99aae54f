//! Small numeric helpers shared by the solvers.

use nalgebra::DMatrix;
use num_complex::Complex64;

/// `ln(1 + e)` without cancellation for small `|e|`.
pub fn clog1p(e: Complex64) -> Complex64 {
    let (a, b) = (e.re, e.im);
    // |1 + e|^2 - 1 = 2a + a^2 + b^2
    let re = 0.5 * (2.0 * a + a * a + b * b).ln_1p();
    let im = b.atan2(1.0 + a);
    Complex64::new(re, im)
}

/// `exp(u) - 1` without cancellation for small `|u|`.
pub fn cexpm1(u: Complex64) -> Complex64 {
    let (x, y) = (u.re, u.im);
    let half_sin = (0.5 * y).sin();
    let cos_m1 = -2.0 * half_sin * half_sin;
    let em1 = x.exp_m1();
    Complex64::new(em1 * y.cos() + cos_m1, x.exp() * y.sin())
}

/// `exp(2 pi i k / n)`.
pub fn root_of_unity(k: i64, n: usize) -> Complex64 {
    let k = k.rem_euclid(n as i64);
    Complex64::from_polar(1.0, std::f64::consts::TAU * k as f64 / n as f64)
}

/// Eigenvalues of a dense complex matrix via the Schur decomposition.
pub fn dense_eigenvalues(m: &DMatrix<Complex64>) -> Option<Vec<Complex64>> {
    let schur = nalgebra::linalg::Schur::try_new(m.clone(), 1e-15, 10_000)?;
    schur.eigenvalues().map(|ev| ev.iter().copied().collect())
}

/// Eigenvalue with the largest real part; ties go to the smaller `|Im|`.
pub fn max_real_part(values: &[Complex64]) -> Option<Complex64> {
    values.iter().copied().fold(None, |best, z| match best {
        None => Some(z),
        Some(b) => {
            let tie = (z.re - b.re).abs() <= 1e-14;
            if (!tie && z.re > b.re) || (tie && z.im.abs() < b.im.abs()) {
                Some(z)
            } else {
                Some(b)
            }
        }
    })
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope(points: &[(f64, f64)]) -> f64 {
    let m = points.len() as f64;
    let (lx, ly): (Vec<f64>, Vec<f64>) = points.iter().map(|&(x, y)| (x.ln(), y.ln())).unzip();
    let mx = lx.iter().sum::<f64>() / m;
    let my = ly.iter().sum::<f64>() / m;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log1p_and_expm1_agree_with_naive_at_moderate_size() {
        for e in [Complex64::new(0.3, -0.2), Complex64::new(-0.1, 0.4)] {
            assert!((clog1p(e) - (Complex64::new(1.0, 0.0) + e).ln()).norm() < 1e-15);
            assert!((cexpm1(e) - (e.exp() - 1.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn tiny_arguments_keep_relative_precision() {
        let e = Complex64::new(-3e-13, 2e-12);
        let l = clog1p(e);
        // ln(1+e) = e - e^2/2 + ..., with e^2 far below rounding here
        assert!(((l - e) / e).norm() < 1e-11);
        let u = cexpm1(e);
        assert!(((u - e) / e).norm() < 1e-11);
    }

    #[test]
    fn eigenvalues_of_triangular_matrix() {
        let m = DMatrix::from_row_slice(
            2,
            2,
            &[
                Complex64::new(2.0, 1.0),
                Complex64::new(5.0, 0.0),
                Complex64::new(0.0, 0.0),
                Complex64::new(-1.0, 0.0),
            ],
        );
        let ev = dense_eigenvalues(&m).unwrap();
        let top = max_real_part(&ev).unwrap();
        assert!((top - Complex64::new(2.0, 1.0)).norm() < 1e-12);
    }

    #[test]
    fn slope_of_power_law() {
        let pts: Vec<_> = [2.0, 4.0, 8.0]
            .iter()
            .map(|&x: &f64| (x, 3.0 * x.powi(3)))
            .collect();
        assert!((loglog_slope(&pts) - 3.0).abs() < 1e-12);
    }
}
