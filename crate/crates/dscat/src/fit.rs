//! Small dense least-squares and search utilities shared by the
//! asymptotic-fit paths.

use num_complex::Complex64;

/// Result of a linear fit of samples against a few frame columns.
#[derive(Debug, Clone)]
pub struct LinearFit {
    pub coeffs: Vec<f64>,
    /// Root-mean-square residual.
    pub residual: f64,
    /// 2-norm condition number estimate of the design matrix.
    pub cond: f64,
}

/// Least squares `min ||A c - b||` for a handful of columns, via the normal
/// equations; the condition estimate comes from the Gram matrix spectrum.
pub fn lstsq(columns: &[Vec<f64>], rhs: &[f64]) -> LinearFit {
    let ncol = columns.len();
    let m = rhs.len();
    let mut gram = vec![vec![0.0; ncol]; ncol];
    let mut atb = vec![0.0; ncol];
    for (i, ci) in columns.iter().enumerate() {
        for (j, cj) in columns.iter().enumerate() {
            gram[i][j] = ci.iter().zip(cj).map(|(a, b)| a * b).sum();
        }
        atb[i] = ci.iter().zip(rhs).map(|(a, b)| a * b).sum();
    }
    let eigs = sym_eigenvalues(&gram);
    let max_e = eigs.iter().cloned().fold(0.0, f64::max);
    let min_e = eigs.iter().cloned().fold(f64::INFINITY, f64::min).max(0.0);
    let cond = if min_e > 0.0 { (max_e / min_e).sqrt() } else { f64::INFINITY };

    let coeffs = solve_dense(gram, atb);
    let mut ss = 0.0;
    for row in 0..m {
        let mut pred = 0.0;
        for (c, col) in coeffs.iter().zip(columns) {
            pred += c * col[row];
        }
        ss += (rhs[row] - pred).powi(2);
    }
    LinearFit { coeffs, residual: (ss / m as f64).sqrt(), cond }
}

fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs())).unwrap();
        a.swap(col, piv);
        b.swap(col, piv);
        let d = a[col][col];
        if d == 0.0 {
            continue;
        }
        for row in 0..n {
            if row == col {
                continue;
            }
            let f = a[row][col] / d;
            for k in col..n {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    (0..n).map(|i| if a[i][i] != 0.0 { b[i] / a[i][i] } else { 0.0 }).collect()
}

/// Eigenvalues of a small symmetric matrix by cyclic Jacobi rotations.
pub fn sym_eigenvalues(a: &[Vec<f64>]) -> Vec<f64> {
    let n = a.len();
    let mut m: Vec<Vec<f64>> = a.to_vec();
    for _sweep in 0..64 {
        let mut off = 0.0;
        for i in 0..n {
            for j in i + 1..n {
                off += m[i][j] * m[i][j];
            }
        }
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if m[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = 0.5 * (m[q][q] - m[p][p]) / m[p][q];
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (mpk, mqk) = (m[p][k], m[q][k]);
                    m[p][k] = c * mpk - s * mqk;
                    m[q][k] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let (mkp, mkq) = (m[k][p], m[k][q]);
                    m[k][p] = c * mkp - s * mkq;
                    m[k][q] = s * mkp + c * mkq;
                }
            }
        }
    }
    (0..n).map(|i| m[i][i]).collect()
}

/// Solve the complex 2x2 system `a c = b`; returns the solution and the
/// 2-norm condition number of `a`.
pub fn solve2c(a: [[Complex64; 2]; 2], b: [Complex64; 2]) -> ([Complex64; 2], f64) {
    let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
    let c0 = (b[0] * a[1][1] - b[1] * a[0][1]) / det;
    let c1 = (a[0][0] * b[1] - a[1][0] * b[0]) / det;
    // singular values from the 2x2 Hermitian Gram matrix
    let g00 = a[0][0].norm_sqr() + a[1][0].norm_sqr();
    let g11 = a[0][1].norm_sqr() + a[1][1].norm_sqr();
    let g01 = (a[0][0].conj() * a[0][1] + a[1][0].conj() * a[1][1]).norm();
    let tr = g00 + g11;
    let d = ((g00 - g11).powi(2) + 4.0 * g01 * g01).sqrt();
    let s_max = (0.5 * (tr + d)).sqrt();
    let s_min = (0.5 * (tr - d)).max(0.0).sqrt();
    let cond = if s_min > 0.0 { s_max / s_min } else { f64::INFINITY };
    ([c0, c1], cond)
}

/// Derivative-free 2-d minimization (Nelder-Mead), returning the best
/// point and value.
pub fn nelder_mead_2d<F: Fn(f64, f64) -> f64>(
    f: F,
    start: (f64, f64),
    scale: f64,
    iters: usize,
) -> (f64, f64, f64) {
    let mut simplex = [
        (start.0, start.1),
        (start.0 + scale, start.1),
        (start.0, start.1 + scale),
    ];
    let mut vals = simplex.map(|(a, b)| f(a, b));
    for _ in 0..iters {
        // order: best, mid, worst
        let mut idx = [0, 1, 2];
        idx.sort_by(|&i, &j| vals[i].total_cmp(&vals[j]));
        let (b, m, w) = (idx[0], idx[1], idx[2]);
        let cen = (
            0.5 * (simplex[b].0 + simplex[m].0),
            0.5 * (simplex[b].1 + simplex[m].1),
        );
        let refl = (2.0 * cen.0 - simplex[w].0, 2.0 * cen.1 - simplex[w].1);
        let fr = f(refl.0, refl.1);
        if fr < vals[b] {
            let exp = (3.0 * cen.0 - 2.0 * simplex[w].0, 3.0 * cen.1 - 2.0 * simplex[w].1);
            let fe = f(exp.0, exp.1);
            if fe < fr {
                simplex[w] = exp;
                vals[w] = fe;
            } else {
                simplex[w] = refl;
                vals[w] = fr;
            }
        } else if fr < vals[m] {
            simplex[w] = refl;
            vals[w] = fr;
        } else {
            let con = (
                0.5 * (cen.0 + simplex[w].0),
                0.5 * (cen.1 + simplex[w].1),
            );
            let fc = f(con.0, con.1);
            if fc < vals[w] {
                simplex[w] = con;
                vals[w] = fc;
            } else {
                for i in [m, w] {
                    simplex[i] = (
                        0.5 * (simplex[i].0 + simplex[b].0),
                        0.5 * (simplex[i].1 + simplex[b].1),
                    );
                    vals[i] = f(simplex[i].0, simplex[i].1);
                }
            }
        }
    }
    let mut best = 0;
    for i in 1..3 {
        if vals[i] < vals[best] {
            best = i;
        }
    }
    (simplex[best].0, simplex[best].1, vals[best])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_plane_coefficients() {
        let xs: Vec<f64> = (0..40).map(|i| i as f64 / 10.0).collect();
        let c1: Vec<f64> = xs.iter().map(|_| 1.0).collect();
        let c2: Vec<f64> = xs.clone();
        let rhs: Vec<f64> = xs.iter().map(|x| 3.0 - 2.0 * x).collect();
        let fit = lstsq(&[c1, c2], &rhs);
        assert!((fit.coeffs[0] - 3.0).abs() < 1e-12);
        assert!((fit.coeffs[1] + 2.0).abs() < 1e-12);
        assert!(fit.residual < 1e-12);
        assert!(fit.cond.is_finite());
    }

    #[test]
    fn complex_2x2() {
        let a = [
            [Complex64::new(1.0, 0.5), Complex64::new(0.0, -1.0)],
            [Complex64::new(2.0, 0.0), Complex64::new(1.0, 1.0)],
        ];
        let want = [Complex64::new(0.3, -0.2), Complex64::new(1.1, 0.7)];
        let b = [
            a[0][0] * want[0] + a[0][1] * want[1],
            a[1][0] * want[0] + a[1][1] * want[1],
        ];
        let (got, cond) = solve2c(a, b);
        assert!((got[0] - want[0]).norm() < 1e-13);
        assert!((got[1] - want[1]).norm() < 1e-13);
        assert!(cond > 1.0 && cond < 1e3);
    }

    #[test]
    fn nelder_mead_finds_quadratic_minimum() {
        let (x, y, v) = nelder_mead_2d(
            |x, y| (x - 1.5) * (x - 1.5) + 3.0 * (y + 0.25) * (y + 0.25),
            (0.0, 0.0),
            0.5,
            200,
        );
        assert!((x - 1.5).abs() < 1e-6);
        assert!((y + 0.25).abs() < 1e-6);
        assert!(v < 1e-10);
    }
}
