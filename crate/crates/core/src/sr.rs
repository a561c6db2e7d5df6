//! SR decomposition `A = S·R` by symplectic Gram–Schmidt.
//!
//! Columns are processed in pairs `(a_j, a_{k+j})`. Each pair is made
//! J-orthogonal to all previous pairs (two passes of modified
//! Gram–Schmidt) and then scaled so that `u_jᵀ J v_j = 1` with
//! `r_{j,j} > 0`. The resulting `R` satisfies `P R Pᵀ` upper triangular
//! for the interleaving permutation `P`, with a zero in position
//! `(2j−1, 2j)` of the interleaved block and `|r_{2j,2j}| = r_{2j−1,2j−1}`.

use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// Relative pivot size below which the factorization is declared broken.
pub const SR_BREAKDOWN_TOL: f64 = 1e-13;

/// Symplectic factor `S` (2n×2k) and triangular-class factor `R` (2k×2k).
#[derive(Debug, Clone, PartialEq)]
pub struct SrFactors {
    pub s: Matrix,
    pub r: Matrix,
}

impl SrFactors {
    pub fn reconstruct(&self) -> Matrix {
        &self.s * &self.r
    }
}

/// `wᵀ J v` for vectors of even length with `J = [0 I; −I 0]`.
fn omega_form(w: &[f64], v: &[f64]) -> f64 {
    let n = w.len() / 2;
    let mut acc = 0.0;
    for i in 0..n {
        acc += w[i] * v[n + i] - w[n + i] * v[i];
    }
    acc
}

fn axpy(y: &mut [f64], a: f64, x: &[f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

/// Computes the SR decomposition of a full-rank `2n×2k` matrix.
pub fn sr_decompose(a: &Matrix) -> Result<SrFactors> {
    let rows = a.nrows();
    let cols = a.ncols();
    if rows % 2 != 0 || cols % 2 != 0 || cols > rows || cols == 0 {
        return Err(Error::Dimension(format!(
            "SR decomposition needs a 2n x 2k matrix with k <= n, got {rows}x{cols}"
        )));
    }
    if a.iter().any(|v| !v.is_finite()) {
        return Err(Error::Invariant("non-finite entry in SR input".into()));
    }
    let k = cols / 2;
    let scale = a.norm();
    let mut s = a.clone();
    let mut r = Matrix::zeros(cols, cols);

    for j in 0..k {
        let mut aj: Vec<f64> = s.column(j).iter().copied().collect();
        let mut bj: Vec<f64> = s.column(k + j).iter().copied().collect();
        for _pass in 0..2 {
            for i in 0..j {
                let ui: Vec<f64> = s.column(i).iter().copied().collect();
                let vi: Vec<f64> = s.column(k + i).iter().copied().collect();
                for (w, col) in [(&mut aj, j), (&mut bj, k + j)] {
                    let alpha = omega_form(w, &vi);
                    let beta = omega_form(&ui, w);
                    axpy(w, -alpha, &ui);
                    axpy(w, -beta, &vi);
                    r[(i, col)] += alpha;
                    r[(k + i, col)] += beta;
                }
            }
        }
        let p = omega_form(&aj, &bj);
        let r11 = p.abs().sqrt();
        if !(r11 >= SR_BREAKDOWN_TOL * scale) || scale == 0.0 {
            return Err(Error::SrBreakdown {
                pair: j,
                pivot: r11,
            });
        }
        let r22 = if p >= 0.0 { r11 } else { -r11 };
        r[(j, j)] = r11;
        r[(k + j, k + j)] = r22;
        for (row, (x, y)) in aj.iter().zip(&bj).enumerate() {
            s[(row, j)] = x / r11;
            s[(row, k + j)] = y / r22;
        }
    }
    Ok(SrFactors { s, r })
}

/// The permutation `P_{2k} = [e_1, e_3, …, e_{2k−1}, e_2, …, e_{2k}]`.
pub fn interleave_permutation(k: usize) -> Matrix {
    let mut p = Matrix::zeros(2 * k, 2 * k);
    for c in 0..k {
        p[(2 * c, c)] = 1.0;
        p[(2 * c + 1, k + c)] = 1.0;
    }
    p
}

/// Largest violation of the normalized triangular structure of `R`.
pub fn triangular_class_defect(r: &Matrix) -> f64 {
    let k = r.nrows() / 2;
    let p = interleave_permutation(k);
    let rh = &p * r * p.transpose();
    let mut worst: f64 = 0.0;
    for j in 0..rh.ncols() {
        for i in (j + 1)..rh.nrows() {
            worst = worst.max(rh[(i, j)].abs());
        }
    }
    for j in 0..k {
        worst = worst.max(rh[(2 * j, 2 * j + 1)].abs());
        worst = worst.max((rh[(2 * j + 1, 2 * j + 1)].abs() - rh[(2 * j, 2 * j)]).abs());
        if rh[(2 * j, 2 * j)] <= 0.0 {
            worst = f64::INFINITY;
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifold::{feasibility, poisson};

    #[test]
    fn symplectic_input_is_fixed_point() {
        let n = 3;
        let k = 2;
        let mut e = Matrix::zeros(2 * n, 2 * k);
        for i in 0..k {
            e[(i, i)] = 1.0;
            e[(n + i, k + i)] = 1.0;
        }
        let f = sr_decompose(&e).unwrap();
        assert_eq!(f.s, e);
        assert_eq!(f.r, Matrix::identity(2 * k, 2 * k));
    }

    #[test]
    fn random_input_properties() {
        let a = crate::random::gaussian_matrix(&mut crate::random::seeded(11), 8, 4);
        let f = sr_decompose(&a).unwrap();
        assert!(feasibility(&f.s) <= 1e-10);
        assert!((f.reconstruct() - &a).norm() <= 1e-10 * a.norm());
        assert!(triangular_class_defect(&f.r) <= 1e-12 * f.r.norm());
    }

    #[test]
    fn recovers_constructed_factors() {
        let n = 4;
        let k = 2;
        let j = poisson(n);
        let h = Matrix::from_fn(2 * n, 2 * n, |i, c| ((i + 2 * c) as f64 * 0.37).cos() * 0.3);
        let hs = (&h + h.transpose()) * 0.5;
        // Cayley transform of a Hamiltonian matrix is symplectic.
        let ham = &j * hs;
        let id = Matrix::identity(2 * n, 2 * n);
        let sym = (&id - &ham * 0.5).try_inverse().unwrap() * (&id + &ham * 0.5);
        let mut s0 = Matrix::zeros(2 * n, 2 * k);
        for c in 0..k {
            s0.set_column(c, &sym.column(c));
            s0.set_column(k + c, &sym.column(n + c));
        }
        assert!(feasibility(&s0) < 1e-12);
        let p = interleave_permutation(k);
        let rhat = Matrix::from_row_slice(
            4,
            4,
            &[
                1.5, 0.0, 0.3, -0.2, 0.0, -1.5, 0.7, 0.4, 0.0, 0.0, 0.8, 0.0, 0.0, 0.0, 0.0, 0.8,
            ],
        );
        let r0 = p.transpose() * rhat * &p;
        let a = &s0 * &r0;
        let f = sr_decompose(&a).unwrap();
        assert!((&f.s - &s0).norm() <= 1e-10 * s0.norm());
        assert!((&f.r - &r0).norm() <= 1e-10 * r0.norm());
    }

    #[test]
    fn rank_deficient_breaks_down() {
        let mut a = Matrix::zeros(4, 2);
        a[(0, 0)] = 1.0;
        a[(1, 1)] = 1.0;
        assert!(matches!(
            sr_decompose(&a),
            Err(Error::SrBreakdown { pair: 0, .. })
        ));
    }
}
