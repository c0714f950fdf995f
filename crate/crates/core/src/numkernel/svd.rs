//! One-sided (Hestenes) Jacobi SVD for complex matrices.
//!
//! Works on any shape. Produces `cols` singular values, so a wide matrix
//! reports at least `cols - rows` zeros and its right singular vectors span
//! the full domain, which is what the kernel computation needs.

use num_traits::{One, Zero};

use crate::matrix::{vec_dot, vec_norm, DenseMatrix};
use crate::scalar::{abs, Real, C};

const MAX_SWEEPS: usize = 80;

#[derive(Debug, Clone)]
pub struct Svd<T> {
    /// Descending, length `n_cols`.
    pub singular_values: Vec<T>,
    /// Left singular vectors as columns (`n_rows x n_cols`); zero columns
    /// where the singular value vanishes.
    pub u: DenseMatrix<T>,
    /// Unitary `n_cols x n_cols`; column `j` pairs with `singular_values[j]`.
    pub v: DenseMatrix<T>,
}

pub fn svd<T: Real>(a: &DenseMatrix<T>) -> Svd<T> {
    let (m, n) = a.shape();
    let mut cols = a.columns();
    let mut vcols: Vec<Vec<C<T>>> = (0..n)
        .map(|j| {
            (0..n)
                .map(|i| if i == j { C::one() } else { C::zero() })
                .collect()
        })
        .collect();
    let tol = T::epsilon() * T::lit(m.max(1) as f64);

    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let alpha: T = cols[p].iter().map(|z| z.norm_sqr()).sum();
                let beta: T = cols[q].iter().map(|z| z.norm_sqr()).sum();
                if alpha == T::zero() || beta == T::zero() {
                    continue;
                }
                let gamma = vec_dot(&cols[p], &cols[q]);
                let g = abs(gamma);
                if g <= tol * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let phase_conj = gamma.conj() / g;
                let zeta = (beta - alpha) / (T::lit(2.0) * g);
                let sign = if zeta >= T::zero() {
                    T::one()
                } else {
                    -T::one()
                };
                let t = sign / (zeta.abs() + (T::one() + zeta * zeta).sqrt());
                let cs = T::one() / (T::one() + t * t).sqrt();
                let sn = cs * t;
                rotate(&mut cols, p, q, phase_conj, cs, sn);
                rotate(&mut vcols, p, q, phase_conj, cs, sn);
            }
        }
        if !rotated {
            break;
        }
    }

    let norms: Vec<T> = cols.iter().map(|col| vec_norm(col)).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        norms[j]
            .partial_cmp(&norms[i])
            .unwrap_or(std::cmp::Ordering::Equal)
    });

    let singular_values: Vec<T> = order.iter().map(|&j| norms[j]).collect();
    let u_cols: Vec<Vec<C<T>>> = order
        .iter()
        .map(|&j| {
            let s = norms[j];
            if s > T::zero() {
                cols[j].iter().map(|&z| z / s).collect()
            } else {
                vec![C::zero(); m]
            }
        })
        .collect();
    let v_cols: Vec<Vec<C<T>>> = order.iter().map(|&j| vcols[j].clone()).collect();
    Svd {
        singular_values,
        u: DenseMatrix::from_columns(m, &u_cols),
        v: DenseMatrix::from_columns(n, &v_cols),
    }
}

/// Real plane rotation after aligning the phase of column `q` with column `p`.
fn rotate<T: Real>(cols: &mut [Vec<C<T>>], p: usize, q: usize, phase_conj: C<T>, cs: T, sn: T) {
    let (left, right) = cols.split_at_mut(q);
    let cp = &mut left[p];
    let cq = &mut right[0];
    for (x, y) in cp.iter_mut().zip(cq.iter_mut()) {
        let a = *x;
        let b = *y * phase_conj;
        *x = a * cs - b * sn;
        *y = a * sn + b * cs;
    }
}
