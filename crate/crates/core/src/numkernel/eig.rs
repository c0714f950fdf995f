//! Eigenvalues of a general complex matrix: Householder reduction to upper
//! Hessenberg form followed by single-shift QR with Wilkinson shifts.

use num_traits::{One, Zero};

use crate::error::KernelError;
use crate::matrix::DenseMatrix;
use crate::scalar::{abs, c, Real, C};

const ITERATIONS_PER_EIGENVALUE: usize = 40;

/// Reduce `a` to upper Hessenberg form by unitary similarity.
pub(crate) fn hessenberg<T: Real>(a: &DenseMatrix<T>) -> DenseMatrix<T> {
    let n = a.n_rows();
    let mut h = a.clone();
    for k in 0..n.saturating_sub(2) {
        let x: Vec<C<T>> = ((k + 1)..n).map(|i| h[(i, k)]).collect();
        let xnorm = x.iter().map(|z| z.norm_sqr()).sum::<T>().sqrt();
        if xnorm == T::zero() {
            continue;
        }
        let x0 = x[0];
        let phase = if abs(x0) == T::zero() {
            C::one()
        } else {
            x0 / abs(x0)
        };
        let alpha = -phase * xnorm;
        let mut v = x;
        v[0] = v[0] - alpha;
        let vnorm = v.iter().map(|z| z.norm_sqr()).sum::<T>().sqrt();
        if vnorm == T::zero() {
            continue;
        }
        for z in v.iter_mut() {
            *z = *z / vnorm;
        }
        let two = c(T::lit(2.0));
        // H <- (I - 2vv^H) H on rows k+1..n
        for j in 0..n {
            let mut s = C::zero();
            for (idx, vi) in v.iter().enumerate() {
                s = s + vi.conj() * h[(k + 1 + idx, j)];
            }
            for (idx, vi) in v.iter().enumerate() {
                h[(k + 1 + idx, j)] = h[(k + 1 + idx, j)] - two * *vi * s;
            }
        }
        // H <- H (I - 2vv^H) on columns k+1..n
        for i in 0..n {
            let mut s = C::zero();
            for (idx, vi) in v.iter().enumerate() {
                s = s + h[(i, k + 1 + idx)] * *vi;
            }
            for (idx, vi) in v.iter().enumerate() {
                h[(i, k + 1 + idx)] = h[(i, k + 1 + idx)] - two * s * vi.conj();
            }
        }
        for i in (k + 2)..n {
            h[(i, k)] = C::zero();
        }
    }
    h
}

/// All eigenvalues with algebraic multiplicity, in no particular order.
pub fn eigenvalues<T: Real>(a: &DenseMatrix<T>) -> Result<Vec<C<T>>, KernelError> {
    let n = a.n_rows();
    if n != a.n_cols() {
        return Err(KernelError::DimensionMismatch {
            expected: "square matrix".into(),
            found: format!("{}x{}", a.n_rows(), a.n_cols()),
        });
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut h = hessenberg(a);
    let eps = T::epsilon();
    let hnorm = h.frobenius_norm();
    let mut eig = vec![C::zero(); n];
    let mut hi = n - 1;
    let mut iter = 0usize;
    let mut total = 0usize;
    let budget = ITERATIONS_PER_EIGENVALUE * n;

    loop {
        if hi == 0 {
            eig[0] = h[(0, 0)];
            break;
        }
        // Locate the start of the active unreduced block.
        let mut lo = hi;
        while lo > 0 {
            let sub = abs(h[(lo, lo - 1)]);
            let mut diag = abs(h[(lo, lo)]) + abs(h[(lo - 1, lo - 1)]);
            if diag == T::zero() {
                diag = hnorm;
            }
            if sub <= eps * diag {
                h[(lo, lo - 1)] = C::zero();
                break;
            }
            lo -= 1;
        }
        if lo == hi {
            eig[hi] = h[(hi, hi)];
            hi -= 1;
            iter = 0;
            continue;
        }
        iter += 1;
        total += 1;
        if total > budget {
            return Err(KernelError::NonConvergence { iterations: total });
        }

        let shift = if iter.is_multiple_of(10) {
            // exceptional shift
            let extra = if hi >= 2 {
                h[(hi - 1, hi - 2)].re.abs()
            } else {
                T::zero()
            };
            h[(hi, hi)] + c(h[(hi, hi - 1)].re.abs() + extra)
        } else {
            wilkinson(
                h[(hi - 1, hi - 1)],
                h[(hi - 1, hi)],
                h[(hi, hi - 1)],
                h[(hi, hi)],
            )
        };

        qr_step(&mut h, lo, hi, shift);
    }
    Ok(eig)
}

fn wilkinson<T: Real>(a: C<T>, b: C<T>, cc: C<T>, d: C<T>) -> C<T> {
    let half = c(T::lit(0.5));
    let tr_half = (a + d) * half;
    let diff_half = (a - d) * half;
    let disc = (diff_half * diff_half + b * cc).sqrt();
    let l1 = tr_half + disc;
    let l2 = tr_half - disc;
    if abs(l1 - d) <= abs(l2 - d) {
        l1
    } else {
        l2
    }
}

/// One explicitly shifted QR step on the window `lo..=hi`.
fn qr_step<T: Real>(h: &mut DenseMatrix<T>, lo: usize, hi: usize, shift: C<T>) {
    for i in lo..=hi {
        h[(i, i)] = h[(i, i)] - shift;
    }
    let mut rots: Vec<(T, C<T>)> = Vec::with_capacity(hi - lo);
    for k in lo..hi {
        let a = h[(k, k)];
        let b = h[(k + 1, k)];
        let r = abs(a).hypot(abs(b));
        let (cs, sn) = if r == T::zero() {
            (T::one(), C::zero())
        } else if abs(a) == T::zero() {
            (T::zero(), C::one())
        } else {
            let phase = a / abs(a);
            (abs(a) / r, phase * b.conj() / r)
        };
        for j in k..=hi {
            let x = h[(k, j)];
            let y = h[(k + 1, j)];
            h[(k, j)] = x * cs + sn * y;
            h[(k + 1, j)] = -sn.conj() * x + y * cs;
        }
        h[(k + 1, k)] = C::zero();
        rots.push((cs, sn));
    }
    for (idx, &(cs, sn)) in rots.iter().enumerate() {
        let k = lo + idx;
        let top = (k + 2).min(hi);
        for i in lo..=top {
            let x = h[(i, k)];
            let y = h[(i, k + 1)];
            h[(i, k)] = x * cs + y * sn.conj();
            h[(i, k + 1)] = -x * sn + y * cs;
        }
    }
    for i in lo..=hi {
        h[(i, i)] = h[(i, i)] + shift;
    }
}
