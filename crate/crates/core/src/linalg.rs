//! Small dense linear algebra over any [`Scalar`].
//!
//! Matrices are row-major `n × n` slices. Everything here is generic so the
//! same code runs on `f64` and on dual numbers when gradients are needed.

use crate::dual::Scalar;

pub fn identity<T: Scalar>(n: usize) -> Vec<T> {
    let mut m = vec![T::from_f64(0.0); n * n];
    for i in 0..n {
        m[i * n + i] = T::from_f64(1.0);
    }
    m
}

pub fn matmul<T: Scalar>(a: &[T], b: &[T], n: usize) -> Vec<T> {
    let mut out = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            let mut acc = a[i * n].clone() * b[j].clone();
            for k in 1..n {
                acc = acc + a[i * n + k].clone() * b[k * n + j].clone();
            }
            out.push(acc);
        }
    }
    out
}

pub fn matvec<T: Scalar>(a: &[T], v: &[T]) -> Vec<T> {
    let n = v.len();
    (0..n)
        .map(|i| dot(&a[i * n..(i + 1) * n], v))
        .collect()
}

pub fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    let mut acc = a[0].clone() * b[0].clone();
    for k in 1..a.len() {
        acc = acc + a[k].clone() * b[k].clone();
    }
    acc
}

/// `vᵀ A w`.
pub fn bilinear<T: Scalar>(a: &[T], v: &[T], w: &[T]) -> T {
    dot(v, &matvec(a, w))
}

pub fn trace<T: Scalar>(a: &[T], n: usize) -> T {
    let mut acc = a[0].clone();
    for i in 1..n {
        acc = acc + a[i * n + i].clone();
    }
    acc
}

/// Lower Cholesky factor. On failure returns the 1-based index of the first
/// leading minor that is not positive.
pub fn cholesky<T: Scalar>(a: &[T], n: usize) -> Result<Vec<T>, usize> {
    let mut l = vec![T::from_f64(0.0); n * n];
    for j in 0..n {
        let mut d = a[j * n + j].clone();
        for k in 0..j {
            d = d - l[j * n + k].clone() * l[j * n + k].clone();
        }
        if !(d.value() > 0.0) {
            return Err(j + 1);
        }
        let djj = d.sqrt();
        for i in (j + 1)..n {
            let mut s = a[i * n + j].clone();
            for k in 0..j {
                s = s - l[i * n + k].clone() * l[j * n + k].clone();
            }
            l[i * n + j] = s / djj.clone();
        }
        l[j * n + j] = djj;
    }
    Ok(l)
}

/// `log det A` from its Cholesky factor.
pub fn chol_logdet<T: Scalar>(l: &[T], n: usize) -> T {
    let mut acc = l[0].ln();
    for i in 1..n {
        acc = acc + l[i * n + i].ln();
    }
    acc.scale(2.0)
}

/// Solve `L Lᵀ x = b`.
pub fn chol_solve<T: Scalar>(l: &[T], b: &[T]) -> Vec<T> {
    let n = b.len();
    let mut y: Vec<T> = Vec::with_capacity(n);
    for i in 0..n {
        let mut s = b[i].clone();
        for k in 0..i {
            s = s - l[i * n + k].clone() * y[k].clone();
        }
        y.push(s / l[i * n + i].clone());
    }
    let mut x = y;
    for i in (0..n).rev() {
        let mut s = x[i].clone();
        for k in (i + 1)..n {
            s = s - l[k * n + i].clone() * x[k].clone();
        }
        x[i] = s / l[i * n + i].clone();
    }
    x
}

/// `A⁻¹ B` for SPD `A` given by its Cholesky factor.
pub fn chol_solve_matrix<T: Scalar>(l: &[T], b: &[T], n: usize) -> Vec<T> {
    let mut out = vec![T::from_f64(0.0); n * n];
    for j in 0..n {
        let col: Vec<T> = (0..n).map(|i| b[i * n + j].clone()).collect();
        let x = chol_solve(l, &col);
        for (i, xi) in x.into_iter().enumerate() {
            out[i * n + j] = xi;
        }
    }
    out
}

/// Coefficients `c_0..c_n` of `det(G − μE) = c_0 μⁿ + … + c_n` by the
/// Faddeev–LeVerrier recurrence. `c_0 = (−1)ⁿ` exactly.
pub fn faddeev_leverrier<T: Scalar>(g: &[T], n: usize) -> Vec<T> {
    let sign = if n.is_multiple_of(2) { 1.0 } else { -1.0 };
    // Monic coefficients p_k of det(μE − G).
    let mut p: Vec<T> = vec![T::from_f64(1.0)];
    let mut m: Vec<T> = vec![T::from_f64(0.0); n * n];
    for k in 1..=n {
        m = matmul(g, &m, n);
        for i in 0..n {
            m[i * n + i] = m[i * n + i].clone() + p[k - 1].clone();
        }
        let gm = matmul(g, &m, n);
        p.push(trace(&gm, n).scale(-1.0 / k as f64));
    }
    let mut c: Vec<T> = p.into_iter().map(|x| x.scale(sign)).collect();
    c[0] = T::from_f64(sign);
    c
}

/// Solve a general square system by Gaussian elimination with partial
/// pivoting. Returns `None` for an exactly singular pivot.
pub fn lu_solve(a: &[f64], b: &[f64]) -> Option<Vec<f64>> {
    let n = b.len();
    let mut m = a.to_vec();
    let mut x = b.to_vec();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| m[i * n + col].abs().total_cmp(&m[j * n + col].abs()))?;
        if m[piv * n + col] == 0.0 {
            return None;
        }
        if piv != col {
            for k in 0..n {
                m.swap(col * n + k, piv * n + k);
            }
            x.swap(col, piv);
        }
        for r in (col + 1)..n {
            let f = m[r * n + col] / m[col * n + col];
            if f != 0.0 {
                for k in col..n {
                    m[r * n + k] -= f * m[col * n + k];
                }
                x[r] -= f * x[col];
            }
        }
    }
    for i in (0..n).rev() {
        let mut s = x[i];
        for k in (i + 1)..n {
            s -= m[i * n + k] * x[k];
        }
        x[i] = s / m[i * n + i];
    }
    Some(x)
}
