use crate::error::{Error, Result};

/// Real skew-symmetric matrix stored by its strict upper triangle.
#[derive(Clone, Debug, PartialEq)]
pub struct FormMatrix {
    dim: usize,
    upper: Vec<f64>,
}

impl FormMatrix {
    pub fn zeros(dim: usize) -> Self {
        FormMatrix {
            dim,
            upper: vec![0.0; dim * dim.saturating_sub(1) / 2],
        }
    }

    /// Build from a dense row-major matrix, reading only the strict upper
    /// triangle.
    pub fn from_dense(dense: &[f64], dim: usize) -> Self {
        let mut m = FormMatrix::zeros(dim);
        for i in 0..dim {
            for j in (i + 1)..dim {
                m.set(i, j, dense[i * dim + j]);
            }
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    fn index(&self, i: usize, j: usize) -> usize {
        debug_assert!(i < j && j < self.dim);
        i * self.dim - i * (i + 1) / 2 + (j - i - 1)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        match i.cmp(&j) {
            std::cmp::Ordering::Less => self.upper[self.index(i, j)],
            std::cmp::Ordering::Greater => -self.upper[self.index(j, i)],
            std::cmp::Ordering::Equal => 0.0,
        }
    }

    /// Set entry `(i, j)` and, implicitly, `(j, i) = −v`.
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        match i.cmp(&j) {
            std::cmp::Ordering::Less => {
                let k = self.index(i, j);
                self.upper[k] = v;
            }
            std::cmp::Ordering::Greater => {
                let k = self.index(j, i);
                self.upper[k] = -v;
            }
            std::cmp::Ordering::Equal => {}
        }
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let n = self.dim;
        let mut d = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                d[i * n + j] = self.get(i, j);
            }
        }
        d
    }

    /// `self − t·other`.
    pub fn sub_scaled(&self, other: &FormMatrix, t: f64) -> FormMatrix {
        FormMatrix {
            dim: self.dim,
            upper: self.upper.iter().zip(&other.upper).map(|(a, b)| a - t * b).collect(),
        }
    }

    pub fn pfaffian(&self) -> Result<f64> {
        pfaffian(&self.to_dense(), self.dim)
    }
}

/// Pfaffian of a dense skew-symmetric matrix by Parlett–Reid elimination
/// with partial pivoting. Only the strict upper triangle is trusted.
pub fn pfaffian(dense: &[f64], dim: usize) -> Result<f64> {
    if dim % 2 == 1 {
        return Err(Error::OddDimension(dim));
    }
    let mut a = FormMatrix::from_dense(dense, dim).to_dense();
    let at = |a: &Vec<f64>, i: usize, j: usize| a[i * dim + j];
    let mut pf = 1.0;
    let mut k = 0;
    while k + 1 < dim {
        let mut piv = k + 1;
        for i in (k + 2)..dim {
            if at(&a, i, k).abs() > at(&a, piv, k).abs() {
                piv = i;
            }
        }
        if piv != k + 1 {
            for c in 0..dim {
                a.swap((k + 1) * dim + c, piv * dim + c);
            }
            for r in 0..dim {
                a.swap(r * dim + k + 1, r * dim + piv);
            }
            pf = -pf;
        }
        let head = at(&a, k, k + 1);
        if head == 0.0 {
            return Ok(0.0);
        }
        pf *= head;
        if k + 2 < dim {
            let tau: Vec<f64> = ((k + 2)..dim).map(|i| at(&a, k, i) / head).collect();
            let col: Vec<f64> = ((k + 2)..dim).map(|i| at(&a, i, k + 1)).collect();
            for (ii, i) in ((k + 2)..dim).enumerate() {
                for (jj, j) in ((k + 2)..dim).enumerate() {
                    a[i * dim + j] += tau[ii] * col[jj] - col[ii] * tau[jj];
                }
            }
        }
        k += 2;
    }
    Ok(pf)
}
