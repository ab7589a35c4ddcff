use serde::Serialize;

/// Univariate polynomial with coefficients in descending powers.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PolyCoeffs {
    pub coeffs: Vec<f64>,
}

impl PolyCoeffs {
    pub fn new(coeffs: Vec<f64>) -> Self {
        PolyCoeffs { coeffs }
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.coeffs.iter().fold(0.0, |acc, c| acc * t + c)
    }

    /// Euclidean norm of the coefficient vector.
    pub fn norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c * c).sum::<f64>().sqrt()
    }

    /// `(t − root)^n`.
    pub fn binomial_power(root: f64, n: usize) -> Self {
        let mut c = vec![1.0];
        for _ in 0..n {
            let mut next = c.clone();
            next.push(0.0);
            for (i, v) in c.iter().enumerate() {
                next[i + 1] -= root * v;
            }
            c = next;
        }
        PolyCoeffs { coeffs: c }
    }

    /// Divide by the leading coefficient.
    pub fn monic(&self) -> Self {
        let lead = self.coeffs[0];
        PolyCoeffs {
            coeffs: self.coeffs.iter().map(|c| c / lead).collect(),
        }
    }
}

/// Synthetic division by `(t − root)`: quotient and remainder.
pub fn horner_divide(a: &PolyCoeffs, root: f64) -> (PolyCoeffs, f64) {
    let n = a.coeffs.len();
    if n <= 1 {
        return (PolyCoeffs::new(Vec::new()), a.coeffs.first().copied().unwrap_or(0.0));
    }
    let mut b = Vec::with_capacity(n - 1);
    b.push(a.coeffs[0]);
    for k in 1..n - 1 {
        let prev = b[k - 1];
        b.push(a.coeffs[k] + root * prev);
    }
    let remainder = a.coeffs[n - 1] + root * b[n - 2];
    (PolyCoeffs::new(b), remainder)
}
