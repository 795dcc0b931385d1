//! Exact normal-equations least squares over arbitrary-precision rationals.
//!
//! Solves `X'X b = X'y` by Gauss-Jordan elimination with every input
//! converted exactly from its binary floating-point value. Only the final
//! square roots of the standard errors are taken in floating point.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

pub struct ExactFit {
    pub coefficients: Vec<f64>,
    pub std_errors: Vec<f64>,
    pub r_squared: f64,
    pub adj_r_squared: f64,
}

fn exact(v: f64) -> BigRational {
    BigRational::from_float(v).expect("finite input")
}

/// `rows` is row-major `n x k`. Returns `None` when `X'X` is singular.
pub fn exact_ols(rows: &[Vec<f64>], y: &[f64]) -> Option<ExactFit> {
    let n = rows.len();
    let k = rows[0].len();
    let x: Vec<Vec<BigRational>> = rows
        .iter()
        .map(|r| r.iter().map(|&v| exact(v)).collect())
        .collect();
    let yq: Vec<BigRational> = y.iter().map(|&v| exact(v)).collect();

    // augmented [X'X | X'y | I]
    let width = 2 * k + 1;
    let mut m = vec![vec![BigRational::zero(); width]; k];
    for a in 0..k {
        for b in 0..k {
            let mut s = BigRational::zero();
            for i in 0..n {
                s += &x[i][a] * &x[i][b];
            }
            m[a][b] = s;
        }
        let mut s = BigRational::zero();
        for i in 0..n {
            s += &x[i][a] * &yq[i];
        }
        m[a][k] = s;
        m[a][k + 1 + a] = BigRational::one();
    }
    for col in 0..k {
        let pivot = (col..k).find(|&r| !m[r][col].is_zero())?;
        m.swap(col, pivot);
        let p = m[col][col].clone();
        for v in m[col].iter_mut() {
            *v = &*v / &p;
        }
        let pivot_row = m[col].clone();
        for r in 0..k {
            if r != col && !m[r][col].is_zero() {
                let f = m[r][col].clone();
                for (v, pv) in m[r].iter_mut().zip(&pivot_row) {
                    *v -= &f * pv;
                }
            }
        }
    }
    let beta: Vec<BigRational> = (0..k).map(|a| m[a][k].clone()).collect();

    let mut rss = BigRational::zero();
    let mut sum_y = BigRational::zero();
    for i in 0..n {
        let mut fitted = BigRational::zero();
        for a in 0..k {
            fitted += &x[i][a] * &beta[a];
        }
        let e = &yq[i] - fitted;
        rss += &e * &e;
        sum_y += &yq[i];
    }
    let n_q = BigRational::from_integer(BigInt::from(n));
    let mean = &sum_y / &n_q;
    let mut tss = BigRational::zero();
    for v in &yq {
        let d = v - &mean;
        tss += &d * &d;
    }
    let df = BigRational::from_integer(BigInt::from(n - k));
    let sigma2 = &rss / &df;
    let std_errors = (0..k)
        .map(|a| {
            let var = &sigma2 * &m[a][k + 1 + a];
            assert!(!var.is_negative());
            var.to_f64().unwrap().sqrt()
        })
        .collect();
    let r2 = BigRational::one() - &rss / &tss;
    let adj = BigRational::one()
        - (BigRational::one() - &r2) * (&n_q - BigRational::one()) / &df;
    Some(ExactFit {
        coefficients: beta.iter().map(|b| b.to_f64().unwrap()).collect(),
        std_errors,
        r_squared: r2.to_f64().unwrap(),
        adj_r_squared: adj.to_f64().unwrap(),
    })
}
