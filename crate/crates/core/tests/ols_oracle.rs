mod support;

use disrupt_core::regress::{ols_fit, RegressError};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use support::ols_oracle::exact_ols;

/// Random design with an intercept, entries on a 1/1024 grid, and a planted
/// linear response plus noise.
pub fn random_instance(seed: u64, n: usize, k: usize) -> (Vec<Vec<f64>>, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let grid = |v: f64| (v * 1024.0).round() / 1024.0;
    let beta: Vec<f64> = (0..k).map(|_| rng.random_range(-5.0..5.0)).collect();
    let mut rows = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    for _ in 0..n {
        let mut row = vec![1.0];
        for _ in 1..k {
            row.push(grid(rng.random_range(-3.0..3.0)));
        }
        let signal: f64 = row.iter().zip(&beta).map(|(x, b)| x * b).sum();
        y.push(grid(signal + rng.random_range(-1.0..1.0)));
        rows.push(row);
    }
    (rows, y)
}

fn to_nalgebra(rows: &[Vec<f64>], y: &[f64]) -> (DMatrix<f64>, DVector<f64>) {
    let n = rows.len();
    let k = rows[0].len();
    (
        DMatrix::from_fn(n, k, |i, j| rows[i][j]),
        DVector::from_column_slice(y),
    )
}

fn names(k: usize) -> Vec<String> {
    (0..k).map(|j| format!("x{j}")).collect()
}

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

#[test]
fn matches_exact_normal_equations() {
    for seed in 0..40u64 {
        let k = 2 + (seed as usize % 5);
        let n = k + 5 + (seed as usize * 7) % 40;
        let (rows, y) = random_instance(seed, n, k);
        let (x, yv) = to_nalgebra(&rows, &y);
        let fit = ols_fit(&x, &yv, &names(k)).unwrap();
        let exact = exact_ols(&rows, &y).unwrap();
        for j in 0..k {
            assert!(rel_err(fit.coefficients[j], exact.coefficients[j]) < 1e-8, "seed {seed} coef {j}");
            assert!(rel_err(fit.std_errors[j], exact.std_errors[j]) < 1e-8, "seed {seed} se {j}");
        }
        assert!((fit.adj_r_squared - exact.adj_r_squared).abs() < 1e-10);
    }
}

#[test]
fn duplicated_column_is_rank_deficient() {
    let (mut rows, y) = random_instance(3, 30, 3);
    for r in &mut rows {
        r.push(r[1]);
    }
    let (x, yv) = to_nalgebra(&rows, &y);
    assert!(matches!(ols_fit(&x, &yv, &names(4)), Err(RegressError::RankDeficient(c)) if c == "x3"));
    assert!(exact_ols(&rows, &y).is_none());
}

#[test]
fn planted_coefficients_fall_inside_confidence_bands() {
    // y = 1 + 2 x1 - 3 x2 + N(0, 1) noise: each estimate within 4 SE of truth
    use rand_distr_normal::standard_normal;
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let n = 400;
    let truth = [1.0, 2.0, -3.0];
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|_| vec![1.0, rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)])
        .collect();
    let y: Vec<f64> = rows
        .iter()
        .map(|r| truth.iter().zip(r).map(|(b, x)| b * x).sum::<f64>() + standard_normal(&mut rng))
        .collect();
    let (x, yv) = to_nalgebra(&rows, &y);
    let fit = ols_fit(&x, &yv, &names(3)).unwrap();
    let exact = exact_ols(&rows, &y).unwrap();
    for j in 0..3 {
        let band = 4.0 * exact.std_errors[j];
        assert!((fit.coefficients[j] - truth[j]).abs() < band, "coef {j}");
        assert!(fit.p_values[j] < 1e-6);
    }
}

mod rand_distr_normal {
    use rand::Rng;

    /// Box-Muller.
    pub fn standard_normal<R: Rng>(rng: &mut R) -> f64 {
        let u1: f64 = rng.random_range(f64::EPSILON..1.0);
        let u2: f64 = rng.random();
        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn residuals_are_orthogonal_to_columns(seed in any::<u64>(), k in 2usize..8, extra in 1usize..60) {
        let (rows, y) = random_instance(seed, k + extra, k);
        let (x, yv) = to_nalgebra(&rows, &y);
        let fit = ols_fit(&x, &yv, &names(k)).unwrap();
        let beta = DVector::from_vec(fit.coefficients.clone());
        let resid = &yv - &x * beta;
        let scale = yv.norm();
        for j in 0..k {
            prop_assert!(x.column(j).dot(&resid).abs() <= 1e-8 * scale);
        }
        prop_assert!(fit.p_values.iter().all(|p| (0.0..=1.0).contains(p)));
    }

    #[test]
    fn adding_a_column_never_lowers_r_squared(seed in any::<u64>(), k in 2usize..7, extra in 3usize..50) {
        let (rows, y) = random_instance(seed, k + extra, k);
        let (x, yv) = to_nalgebra(&rows, &y);
        let full = ols_fit(&x, &yv, &names(k)).unwrap();
        let nested = ols_fit(&x.columns(0, k - 1).into_owned(), &yv, &names(k - 1)).unwrap();
        prop_assert!(full.r_squared >= nested.r_squared - 1e-12);
    }

    #[test]
    fn row_permutation_does_not_change_fit(seed in any::<u64>(), k in 2usize..6, extra in 2usize..40, shift in 1usize..40) {
        let (mut rows, mut y) = random_instance(seed, k + extra, k);
        let (x, yv) = to_nalgebra(&rows, &y);
        let a = ols_fit(&x, &yv, &names(k)).unwrap();
        let s = shift % rows.len();
        rows.rotate_left(s);
        y.rotate_left(s);
        let (x, yv) = to_nalgebra(&rows, &y);
        let b = ols_fit(&x, &yv, &names(k)).unwrap();
        for j in 0..k {
            prop_assert!(rel_err(a.coefficients[j], b.coefficients[j]) < 1e-9 || (a.coefficients[j] - b.coefficients[j]).abs() < 1e-12);
            prop_assert!(rel_err(a.std_errors[j], b.std_errors[j]) < 1e-9);
        }
    }
}
