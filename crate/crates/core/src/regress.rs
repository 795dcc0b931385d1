//! Design matrices for the citation and disruption models, ordinary least
//! squares with classical standard errors, and table rendering.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::corpus::YearGroup;

#[derive(Debug, thiserror::Error)]
pub enum RegressError {
    #[error("no observation rows")]
    NoRows,
    #[error("row `{0}` has no conceptual/empirical label but the model uses Conceptual")]
    MissingLabel(String),
    #[error("design matrix is rank deficient: column `{0}` is a linear combination of earlier columns")]
    RankDeficient(String),
    #[error("need more observations than columns (n = {n}, k = {k})")]
    TooFewObservations { n: usize, k: usize },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("response has zero variance")]
    ConstantResponse,
    #[error("models do not share a nested column structure: {0}")]
    MismatchedColumns(String),
    #[error("unknown model `{0}`")]
    UnknownModel(String),
}

pub const INTERCEPT: &str = "Intercept";
pub const N_AUTHORS: &str = "# of Authors";
pub const CONCEPTUAL: &str = "Conceptual (Binary)";

/// One regression observation. Rows with an `Other` label should carry
/// `conceptual: None` or be dropped upstream.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationRow {
    pub paper_id: String,
    /// In-corpus citation count.
    pub citations: u64,
    /// Disruption score per threshold; `None` when undefined.
    pub disruption: BTreeMap<u32, Option<f64>>,
    pub year_group: YearGroup,
    pub n_authors: u32,
    pub conceptual: Option<bool>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "l")]
pub enum Dependent {
    Citations,
    Disruption(u32),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub name: String,
    pub dependent: Dependent,
    pub n_authors: bool,
    pub conceptual: bool,
}

impl ModelSpec {
    /// Citation models: 1 = year groups, 2 = + authors, 3 = + Conceptual.
    pub fn citations_model(number: u8) -> Result<Self, RegressError> {
        let (n_authors, conceptual) = match number {
            1 => (false, false),
            2 => (true, false),
            3 => (true, true),
            _ => return Err(RegressError::UnknownModel(format!("Model {number}"))),
        };
        Ok(Self {
            name: format!("Model {number}"),
            dependent: Dependent::Citations,
            n_authors,
            conceptual,
        })
    }

    /// Disruption model at threshold `l` with all regressors.
    pub fn disruption_model(l: u32) -> Self {
        Self {
            name: format!("D^{l}"),
            dependent: Dependent::Disruption(l),
            n_authors: true,
            conceptual: true,
        }
    }

    /// Parses `model1`..`model3` or `d<l>` (e.g. `d5`).
    pub fn parse(s: &str) -> Result<Self, RegressError> {
        let lower = s.trim().to_ascii_lowercase();
        if let Some(n) = lower.strip_prefix("model") {
            if let Ok(n) = n.trim().parse::<u8>() {
                return Self::citations_model(n);
            }
        } else if let Some(l) = lower.strip_prefix('d') {
            if let Ok(l) = l.trim_start_matches('^').parse::<u32>() {
                if l >= 1 {
                    return Ok(Self::disruption_model(l));
                }
            }
        }
        Err(RegressError::UnknownModel(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    pub x: DMatrix<f64>,
    pub y: DVector<f64>,
    pub columns: Vec<String>,
    pub row_ids: Vec<String>,
}

impl DesignMatrix {
    pub fn fit(&self) -> Result<RegressionResult, RegressError> {
        ols_fit(&self.x, &self.y, &self.columns)
    }
}

/// Column order: intercept, year-group dummies (1991-1995 is the omitted
/// baseline; groups with no rows in the sample are left out), then
/// optionally authors and Conceptual. Rows with an undefined dependent
/// disruption score are skipped.
pub fn build_design_matrix(
    rows: &[ObservationRow],
    spec: &ModelSpec,
) -> Result<DesignMatrix, RegressError> {
    if rows.is_empty() {
        return Err(RegressError::NoRows);
    }
    // Rows that enter the model, with their response.
    let mut sample = Vec::with_capacity(rows.len());
    for row in rows {
        let response = match spec.dependent {
            Dependent::Citations => row.citations as f64,
            Dependent::Disruption(l) => match row.disruption.get(&l).copied().flatten() {
                Some(d) => d,
                None => continue,
            },
        };
        sample.push((row, response));
    }
    if sample.is_empty() {
        return Err(RegressError::NoRows);
    }
    // A year group absent from the sample gets no dummy.
    let groups: Vec<YearGroup> = YearGroup::ALL[1..]
        .iter()
        .copied()
        .filter(|g| sample.iter().any(|(r, _)| r.year_group == *g))
        .collect();

    let mut columns = vec![INTERCEPT.to_string()];
    columns.extend(groups.iter().map(|g| g.label()));
    if spec.n_authors {
        columns.push(N_AUTHORS.to_string());
    }
    if spec.conceptual {
        columns.push(CONCEPTUAL.to_string());
    }
    let k = columns.len();

    let mut data = Vec::with_capacity(sample.len() * k);
    let mut y = Vec::with_capacity(sample.len());
    let mut row_ids = Vec::with_capacity(sample.len());
    for (row, response) in sample {
        data.push(1.0);
        for g in &groups {
            data.push(if row.year_group == *g { 1.0 } else { 0.0 });
        }
        if spec.n_authors {
            data.push(row.n_authors as f64);
        }
        if spec.conceptual {
            let c = row
                .conceptual
                .ok_or_else(|| RegressError::MissingLabel(row.paper_id.clone()))?;
            data.push(if c { 1.0 } else { 0.0 });
        }
        y.push(response);
        row_ids.push(row.paper_id.clone());
    }
    let n = y.len();
    Ok(DesignMatrix {
        x: DMatrix::from_row_slice(n, k, &data),
        y: DVector::from_vec(y),
        columns,
        row_ids,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegressionResult {
    pub model: String,
    pub columns: Vec<String>,
    pub coefficients: Vec<f64>,
    pub std_errors: Vec<f64>,
    pub t_values: Vec<f64>,
    pub p_values: Vec<f64>,
    pub n_obs: usize,
    pub r_squared: f64,
    pub adj_r_squared: f64,
}

impl RegressionResult {
    pub fn with_model(mut self, name: &str) -> Self {
        self.model = name.to_string();
        self
    }

    pub fn term(&self, column: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == column)
    }

    pub fn coefficient(&self, column: &str) -> Option<f64> {
        self.term(column).map(|i| self.coefficients[i])
    }

    pub fn p_value(&self, column: &str) -> Option<f64> {
        self.term(column).map(|i| self.p_values[i])
    }
}

const RANK_TOLERANCE: f64 = 1e-9;

/// Least squares through a Householder QR of `x`.
pub fn ols_fit(
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    columns: &[String],
) -> Result<RegressionResult, RegressError> {
    let (n, k) = x.shape();
    if y.len() != n {
        return Err(RegressError::Dimension(format!(
            "X has {n} rows but y has {}",
            y.len()
        )));
    }
    if columns.len() != k {
        return Err(RegressError::Dimension(format!(
            "X has {k} columns but {} names were given",
            columns.len()
        )));
    }
    if n <= k {
        return Err(RegressError::TooFewObservations { n, k });
    }

    let qr = x.clone().qr();
    let r = qr.r();
    for j in 0..k {
        let norm = x.column(j).norm();
        if norm == 0.0 || r[(j, j)].abs() <= RANK_TOLERANCE * norm {
            return Err(RegressError::RankDeficient(columns[j].clone()));
        }
    }
    let qty = qr.q().transpose() * y;
    let beta = r
        .solve_upper_triangular(&qty)
        .ok_or_else(|| RegressError::RankDeficient(columns[k - 1].clone()))?;

    let residuals = y - x * &beta;
    let rss = residuals.norm_squared();
    let mean = y.mean();
    let tss: f64 = y.iter().map(|v| (v - mean).powi(2)).sum();
    if tss == 0.0 {
        return Err(RegressError::ConstantResponse);
    }
    let df = (n - k) as f64;
    let sigma2 = rss / df;

    let r_inv = r
        .solve_upper_triangular(&DMatrix::identity(k, k))
        .ok_or_else(|| RegressError::RankDeficient(columns[k - 1].clone()))?;
    let t_dist = StudentsT::new(0.0, 1.0, df).expect("df > 0");

    let mut std_errors = Vec::with_capacity(k);
    let mut t_values = Vec::with_capacity(k);
    let mut p_values = Vec::with_capacity(k);
    for j in 0..k {
        let var = sigma2 * r_inv.row(j).norm_squared();
        let se = var.sqrt();
        let coef = beta[j];
        let (t, p) = if se > 0.0 {
            let t = coef / se;
            (t, (2.0 * t_dist.sf(t.abs())).clamp(0.0, 1.0))
        } else if coef == 0.0 {
            (0.0, 1.0)
        } else {
            (coef.signum() * f64::INFINITY, 0.0)
        };
        std_errors.push(se);
        t_values.push(t);
        p_values.push(p);
    }

    let r_squared = 1.0 - rss / tss;
    let adj_r_squared = 1.0 - (1.0 - r_squared) * (n as f64 - 1.0) / df;
    Ok(RegressionResult {
        model: String::new(),
        columns: columns.to_vec(),
        coefficients: beta.iter().copied().collect(),
        std_errors,
        t_values,
        p_values,
        n_obs: n,
        r_squared,
        adj_r_squared,
    })
}

/// Number presentation of a rendered table.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableStyle {
    /// Three decimals with leading zeros, for citation counts.
    Citations,
    /// Four decimals without leading zeros, for disruption scores.
    Disruption,
}

impl TableStyle {
    fn decimals(self) -> usize {
        match self {
            TableStyle::Citations => 3,
            TableStyle::Disruption => 4,
        }
    }

    fn strips_leading_zero(self) -> bool {
        matches!(self, TableStyle::Disruption)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TableLayout {
    pub title: String,
    pub style: TableStyle,
}

/// Fixed-point rendering; `-0.000` collapses to `0.000`.
pub fn format_number(value: f64, decimals: usize, strip_leading_zero: bool) -> String {
    let mut s = format!("{value:.decimals$}");
    if s.starts_with('-') && s[1..].chars().all(|c| c == '0' || c == '.') {
        s.remove(0);
    }
    if strip_leading_zero {
        if let Some(rest) = s.strip_prefix("0.") {
            s = format!(".{rest}");
        } else if let Some(rest) = s.strip_prefix("-0.") {
            s = format!("-.{rest}");
        }
    }
    s
}

/// `< .001` below one in a thousand, otherwise three decimals with no
/// leading zero.
pub fn format_p(p: f64) -> String {
    if p < 0.001 {
        "< .001".to_string()
    } else {
        format_number(p, 3, true)
    }
}

pub fn format_count(n: usize) -> String {
    let digits = n.to_string();
    let mut out = String::with_capacity(digits.len() + digits.len() / 3);
    for (i, ch) in digits.chars().enumerate() {
        if i > 0 && (digits.len() - i).is_multiple_of(3) {
            out.push(',');
        }
        out.push(ch);
    }
    out
}

pub fn format_cell(coef: f64, se: f64, style: TableStyle) -> String {
    let d = style.decimals();
    let strip = style.strips_leading_zero();
    format!(
        "{} ({})",
        format_number(coef, d, strip),
        format_number(se, d, strip)
    )
}

/// Row order shared by all models: the widest model's columns. Every other
/// model must use an in-order subset of them.
fn shared_rows(results: &[RegressionResult]) -> Result<Vec<String>, RegressError> {
    let widest = results
        .iter()
        .max_by_key(|r| r.columns.len())
        .ok_or_else(|| RegressError::MismatchedColumns("no models".into()))?;
    for r in results {
        let mut pos = 0;
        for c in &r.columns {
            match widest.columns[pos..].iter().position(|w| w == c) {
                Some(offset) => pos += offset + 1,
                None => {
                    return Err(RegressError::MismatchedColumns(format!(
                        "`{}` in {} does not fit the rows of {}",
                        c, r.model, widest.model
                    )))
                }
            }
        }
    }
    Ok(widest.columns.clone())
}

/// Markdown table with models side by side: coefficient (SE) and p per
/// model, then observation count and adjusted R-squared.
pub fn emit_table(
    results: &[RegressionResult],
    layout: &TableLayout,
) -> Result<String, RegressError> {
    let rows = shared_rows(results)?;
    let style = layout.style;
    let mut out = String::new();
    let _ = writeln!(out, "{}\n", layout.title);

    out.push_str("| Term |");
    for r in results {
        let _ = write!(out, " {} Coefficient (SE) | {} p |", r.model, r.model);
    }
    out.push_str("\n|---|");
    for _ in results {
        out.push_str("---|---|");
    }
    out.push('\n');

    for term in &rows {
        let _ = write!(out, "| {term} |");
        for r in results {
            match r.term(term) {
                Some(i) => {
                    let _ = write!(
                        out,
                        " {} | {} |",
                        format_cell(r.coefficients[i], r.std_errors[i], style),
                        format_p(r.p_values[i])
                    );
                }
                None => out.push_str("  |  |"),
            }
        }
        out.push('\n');
    }
    out.push_str("| # of Observations |");
    for r in results {
        let _ = write!(out, " {} |  |", format_count(r.n_obs));
    }
    out.push_str("\n| Adjusted R-squared |");
    for r in results {
        let _ = write!(out, " {} |  |", format_number(r.adj_r_squared, 3, true));
    }
    out.push('\n');
    Ok(out)
}

/// Machine-readable rows `model,term,coefficient,se,t,p`.
pub fn write_results_csv<W: std::io::Write>(
    results: &[RegressionResult],
    out: W,
) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["model", "term", "coefficient", "se", "t", "p"])?;
    for r in results {
        for i in 0..r.columns.len() {
            w.write_record([
                r.model.clone(),
                r.columns[i].clone(),
                r.coefficients[i].to_string(),
                r.std_errors[i].to_string(),
                r.t_values[i].to_string(),
                r.p_values[i].to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn row(id: &str, year_group: YearGroup, citations: u64, conceptual: Option<bool>) -> ObservationRow {
        ObservationRow {
            paper_id: id.into(),
            citations,
            disruption: BTreeMap::from([(5, Some(0.01)), (2, None)]),
            year_group,
            n_authors: 2,
            conceptual,
        }
    }

    #[test]
    fn design_columns() {
        let rows: Vec<ObservationRow> = YearGroup::ALL
            .iter()
            .enumerate()
            .map(|(i, g)| row(&format!("r{i}"), *g, 10, Some(true)))
            .collect();
        let m1 = build_design_matrix(&rows, &ModelSpec::citations_model(1).unwrap()).unwrap();
        assert_eq!(m1.columns.len(), 6);
        assert_eq!(m1.columns[1], "1996-2000");
        // 1990s baseline row: all dummies zero
        assert_eq!(m1.x.row(0).iter().copied().collect::<Vec<_>>(), vec![1.0, 0.0, 0.0, 0.0, 0.0, 0.0]);

        let d5 = build_design_matrix(&rows, &ModelSpec::disruption_model(5)).unwrap();
        assert_eq!(d5.columns.len(), 8);
        assert_eq!(d5.columns[6], N_AUTHORS);
        assert_eq!(d5.columns[7], CONCEPTUAL);
        assert_eq!(d5.y[0], 0.01);

        // groups missing from the sample get no dummy
        let sparse = [rows[0].clone(), rows[3].clone()];
        let m = build_design_matrix(&sparse, &ModelSpec::citations_model(1).unwrap()).unwrap();
        assert_eq!(m.columns, vec![INTERCEPT.to_string(), "2006-2010".to_string()]);
        assert_eq!(m.x.row(1).iter().copied().collect::<Vec<_>>(), vec![1.0, 1.0]);
    }

    #[test]
    fn design_errors_and_skips() {
        let rows = vec![
            row("a", YearGroup::G2001_2005, 1, Some(false)),
            row("b", YearGroup::G2001_2005, 1, None),
        ];
        assert!(matches!(
            build_design_matrix(&rows, &ModelSpec::citations_model(3).unwrap()),
            Err(RegressError::MissingLabel(id)) if id == "b"
        ));
        assert!(build_design_matrix(&rows, &ModelSpec::citations_model(2).unwrap()).is_ok());
        // undefined D^2 rows are skipped, leaving none
        assert!(matches!(
            build_design_matrix(&rows[..1], &ModelSpec::disruption_model(2)),
            Err(RegressError::NoRows)
        ));
        assert!(matches!(
            build_design_matrix(&[], &ModelSpec::disruption_model(2)),
            Err(RegressError::NoRows)
        ));
    }

    #[test]
    fn model_names_parse() {
        assert_eq!(ModelSpec::parse("model3").unwrap(), ModelSpec::citations_model(3).unwrap());
        assert_eq!(ModelSpec::parse("d5").unwrap(), ModelSpec::disruption_model(5));
        assert_eq!(ModelSpec::parse("D^3").unwrap(), ModelSpec::disruption_model(3));
        assert!(ModelSpec::parse("model4").is_err());
        assert!(ModelSpec::parse("d0").is_err());
    }

    fn names(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn exact_line() {
        let xs = [0.0, 1.0, 2.0, 3.0, 4.0, 5.0];
        let x = DMatrix::from_fn(6, 2, |i, j| if j == 0 { 1.0 } else { xs[i] });
        let y = DVector::from_iterator(6, xs.iter().map(|v| 3.0 + 2.0 * v));
        let fit = ols_fit(&x, &y, &names(&["Intercept", "x"])).unwrap();
        assert_relative_eq!(fit.coefficients[0], 3.0, epsilon = 1e-10);
        assert_relative_eq!(fit.coefficients[1], 2.0, epsilon = 1e-10);
        assert_relative_eq!(fit.r_squared, 1.0, epsilon = 1e-10);
        assert!(fit.p_values.iter().all(|p| (0.0..=1.0).contains(p)));
    }

    #[test]
    fn adjusted_r_squared_by_hand() {
        // y = [1, 3, 2, 5, 4], x = [1..5]; slope 0.8, intercept 0.6
        // fitted [1.4, 2.2, 3.0, 3.8, 4.6], residuals [-.4, .8, -1, 1.2, -.6]
        // RSS = .16 + .64 + 1 + 1.44 + .36 = 3.6; TSS = 10; R2 = .64
        // adj = 1 - .36 * 4 / 3 = .52
        let x = DMatrix::from_fn(5, 2, |i, j| if j == 0 { 1.0 } else { (i + 1) as f64 });
        let y = DVector::from_vec(vec![1.0, 3.0, 2.0, 5.0, 4.0]);
        let fit = ols_fit(&x, &y, &names(&["Intercept", "x"])).unwrap();
        assert_relative_eq!(fit.coefficients[1], 0.8, epsilon = 1e-12);
        assert_relative_eq!(fit.coefficients[0], 0.6, epsilon = 1e-12);
        assert_relative_eq!(fit.r_squared, 0.64, epsilon = 1e-12);
        assert_relative_eq!(fit.adj_r_squared, 0.52, epsilon = 1e-12);
        // SE(slope) = sqrt(1.2 / 10)
        assert_relative_eq!(fit.std_errors[1], (0.12f64).sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn rank_deficiency_names_column() {
        let x = DMatrix::from_fn(5, 3, |i, j| match j {
            0 => 1.0,
            _ => i as f64,
        });
        let y = DVector::from_vec(vec![1.0, 2.0, 0.0, 4.0, 3.0]);
        match ols_fit(&x, &y, &names(&["Intercept", "a", "a_copy"])) {
            Err(RegressError::RankDeficient(c)) => assert_eq!(c, "a_copy"),
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            ols_fit(&x.columns(0, 2).into_owned().rows(0, 2).into_owned(), &y.rows(0, 2).into_owned(), &names(&["a", "b"])),
            Err(RegressError::TooFewObservations { n: 2, k: 2 })
        ));
    }

    #[test]
    fn number_formats() {
        assert_eq!(format_cell(77.575, 3.162, TableStyle::Citations), "77.575 (3.162)");
        assert_eq!(format_cell(1.254, 0.397, TableStyle::Citations), "1.254 (0.397)");
        assert_eq!(format_cell(-0.0005, 0.0009, TableStyle::Disruption), "-.0005 (.0009)");
        assert_eq!(format_cell(0.0021, 0.0003, TableStyle::Disruption), ".0021 (.0003)");
        assert_eq!(format_p(0.0004), "< .001");
        assert_eq!(format_p(0.079), ".079");
        assert_eq!(format_p(0.001), ".001");
        assert_eq!(format_p(1.0), "1.000");
        assert_eq!(format_number(-0.00001, 4, true), ".0000");
        assert_eq!(format_count(17603), "17,603");
        assert_eq!(format_count(999), "999");
        assert_eq!(format_count(1544040), "1,544,040");
    }

    fn fake(model: &str, cols: &[&str]) -> RegressionResult {
        let k = cols.len();
        RegressionResult {
            model: model.into(),
            columns: names(cols),
            coefficients: vec![77.575; k],
            std_errors: vec![3.162; k],
            t_values: vec![24.5; k],
            p_values: vec![0.0004; k],
            n_obs: 17603,
            r_squared: 0.06,
            adj_r_squared: 0.059,
        }
    }

    #[test]
    fn table_layout() {
        let layout = TableLayout {
            title: "Citations".into(),
            style: TableStyle::Citations,
        };
        let text = emit_table(
            &[fake("Model 1", &["Intercept", "x"]), fake("Model 3", &["Intercept", "x", "Conceptual (Binary)"])],
            &layout,
        )
        .unwrap();
        assert!(text.contains("| Intercept | 77.575 (3.162) | < .001 | 77.575 (3.162) | < .001 |"));
        assert!(text.contains("| Conceptual (Binary) |  |  | 77.575 (3.162) | < .001 |"));
        assert!(text.contains("| # of Observations | 17,603 |  | 17,603 |  |"));
        assert!(text.contains("| Adjusted R-squared | .059 |"));

        let mismatch = emit_table(&[fake("A", &["Intercept", "x"]), fake("B", &["Intercept", "z", "w"])], &layout);
        assert!(matches!(mismatch, Err(RegressError::MismatchedColumns(_))));
        let reordered = emit_table(&[fake("A", &["x", "Intercept"]), fake("B", &["Intercept", "x", "w"])], &layout);
        assert!(reordered.is_err());
    }

    #[test]
    fn csv_output() {
        let mut buf = Vec::new();
        write_results_csv(&[fake("Model 1", &["Intercept"])], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, "model,term,coefficient,se,t,p\nModel 1,Intercept,77.575,3.162,24.5,0.0004\n");
    }
}
