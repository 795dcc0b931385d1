#![allow(dead_code)]

pub mod graphs;
pub mod ols_oracle;
