//! Pipeline orchestration for the disruption toolkit: configuration, the
//! stage runner, and a synthetic corpus generator.

pub mod config;
pub mod pipeline;
pub mod synth;

pub use config::{LabelSource, PipelineConfig};
pub use pipeline::{Pipeline, PipelineError, Stage, StageReport};
pub use synth::{synth_corpus, write_synth_corpus, SynthParams};
