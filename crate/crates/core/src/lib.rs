pub mod diag;
pub mod fs;
pub mod lmf;
pub mod merger;
pub mod pipeline;
pub mod rules;
pub mod schema;
pub mod synth;
pub mod text;
