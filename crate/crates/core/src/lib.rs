pub mod cli;
pub mod cover;
pub mod estimate;
pub mod hypergraph;
pub mod instances;
mod lp;
pub mod oracle;
pub mod pattern;
pub mod sketch;
