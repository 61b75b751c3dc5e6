pub mod eval;
pub mod flops;
pub mod generate;
pub mod train;
