pub mod astcore;
pub mod diffcore;
pub mod editscript;
pub mod pytok;
pub mod sstub;
pub mod analysis;
pub mod record;
pub mod pipeline;
pub mod cli;
