//! Execution-time estimation for memory-bound FPGA kernels compiled with
//! high-level synthesis, driven by the organization of the generated global
//! memory interconnect and the DRAM datasheet.

pub mod cli;
pub mod dram;
pub mod estimator;
pub mod gmi;
pub mod ingest;
pub mod oracle;
