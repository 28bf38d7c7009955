//! Event-level reference simulator used to check the closed-form model on
//! small instances.

mod compare;
mod sim;
mod trace;

pub use compare::{compare, kernel_streams, CompareError, Comparison};
pub use sim::{simulate, LsuPort, LsuStats, SimConfig, SimError, SimResult};
pub use trace::{Request, RequestStream, TraceError};
