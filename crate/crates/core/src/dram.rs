//! DRAM datasheet model.
//!
//! Everything the closed-form estimator needs from the external memory:
//! peak double-data-rate bandwidth, the minimum burst transaction, and the
//! row-miss latencies for plain, write-acknowledged and atomic accesses.
//! Refresh is not modelled.

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DramError {
    #[error("dram.{field} must be strictly positive and finite, got {value}")]
    NonPositive { field: &'static str, value: f64 },
    #[error("minimum transaction dq*bl = {bytes} bytes is not a power of two")]
    TransactionNotPowerOfTwo { bytes: u64 },
}

/// Which command sequence a row miss pays for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum RowMissKind {
    /// PRE + ACT.
    Plain,
    /// PRE + ACT plus write recovery.
    WriteAck,
    /// Read-modify-write: two row openings plus write recovery.
    Atomic,
}

/// Timing and organization of the external DRAM, in datasheet units:
/// `dq` in bytes, `bl` in beats, `f_mem` in Hz and latencies in seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DramSpec {
    dq: u32,
    bl: u32,
    f_mem: f64,
    t_rcd: f64,
    t_rp: f64,
    t_wr: f64,
}

fn positive(field: &'static str, value: f64) -> Result<f64, DramError> {
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(DramError::NonPositive { field, value })
    }
}

impl DramSpec {
    pub fn new(dq: u32, bl: u32, f_mem: f64, t_rcd: f64, t_rp: f64, t_wr: f64) -> Result<Self, DramError> {
        positive("dq", f64::from(dq))?;
        positive("bl", f64::from(bl))?;
        let bytes = u64::from(dq) * u64::from(bl);
        if !bytes.is_power_of_two() {
            return Err(DramError::TransactionNotPowerOfTwo { bytes });
        }
        Ok(Self {
            dq,
            bl,
            f_mem: positive("f_mem", f_mem)?,
            t_rcd: positive("t_rcd", t_rcd)?,
            t_rp: positive("t_rp", t_rp)?,
            t_wr: positive("t_wr", t_wr)?,
        })
    }

    /// DDR4-1866 on the Stratix 10 GX development kit: 64-bit bus,
    /// BL8, 933.3 MHz clock, tRCD = tRP = 13.5 ns, tWR = 15 ns.
    pub fn ddr4_1866() -> Self {
        Self::new(8, 8, 933.3e6, 13.5e-9, 13.5e-9, 15e-9).expect("valid datasheet constants")
    }

    pub fn dq(&self) -> u32 {
        self.dq
    }

    pub fn bl(&self) -> u32 {
        self.bl
    }

    pub fn f_mem(&self) -> f64 {
        self.f_mem
    }

    pub fn t_rcd(&self) -> f64 {
        self.t_rcd
    }

    pub fn t_rp(&self) -> f64 {
        self.t_rp
    }

    pub fn t_wr(&self) -> f64 {
        self.t_wr
    }

    /// Same device clocked at `f_mem` Hz.
    pub fn with_f_mem(&self, f_mem: f64) -> Result<Self, DramError> {
        Ok(Self {
            f_mem: positive("f_mem", f_mem)?,
            ..*self
        })
    }

    /// Peak bandwidth in bytes/s; data moves on both clock edges.
    pub fn peak_bandwidth(&self) -> f64 {
        f64::from(self.dq) * 2.0 * self.f_mem
    }

    /// Smallest transaction the DRAM can serve, `dq * bl` bytes.
    pub fn min_transaction_bytes(&self) -> u64 {
        u64::from(self.dq) * u64::from(self.bl)
    }

    pub fn row_miss_latency(&self, kind: RowMissKind) -> f64 {
        let open = self.t_rcd + self.t_rp;
        match kind {
            RowMissKind::Plain => open,
            RowMissKind::WriteAck => open + self.t_wr,
            RowMissKind::Atomic => 2.0 * open + self.t_wr,
        }
    }
}
