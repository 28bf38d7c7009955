//! Closed-form execution-time model for memory-bound kernels.
//!
//! A kernel is first classified by how much data its LSUs present per
//! cycle relative to the minimum DRAM transaction. Memory-bound kernels get
//! an execution time that sums, per LSU, the ideal transfer time plus the
//! row-miss overhead, scaled by the access stride.

use serde::Serialize;
use thiserror::Error;

use crate::dram::{DramSpec, RowMissKind};
use crate::gmi::{validate_kernel, AccessProfile, KernelModel, Lsu, LsuDescriptor, LsuKind, Violation};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EstimateError {
    #[error("lsu[{index}] has kind `{kind}` which the model does not cover")]
    UnsupportedLsu { index: usize, kind: LsuKind },
    #[error("invalid kernel: {}", join_violations(.0))]
    InvalidKernel(Vec<Violation>),
}

fn join_violations(v: &[Violation]) -> String {
    v.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Boundedness {
    MemoryBound,
    ComputeBound,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LsuEstimate {
    pub kind: LsuKind,
    pub delta: u32,
    pub t_ideal: f64,
    pub t_ovh: f64,
    pub burst_size: f64,
    pub k_lsu: f64,
    pub t_row: f64,
    pub weighted_time: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimateReport {
    pub kernel: String,
    pub boundedness: Boundedness,
    pub occupancy_ratio: f64,
    /// Empty for compute-bound kernels.
    pub per_lsu: Vec<LsuEstimate>,
    pub t_exe: Option<f64>,
    pub effective_bandwidth: Option<f64>,
}

impl EstimateReport {
    /// Stride-weighted sum of ideal transfer times.
    pub fn t_ideal_total(&self) -> f64 {
        self.per_lsu.iter().map(|e| f64::from(e.delta) * e.t_ideal).sum()
    }

    /// Stride-weighted sum of row-miss overheads.
    pub fn t_ovh_total(&self) -> f64 {
        self.per_lsu.iter().map(|e| f64::from(e.delta) * e.t_ovh).sum()
    }
}

fn check_supported(index: usize, kind: LsuKind) -> Result<LsuKind, EstimateError> {
    match kind.normalized() {
        LsuKind::BurstCoalescedCache => Err(EstimateError::UnsupportedLsu { index, kind }),
        k => Ok(k),
    }
}

/// Occupancy coefficient of one LSU in the boundedness test.
///
/// Aligned and non-aligned LSUs issue one burst per cycle limited by the
/// stride; write-ack LSUs use 1. Atomic LSUs serialize a full row cycle per
/// operation, so their coefficient is chosen to make each contribute exactly
/// one unit of occupancy.
pub fn occupancy_coefficient(lsu: &Lsu, dram: &DramSpec) -> Result<f64, EstimateError> {
    occupancy_coefficient_at(0, lsu, dram)
}

fn occupancy_coefficient_at(index: usize, lsu: &Lsu, dram: &DramSpec) -> Result<f64, EstimateError> {
    Ok(match check_supported(index, lsu.descriptor.kind)? {
        LsuKind::BurstCoalescedAligned | LsuKind::BurstCoalescedNonAligned => f64::from(lsu.profile.delta),
        LsuKind::BurstCoalescedWriteAck => 1.0,
        LsuKind::AtomicPipelined => f64::from(lsu.descriptor.ls_width) / dram.min_transaction_bytes() as f64,
        LsuKind::BurstCoalescedCache | LsuKind::Prefetching => unreachable!("normalized away"),
    })
}

fn ensure_valid(kernel: &KernelModel) -> Result<(), EstimateError> {
    let violations = validate_kernel(kernel);
    if violations.is_empty() {
        Ok(())
    } else {
        Err(EstimateError::InvalidKernel(violations))
    }
}

/// Memory/compute classification with the raw occupancy ratio.
pub fn classify(kernel: &KernelModel, dram: &DramSpec) -> Result<(Boundedness, f64), EstimateError> {
    ensure_valid(kernel)?;
    let txn = dram.min_transaction_bytes() as f64;
    let mut ratio = 0.0;
    for (i, lsu) in kernel.lsus.iter().enumerate() {
        let k = occupancy_coefficient_at(i, lsu, dram)?;
        ratio += f64::from(lsu.descriptor.ls_width) / (txn * k);
    }
    let bound = if ratio >= 1.0 {
        Boundedness::MemoryBound
    } else {
        Boundedness::ComputeBound
    };
    Ok((bound, ratio))
}

/// Minimum time to move every byte of the profile at peak bandwidth.
pub fn t_ideal(profile: &AccessProfile, dram: &DramSpec) -> f64 {
    profile.total_bytes() / dram.peak_bandwidth()
}

/// Largest burst an aligned coalescer can assemble.
pub fn burst_size_aligned(lsu: &LsuDescriptor, dram: &DramSpec) -> f64 {
    2f64.powi(lsu.burst_cnt as i32) * dram.min_transaction_bytes() as f64
}

/// Longest request a non-aligned coalescer emits before its thread limit.
pub fn max_requests_non_aligned(lsu: &LsuDescriptor, profile: &AccessProfile) -> f64 {
    f64::from(lsu.max_th) * f64::from(lsu.ls_width) / (f64::from(profile.delta) + 1.0)
}

/// Effective burst of a non-aligned coalescer: the thread limit wins while
/// it fits in one full burst, otherwise only the strided share of a request
/// is useful.
pub fn burst_size_non_aligned(lsu: &LsuDescriptor, profile: &AccessProfile, dram: &DramSpec) -> f64 {
    let max_reqs = max_requests_non_aligned(lsu, profile);
    let delta = f64::from(profile.delta);
    if max_reqs <= burst_size_aligned(lsu, dram) {
        max_reqs / delta
    } else {
        f64::from(lsu.ls_width) / delta
    }
}

fn burst_geometry(kind: LsuKind, lsu: &LsuDescriptor, profile: &AccessProfile, dram: &DramSpec) -> Option<(f64, f64)> {
    match kind.normalized() {
        LsuKind::BurstCoalescedAligned => {
            Some((burst_size_aligned(lsu, dram), dram.row_miss_latency(RowMissKind::Plain)))
        }
        LsuKind::BurstCoalescedNonAligned => Some((
            burst_size_non_aligned(lsu, profile, dram),
            dram.row_miss_latency(RowMissKind::Plain),
        )),
        LsuKind::BurstCoalescedWriteAck => Some((
            burst_size_aligned(lsu, dram),
            dram.row_miss_latency(RowMissKind::WriteAck),
        )),
        _ => None,
    }
}

/// Row-miss overhead of a burst-coalesced LSU in a kernel with `n_lsu`
/// LSUs. A lone LSU streams through rows with bank interleaving and pays
/// nothing.
pub fn t_ovh_burst(
    lsu: &LsuDescriptor,
    profile: &AccessProfile,
    dram: &DramSpec,
    n_lsu: usize,
) -> Result<f64, EstimateError> {
    let (burst_size, t_row) = burst_geometry(lsu.kind, lsu, profile, dram).ok_or(EstimateError::UnsupportedLsu {
        index: 0,
        kind: lsu.kind,
    })?;
    if n_lsu < 2 {
        return Ok(0.0);
    }
    Ok(profile.total_bytes() / burst_size * t_row)
}

/// Overhead of a single atomic operation. A loop-constant operand lets the
/// compiler fold `f` operations into one read-modify-write.
pub fn t_ovh_atomic(profile: &AccessProfile, dram: &DramSpec) -> f64 {
    let t_row = dram.row_miss_latency(RowMissKind::Atomic);
    if profile.atomic_val_constant {
        t_row / f64::from(profile.f)
    } else {
        t_row
    }
}

/// Write-ack bursts carry only `ls_bytes` of each minimum transaction.
pub fn write_ack_underuse(profile: &AccessProfile, dram: &DramSpec) -> f64 {
    (dram.min_transaction_bytes() as f64 / f64::from(profile.ls_bytes)).max(1.0)
}

fn estimate_lsu(index: usize, lsu: &Lsu, dram: &DramSpec, n_lsu: usize) -> Result<LsuEstimate, EstimateError> {
    let d = &lsu.descriptor;
    let p = &lsu.profile;
    let kind = check_supported(index, d.kind)?;
    let k_lsu = occupancy_coefficient_at(index, lsu, dram)?;
    let (t_ideal, t_ovh, burst_size, t_row) = match kind {
        LsuKind::AtomicPipelined => (
            t_ideal(p, dram),
            p.ls_acc as f64 * t_ovh_atomic(p, dram),
            f64::from(d.ls_width),
            dram.row_miss_latency(RowMissKind::Atomic),
        ),
        _ => {
            let (burst_size, t_row) = burst_geometry(kind, d, p, dram).expect("burst-coalesced kind");
            let mut ideal = t_ideal(p, dram);
            if kind == LsuKind::BurstCoalescedWriteAck {
                ideal *= write_ack_underuse(p, dram);
            }
            let ovh =
                t_ovh_burst(d, p, dram, n_lsu).map_err(|_| EstimateError::UnsupportedLsu { index, kind: d.kind })?;
            (ideal, ovh, burst_size, t_row)
        }
    };
    Ok(LsuEstimate {
        kind: d.kind,
        delta: p.delta,
        t_ideal,
        t_ovh,
        burst_size,
        k_lsu,
        t_row,
        weighted_time: f64::from(p.delta) * (t_ideal + t_ovh),
    })
}

/// Full estimate. Compute-bound kernels come back without an execution time.
pub fn estimate(kernel: &KernelModel, dram: &DramSpec) -> Result<EstimateReport, EstimateError> {
    let (boundedness, occupancy_ratio) = classify(kernel, dram)?;
    let mut report = EstimateReport {
        kernel: kernel.name.clone(),
        boundedness,
        occupancy_ratio,
        per_lsu: Vec::new(),
        t_exe: None,
        effective_bandwidth: None,
    };
    if boundedness == Boundedness::ComputeBound {
        return Ok(report);
    }
    let n_lsu = kernel.n_lsu();
    report.per_lsu = kernel
        .lsus
        .iter()
        .enumerate()
        .map(|(i, lsu)| estimate_lsu(i, lsu, dram, n_lsu))
        .collect::<Result<_, _>>()?;
    let t_exe: f64 = report.per_lsu.iter().map(|e| e.weighted_time).sum();
    let bytes: f64 = kernel.lsus.iter().map(|l| l.profile.total_bytes()).sum();
    report.t_exe = Some(t_exe);
    report.effective_bandwidth = Some(bytes / t_exe);
    Ok(report)
}
