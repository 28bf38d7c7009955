use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use super::sim::{simulate, LsuPort, SimConfig, SimError, SimResult};
use super::trace::{Request, RequestStream};
use crate::dram::{DramSpec, RowMissKind};
use crate::estimator::{estimate, Boundedness, EstimateError};
use crate::gmi::{KernelModel, Lsu, LsuKind};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CompareError {
    #[error("kernel is compute bound (occupancy ratio {ratio:.2}); no execution time to compare")]
    NotApplicable { ratio: f64 },
    #[error("lsu[{index}] of kind `{kind}` cannot be replayed by the simulator")]
    Unsupported { index: usize, kind: LsuKind },
    #[error(transparent)]
    Estimate(#[from] EstimateError),
    #[error(transparent)]
    Sim(#[from] SimError),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Comparison {
    pub model_time: f64,
    pub oracle_time: f64,
    /// `|oracle - model| / oracle`.
    pub relative_error: f64,
    pub sim: SimResult,
}

const MAX_GAP_PAGES: u64 = 16;

fn port_for(index: usize, lsu: &Lsu) -> Result<LsuPort, CompareError> {
    let miss = match lsu.descriptor.kind.normalized() {
        LsuKind::BurstCoalescedAligned | LsuKind::BurstCoalescedNonAligned => RowMissKind::Plain,
        LsuKind::BurstCoalescedWriteAck => RowMissKind::WriteAck,
        kind => return Err(CompareError::Unsupported { index, kind }),
    };
    Ok(LsuPort {
        burst_cnt: lsu.descriptor.burst_cnt,
        max_th: lsu.descriptor.max_th,
        miss,
    })
}

fn lsu_stream(index: usize, lsu: &Lsu, base: u64, rng: &mut ChaCha8Rng) -> RequestStream {
    let d = &lsu.descriptor;
    let p = &lsu.profile;
    let total = p.ls_acc * u64::from(p.ls_bytes);
    match d.kind.normalized() {
        LsuKind::BurstCoalescedWriteAck => {
            // data-dependent indices: one work item per request
            let step = u64::from(p.delta) * u64::from(p.ls_bytes);
            RequestStream {
                requests: (0..p.ls_acc)
                    .map(|_| Request {
                        lsu: index,
                        address: base + rng.random_range(0..p.ls_acc) * step,
                        length: p.ls_bytes,
                    })
                    .collect(),
            }
        }
        kind => {
            let offset = if kind == LsuKind::BurstCoalescedNonAligned {
                u64::from(p.ls_bytes)
            } else {
                0
            };
            let count = total.div_ceil(u64::from(d.ls_width));
            RequestStream::strided(index, base + offset, count, d.ls_width, p.delta)
        }
    }
}

fn span_bytes(lsu: &Lsu) -> u64 {
    let p = &lsu.profile;
    let width = u64::from(lsu.descriptor.ls_width.max(p.ls_bytes));
    (p.ls_acc * u64::from(p.ls_bytes)).div_ceil(width) * width * u64::from(p.delta) + width
}

/// Builds the request streams and simulator setup that correspond to a
/// kernel's access profiles. Each LSU gets its own page-aligned region; the
/// seed picks the gaps between regions and any random indices.
pub fn kernel_streams(
    kernel: &KernelModel,
    dram: &DramSpec,
    seed: u64,
) -> Result<(RequestStream, SimConfig), CompareError> {
    let ports = kernel
        .lsus
        .iter()
        .enumerate()
        .map(|(i, l)| port_for(i, l))
        .collect::<Result<Vec<_>, _>>()?;
    let cfg = SimConfig::new(*dram, ports)?;
    let page = cfg.page_bytes;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cursor = 0u64;
    let mut streams = Vec::with_capacity(kernel.lsus.len());
    for (i, lsu) in kernel.lsus.iter().enumerate() {
        let base = cursor + rng.random_range(0..MAX_GAP_PAGES) * page;
        streams.push(lsu_stream(i, lsu, base, &mut rng));
        cursor = (base + span_bytes(lsu)).div_ceil(page) * page;
    }
    Ok((RequestStream::interleave(streams), cfg))
}

/// Relative error between the closed-form estimate and a replay of the
/// kernel's streams through the simulator.
pub fn compare(kernel: &KernelModel, dram: &DramSpec, seed: u64) -> Result<Comparison, CompareError> {
    let report = estimate(kernel, dram)?;
    let model_time = match (report.boundedness, report.t_exe) {
        (Boundedness::MemoryBound, Some(t)) => t,
        _ => {
            return Err(CompareError::NotApplicable {
                ratio: report.occupancy_ratio,
            })
        }
    };
    let (stream, cfg) = kernel_streams(kernel, dram, seed)?;
    let sim = simulate(&stream, &cfg)?;
    let oracle_time = sim.total_time;
    Ok(Comparison {
        model_time,
        oracle_time,
        relative_error: (oracle_time - model_time).abs() / oracle_time,
        sim,
    })
}
