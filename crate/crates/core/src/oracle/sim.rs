//! Brute-force replay of LSU request streams against a single open row.
//!
//! Each LSU has a coalescer that folds contiguous requests into bursts. A
//! burst is closed when it reaches the largest transaction the Avalon
//! `burst_count` port allows, when it holds `max_th` requests, or when the
//! next request does not continue it. Closed bursts queue per LSU (FIFOs
//! are unbounded: a memory-bound pipeline keeps them full) and a
//! round-robin arbiter grants one burst at a time to the DRAM.
//!
//! The DRAM keeps one row open. A burst that starts in the open row costs
//! only its transfer. A burst that continues the previous burst of the same
//! LSU byte-for-byte into the next row is streamed, with bank interleaving
//! hiding the activation. Any other row change pays the port's row-miss
//! latency. Latency and transfer are serialized.

use std::collections::VecDeque;

use serde::Serialize;
use thiserror::Error;

use super::trace::RequestStream;
use crate::dram::{DramSpec, RowMissKind};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("request stream is empty")]
    EmptyStream,
    #[error("request {index} targets lsu {lsu} but only {ports} ports are configured")]
    UnknownLsu { index: usize, lsu: usize, ports: usize },
    #[error("request {index} has zero length")]
    ZeroLength { index: usize },
    #[error("page size {0} is not a positive power of two")]
    PageSize(u64),
    #[error("at least one LSU port is required")]
    NoPorts,
    #[error("port {0} has max_th = 0")]
    ZeroThreads(usize),
}

/// Coalescer limits and row-miss cost of one LSU.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LsuPort {
    pub burst_cnt: u32,
    pub max_th: u32,
    pub miss: RowMissKind,
}

impl LsuPort {
    pub fn max_burst_bytes(&self, dram: &DramSpec) -> u64 {
        (1u64 << self.burst_cnt) * dram.min_transaction_bytes()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub dram: DramSpec,
    pub page_bytes: u64,
    pub ports: Vec<LsuPort>,
}

impl SimConfig {
    /// Page size defaults to the largest burst of the widest port.
    pub fn new(dram: DramSpec, ports: Vec<LsuPort>) -> Result<Self, SimError> {
        if ports.is_empty() {
            return Err(SimError::NoPorts);
        }
        if let Some(i) = ports.iter().position(|p| p.max_th == 0) {
            return Err(SimError::ZeroThreads(i));
        }
        let page_bytes = ports.iter().map(|p| p.max_burst_bytes(&dram)).max().unwrap_or(1);
        Ok(Self {
            dram,
            page_bytes,
            ports,
        })
    }

    pub fn with_page_bytes(mut self, page_bytes: u64) -> Result<Self, SimError> {
        if !page_bytes.is_power_of_two() {
            return Err(SimError::PageSize(page_bytes));
        }
        self.page_bytes = page_bytes;
        Ok(self)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct LsuStats {
    pub bursts: u64,
    pub row_hits: u64,
    pub row_misses: u64,
    /// Row changes hidden by streaming.
    pub streamed_rows: u64,
    pub requested_bytes: u64,
    pub transferred_bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimResult {
    pub total_time: f64,
    pub per_lsu: Vec<LsuStats>,
}

impl SimResult {
    pub fn requested_bytes(&self) -> u64 {
        self.per_lsu.iter().map(|s| s.requested_bytes).sum()
    }

    pub fn transferred_bytes(&self) -> u64 {
        self.per_lsu.iter().map(|s| s.transferred_bytes).sum()
    }

    pub fn bursts(&self) -> u64 {
        self.per_lsu.iter().map(|s| s.bursts).sum()
    }

    pub fn row_misses(&self) -> u64 {
        self.per_lsu.iter().map(|s| s.row_misses).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Burst {
    address: u64,
    bytes: u64,
    threads: u32,
}

impl Burst {
    fn end(&self) -> u64 {
        self.address + self.bytes
    }
}

struct Coalescer {
    max_bytes: u64,
    max_th: u32,
    open: Option<Burst>,
    out: VecDeque<Burst>,
}

impl Coalescer {
    fn flush(&mut self) {
        if let Some(b) = self.open.take() {
            self.out.push_back(b);
        }
    }

    fn push(&mut self, address: u64, bytes: u64) {
        let joins = self
            .open
            .is_some_and(|b| b.end() == address && b.bytes + bytes <= self.max_bytes && b.threads < self.max_th);
        if !joins {
            self.flush();
        }
        let burst = self.open.get_or_insert(Burst {
            address,
            bytes: 0,
            threads: 0,
        });
        burst.bytes += bytes;
        burst.threads += 1;
        if burst.bytes == self.max_bytes || burst.threads == self.max_th {
            self.flush();
        }
    }

    fn request(&mut self, address: u64, length: u64) {
        // requests wider than a full burst are split into full bursts
        let mut at = address;
        let end = address + length;
        while at < end {
            let piece = (end - at).min(self.max_bytes);
            self.push(at, piece);
            at += piece;
        }
    }
}

pub fn simulate(stream: &RequestStream, cfg: &SimConfig) -> Result<SimResult, SimError> {
    if stream.is_empty() {
        return Err(SimError::EmptyStream);
    }
    if !cfg.page_bytes.is_power_of_two() {
        return Err(SimError::PageSize(cfg.page_bytes));
    }
    let n = cfg.ports.len();
    let mut coalescers: Vec<Coalescer> = cfg
        .ports
        .iter()
        .map(|p| Coalescer {
            max_bytes: p.max_burst_bytes(&cfg.dram),
            max_th: p.max_th,
            open: None,
            out: VecDeque::new(),
        })
        .collect();
    let mut stats = vec![LsuStats::default(); n];
    for (index, r) in stream.requests.iter().enumerate() {
        if r.lsu >= n {
            return Err(SimError::UnknownLsu {
                index,
                lsu: r.lsu,
                ports: n,
            });
        }
        if r.length == 0 {
            return Err(SimError::ZeroLength { index });
        }
        coalescers[r.lsu].request(r.address, u64::from(r.length));
        stats[r.lsu].requested_bytes += u64::from(r.length);
    }
    for c in &mut coalescers {
        c.flush();
    }

    let dram = &cfg.dram;
    let txn = dram.min_transaction_bytes();
    let bandwidth = dram.peak_bandwidth();
    let mut open_row: Option<u64> = None;
    let mut last: Option<(usize, u64)> = None;
    let mut next = 0;
    while let Some(lsu) = (0..n).map(|k| (next + k) % n).find(|&i| !coalescers[i].out.is_empty()) {
        next = (lsu + 1) % n;
        let burst = coalescers[lsu].out.pop_front().expect("non-empty queue");
        let first_row = burst.address / cfg.page_bytes;
        let last_row = (burst.end() - 1) / cfg.page_bytes;
        let s = &mut stats[lsu];
        s.bursts += 1;
        if open_row == Some(first_row) {
            s.row_hits += 1;
        } else if last == Some((lsu, burst.address)) && open_row.map(|r| r + 1) == Some(first_row) {
            s.streamed_rows += 1;
        } else {
            s.row_misses += 1;
        }
        s.streamed_rows += last_row - first_row;
        let transferred = burst.bytes.div_ceil(txn) * txn;
        s.transferred_bytes += transferred;
        open_row = Some(last_row);
        last = Some((lsu, burst.end()));
    }
    // The DRAM is never idle, so the last burst completes after every
    // transfer and every activation. Summing counts keeps the total
    // independent of grant order.
    let bytes: u64 = stats.iter().map(|s| s.transferred_bytes).sum();
    let activations: f64 = stats
        .iter()
        .zip(&cfg.ports)
        .map(|(s, p)| s.row_misses as f64 * dram.row_miss_latency(p.miss))
        .sum();
    Ok(SimResult {
        total_time: bytes as f64 / bandwidth + activations,
        per_lsu: stats,
    })
}
