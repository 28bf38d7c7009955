//! Global Memory Interconnect description: the load/store units an HLS
//! compiler generated for a kernel, their synthesized parameters, and the
//! user-provided dynamic access profile for each of them.

use std::fmt;

use serde::Serialize;

/// Largest accepted Avalon `burst_count` port width.
pub const MAX_BURST_CNT: u32 = 16;

/// Width in bytes of the only data type atomic LSUs support (32-bit int).
pub const ATOMIC_WIDTH: u32 = 4;

/// Global-memory LSU type, with the burst-coalesced modifier folded in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum LsuKind {
    BurstCoalescedAligned,
    BurstCoalescedNonAligned,
    BurstCoalescedWriteAck,
    /// Accepted on input, rejected by the estimator.
    BurstCoalescedCache,
    AtomicPipelined,
    Prefetching,
}

impl LsuKind {
    pub const ALL: [LsuKind; 6] = [
        LsuKind::BurstCoalescedAligned,
        LsuKind::BurstCoalescedNonAligned,
        LsuKind::BurstCoalescedWriteAck,
        LsuKind::BurstCoalescedCache,
        LsuKind::AtomicPipelined,
        LsuKind::Prefetching,
    ];

    /// Prefetching LSUs are compiled as burst-coalesced aligned ones.
    pub fn normalized(self) -> LsuKind {
        match self {
            LsuKind::Prefetching => LsuKind::BurstCoalescedAligned,
            other => other,
        }
    }

    pub fn is_burst_coalesced(self) -> bool {
        !matches!(self, LsuKind::AtomicPipelined)
    }

    /// Name used in kernel config files.
    pub fn config_name(self) -> &'static str {
        match self {
            LsuKind::BurstCoalescedAligned => "aligned",
            LsuKind::BurstCoalescedNonAligned => "non_aligned",
            LsuKind::BurstCoalescedWriteAck => "write_ack",
            LsuKind::BurstCoalescedCache => "cache",
            LsuKind::AtomicPipelined => "atomic",
            LsuKind::Prefetching => "prefetching",
        }
    }

    pub fn from_config_name(name: &str) -> Option<LsuKind> {
        LsuKind::ALL.into_iter().find(|k| k.config_name() == name)
    }
}

impl fmt::Display for LsuKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.config_name())
    }
}

pub fn normalize_kind(kind: LsuKind) -> LsuKind {
    kind.normalized()
}

/// Synthesized hardware parameters of one LSU.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct LsuDescriptor {
    pub kind: LsuKind,
    /// Bytes presented by the kernel pipeline per request.
    pub ls_width: u32,
    /// Width of the Avalon `burst_count` port (`BURSTCOUNT_WIDTH`).
    pub burst_cnt: u32,
    /// Threads folded into one burst at most (`MAX_THREADS`).
    pub max_th: u32,
}

/// Dynamic facts about one LSU that the compiler cannot know.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct AccessProfile {
    pub ls_acc: u64,
    pub ls_bytes: u32,
    pub delta: u32,
    /// SIMD lanes times unroll factor.
    pub f: u32,
    pub atomic_val_constant: bool,
}

impl AccessProfile {
    pub fn contiguous(ls_acc: u64, ls_bytes: u32) -> Self {
        Self {
            ls_acc,
            ls_bytes,
            delta: 1,
            f: 1,
            atomic_val_constant: false,
        }
    }

    pub fn total_bytes(&self) -> f64 {
        self.ls_acc as f64 * f64::from(self.ls_bytes)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Lsu {
    pub descriptor: LsuDescriptor,
    pub profile: AccessProfile,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct KernelModel {
    pub name: String,
    pub lsus: Vec<Lsu>,
}

impl KernelModel {
    pub fn n_lsu(&self) -> usize {
        self.lsus.len()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    EmptyKernel,
    ZeroField {
        lsu: usize,
        field: &'static str,
    },
    BurstCountTooWide {
        lsu: usize,
        burst_cnt: u32,
    },
    AtomicWidth {
        lsu: usize,
        field: &'static str,
        value: u32,
    },
    AtomicStrideViolation {
        lsu: usize,
        delta: u32,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::EmptyKernel => write!(f, "kernel has no load/store units"),
            Violation::ZeroField { lsu, field } => write!(f, "lsu[{lsu}].{field} must be >= 1"),
            Violation::BurstCountTooWide { lsu, burst_cnt } => {
                write!(f, "lsu[{lsu}].burst_cnt = {burst_cnt} exceeds {MAX_BURST_CNT}")
            }
            Violation::AtomicWidth { lsu, field, value } => write!(
                f,
                "lsu[{lsu}].{field} = {value}, atomic LSUs operate on {ATOMIC_WIDTH}-byte integers"
            ),
            Violation::AtomicStrideViolation { lsu, delta } => {
                write!(f, "lsu[{lsu}].delta = {delta}, atomic LSUs always have stride 1")
            }
        }
    }
}

/// Lists every broken invariant of `kernel`; empty means well-formed.
pub fn validate_kernel(kernel: &KernelModel) -> Vec<Violation> {
    let mut out = Vec::new();
    if kernel.lsus.is_empty() {
        out.push(Violation::EmptyKernel);
    }
    for (i, lsu) in kernel.lsus.iter().enumerate() {
        let d = &lsu.descriptor;
        let p = &lsu.profile;
        let positive: [(&'static str, u64); 6] = [
            ("ls_width", d.ls_width.into()),
            ("max_th", d.max_th.into()),
            ("ls_acc", p.ls_acc),
            ("ls_bytes", p.ls_bytes.into()),
            ("delta", p.delta.into()),
            ("f", p.f.into()),
        ];
        for (field, value) in positive {
            if value == 0 {
                out.push(Violation::ZeroField { lsu: i, field });
            }
        }
        if d.burst_cnt > MAX_BURST_CNT {
            out.push(Violation::BurstCountTooWide {
                lsu: i,
                burst_cnt: d.burst_cnt,
            });
        }
        if d.kind == LsuKind::AtomicPipelined {
            for (field, value) in [("ls_width", d.ls_width), ("ls_bytes", p.ls_bytes)] {
                if value != ATOMIC_WIDTH {
                    out.push(Violation::AtomicWidth { lsu: i, field, value });
                }
            }
            if p.delta != 1 {
                out.push(Violation::AtomicStrideViolation { lsu: i, delta: p.delta });
            }
        }
    }
    out
}
