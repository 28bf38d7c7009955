use clap::ValueEnum;
use rayon::prelude::*;
use thiserror::Error;

use crate::estimator::{estimate, Boundedness, EstimateReport};
use crate::gmi::LsuKind;
use crate::ingest::{build_kernel, KernelConfig, RtlParamExtract};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
#[value(rename_all = "snake_case")]
pub enum Axis {
    /// SIMD lanes: widens LSUs, replicates write-ack LSUs.
    Simd,
    /// Number of global accesses, cycling through the configured LSUs.
    NLsu,
    /// Access stride of every non-atomic LSU.
    Delta,
    /// Accesses per LSU.
    LsAcc,
    /// DRAM I/O clock in Hz.
    FMem,
}

impl Axis {
    pub fn name(self) -> &'static str {
        match self {
            Axis::Simd => "simd",
            Axis::NLsu => "n_lsu",
            Axis::Delta => "delta",
            Axis::LsAcc => "ls_acc",
            Axis::FMem => "f_mem",
        }
    }

    fn integral(self) -> bool {
        self != Axis::FMem
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SweepError {
    #[error("--values is empty")]
    Empty,
    #[error("--values must be strictly increasing ({prev} then {next})")]
    NotIncreasing { prev: f64, next: f64 },
    #[error("bad value `{0}` for axis {1}")]
    BadValue(String, &'static str),
    #[error("at {axis} = {value}: {reason}")]
    Point {
        axis: &'static str,
        value: f64,
        reason: String,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub axis: Axis,
    pub values: Vec<f64>,
}

impl SweepSpec {
    pub fn parse(axis: Axis, raw: &[String]) -> Result<Self, SweepError> {
        let values = raw
            .iter()
            .map(|s| {
                let v: f64 = s
                    .trim()
                    .parse()
                    .map_err(|_| SweepError::BadValue(s.clone(), axis.name()))?;
                let ok = v.is_finite() && v > 0.0 && (!axis.integral() || (v.fract() == 0.0 && v <= u32::MAX as f64));
                if ok {
                    Ok(v)
                } else {
                    Err(SweepError::BadValue(s.clone(), axis.name()))
                }
            })
            .collect::<Result<Vec<_>, _>>()?;
        if values.is_empty() {
            return Err(SweepError::Empty);
        }
        if let Some(w) = values.windows(2).find(|w| w[1] <= w[0]) {
            return Err(SweepError::NotIncreasing { prev: w[0], next: w[1] });
        }
        Ok(Self { axis, values })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub value: f64,
    pub report: EstimateReport,
}

/// Rewrites `base` for one point of the axis.
pub fn apply_axis(base: &KernelConfig, axis: Axis, value: f64) -> Result<KernelConfig, String> {
    let mut cfg = base.clone();
    let v = value as u32;
    match axis {
        Axis::Delta => {
            for l in cfg.lsus.iter_mut().filter(|l| l.kind != LsuKind::AtomicPipelined) {
                l.delta = Some(v);
            }
        }
        Axis::LsAcc => {
            for l in &mut cfg.lsus {
                l.ls_acc = u64::from(v);
            }
        }
        Axis::FMem => cfg.dram.f_mem = value,
        Axis::NLsu => {
            let n = cfg.lsus.len();
            cfg.lsus = (0..v as usize).map(|i| base.lsus[i % n].clone()).collect();
        }
        Axis::Simd => {
            let mut lsus = Vec::new();
            for (i, l) in base.lsus.iter().enumerate() {
                let f_base = base.lsu_f(i);
                let mut l = l.clone();
                l.f = Some(v);
                match l.kind.normalized() {
                    LsuKind::AtomicPipelined => lsus.push(l),
                    LsuKind::BurstCoalescedWriteAck => {
                        if !v.is_multiple_of(f_base) {
                            return Err(format!("lsu[{i}]: simd {v} is not a multiple of its base f = {f_base}"));
                        }
                        let copies = v / f_base;
                        l.ls_acc = l.ls_acc.div_ceil(u64::from(copies));
                        lsus.extend(std::iter::repeat_n(l, copies as usize));
                    }
                    _ => {
                        if l.ls_width % f_base != 0 {
                            return Err(format!(
                                "lsu[{i}]: ls_width {} is not a multiple of f = {f_base}",
                                l.ls_width
                            ));
                        }
                        l.ls_width = l.ls_width / f_base * v;
                        lsus.push(l);
                    }
                }
            }
            cfg.lsus = lsus;
        }
    }
    Ok(cfg)
}

/// Evaluates every sweep point; rows come back in axis order.
pub fn run_sweep(
    base: &KernelConfig,
    rtl: Option<&RtlParamExtract>,
    spec: &SweepSpec,
) -> Result<Vec<SweepPoint>, SweepError> {
    spec.values
        .par_iter()
        .map(|&value| {
            let point_err = |reason: String| SweepError::Point {
                axis: spec.axis.name(),
                value,
                reason,
            };
            let cfg = apply_axis(base, spec.axis, value).map_err(point_err)?;
            let (kernel, dram) = build_kernel(&cfg, rtl).map_err(|e| point_err(e.to_string()))?;
            let report = estimate(&kernel, &dram).map_err(|e| point_err(e.to_string()))?;
            Ok(SweepPoint { value, report })
        })
        .collect()
}

pub const SWEEP_CSV_HEADER: &str =
    "axis,value,boundedness,occupancy_ratio,t_ideal_total,t_ovh_total,t_exe,effective_bandwidth,t_exe_normalized";

/// `t_exe` of each point divided by that of the first memory-bound point.
pub fn normalized(points: &[SweepPoint]) -> Vec<Option<f64>> {
    let reference = points.iter().find_map(|p| p.report.t_exe);
    points.iter().map(|p| Some(p.report.t_exe? / reference?)).collect()
}

pub fn sweep_csv(axis: Axis, points: &[SweepPoint]) -> String {
    let mut out = format!("{SWEEP_CSV_HEADER}\n");
    for (p, norm) in points.iter().zip(normalized(points)) {
        let r = &p.report;
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        let memory = r.boundedness == Boundedness::MemoryBound;
        out.push_str(&format!(
            "{},{},{:?},{},{},{},{},{},{}\n",
            axis.name(),
            p.value,
            r.boundedness,
            r.occupancy_ratio,
            opt(memory.then(|| r.t_ideal_total())),
            opt(memory.then(|| r.t_ovh_total())),
            opt(r.t_exe),
            opt(r.effective_bandwidth),
            opt(norm),
        ));
    }
    out
}
