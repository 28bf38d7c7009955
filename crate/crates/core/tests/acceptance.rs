//! One pass/fail line per acceptance criterion. Runs as a plain binary so
//! the lines are always printed; exits non-zero if any criterion fails.

use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::time::Instant;

use gmi_perf::dram::{DramSpec, RowMissKind};
use gmi_perf::estimator::{burst_size_non_aligned, classify, estimate, t_ideal, t_ovh_atomic, Boundedness};
use gmi_perf::gmi::{AccessProfile, KernelModel, Lsu, LsuDescriptor, LsuKind};
use gmi_perf::ingest::{extract_rtl_files, parse_config, serialize_config, RtlError, BURSTCOUNT_WIDTH, MAX_THREADS};
use gmi_perf::oracle::compare;
use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

const ORACLE_SEED: u64 = 20240229;
// Relative errors seen with ORACLE_SEED on a 4 MiB-per-LSU stream: the
// single LSU pays one extra activation, the interleaved kernel misses on
// every burst exactly as the model assumes.
const OBSERVED_SINGLE_LSU_ERROR: f64 = 9.62e-5;
const OBSERVED_THREE_LSU_ERROR: f64 = 1e-12;

fn ddr4() -> DramSpec {
    DramSpec::ddr4_1866()
}

fn lsu(kind: LsuKind, ls_width: u32, profile: AccessProfile) -> Lsu {
    Lsu {
        descriptor: LsuDescriptor {
            kind,
            ls_width,
            burst_cnt: 4,
            max_th: 64,
        },
        profile,
    }
}

fn kernel(lsus: Vec<Lsu>) -> KernelModel {
    KernelModel {
        name: "acceptance".into(),
        lsus,
    }
}

fn aligned(n: usize, ls_width: u32) -> KernelModel {
    kernel(vec![
        lsu(
            LsuKind::BurstCoalescedAligned,
            ls_width,
            AccessProfile::contiguous(1 << 20, 4)
        );
        n
    ])
}

fn close(got: f64, want: f64, rel: f64) -> bool {
    (got - want).abs() <= rel * want.abs()
}

fn check(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn configs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs")
}

fn dram_constants() -> Outcome {
    let d = ddr4();
    let ulp = 4.0 * f64::EPSILON;
    check(
        close(d.peak_bandwidth(), 14.9328e9, ulp),
        format!("bandwidth {}", d.peak_bandwidth()),
    )?;
    for (kind, want) in [
        (RowMissKind::Plain, 27e-9),
        (RowMissKind::WriteAck, 42e-9),
        (RowMissKind::Atomic, 69e-9),
    ] {
        let got = d.row_miss_latency(kind);
        check(close(got, want, ulp), format!("{kind:?} latency {got}"))?;
    }
    Ok("bandwidth 14.9328 GB/s, row miss 27/42/69 ns".into())
}

fn classification_boundary() -> Outcome {
    let d = ddr4();
    let cases = [
        (aligned(1, 64), 1.0, Boundedness::MemoryBound),
        (aligned(1, 32), 0.5, Boundedness::ComputeBound),
        (aligned(3, 32), 1.5, Boundedness::MemoryBound),
    ];
    for (k, ratio, want) in &cases {
        let got = classify(k, &d).map_err(|e| e.to_string())?;
        check(
            got == (*want, *ratio),
            format!("expected {want:?} at {ratio}, got {got:?}"),
        )?;
    }
    let mut runner = TestRunner::new(Config {
        cases: 1000,
        failure_persistence: None,
        ..Config::default()
    });
    runner
        .run(&(1u32..=512, 1usize..=4, 1u32..=4), |(w, n, delta)| {
            let k = kernel(vec![
                lsu(
                    LsuKind::BurstCoalescedAligned,
                    w,
                    AccessProfile {
                        delta,
                        ..AccessProfile::contiguous(1024, 4)
                    }
                );
                n
            ]);
            let (b, ratio) = classify(&k, &ddr4()).unwrap();
            let exact = (n as f64) * f64::from(w) / (64.0 * f64::from(delta));
            prop_assert_eq!(ratio, exact);
            prop_assert_eq!(b == Boundedness::MemoryBound, ratio >= 1.0);
            Ok(())
        })
        .map_err(|e| e.to_string())?;
    Ok("ratios 1.0/0.5/1.5 classified; boundary at 1 over 1000 random kernels".into())
}

fn full_chain() -> Outcome {
    let d = ddr4();
    let three = estimate(&aligned(3, 64), &d).map_err(|e| e.to_string())?;
    let t3 = three.t_exe.ok_or("3-LSU kernel has no t_exe")?;
    check(close(t3, 1.1744e-3, 1e-4), format!("3-LSU t_exe {t3}"))?;
    let one = estimate(&aligned(1, 64), &d).map_err(|e| e.to_string())?;
    let t1 = one.t_exe.ok_or("1-LSU kernel has no t_exe")?;
    check(close(t1, 280.88e-6, 1e-4), format!("1-LSU t_exe {t1}"))?;
    check(
        one.per_lsu[0].t_ovh == 0.0,
        format!("1-LSU t_ovh {}", one.per_lsu[0].t_ovh),
    )?;
    Ok(format!(
        "t_exe(3 LSU) = {t3:.7e} s, t_exe(1 LSU) = {t1:.7e} s, t_ovh(1 LSU) = 0"
    ))
}

fn non_aligned_branches() -> Outcome {
    let d = ddr4();
    let desc = LsuDescriptor {
        kind: LsuKind::BurstCoalescedNonAligned,
        ls_width: 64,
        burst_cnt: 4,
        max_th: 64,
    };
    let p3 = AccessProfile {
        delta: 3,
        ..AccessProfile::contiguous(1024, 4)
    };
    let p1 = AccessProfile::contiguous(1024, 4);
    let b3 = burst_size_non_aligned(&desc, &p3, &d);
    let b1 = burst_size_non_aligned(&desc, &p1, &d);
    check(b3 == 1024.0 / 3.0, format!("delta 3 burst {b3}"))?;
    check(b1 == 64.0, format!("delta 1 burst {b1}"))?;
    Ok(format!(
        "burst size {b3:.2} (requests fit) and {b1} (requests overflow)"
    ))
}

fn atomic_linearity() -> Outcome {
    let d = ddr4();
    let ls_acc = 1 << 16;
    let profile = |constant| AccessProfile {
        f: 16,
        atomic_val_constant: constant,
        ..AccessProfile::contiguous(ls_acc, 4)
    };
    let mut atomic = lsu(LsuKind::AtomicPipelined, 4, profile(false));
    atomic.descriptor.burst_cnt = 0;
    let per_access = t_ovh_atomic(&atomic.profile, &d);
    let ideal = t_ideal(&atomic.profile, &d);
    let mut times = Vec::new();
    for ga in 1..=4 {
        let r = estimate(&kernel(vec![atomic; ga]), &d).map_err(|e| e.to_string())?;
        let t = r.t_exe.ok_or(format!("#ga={ga} has no t_exe"))?;
        let ovh = r.t_ovh_total();
        let want_ovh = ga as f64 * ls_acc as f64 * per_access;
        check(
            close(ovh, want_ovh, 1e-12),
            format!("#ga={ga} overhead {ovh} vs {want_ovh}"),
        )?;
        times.push(t);
    }
    let slope = ideal + ls_acc as f64 * per_access;
    for (i, w) in times.windows(2).enumerate() {
        check(
            close(w[1] - w[0], slope, 1e-9),
            format!("step {} is {} not {slope}", i + 1, w[1] - w[0]),
        )?;
    }
    let constant = t_ovh_atomic(&profile(true), &d);
    check(
        constant == per_access / 16.0,
        format!("constant operand cost {constant} vs {per_access}/16"),
    )?;
    Ok(format!(
        "t_exe steps by {slope:.6e} s per #ga (overhead {:.6e} s); constant operand cost {constant:e} s",
        ls_acc as f64 * per_access
    ))
}

fn run_property<S: Strategy>(
    name: &str,
    strategy: S,
    test: impl Fn(S::Value) -> Result<(), TestCaseError>,
) -> Result<(), String>
where
    S::Value: std::fmt::Debug,
{
    let mut runner = TestRunner::new(Config {
        cases: 1000,
        failure_persistence: None,
        ..Config::default()
    });
    runner.run(&strategy, test).map_err(|e| format!("{name}: {e}"))
}

fn aligned_kernel_strategy() -> impl Strategy<Value = KernelModel> {
    prop::collection::vec((6u32..=10, 1u64..=1 << 20, 1u32..=8, 0u32..=4, 1u32..=64), 1..=4).prop_map(|lsus| {
        kernel(
            lsus.into_iter()
                .map(|(w, acc, delta, burst_cnt, max_th)| Lsu {
                    descriptor: LsuDescriptor {
                        kind: LsuKind::BurstCoalescedAligned,
                        ls_width: 1 << w,
                        burst_cnt,
                        max_th,
                    },
                    profile: AccessProfile {
                        delta,
                        ..AccessProfile::contiguous(acc, 4)
                    },
                })
                .collect(),
        )
    })
}

fn property_suite() -> Outcome {
    let started = Instant::now();
    let d = ddr4();
    run_property("additivity", aligned_kernel_strategy(), |k| {
        let r = estimate(&k, &d).unwrap();
        if let Some(t) = r.t_exe {
            let sum: f64 = r.per_lsu.iter().map(|e| e.weighted_time).sum();
            prop_assert_eq!(t, sum);
        }
        Ok(())
    })?;
    run_property(
        "stride monotonicity",
        (aligned_kernel_strategy(), 1u32..=8),
        |(k, extra)| {
            let base = estimate(&k, &d).unwrap();
            let mut wider = k.clone();
            for l in &mut wider.lsus {
                l.profile.delta += extra;
            }
            let r = estimate(&wider, &d).unwrap();
            if let (Some(a), Some(b)) = (base.t_exe, r.t_exe) {
                prop_assert!(b >= a, "{} < {}", b, a);
            }
            Ok(())
        },
    )?;
    run_property(
        "frequency scaling",
        (1u64..=1 << 24, 1u32..=16, 1e8f64..4e9),
        |(acc, bytes, f_mem)| {
            let p = AccessProfile::contiguous(acc, bytes);
            let d1 = d.with_f_mem(f_mem).unwrap();
            let d2 = d.with_f_mem(2.0 * f_mem).unwrap();
            prop_assert_eq!(t_ideal(&p, &d2), t_ideal(&p, &d1) / 2.0);
            Ok(())
        },
    )?;
    run_property(
        "write-ack dominance",
        (1u64..=1 << 20, 0u32..=4, 2usize..=4),
        |(acc, burst_cnt, n)| {
            let make = |kind| {
                let mut l = lsu(kind, 64, AccessProfile::contiguous(acc, 4));
                l.descriptor.burst_cnt = burst_cnt;
                l
            };
            let mut lsus = vec![make(LsuKind::BurstCoalescedWriteAck)];
            lsus.extend(std::iter::repeat_n(make(LsuKind::BurstCoalescedAligned), n - 1));
            let r = estimate(&kernel(lsus), &d).unwrap();
            prop_assert!(r.per_lsu[0].weighted_time >= r.per_lsu[1].weighted_time);
            Ok(())
        },
    )?;
    run_property("purity", aligned_kernel_strategy(), |k| {
        let snapshot = k.clone();
        prop_assert_eq!(classify(&k, &d), classify(&k, &d));
        prop_assert_eq!(estimate(&k, &d), estimate(&k, &d));
        prop_assert_eq!(k, snapshot);
        Ok(())
    })?;
    let elapsed = started.elapsed();
    check(elapsed.as_secs() < 60, format!("suite took {elapsed:?}"))?;
    Ok(format!("5 properties x 1000 kernels in {:.2} s", elapsed.as_secs_f64()))
}

fn oracle_equivalence() -> Outcome {
    let d = ddr4();
    let started = Instant::now();
    let single = compare(&aligned(1, 64), &d, ORACLE_SEED).map_err(|e| e.to_string())?;
    let three = compare(&aligned(3, 64), &d, ORACLE_SEED).map_err(|e| e.to_string())?;
    check(
        single.relative_error < 0.05,
        format!("single LSU error {}", single.relative_error),
    )?;
    check(
        three.relative_error < 0.20,
        format!("3 LSU error {}", three.relative_error),
    )?;
    check(
        single.relative_error <= OBSERVED_SINGLE_LSU_ERROR,
        format!(
            "single LSU error {} above recorded {OBSERVED_SINGLE_LSU_ERROR}",
            single.relative_error
        ),
    )?;
    check(
        three.relative_error <= OBSERVED_THREE_LSU_ERROR,
        format!(
            "3 LSU error {} above recorded {OBSERVED_THREE_LSU_ERROR}",
            three.relative_error
        ),
    )?;
    Ok(format!(
        "seed {ORACLE_SEED}: 1 LSU error {:.3e}, 3 LSU error {:.3e} ({:.2} s)",
        single.relative_error,
        three.relative_error,
        started.elapsed().as_secs_f64()
    ))
}

fn ingest_round_trip() -> Outcome {
    let dir = configs_dir();
    let mut paths: Vec<PathBuf> = std::fs::read_dir(&dir)
        .map_err(|e| e.to_string())?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "toml"))
        .collect();
    paths.sort();
    check(!paths.is_empty(), "no bundled configs")?;
    for p in &paths {
        let text = std::fs::read_to_string(p).map_err(|e| e.to_string())?;
        let first = parse_config(&text).map_err(|e| format!("{}: {e}", p.display()))?;
        let again = parse_config(&serialize_config(&first)).map_err(|e| format!("{}: {e}", p.display()))?;
        check(first == again, format!("{} does not round-trip", p.display()))?;
        check(
            serialize_config(&again) == serialize_config(&first),
            format!("{} serialization is not a fixpoint", p.display()),
        )?;
    }
    let rtl = dir.join("rtl/lsu_burst_coalesced.v");
    let ex = extract_rtl_files(&[&rtl], &[BURSTCOUNT_WIDTH, MAX_THREADS]).map_err(|e| e.to_string())?;
    let burst = ex.hits(BURSTCOUNT_WIDTH).first().ok_or("BURSTCOUNT_WIDTH not found")?;
    let threads = ex.hits(MAX_THREADS).first().ok_or("MAX_THREADS not found")?;
    check(
        (burst.value, burst.line, threads.value, threads.line) == (4, 6, 64, 7),
        format!("extracted {burst} and {threads}"),
    )?;
    check(
        burst.source.ends_with("lsu_burst_coalesced.v"),
        format!("source {}", burst.source),
    )?;
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let a = tmp.path().join("a.v");
    let b = tmp.path().join("b.v");
    std::fs::write(&a, "parameter MAX_THREADS = 64;\n").map_err(|e| e.to_string())?;
    std::fs::write(&b, "\n\nparameter MAX_THREADS = 32;\n").map_err(|e| e.to_string())?;
    match extract_rtl_files(&[&a, &b], &[MAX_THREADS]) {
        Err(RtlError::ConflictingValues { hits, .. }) => {
            let lines: Vec<usize> = hits.iter().map(|h| h.line).collect();
            check(lines == vec![1, 3], format!("conflict lines {lines:?}"))?;
        }
        other => return Err(format!("conflict not reported: {other:?}")),
    }
    Ok(format!(
        "{} configs round-trip; RTL params {}, {}; conflict rejected",
        paths.len(),
        burst,
        threads
    ))
}

fn cli_contract() -> Outcome {
    let bin = env!("CARGO_BIN_EXE_gmi-perf");
    let dir = configs_dir();
    let vector_add = dir.join("vector_add.toml");
    let run = |args: &[&std::ffi::OsStr]| Command::new(bin).args(args).output().map_err(|e| e.to_string());

    let out = run(&["estimate".as_ref(), "--config".as_ref(), vector_add.as_os_str()])?;
    let text = String::from_utf8_lossy(&out.stdout);
    check(
        out.status.code() == Some(0),
        format!("estimate exit {:?}", out.status.code()),
    )?;
    check(
        text.lines().last() == Some("t_exe = 1.1744 ms"),
        format!("estimate output ends with {:?}", text.lines().last()),
    )?;

    let out = run(&[
        "sweep".as_ref(),
        "--config".as_ref(),
        vector_add.as_os_str(),
        "--axis".as_ref(),
        "delta".as_ref(),
        "--values".as_ref(),
        "1,2,3,4".as_ref(),
    ])?;
    check(
        out.status.code() == Some(0),
        format!("sweep exit {:?}", out.status.code()),
    )?;
    let csv = String::from_utf8_lossy(&out.stdout);
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().ok_or("empty sweep output")?.split(',').collect();
    let col = header.iter().position(|h| *h == "t_exe").ok_or("no t_exe column")?;
    let rows: Vec<f64> = lines
        .map(|l| {
            l.split(',')
                .nth(col)
                .and_then(|v| v.parse().ok())
                .ok_or(format!("bad row {l}"))
        })
        .collect::<Result<_, _>>()?;
    let want = [1.1744e-3, 2.3488e-3, 3.5232e-3, 4.6976e-3];
    check(rows.len() == 4, format!("{} sweep rows", rows.len()))?;
    for (got, want) in rows.iter().zip(want) {
        check(close(*got, want, 1e-4), format!("sweep t_exe {got} vs {want}"))?;
    }

    let out = run(&[
        "estimate".as_ref(),
        "--config".as_ref(),
        dir.join("compute_bound.toml").as_os_str(),
    ])?;
    let text = String::from_utf8_lossy(&out.stdout);
    check(
        out.status.code() == Some(2),
        format!("compute-bound exit {:?}", out.status.code()),
    )?;
    check(
        text.contains("ComputeBound (ratio 0.50)"),
        format!("compute-bound output {text:?}"),
    )?;
    check(!text.contains("t_exe"), "compute-bound output carries a t_exe")?;
    Ok("estimate prints t_exe = 1.1744 ms; delta sweep linear; compute-bound exits 2 with no estimate".into())
}

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("DRAM constants", dram_constants),
        ("classification boundary", classification_boundary),
        ("full-chain vector", full_chain),
        ("non-aligned branch coverage", non_aligned_branches),
        ("atomic linearity", atomic_linearity),
        ("property suite", property_suite),
        ("oracle equivalence", oracle_equivalence),
        ("ingest round-trip", ingest_round_trip),
        ("CLI contract", cli_contract),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        match run() {
            Ok(detail) => println!("criterion {} {name}: PASS ({detail})", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {} {name}: FAIL ({why})", i + 1);
            }
        }
    }
    println!("{}/{} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
