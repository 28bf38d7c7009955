use std::path::{Path, PathBuf};

use gmi_perf::estimator::estimate;
use gmi_perf::ingest::{
    extract_rtl_files, load_config, load_kernel, parse_config, serialize_config, ConfigErrorKind, LoadError, RtlError,
    BURSTCOUNT_WIDTH, MAX_THREADS,
};

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs")
}

fn toml_files(dir: &Path) -> Vec<PathBuf> {
    let mut v: Vec<PathBuf> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "toml"))
        .collect();
    v.sort();
    v
}

#[test]
fn bundled_configs_round_trip() {
    let files = toml_files(&configs());
    assert!(files.len() >= 6);
    for p in files {
        let cfg = load_config(&p).unwrap();
        let text = serialize_config(&cfg);
        let again = parse_config(&text).unwrap();
        assert_eq!(again, cfg, "{}", p.display());
        assert_eq!(serialize_config(&again), text);
    }
}

#[test]
fn bundled_configs_build() {
    for p in toml_files(&configs()) {
        let (k, d) = load_kernel::<&Path>(&p, &[]).unwrap();
        estimate(&k, &d).unwrap();
    }
}

#[test]
fn templates_need_sizes() {
    let files = toml_files(&configs().join("templates"));
    assert_eq!(files.len(), 8);
    for p in files {
        match load_config(&p) {
            Err(LoadError::Config(e)) => {
                assert!(e.contains(&ConfigErrorKind::MissingKey, "lsu[0].ls_acc"), "{e}");
                assert!(e.contains(&ConfigErrorKind::MissingKey, "lsu[0].ls_bytes"), "{e}");
                assert!(e.to_string().contains(&*p.file_name().unwrap().to_string_lossy()));
            }
            other => panic!("{} should need sizes: {other:?}", p.display()),
        }
    }
}

#[test]
fn filled_template_estimates() {
    let p = configs().join("templates/hotspot.toml");
    let text = std::fs::read_to_string(p)
        .unwrap()
        .replace("max_th = 64\n", "max_th = 64\nls_acc = 4096\nls_bytes = 4\n");
    let cfg = parse_config(&text).unwrap();
    assert_eq!(cfg.lsus.len(), 3);
    assert!(cfg.lsus.iter().all(|l| l.ls_acc == 4096));
}

#[test]
fn sample_rtl_parameters() {
    let p = configs().join("rtl/lsu_burst_coalesced.v");
    let ex = extract_rtl_files(&[&p], &[BURSTCOUNT_WIDTH, MAX_THREADS]).unwrap();
    assert_eq!(ex.get(BURSTCOUNT_WIDTH), Some(4));
    assert_eq!(ex.get(MAX_THREADS), Some(64));
    let hit = &ex.hits(BURSTCOUNT_WIDTH)[0];
    assert_eq!((hit.line, hit.column), (6, 5));
    assert_eq!(hit.source, p.display().to_string());
    assert_eq!(ex.hits(MAX_THREADS)[0].line, 7);
}

#[test]
fn rtl_files_agreeing_merge() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.v");
    let b = dir.path().join("b.v");
    std::fs::write(&a, "parameter MAX_THREADS = 64;\n").unwrap();
    std::fs::write(&b, "parameter MAX_THREADS = 64;\n").unwrap();
    let ex = extract_rtl_files(&[&b, &a], &[MAX_THREADS]).unwrap();
    assert_eq!(ex.hits(MAX_THREADS).len(), 2);
    assert!(ex.hits(MAX_THREADS)[0].source.ends_with("a.v"));
}

#[test]
fn rtl_conflict_across_files() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.v");
    let b = dir.path().join("b.v");
    std::fs::write(&a, "parameter BURSTCOUNT_WIDTH = 4;\n").unwrap();
    std::fs::write(&b, "parameter BURSTCOUNT_WIDTH = 6;\n").unwrap();
    match extract_rtl_files(&[&a, &b], &[BURSTCOUNT_WIDTH]) {
        Err(RtlError::ConflictingValues { name, hits }) => {
            assert_eq!(name, BURSTCOUNT_WIDTH);
            assert_eq!(hits.iter().map(|h| h.value).collect::<Vec<_>>(), vec![4, 6]);
        }
        other => panic!("expected conflict, got {other:?}"),
    }
}

#[test]
fn missing_rtl_file_is_io_error() {
    let err = extract_rtl_files(&[Path::new("/nonexistent/lsu.v")], &[MAX_THREADS]).unwrap_err();
    assert!(matches!(err, RtlError::Io { .. }));
    assert!(err.to_string().contains("/nonexistent/lsu.v"));
}

#[test]
fn rtl_override_reaches_kernel() {
    let dir = tempfile::tempdir().unwrap();
    let v = dir.path().join("lsu.v");
    std::fs::write(&v, "parameter MAX_THREADS = 8;\n").unwrap();
    let (k, _) = load_kernel(&configs().join("atomic.toml"), &[&v]).unwrap();
    // atomic LSUs keep their config values
    assert_eq!(k.lsus[0].descriptor.max_th, 64);
    let (k, _) = load_kernel(&configs().join("bca.toml"), &[&v]).unwrap();
    assert!(k.lsus.iter().all(|l| l.descriptor.max_th == 8));
}
