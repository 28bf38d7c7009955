//! Turning config files and generated RTL into a [`KernelModel`].

mod config;
mod rtl;

use std::path::{Path, PathBuf};

use thiserror::Error;

pub use config::{
    parse_config, serialize_config, ConfigError, ConfigErrorKind, ConfigErrors, DramSection, KernelConfig,
    KernelSection, LsuSection, SCHEMA_VERSION,
};
pub use rtl::{
    extract_rtl_files, extract_rtl_params, ParamHit, RtlError, RtlParamExtract, BURSTCOUNT_WIDTH, MAX_THREADS,
};

use crate::dram::{DramError, DramSpec};
use crate::gmi::{validate_kernel, AccessProfile, KernelModel, Lsu, LsuDescriptor, Violation};

#[derive(Debug, Error)]
pub enum BuildError {
    #[error(transparent)]
    Dram(#[from] DramError),
    #[error("{}", render_violations(.0, .1))]
    Invalid(Vec<Violation>, Vec<ParamHit>),
    #[error("{name} = {} from {} does not fit the LSU field", .hit.value, .hit)]
    RtlOutOfRange { name: &'static str, hit: ParamHit },
}

fn render_violations(v: &[Violation], overrides: &[ParamHit]) -> String {
    let mut parts: Vec<String> = v.iter().map(ToString::to_string).collect();
    for h in overrides {
        parts.push(format!("override applied from {}:{}:{}", h.source, h.line, h.column));
    }
    parts.join("; ")
}

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("{}: {source}", .path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Config(#[from] ConfigErrors),
    #[error("{0}")]
    Rtl(#[from] RtlError),
    #[error("{}: {source}", .path.display())]
    Build {
        path: PathBuf,
        #[source]
        source: BuildError,
    },
}

fn rtl_override(rtl: Option<&RtlParamExtract>, name: &'static str) -> Result<Option<(u32, ParamHit)>, BuildError> {
    let Some(hit) = rtl.and_then(|r| r.hits(name).first()) else {
        return Ok(None);
    };
    let value = u32::try_from(hit.value).map_err(|_| BuildError::RtlOutOfRange { name, hit: hit.clone() })?;
    Ok(Some((value, hit.clone())))
}

/// Resolves defaults and RTL overrides into a validated kernel and DRAM.
///
/// `BURSTCOUNT_WIDTH` and `MAX_THREADS` found in the RTL replace the config
/// values of every burst-coalesced LSU.
pub fn build_kernel(cfg: &KernelConfig, rtl: Option<&RtlParamExtract>) -> Result<(KernelModel, DramSpec), BuildError> {
    let d = &cfg.dram;
    let dram = DramSpec::new(d.dq, d.bl, d.f_mem, d.t_rcd, d.t_rp, d.t_wr)?;
    let burst_cnt = rtl_override(rtl, BURSTCOUNT_WIDTH)?;
    let max_th = rtl_override(rtl, MAX_THREADS)?;
    let mut applied = Vec::new();
    let lsus = cfg
        .lsus
        .iter()
        .enumerate()
        .map(|(i, l)| {
            let mut descriptor = LsuDescriptor {
                kind: l.kind,
                ls_width: l.ls_width,
                burst_cnt: l.burst_cnt,
                max_th: l.max_th,
            };
            if l.kind.is_burst_coalesced() {
                if let Some((v, hit)) = &burst_cnt {
                    descriptor.burst_cnt = *v;
                    applied.push(hit.clone());
                }
                if let Some((v, hit)) = &max_th {
                    descriptor.max_th = *v;
                    applied.push(hit.clone());
                }
            }
            Lsu {
                descriptor,
                profile: AccessProfile {
                    ls_acc: l.ls_acc,
                    ls_bytes: l.ls_bytes,
                    delta: cfg.lsu_delta(i),
                    f: cfg.lsu_f(i),
                    atomic_val_constant: cfg.lsu_atomic_val_constant(i),
                },
            }
        })
        .collect();
    let kernel = KernelModel {
        name: cfg.kernel.name.clone(),
        lsus,
    };
    let violations = validate_kernel(&kernel);
    if !violations.is_empty() {
        applied.dedup();
        return Err(BuildError::Invalid(violations, applied));
    }
    Ok((kernel, dram))
}

pub fn load_config(path: &Path) -> Result<KernelConfig, LoadError> {
    let text = std::fs::read_to_string(path).map_err(|source| LoadError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_config(&text).map_err(|e| LoadError::Config(e.with_file(path)))
}

/// Reads a config, scans the optional RTL files and builds the kernel.
pub fn load_kernel<P: AsRef<Path>>(config: &Path, rtl: &[P]) -> Result<(KernelModel, DramSpec), LoadError> {
    let cfg = load_config(config)?;
    let extract = if rtl.is_empty() {
        None
    } else {
        Some(extract_rtl_files(rtl, &[BURSTCOUNT_WIDTH, MAX_THREADS])?)
    };
    build_kernel(&cfg, extract.as_ref()).map_err(|source| LoadError::Build {
        path: config.to_path_buf(),
        source,
    })
}
