use std::fmt::Write as _;

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Request {
    pub lsu: usize,
    pub address: u64,
    pub length: u32,
}

/// Requests in issue order. Only the relative order of requests from the
/// same LSU matters to the coalescers.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RequestStream {
    pub requests: Vec<Request>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("trace line {line}: {reason}")]
pub struct TraceError {
    pub line: usize,
    pub reason: String,
}

impl RequestStream {
    /// `count` requests of `length` bytes, the j-th at
    /// `base + j * stride * length`.
    pub fn strided(lsu: usize, base: u64, count: u64, length: u32, stride: u32) -> Self {
        let step = u64::from(stride) * u64::from(length);
        Self {
            requests: (0..count)
                .map(|j| Request {
                    lsu,
                    address: base + j * step,
                    length,
                })
                .collect(),
        }
    }

    /// Merges per-LSU streams one request at a time from each, the order a
    /// set of lock-stepped global accesses would issue them.
    pub fn interleave(streams: Vec<RequestStream>) -> Self {
        let longest = streams.iter().map(|s| s.requests.len()).max().unwrap_or(0);
        let mut requests = Vec::with_capacity(streams.iter().map(|s| s.requests.len()).sum());
        for j in 0..longest {
            for s in &streams {
                if let Some(r) = s.requests.get(j) {
                    requests.push(*r);
                }
            }
        }
        Self { requests }
    }

    pub fn len(&self) -> usize {
        self.requests.len()
    }

    pub fn is_empty(&self) -> bool {
        self.requests.is_empty()
    }

    pub fn total_bytes(&self) -> u64 {
        self.requests.iter().map(|r| u64::from(r.length)).sum()
    }

    /// One `lsu,address,length` line per request.
    pub fn to_trace(&self) -> String {
        let mut out = String::from("# lsu,address,length\n");
        for r in &self.requests {
            let _ = writeln!(out, "{},{},{}", r.lsu, r.address, r.length);
        }
        out
    }

    /// Reads the text trace format. Blank lines and `#` comments are skipped;
    /// addresses may be decimal or `0x` hex.
    pub fn parse_trace(text: &str) -> Result<Self, TraceError> {
        let mut requests = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |reason: String| TraceError { line: i + 1, reason };
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            let [lsu, address, length] = fields[..] else {
                return Err(err(format!("expected 3 comma-separated fields, got {}", fields.len())));
            };
            let lsu = lsu.parse().map_err(|_| err(format!("bad lsu index `{lsu}`")))?;
            let address = match address.strip_prefix("0x").or_else(|| address.strip_prefix("0X")) {
                Some(hex) => u64::from_str_radix(hex, 16),
                None => address.parse(),
            }
            .map_err(|_| err(format!("bad address `{address}`")))?;
            let length: u32 = length.parse().map_err(|_| err(format!("bad length `{length}`")))?;
            if length == 0 {
                return Err(err("request length must be positive".into()));
            }
            requests.push(Request { lsu, address, length });
        }
        Ok(Self { requests })
    }
}
