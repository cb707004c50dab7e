use std::fmt::Write as _;
use std::io::{BufRead, Write};
use std::path::Path;

use super::SimError;
use crate::advisor::{AdvisoryRecord, Gating};
use crate::spat::PhaseColor;

pub const COLUMNS: [&str; 11] = [
    "t_s",
    "lat",
    "lon",
    "speed_mps",
    "accel_mps2",
    "d_sig_m",
    "phase",
    "v_lower_mps",
    "v_upper_mps",
    "gating",
    "fuel_rate_gps",
];

/// Provenance block written as `# key: value` lines above the CSV header.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LogHeader {
    pub scenario: String,
    pub driver: String,
    pub digest: String,
    pub seed: u64,
    pub dt_s: String,
    pub code_version: String,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogRow {
    pub t_s: f64,
    pub lat: f64,
    pub lon: f64,
    pub speed_mps: f64,
    pub accel_mps2: f64,
    /// Map-matched distance to the governing stop line.
    pub d_sig_m: Option<f64>,
    /// SPaT phase the advisory was computed from.
    pub phase: Option<PhaseColor>,
    pub v_lower_mps: f64,
    pub v_upper_mps: f64,
    pub gating: Gating,
    pub fuel_rate_gps: f64,
}

/// The truck passing a stop line, located from the jump in `d_sig_m`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Crossing {
    /// Index of the first row past the line.
    pub row: usize,
    pub t_s: f64,
    pub speed_mps: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryLog {
    pub header: LogHeader,
    rows: Vec<LogRow>,
}

fn opt<T: std::fmt::Display>(v: Option<T>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

impl TrajectoryLog {
    pub fn new(header: LogHeader) -> Self {
        TrajectoryLog {
            header,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: LogRow) {
        self.rows.push(row);
    }

    pub fn rows(&self) -> &[LogRow] {
        &self.rows
    }

    pub fn to_csv(&self) -> String {
        let h = &self.header;
        let mut out = String::new();
        for (k, v) in [
            ("scenario", h.scenario.as_str()),
            ("driver", h.driver.as_str()),
            ("digest", h.digest.as_str()),
            ("seed", &h.seed.to_string()),
            ("dt_s", h.dt_s.as_str()),
            ("code_version", h.code_version.as_str()),
        ] {
            let _ = writeln!(out, "# {k}: {v}");
        }
        out.push_str(&COLUMNS.join(","));
        out.push('\n');
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{:.3},{:.8},{:.8},{:.6},{:.6},{},{},{:.6},{:.6},{},{:.6}",
                r.t_s,
                r.lat,
                r.lon,
                r.speed_mps,
                r.accel_mps2,
                opt(r.d_sig_m.map(|d| format!("{d:.3}"))),
                opt(r.phase),
                r.v_lower_mps,
                r.v_upper_mps,
                r.gating,
                r.fuel_rate_gps,
            );
        }
        out
    }

    pub fn write_file(&self, path: impl AsRef<Path>) -> Result<(), SimError> {
        let path = path.as_ref();
        let io = |source| SimError::Write {
            path: path.display().to_string(),
            source,
        };
        let mut f = std::fs::File::create(path).map_err(io)?;
        f.write_all(self.to_csv().as_bytes()).map_err(io)
    }

    pub fn from_csv(text: &str) -> Result<Self, SimError> {
        let bad = |msg: String| SimError::Log(msg);
        let mut fields = std::collections::HashMap::new();
        for line in text.as_bytes().lines() {
            let line = line.map_err(|e| bad(e.to_string()))?;
            let Some(rest) = line.strip_prefix("# ") else { break };
            if let Some((k, v)) = rest.split_once(": ") {
                fields.insert(k.to_string(), v.to_string());
            }
        }
        let take = |k: &str| fields.get(k).cloned().ok_or_else(|| bad(format!("header lacks {k:?}")));
        let header = LogHeader {
            scenario: take("scenario")?,
            driver: take("driver")?,
            digest: take("digest")?,
            seed: take("seed")?
                .parse()
                .map_err(|e| bad(format!("seed: {e}")))?,
            dt_s: take("dt_s")?,
            code_version: take("code_version")?,
        };

        let mut reader = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .from_reader(text.as_bytes());
        let cols = reader.headers().map_err(|e| bad(e.to_string()))?.clone();
        if cols.iter().collect::<Vec<_>>() != COLUMNS {
            return Err(bad(format!("unexpected columns {cols:?}")));
        }
        let mut log = TrajectoryLog::new(header);
        for (i, rec) in reader.records().enumerate() {
            let rec = rec.map_err(|e| bad(e.to_string()))?;
            let num = |k: usize| -> Result<f64, SimError> {
                rec[k]
                    .parse()
                    .map_err(|e| bad(format!("row {}: {}: {e}", i + 1, COLUMNS[k])))
            };
            let d_sig_m = match &rec[5] {
                "" => None,
                _ => Some(num(5)?),
            };
            let phase = match &rec[6] {
                "" => None,
                p => Some(p.parse().map_err(|e| bad(format!("row {}: {e}", i + 1)))?),
            };
            log.push(LogRow {
                t_s: num(0)?,
                lat: num(1)?,
                lon: num(2)?,
                speed_mps: num(3)?,
                accel_mps2: num(4)?,
                d_sig_m,
                phase,
                v_lower_mps: num(7)?,
                v_upper_mps: num(8)?,
                gating: rec[9]
                    .parse()
                    .map_err(|e| bad(format!("row {}: {e}", i + 1)))?,
                fuel_rate_gps: num(10)?,
            });
        }
        Ok(log)
    }

    pub fn read_file(path: impl AsRef<Path>) -> Result<Self, SimError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| SimError::Read {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_csv(&text).map_err(|e| SimError::Log(format!("{}: {e}", path.display())))
    }

    /// Stop-line crossings: `d_sig_m` disappears or jumps up by more than a
    /// meter between consecutive rows.
    pub fn crossings(&self) -> Vec<Crossing> {
        self.rows
            .windows(2)
            .enumerate()
            .filter_map(|(i, w)| {
                let before = w[0].d_sig_m?;
                let passed = match w[1].d_sig_m {
                    None => true,
                    Some(after) => after > before + 1.0,
                };
                passed.then(|| Crossing {
                    row: i + 1,
                    t_s: w[1].t_s,
                    speed_mps: w[1].speed_mps,
                })
            })
            .collect()
    }

    /// Lowest speed over rows `[0, end)`.
    pub fn min_speed_until(&self, end: usize) -> Option<f64> {
        self.rows[..end.min(self.rows.len())]
            .iter()
            .map(|r| r.speed_mps)
            .min_by(f64::total_cmp)
    }

    /// The log re-emitted as advisory records for UI replay. The aged
    /// residual is not logged, so `t_used_s` is absent.
    pub fn advisory_records(&self) -> Vec<AdvisoryRecord> {
        self.rows
            .iter()
            .map(|r| AdvisoryRecord {
                t_ms: (r.t_s * 1000.0).round() as u64,
                d_sig_m: r.d_sig_m,
                phase: r.phase,
                t_used_s: None,
                v_lower_mps: r.v_lower_mps,
                v_upper_mps: r.v_upper_mps,
                gating: r.gating,
                ego_speed_mps: r.speed_mps,
            })
            .collect()
    }
}
