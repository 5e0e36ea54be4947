//! Check reports and their byte-stable JSON rendering.
//!
//! Reports are rendered by hand rather than through a serializer so the
//! output is reproducible to the byte: fixed key order, floats always in
//! scientific notation with 17 significant digits, and no timing data.
//! Wall-clock time is kept on the struct for console display but never
//! serialized, since it would break the identical-seed-identical-report
//! contract.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct CheckReport {
    pub check_name: String,
    pub inputs_digest: String,
    /// Measured value; absent for skips and for checks that errored out.
    pub metric: Option<f64>,
    pub tolerance: f64,
    pub pass: bool,
    pub skipped: bool,
    /// Skip reason, error text, or a rendering of an at-least comparison.
    pub note: Option<String>,
    pub wall_time: Duration,
}

impl CheckReport {
    /// Upper-bound check: passes iff the metric is finite and at most the
    /// tolerance.
    pub fn measure(
        name: impl Into<String>,
        digest: impl Into<String>,
        metric: f64,
        tolerance: f64,
    ) -> Self {
        CheckReport {
            check_name: name.into(),
            inputs_digest: digest.into(),
            metric: Some(metric),
            tolerance,
            pass: metric.is_finite() && metric <= tolerance,
            skipped: false,
            note: None,
            wall_time: Duration::ZERO,
        }
    }

    /// Lower-bound check (negative controls): passes iff the metric is at
    /// least the stated floor. The floor is stored in `tolerance` and the
    /// orientation is recorded in the note.
    pub fn measure_at_least(
        name: impl Into<String>,
        digest: impl Into<String>,
        metric: f64,
        floor: f64,
    ) -> Self {
        CheckReport {
            check_name: name.into(),
            inputs_digest: digest.into(),
            metric: Some(metric),
            tolerance: floor,
            pass: metric.is_finite() && metric >= floor,
            skipped: false,
            note: Some("tolerance is a lower bound".into()),
            wall_time: Duration::ZERO,
        }
    }

    /// Precondition-gated skip: not a failure, with the reason on record.
    pub fn skip(
        name: impl Into<String>,
        digest: impl Into<String>,
        reason: impl Into<String>,
        tolerance: f64,
    ) -> Self {
        CheckReport {
            check_name: name.into(),
            inputs_digest: digest.into(),
            metric: None,
            tolerance,
            pass: true,
            skipped: true,
            note: Some(reason.into()),
            wall_time: Duration::ZERO,
        }
    }

    /// A check whose body returned an error: reported as a failure, never a
    /// panic.
    pub fn failed(
        name: impl Into<String>,
        digest: impl Into<String>,
        error: impl std::fmt::Display,
        tolerance: f64,
    ) -> Self {
        CheckReport {
            check_name: name.into(),
            inputs_digest: digest.into(),
            metric: None,
            tolerance,
            pass: false,
            skipped: false,
            note: Some(error.to_string()),
            wall_time: Duration::ZERO,
        }
    }

    pub fn with_wall_time(mut self, elapsed: Duration) -> Self {
        self.wall_time = elapsed;
        self
    }

    /// One console line: status, name, and the measured value.
    pub fn summary_line(&self) -> String {
        let status = if self.skipped {
            "SKIP"
        } else if self.pass {
            "pass"
        } else {
            "FAIL"
        };
        let value = match self.metric {
            Some(m) => format!("{m:.3e}"),
            None => "-".into(),
        };
        let note = match &self.note {
            Some(n) => format!("  ({n})"),
            None => String::new(),
        };
        format!(
            "{status}  {:<34} {:>10} vs {:.3e}  [{:.2?}]{note}",
            self.check_name, value, self.tolerance, self.wall_time
        )
    }
}

pub fn any_failed(reports: &[CheckReport]) -> bool {
    reports.iter().any(|r| !r.pass)
}

/// 64-bit FNV-1a over raw bytes.
pub fn fnv1a(bytes: &[u8]) -> u64 {
    let mut hash = 0xcbf2_9ce4_8422_2325u64;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x100_0000_01b3);
    }
    hash
}

/// Digest of a list of input descriptors, rendered as fixed-width hex.
pub fn digest_hex(parts: &[&str]) -> String {
    let joined = parts.join("\u{1f}");
    format!("{:016x}", fnv1a(joined.as_bytes()))
}

fn push_f64(out: &mut String, v: f64) {
    // 16 digits after the point = 17 significant digits, round-trip exact
    out.push_str(&format!("{v:.16e}"));
}

/// Render the report array deterministically.
pub fn render_report(reports: &[CheckReport]) -> String {
    let mut out = String::from("[\n");
    for (i, r) in reports.iter().enumerate() {
        out.push_str("  {\"check_name\": ");
        out.push_str(&serde_json::to_string(&r.check_name).expect("string serializes"));
        out.push_str(", \"inputs_digest\": \"");
        out.push_str(&r.inputs_digest);
        out.push_str("\", \"metric\": ");
        match r.metric {
            Some(m) if m.is_finite() => push_f64(&mut out, m),
            _ => out.push_str("null"),
        }
        out.push_str(", \"tolerance\": ");
        push_f64(&mut out, r.tolerance);
        out.push_str(", \"pass\": ");
        out.push_str(if r.pass { "true" } else { "false" });
        out.push_str(", \"skipped\": ");
        out.push_str(if r.skipped { "true" } else { "false" });
        out.push_str(", \"note\": ");
        match &r.note {
            Some(n) => out.push_str(&serde_json::to_string(n).expect("string serializes")),
            None => out.push_str("null"),
        }
        out.push('}');
        if i + 1 < reports.len() {
            out.push(',');
        }
        out.push('\n');
    }
    out.push_str("]\n");
    out
}

/// Write `report.json` into the directory, creating it as needed.
pub fn write_report(dir: &Path, reports: &[CheckReport]) -> Result<PathBuf> {
    fs::create_dir_all(dir).map_err(Error::Io)?;
    let path = dir.join("report.json");
    fs::write(&path, render_report(reports)).map_err(Error::Io)?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fnv_reference_values() {
        assert_eq!(fnv1a(b""), 0xcbf29ce484222325);
        assert_eq!(fnv1a(b"a"), 0xaf63dc4c8601ec8c);
        assert_ne!(digest_hex(&["a", "b"]), digest_hex(&["ab"]));
    }

    #[test]
    fn pass_flag_follows_comparison() {
        assert!(CheckReport::measure("x", "0", 1e-9, 1e-8).pass);
        assert!(!CheckReport::measure("x", "0", 1e-7, 1e-8).pass);
        assert!(!CheckReport::measure("x", "0", f64::NAN, 1e-8).pass);
        assert!(CheckReport::measure_at_least("x", "0", 0.5, 1e-3).pass);
        assert!(!CheckReport::measure_at_least("x", "0", 1e-5, 1e-3).pass);
        assert!(CheckReport::skip("x", "0", "gated", 1.0).pass);
        assert!(!CheckReport::failed("x", "0", "boom", 1.0).pass);
    }

    #[test]
    fn rendering_is_stable_and_parses() {
        let reports = vec![
            CheckReport::measure("alpha", "00ff", 1.25e-9, 1e-8)
                .with_wall_time(Duration::from_millis(3)),
            CheckReport::skip("beta", "00aa", "needs s >= 1/2", 2.0),
            CheckReport::failed("gamma", "0001", "quadrature stalled", 1e-6),
        ];
        let a = render_report(&reports);
        // identical content with different wall times renders identically
        let mut later = reports.clone();
        later[0].wall_time = Duration::from_secs(4);
        let b = render_report(&later);
        assert_eq!(a, b);

        let parsed: serde_json::Value = serde_json::from_str(&a).unwrap();
        let arr = parsed.as_array().unwrap();
        assert_eq!(arr.len(), 3);
        assert_eq!(arr[0]["pass"], true);
        assert_eq!(arr[1]["skipped"], true);
        assert!(arr[1]["metric"].is_null());
        assert_eq!(arr[2]["note"], "quadrature stalled");
        // 17 significant digits survive the round trip
        assert_eq!(arr[0]["metric"].as_f64().unwrap(), 1.25e-9);
        assert!(a.contains("1.2500000000000000e-9"));
    }
}
