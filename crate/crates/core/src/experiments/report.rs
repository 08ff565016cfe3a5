use serde::{Serialize, Serializer};

use crate::error::{Error, Result};

use super::stats::Stat;

/// How a row's measured mean is judged against its target.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Check {
    /// Reported only.
    Info,
    /// `|mean - target| <= tolerance`.
    Within { target: f64, tolerance: f64 },
    /// `mean >= target - tolerance`.
    AtLeast { target: f64, tolerance: f64 },
    /// `mean <= target + tolerance`.
    AtMost { target: f64, tolerance: f64 },
}

impl Check {
    fn suffix(&self) -> &'static str {
        match self {
            Check::AtLeast { .. } => "[>=]",
            Check::AtMost { .. } => "[<=]",
            _ => "",
        }
    }
}

/// One line of experiment output.
///
/// Lower- and upper-bound rows carry a `[>=]` or `[<=]` suffix on the
/// metric name; other rows with a target are two-sided.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Row {
    pub preset: String,
    #[serde(serialize_with = "as_json_text")]
    pub param_json: serde_json::Value,
    pub metric: String,
    pub mean: f64,
    pub stderr: f64,
    pub target: Option<f64>,
    pub tolerance: Option<f64>,
    pub pass: Option<bool>,
}

fn as_json_text<S: Serializer>(v: &serde_json::Value, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&v.to_string())
}

impl Row {
    pub fn new(
        preset: &str,
        params: &serde_json::Value,
        metric: impl Into<String>,
        value: Stat,
        check: Check,
    ) -> Row {
        let mean = value.mean;
        let (target, tolerance, pass) = match check {
            Check::Info => (None, None, None),
            Check::Within { target, tolerance } => {
                (Some(target), Some(tolerance), Some((mean - target).abs() <= tolerance))
            }
            Check::AtLeast { target, tolerance } => {
                (Some(target), Some(tolerance), Some(mean >= target - tolerance))
            }
            Check::AtMost { target, tolerance } => {
                (Some(target), Some(tolerance), Some(mean <= target + tolerance))
            }
        };
        Row {
            preset: preset.to_string(),
            param_json: params.clone(),
            metric: format!("{}{}", metric.into(), check.suffix()),
            mean,
            stderr: value.stderr,
            target,
            tolerance,
            pass,
        }
    }

    /// Row for an exact quantity (zero standard error).
    pub fn exact(
        preset: &str,
        params: &serde_json::Value,
        metric: impl Into<String>,
        value: f64,
        check: Check,
    ) -> Row {
        Row::new(preset, params, metric, Stat { mean: value, stderr: 0.0 }, check)
    }

    pub fn flag(preset: &str, params: &serde_json::Value, metric: impl Into<String>, ok: bool) -> Row {
        Row::exact(
            preset,
            params,
            metric,
            if ok { 1.0 } else { 0.0 },
            Check::Within {
                target: 1.0,
                tolerance: 0.0,
            },
        )
    }
}

/// Experiment output: provenance plus rows. The CSV form starts with `#`
/// comment lines holding the tool version and the JSON config; the JSON
/// form carries the same fields.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub tool: String,
    pub version: String,
    pub config: serde_json::Value,
    pub rows: Vec<Row>,
}

impl Report {
    pub fn new(config: serde_json::Value, rows: Vec<Row>) -> Report {
        Report {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: crate::VERSION.to_string(),
            config,
            rows,
        }
    }

    /// True unless some row with a target failed.
    pub fn all_pass(&self) -> bool {
        self.rows.iter().all(|r| r.pass != Some(false))
    }

    pub fn failures(&self) -> impl Iterator<Item = &Row> {
        self.rows.iter().filter(|r| r.pass == Some(false))
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut out = format!(
            "# {} {}\n# config: {}\n",
            self.tool, self.version, self.config
        );
        let mut w = csv::Writer::from_writer(Vec::new());
        for row in &self.rows {
            w.serialize(row).map_err(|e| Error::InvalidParameter(e.to_string()))?;
        }
        let body = w
            .into_inner()
            .map_err(|e| Error::InvalidParameter(e.to_string()))?;
        out.push_str(&String::from_utf8(body).expect("csv output is UTF-8"));
        Ok(out)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report is serializable");
        s.push('\n');
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn sample() -> Report {
        let params = json!({"n": 10, "label": "a,b"});
        Report::new(
            json!({"seed": 1}),
            vec![
                Row::exact("demo", &params, "value", 0.5, Check::Info),
                Row::exact(
                    "demo",
                    &params,
                    "ratio",
                    0.49,
                    Check::AtLeast {
                        target: 0.5,
                        tolerance: 0.02,
                    },
                ),
            ],
        )
    }

    #[test]
    fn checks() {
        let p = json!({});
        let within = Check::Within { target: 1.0, tolerance: 0.1 };
        assert_eq!(Row::exact("x", &p, "m", 1.05, within).pass, Some(true));
        assert_eq!(Row::exact("x", &p, "m", 1.2, within).pass, Some(false));
        let at_most = Check::AtMost { target: 1.0, tolerance: 0.0 };
        assert_eq!(Row::exact("x", &p, "m", 1.0, at_most).pass, Some(true));
        assert_eq!(Row::exact("x", &p, "m", 1.0, at_most).metric, "m[<=]");
        assert!(!Row::flag("x", &p, "f", false).pass.unwrap());
    }

    #[test]
    fn csv_layout() {
        let csv = sample().to_csv().unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        assert!(lines[0].starts_with("# fairmatch "));
        assert_eq!(lines[1], r#"# config: {"seed":1}"#);
        assert_eq!(lines[2], "preset,param_json,metric,mean,stderr,target,tolerance,pass");
        assert_eq!(
            lines[3],
            r#"demo,"{""label"":""a,b"",""n"":10}",value,0.5,0.0,,,"#
        );
        assert_eq!(lines[4].split(',').next_back(), Some("true"));
        assert!(sample().all_pass());
    }

    #[test]
    fn json_mirrors_rows() {
        let v: serde_json::Value = serde_json::from_str(&sample().to_json()).unwrap();
        assert_eq!(v["rows"][1]["metric"], "ratio[>=]");
        assert_eq!(v["rows"][0]["target"], serde_json::Value::Null);
        assert_eq!(v["config"]["seed"], 1);
    }
}
