//! CSV rendering and atomic output.

use std::io::Write;
use std::path::Path;

use crate::error::CliError;

pub const SIGNIFICANT_DIGITS: usize = 12;

/// `%.12g`: shortest of fixed and scientific notation at 12 significant
/// digits, trailing zeros removed.
pub fn num(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{:.*e}", SIGNIFICANT_DIGITS - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -5 || exp >= SIGNIFICANT_DIGITS as i32 {
        let m = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{m}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (SIGNIFICANT_DIGITS as i32 - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{x:.decimals$}")).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// A CSV document with optional leading `#` comment lines.
#[derive(Debug, Clone, Default)]
pub struct Table {
    pub comments: Vec<String>,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Self {
            header: header.into_iter().map(Into::into).collect(),
            ..Self::default()
        }
    }

    pub fn comment(&mut self, line: impl Into<String>) -> &mut Self {
        self.comments.push(line.into());
        self
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for c in &self.comments {
            out.push_str("# ");
            out.push_str(c);
            out.push('\n');
        }
        for line in std::iter::once(&self.header).chain(&self.rows) {
            out.push_str(&line.join(","));
            out.push('\n');
        }
        out
    }
}

/// One row of the standard results table.
#[derive(Debug, Clone)]
pub struct ResultRow {
    pub n: usize,
    pub scheme: String,
    pub monitoring: String,
    pub awareness: String,
    pub social_welfare: f64,
    pub total_throughput: f64,
    pub actions: Vec<f64>,
    pub charge_or_intervention: Vec<f64>,
    pub seed: Option<u64>,
}

/// Columns: n, scheme, monitoring, awareness, social_welfare,
/// total_throughput, action_user*, charge_or_intervention_user*, seed.
/// Rows with fewer users leave the surplus user columns empty.
pub fn results_table(rows: &[ResultRow]) -> Table {
    let users = rows.iter().map(|r| r.actions.len()).max().unwrap_or(0);
    let mut header: Vec<String> = [
        "n",
        "scheme",
        "monitoring",
        "awareness",
        "social_welfare",
        "total_throughput",
    ]
    .map(String::from)
    .to_vec();
    header.extend((0..users).map(|i| format!("action_user{i}")));
    header.extend((0..users).map(|i| format!("charge_or_intervention_user{i}")));
    header.push("seed".into());
    let mut table = Table::new(header);
    for r in rows {
        let padded = |v: &[f64]| -> Vec<String> {
            (0..users)
                .map(|i| v.get(i).map(|x| num(*x)).unwrap_or_default())
                .collect()
        };
        let mut line = vec![
            r.n.to_string(),
            r.scheme.clone(),
            r.monitoring.clone(),
            r.awareness.clone(),
            num(r.social_welfare),
            num(r.total_throughput),
        ];
        line.extend(padded(&r.actions));
        line.extend(padded(&r.charge_or_intervention));
        line.push(r.seed.map(|s| s.to_string()).unwrap_or_default());
        table.push(line);
    }
    table
}

/// Writes `text` to `path` via a temporary file in the same directory, or
/// to stdout when no path is given.
pub fn emit(text: &str, path: Option<&Path>) -> Result<(), CliError> {
    let Some(path) = path else {
        std::io::stdout().write_all(text.as_bytes())?;
        return Ok(());
    };
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let io = |e: std::io::Error| CliError::Io(format!("{}: {e}", path.display()));
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(text.as_bytes()).map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twelve_significant_digits() {
        assert_eq!(num(0.0), "0");
        assert_eq!(num(-0.0), "0");
        assert_eq!(num(1.0), "1");
        assert_eq!(num(-12.510060588454696), "-12.5100605885");
        assert_eq!(num(0.1), "0.1");
        assert_eq!(num(1.0 / 3.0), "0.333333333333");
        assert_eq!(num(1e-7), "1e-07");
        assert_eq!(num(1.5e15), "1.5e+15");
        assert_eq!(num(123456789012.0), "123456789012");
        assert_eq!(num(0.00012345), "0.00012345");
        assert_eq!(num(f64::NEG_INFINITY), "-inf");
    }

    #[test]
    fn twelve_digits_round_trip_within_tolerance() {
        for x in [
            std::f64::consts::PI,
            -71.0012345678901,
            4.0 / 27.0,
            9.87654321e-9,
        ] {
            let back: f64 = num(x).parse().unwrap();
            assert!((back - x).abs() <= 5e-12 * x.abs());
        }
    }

    #[test]
    fn results_pad_missing_users() {
        let row = |n: usize| ResultRow {
            n,
            scheme: "pricing".into(),
            monitoring: "perfect".into(),
            awareness: String::new(),
            social_welfare: -1.0,
            total_throughput: 0.5,
            actions: vec![0.5; n],
            charge_or_intervention: vec![1.0; n],
            seed: None,
        };
        let text = results_table(&[row(1), row(2)]).render();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(
            lines[0],
            "n,scheme,monitoring,awareness,social_welfare,total_throughput,action_user0,action_user1,charge_or_intervention_user0,charge_or_intervention_user1,seed"
        );
        assert_eq!(lines[1], "1,pricing,perfect,,-1,0.5,0.5,,1,,");
        assert!(!text.contains('\r'));
    }
}
