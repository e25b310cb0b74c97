use std::io::Write;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Deserialize;
use serde_json::{Number, Value};

use freeforms_core::{CumulantSeq, GridSpec};

use crate::error::CliError;

/// Parses `arg` as inline JSON when it starts with `[` or `{`, otherwise
/// reads the file it names.
pub fn load<T: DeserializeOwned>(what: &str, arg: &str) -> Result<T, CliError> {
    let trimmed = arg.trim_start();
    let (text, origin) = if trimmed.starts_with('[') || trimmed.starts_with('{') {
        (arg.to_string(), "inline JSON".to_string())
    } else {
        let path = Path::new(arg);
        (std::fs::read_to_string(path).map_err(|e| CliError::read(path, e))?, path.display().to_string())
    };
    serde_json::from_str(&text).map_err(|e| CliError::Validation(format!("{what} ({origin}): {e}")))
}

#[derive(Deserialize)]
#[serde(untagged)]
enum KappaInput {
    Bare(Vec<f64>),
    Wrapped { kappa: Vec<f64> },
}

impl KappaInput {
    fn into_seq(self) -> Result<CumulantSeq, CliError> {
        let v = match self {
            KappaInput::Bare(v) | KappaInput::Wrapped { kappa: v } => v,
        };
        if v.is_empty() {
            return Err(CliError::Validation("cumulant list is empty".into()));
        }
        Ok(CumulantSeq::new(v)?)
    }
}

/// `[k1, k2, ...]` or `{"kappa": [...]}`.
pub fn load_kappa(arg: &str) -> Result<CumulantSeq, CliError> {
    load::<KappaInput>("cumulants", arg)?.into_seq()
}

/// A list of cumulant sequences, each in either accepted form.
pub fn load_kappa_list(arg: &str) -> Result<Vec<CumulantSeq>, CliError> {
    load::<Vec<KappaInput>>("cumulant list", arg)?.into_iter().map(KappaInput::into_seq).collect()
}

#[derive(Deserialize)]
#[serde(untagged)]
enum MomentsInput {
    Bare(Vec<f64>),
    Wrapped { moments: Vec<f64> },
}

/// `[m0, m1, ...]` or `{"moments": [...]}`.
pub fn load_moments(arg: &str) -> Result<Vec<f64>, CliError> {
    Ok(match load::<MomentsInput>("moments", arg)? {
        MomentsInput::Bare(v) | MomentsInput::Wrapped { moments: v } => v,
    })
}

pub fn parse_grid(s: &str) -> Result<GridSpec, CliError> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let bad = || CliError::Validation(format!("grid must be xmin,xmax,N; got {s:?}"));
    let [lo, hi, n] = parts[..] else { return Err(bad()) };
    let lo: f64 = lo.parse().map_err(|_| bad())?;
    let hi: f64 = hi.parse().map_err(|_| bad())?;
    let n: usize = n.parse().map_err(|_| bad())?;
    Ok(GridSpec::new(lo, hi, n)?)
}

pub fn parse_resolution(s: &str) -> Result<(usize, usize), CliError> {
    let bad = || CliError::Validation(format!("resolution must be n_r,n_theta; got {s:?}"));
    let (a, b) = s.split_once(',').ok_or_else(bad)?;
    Ok((a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?))
}

/// Floats with no fractional part are written as integers, so that
/// `1.0` and `1` produce the same bytes.
pub fn tidy(v: Value) -> Value {
    match v {
        Value::Number(n) => match n.as_f64() {
            Some(x) if n.is_f64() && x.fract() == 0.0 && x.abs() < 9.007_199_254_740_992e15 => {
                Value::Number(Number::from(x as i64))
            }
            _ => Value::Number(n),
        },
        Value::Array(a) => Value::Array(a.into_iter().map(tidy).collect()),
        Value::Object(o) => Value::Object(o.into_iter().map(|(k, v)| (k, tidy(v))).collect()),
        other => other,
    }
}

pub fn print_json(v: Value) -> Result<(), CliError> {
    let text = serde_json::to_string(&tidy(v)).expect("JSON values always serialize");
    match writeln!(std::io::stdout().lock(), "{text}") {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(CliError::write(Path::new("<stdout>"), e)),
        _ => Ok(()),
    }
}

/// Writes a CSV with the given header either to `path` or to stdout.
pub fn write_csv(path: Option<&Path>, header: &[&str], rows: impl Iterator<Item = Vec<f64>>) -> Result<usize, CliError> {
    let sink: Box<dyn Write> = match path {
        Some(p) => Box::new(std::fs::File::create(p).map_err(|e| CliError::write(p, e))?),
        None => Box::new(std::io::stdout().lock()),
    };
    let fail = |e: csv::Error| {
        let shown = path.unwrap_or(Path::new("<stdout>"));
        CliError::write(shown, std::io::Error::other(e))
    };
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(header).map_err(fail)?;
    let mut count = 0;
    for row in rows {
        // Adding zero turns -0 into 0.
        w.write_record(row.iter().map(|x| (x + 0.0).to_string())).map_err(fail)?;
        count += 1;
    }
    w.flush().map_err(|e| CliError::write(path.unwrap_or(Path::new("<stdout>")), e))?;
    Ok(count)
}
