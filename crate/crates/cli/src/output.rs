//! Text formats shared by every subcommand: reals are written with 17
//! significant digits, files are replaced atomically.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use laplace_qmle::{ParamBox, SeriesMatrix};
use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};
use serde_json::Value;

use crate::CliError;

/// `d.dddddddddddddddde±x`; non-finite values as `NaN`, `inf`, `-inf`.
pub fn real(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "NaN".into()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

/// Pretty JSON whose floats use [`real`]. Non-finite floats become `null`.
struct Sig17<'a>(PrettyFormatter<'a>);

impl Formatter for Sig17<'_> {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        w.write_all(real(value).as_bytes())
    }
    fn write_f32<W: ?Sized + Write>(&mut self, w: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(w, value as f64)
    }
    fn begin_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }
    fn end_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }
    fn begin_array_value<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }
    fn end_array_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }
    fn begin_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }
    fn end_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }
    fn begin_object_key<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }
    fn begin_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }
    fn end_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

pub fn json<T: Serialize + ?Sized>(value: &T) -> Result<String, CliError> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, Sig17(PrettyFormatter::new()));
    value
        .serialize(&mut ser)
        .map_err(|e| CliError::Io(format!("serializing JSON: {e}")))?;
    buf.push(b'\n');
    Ok(String::from_utf8(buf).expect("serde_json writes UTF-8"))
}

/// CSV text from a header and rows of already formatted fields.
pub fn csv_text(header: &[String], rows: &[Vec<String>]) -> Result<String, CliError> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    let err = |e: csv::Error| CliError::Io(format!("writing CSV: {e}"));
    w.write_record(header).map_err(err)?;
    for r in rows {
        w.write_record(r).map_err(err)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| CliError::Io(format!("writing CSV: {e}")))?;
    Ok(String::from_utf8(bytes).expect("CSV fields are UTF-8"))
}

/// Writes `contents` to a sibling temporary file and renames it over `path`.
pub fn write_atomic(path: &Path, contents: &str) -> Result<(), CliError> {
    let io_err = |e: io::Error| CliError::Io(format!("{}: {e}", path.display()));
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(io_err)?;
    }
    let name = path
        .file_name()
        .ok_or_else(|| CliError::Usage(format!("not a file path: {}", path.display())))?;
    let tmp = path.with_file_name(format!(
        ".{}.tmp{}",
        name.to_string_lossy(),
        std::process::id()
    ));
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(contents.as_bytes())?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    result.map_err(io_err)
}

/// Resolves a relative output path against the output directory.
pub fn out_path(out_dir: &Path, name: &str) -> PathBuf {
    let p = Path::new(name);
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        out_dir.join(p)
    }
}

fn read_text(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

/// Numeric CSV with a header row; a leading `t` column is dropped.
pub fn read_table(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>), CliError> {
    let text = read_text(path)?;
    let mut r = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let bad = |msg: String| CliError::Usage(format!("{}: {msg}", path.display()));
    let header: Vec<String> = r
        .headers()
        .map_err(|e| bad(e.to_string()))?
        .iter()
        .map(str::to_owned)
        .collect();
    let skip = usize::from(header.first().is_some_and(|h| h == "t"));
    let mut rows = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        let row = rec
            .iter()
            .skip(skip)
            .map(|f| f.parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| bad(format!("row {}: {e}", i + 1)))?;
        rows.push(row);
    }
    Ok((header[skip..].to_vec(), rows))
}

pub fn read_series(path: &Path, p: usize) -> Result<SeriesMatrix, CliError> {
    let (header, rows) = read_table(path)?;
    if header.len() != p {
        return Err(CliError::Usage(format!(
            "{}: expected {p} data columns, found {}",
            path.display(),
            header.len()
        )));
    }
    SeriesMatrix::from_rows(p, &rows).map_err(CliError::from)
}

pub fn series_csv(series: &SeriesMatrix, prefix: &str, with_t: bool) -> Result<String, CliError> {
    let mut header: Vec<String> = Vec::new();
    if with_t {
        header.push("t".into());
    }
    header.extend((1..=series.dim()).map(|k| format!("{prefix}{k}")));
    let rows: Vec<Vec<String>> = series
        .rows()
        .enumerate()
        .map(|(t, row)| {
            let mut out = Vec::with_capacity(row.len() + 1);
            if with_t {
                out.push((t + 1).to_string());
            }
            out.extend(row.iter().map(|&x| real(x)));
            out
        })
        .collect();
    csv_text(&header, &rows)
}

/// A parameter vector given inline (`0.4,0.1,...` or a JSON array) or as a
/// path to a `.json` file (array or `{"theta": [...]}`) or a one-row `.csv`.
pub fn parse_theta(value: &Value) -> Result<Vec<f64>, CliError> {
    match value {
        Value::Array(_) => serde_json::from_value(value.clone())
            .map_err(|e| CliError::Usage(format!("theta: {e}"))),
        Value::String(s) => {
            let path = Path::new(s);
            if path.is_file() {
                return theta_from_file(path);
            }
            let trimmed = s.trim().trim_start_matches('[').trim_end_matches(']');
            trimmed
                .split(',')
                .map(|v| v.trim().parse::<f64>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|_| {
                    CliError::Usage(format!(
                        "theta: '{s}' is neither a file nor a list of numbers"
                    ))
                })
        }
        other => Err(CliError::Usage(format!("theta: unsupported value {other}"))),
    }
}

fn theta_from_file(path: &Path) -> Result<Vec<f64>, CliError> {
    if path.extension().is_some_and(|e| e == "csv") {
        let text = read_text(path)?;
        let mut r = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        for rec in r.records() {
            let rec = rec.map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
            if let Ok(v) = rec
                .iter()
                .map(|f| f.parse::<f64>())
                .collect::<Result<Vec<_>, _>>()
            {
                return Ok(v);
            }
        }
        return Err(CliError::Usage(format!(
            "{}: no numeric row",
            path.display()
        )));
    }
    let v: Value = serde_json::from_str(&read_text(path)?)
        .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    let arr = v.get("theta").cloned().unwrap_or(v);
    serde_json::from_value(arr).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

/// A box given inline as `{"lower": [...], "upper": [...]}` or as a path to
/// such a JSON file.
pub fn parse_box(value: &Value) -> Result<ParamBox, CliError> {
    let raw = match value {
        Value::String(s) => serde_json::from_str(&read_text(Path::new(s))?)
            .map_err(|e| CliError::Usage(format!("{s}: {e}")))?,
        other => other.clone(),
    };
    let parsed: ParamBox =
        serde_json::from_value(raw).map_err(|e| CliError::Usage(format!("box: {e}")))?;
    ParamBox::new(parsed.lower, parsed.upper).map_err(CliError::from)
}
