//! Output files: written to a temporary sibling and renamed into place on success, so a
//! failed run leaves nothing behind.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde_json::{Map, Value};

pub const TOOL_VERSION: &str = concat!("gvf ", env!("CARGO_PKG_VERSION"));

/// A real with 17 significant digits.
pub fn real(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        format!("{x}")
    }
}

/// JSON has no infinities or NaN; those become `null`.
pub fn json_real(x: f64) -> Value {
    serde_json::Number::from_f64(x).map(Value::Number).unwrap_or(Value::Null)
}

pub fn json_point(x: &[f64]) -> Value {
    Value::Array(x.iter().map(|v| json_real(*v)).collect())
}

pub fn json_header(config: &[(String, String)]) -> Value {
    let mut m = Map::new();
    m.insert("version".into(), Value::String(TOOL_VERSION.into()));
    for (k, v) in config {
        m.insert(k.clone(), Value::String(v.clone()));
    }
    Value::Object(m)
}

pub enum Sink {
    Stdout(io::Stdout),
    File { writer: BufWriter<File>, temp: PathBuf, target: PathBuf, committed: bool },
}

impl Sink {
    /// Standard output when `path` is `None`.
    pub fn create(path: Option<&Path>) -> io::Result<Self> {
        let Some(target) = path else {
            return Ok(Sink::Stdout(io::stdout()));
        };
        let name = target.file_name().ok_or_else(|| io::Error::new(io::ErrorKind::InvalidInput, "output path has no file name"))?;
        let mut temp_name = std::ffi::OsString::from(".");
        temp_name.push(name);
        temp_name.push(format!(".partial-{}", std::process::id()));
        let temp = target.with_file_name(temp_name);
        let writer = BufWriter::new(File::create(&temp)?);
        Ok(Sink::File { writer, temp, target: target.to_path_buf(), committed: false })
    }

    pub fn commit(mut self) -> io::Result<()> {
        match &mut self {
            Sink::Stdout(s) => s.flush(),
            Sink::File { writer, temp, target, committed } => {
                writer.flush()?;
                writer.get_ref().sync_all()?;
                std::fs::rename(&*temp, &*target)?;
                *committed = true;
                Ok(())
            }
        }
    }
}

impl Write for Sink {
    fn write(&mut self, buf: &[u8]) -> io::Result<usize> {
        match self {
            Sink::Stdout(s) => s.write(buf),
            Sink::File { writer, .. } => writer.write(buf),
        }
    }

    fn flush(&mut self) -> io::Result<()> {
        match self {
            Sink::Stdout(s) => s.flush(),
            Sink::File { writer, .. } => writer.flush(),
        }
    }
}

impl Drop for Sink {
    fn drop(&mut self) {
        if let Sink::File { temp, committed: false, .. } = self {
            let _ = std::fs::remove_file(temp);
        }
    }
}

/// CSV with a `#` comment header and a column row; `\n` line endings.
pub struct CsvWriter {
    sink: Sink,
}

impl CsvWriter {
    pub fn create(path: Option<&Path>, config: &[(String, String)], notes: &[(String, String)], columns: &[String]) -> io::Result<Self> {
        let mut sink = Sink::create(path)?;
        writeln!(sink, "# {TOOL_VERSION}")?;
        for (k, v) in config.iter().chain(notes) {
            writeln!(sink, "# {k} = {v}")?;
        }
        writeln!(sink, "{}", columns.join(","))?;
        Ok(Self { sink })
    }

    pub fn row(&mut self, fields: &[String]) -> io::Result<()> {
        writeln!(self.sink, "{}", fields.join(","))
    }

    pub fn finish(self) -> io::Result<()> {
        self.sink.commit()
    }
}

pub fn write_json(path: Option<&Path>, value: &Value) -> io::Result<()> {
    let mut sink = Sink::create(path)?;
    serde_json::to_writer_pretty(&mut sink, value).map_err(io::Error::other)?;
    writeln!(sink)?;
    sink.commit()
}

/// `prefix1,...,prefixn`
pub fn indexed_columns(prefix: &str, n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("{prefix}{i}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reals_round_trip_exactly() {
        for x in [0.1, 1.0 / 3.0, -2.5e-300, 4.0 * std::f64::consts::PI, 1e308] {
            assert_eq!(real(x).parse::<f64>().unwrap().to_bits(), x.to_bits());
        }
        assert_eq!(real(3.0), "3.0000000000000000e0");
    }

    #[test]
    fn uncommitted_file_is_removed() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.csv");
        {
            let mut w = CsvWriter::create(Some(&path), &[], &[], &["a".into()]).unwrap();
            w.row(&["1".into()]).unwrap();
        }
        assert!(!path.exists());
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 0);
        let w = CsvWriter::create(Some(&path), &[("k".into(), "v".into())], &[], &["a".into()]).unwrap();
        w.finish().unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), format!("# {TOOL_VERSION}\n# k = v\na\n"));
    }
}
