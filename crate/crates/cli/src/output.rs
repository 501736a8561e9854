//! Output writers: CSV with `.` decimal and `,` separator, or one JSON
//! object per line. Every file starts with the configuration echoed as `#`
//! comments, and all numbers carry 17 significant digits so they round-trip.

use std::io::Write;
use std::path::Path;

/// 17 significant digits; round-trips f64 exactly.
pub fn num(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    format!("{x:.16e}")
}

pub struct Sink {
    inner: Box<dyn Write>,
}

impl Sink {
    pub fn create(path: Option<&Path>) -> std::io::Result<Sink> {
        let inner: Box<dyn Write> = match path {
            Some(p) => Box::new(std::io::BufWriter::new(std::fs::File::create(p)?)),
            None => Box::new(std::io::stdout().lock()),
        };
        Ok(Sink { inner })
    }

    pub fn comment_lines(&mut self, lines: &[String]) -> std::io::Result<()> {
        for l in lines {
            writeln!(self.inner, "# {l}")?;
        }
        Ok(())
    }

    pub fn line(&mut self, s: &str) -> std::io::Result<()> {
        writeln!(self.inner, "{s}")
    }

    pub fn finish(mut self) -> std::io::Result<()> {
        self.inner.flush()
    }
}

/// Minimal JSON object writer with ordered keys.
pub struct JsonRecord {
    parts: Vec<String>,
}

impl JsonRecord {
    pub fn new() -> JsonRecord {
        JsonRecord { parts: Vec::new() }
    }


    pub fn uint(mut self, key: &str, v: u64) -> Self {
        self.parts.push(format!("\"{key}\":{v}"));
        self
    }

    pub fn float(mut self, key: &str, v: f64) -> Self {
        if v.is_nan() {
            self.parts.push(format!("\"{key}\":null"));
        } else {
            self.parts.push(format!("\"{key}\":{}", num(v)));
        }
        self
    }

    pub fn bool(mut self, key: &str, v: bool) -> Self {
        self.parts.push(format!("\"{key}\":{v}"));
        self
    }

    pub fn string(mut self, key: &str, v: &str) -> Self {
        let escaped = v.replace('\\', "\\\\").replace('"', "\\\"");
        self.parts.push(format!("\"{key}\":\"{escaped}\""));
        self
    }

    pub fn render(self) -> String {
        format!("{{{}}}", self.parts.join(","))
    }
}
