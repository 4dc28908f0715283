//! CSV helpers shared by the exporters.

use std::fmt::Write;

/// Formats `v` with 12 significant digits, trailing zeros trimmed.
pub fn fmt12(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    if !v.is_finite() {
        return format!("{v}");
    }
    let mag = v.abs().log10().floor() as i32;
    if !(-5..15).contains(&mag) {
        return format!("{v:.11e}");
    }
    let decimals = (11 - mag).max(0) as usize;
    let s = format!("{v:.decimals$}");
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

/// A CSV document that starts with a `# params:` line.
#[derive(Debug)]
pub struct Csv {
    buf: String,
}

impl Csv {
    pub fn new(params: &str, header: &str) -> Self {
        let mut buf = String::new();
        writeln!(buf, "# params: {params}").unwrap();
        writeln!(buf, "{header}").unwrap();
        Self { buf }
    }

    pub fn row(&mut self, fields: &[String]) {
        self.buf.push_str(&fields.join(","));
        self.buf.push('\n');
    }

    pub fn finish(self) -> String {
        self.buf
    }
}
