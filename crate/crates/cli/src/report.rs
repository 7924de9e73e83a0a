//! Line-oriented `key=value` reports. Timing lines always come last so
//! consumers can drop them when comparing runs.

use std::fmt::Display;
use std::io::Write;
use std::path::Path;

#[derive(Debug, Default)]
pub struct Report {
    lines: Vec<(String, String)>,
    timing: Vec<(String, String)>,
}

impl Report {
    pub fn push(&mut self, key: impl Into<String>, value: impl Display) {
        self.lines.push((key.into(), value.to_string()));
    }

    pub fn timing(&mut self, key: &str, value: f64) {
        self.timing.push((key.to_string(), value.to_string()));
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for (k, v) in self.lines.iter().chain(&self.timing) {
            out.push_str(k);
            out.push('=');
            out.push_str(v);
            out.push('\n');
        }
        out
    }

    pub fn emit(&self, path: Option<&Path>) -> std::io::Result<()> {
        match path {
            Some(p) => std::fs::write(p, self.render()),
            None => std::io::stdout().lock().write_all(self.render().as_bytes()),
        }
    }
}
