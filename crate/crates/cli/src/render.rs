//! Key/value reports rendered as aligned text or `section key value` TSV.

use std::fmt::Write as _;

use crate::args::Format;

pub enum Val {
    Int(u64),
    /// Text output rounds to the given decimals; TSV keeps full precision.
    Num(f64, usize),
    Str(String),
    Missing,
}

#[derive(Default)]
pub struct Report {
    sections: Vec<(String, Vec<(String, Val)>)>,
}

impl Report {
    pub fn section(&mut self, name: impl Into<String>) -> &mut Vec<(String, Val)> {
        self.sections.push((name.into(), Vec::new()));
        &mut self.sections.last_mut().expect("just pushed").1
    }

    pub fn render(&self, format: Format) -> String {
        let mut out = String::new();
        match format {
            Format::Tsv => {
                out.push_str("section\tkey\tvalue\n");
                for (section, rows) in &self.sections {
                    for (k, v) in rows {
                        let v = match v {
                            Val::Int(i) => i.to_string(),
                            Val::Num(x, _) => format!("{x:?}"),
                            Val::Str(s) => s.clone(),
                            Val::Missing => "NA".into(),
                        };
                        let _ = writeln!(out, "{section}\t{k}\t{v}");
                    }
                }
            }
            Format::Text => {
                for (i, (section, rows)) in self.sections.iter().enumerate() {
                    if i > 0 {
                        out.push('\n');
                    }
                    let _ = writeln!(out, "[{section}]");
                    let width = rows.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
                    for (k, v) in rows {
                        let v = match v {
                            Val::Int(i) => i.to_string(),
                            Val::Num(x, d) => format!("{x:.d$}"),
                            Val::Str(s) => s.clone(),
                            Val::Missing => "n/a".into(),
                        };
                        let _ = writeln!(out, "{k:<width$}  {v}");
                    }
                }
            }
        }
        out
    }
}

/// Columns of numbers: text right-aligned with per-column decimals, TSV exact.
pub fn columns(format: Format, header: &[&str], rows: &[Vec<f64>], decimals: &[usize]) -> String {
    let mut out = String::new();
    match format {
        Format::Tsv => {
            out.push_str(&header.join("\t"));
            out.push('\n');
            for r in rows {
                let cells: Vec<String> = r.iter().map(|x| format!("{x:?}")).collect();
                out.push_str(&cells.join("\t"));
                out.push('\n');
            }
        }
        Format::Text => {
            let widest = decimals.iter().max().copied().unwrap_or(0);
            let width = header
                .iter()
                .map(|h| h.len())
                .max()
                .unwrap_or(0)
                .max(widest + 3);
            let cells: Vec<String> = header.iter().map(|h| format!("{h:>width$}")).collect();
            out.push_str(&cells.join("  "));
            out.push('\n');
            for r in rows {
                let cells: Vec<String> = r
                    .iter()
                    .zip(decimals)
                    .map(|(x, &d)| format!("{x:>width$.d$}"))
                    .collect();
                out.push_str(&cells.join("  "));
                out.push('\n');
            }
        }
    }
    out
}
