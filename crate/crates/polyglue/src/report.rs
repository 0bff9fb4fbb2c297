//! Reports, CSV tables and plot-script emission.

use std::fmt::Write as _;

use anyhow::{bail, Result};
use sha2::{Digest, Sha256};

/// SHA-256 of the inputs of a command, as lowercase hex. Each part is
/// length-prefixed so that different splits never collide.
pub fn digest<I, S>(parts: I) -> String
where
    I: IntoIterator<Item = S>,
    S: AsRef<[u8]>,
{
    let mut h = Sha256::new();
    for p in parts {
        let p = p.as_ref();
        h.update((p.len() as u64).to_le_bytes());
        h.update(p);
    }
    hex::encode(h.finalize())
}

/// A named value compared against a threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckRow {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    pub pass: bool,
}

impl CheckRow {
    /// Passes when `value <= threshold`.
    pub fn at_most(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        Self {
            name: name.into(),
            value,
            threshold,
            pass: value <= threshold,
        }
    }

    /// Passes when `value >= threshold`.
    pub fn at_least(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        Self {
            name: name.into(),
            value,
            threshold,
            pass: value >= threshold,
        }
    }

    pub fn equal(name: impl Into<String>, value: f64, expected: f64) -> Self {
        Self {
            name: name.into(),
            value,
            threshold: expected,
            pass: value == expected,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub command: String,
    pub digest: String,
    pub rows: Vec<CheckRow>,
}

impl Report {
    pub fn new(command: impl Into<String>, digest: String) -> Self {
        Self {
            command: command.into(),
            digest,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: CheckRow) {
        self.rows.push(row);
    }

    pub fn pass(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }

    pub fn to_csv(&self) -> String {
        let mut t = Table::new(["name", "value", "threshold", "pass"]);
        t.comment(format!("command: {}", self.command));
        t.comment(format!("digest: {}", self.digest));
        for r in &self.rows {
            t.row([r.name.clone(), num(r.value), num(r.threshold), r.pass.to_string()]);
        }
        t.to_csv()
    }
}

/// Shortest round-trip form of a float, scientific outside `[1e-5, 1e16)`.
pub fn num(x: f64) -> String {
    let a = x.abs();
    if a != 0.0 && a.is_finite() && !(1e-5..1e16).contains(&a) {
        format!("{x:e}")
    } else {
        format!("{x}")
    }
}

/// A value with 15 significant digits: plain decimal in `[1e-5, 1e15)`,
/// scientific otherwise.
pub fn sig15(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let mag = x.abs().log10().floor() as i32;
    if (-5..15).contains(&mag) {
        let decimals = (14 - mag).max(0) as usize;
        format!("{x:.decimals$}")
    } else {
        format!("{x:.14e}")
    }
}

/// A CSV table preceded by `#` comment lines.
#[derive(Debug, Clone, Default)]
pub struct Table {
    comments: Vec<String>,
    columns: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<I, S>(columns: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self {
            comments: Vec::new(),
            columns: columns.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn comment(&mut self, line: impl Into<String>) {
        self.comments.push(line.into());
    }

    pub fn row<I, S>(&mut self, cells: I)
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let r: Vec<String> = cells.into_iter().map(Into::into).collect();
        debug_assert_eq!(r.len(), self.columns.len());
        self.rows.push(r);
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for c in &self.comments {
            let _ = writeln!(out, "# {c}");
        }
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.columns).expect("in-memory write");
        for r in &self.rows {
            w.write_record(r).expect("in-memory write");
        }
        out.push_str(&String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 cells"));
        out
    }
}

/// One curve pair of a ratio sweep: lower and upper envelope against `R`.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub length: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

fn py_list(xs: &[f64]) -> String {
    let items: Vec<String> = xs
        .iter()
        .map(|x| if x.is_finite() { num(*x) } else { "float('nan')".into() })
        .collect();
    format!("[{}]", items.join(", "))
}

/// A self-contained matplotlib script drawing each series as a lower and an
/// upper envelope against the neck length, one legend entry per series.
pub fn emit_plot_script(series: &[Series], title: &str, output: &str) -> Result<String> {
    if series.is_empty() || series.iter().all(|s| s.length.is_empty()) {
        bail!("nothing to plot");
    }
    let mut s = String::new();
    s.push_str("import matplotlib\nmatplotlib.use(\"Agg\")\nimport matplotlib.pyplot as plt\n\n");
    s.push_str("series = [\n");
    for x in series {
        let _ = writeln!(
            s,
            "    ({:?}, {}, {}, {}),",
            x.label,
            py_list(&x.length),
            py_list(&x.lower),
            py_list(&x.upper)
        );
    }
    s.push_str("]\n\n");
    s.push_str("fig, ax = plt.subplots(figsize=(6, 4))\n");
    s.push_str("for label, length, lower, upper in series:\n");
    s.push_str("    line, = ax.plot(length, upper, marker=\"o\", label=label + \" upper\")\n");
    s.push_str("    ax.plot(length, lower, marker=\"s\", linestyle=\"--\", color=line.get_color(), label=label + \" lower\")\n");
    s.push_str("ax.set_xlabel(\"R\")\nax.set_ylabel(\"ratio\")\nax.set_yscale(\"log\")\n");
    let _ = writeln!(s, "ax.set_title({title:?})");
    s.push_str("ax.legend(fontsize=\"small\")\nfig.tight_layout()\n");
    let _ = writeln!(s, "fig.savefig({output:?})");
    Ok(s)
}
