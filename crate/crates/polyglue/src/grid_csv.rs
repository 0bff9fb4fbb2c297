//! Plain-text sample files.
//!
//! A grid file holds one [`CylinderMap`]: a header line
//! `# d n_s n_t s_min s_max asympt_kind c...` with `asympt_kind` one of
//! `none`, `constant`, `antipodal` (the latter two followed by `d` values),
//! then one row of `d` comma-separated values per node, `s`-major.
//!
//! A neck file holds a [`NeckMap`] for a known gluing parameter: a header
//! `# neck z|c length twist n_t d c...` and rows `anchor,offset,j,values` for
//! window nodes followed by rows `gap,index,,values` for the constant
//! plateaus of split necks.

use anyhow::{anyhow, bail, ensure, Context, Result};
use polyglue_core::cylinder::{Asymptote, CylinderMap, Grid, MapPair, Samples, Space};
use polyglue_core::neck::{Anchor, NeckAxis, NeckKind, NeckMap};

use crate::report::num;

fn parse_f64(s: &str) -> Result<f64> {
    s.trim().parse::<f64>().with_context(|| format!("not a number: {s:?}"))
}

fn parse_usize(s: &str) -> Result<usize> {
    s.trim().parse::<usize>().with_context(|| format!("not a count: {s:?}"))
}

/// Splits the leading `#` line from the body.
fn split_header(text: &str) -> Result<(Vec<&str>, &str)> {
    let text = text.trim_start_matches('\u{feff}');
    let (first, rest) = text.split_once('\n').unwrap_or((text, ""));
    let first = first.trim_end_matches('\r');
    let fields = first
        .strip_prefix('#')
        .ok_or_else(|| anyhow!("missing '#' header line"))?
        .split_whitespace()
        .collect();
    Ok((fields, rest))
}

fn rows(body: &str) -> csv::Reader<&[u8]> {
    csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(body.as_bytes())
}

fn fmt_values(values: &[f64]) -> String {
    values.iter().map(|v| num(*v)).collect::<Vec<_>>().join(",")
}

pub fn read_grid(text: &str) -> Result<CylinderMap> {
    let (h, body) = split_header(text)?;
    ensure!(h.len() >= 6, "grid header needs d n_s n_t s_min s_max asympt_kind");
    let d = parse_usize(h[0])?;
    let (n_s, n_t) = (parse_usize(h[1])?, parse_usize(h[2])?);
    let grid = Grid::new(parse_f64(h[3])?, parse_f64(h[4])?, n_s, n_t)?;
    let consts = || -> Result<Vec<f64>> {
        ensure!(h.len() == 6 + d, "expected {d} asymptotic constants");
        h[6..].iter().map(|s| parse_f64(s)).collect()
    };
    let asympt = match h[5] {
        "none" => {
            ensure!(h.len() == 6, "asympt_kind none takes no constants");
            Asymptote::None
        }
        "constant" => Asymptote::Constant(consts()?),
        "antipodal" => Asymptote::Antipodal(consts()?),
        k => bail!("unknown asympt_kind {k:?}"),
    };
    let mut values = Vec::with_capacity(n_s * n_t * d);
    for (line, rec) in rows(body).records().enumerate() {
        let rec = rec?;
        ensure!(rec.len() == d, "row {} has {} values, expected {d}", line + 1, rec.len());
        for f in rec.iter() {
            values.push(parse_f64(f)?);
        }
    }
    ensure!(
        values.len() == n_s * n_t * d,
        "expected {} rows, found {}",
        n_s * n_t,
        values.len() / d.max(1)
    );
    Ok(CylinderMap::new(grid, d, values, asympt)?)
}

pub fn write_grid(u: &CylinderMap) -> String {
    let g = u.grid();
    let mut out = format!("# {} {} {} {} {} ", u.dim(), g.n_s, g.n_t, num(g.s_min), num(g.s_max));
    match u.asympt() {
        Asymptote::None => out.push_str("none"),
        Asymptote::Constant(c) => out.push_str(&format!("constant {}", fmt_values(c).replace(',', " "))),
        Asymptote::Antipodal(c) => out.push_str(&format!("antipodal {}", fmt_values(c).replace(',', " "))),
    }
    out.push('\n');
    for node in u.values().chunks(u.dim()) {
        out.push_str(&fmt_values(node));
        out.push('\n');
    }
    out
}

/// A pair from its two halves; the space is `F` when the constants vanish
/// and `E` otherwise.
pub fn read_pair(plus: &str, minus: &str) -> Result<MapPair> {
    let (p, m) = (read_grid(plus).context("plus half")?, read_grid(minus).context("minus half")?);
    let space = match p.constant() {
        Some(c) if c.iter().all(|&x| x == 0.0) => Space::F,
        _ => Space::E,
    };
    Ok(MapPair::new(p, m, space)?)
}

fn anchor_name(a: Anchor) -> &'static str {
    match a {
        Anchor::Start => "start",
        Anchor::Middle => "middle",
        Anchor::End => "end",
    }
}

pub fn write_neck(v: &NeckMap) -> String {
    let axis = v.axis();
    let kind = match axis.kind {
        NeckKind::Finite => "z",
        NeckKind::Infinite => "c",
    };
    let mut out = format!(
        "# neck {kind} {} {} {} {} {}\n",
        num(axis.length),
        num(axis.twist),
        axis.n_t,
        v.dim(),
        fmt_values(v.asympt()).replace(',', " ")
    );
    let d = v.dim();
    for (k, i, pos) in axis.nodes() {
        let row = v.windows()[k].row(i);
        for j in 0..axis.n_t {
            out.push_str(&format!(
                "{},{},{j},{}\n",
                anchor_name(pos.anchor),
                pos.offset,
                fmt_values(&row[j * d..(j + 1) * d])
            ));
        }
    }
    for (g, c) in v.gaps().iter().enumerate() {
        out.push_str(&format!("gap,{g},,{}\n", fmt_values(c)));
    }
    out
}

/// Reads a neck file onto a known axis; node positions must match.
pub fn read_neck(text: &str, axis: &NeckAxis) -> Result<NeckMap> {
    let (h, body) = split_header(text)?;
    ensure!(h.len() >= 6 && h[0] == "neck", "not a neck file");
    let kind = match h[1] {
        "z" => NeckKind::Finite,
        "c" => NeckKind::Infinite,
        k => bail!("unknown neck kind {k:?}"),
    };
    ensure!(kind == axis.kind, "neck file holds the other neck");
    let (length, twist) = (parse_f64(h[2])?, parse_f64(h[3])?);
    ensure!(
        (length - axis.length).abs() <= 1e-9 * axis.length.max(1.0) && (twist - axis.twist).abs() <= 1e-12,
        "neck file is for length {length}, twist {twist}; expected {}, {}",
        axis.length,
        axis.twist
    );
    let (n_t, d) = (parse_usize(h[4])?, parse_usize(h[5])?);
    ensure!(n_t == axis.n_t, "neck file has n_t = {n_t}, expected {}", axis.n_t);
    ensure!(h.len() == 6 + d, "expected {d} asymptotic constants");
    let asympt = h[6..].iter().map(|s| parse_f64(s)).collect::<Result<Vec<_>>>()?;
    let mut windows: Vec<Samples> = axis
        .windows
        .iter()
        .map(|w| Samples::zeros(w.n_s, n_t, d, w.ds))
        .collect();
    let mut gaps = vec![vec![0.0; d]; axis.gap_count()];
    let mut nodes = axis.nodes().flat_map(|(k, i, pos)| (0..n_t).map(move |j| (k, i, j, pos)));
    let mut filled_gaps = 0;
    for rec in rows(body).records() {
        let rec = rec?;
        ensure!(rec.len() == 3 + d, "neck rows need anchor,offset,j and {d} values");
        let vals = rec.iter().skip(3).map(parse_f64).collect::<Result<Vec<_>>>()?;
        if &rec[0] == "gap" {
            let g = parse_usize(&rec[1])?;
            ensure!(g < gaps.len(), "gap index {g} out of range");
            gaps[g] = vals;
            filled_gaps += 1;
            continue;
        }
        let (k, i, j, pos) = nodes.next().ok_or_else(|| anyhow!("too many neck rows"))?;
        let offset = parse_f64(&rec[1])?;
        ensure!(
            &rec[0] == anchor_name(pos.anchor) && (offset - pos.offset).abs() <= 1e-9 && parse_usize(&rec[2])? == j,
            "neck row ({}, {}, {}) does not match the axis node ({}, {}, {j})",
            &rec[0],
            &rec[1],
            &rec[2],
            anchor_name(pos.anchor),
            pos.offset
        );
        let row = windows[k].row_mut(i);
        row[j * d..(j + 1) * d].copy_from_slice(&vals);
    }
    ensure!(nodes.next().is_none(), "neck file is missing rows");
    ensure!(filled_gaps == gaps.len(), "neck file is missing gap rows");
    Ok(NeckMap::from_parts(axis, d, windows, gaps, asympt)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_errors_are_reported() {
        assert!(read_grid("1 4 4 0 1 none\n").is_err());
        assert!(read_grid("# 1 4 4 0 1 sideways\n").is_err());
        assert!(read_grid("# 1 4 4 0 1 constant\n").is_err());
    }

    #[test]
    fn short_body_is_rejected() {
        let text = "# 1 4 4 0 1 none\n0\n0\n";
        assert!(read_grid(text).unwrap_err().to_string().contains("expected 16 rows"));
    }
}
