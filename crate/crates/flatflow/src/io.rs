//! File formats.
//!
//! Grid dump, plain text:
//!
//! ```text
//! FLATFLOW-GRID v1 n=2 dims=4,4 spacing=0.25 origin=-0.5,-0.5
//! 0 0 0 0
//! 0 1 1 0
//! ...
//! ```
//!
//! followed by row-major `0`/`1` tokens (sets) or decimal floats (fields),
//! one line per first-axis index in 2D and per `(x1, x2)` pair in 3D.
//! Snapshots use the same header with tag `FLATFLOW-RLE`, extra `k=` and
//! `t=` fields, and alternating run lengths of `0` and `1` cells starting
//! with a (possibly empty) run of `0`. Floats are written in their shortest
//! round-trip form, so every reader reproduces the written values exactly.

use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::Path;

use flatflow_core::axisym::{Profile, ProfileShape};
use flatflow_core::barrier::{InclusionRow, InvariantReport};
use flatflow_core::flow::Trajectory;
use flatflow_core::{Grid, GridSet, ScalarField};

use crate::{Error, Result};

const GRID_TAG: &str = "FLATFLOW-GRID";
const RLE_TAG: &str = "FLATFLOW-RLE";
const VERSION: &str = "v1";
const RUNS_PER_LINE: usize = 32;

fn join<T: ToString>(v: &[T]) -> String {
    v.iter().map(ToString::to_string).collect::<Vec<_>>().join(",")
}

fn header(tag: &str, g: &Grid) -> String {
    let n = g.dim();
    format!(
        "{tag} {VERSION} n={n} dims={} spacing={} origin={}",
        join(&g.cells()[..n]),
        g.spacing(),
        join(&g.origin()[..n])
    )
}

/// Header fields after the tag and version.
struct Header {
    grid: Grid,
    extra: Vec<(String, String)>,
}

fn parse_header(path: &Path, line: &str, tag: &str) -> Result<Header> {
    let bad = |m: &str| Error::format(path, m.to_string());
    let mut words = line.split_whitespace();
    if words.next() != Some(tag) {
        return Err(bad(&format!("expected `{tag}` header")));
    }
    if words.next() != Some(VERSION) {
        return Err(bad("unsupported format version"));
    }
    let (mut n, mut dims, mut spacing, mut origin) = (None, None, None, None);
    let mut extra = Vec::new();
    for w in words {
        let (k, v) = w.split_once('=').ok_or_else(|| bad("malformed header field"))?;
        let floats = |v: &str| v.split(',').map(str::parse::<f64>).collect::<std::result::Result<Vec<_>, _>>();
        match k {
            "n" => n = Some(v.parse::<usize>().map_err(|_| bad("bad n"))?),
            "dims" => {
                dims = Some(
                    v.split(',').map(str::parse::<usize>).collect::<std::result::Result<Vec<_>, _>>().map_err(|_| bad("bad dims"))?,
                )
            }
            "spacing" => spacing = Some(v.parse::<f64>().map_err(|_| bad("bad spacing"))?),
            "origin" => origin = Some(floats(v).map_err(|_| bad("bad origin"))?),
            _ => extra.push((k.to_string(), v.to_string())),
        }
    }
    let n = n.ok_or_else(|| bad("missing n"))?;
    let dims = dims.ok_or_else(|| bad("missing dims"))?;
    let spacing = spacing.ok_or_else(|| bad("missing spacing"))?;
    let origin = origin.ok_or_else(|| bad("missing origin"))?;
    let grid = Grid::new(n, &dims, spacing, &origin).map_err(|e| bad(&e.to_string()))?;
    Ok(Header { grid, extra })
}

fn row_len(g: &Grid) -> usize {
    g.shape()[g.dim() - 1]
}

/// Grid dump of a set.
pub fn grid_set_to_text(set: &GridSet) -> String {
    let g = set.grid();
    let mut out = header(GRID_TAG, g);
    out.push('\n');
    let row = row_len(g);
    for i in 0..g.len() {
        out.push(if set.contains(i) { '1' } else { '0' });
        out.push(if (i + 1) % row == 0 { '\n' } else { ' ' });
    }
    out
}

/// Grid dump of a field.
pub fn scalar_field_to_text(field: &ScalarField) -> String {
    let g = field.grid();
    let mut out = header(GRID_TAG, g);
    out.push('\n');
    let row = row_len(g);
    for (i, v) in field.values().iter().enumerate() {
        let _ = write!(out, "{v}");
        out.push(if (i + 1) % row == 0 { '\n' } else { ' ' });
    }
    out
}

fn body_tokens<'a>(path: &Path, text: &'a str, tag: &str) -> Result<(Header, std::str::SplitWhitespace<'a>)> {
    let (first, rest) = text.split_once('\n').unwrap_or((text, ""));
    Ok((parse_header(path, first, tag)?, rest.split_whitespace()))
}

/// Parses a set dump; `path` only labels errors.
pub fn grid_set_from_text(path: &Path, text: &str) -> Result<GridSet> {
    let (h, tokens) = body_tokens(path, text, GRID_TAG)?;
    let mut flags = Vec::with_capacity(h.grid.len());
    for t in tokens {
        flags.push(match t {
            "0" => false,
            "1" => true,
            _ => return Err(Error::format(path, format!("expected 0 or 1, found `{t}`"))),
        });
    }
    if flags.len() != h.grid.len() {
        return Err(Error::format(path, format!("expected {} cells, found {}", h.grid.len(), flags.len())));
    }
    Ok(GridSet::from_flags(&h.grid, &flags)?)
}

/// Parses a field dump.
pub fn scalar_field_from_text(path: &Path, text: &str) -> Result<ScalarField> {
    let (h, tokens) = body_tokens(path, text, GRID_TAG)?;
    let values = tokens
        .map(|t| t.parse::<f64>().map_err(|_| Error::format(path, format!("bad value `{t}`"))))
        .collect::<Result<Vec<_>>>()?;
    if values.len() != h.grid.len() {
        return Err(Error::format(path, format!("expected {} values, found {}", h.grid.len(), values.len())));
    }
    Ok(ScalarField::from_values(&h.grid, values)?)
}

/// Alternating run lengths of `0` and `1` cells, starting with `0`.
pub fn encode_runs(set: &GridSet) -> Vec<usize> {
    let mut runs = Vec::new();
    let mut state = false;
    let mut len = 0;
    for i in 0..set.grid().len() {
        if set.contains(i) != state {
            runs.push(len);
            state = !state;
            len = 0;
        }
        len += 1;
    }
    runs.push(len);
    runs
}

/// Inverse of [`encode_runs`]; `None` when the runs do not cover the grid.
pub fn decode_runs(grid: &Grid, runs: &[usize]) -> Option<GridSet> {
    if runs.iter().sum::<usize>() != grid.len() {
        return None;
    }
    let mut set = GridSet::empty(grid);
    let mut at = 0;
    for (j, &len) in runs.iter().enumerate() {
        if j % 2 == 1 {
            for i in at..at + len {
                set.insert(i);
            }
        }
        at += len;
    }
    Some(set)
}

/// A stored set with its step index and time.
#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotFile {
    pub k: usize,
    pub t: f64,
    pub set: GridSet,
}

pub fn snapshot_to_text(k: usize, t: f64, set: &GridSet) -> String {
    let mut out = header(RLE_TAG, set.grid());
    let _ = writeln!(out, " k={k} t={t}");
    for chunk in encode_runs(set).chunks(RUNS_PER_LINE) {
        out.push_str(&join(chunk).replace(',', " "));
        out.push('\n');
    }
    out
}

pub fn snapshot_from_text(path: &Path, text: &str) -> Result<SnapshotFile> {
    let (h, tokens) = body_tokens(path, text, RLE_TAG)?;
    let field = |key: &str| {
        h.extra
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.clone())
            .ok_or_else(|| Error::format(path, format!("missing {key}")))
    };
    let k = field("k")?.parse::<usize>().map_err(|_| Error::format(path, "bad k"))?;
    let t = field("t")?.parse::<f64>().map_err(|_| Error::format(path, "bad t"))?;
    let runs = tokens
        .map(|w| w.parse::<usize>().map_err(|_| Error::format(path, format!("bad run `{w}`"))))
        .collect::<Result<Vec<_>>>()?;
    let set = decode_runs(&h.grid, &runs).ok_or_else(|| Error::format(path, "runs do not cover the grid"))?;
    Ok(SnapshotFile { k, t, set })
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub fn write_snapshot(path: &Path, k: usize, t: f64, set: &GridSet) -> Result<()> {
    write_text(path, &snapshot_to_text(k, t, set))
}

pub fn read_snapshot(path: &Path) -> Result<SnapshotFile> {
    snapshot_from_text(path, &read_text(path)?)
}

fn csv_writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().has_headers(false).from_writer(w)
}

/// Profile CSV: header comments with the closed-form tag, then `x1,g`.
pub fn write_profile_csv<W: Write>(mut w: W, profile: &Profile) -> Result<()> {
    let tag = match profile.shape() {
        ProfileShape::Sampled => "# shape=sampled".to_string(),
        ProfileShape::Constant { radius } => format!("# shape=constant radius={radius}"),
        ProfileShape::CircleArc { radius, center } => format!("# shape=circle_arc radius={radius} center={center}"),
        ProfileShape::Parabola { curvature, half_width, rim, center } => {
            format!("# shape=parabola curvature={curvature} half_width={half_width} rim={rim} center={center}")
        }
    };
    let (a, b) = profile.domain();
    writeln!(w, "{tag}\n# domain={a},{b} samples={}", profile.samples().len()).map_err(|e| Error::io("<profile>", e))?;
    let mut out = csv_writer(w);
    out.write_record(["x1", "g"])?;
    for (j, g) in profile.samples().iter().enumerate() {
        out.write_record([profile.abscissa(j).to_string(), g.to_string()])?;
    }
    out.flush().map_err(|e| Error::io("<profile>", e))?;
    Ok(())
}

/// Per-step quantities measured on the produced set.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Derived {
    /// Radius of the ball with the same volume.
    pub radius: f64,
    /// Neck radius at `x1 = 0`, when the experiment has a neck.
    pub neck: Option<f64>,
}

pub const TRAJECTORY_COLUMNS: [&str; 14] = [
    "step_index",
    "t",
    "lambda",
    "energy_before",
    "energy_after",
    "pd_gap",
    "iterations",
    "band_width_observed",
    "volume",
    "perimeter",
    "energy",
    "reference_energy",
    "radius",
    "neck_radius",
];

/// One row per step; `derived[k - 1]` belongs to step `k`.
pub fn write_trajectory_csv<W: Write>(w: W, traj: &Trajectory, derived: &[Derived]) -> Result<()> {
    let mut out = csv_writer(w);
    out.write_record(TRAJECTORY_COLUMNS)?;
    for (s, d) in traj.steps.iter().zip(derived.iter().chain(std::iter::repeat(&Derived::default()))) {
        let r = &s.report;
        out.write_record([
            s.k.to_string(),
            s.t.to_string(),
            s.lambda.to_string(),
            r.energy_before.to_string(),
            r.energy_after.to_string(),
            r.pd_gap.to_string(),
            r.iterations.to_string(),
            r.band_width_observed.to_string(),
            s.volume.to_string(),
            s.perimeter.to_string(),
            s.energy.to_string(),
            s.reference_energy.to_string(),
            d.radius.to_string(),
            d.neck.map(|v| v.to_string()).unwrap_or_default(),
        ])?;
    }
    out.flush().map_err(|e| Error::io("<trajectory>", e))?;
    Ok(())
}

pub const BARRIER_COLUMNS: [&str; 9] =
    ["i", "t", "r_i", "l_i", "d_i", "a_i", "head_ok", "inclusion_gap_cells", "curvature_margin"];

/// One row per barrier index; `rows` may miss indices that had no snapshot.
pub fn write_barrier_csv<W: Write>(w: W, h: f64, invariants: &[InvariantReport], rows: &[InclusionRow]) -> Result<()> {
    let mut out = csv_writer(w);
    out.write_record(BARRIER_COLUMNS)?;
    for rep in invariants {
        let s = &rep.step;
        let gap = rows.iter().find(|r| r.index == s.index).map(|r| r.gap_cells.to_string()).unwrap_or_default();
        out.write_record([
            s.index.to_string(),
            (s.index as f64 * h).to_string(),
            s.r_i.to_string(),
            s.l_i.to_string(),
            s.d_i.to_string(),
            s.a_i.to_string(),
            rep.head_containment.to_string(),
            gap,
            rep.certificate.margin().to_string(),
        ])?;
    }
    out.flush().map_err(|e| Error::io("<barrier>", e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use flatflow_core::shapes::closed_ball;

    fn sample() -> GridSet {
        let g = Grid::new(2, &[13, 9], 0.1, &[-0.65, -0.45]).unwrap();
        closed_ball(&g, [0.05, 0.0, 0.0], 0.3)
    }

    #[test]
    fn grid_dump_round_trip_is_exact() {
        let set = sample();
        let text = grid_set_to_text(&set);
        assert!(text.starts_with("FLATFLOW-GRID v1 n=2 dims=13,9 spacing=0.1 origin=-0.65,-0.45\n"));
        let back = grid_set_from_text(Path::new("x"), &text).unwrap();
        assert_eq!(back, set);
        assert_eq!(grid_set_to_text(&back), text);
    }

    #[test]
    fn field_dump_round_trip_is_exact() {
        let g = Grid::new(3, &[4, 5, 6], 1.0 / 3.0, &[0.1, 0.2, 0.3]).unwrap();
        let f = ScalarField::from_fn(&g, |p| p[0].sin() / 7.0 + p[1] * p[2]);
        let back = scalar_field_from_text(Path::new("x"), &scalar_field_to_text(&f)).unwrap();
        assert_eq!(back, f);
    }

    #[test]
    fn malformed_dumps() {
        let p = Path::new("x");
        let text = grid_set_to_text(&sample());
        assert!(grid_set_from_text(p, &text.replace("FLATFLOW-GRID", "OTHER")).is_err());
        assert!(grid_set_from_text(p, &text.replace("v1", "v2")).is_err());
        assert!(grid_set_from_text(p, &text[..text.len() - 4]).is_err());
        assert!(grid_set_from_text(p, &text.replacen(" 0 ", " 2 ", 1)).is_err());
    }

    #[test]
    fn runs_round_trip() {
        let set = sample();
        let runs = encode_runs(&set);
        assert_eq!(runs.iter().sum::<usize>(), set.grid().len());
        assert_eq!(decode_runs(set.grid(), &runs).unwrap(), set);
        let full = GridSet::full(set.grid());
        assert_eq!(encode_runs(&full), vec![0, full.grid().len()]);
        assert!(decode_runs(set.grid(), &[3, 4]).is_none());
        let text = snapshot_to_text(7, 0.014, &set);
        let back = snapshot_from_text(Path::new("x"), &text).unwrap();
        assert_eq!((back.k, back.t), (7, 0.014));
        assert_eq!(back.set, set);
    }

    #[test]
    fn profile_csv_layout() {
        let p = Profile::circle_arc(0.25, 0.1).unwrap();
        let mut buf = Vec::new();
        write_profile_csv(&mut buf, &p).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "# shape=circle_arc radius=0.25 center=0.1");
        assert_eq!(lines[2], "x1,g");
        assert_eq!(lines.len(), 3 + p.samples().len());
    }
}
