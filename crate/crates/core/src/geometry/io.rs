//! Plain-text Delone set files.
//!
//! ```text
//! # dim=2
//! # R=3
//! # window=0:9,-4:4
//! 0 -4
//! 0 1
//! ```

use std::fmt::Write as _;

use super::delone::DeloneSet;
use super::lattice::{LatticePoint, Window};
use crate::{Error, Result};

/// Points are written in lexicographic order.
pub fn write_delone(set: &DeloneSet) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# dim={}", set.dim());
    let _ = writeln!(out, "# R={}", set.declared_r());
    let _ = writeln!(out, "# window={}", set.window());
    for p in set.points() {
        let line: Vec<String> = p.coords().iter().map(|c| c.to_string()).collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    out
}

pub fn read_delone(text: &str) -> Result<DeloneSet> {
    let mut dim: Option<usize> = None;
    let mut declared_r: Option<u64> = None;
    let mut window: Option<Window> = None;
    let mut points = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let err = |message: String| Error::Parse { line: line_no, message };
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(header) = line.strip_prefix('#') {
            let Some((key, value)) = header.trim().split_once('=') else {
                continue;
            };
            let value = value.trim();
            match key.trim() {
                "dim" => dim = Some(value.parse().map_err(|e| err(format!("bad dim: {e}")))?),
                "R" => declared_r = Some(value.parse().map_err(|e| err(format!("bad R: {e}")))?),
                "window" => window = Some(parse_window(value).map_err(err)?),
                other => return Err(err(format!("unknown header key `{other}`"))),
            }
            continue;
        }
        let coords = line
            .split_whitespace()
            .map(|t| t.parse::<i64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| err(format!("bad coordinate: {e}")))?;
        let d = dim.ok_or_else(|| err("point before `# dim=` header".into()))?;
        if coords.len() != d {
            return Err(err(format!("expected {d} coordinates, got {}", coords.len())));
        }
        points.push(LatticePoint::new(coords));
    }
    let dim = dim.ok_or_else(|| Error::Parse { line: 0, message: "missing `# dim=` header".into() })?;
    let window = window.ok_or_else(|| Error::Parse { line: 0, message: "missing `# window=` header".into() })?;
    if window.dim() != dim {
        return Err(Error::DimensionMismatch { expected: dim, got: window.dim() });
    }
    let declared_r = declared_r.ok_or_else(|| Error::Parse { line: 0, message: "missing `# R=` header".into() })?;
    DeloneSet::new(window, points, declared_r)
}

impl std::str::FromStr for Window {
    type Err = Error;

    /// `lo_1:hi_1,…,lo_d:hi_d`, the inverse of `Display`.
    fn from_str(s: &str) -> Result<Self> {
        parse_window(s).map_err(Error::InvalidArgument)
    }
}

/// `lo_1:hi_1,…,lo_d:hi_d`
pub(crate) fn parse_window(value: &str) -> std::result::Result<Window, String> {
    let mut lo = Vec::new();
    let mut hi = Vec::new();
    for part in value.split(',') {
        let (l, h) = part.trim().split_once(':').ok_or_else(|| format!("bad window axis `{part}`"))?;
        lo.push(l.trim().parse::<i64>().map_err(|e| e.to_string())?);
        hi.push(h.trim().parse::<i64>().map_err(|e| e.to_string())?);
    }
    Window::new(LatticePoint::new(lo), LatticePoint::new(hi)).map_err(|e| e.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::generate_random_cell;

    #[test]
    fn text_format_layout() {
        let w = Window::cube_range(1, 0, 4).unwrap();
        let d = DeloneSet::new(w, vec![vec![3].into(), vec![0].into()], 3).unwrap();
        assert_eq!(write_delone(&d), "# dim=1\n# R=3\n# window=0:4\n0\n3\n");
    }

    #[test]
    fn window_from_str_round_trip() {
        let w: Window = "-3:5, 0:7".parse().unwrap();
        assert_eq!(w.to_string().parse::<Window>().unwrap(), w);
        assert!("3:1".parse::<Window>().is_err());
        assert!("0-4".parse::<Window>().is_err());
    }

    #[test]
    fn round_trip_2d() {
        let w = Window::new(vec![-3, 0].into(), vec![5, 7].into()).unwrap();
        let d = generate_random_cell(2, 2, &w, 11).unwrap();
        let back = read_delone(&write_delone(&d)).unwrap();
        assert_eq!(back, d);
    }

    #[test]
    fn reader_rejects_duplicates_and_outside_points() {
        let dup = "# dim=1\n# R=1\n# window=0:4\n1\n1\n";
        assert!(read_delone(dup).is_err());
        let outside = "# dim=1\n# R=1\n# window=0:4\n7\n";
        assert!(read_delone(outside).is_err());
        let wrong_arity = "# dim=2\n# R=1\n# window=0:4,0:4\n1\n";
        assert!(matches!(read_delone(wrong_arity), Err(Error::Parse { line: 4, .. })));
        let missing = "# R=1\n# window=0:4\n";
        assert!(read_delone(missing).is_err());
    }
}
