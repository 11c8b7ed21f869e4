//! CSV and PGM writers. Text format errors report 1-based line numbers as
//! their offset. Floats are printed in Rust's shortest round-trip
//! form, so every file is a deterministic function of its input values.

use std::fmt::Write as _;

use crate::bev::BevGrid;
use crate::edge::EdgeMap;
use crate::error::{Error, Result};
use crate::gradcheck::GradReport;
use crate::metrics::MetricReport;

pub const BEV_HEADER: &str = "x,y,channel,value";
pub const REPORT_HEADER: &str = "metric,class,threshold,value";

/// Sparse BEV dump: one row per nonzero value, x-major then channel.
pub fn bev_csv(bev: &BevGrid) -> String {
    let (dx, dy) = bev.size();
    let mut out = String::from(BEV_HEADER);
    out.push('\n');
    for x in 0..dx {
        for y in 0..dy {
            for (c, v) in bev.cell(x, y).iter().enumerate() {
                if *v != 0.0 {
                    writeln!(out, "{x},{y},{c},{v}").expect("write to string");
                }
            }
        }
    }
    out
}

/// A parsed BEV CSV row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BevEntry {
    pub x: usize,
    pub y: usize,
    pub channel: usize,
    pub value: f64,
}

pub fn parse_bev_csv(text: &str) -> Result<Vec<BevEntry>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h == BEV_HEADER => {}
        _ => return Err(Error::format(1, format!("expected header '{BEV_HEADER}'"))),
    }
    lines
        .map(|(n, line)| {
            let bad = || Error::format(n + 1, format!("malformed BEV row '{line}'"));
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 4 {
                return Err(bad());
            }
            Ok(BevEntry {
                x: f[0].parse().map_err(|_| bad())?,
                y: f[1].parse().map_err(|_| bad())?,
                channel: f[2].parse().map_err(|_| bad())?,
                value: f[3].parse().map_err(|_| bad())?,
            })
        })
        .collect()
}

/// Dense `row,col,value` listing of an edge map.
pub fn edge_csv(edges: &EdgeMap) -> String {
    let mut out = String::from("row,col,value\n");
    for r in 0..edges.height() {
        for c in 0..edges.width() {
            writeln!(out, "{r},{c},{}", edges.get(r, c)).expect("write to string");
        }
    }
    out
}

/// Binary 8-bit PGM (P5), values scaled to 0..=255.
pub fn edge_pgm(edges: &EdgeMap) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", edges.width(), edges.height()).into_bytes();
    out.extend(edges.values().iter().map(|v| (v * 255.0).round() as u8));
    out
}

pub fn grad_csv(reports: &[GradReport]) -> String {
    let mut out = String::from("loss,points,max_rel_err,status\n");
    for r in reports {
        let status = if r.passed() { "pass" } else { "fail" };
        writeln!(out, "{},{},{:e},{status}", r.name, r.points, r.max_rel_err).expect("write to string");
    }
    out
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "nan".to_string(), |v| v.to_string())
}

/// Metric report rows in fixed order: per-class voxel IoU, mIoU, per-class
/// RayIoU by threshold, RayIoU by threshold, RayIoU mean, then SQ/RQ/PQ by
/// threshold and the RayPQ mean. Undefined per-class entries are omitted;
/// undefined aggregates print as `nan`.
pub fn report_csv(report: &MetricReport) -> String {
    let mut out = String::from(REPORT_HEADER);
    out.push('\n');
    let mut row = |metric: &str, class: &str, threshold: &str, value: String| {
        writeln!(out, "{metric},{class},{threshold},{value}").expect("write to string");
    };
    if let Some(iou) = &report.iou {
        for (c, v) in iou.per_class.iter().enumerate() {
            if let Some(v) = v {
                row("iou", &c.to_string(), "", v.to_string());
            }
        }
        row("miou", "all", "", opt(iou.miou));
    }
    if let Some(r) = &report.rayiou {
        for c in 0..report.class_count {
            for at in &r.at {
                if let Some(v) = at.per_class[c] {
                    row("rayiou", &c.to_string(), &at.threshold.to_string(), v.to_string());
                }
            }
        }
        for at in &r.at {
            row("rayiou", "all", &at.threshold.to_string(), opt(at.mean));
        }
        row("rayiou", "all", "mean", opt(r.mean));
    }
    if let Some(p) = &report.raypq {
        for at in &p.at {
            let d = at.threshold.to_string();
            row("raypq_sq", "all", &d, opt(at.sq));
            row("raypq_rq", "all", &d, opt(at.rq));
            row("raypq", "all", &d, opt(at.pq));
        }
        row("raypq", "all", "mean", opt(p.mean));
    }
    out
}

/// Parse report rows back into `(metric, class, threshold, value)`.
pub fn parse_report_csv(text: &str) -> Result<Vec<(String, String, String, f64)>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h == REPORT_HEADER => {}
        _ => return Err(Error::format(1, format!("expected header '{REPORT_HEADER}'"))),
    }
    lines
        .map(|(n, line)| {
            let f: Vec<&str> = line.split(',').collect();
            let value = f.get(3).and_then(|v| v.parse::<f64>().ok());
            match (f.len(), value) {
                (4, Some(v)) => Ok((f[0].to_string(), f[1].to_string(), f[2].to_string(), v)),
                _ => Err(Error::format(n + 1, format!("malformed report row '{line}'"))),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::GridGeometry;

    #[test]
    fn bev_csv_round_trip() {
        let g = GridGeometry::from_origin([0.0; 3], [1.0; 3], [2, 2, 1]).unwrap();
        let bev = BevGrid::from_data(g, 2, vec![0.0, 0.1, 0.0, 0.0, 2.5, 0.0, 0.0, -1.0]).unwrap();
        let text = bev_csv(&bev);
        assert_eq!(text, "x,y,channel,value\n0,0,1,0.1\n1,0,0,2.5\n1,1,1,-1\n");
        let rows = parse_bev_csv(&text).unwrap();
        assert_eq!(rows.len(), 3);
        assert_eq!(rows[0], BevEntry { x: 0, y: 0, channel: 1, value: 0.1 });
        assert!(parse_bev_csv("x,y\n").is_err());
        assert!(matches!(parse_bev_csv("x,y,channel,value\n1,2\n"), Err(Error::Format { offset: 2, .. })));
    }

    #[test]
    fn pgm_layout() {
        let e = EdgeMap::new(3, 2, vec![0.0, 1.0, 0.0, 1.0, 1.0, 0.0]).unwrap();
        let pgm = edge_pgm(&e);
        assert!(pgm.starts_with(b"P5\n3 2\n255\n"));
        assert_eq!(&pgm[pgm.len() - 6..], &[0, 255, 0, 255, 255, 0]);
        assert!(edge_csv(&e).starts_with("row,col,value\n0,0,0\n0,1,1\n"));
    }
}
