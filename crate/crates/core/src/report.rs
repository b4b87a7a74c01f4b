//! Qualitative heatmaps: one pixel per (setup, unit test) pair.
//!
//! Columns are unit tests, grouped by (dimension, non-stationarity, noise,
//! differentiability) and sorted by reference learning rate within a group.
//! Rows are setups, grouped by family and sorted by their median normalized
//! loss on a reference quadratic test with additive noise.

use std::fmt::Write as _;
use std::path::Path;

use crate::dynamics::NonstationaryKind;
use crate::error::{Error, Result};
use crate::harness::classify::ColorClass;
use crate::harness::db::ExperimentDB;
use crate::harness::reference::median;
use crate::harness::suite::{GroupKey, UnitTest};
use crate::optimizers::Family;
use crate::stochastic::NoiseKind;

/// Colour of pairs without a classification.
pub const MISSING_RGB: [u8; 3] = [0xbb, 0xbb, 0xbb];

#[derive(Clone, Debug, PartialEq)]
pub struct Column {
    pub test_id: String,
    pub label: String,
    pub group: GroupKey,
    pub eta_best: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Row {
    pub setup_id: String,
    pub family: Family,
    pub label: String,
    /// Median normalized loss on the reference test (unstable runs count as -∞).
    pub score: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Span {
    pub label: String,
    pub start: usize,
    pub len: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct HeatmapLayout {
    pub columns: Vec<Column>,
    pub rows: Vec<Row>,
    pub column_groups: Vec<Span>,
    pub row_groups: Vec<Span>,
    /// Row-major, `rows.len() × columns.len()`.
    pub cells: Vec<Option<ColorClass>>,
    pub reference_test: Option<String>,
}

impl HeatmapLayout {
    pub fn width(&self) -> usize {
        self.columns.len()
    }

    pub fn height(&self) -> usize {
        self.rows.len()
    }

    pub fn cell(&self, row: usize, col: usize) -> Option<ColorClass> {
        self.cells[row * self.width() + col]
    }
}

/// The quadratic, additive-Gaussian, unit-scale, stationary 1-d test with the lowest σ.
pub fn reference_test(db: &ExperimentDB) -> Option<&UnitTest> {
    db.tests
        .values()
        .filter(|t| {
            t.dim() == 1
                && t.fun_names() == ["quad"]
                && t.scales() == [1.0]
                && t.noise().kind == NoiseKind::AdditiveGauss
                && t.nonstationarity().kind == NonstationaryKind::None
        })
        .min_by(|a, b| a.noise().scale.total_cmp(&b.noise().scale).then(a.id().cmp(b.id())))
}

/// Median normalized loss of a setup on a test, unstable runs as -∞.
pub fn median_score(db: &ExperimentDB, test_id: &str, setup_id: &str) -> Option<f64> {
    let scores: Vec<f64> = db
        .records_for(test_id, setup_id)
        .iter()
        .filter_map(|r| {
            if r.outcome.unstable {
                Some(f64::NEG_INFINITY)
            } else {
                r.normalized
            }
        })
        .collect();
    (!scores.is_empty()).then(|| median(&scores))
}

fn spans<T: PartialEq>(keys: &[T], label: impl Fn(&T) -> String) -> Vec<Span> {
    let mut out: Vec<Span> = Vec::new();
    for (i, k) in keys.iter().enumerate() {
        if i > 0 && keys[i - 1] == *k {
            out.last_mut().unwrap().len += 1;
        } else {
            out.push(Span {
                label: label(k),
                start: i,
                len: 1,
            });
        }
    }
    out
}

pub fn layout(db: &ExperimentDB) -> Result<HeatmapLayout> {
    if db.tests.is_empty() || db.setups.is_empty() {
        return Err(Error::Config("database has no unit tests or no setups to plot".into()));
    }
    let mut columns: Vec<Column> = db
        .tests
        .values()
        .map(|t| Column {
            test_id: t.id().to_string(),
            label: t.label(),
            group: t.group(),
            eta_best: db.references.get(t.id()).map(|r| r.eta_best),
        })
        .collect();
    columns.sort_by(|a, b| {
        a.group
            .cmp(&b.group)
            .then_with(|| match (a.eta_best, b.eta_best) {
                (Some(x), Some(y)) => x.total_cmp(&y),
                (Some(_), None) => std::cmp::Ordering::Less,
                (None, Some(_)) => std::cmp::Ordering::Greater,
                (None, None) => std::cmp::Ordering::Equal,
            })
            .then_with(|| a.test_id.cmp(&b.test_id))
    });

    let reference = reference_test(db).map(|t| t.id().to_string());
    let mut rows: Vec<Row> = db
        .setups
        .iter()
        .map(|(id, s)| Row {
            setup_id: id.clone(),
            family: s.family,
            label: s.label(),
            score: reference.as_deref().and_then(|r| median_score(db, r, id)),
        })
        .collect();
    rows.sort_by(|a, b| {
        a.family
            .cmp(&b.family)
            .then_with(|| match (a.score, b.score) {
                (Some(x), Some(y)) => y.total_cmp(&x),
                (Some(_), None) => std::cmp::Ordering::Less,
                (None, Some(_)) => std::cmp::Ordering::Greater,
                (None, None) => std::cmp::Ordering::Equal,
            })
            .then_with(|| a.label.cmp(&b.label))
            .then_with(|| a.setup_id.cmp(&b.setup_id))
    });

    let mut cells = Vec::with_capacity(rows.len() * columns.len());
    for r in &rows {
        for c in &columns {
            cells.push(db.classes.get(&(c.test_id.clone(), r.setup_id.clone())).copied());
        }
    }
    let group_keys: Vec<GroupKey> = columns.iter().map(|c| c.group.clone()).collect();
    let families: Vec<Family> = rows.iter().map(|r| r.family).collect();
    Ok(HeatmapLayout {
        column_groups: spans(&group_keys, GroupKey::label),
        row_groups: spans(&families, |f| f.tag().to_string()),
        columns,
        rows,
        cells,
        reference_test: reference,
    })
}

fn rgb(cell: Option<ColorClass>) -> [u8; 3] {
    cell.map_or(MISSING_RGB, ColorClass::rgb)
}

/// Binary P6, one pixel per cell.
pub fn to_ppm(layout: &HeatmapLayout) -> Vec<u8> {
    let mut out = format!("P6\n{} {}\n255\n", layout.width(), layout.height()).into_bytes();
    for &cell in &layout.cells {
        out.extend_from_slice(&rgb(cell));
    }
    out
}

fn hex(c: [u8; 3]) -> String {
    format!("#{:02x}{:02x}{:02x}", c[0], c[1], c[2])
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

const CELL: usize = 6;
const LEFT: usize = 90;
const TOP: usize = 150;

/// Legend entries: the six classes followed by the missing colour.
pub fn legend() -> Vec<(&'static str, [u8; 3])> {
    ColorClass::ALL
        .iter()
        .map(|c| (c.tag(), c.rgb()))
        .chain(std::iter::once(("missing", MISSING_RGB)))
        .collect()
}

pub fn to_svg(layout: &HeatmapLayout) -> String {
    let (w, h) = (layout.width() * CELL, layout.height() * CELL);
    let legend = legend();
    let total_w = LEFT + w + 20;
    let total_h = TOP + h + 30 + 18 * legend.len();
    let mut s = String::new();
    let _ = writeln!(s, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{total_w}" height="{total_h}" font-family="sans-serif" font-size="10">"#
    );
    let _ = writeln!(s, r#"<rect width="{total_w}" height="{total_h}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<g id="cells" transform="translate({LEFT},{TOP})" shape-rendering="crispEdges">"#
    );
    for (r, row) in layout.rows.iter().enumerate() {
        for (c, col) in layout.columns.iter().enumerate() {
            let cell = layout.cell(r, c);
            let _ = writeln!(
                s,
                r#"<rect x="{}" y="{}" width="{CELL}" height="{CELL}" fill="{}"><title>{} / {}: {}</title></rect>"#,
                c * CELL,
                r * CELL,
                hex(rgb(cell)),
                escape(&row.label),
                escape(&col.label),
                cell.map_or("missing", ColorClass::tag)
            );
        }
    }
    let _ = writeln!(s, "</g>");
    let _ = writeln!(s, r#"<g id="boundaries" stroke="black" stroke-width="1">"#);
    for g in layout.column_groups.iter().skip(1) {
        let x = LEFT + g.start * CELL;
        let _ = writeln!(s, r#"<line x1="{x}" y1="{TOP}" x2="{x}" y2="{}"/>"#, TOP + h);
    }
    for g in layout.row_groups.iter().skip(1) {
        let y = TOP + g.start * CELL;
        let _ = writeln!(s, r#"<line x1="{LEFT}" y1="{y}" x2="{}" y2="{y}"/>"#, LEFT + w);
    }
    let _ = writeln!(s, "</g>");
    let _ = writeln!(s, r#"<g id="column-groups">"#);
    for g in &layout.column_groups {
        let x = LEFT + g.start * CELL + g.len * CELL / 2;
        let _ = writeln!(
            s,
            r#"<text transform="translate({x},{}) rotate(-60)">{}</text>"#,
            TOP - 4,
            escape(&g.label)
        );
    }
    let _ = writeln!(s, "</g>");
    let _ = writeln!(s, r#"<g id="row-groups" text-anchor="end">"#);
    for g in &layout.row_groups {
        let y = TOP + g.start * CELL + g.len * CELL / 2 + 4;
        let _ = writeln!(s, r#"<text x="{}" y="{y}">{}</text>"#, LEFT - 4, escape(&g.label));
    }
    let _ = writeln!(s, "</g>");
    let _ = writeln!(s, r#"<g id="legend">"#);
    for (i, (name, color)) in legend.iter().enumerate() {
        let y = TOP + h + 20 + 18 * i;
        let _ = writeln!(
            s,
            r#"<rect x="{LEFT}" y="{y}" width="12" height="12" fill="{}"/><text x="{}" y="{}">{name}</text>"#,
            hex(*color),
            LEFT + 18,
            y + 10
        );
    }
    let _ = writeln!(s, "</g>");
    s.push_str("</svg>\n");
    s
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ImageFormat {
    Svg,
    Ppm,
}

impl ImageFormat {
    pub fn from_path(path: &Path) -> Result<Self> {
        match path
            .extension()
            .and_then(|e| e.to_str())
            .map(str::to_ascii_lowercase)
            .as_deref()
        {
            Some("svg") => Ok(ImageFormat::Svg),
            Some("ppm") => Ok(ImageFormat::Ppm),
            _ => Err(Error::Config(format!(
                "cannot infer image format from {}; use .svg or .ppm",
                path.display()
            ))),
        }
    }
}

pub fn render(layout: &HeatmapLayout, path: &Path, format: ImageFormat) -> Result<()> {
    let bytes = match format {
        ImageFormat::Ppm => to_ppm(layout),
        ImageFormat::Svg => to_svg(layout).into_bytes(),
    };
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}
