//! One-dimensional prototype functions.
//!
//! A prototype is a left-to-right concatenation of shape segments. Each
//! segment receives its left boundary condition (value and slope) from the
//! segment before it, so continuity of value and slope at every junction
//! holds by construction. The only slope jumps are the ones a kind asks for:
//! the interior kink of `abs`, `rect-bend` and `laplace-bowl`, and the
//! zero-width `cliff-marker`, which multiplies the outgoing slope by ten.
//!
//! Every prototype is offset so that its infimum over the domain is zero, and
//! a single `scale` multiplies all values and slopes. Outside the domain the
//! function continues linearly with the boundary slope.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const PROTOTYPE_FORMAT_VERSION: u32 = 1;

/// Slope multiplier applied across a cliff junction.
pub const CLIFF_FACTOR: f64 = 10.0;

/// Fraction of the first segment's width between the domain start and θ₀.
pub const START_FRACTION: f64 = 0.1;

pub const DEFAULT_WIDTH: f64 = 1.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ShapeKind {
    Line,
    Quad,
    Abs,
    RectBend,
    ExpUp,
    ExpDown,
    GaussBowl,
    LaplaceBowl,
    ConvexCurve,
    ConcaveCurve,
    CliffMarker,
}

/// Per-kind defaults: the shape parameter, and the slope a segment of this
/// kind enters with when it is the first segment of a prototype (its
/// left value is always 0 before offsetting).
///
/// | kind          | shape_param meaning                       | default | entry slope |
/// |---------------|-------------------------------------------|---------|-------------|
/// | line          | unused                                    | 0       | -1          |
/// | quad          | curvature (signed, non-zero)              | 1       | -0.5        |
/// | abs           | right slope / -left slope at the vertex   | 1       | -1          |
/// | rect-bend     | right slope / left slope at the kink      | 0       | -1          |
/// | exp-up        | growth rate of the slope                  | 2       | -0.1        |
/// | exp-down      | decay rate of the slope                   | 3       | -1          |
/// | gauss-bowl    | standard deviation / width                | 1/6     | -0.2        |
/// | laplace-bowl  | decay length / width                      | 1/6     | -0.3        |
/// | convex-curve  | c in f' = s0 + c u²                       | 3       | -1          |
/// | concave-curve | c in f' = s0 - c u²                       | 3       | -0.1        |
/// | cliff-marker  | unused                                    | 0       | n/a         |
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KindDefaults {
    pub shape_param: f64,
    pub entry_slope: f64,
}

impl ShapeKind {
    pub const ALL: [ShapeKind; 11] = [
        ShapeKind::Line,
        ShapeKind::Quad,
        ShapeKind::Abs,
        ShapeKind::RectBend,
        ShapeKind::ExpUp,
        ShapeKind::ExpDown,
        ShapeKind::GaussBowl,
        ShapeKind::LaplaceBowl,
        ShapeKind::ConvexCurve,
        ShapeKind::ConcaveCurve,
        ShapeKind::CliffMarker,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            ShapeKind::Line => "line",
            ShapeKind::Quad => "quad",
            ShapeKind::Abs => "abs",
            ShapeKind::RectBend => "rect-bend",
            ShapeKind::ExpUp => "exp-up",
            ShapeKind::ExpDown => "exp-down",
            ShapeKind::GaussBowl => "gauss-bowl",
            ShapeKind::LaplaceBowl => "laplace-bowl",
            ShapeKind::ConvexCurve => "convex-curve",
            ShapeKind::ConcaveCurve => "concave-curve",
            ShapeKind::CliffMarker => "cliff-marker",
        }
    }

    /// Kinds whose segments carry a derivative discontinuity.
    pub fn is_kinked(self) -> bool {
        matches!(
            self,
            ShapeKind::Abs | ShapeKind::RectBend | ShapeKind::LaplaceBowl | ShapeKind::CliffMarker
        )
    }

    pub fn defaults(self) -> KindDefaults {
        let (shape_param, entry_slope) = match self {
            ShapeKind::Line => (0.0, -1.0),
            ShapeKind::Quad => (1.0, -0.5),
            ShapeKind::Abs => (1.0, -1.0),
            ShapeKind::RectBend => (0.0, -1.0),
            ShapeKind::ExpUp => (2.0, -0.1),
            ShapeKind::ExpDown => (3.0, -1.0),
            ShapeKind::GaussBowl => (1.0 / 6.0, -0.2),
            ShapeKind::LaplaceBowl => (1.0 / 6.0, -0.3),
            ShapeKind::ConvexCurve => (3.0, -1.0),
            ShapeKind::ConcaveCurve => (3.0, -0.1),
            ShapeKind::CliffMarker => (0.0, 0.0),
        };
        KindDefaults {
            shape_param,
            entry_slope,
        }
    }
}

/// One segment of a built prototype, at unit scale and after offsetting.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ShapeSegment {
    pub kind: ShapeKind,
    pub width: f64,
    pub left_value: f64,
    pub left_slope: f64,
    pub shape_param: f64,
}

/// Closed-form piece in absolute coordinates. `level` is the additive constant
/// and is the only field touched by offsetting, so values near a bowl's
/// minimum are computed without cancellation.
#[derive(Clone, Copy, Debug, PartialEq)]
enum Piece {
    /// level + slope (θ - origin)
    Linear { origin: f64, level: f64, slope: f64 },
    /// level + curvature/2 (θ - vertex)²
    Parabola { vertex: f64, level: f64, curvature: f64 },
    /// level + (left | right) (θ - at); right-hand slope at θ = at
    Kink { at: f64, level: f64, left: f64, right: f64 },
    /// level + slope expm1(rate x) / rate, x = θ - origin
    Exponential {
        origin: f64,
        level: f64,
        slope: f64,
        rate: f64,
    },
    /// level + slope x + coef x³ / 3, x = θ - origin
    Cubic {
        origin: f64,
        level: f64,
        slope: f64,
        coef: f64,
    },
    /// level + depth (1 - exp(-x² / 2 width²)), x = θ - center
    Gauss {
        center: f64,
        level: f64,
        depth: f64,
        width: f64,
    },
    /// level + depth (1 - exp(-|x| / width)), x = θ - center
    Laplace {
        center: f64,
        level: f64,
        depth: f64,
        width: f64,
    },
}

impl Piece {
    fn is_upward_parabola(&self) -> bool {
        matches!(*self, Piece::Parabola { curvature, .. } if curvature > 0.0)
    }

    fn value(&self, theta: f64) -> f64 {
        match *self {
            Piece::Linear { origin, level, slope } => level + slope * (theta - origin),
            Piece::Parabola {
                vertex,
                level,
                curvature,
            } => {
                let x = theta - vertex;
                level + 0.5 * curvature * x * x
            }
            Piece::Kink { at, level, left, right } => {
                let x = theta - at;
                level + if x < 0.0 { left * x } else { right * x }
            }
            Piece::Exponential {
                origin,
                level,
                slope,
                rate,
            } => level + slope * (rate * (theta - origin)).exp_m1() / rate,
            Piece::Cubic {
                origin,
                level,
                slope,
                coef,
            } => {
                let x = theta - origin;
                level + slope * x + coef * x * x * x / 3.0
            }
            Piece::Gauss {
                center,
                level,
                depth,
                width,
            } => {
                let x = theta - center;
                level - depth * (-(x * x) / (2.0 * width * width)).exp_m1()
            }
            Piece::Laplace {
                center,
                level,
                depth,
                width,
            } => {
                let x = theta - center;
                level - depth * (-x.abs() / width).exp_m1()
            }
        }
    }

    fn slope(&self, theta: f64) -> f64 {
        match *self {
            Piece::Linear { slope, .. } => slope,
            Piece::Parabola { vertex, curvature, .. } => curvature * (theta - vertex),
            Piece::Kink { at, left, right, .. } => {
                if theta < at {
                    left
                } else {
                    right
                }
            }
            Piece::Exponential {
                origin, slope, rate, ..
            } => slope * (rate * (theta - origin)).exp(),
            Piece::Cubic {
                origin, slope, coef, ..
            } => {
                let x = theta - origin;
                slope + coef * x * x
            }
            Piece::Gauss {
                center, depth, width, ..
            } => {
                let x = theta - center;
                depth * x / (width * width) * (-(x * x) / (2.0 * width * width)).exp()
            }
            Piece::Laplace {
                center, depth, width, ..
            } => {
                let x = theta - center;
                let sign = if x < 0.0 { -1.0 } else { 1.0 };
                sign * depth / width * (-x.abs() / width).exp()
            }
        }
    }

    fn lower_level(&mut self, delta: f64) {
        match self {
            Piece::Linear { level, .. }
            | Piece::Parabola { level, .. }
            | Piece::Kink { level, .. }
            | Piece::Exponential { level, .. }
            | Piece::Cubic { level, .. }
            | Piece::Gauss { level, .. }
            | Piece::Laplace { level, .. } => *level -= delta,
        }
    }

    /// Interior points where the minimum of the piece may sit, besides the endpoints.
    fn interior_candidates(&self, lo: f64, hi: f64) -> Vec<f64> {
        let point = match *self {
            Piece::Parabola { vertex, .. } => Some(vertex),
            Piece::Kink { at, .. } => Some(at),
            Piece::Gauss { center, .. } | Piece::Laplace { center, .. } => Some(center),
            Piece::Cubic {
                origin, slope, coef, ..
            } => {
                let r = -slope / coef;
                (r > 0.0).then(|| origin + r.sqrt())
            }
            Piece::Linear { .. } | Piece::Exponential { .. } => None,
        };
        point.into_iter().filter(|&p| p > lo && p < hi).collect()
    }

    /// Interior derivative discontinuity, if this piece has one.
    fn kink(&self) -> Option<f64> {
        match *self {
            Piece::Kink { at, left, right, .. } if left != right => Some(at),
            Piece::Laplace { center, .. } => Some(center),
            _ => None,
        }
    }
}

/// Where two adjacent segments meet.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Junction {
    pub position: f64,
    /// A cliff-marker sits at this junction.
    pub cliff: bool,
    /// One of the adjoining segments is of a kinked kind.
    pub kinked_neighbour: bool,
}

/// Left and right limits of value and slope at a junction, at unit scale.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct JunctionLimits {
    pub value_left: f64,
    pub value_right: f64,
    pub slope_left: f64,
    pub slope_right: f64,
}

/// Serialized form of a prototype.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PrototypeDoc {
    pub format_version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub kinds: Vec<ShapeKind>,
    pub shape_params: Vec<f64>,
    pub scale: f64,
    pub domain_start: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub widths: Option<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PrototypeDoc", into = "PrototypeDoc")]
pub struct PrototypeFunction {
    doc: PrototypeDoc,
    segments: Vec<ShapeSegment>,
    pieces: Vec<Piece>,
    /// Residual added to each piece's value to close junction gaps.
    trims: Vec<f64>,
    /// Start of each piece, followed by the domain end.
    bounds: Vec<f64>,
    junctions: Vec<Junction>,
    min_location: f64,
    start_width: f64,
    left_value: f64,
    left_slope: f64,
    right_value: f64,
    right_slope: f64,
    /// Boundary pieces that are upward parabolas keep their closed form outside the domain.
    grow_left: bool,
    grow_right: bool,
}

/// Build a prototype with default widths.
pub fn build_prototype(
    kinds: &[ShapeKind],
    shape_params: &[f64],
    scale: f64,
    domain_start: f64,
) -> Result<PrototypeFunction> {
    PrototypeFunction::from_doc(PrototypeDoc {
        format_version: PROTOTYPE_FORMAT_VERSION,
        name: None,
        kinds: kinds.to_vec(),
        shape_params: shape_params.to_vec(),
        scale,
        domain_start,
        widths: None,
    })
}

/// Build a prototype using each kind's default shape parameter.
pub fn build_default(kinds: &[ShapeKind], scale: f64, domain_start: f64) -> Result<PrototypeFunction> {
    let params: Vec<f64> = kinds.iter().map(|k| k.defaults().shape_param).collect();
    build_prototype(kinds, &params, scale, domain_start)
}

fn check_param(kind: ShapeKind, c: f64, index: usize) -> Result<()> {
    let ok = c.is_finite()
        && match kind {
            ShapeKind::Quad => c != 0.0,
            ShapeKind::RectBend => c >= 0.0,
            ShapeKind::Abs
            | ShapeKind::ExpUp
            | ShapeKind::ExpDown
            | ShapeKind::GaussBowl
            | ShapeKind::LaplaceBowl
            | ShapeKind::ConvexCurve
            | ShapeKind::ConcaveCurve => c > 0.0,
            ShapeKind::Line | ShapeKind::CliffMarker => true,
        };
    if ok {
        Ok(())
    } else {
        Err(Error::Prototype(format!(
            "shape_param {c} out of range for {} segment (kind #{index})",
            kind.tag()
        )))
    }
}

/// Construct the piece for a segment on [a, a + w] entering with (v0, s0).
fn make_piece(kind: ShapeKind, a: f64, w: f64, v0: f64, s0: f64, c: f64) -> std::result::Result<Piece, String> {
    let piece = match kind {
        ShapeKind::Line => Piece::Linear {
            origin: a,
            level: v0,
            slope: s0,
        },
        ShapeKind::Quad => Piece::Parabola {
            vertex: a - s0 / c,
            level: v0 - s0 * s0 / (2.0 * c),
            curvature: c,
        },
        ShapeKind::Abs => Piece::Kink {
            at: a + 0.5 * w,
            level: v0 + s0 * 0.5 * w,
            left: s0,
            right: -c * s0,
        },
        ShapeKind::RectBend => Piece::Kink {
            at: a + 0.5 * w,
            level: v0 + s0 * 0.5 * w,
            left: s0,
            right: c * s0,
        },
        ShapeKind::ExpUp | ShapeKind::ExpDown => Piece::Exponential {
            origin: a,
            level: v0,
            slope: s0,
            rate: if kind == ShapeKind::ExpUp { c } else { -c },
        },
        ShapeKind::ConvexCurve | ShapeKind::ConcaveCurve => Piece::Cubic {
            origin: a,
            level: v0,
            slope: s0,
            coef: if kind == ShapeKind::ConvexCurve { c } else { -c },
        },
        ShapeKind::GaussBowl => {
            if s0 >= 0.0 {
                return Err(format!("gauss-bowl needs a descending entry slope, got {s0}"));
            }
            let half = 0.5 * w;
            let sigma = c * w;
            let z = half * half / (2.0 * sigma * sigma);
            let depth = -s0 * sigma * sigma / half * z.exp();
            Piece::Gauss {
                center: a + half,
                level: v0 + depth * (-z).exp_m1(),
                depth,
                width: sigma,
            }
        }
        ShapeKind::LaplaceBowl => {
            if s0 >= 0.0 {
                return Err(format!("laplace-bowl needs a descending entry slope, got {s0}"));
            }
            let half = 0.5 * w;
            let b = c * w;
            let depth = -s0 * b * (half / b).exp();
            Piece::Laplace {
                center: a + half,
                level: v0 + depth * (-half / b).exp_m1(),
                depth,
                width: b,
            }
        }
        ShapeKind::CliffMarker => unreachable!("cliff markers carry no piece"),
    };
    Ok(piece)
}

impl PrototypeFunction {
    pub fn from_doc(doc: PrototypeDoc) -> Result<Self> {
        if doc.format_version != PROTOTYPE_FORMAT_VERSION {
            return Err(Error::Prototype(format!(
                "unsupported prototype format_version {}",
                doc.format_version
            )));
        }
        let kinds = &doc.kinds;
        if kinds.is_empty() {
            return Err(Error::Prototype("no shape kinds given".into()));
        }
        if doc.shape_params.len() != kinds.len() {
            return Err(Error::Prototype(format!(
                "{} shape_params for {} kinds",
                doc.shape_params.len(),
                kinds.len()
            )));
        }
        if kinds[0] == ShapeKind::CliffMarker || kinds[kinds.len() - 1] == ShapeKind::CliffMarker {
            return Err(Error::Prototype("cliff-marker cannot be first or last".into()));
        }
        if !(doc.scale.is_finite() && doc.scale > 0.0) {
            return Err(Error::Prototype(format!("scale must be positive, got {}", doc.scale)));
        }
        if !doc.domain_start.is_finite() {
            return Err(Error::Prototype("domain_start must be finite".into()));
        }
        let n_segments = kinds.iter().filter(|&&k| k != ShapeKind::CliffMarker).count();
        let widths = match &doc.widths {
            Some(w) if w.len() != n_segments => {
                return Err(Error::Prototype(format!(
                    "{} widths for {n_segments} segments",
                    w.len()
                )))
            }
            Some(w) => w.clone(),
            None => vec![DEFAULT_WIDTH; n_segments],
        };
        if let Some(w) = widths.iter().find(|w| !(w.is_finite() && **w > 0.0)) {
            return Err(Error::Prototype(format!("segment width must be positive, got {w}")));
        }

        let mut pieces = Vec::with_capacity(n_segments);
        let mut segments = Vec::with_capacity(n_segments);
        let mut bounds = vec![doc.domain_start];
        let mut junctions = Vec::new();
        let mut value = 0.0;
        let mut slope = kinds[0].defaults().entry_slope;
        let mut pending_cliff = false;
        let mut prev_kinked = false;

        for (i, (&kind, &c)) in kinds.iter().zip(&doc.shape_params).enumerate() {
            check_param(kind, c, i)?;
            if kind == ShapeKind::CliffMarker {
                pending_cliff = true;
                slope *= CLIFF_FACTOR;
                continue;
            }
            let a = *bounds.last().unwrap();
            let w = widths[pieces.len()];
            if !pieces.is_empty() {
                junctions.push(Junction {
                    position: a,
                    cliff: pending_cliff,
                    kinked_neighbour: prev_kinked || kind.is_kinked(),
                });
            }
            let piece = make_piece(kind, a, w, value, slope, c).map_err(|reason| match junctions.len() {
                0 => Error::Prototype(reason),
                n => Error::Junction {
                    junction: n - 1,
                    reason,
                },
            })?;
            segments.push(ShapeSegment {
                kind,
                width: w,
                left_value: value,
                left_slope: slope,
                shape_param: c,
            });
            let b = a + w;
            value = piece.value(b);
            slope = piece.slope(b);
            if !(value.is_finite() && slope.is_finite()) {
                return Err(Error::Junction {
                    junction: junctions.len(),
                    reason: format!("segment {} overflows", kind.tag()),
                });
            }
            pieces.push(piece);
            bounds.push(b);
            pending_cliff = false;
            prev_kinked = kind.is_kinked();
        }

        // Infimum over the domain: endpoints and interior critical points per piece.
        let mut min_value = f64::INFINITY;
        let mut min_location = doc.domain_start;
        let mut min_piece = 0;
        for (i, piece) in pieces.iter().enumerate() {
            let (lo, hi) = (bounds[i], bounds[i + 1]);
            let mut candidates = vec![lo, hi];
            candidates.extend(piece.interior_candidates(lo, hi));
            for x in candidates {
                let v = piece.value(x);
                if v < min_value {
                    min_value = v;
                    min_location = x;
                    min_piece = i;
                }
            }
        }
        for piece in &mut pieces {
            piece.lower_level(min_value);
        }
        for seg in &mut segments {
            seg.left_value -= min_value;
        }
        // Levels far from a piece's values (a parabola whose vertex lies well
        // outside its segment) lose a few ulps at the junctions. A residual per
        // piece, set outward from the piece holding the minimum, makes the
        // junction values agree exactly and leaves the minimum untouched.
        let mut trims = vec![0.0; pieces.len()];
        for i in min_piece + 1..pieces.len() {
            let x = bounds[i];
            trims[i] = (pieces[i - 1].value(x) + trims[i - 1]) - pieces[i].value(x);
        }
        for i in (0..min_piece).rev() {
            let x = bounds[i + 1];
            trims[i] = (pieces[i + 1].value(x) + trims[i + 1]) - pieces[i].value(x);
        }

        let first = pieces[0];
        let last = *pieces.last().unwrap();
        let start = bounds[0];
        let end = *bounds.last().unwrap();
        Ok(PrototypeFunction {
            segments,
            start_width: widths[0],
            left_value: first.value(start) + trims[0],
            left_slope: first.slope(start),
            right_value: last.value(end) + trims[trims.len() - 1],
            right_slope: last.slope(end),
            grow_left: first.is_upward_parabola(),
            grow_right: last.is_upward_parabola(),
            pieces,
            trims,
            bounds,
            junctions,
            min_location,
            doc,
        })
    }

    pub fn doc(&self) -> &PrototypeDoc {
        &self.doc
    }

    pub fn name(&self) -> Option<&str> {
        self.doc.name.as_deref()
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.doc.name = Some(name.into());
        self
    }

    pub fn kinds(&self) -> &[ShapeKind] {
        &self.doc.kinds
    }

    pub fn segments(&self) -> &[ShapeSegment] {
        &self.segments
    }

    pub fn junctions(&self) -> &[Junction] {
        &self.junctions
    }

    pub fn scale(&self) -> f64 {
        self.doc.scale
    }

    pub fn domain_start(&self) -> f64 {
        self.bounds[0]
    }

    pub fn domain_end(&self) -> f64 {
        *self.bounds.last().unwrap()
    }

    pub fn min_location(&self) -> f64 {
        self.min_location
    }

    /// Infimum over the domain; zero after offsetting.
    pub fn min_value(&self) -> f64 {
        0.0
    }

    /// Same prototype with a different scale.
    pub fn rescaled(&self, scale: f64) -> Result<Self> {
        let mut doc = self.doc.clone();
        doc.scale = scale;
        Self::from_doc(doc)
    }

    fn unit_value(&self, theta: f64) -> f64 {
        let start = self.bounds[0];
        let end = self.domain_end();
        if theta < start {
            if self.grow_left {
                return self.pieces[0].value(theta) + self.trims[0];
            }
            self.left_value + self.left_slope * (theta - start)
        } else if theta >= end {
            if self.grow_right {
                let last = self.pieces.len() - 1;
                return self.pieces[last].value(theta) + self.trims[last];
            }
            self.right_value + self.right_slope * (theta - end)
        } else {
            let i = self.piece_index(theta);
            self.pieces[i].value(theta) + self.trims[i]
        }
    }

    fn unit_slope(&self, theta: f64) -> f64 {
        if theta < self.bounds[0] {
            if self.grow_left {
                return self.pieces[0].slope(theta);
            }
            self.left_slope
        } else if theta >= self.domain_end() {
            if self.grow_right {
                return self.pieces.last().unwrap().slope(theta);
            }
            self.right_slope
        } else {
            self.pieces[self.piece_index(theta)].slope(theta)
        }
    }

    fn piece_index(&self, theta: f64) -> usize {
        // bounds[i] <= theta < bounds[i + 1]
        self.bounds[1..self.bounds.len() - 1].partition_point(|&b| b <= theta)
    }

    pub fn value(&self, theta: f64) -> f64 {
        self.doc.scale * self.unit_value(theta)
    }

    /// Exact derivative; right-hand derivative at kinks.
    pub fn true_gradient(&self, theta: f64) -> f64 {
        self.doc.scale * self.unit_slope(theta)
    }

    /// Left domain endpoint plus a tenth of the first segment's width.
    pub fn default_start(&self) -> f64 {
        self.bounds[0] + START_FRACTION * self.start_width
    }

    /// Positions of derivative discontinuities (cliff junctions and interior kinks).
    pub fn kinks(&self) -> Vec<f64> {
        let mut out: Vec<f64> = self
            .junctions
            .iter()
            .filter(|j| j.cliff)
            .map(|j| j.position)
            .chain(self.pieces.iter().filter_map(Piece::kink))
            .collect();
        out.sort_by(f64::total_cmp);
        out
    }

    pub fn is_differentiable(&self) -> bool {
        self.kinks().is_empty()
    }

    /// Extrapolation rises on both sides, so the function is bounded below on ℝ.
    pub fn is_bounded_below(&self) -> bool {
        self.left_slope <= 0.0 && self.right_slope >= 0.0
    }

    /// Value and slope limits at junction `index`, at unit scale.
    pub fn junction_limits(&self, index: usize) -> Option<JunctionLimits> {
        let junction = self.junctions.get(index)?;
        let x = junction.position;
        let (left, right) = (&self.pieces[index], &self.pieces[index + 1]);
        Some(JunctionLimits {
            value_left: left.value(x) + self.trims[index],
            value_right: right.value(x) + self.trims[index + 1],
            slope_left: left.slope(x),
            slope_right: right.slope(x),
        })
    }
}

impl TryFrom<PrototypeDoc> for PrototypeFunction {
    type Error = Error;

    fn try_from(doc: PrototypeDoc) -> Result<Self> {
        Self::from_doc(doc)
    }
}

impl From<PrototypeFunction> for PrototypeDoc {
    fn from(f: PrototypeFunction) -> Self {
        f.doc
    }
}

/// Named prototypes used by the default suite.
pub mod catalog {
    use super::*;
    use ShapeKind::*;

    #[derive(Clone, Debug)]
    pub struct CatalogEntry {
        pub name: &'static str,
        pub kinds: Vec<ShapeKind>,
        pub shape_params: Vec<f64>,
    }

    fn entry(name: &'static str, kinds: &[ShapeKind]) -> CatalogEntry {
        CatalogEntry {
            name,
            kinds: kinds.to_vec(),
            shape_params: kinds.iter().map(|k| k.defaults().shape_param).collect(),
        }
    }

    pub fn entries() -> Vec<CatalogEntry> {
        let mut sinusoid = entry("sinusoid", &[Quad, Quad, Quad, Quad, Quad]);
        sinusoid.shape_params = vec![1.0, -1.0, 1.0, -1.0, 1.0];
        vec![
            entry("quad", &[Quad]),
            entry("line", &[Line]),
            entry("abs", &[Abs]),
            entry("cliff", &[Line, CliffMarker, Line]),
            entry("relu", &[RectBend]),
            entry("exp", &[ExpUp]),
            entry("plateau", &[ExpDown]),
            entry("gauss", &[GaussBowl]),
            entry("laplace", &[LaplaceBowl]),
            entry("convex", &[ConvexCurve]),
            entry("concave", &[ConcaveCurve]),
            entry("sigmoid", &[GaussBowl, Line, ExpUp]),
            entry("quad-cliff-exp", &[Quad, CliffMarker, ExpUp]),
            entry("cliff-quad", &[Quad, CliffMarker, Quad]),
            entry("quad-cliff", &[Quad, CliffMarker, Line]),
            entry("line-gauss", &[Line, GaussBowl]),
            entry("cliff-laplace", &[Line, CliffMarker, LaplaceBowl]),
            sinusoid,
        ]
    }

    pub fn names() -> Vec<&'static str> {
        entries().into_iter().map(|e| e.name).collect()
    }

    /// Build a named prototype with its domain centred on the origin.
    pub fn prototype(name: &str, scale: f64) -> Result<PrototypeFunction> {
        let e = entries()
            .into_iter()
            .find(|e| e.name == name)
            .ok_or_else(|| Error::Prototype(format!("unknown catalog prototype `{name}`")))?;
        let n_segments = e.kinds.iter().filter(|&&k| k != CliffMarker).count();
        let start = -0.5 * DEFAULT_WIDTH * n_segments as f64;
        Ok(build_prototype(&e.kinds, &e.shape_params, scale, start)?.with_name(e.name))
    }
}
