//! Closed piecewise-smooth contours with unit-speed parameterization.
//!
//! A contour is a list of line segments and circular arcs traversed in
//! order. Arc length `t ∈ [0, l]` parameterizes the whole curve; `θ(t)` is the
//! tangent phase, so `z′(t) = e^{iθ(t)}`. At a corner the node takes the
//! tangent of the piece that ends there.

use std::collections::hash_map::DefaultHasher;
use std::f64::consts::PI;
use std::hash::{Hash, Hasher};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numkit::{cx, SpectralInfo, C64};

const TAU: f64 = 2.0 * PI;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Orientation {
    Counterclockwise,
    Clockwise,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Piece {
    Segment {
        start: C64,
        end: C64,
    },
    /// Counterclockwise when `end_angle > start_angle`.
    Arc {
        center: C64,
        radius: f64,
        #[serde(rename = "startAngle")]
        start_angle: f64,
        #[serde(rename = "endAngle")]
        end_angle: f64,
    },
}

fn wrap_0_tau(x: f64) -> f64 {
    let r = x.rem_euclid(TAU);
    if r >= TAU {
        0.0
    } else {
        r
    }
}

impl Piece {
    pub fn length(&self) -> f64 {
        match *self {
            Piece::Segment { start, end } => (end - start).norm(),
            Piece::Arc { radius, start_angle, end_angle, .. } => radius * (end_angle - start_angle).abs(),
        }
    }

    pub fn orientation(&self) -> Option<Orientation> {
        match *self {
            Piece::Segment { .. } => None,
            Piece::Arc { start_angle, end_angle, .. } => {
                Some(if end_angle >= start_angle { Orientation::Counterclockwise } else { Orientation::Clockwise })
            }
        }
    }

    fn sweep_sign(start_angle: f64, end_angle: f64) -> f64 {
        if end_angle >= start_angle {
            1.0
        } else {
            -1.0
        }
    }

    /// Point at arc length `s` from the start of this piece.
    pub fn point(&self, s: f64) -> C64 {
        match *self {
            Piece::Segment { start, end } => {
                let len = (end - start).norm();
                start + (end - start) * (s / len)
            }
            Piece::Arc { center, radius, start_angle, end_angle } => {
                let sg = Self::sweep_sign(start_angle, end_angle);
                center + C64::from_polar(radius, start_angle + sg * s / radius)
            }
        }
    }

    pub fn tangent_angle(&self, s: f64) -> f64 {
        match *self {
            Piece::Segment { start, end } => (end - start).arg(),
            Piece::Arc { radius, start_angle, end_angle, .. } => {
                let sg = Self::sweep_sign(start_angle, end_angle);
                start_angle + sg * s / radius + sg * PI / 2.0
            }
        }
    }

    pub fn start(&self) -> C64 {
        self.point(0.0)
    }

    pub fn end(&self) -> C64 {
        match *self {
            Piece::Segment { end, .. } => end,
            Piece::Arc { center, radius, end_angle, .. } => center + C64::from_polar(radius, end_angle),
        }
    }

    fn angle_in_sweep(start_angle: f64, end_angle: f64, phi: f64) -> bool {
        let sweep = end_angle - start_angle;
        if sweep.abs() >= TAU {
            return true;
        }
        if sweep >= 0.0 {
            wrap_0_tau(phi - start_angle) <= sweep
        } else {
            wrap_0_tau(start_angle - phi) <= -sweep
        }
    }

    /// Exact Euclidean distance from `p` to this piece.
    pub fn distance_to(&self, p: C64) -> f64 {
        match *self {
            Piece::Segment { start, end } => {
                let d = end - start;
                let len2 = d.norm_sqr();
                let u = ((p - start) * d.conj()).re / len2;
                let q = start + d * u.clamp(0.0, 1.0);
                (p - q).norm()
            }
            Piece::Arc { center, radius, start_angle, end_angle } => {
                let w = p - center;
                if w.norm() > 0.0 && Self::angle_in_sweep(start_angle, end_angle, w.arg()) {
                    (w.norm() - radius).abs()
                } else if w.norm() == 0.0 {
                    radius
                } else {
                    (p - self.start()).norm().min((p - self.end()).norm())
                }
            }
        }
    }

    /// max over the piece of Re(conj(d)·z) for a unit direction d.
    pub fn support(&self, d: C64) -> f64 {
        let proj = |z: C64| (d.conj() * z).re;
        match *self {
            Piece::Segment { start, end } => proj(start).max(proj(end)),
            Piece::Arc { center, radius, start_angle, end_angle } => {
                if Self::angle_in_sweep(start_angle, end_angle, d.arg()) {
                    proj(center) + radius
                } else {
                    proj(self.start()).max(proj(self.end()))
                }
            }
        }
    }

    pub fn max_modulus(&self) -> f64 {
        match *self {
            Piece::Segment { start, end } => start.norm().max(end.norm()),
            Piece::Arc { center, radius, start_angle, end_angle } => {
                if center.norm() == 0.0 {
                    radius
                } else if Self::angle_in_sweep(start_angle, end_angle, center.arg()) {
                    center.norm() + radius
                } else {
                    self.start().norm().max(self.end().norm())
                }
            }
        }
    }
}

/// A closed contour in arc-length parameterization.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Contour {
    pieces: Vec<Piece>,
    #[serde(skip)]
    offsets: Vec<f64>,
    total_length: f64,
    enclosing_radius: f64,
}

/// Equispaced arc-length nodes of a contour.
#[derive(Debug, Clone, PartialEq)]
pub struct ContourNodes {
    pub m: usize,
    /// Total contour length l.
    pub length: f64,
    pub t: Vec<f64>,
    pub z: Vec<C64>,
    pub theta: Vec<f64>,
}

impl ContourNodes {
    /// e^{iθ_k}
    pub fn tangent(&self, k: usize) -> C64 {
        C64::from_polar(1.0, self.theta[k])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Enclosure {
    pub enclosed: bool,
    pub min_distance: f64,
    pub winding_numbers: Vec<i64>,
}

impl Contour {
    pub fn from_pieces(pieces: Vec<Piece>) -> Result<Contour> {
        if pieces.is_empty() {
            return Err(Error::InvalidParameter("contour needs at least one piece".into()));
        }
        for p in &pieces {
            let len = p.length();
            if !(len.is_finite() && len > 0.0) {
                return Err(Error::InvalidParameter(format!("piece has invalid length {len}")));
            }
            if let Piece::Arc { radius, .. } = p {
                if !(*radius > 0.0) {
                    return Err(Error::InvalidParameter("arc radius must be positive".into()));
                }
            }
        }
        let mut scale: f64 = 1.0;
        for p in &pieces {
            scale = scale.max(p.start().norm());
        }
        for (j, p) in pieces.iter().enumerate() {
            let next = &pieces[(j + 1) % pieces.len()];
            let gap = (p.end() - next.start()).norm();
            if gap > 1e-12 * scale {
                return Err(Error::OpenContour { gap });
            }
        }
        let mut offsets = Vec::with_capacity(pieces.len() + 1);
        let mut acc = 0.0;
        offsets.push(0.0);
        for p in &pieces {
            acc += p.length();
            offsets.push(acc);
        }
        let enclosing_radius = pieces.iter().map(Piece::max_modulus).fold(0.0, f64::max);
        Ok(Contour { pieces, offsets, total_length: acc, enclosing_radius })
    }

    pub fn pieces(&self) -> &[Piece] {
        &self.pieces
    }

    /// Total length l.
    pub fn length(&self) -> f64 {
        self.total_length
    }

    /// R = max |z(t)|.
    pub fn enclosing_radius(&self) -> f64 {
        self.enclosing_radius
    }

    /// max Re z(t).
    pub fn max_re(&self) -> f64 {
        self.support(cx(1.0, 0.0))
    }

    /// min Re z(t).
    pub fn min_re(&self) -> f64 {
        -self.support(cx(-1.0, 0.0))
    }

    pub fn support(&self, d: C64) -> f64 {
        self.pieces.iter().map(|p| p.support(d)).fold(f64::NEG_INFINITY, f64::max)
    }

    /// Stable hash of the geometry, stored alongside certified bounds.
    pub fn fingerprint(&self) -> u64 {
        let mut h = DefaultHasher::new();
        for p in &self.pieces {
            match *p {
                Piece::Segment { start, end } => {
                    0u8.hash(&mut h);
                    for x in [start.re, start.im, end.re, end.im] {
                        x.to_bits().hash(&mut h);
                    }
                }
                Piece::Arc { center, radius, start_angle, end_angle } => {
                    1u8.hash(&mut h);
                    for x in [center.re, center.im, radius, start_angle, end_angle] {
                        x.to_bits().hash(&mut h);
                    }
                }
            }
        }
        h.finish()
    }

    fn junction_is_smooth(&self, incoming: usize, outgoing: usize) -> bool {
        let a = self.pieces[incoming].tangent_angle(self.pieces[incoming].length());
        let b = self.pieces[outgoing].tangent_angle(0.0);
        (C64::from_polar(1.0, a) - C64::from_polar(1.0, b)).norm() < 1e-12
    }

    /// Piece index and local arc length for global `t`, incoming convention
    /// at corners.
    fn locate(&self, t: f64) -> (usize, f64) {
        let l = self.total_length;
        let t = t.rem_euclid(l);
        let tol = 1e-12 * l;
        let n = self.pieces.len();
        if t <= tol || l - t <= tol {
            let last = n - 1;
            if self.junction_is_smooth(last, 0) {
                return (0, 0.0);
            }
            return (last, self.pieces[last].length());
        }
        let j = match self.offsets[1..].binary_search_by(|x| x.total_cmp(&t)) {
            Ok(j) => j,
            Err(j) => j.min(n - 1),
        };
        // snap to an exact junction if rounding put us just past it
        if j > 0 && (t - self.offsets[j]).abs() <= tol {
            return (j - 1, self.pieces[j - 1].length());
        }
        if (self.offsets[j + 1] - t).abs() <= tol {
            return (j, self.pieces[j].length());
        }
        (j, (t - self.offsets[j]).max(0.0))
    }

    pub fn point(&self, t: f64) -> C64 {
        let (j, s) = self.locate(t);
        self.pieces[j].point(s)
    }

    pub fn tangent_angle(&self, t: f64) -> f64 {
        let (j, s) = self.locate(t);
        self.pieces[j].tangent_angle(s)
    }

    pub fn discretize(&self, m: usize) -> ContourNodes {
        self.discretize_with_offset(m, 0.0)
    }

    /// Nodes at t_k = l·(k + offset)/M.
    pub fn discretize_with_offset(&self, m: usize, offset: f64) -> ContourNodes {
        let m = m.max(1);
        let l = self.total_length;
        let mut t = Vec::with_capacity(m);
        let mut z = Vec::with_capacity(m);
        let mut theta = Vec::with_capacity(m);
        for k in 0..m {
            let tk = l * (k as f64 + offset) / m as f64;
            let (j, s) = self.locate(tk);
            t.push(tk);
            z.push(self.pieces[j].point(s));
            theta.push(self.pieces[j].tangent_angle(s));
        }
        ContourNodes { m, length: l, t, z, theta }
    }

    /// Exact distance from `p` to the contour.
    pub fn distance_to(&self, p: C64) -> f64 {
        self.pieces.iter().map(|q| q.distance_to(p)).fold(f64::INFINITY, f64::min)
    }

    /// Length of the inscribed polyline with `n` vertices per piece.
    pub fn polyline_length(&self, n: usize) -> f64 {
        let mut total = 0.0;
        for p in &self.pieces {
            let len = p.length();
            let mut prev = p.start();
            for i in 1..=n {
                let q = p.point(len * i as f64 / n as f64);
                total += (q - prev).norm();
                prev = q;
            }
        }
        total
    }

    /// Winding number about `p`, by summing argument increments along a
    /// polyline fine enough that no chord passes near `p`.
    pub fn winding_number(&self, p: C64) -> Result<i64> {
        let d = self.distance_to(p);
        if !(d > 0.0) {
            return Err(Error::InvalidParameter("point lies on the contour".into()));
        }
        let mut total = 0.0;
        for piece in &self.pieces {
            let len = piece.length();
            let n = ((len / (0.25 * d)).ceil() as usize).clamp(16, 2_000_000);
            let mut prev = piece.start() - p;
            for i in 1..=n {
                let cur = piece.point(len * i as f64 / n as f64) - p;
                total += (cur / prev).arg();
                prev = cur;
            }
        }
        let raw = total / TAU;
        let rounded = raw.round();
        if (raw - rounded).abs() >= 1e-6 {
            return Err(Error::VerificationFailed { residual: (raw - rounded).abs() });
        }
        Ok(rounded as i64)
    }

    pub fn verify_enclosure(&self, spec: &SpectralInfo) -> Result<Enclosure> {
        self.verify_enclosure_of(&spec.eigenvalues)
    }

    pub fn verify_enclosure_of(&self, points: &[C64]) -> Result<Enclosure> {
        let min_distance = points.iter().map(|&p| self.distance_to(p)).fold(f64::INFINITY, f64::min);
        let scale = self.enclosing_radius.max(1.0);
        if !(min_distance > 1e-14 * scale) {
            return Ok(Enclosure {
                enclosed: false,
                min_distance: min_distance.max(0.0),
                winding_numbers: vec![0; points.len()],
            });
        }
        let winding_numbers = points.iter().map(|&p| self.winding_number(p)).collect::<Result<Vec<_>>>()?;
        let enclosed = winding_numbers.iter().all(|&w| w == 1);
        Ok(Enclosure { enclosed, min_distance, winding_numbers })
    }
}

pub fn make_circle(center: C64, radius: f64) -> Result<Contour> {
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::InvalidParameter(format!("circle radius must be positive, got {radius}")));
    }
    Contour::from_pieces(vec![Piece::Arc { center, radius, start_angle: 0.0, end_angle: TAU }])
}

/// Counterclockwise axis-aligned rectangle starting at its lower-right corner.
pub fn make_rectangle(center: C64, half_width: f64, half_height: f64) -> Result<Contour> {
    if !(half_width > 0.0 && half_height > 0.0 && half_width.is_finite() && half_height.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "rectangle half-sides must be positive, got {half_width}, {half_height}"
        )));
    }
    let corners = [
        center + C64::new(half_width, -half_height),
        center + C64::new(half_width, half_height),
        center + C64::new(-half_width, half_height),
        center + C64::new(-half_width, -half_height),
    ];
    Contour::from_pieces((0..4).map(|j| Piece::Segment { start: corners[j], end: corners[(j + 1) % 4] }).collect())
}

/// Boundary of {|z| ≤ r1, re_min ≤ Re z ≤ re_max}; infinite bounds mean no
/// truncation on that side.
pub fn make_truncated_disk(r1: f64, re_min: f64, re_max: f64) -> Result<Contour> {
    if !(r1 > 0.0 && r1.is_finite()) {
        return Err(Error::InvalidParameter(format!("disk radius must be positive, got {r1}")));
    }
    if re_min.is_nan() || re_max.is_nan() {
        return Err(Error::InvalidParameter("strip bounds must not be NaN".into()));
    }
    if re_min >= re_max {
        return Err(Error::EmptyRegion);
    }
    for bound in [re_min, re_max] {
        if bound.abs() == r1 {
            return Err(Error::DegenerateChord { bound, radius: r1 });
        }
    }
    if re_max < -r1 || re_min > r1 {
        return Err(Error::EmptyRegion);
    }
    let lo = (re_min > -r1).then_some(re_min);
    let hi = (re_max < r1).then_some(re_max);
    let zero = cx(0.0, 0.0);
    let pieces = match (lo, hi) {
        (None, None) => return make_circle(zero, r1),
        (None, Some(b)) => {
            let beta = (b / r1).acos();
            let h = (r1 * r1 - b * b).sqrt();
            vec![
                Piece::Segment { start: cx(b, -h), end: cx(b, h) },
                Piece::Arc { center: zero, radius: r1, start_angle: beta, end_angle: TAU - beta },
            ]
        }
        (Some(a), None) => {
            let alpha = (a / r1).acos();
            let h = (r1 * r1 - a * a).sqrt();
            vec![
                Piece::Segment { start: cx(a, h), end: cx(a, -h) },
                Piece::Arc { center: zero, radius: r1, start_angle: -alpha, end_angle: alpha },
            ]
        }
        (Some(a), Some(b)) => {
            let alpha = (a / r1).acos();
            let beta = (b / r1).acos();
            let ha = (r1 * r1 - a * a).sqrt();
            let hb = (r1 * r1 - b * b).sqrt();
            vec![
                Piece::Segment { start: cx(b, -hb), end: cx(b, hb) },
                Piece::Arc { center: zero, radius: r1, start_angle: beta, end_angle: alpha },
                Piece::Segment { start: cx(a, ha), end: cx(a, -ha) },
                Piece::Arc { center: zero, radius: r1, start_angle: TAU - alpha, end_angle: TAU - beta },
            ]
        }
    };
    Contour::from_pieces(pieces)
}

/// Boundary of {|z| ≤ r, Re z ≤ 0}.
pub fn make_left_half_disk(r: f64) -> Result<Contour> {
    make_truncated_disk(r, f64::NEG_INFINITY, 0.0)
}

/// Serializable contour description: a named preset or explicit pieces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ContourSpec {
    Preset(Preset),
    Pieces { pieces: Vec<Piece> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "preset", rename_all = "kebab-case")]
pub enum Preset {
    Circle {
        #[serde(default)]
        center: C64,
        radius: f64,
    },
    /// Missing bounds mean no truncation on that side.
    TruncatedDisk {
        radius: f64,
        #[serde(rename = "reMin", default)]
        re_min: Option<f64>,
        #[serde(rename = "reMax", default)]
        re_max: Option<f64>,
    },
    LeftHalfDisk {
        radius: f64,
    },
}

impl ContourSpec {
    pub fn build(&self) -> Result<Contour> {
        match self {
            ContourSpec::Preset(Preset::Circle { center, radius }) => make_circle(*center, *radius),
            ContourSpec::Preset(Preset::TruncatedDisk { radius, re_min, re_max }) => {
                make_truncated_disk(*radius, re_min.unwrap_or(f64::NEG_INFINITY), re_max.unwrap_or(f64::INFINITY))
            }
            ContourSpec::Preset(Preset::LeftHalfDisk { radius }) => make_left_half_disk(*radius),
            ContourSpec::Pieces { pieces } => Contour::from_pieces(pieces.clone()),
        }
    }
}
