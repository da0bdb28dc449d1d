//! Geometry, arena layout, colors and robot bodies.

use std::f64::consts::{PI, TAU};
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Body radius of an e-puck, meters.
pub const ROBOT_RADIUS: f64 = 0.035;
/// Distance between the two wheels of an e-puck, meters.
pub const AXLE_LENGTH: f64 = 0.053;
/// Arena area used by every mission, square meters.
pub const ARENA_AREA: f64 = 2.8;

const BOUNDARY_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    #[inline]
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    #[inline]
    pub fn from_angle(angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Self { x: c, y: s }
    }

    #[inline]
    pub fn dot(self, o: Vec2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    #[inline]
    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    #[inline]
    pub fn norm(self) -> f64 {
        self.norm_sq().sqrt()
    }

    #[inline]
    pub fn angle(self) -> f64 {
        self.y.atan2(self.x)
    }

    #[inline]
    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    /// Rotates the vector by `angle` radians counter-clockwise.
    #[inline]
    pub fn rotate(self, angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Self::new(c * self.x - s * self.y, s * self.x + c * self.y)
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    #[inline]
    fn add(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x + o.x, self.y + o.y)
    }
}

impl AddAssign for Vec2 {
    #[inline]
    fn add_assign(&mut self, o: Vec2) {
        self.x += o.x;
        self.y += o.y;
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    #[inline]
    fn sub(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x - o.x, self.y - o.y)
    }
}

impl SubAssign for Vec2 {
    #[inline]
    fn sub_assign(&mut self, o: Vec2) {
        self.x -= o.x;
        self.y -= o.y;
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    #[inline]
    fn mul(self, k: f64) -> Vec2 {
        Vec2::new(self.x * k, self.y * k)
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    #[inline]
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

/// Wraps an angle into `[0, 2π)`.
#[inline]
pub fn normalize_heading(angle: f64) -> f64 {
    if (0.0..TAU).contains(&angle) {
        return angle;
    }
    if (-TAU..0.0).contains(&angle) {
        // same value rem_euclid produces, without the fmod call
        let a = angle + TAU;
        return if a >= TAU { 0.0 } else { a };
    }
    let a = angle.rem_euclid(TAU);
    // rem_euclid can return exactly TAU for tiny negative inputs
    if a >= TAU {
        0.0
    } else {
        a
    }
}

/// Wraps an angle into `(-π, π]`.
#[inline]
pub fn wrap_signed(angle: f64) -> f64 {
    if angle > -PI && angle <= PI {
        return angle;
    }
    if angle.abs() > 64.0 * PI || !angle.is_finite() {
        let a = normalize_heading(angle);
        return if a > PI { a - TAU } else { a };
    }
    let mut a = angle;
    while a > PI {
        a -= TAU;
    }
    while a <= -PI {
        a += TAU;
    }
    a
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub position: Vec2,
    /// Radians in `[0, 2π)`.
    pub heading: f64,
}

impl Pose {
    pub fn new(x: f64, y: f64, heading: f64) -> Self {
        Self {
            position: Vec2::new(x, y),
            heading: normalize_heading(heading),
        }
    }

    /// Expresses a world-frame direction in the body frame, `[0, 2π)`.
    #[inline]
    pub fn to_body_angle(&self, world_angle: f64) -> f64 {
        normalize_heading(world_angle - self.heading)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColorSignal {
    #[default]
    None,
    Cyan,
    Magenta,
    Yellow,
}

impl ColorSignal {
    pub const ALL: [ColorSignal; 4] = [
        ColorSignal::None,
        ColorSignal::Cyan,
        ColorSignal::Magenta,
        ColorSignal::Yellow,
    ];

    /// Index into per-color perception arrays (C, M, Y); `None` has no slot.
    #[inline]
    pub fn channel(self) -> Option<usize> {
        match self {
            ColorSignal::None => None,
            ColorSignal::Cyan => Some(0),
            ColorSignal::Magenta => Some(1),
            ColorSignal::Yellow => Some(2),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ColorSignal::None => "none",
            ColorSignal::Cyan => "cyan",
            ColorSignal::Magenta => "magenta",
            ColorSignal::Yellow => "yellow",
        }
    }
}

/// A perceivable color: one of C, M, Y.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Hue {
    Cyan,
    Magenta,
    Yellow,
}

impl Hue {
    pub const ALL: [Hue; 3] = [Hue::Cyan, Hue::Magenta, Hue::Yellow];

    #[inline]
    pub fn channel(self) -> usize {
        match self {
            Hue::Cyan => 0,
            Hue::Magenta => 1,
            Hue::Yellow => 2,
        }
    }
}

impl From<Hue> for ColorSignal {
    fn from(h: Hue) -> Self {
        match h {
            Hue::Cyan => ColorSignal::Cyan,
            Hue::Magenta => ColorSignal::Magenta,
            Hue::Yellow => ColorSignal::Yellow,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FloorColor {
    Black,
    #[default]
    Gray,
    White,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Circle {
    pub center: Vec2,
    pub radius: f64,
}

impl Circle {
    /// Closed-disk containment.
    #[inline]
    pub fn contains(&self, p: Vec2) -> bool {
        (p - self.center).norm_sq() <= self.radius * self.radius
    }

    pub fn area(&self) -> f64 {
        PI * self.radius * self.radius
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FloorRegion {
    pub shape: Circle,
    pub color: FloorColor,
}

/// One octagon edge as a half-plane: a point `p` is inside when
/// `normal · p <= offset`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Wall {
    pub normal: Vec2,
    pub offset: f64,
}

impl Wall {
    /// Signed distance from the wall line; negative inside the arena.
    #[inline]
    pub fn signed_distance(&self, p: Vec2) -> f64 {
        self.normal.dot(p) - self.offset
    }
}

pub const ARENA_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
struct ArenaDoc {
    version: u32,
    vertices: Vec<Vec2>,
    regions: Vec<FloorRegion>,
    #[serde(default)]
    default_color: FloorColor,
}

/// Octagonal arena with colored floor regions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ArenaDoc", into = "ArenaDoc")]
pub struct ArenaSpec {
    vertices: Vec<Vec2>,
    regions: Vec<FloorRegion>,
    default_color: FloorColor,
    walls: Vec<Wall>,
}

impl TryFrom<ArenaDoc> for ArenaSpec {
    type Error = Error;

    fn try_from(doc: ArenaDoc) -> Result<Self> {
        if doc.version != ARENA_FORMAT_VERSION {
            return Err(Error::Format(format!(
                "unsupported arena format version {}",
                doc.version
            )));
        }
        let mut arena = ArenaSpec::from_vertices(doc.vertices)?;
        arena.default_color = doc.default_color;
        for r in doc.regions {
            arena.add_region(r)?;
        }
        Ok(arena)
    }
}

impl From<ArenaSpec> for ArenaDoc {
    fn from(a: ArenaSpec) -> Self {
        ArenaDoc {
            version: ARENA_FORMAT_VERSION,
            vertices: a.vertices,
            regions: a.regions,
            default_color: a.default_color,
        }
    }
}

impl ArenaSpec {
    /// Builds an arena from the vertices of a convex octagon in
    /// counter-clockwise order.
    pub fn from_vertices(vertices: Vec<Vec2>) -> Result<Self> {
        if vertices.len() != 8 {
            return Err(Error::InvalidArgument(format!(
                "arena needs 8 vertices, got {}",
                vertices.len()
            )));
        }
        if vertices.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("non-finite arena vertex".into()));
        }
        let mut walls = Vec::with_capacity(8);
        for i in 0..8 {
            let a = vertices[i];
            let b = vertices[(i + 1) % 8];
            let edge = b - a;
            let len = edge.norm();
            if len <= 0.0 {
                return Err(Error::InvalidArgument("degenerate arena edge".into()));
            }
            // outward normal of a CCW polygon
            let normal = Vec2::new(edge.y / len, -edge.x / len);
            walls.push(Wall {
                normal,
                offset: normal.dot(a),
            });
        }
        // convexity: every vertex lies inside every half-plane
        for w in &walls {
            if vertices.iter().any(|&v| w.signed_distance(v) > 1e-9) {
                return Err(Error::InvalidArgument(
                    "arena vertices must form a convex counter-clockwise polygon".into(),
                ));
            }
        }
        Ok(Self {
            vertices,
            regions: Vec::new(),
            default_color: FloorColor::Gray,
            walls,
        })
    }

    /// Appends a floor region. Later regions override earlier ones.
    pub fn add_region(&mut self, region: FloorRegion) -> Result<()> {
        let c = region.shape;
        if !(c.radius > 0.0) || !c.center.is_finite() {
            return Err(Error::InvalidArgument("invalid floor region".into()));
        }
        if self
            .walls
            .iter()
            .any(|w| w.signed_distance(c.center) > -c.radius + BOUNDARY_EPS)
        {
            return Err(Error::InvalidArgument(format!(
                "floor region at ({:.3}, {:.3}) r={:.3} is not inside the arena",
                c.center.x, c.center.y, c.radius
            )));
        }
        self.regions.push(region);
        Ok(())
    }

    pub fn with_region(mut self, region: FloorRegion) -> Result<Self> {
        self.add_region(region)?;
        Ok(self)
    }

    pub fn vertices(&self) -> &[Vec2] {
        &self.vertices
    }

    pub fn regions(&self) -> &[FloorRegion] {
        &self.regions
    }

    pub fn walls(&self) -> &[Wall] {
        &self.walls
    }

    pub fn default_color(&self) -> FloorColor {
        self.default_color
    }

    /// Distance between the two farthest vertices.
    pub fn diameter(&self) -> f64 {
        let mut best: f64 = 0.0;
        for (i, a) in self.vertices.iter().enumerate() {
            for b in &self.vertices[i + 1..] {
                best = best.max((*a - *b).norm());
            }
        }
        best
    }

    /// Polygon area by the shoelace formula.
    pub fn area(&self) -> f64 {
        shoelace_area(&self.vertices)
    }

    /// Radius of the largest circle centered at the origin that fits inside.
    pub fn inradius(&self) -> f64 {
        self.walls
            .iter()
            .map(|w| -w.signed_distance(Vec2::ZERO))
            .fold(f64::INFINITY, f64::min)
    }

    /// Inside or on the boundary.
    #[inline]
    pub fn contains(&self, p: Vec2) -> bool {
        self.walls
            .iter()
            .all(|w| w.signed_distance(p) <= BOUNDARY_EPS)
    }

    /// Whether a disk of radius `margin` around `p` fits inside the arena.
    #[inline]
    pub fn contains_with_margin(&self, p: Vec2, margin: f64) -> bool {
        self.walls
            .iter()
            .all(|w| w.signed_distance(p) <= -margin + BOUNDARY_EPS)
    }

    /// Floor color without the containment check; points outside the
    /// octagon read the default color.
    #[inline]
    pub fn color_unchecked(&self, p: Vec2) -> FloorColor {
        self.regions
            .iter()
            .rev()
            .find(|r| r.shape.contains(p))
            .map_or(self.default_color, |r| r.color)
    }

    pub fn white_regions(&self) -> impl Iterator<Item = &Circle> {
        self.regions
            .iter()
            .filter(|r| r.color == FloorColor::White)
            .map(|r| &r.shape)
    }
}

pub fn shoelace_area(poly: &[Vec2]) -> f64 {
    let n = poly.len();
    let twice: f64 = (0..n)
        .map(|i| {
            let a = poly[i];
            let b = poly[(i + 1) % n];
            a.x * b.y - b.x * a.y
        })
        .sum();
    twice.abs() / 2.0
}

/// Regular octagon of the given area, centered at the origin, with one vertex
/// on the positive x axis.
pub fn arena_regular_octagon(area: f64) -> Result<ArenaSpec> {
    if !(area > 0.0) || !area.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "arena area must be positive, got {area}"
        )));
    }
    let side = octagon_side(area);
    let circumradius = side / (2.0 * (PI / 8.0).sin());
    let vertices = (0..8)
        .map(|k| Vec2::from_angle(k as f64 * PI / 4.0) * circumradius)
        .collect();
    ArenaSpec::from_vertices(vertices)
}

/// Side length of a regular octagon with the given area.
pub fn octagon_side(area: f64) -> f64 {
    (area / (2.0 * (1.0 + 2f64.sqrt()))).sqrt()
}

pub fn point_in_arena(arena: &ArenaSpec, point: Vec2) -> bool {
    arena.contains(point)
}

/// Color of the last region containing `point`, else the default color.
pub fn floor_color_at(arena: &ArenaSpec, point: Vec2) -> Result<FloorColor> {
    if !arena.contains(point) {
        return Err(Error::OutOfArena {
            x: point.x,
            y: point.y,
        });
    }
    Ok(arena.color_unchecked(point))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RobotKind {
    Shepherd,
    Sheep,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RobotBody {
    pub kind: RobotKind,
    pub radius: f64,
    pub axle_length: f64,
    pub pose: Pose,
    pub led: ColorSignal,
    pub halted: bool,
}

impl RobotBody {
    pub fn new(kind: RobotKind, pose: Pose) -> Self {
        let led = match kind {
            RobotKind::Shepherd => ColorSignal::None,
            RobotKind::Sheep => ColorSignal::Yellow,
        };
        Self {
            kind,
            radius: ROBOT_RADIUS,
            axle_length: AXLE_LENGTH,
            pose,
            led,
            halted: false,
        }
    }

    #[inline]
    pub fn position(&self) -> Vec2 {
        self.pose.position
    }
}
