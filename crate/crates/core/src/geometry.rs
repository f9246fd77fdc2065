//! Hexagonal cell layout and random-waypoint mobility.
//!
//! Cells sit on a triangular lattice with spacing `D`. Users move inside the
//! convex hull of the hexagonal cells and never wrap around, which concentrates
//! the time-averaged user density toward the middle of the network.

use rand::Rng;
use serde::{Deserialize, Serialize};

/// A point in the plane, in meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct Position {
    pub x: f64,
    pub y: f64,
}

impl Position {
    pub const ORIGIN: Position = Position { x: 0.0, y: 0.0 };

    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

/// Euclidean distance in meters.
pub fn distance(a: Position, b: Position) -> f64 {
    (a.x - b.x).hypot(a.y - b.y)
}

/// Convex polygon with vertices in counter-clockwise order.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvexRegion {
    vertices: Vec<Position>,
    min: Position,
    max: Position,
    tolerance: f64,
}

impl ConvexRegion {
    /// Convex hull of `points` (Andrew's monotone chain). Needs at least three
    /// non-collinear points to produce a non-degenerate region.
    pub fn hull(points: &[Position]) -> Self {
        let mut pts: Vec<Position> = points.to_vec();
        pts.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
        pts.dedup_by(|a, b| (a.x - b.x).abs() < 1e-9 && (a.y - b.y).abs() < 1e-9);

        fn cross(o: Position, a: Position, b: Position) -> f64 {
            (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x)
        }

        let mut lower: Vec<Position> = Vec::new();
        for &p in &pts {
            while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], p) <= 1e-9 {
                lower.pop();
            }
            lower.push(p);
        }
        let mut upper: Vec<Position> = Vec::new();
        for &p in pts.iter().rev() {
            while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], p) <= 1e-9 {
                upper.pop();
            }
            upper.push(p);
        }
        lower.pop();
        upper.pop();
        lower.extend(upper);
        Self::from_ccw(lower)
    }

    fn from_ccw(vertices: Vec<Position>) -> Self {
        let mut min = Position::new(f64::INFINITY, f64::INFINITY);
        let mut max = Position::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for v in &vertices {
            min.x = min.x.min(v.x);
            min.y = min.y.min(v.y);
            max.x = max.x.max(v.x);
            max.y = max.y.max(v.y);
        }
        let extent = (max.x - min.x).max(max.y - min.y).max(1.0);
        Self {
            vertices,
            min,
            max,
            tolerance: extent * 1e-9,
        }
    }

    pub fn vertices(&self) -> &[Position] {
        &self.vertices
    }

    pub fn bounding_box(&self) -> (Position, Position) {
        (self.min, self.max)
    }

    pub fn is_degenerate(&self) -> bool {
        self.vertices.len() < 3 || self.area() <= self.tolerance
    }

    pub fn area(&self) -> f64 {
        let n = self.vertices.len();
        let mut twice = 0.0;
        for i in 0..n {
            let a = self.vertices[i];
            let b = self.vertices[(i + 1) % n];
            twice += a.x * b.y - b.x * a.y;
        }
        twice / 2.0
    }

    /// Inclusive containment test with a small tolerance so that points on a
    /// segment between two interior points never test as outside.
    pub fn contains(&self, p: Position) -> bool {
        let n = self.vertices.len();
        if n < 3 {
            return false;
        }
        for i in 0..n {
            let a = self.vertices[i];
            let b = self.vertices[(i + 1) % n];
            let edge = distance(a, b).max(f64::MIN_POSITIVE);
            let signed = ((b.x - a.x) * (p.y - a.y) - (b.y - a.y) * (p.x - a.x)) / edge;
            if signed < -self.tolerance {
                return false;
            }
        }
        true
    }
}

/// Base-station layout: cell centers on a triangular lattice and the
/// network region users move in.
#[derive(Debug, Clone)]
pub struct HexNetwork {
    pub cell_centers: Vec<Position>,
    pub inter_bs_distance: f64,
    pub region: ConvexRegion,
}

impl HexNetwork {
    /// Lays out `1 + 3·rings·(rings+1)` cells around the origin.
    pub fn build(rings: u32, inter_bs_distance: f64) -> Self {
        assert!(inter_bs_distance > 0.0, "inter-BS distance must be positive");
        let r = rings as i64;
        // Axial hex coordinates with |q|, |s|, |q+s| <= rings.
        let mut centers = Vec::with_capacity(1 + 3 * (rings as usize) * (rings as usize + 1));
        centers.push(Position::ORIGIN);
        for ring in 1..=r {
            // Walk the ring starting from the east corner.
            let dirs: [(i64, i64); 6] = [(-1, 1), (-1, 0), (0, -1), (1, -1), (1, 0), (0, 1)];
            let (mut q, mut s) = (ring, 0i64);
            for (dq, ds) in dirs {
                for _ in 0..ring {
                    centers.push(axial_to_position(q, s, inter_bs_distance));
                    q += dq;
                    s += ds;
                }
            }
        }
        Self::from_centers(centers, inter_bs_distance)
    }

    /// Network over arbitrary cell centers; the region is the convex hull of
    /// the hexagonal cells (circumradius `D/√3`) around each center.
    pub fn from_centers(cell_centers: Vec<Position>, inter_bs_distance: f64) -> Self {
        let radius = inter_bs_distance / 3f64.sqrt();
        let mut corners = Vec::with_capacity(cell_centers.len() * 6);
        for c in &cell_centers {
            for k in 0..6 {
                let angle = std::f64::consts::FRAC_PI_6 + k as f64 * std::f64::consts::FRAC_PI_3;
                corners.push(Position::new(c.x + radius * angle.cos(), c.y + radius * angle.sin()));
            }
        }
        Self {
            cell_centers,
            inter_bs_distance,
            region: ConvexRegion::hull(&corners),
        }
    }

    pub fn num_cells(&self) -> usize {
        self.cell_centers.len()
    }

    /// Uniform point in the region by rejection from the bounding box.
    pub fn sample_waypoint<R: Rng + ?Sized>(&self, rng: &mut R) -> Position {
        assert!(!self.region.is_degenerate(), "cannot sample a degenerate region");
        let (min, max) = self.region.bounding_box();
        loop {
            let p = Position::new(rng.gen_range(min.x..=max.x), rng.gen_range(min.y..=max.y));
            if self.region.contains(p) {
                return p;
            }
        }
    }
}

fn axial_to_position(q: i64, s: i64, d: f64) -> Position {
    // Basis vectors D·(1, 0) and D·(1/2, √3/2).
    let (q, s) = (q as f64, s as f64);
    Position::new(d * (q + s / 2.0), d * s * 3f64.sqrt() / 2.0)
}

/// Per-user random-waypoint state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MobilityState {
    pub position: Position,
    pub waypoint: Position,
    /// Meters per second, constant for the whole run.
    pub speed: f64,
}

impl MobilityState {
    pub fn new<R: Rng + ?Sized>(network: &HexNetwork, speed: f64, rng: &mut R) -> Self {
        let position = network.sample_waypoint(rng);
        let waypoint = network.sample_waypoint(rng);
        Self {
            position,
            waypoint,
            speed,
        }
    }

    /// Moves `speed·dt` meters along the current leg. Arriving at the waypoint
    /// draws the next one immediately and the leftover distance continues on
    /// the new leg. Returns the distance traveled.
    pub fn advance<R: Rng + ?Sized>(&mut self, dt: f64, network: &HexNetwork, rng: &mut R) -> f64 {
        debug_assert!(dt > 0.0);
        let total = self.speed * dt;
        let mut remaining = total;
        // Bounded so a zero-length leg cannot spin forever.
        let mut legs = 0;
        while remaining > 0.0 && legs < 1024 {
            let to_go = distance(self.position, self.waypoint);
            if to_go > remaining {
                let f = remaining / to_go;
                self.position.x += (self.waypoint.x - self.position.x) * f;
                self.position.y += (self.waypoint.y - self.position.y) * f;
                remaining = 0.0;
            } else {
                self.position = self.waypoint;
                remaining -= to_go;
                self.waypoint = network.sample_waypoint(rng);
                legs += 1;
            }
        }
        total - remaining
    }
}
