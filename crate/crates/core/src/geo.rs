//! Planar positions and road geometry.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Position {
    pub x: f64,
    pub y: f64,
}

impl Position {
    pub const fn new(x: f64, y: f64) -> Self {
        Position { x, y }
    }

    pub fn distance(&self, other: &Position) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// How distances are measured between vehicles.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Geometry {
    /// Plain Euclidean plane.
    Plane,
    /// A ring road of the given circumference along x; y is lateral offset.
    Ring { length_m: f64 },
}

impl Geometry {
    pub fn distance(&self, a: &Position, b: &Position) -> f64 {
        match *self {
            Geometry::Plane => a.distance(b),
            Geometry::Ring { length_m } => {
                let dx = (a.x - b.x).rem_euclid(length_m);
                let dx = dx.min(length_m - dx);
                dx.hypot(a.y - b.y)
            }
        }
    }

    /// Maps an unwrapped longitudinal coordinate onto the road.
    pub fn wrap(&self, p: Position) -> Position {
        match *self {
            Geometry::Plane => p,
            Geometry::Ring { length_m } => Position::new(p.x.rem_euclid(length_m), p.y),
        }
    }
}
