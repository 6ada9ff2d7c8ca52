//! Gauss rules on intervals and triangles.
//!
//! Triangle rules are collapsed (Duffy) tensor products of Gauss-Legendre
//! rules. They are not the most economical rules but every weight is
//! positive and any polynomial order is available.

use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::point::{signed_area, Point2};
#[allow(unused_imports)]
use crate::float::Float;

/// Gauss-Legendre nodes and weights on `[0, 1]` with `n` points.
///
/// Exact for polynomials of degree `2n - 1`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "gauss_legendre needs at least one point");
    let mut nodes = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    for i in 0..n {
        // Newton iteration on P_n starting from the Chebyshev-like guess.
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes.push(0.5 * (1.0 + x));
        weights.push(0.5 * w);
    }
    // ascending nodes
    nodes.reverse();
    weights.reverse();
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let pn = if n == 0 { 1.0 } else { p1 };
    let dpn = n as f64 * (x * pn - p0) / (x * x - 1.0);
    (pn, dpn)
}

/// Number of Gauss points needed on an interval for exactness `order`.
#[inline]
pub fn points_for_order(order: usize) -> usize {
    order / 2 + 1
}

/// Quadrature points and weights in physical coordinates.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct QuadRule {
    pub points: Vec<Point2>,
    pub weights: Vec<f64>,
}

impl QuadRule {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn push(&mut self, p: Point2, w: f64) {
        self.points.push(p);
        self.weights.push(w);
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn integrate(&self, mut f: impl FnMut(Point2) -> f64) -> f64 {
        self.points
            .iter()
            .zip(&self.weights)
            .map(|(&p, &w)| w * f(p))
            .sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (Point2, f64)> + '_ {
        self.points.iter().copied().zip(self.weights.iter().copied())
    }

    pub fn append(&mut self, other: &QuadRule) {
        self.points.extend_from_slice(&other.points);
        self.weights.extend_from_slice(&other.weights);
    }
}

/// Rule on the reference triangle `(0,0), (1,0), (0,1)`, barycentric-free:
/// points are reference coordinates `(xi, eta)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ReferenceTriangleRule {
    pub points: Vec<Point2>,
    pub weights: Vec<f64>,
    pub order: usize,
}

impl ReferenceTriangleRule {
    /// Collapsed Gauss rule exact for polynomials of total degree `order`.
    pub fn new(order: usize) -> Self {
        // the collapse adds one degree in the first direction
        let n = (order + 3) / 2;
        let (x, w) = gauss_legendre(n);
        let mut points = Vec::with_capacity(n * n);
        let mut weights = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                let s = x[i];
                let t = x[j];
                points.push(Point2::new(s, (1.0 - s) * t));
                weights.push(w[i] * w[j] * (1.0 - s));
            }
        }
        Self {
            points,
            weights,
            order,
        }
    }

    /// Maps the rule onto the physical triangle `(a, b, c)`.
    pub fn map_to(&self, a: Point2, b: Point2, c: Point2, out: &mut QuadRule) {
        let jac = 2.0 * signed_area(a, b, c).abs();
        for (p, &w) in self.points.iter().zip(&self.weights) {
            out.push(a + (b - a) * p.x + (c - a) * p.y, w * jac);
        }
    }
}

/// Gauss-Legendre rule on `[0, 1]` exact for polynomials of degree `order`.
#[derive(Clone, Debug, PartialEq)]
pub struct LineRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl LineRule {
    pub fn new(order: usize) -> Self {
        Self::with_points(points_for_order(order))
    }

    pub fn with_points(n: usize) -> Self {
        let (nodes, weights) = gauss_legendre(n);
        Self { nodes, weights }
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.nodes.iter().copied().zip(self.weights.iter().copied())
    }
}
