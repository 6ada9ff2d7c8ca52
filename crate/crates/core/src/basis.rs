//! Lagrange shape functions on the reference triangle `(0,0), (1,0), (0,1)`.
//!
//! Local node order: the three vertices, then (for `k = 2`) the midpoints of
//! edges `0-1`, `1-2` and `2-0`.

use crate::error::{Error, Result};
use crate::point::Point2;

/// Largest local basis size handled (`k = 2`).
pub const MAX_LOCAL: usize = 6;

/// Polynomial degree of the Lagrange space.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Degree(usize);

impl Degree {
    pub fn new(k: usize) -> Result<Self> {
        match k {
            1 | 2 => Ok(Self(k)),
            _ => Err(Error::UnsupportedDegree(k)),
        }
    }

    #[inline]
    pub fn get(self) -> usize {
        self.0
    }

    /// `(k + 1)(k + 2) / 2`
    #[inline]
    pub fn local_dofs(self) -> usize {
        (self.0 + 1) * (self.0 + 2) / 2
    }
}

/// Values, gradients and Hessians `[xx, xy, yy]` of the local basis at one
/// reference point. Only the first `n` entries are meaningful.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct BasisEval {
    pub n: usize,
    pub values: [f64; MAX_LOCAL],
    pub grads: [Point2; MAX_LOCAL],
    pub hessians: [[f64; 3]; MAX_LOCAL],
}

impl BasisEval {
    pub fn values(&self) -> &[f64] {
        &self.values[..self.n]
    }

    pub fn grads(&self) -> &[Point2] {
        &self.grads[..self.n]
    }
}

/// Reference coordinates of the local nodes.
pub fn reference_nodes(k: Degree) -> &'static [Point2] {
    const P1: [Point2; 3] = [
        Point2::new(0.0, 0.0),
        Point2::new(1.0, 0.0),
        Point2::new(0.0, 1.0),
    ];
    const P2: [Point2; 6] = [
        Point2::new(0.0, 0.0),
        Point2::new(1.0, 0.0),
        Point2::new(0.0, 1.0),
        Point2::new(0.5, 0.0),
        Point2::new(0.5, 0.5),
        Point2::new(0.0, 0.5),
    ];
    match k.get() {
        1 => &P1,
        _ => &P2,
    }
}

/// Evaluates the basis at reference point `p`.
pub fn eval_basis(k: Degree, p: Point2) -> BasisEval {
    let l = [1.0 - p.x - p.y, p.x, p.y];
    // reference gradients of the barycentric coordinates
    let dl = [
        Point2::new(-1.0, -1.0),
        Point2::new(1.0, 0.0),
        Point2::new(0.0, 1.0),
    ];
    let mut out = BasisEval {
        n: k.local_dofs(),
        ..Default::default()
    };
    match k.get() {
        1 => {
            for i in 0..3 {
                out.values[i] = l[i];
                out.grads[i] = dl[i];
            }
        }
        _ => {
            for i in 0..3 {
                out.values[i] = l[i] * (2.0 * l[i] - 1.0);
                out.grads[i] = dl[i] * (4.0 * l[i] - 1.0);
                out.hessians[i] = outer_sym(dl[i], dl[i], 4.0);
            }
            for (m, (i, j)) in [(0, 1), (1, 2), (2, 0)].into_iter().enumerate() {
                out.values[3 + m] = 4.0 * l[i] * l[j];
                out.grads[3 + m] = (dl[i] * l[j] + dl[j] * l[i]) * 4.0;
                let a = outer_sym(dl[i], dl[j], 4.0);
                let b = outer_sym(dl[j], dl[i], 4.0);
                out.hessians[3 + m] = [a[0] + b[0], a[1] + b[1], a[2] + b[2]];
            }
        }
    }
    out
}

/// `s * a b^T` symmetrised, stored as `[xx, xy, yy]`.
fn outer_sym(a: Point2, b: Point2, s: f64) -> [f64; 3] {
    [
        s * a.x * b.x,
        s * 0.5 * (a.x * b.y + a.y * b.x),
        s * a.y * b.y,
    ]
}
