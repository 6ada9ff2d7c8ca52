//! The doubled Lagrange space: one continuous `P_k` field on each active
//! submesh, with independent unknowns on cut cells.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::Range;

use crate::basis::{eval_basis, BasisEval, Degree};
use crate::cut::CellClassification;
use crate::error::{Error, Result};
use crate::mesh::Mesh;
use crate::point::Point2;
use crate::Side;

const INACTIVE: usize = usize::MAX;

/// Affine map from the reference triangle onto a mesh cell.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AffineMap {
    origin: Point2,
    e1: Point2,
    e2: Point2,
    det: f64,
}

impl AffineMap {
    pub fn new(tri: [Point2; 3]) -> Self {
        let e1 = tri[1] - tri[0];
        let e2 = tri[2] - tri[0];
        Self {
            origin: tri[0],
            e1,
            e2,
            det: e1.cross(e2),
        }
    }

    pub fn for_cell(mesh: &Mesh, cell: usize) -> Self {
        Self::new(mesh.cell_points(cell))
    }

    pub fn det(&self) -> f64 {
        self.det
    }

    pub fn to_physical(&self, r: Point2) -> Point2 {
        self.origin + self.e1 * r.x + self.e2 * r.y
    }

    pub fn to_reference(&self, p: Point2) -> Point2 {
        let d = p - self.origin;
        Point2::new(d.cross(self.e2) / self.det, self.e1.cross(d) / self.det)
    }

    /// `J^{-T} g`
    pub fn grad_to_physical(&self, g: Point2) -> Point2 {
        // J = [e1 e2], J^{-1} = [e2.y, -e2.x; -e1.y, e1.x] / det
        let inv = 1.0 / self.det;
        Point2::new(
            (self.e2.y * g.x - self.e1.y * g.y) * inv,
            (-self.e2.x * g.x + self.e1.x * g.y) * inv,
        )
    }

    /// `J^{-T} H J^{-1}` for symmetric `H = [xx, xy, yy]`.
    pub fn hessian_to_physical(&self, h: [f64; 3]) -> [f64; 3] {
        let inv = 1.0 / self.det;
        // rows of J^{-1}
        let r0 = Point2::new(self.e2.y * inv, -self.e2.x * inv);
        let r1 = Point2::new(-self.e1.y * inv, self.e1.x * inv);
        // (J^{-T} H J^{-1})_{ab} = sum_ij Jinv_{i a} H_ij Jinv_{j b}
        let col = |a: usize| match a {
            0 => Point2::new(r0.x, r1.x),
            _ => Point2::new(r0.y, r1.y),
        };
        let quad = |u: Point2, v: Point2| {
            u.x * h[0] * v.x + u.x * h[1] * v.y + u.y * h[1] * v.x + u.y * h[2] * v.y
        };
        let (c0, c1) = (col(0), col(1));
        [quad(c0, c0), quad(c0, c1), quad(c1, c1)]
    }

    /// Basis values, physical gradients and physical Hessians at physical
    /// point `p`.
    pub fn eval_physical(&self, k: Degree, p: Point2) -> BasisEval {
        let mut e = eval_basis(k, self.to_reference(p));
        for i in 0..e.n {
            e.grads[i] = self.grad_to_physical(e.grads[i]);
            e.hessians[i] = self.hessian_to_physical(e.hessians[i]);
        }
        e
    }
}

#[derive(Clone, Debug)]
pub struct FeSpace {
    k: Degree,
    /// flattened `cell -> global dofs`, one table per side
    cell_dofs: [Vec<usize>; 2],
    ranges: [Range<usize>; 2],
    dof_points: Vec<Point2>,
    constrained: Vec<bool>,
    num_cells: usize,
}

/// Builds the space on the active submeshes given by `classification`.
///
/// Side-1 unknowns come first, then side 2. Nodes on the outer boundary
/// of either active submesh are recorded as Dirichlet constraints.
pub fn build_space(mesh: &Mesh, classification: &CellClassification, k: usize) -> Result<FeSpace> {
    let k = Degree::new(k)?;
    if classification.num_cells() != mesh.num_cells() {
        return Err(Error::InvalidArgument(
            "classification does not match the mesh",
        ));
    }
    let nloc = k.local_dofs();
    let nv = mesh.num_vertices();
    let num_keys = nv + if k.get() == 2 { mesh.num_faces() } else { 0 };
    let mut cell_dofs = [
        vec![INACTIVE; nloc * mesh.num_cells()],
        vec![INACTIVE; nloc * mesh.num_cells()],
    ];
    let mut dof_points = Vec::new();
    let mut constrained = Vec::new();
    let mut ranges = [0..0, 0..0];
    for side in Side::BOTH {
        let start = dof_points.len();
        let mut key_to_dof = vec![INACTIVE; num_keys];
        for c in classification.active_cells(side) {
            let cell = mesh.cells()[c];
            let faces = mesh.cell_faces(c);
            for l in 0..nloc {
                let (key, point, on_boundary) = if l < 3 {
                    let v = cell[l];
                    (v, mesh.vertices()[v], mesh.is_boundary_vertex(v))
                } else {
                    // edge node m sits on edge (m, m+1), opposite vertex m+2
                    let m = l - 3;
                    let f = faces[(m + 2) % 3];
                    let [a, b] = mesh.faces()[f].vertices;
                    let mid = mesh.vertices()[a].lerp(mesh.vertices()[b], 0.5);
                    (nv + f, mid, mesh.faces()[f].is_boundary())
                };
                if key_to_dof[key] == INACTIVE {
                    key_to_dof[key] = dof_points.len();
                    dof_points.push(point);
                    constrained.push(on_boundary);
                }
                cell_dofs[side.index()][c * nloc + l] = key_to_dof[key];
            }
        }
        ranges[side.index()] = start..dof_points.len();
    }
    Ok(FeSpace {
        k,
        cell_dofs,
        ranges,
        dof_points,
        constrained,
        num_cells: mesh.num_cells(),
    })
}

impl FeSpace {
    pub fn degree(&self) -> Degree {
        self.k
    }

    pub fn num_dofs(&self) -> usize {
        self.dof_points.len()
    }

    pub fn local_size(&self) -> usize {
        self.k.local_dofs()
    }

    pub fn num_cells(&self) -> usize {
        self.num_cells
    }

    /// Global indices of the side's unknowns.
    pub fn side_range(&self, side: Side) -> Range<usize> {
        self.ranges[side.index()].clone()
    }

    pub fn dof_side(&self, dof: usize) -> Side {
        if self.ranges[0].contains(&dof) {
            Side::One
        } else {
            Side::Two
        }
    }

    pub fn dof_point(&self, dof: usize) -> Point2 {
        self.dof_points[dof]
    }

    /// Local-to-global map of `cell` on `side`, `None` if inactive there.
    pub fn local_dofs(&self, cell: usize, side: Side) -> Option<&[usize]> {
        let n = self.local_size();
        let dofs = &self.cell_dofs[side.index()][cell * n..(cell + 1) * n];
        if dofs[0] == INACTIVE {
            None
        } else {
            Some(dofs)
        }
    }

    pub fn is_constrained(&self, dof: usize) -> bool {
        self.constrained[dof]
    }

    /// Dirichlet constrained unknowns in increasing order.
    pub fn constrained_dofs(&self) -> impl Iterator<Item = usize> + '_ {
        self.constrained
            .iter()
            .enumerate()
            .filter(|(_, c)| **c)
            .map(|(d, _)| d)
    }

    pub fn num_constrained(&self) -> usize {
        self.constrained.iter().filter(|c| **c).count()
    }

    /// Nodal interpolant of a side-dependent function.
    pub fn interpolate(&self, mut f: impl FnMut(Side, Point2) -> f64) -> Vec<f64> {
        (0..self.num_dofs())
            .map(|d| f(self.dof_side(d), self.dof_points[d]))
            .collect()
    }

    /// Value and gradient of the side-`side` field at physical point `p` of
    /// `cell` (evaluated with the cell's polynomial, also outside the cell).
    pub fn evaluate(
        &self,
        mesh: &Mesh,
        coefficients: &[f64],
        side: Side,
        cell: usize,
        p: Point2,
    ) -> Result<(f64, Point2)> {
        if coefficients.len() != self.num_dofs() {
            return Err(Error::InvalidArgument("coefficient vector has wrong length"));
        }
        let dofs = self
            .local_dofs(cell, side)
            .ok_or(Error::InvalidArgument("cell is not active on this side"))?;
        let e = AffineMap::for_cell(mesh, cell).eval_physical(self.k, p);
        Ok(combine(&e, dofs, coefficients))
    }
}

/// `(sum c_j phi_j, sum c_j grad phi_j)`
pub fn combine(e: &BasisEval, dofs: &[usize], coefficients: &[f64]) -> (f64, Point2) {
    let mut v = 0.0;
    let mut g = Point2::default();
    for (i, &d) in dofs.iter().enumerate() {
        let c = coefficients[d];
        v += c * e.values[i];
        g += e.grads[i] * c;
    }
    (v, g)
}
