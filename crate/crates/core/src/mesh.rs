//! Structured triangulations of axis-aligned rectangles.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::point::{signed_area, Point2};

/// Axis-aligned rectangle `[x0, x1] x [y0, y1]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoxDomain {
    pub min: Point2,
    pub max: Point2,
}

impl BoxDomain {
    pub const fn new(x0: f64, y0: f64, x1: f64, y1: f64) -> Self {
        Self {
            min: Point2::new(x0, y0),
            max: Point2::new(x1, y1),
        }
    }

    pub const fn unit_square() -> Self {
        Self::new(0.0, 0.0, 1.0, 1.0)
    }

    /// `[-1, 1]^2`
    pub const fn symmetric_square() -> Self {
        Self::new(-1.0, -1.0, 1.0, 1.0)
    }

    pub fn width(&self) -> f64 {
        self.max.x - self.min.x
    }

    pub fn height(&self) -> f64 {
        self.max.y - self.min.y
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn contains(&self, p: Point2) -> bool {
        p.x >= self.min.x && p.x <= self.max.x && p.y >= self.min.y && p.y <= self.max.y
    }
}

/// An edge of the triangulation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Face {
    /// Endpoints, smaller index first.
    pub vertices: [usize; 2],
    /// Incident cells; the second is `None` on the boundary.
    pub cells: [Option<usize>; 2],
}

impl Face {
    pub fn is_boundary(&self) -> bool {
        self.cells[1].is_none()
    }
}

/// Cells adjacent to a face.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FaceCells {
    Boundary(usize),
    Interior(usize, usize),
}

impl FaceCells {
    pub fn as_slice_vec(&self) -> Vec<usize> {
        match *self {
            FaceCells::Boundary(c) => alloc::vec![c],
            FaceCells::Interior(a, b) => alloc::vec![a, b],
        }
    }
}

/// Conforming triangulation. Immutable once built.
#[derive(Clone, Debug)]
pub struct Mesh {
    vertices: Vec<Point2>,
    cells: Vec<[usize; 3]>,
    faces: Vec<Face>,
    /// `cell_faces[c][l]` is the face opposite local vertex `l`.
    cell_faces: Vec<[usize; 3]>,
    boundary_vertex: Vec<bool>,
    cell_diameters: Vec<f64>,
    h: f64,
    domain: BoxDomain,
    subdivisions: usize,
}

/// Builds the `n x n` grid of squares, each split along the diagonal from
/// its lower-left to its upper-right corner, giving `2 n^2` triangles.
pub fn build_structured_mesh(n: usize, domain: BoxDomain) -> Result<Mesh> {
    if n == 0 {
        return Err(Error::InvalidArgument("mesh needs at least one subdivision"));
    }
    let (w, hgt) = (domain.width(), domain.height());
    if !(w > 0.0 && hgt > 0.0) || !w.is_finite() || !hgt.is_finite() {
        return Err(Error::InvalidArgument("degenerate mesh domain"));
    }
    let nv = n + 1;
    let dx = w / n as f64;
    let dy = hgt / n as f64;
    let mut vertices = Vec::with_capacity(nv * nv);
    let mut boundary_vertex = Vec::with_capacity(nv * nv);
    for j in 0..nv {
        for i in 0..nv {
            // pin the far edges exactly to the box
            let x = if i == n { domain.max.x } else { domain.min.x + i as f64 * dx };
            let y = if j == n { domain.max.y } else { domain.min.y + j as f64 * dy };
            vertices.push(Point2::new(x, y));
            boundary_vertex.push(i == 0 || j == 0 || i == n || j == n);
        }
    }
    let vid = |i: usize, j: usize| j * nv + i;
    let mut cells = Vec::with_capacity(2 * n * n);
    for j in 0..n {
        for i in 0..n {
            let a = vid(i, j);
            let b = vid(i + 1, j);
            let c = vid(i + 1, j + 1);
            let d = vid(i, j + 1);
            cells.push([a, b, c]);
            cells.push([a, c, d]);
        }
    }
    Mesh::from_parts(vertices, cells, boundary_vertex, domain, n)
}

impl Mesh {
    fn from_parts(
        vertices: Vec<Point2>,
        cells: Vec<[usize; 3]>,
        boundary_vertex: Vec<bool>,
        domain: BoxDomain,
        subdivisions: usize,
    ) -> Result<Self> {
        let mut faces: Vec<Face> = Vec::new();
        let mut lookup: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        let mut cell_faces = Vec::with_capacity(cells.len());
        let mut cell_diameters = Vec::with_capacity(cells.len());
        for (ci, cell) in cells.iter().enumerate() {
            let [p0, p1, p2] = cell.map(|v| vertices[v]);
            if signed_area(p0, p1, p2) <= 0.0 {
                return Err(Error::InvalidArgument("cell with non-positive area"));
            }
            let mut local = [0usize; 3];
            for (l, slot) in local.iter_mut().enumerate() {
                let a = cell[(l + 1) % 3];
                let b = cell[(l + 2) % 3];
                let key = (a.min(b), a.max(b));
                let fi = *lookup.entry(key).or_insert_with(|| {
                    faces.push(Face {
                        vertices: [key.0, key.1],
                        cells: [None, None],
                    });
                    faces.len() - 1
                });
                let face = &mut faces[fi];
                if face.cells[0].is_none() {
                    face.cells[0] = Some(ci);
                } else if face.cells[1].is_none() {
                    face.cells[1] = Some(ci);
                } else {
                    return Err(Error::InvalidArgument("non-manifold edge"));
                }
                *slot = fi;
            }
            cell_faces.push(local);
            let d = p0.distance(p1).max(p1.distance(p2)).max(p2.distance(p0));
            cell_diameters.push(d);
        }
        let h = cell_diameters.iter().copied().fold(0.0, f64::max);
        Ok(Self {
            vertices,
            cells,
            faces,
            cell_faces,
            boundary_vertex,
            cell_diameters,
            h,
            domain,
            subdivisions,
        })
    }

    pub fn vertices(&self) -> &[Point2] {
        &self.vertices
    }

    pub fn cells(&self) -> &[[usize; 3]] {
        &self.cells
    }

    pub fn faces(&self) -> &[Face] {
        &self.faces
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn num_faces(&self) -> usize {
        self.faces.len()
    }

    pub fn domain(&self) -> BoxDomain {
        self.domain
    }

    /// Squares per axis used to build the mesh.
    pub fn subdivisions(&self) -> usize {
        self.subdivisions
    }

    /// Global mesh size `max_T h_T`.
    pub fn h(&self) -> f64 {
        self.h
    }

    /// Longest edge of cell `c`.
    pub fn cell_diameter(&self, c: usize) -> f64 {
        self.cell_diameters[c]
    }

    /// Length of face `f`.
    pub fn face_diameter(&self, f: usize) -> f64 {
        let [a, b] = self.faces[f].vertices;
        self.vertices[a].distance(self.vertices[b])
    }

    pub fn cell_points(&self, c: usize) -> [Point2; 3] {
        self.cells[c].map(|v| self.vertices[v])
    }

    pub fn cell_area(&self, c: usize) -> f64 {
        let [a, b, p] = self.cell_points(c);
        signed_area(a, b, p)
    }

    pub fn cell_centroid(&self, c: usize) -> Point2 {
        let [a, b, p] = self.cell_points(c);
        (a + b + p) * (1.0 / 3.0)
    }

    /// Faces of cell `c`; entry `l` is opposite local vertex `l`.
    pub fn cell_faces(&self, c: usize) -> [usize; 3] {
        self.cell_faces[c]
    }

    pub fn is_boundary_vertex(&self, v: usize) -> bool {
        self.boundary_vertex[v]
    }

    pub fn boundary_vertex_flags(&self) -> &[bool] {
        &self.boundary_vertex
    }

    pub fn face_neighbors(&self, face: usize) -> Result<FaceCells> {
        let f = self
            .faces
            .get(face)
            .ok_or(Error::InvalidArgument("face index out of range"))?;
        Ok(match f.cells {
            [Some(a), Some(b)] => FaceCells::Interior(a, b),
            [Some(a), None] => FaceCells::Boundary(a),
            _ => unreachable!("every face has at least one cell"),
        })
    }

    /// Unit normal of face `f`, pointing out of its first incident cell.
    pub fn face_normal(&self, f: usize) -> Point2 {
        let face = &self.faces[f];
        let [a, b] = face.vertices.map(|v| self.vertices[v]);
        let n = (b - a).perp().normalized();
        let c0 = face.cells[0].expect("face without cells");
        if n.dot(self.cell_centroid(c0) - a) > 0.0 {
            -n
        } else {
            n
        }
    }

    /// Local index (0..3) of face `f` within cell `c`.
    pub fn local_face_index(&self, c: usize, f: usize) -> Option<usize> {
        self.cell_faces[c].iter().position(|&g| g == f)
    }
}
