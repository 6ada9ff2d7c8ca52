//! Cell classification and quadrature on cut cells.
//!
//! Circles and lines are handled in closed form: edge intersections come
//! from analytic roots, the interface inside a cell is the exact arc (or
//! segment) and the curved pieces of a cut cell are integrated with a
//! collapsed map from an apex vertex onto the arc. Generic level sets are
//! resolved by recursive subdivision followed by a straight split along
//! linearly interpolated zero crossings.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::error::{Error, Result};
use crate::levelset::{LevelSet, SegmentRoots};
use crate::mesh::Mesh;
use crate::point::{signed_area, Point2};
use crate::quadrature::{points_for_order, LineRule, QuadRule, ReferenceTriangleRule};
use crate::Side;
#[allow(unused_imports)]
use crate::float::Float;

/// Relative classification tolerance; the absolute value is this times `h`.
pub const DEFAULT_RELATIVE_TOL: f64 = 1e-12;

/// Subdivision depth used to resolve ambiguous configurations (an edge
/// crossed twice, a tangency) for closed-form level sets.
const MAX_RESOLVE_DEPTH: usize = 48;

/// Longer arcs are split before integrating; keeps the angular rule at full
/// accuracy.
const MAX_ARC_ANGLE: f64 = 0.5;

/// Samples per edge used to detect crossings of generic level sets.
const EDGE_SAMPLES: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CellTag {
    Inside1,
    Inside2,
    Cut,
}

impl CellTag {
    pub fn is_active(self, side: Side) -> bool {
        matches!(
            (self, side),
            (CellTag::Cut, _) | (CellTag::Inside1, Side::One) | (CellTag::Inside2, Side::Two)
        )
    }
}

/// Sign of the level set with ties (`|phi| <= tol`) resolved into `Omega_2`.
#[inline]
pub fn side_of(phi: f64, tol: f64) -> Side {
    if phi + tol > 0.0 {
        Side::Two
    } else {
        Side::One
    }
}

#[derive(Clone, Debug)]
pub struct CellClassification {
    tags: Vec<CellTag>,
    degenerate: Vec<bool>,
    tol: f64,
}

impl CellClassification {
    pub fn tag(&self, cell: usize) -> CellTag {
        self.tags[cell]
    }

    pub fn tags(&self) -> &[CellTag] {
        &self.tags
    }

    pub fn num_cells(&self) -> usize {
        self.tags.len()
    }

    pub fn is_cut(&self, cell: usize) -> bool {
        self.tags[cell] == CellTag::Cut
    }

    /// Whether `cell` belongs to the active submesh of `side`.
    pub fn is_active(&self, cell: usize, side: Side) -> bool {
        self.tags[cell].is_active(side)
    }

    /// Tangencies and interfaces running along an edge.
    pub fn is_degenerate(&self, cell: usize) -> bool {
        self.degenerate[cell]
    }

    pub fn tolerance(&self) -> f64 {
        self.tol
    }

    pub fn cut_cells(&self) -> impl Iterator<Item = usize> + '_ {
        self.tags
            .iter()
            .enumerate()
            .filter(|(_, t)| **t == CellTag::Cut)
            .map(|(c, _)| c)
    }

    pub fn active_cells(&self, side: Side) -> impl Iterator<Item = usize> + '_ {
        self.tags
            .iter()
            .enumerate()
            .filter(move |(_, t)| t.is_active(side))
            .map(|(c, _)| c)
    }

    pub fn num_cut(&self) -> usize {
        self.cut_cells().count()
    }
}

/// Classifies every cell as inside `Omega_1`, inside `Omega_2` or cut.
///
/// A cell is cut when the tie-broken vertex signs differ, when the
/// interface enters and leaves through the same edge, or when the
/// interface is enclosed by the cell. Cells meeting the interface only at
/// vertices are not cut. Other cells take the sign at the centroid. `tol`
/// is an absolute length.
pub fn classify_cells(mesh: &Mesh, levelset: &LevelSet, tol: f64) -> CellClassification {
    let mut tags = Vec::with_capacity(mesh.num_cells());
    let mut degenerate = vec![false; mesh.num_cells()];
    for c in 0..mesh.num_cells() {
        let tri = mesh.cell_points(c);
        let (tag, degen) = classify_triangle(levelset, tri, tol);
        tags.push(tag);
        degenerate[c] = degen;
    }
    CellClassification {
        tags,
        degenerate,
        tol,
    }
}

fn classify_triangle(ls: &LevelSet, tri: [Point2; 3], tol: f64) -> (CellTag, bool) {
    let phi = tri.map(|p| ls.value(p));
    let sides = phi.map(|v| side_of(v, tol));
    let mut degenerate = false;
    for e in 0..3 {
        if phi[e].abs() <= tol && phi[(e + 1) % 3].abs() <= tol {
            degenerate = true;
        }
    }
    // Ties go to Omega_2, so a cell touching Gamma only at vertices would
    // otherwise be cut with an empty Omega_2 part. Judge such cells by the
    // strict signs; the edge-root test still catches a crossing. An edge on
    // a straight or generic Gamma stays cut so that it carries the segment.
    let strict = || (0..3).filter(|&i| phi[i].abs() > tol).map(|i| sides[i]);
    let ties = 3 - strict().count();
    let touching = ties == 1 || (ties == 2 && matches!(ls, LevelSet::Circle { .. }));
    let base = if sides.iter().all(|&s| s == sides[0]) {
        sides[0]
    } else if touching && strict().all(|s| s == Side::One) {
        if let LevelSet::Circle { .. } = ls {
            // all vertices in the closed disk, so the triangle is too
            return (CellTag::Inside1, degenerate);
        }
        Side::One
    } else {
        return (CellTag::Cut, degenerate);
    };
    match edge_topology(ls, tri, tol, &phi, base) {
        Topology::Simple => {}
        Topology::Tangent => degenerate = true,
        Topology::Ambiguous => return (CellTag::Cut, degenerate),
    }
    let centroid = (tri[0] + tri[1] + tri[2]) * (1.0 / 3.0);
    let cs = side_of(ls.value(centroid), tol);
    if cs != base {
        return (CellTag::Cut, degenerate);
    }
    (
        match cs {
            Side::One => CellTag::Inside1,
            Side::Two => CellTag::Inside2,
        },
        degenerate,
    )
}

enum Topology {
    /// every edge crossed at most once, interface not enclosed
    Simple,
    /// touching without crossing
    Tangent,
    /// needs subdivision
    Ambiguous,
}

/// Detects edges that are crossed twice and interfaces enclosed by the
/// triangle. Only meaningful when the strict vertex signs agree on `base`.
fn edge_topology(ls: &LevelSet, tri: [Point2; 3], tol: f64, phi: &[f64; 3], base: Side) -> Topology {
    let mut tangent = false;
    match ls {
        LevelSet::Circle { center, radius } => {
            for e in 0..3 {
                let a = tri[e];
                let b = tri[(e + 1) % 3];
                let len = a.distance(b);
                if let Some(SegmentRoots::Two(t1, t2)) = ls.segment_roots(a, b) {
                    // roots at a vertex count, the vertex may sit on Gamma
                    let slack = tol / len.max(f64::MIN_POSITIVE);
                    let inside = |t: f64| t >= -slack && t <= 1.0 + slack;
                    if inside(t1) && inside(t2) {
                        if (t2 - t1) * len > tol {
                            return Topology::Ambiguous;
                        }
                        tangent = true;
                    }
                }
            }
            // a circle enclosed by the triangle crosses no edge
            if phi.iter().all(|&v| v > 0.0) && point_in_triangle(*center, tri) && *radius > 0.0 {
                return Topology::Ambiguous;
            }
        }
        LevelSet::Line { .. } => {}
        LevelSet::Generic { .. } => {
            for e in 0..3 {
                let a = tri[e];
                let b = tri[(e + 1) % 3];
                for k in 1..EDGE_SAMPLES {
                    let t = k as f64 / EDGE_SAMPLES as f64;
                    if side_of(ls.value(a.lerp(b, t)), tol) != base {
                        return Topology::Ambiguous;
                    }
                }
            }
        }
    }
    if tangent {
        Topology::Tangent
    } else {
        Topology::Simple
    }
}

fn point_in_triangle(p: Point2, tri: [Point2; 3]) -> bool {
    let d0 = signed_area(tri[0], tri[1], p);
    let d1 = signed_area(tri[1], tri[2], p);
    let d2 = signed_area(tri[2], tri[0], p);
    (d0 >= 0.0 && d1 >= 0.0 && d2 >= 0.0) || (d0 <= 0.0 && d1 <= 0.0 && d2 <= 0.0)
}

/// Polynomial exactness and geometric resolution of the cut rules.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct QuadratureOptions {
    pub volume_order: usize,
    pub interface_order: usize,
    /// Subdivision depth for generic level sets.
    pub geom_level: usize,
}

impl QuadratureOptions {
    /// Orders `2k` (volume) and `2k + 1` (interface), geometry depth
    /// `2 + refinement_level`.
    pub fn for_degree(k: usize, refinement_level: usize) -> Self {
        Self {
            volume_order: 2 * k,
            interface_order: 2 * k + 1,
            geom_level: 2 + refinement_level,
        }
    }

    /// Rules for error integration: order `2k + 2` and one more level of
    /// geometry than the solve.
    pub fn for_errors(k: usize, refinement_level: usize) -> Self {
        Self {
            volume_order: 2 * k + 2,
            interface_order: 2 * k + 2,
            geom_level: 3 + refinement_level,
        }
    }
}

/// Points, weights and unit normals on `Gamma`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct InterfaceRule {
    pub points: Vec<Point2>,
    pub weights: Vec<f64>,
    pub normals: Vec<Point2>,
}

impl InterfaceRule {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn push(&mut self, p: Point2, w: f64, n: Point2) {
        self.points.push(p);
        self.weights.push(w);
        self.normals.push(n);
    }

    /// `(point, weight, normal)` triples.
    pub fn iter(&self) -> impl Iterator<Item = (Point2, f64, Point2)> + '_ {
        self.points
            .iter()
            .zip(&self.weights)
            .zip(&self.normals)
            .map(|((&p, &w), &n)| (p, w, n))
    }
}

/// Rules of a single cell.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct CellQuadrature {
    /// `volume[i]` integrates over `T intersect Omega_{i+1}`.
    pub volume: [QuadRule; 2],
    pub interface: InterfaceRule,
}

impl CellQuadrature {
    pub fn volume(&self, side: Side) -> &QuadRule {
        &self.volume[side.index()]
    }
}

#[derive(Clone, Debug)]
pub struct CutQuadrature {
    cells: Vec<CellQuadrature>,
    options: QuadratureOptions,
    tol: f64,
    empty_interface: Vec<usize>,
}

impl CutQuadrature {
    /// Volume and interface rules for every cell in one pass.
    pub fn build(
        mesh: &Mesh,
        classification: &CellClassification,
        levelset: &LevelSet,
        options: QuadratureOptions,
    ) -> Result<Self> {
        if classification.num_cells() != mesh.num_cells() {
            return Err(Error::QuadratureMismatch {
                expected: classification.num_cells(),
                found: mesh.num_cells(),
            });
        }
        let tol = classification.tolerance();
        let builder = CutBuilder::new(levelset, options, tol);
        let mut cells = Vec::with_capacity(mesh.num_cells());
        let mut empty_interface = Vec::new();
        for c in 0..mesh.num_cells() {
            let tri = mesh.cell_points(c);
            let mut q = CellQuadrature::default();
            match classification.tag(c) {
                CellTag::Inside1 => builder.standard(tri, &mut q.volume[0]),
                CellTag::Inside2 => builder.standard(tri, &mut q.volume[1]),
                CellTag::Cut => {
                    builder.cut(tri, 0, &mut q);
                    if q.interface.is_empty() {
                        empty_interface.push(c);
                    }
                }
            }
            check_weights(c, &q)?;
            cells.push(q);
        }
        Ok(Self {
            cells,
            options,
            tol,
            empty_interface,
        })
    }

    pub fn cell(&self, c: usize) -> &CellQuadrature {
        &self.cells[c]
    }

    pub fn cells(&self) -> &[CellQuadrature] {
        &self.cells
    }

    pub fn num_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn options(&self) -> QuadratureOptions {
        self.options
    }

    pub fn tolerance(&self) -> f64 {
        self.tol
    }

    /// Cut cells for which no interface piece could be recovered.
    pub fn empty_interface_cells(&self) -> &[usize] {
        &self.empty_interface
    }

    /// `|Omega_i|` as seen by the volume rules.
    pub fn subdomain_area(&self, side: Side) -> f64 {
        self.cells.iter().map(|q| q.volume(side).total_weight()).sum()
    }

    /// `|Gamma|` as seen by the interface rules.
    pub fn interface_length(&self) -> f64 {
        self.cells.iter().map(|q| q.interface.total_weight()).sum()
    }
}

fn check_weights(cell: usize, q: &CellQuadrature) -> Result<()> {
    let all = q.volume[0]
        .weights
        .iter()
        .chain(&q.volume[1].weights)
        .chain(&q.interface.weights);
    for &w in all {
        if !(w > 0.0) || !w.is_finite() {
            return Err(Error::NegativeWeight { cell, weight: w });
        }
    }
    Ok(())
}

/// Volume part only.
#[derive(Clone, Debug)]
pub struct VolumeQuadrature {
    pub cells: Vec<[QuadRule; 2]>,
}

/// Interface part only.
#[derive(Clone, Debug)]
pub struct InterfaceQuadrature {
    pub cells: Vec<InterfaceRule>,
}

pub fn volume_quadrature(
    mesh: &Mesh,
    classification: &CellClassification,
    levelset: &LevelSet,
    order: usize,
    geom_level: usize,
) -> Result<VolumeQuadrature> {
    if order == 0 {
        return Err(Error::InvalidArgument("quadrature order must be at least 1"));
    }
    let opts = QuadratureOptions {
        volume_order: order,
        interface_order: order,
        geom_level,
    };
    let q = CutQuadrature::build(mesh, classification, levelset, opts)?;
    Ok(VolumeQuadrature {
        cells: q.cells.into_iter().map(|c| c.volume).collect(),
    })
}

pub fn interface_quadrature(
    mesh: &Mesh,
    classification: &CellClassification,
    levelset: &LevelSet,
    order: usize,
    geom_level: usize,
) -> Result<InterfaceQuadrature> {
    if order == 0 {
        return Err(Error::InvalidArgument("quadrature order must be at least 1"));
    }
    let opts = QuadratureOptions {
        volume_order: order,
        interface_order: order,
        geom_level,
    };
    let q = CutQuadrature::build(mesh, classification, levelset, opts)?;
    Ok(InterfaceQuadrature {
        cells: q.cells.into_iter().map(|c| c.interface).collect(),
    })
}

/// Cut rules for a single triangle, independent of any mesh.
pub fn cut_triangle(
    levelset: &LevelSet,
    tri: [Point2; 3],
    options: QuadratureOptions,
    tol: f64,
) -> CellQuadrature {
    let builder = CutBuilder::new(levelset, options, tol);
    let mut q = CellQuadrature::default();
    builder.cut(tri, 0, &mut q);
    q
}

struct CutBuilder<'a> {
    ls: &'a LevelSet,
    tol: f64,
    options: QuadratureOptions,
    triangle: ReferenceTriangleRule,
    /// radial direction of curved pieces (carries the extra Jacobian factor)
    radial: LineRule,
    /// angular direction of curved pieces and arcs
    angular: LineRule,
    /// straight interface segments
    segment: LineRule,
}

impl<'a> CutBuilder<'a> {
    fn new(ls: &'a LevelSet, options: QuadratureOptions, tol: f64) -> Self {
        let vo = options.volume_order;
        Self {
            ls,
            tol,
            options,
            triangle: ReferenceTriangleRule::new(vo),
            radial: LineRule::with_points((vo + 3) / 2),
            angular: LineRule::with_points(
                ((vo + 3) / 2).max(points_for_order(options.interface_order)) + 4,
            ),
            segment: LineRule::new(options.interface_order),
        }
    }

    fn standard(&self, tri: [Point2; 3], out: &mut QuadRule) {
        self.triangle.map_to(tri[0], tri[1], tri[2], out);
    }

    fn push_triangle(&self, tri: [Point2; 3], out: &mut QuadRule) {
        if signed_area(tri[0], tri[1], tri[2]).abs() > 0.0 {
            self.triangle.map_to(tri[0], tri[1], tri[2], out);
        }
    }

    fn cut(&self, tri: [Point2; 3], depth: usize, out: &mut CellQuadrature) {
        if self.ls.is_exact() {
            self.cut_exact(tri, depth, out);
        } else {
            self.cut_generic(tri, depth, out);
        }
    }

    fn subdivide(&self, tri: [Point2; 3], depth: usize, out: &mut CellQuadrature) {
        for child in split4(tri) {
            self.cut(child, depth + 1, out);
        }
    }

    fn cut_generic(&self, tri: [Point2; 3], depth: usize, out: &mut CellQuadrature) {
        let phi = tri.map(|p| self.ls.value(p));
        let sides = phi.map(|v| side_of(v, self.tol));
        let mixed = sides.iter().any(|&s| s != sides[0]);
        let crossing = mixed
            || matches!(
                edge_topology(self.ls, tri, self.tol, &phi, sides[0]),
                Topology::Ambiguous
            );
        if !crossing {
            self.push_triangle(tri, &mut out.volume[sides[0].index()]);
            return;
        }
        if depth < self.options.geom_level {
            self.subdivide(tri, depth, out);
            return;
        }
        if !mixed {
            self.push_triangle(tri, &mut out.volume[sides[0].index()]);
            return;
        }
        let lone = lone_vertex(&sides);
        let (a, b, c) = (lone, (lone + 1) % 3, (lone + 2) % 3);
        let tp = linear_root(phi[a], phi[b]);
        let tq = linear_root(phi[a], phi[c]);
        let p = tri[a].lerp(tri[b], tp);
        let q = tri[a].lerp(tri[c], tq);
        self.straight_split(tri, lone, sides[lone], p, q, out);
    }

    fn cut_exact(&self, tri: [Point2; 3], depth: usize, out: &mut CellQuadrature) {
        let phi = tri.map(|p| self.ls.value(p));
        let sides = phi.map(|v| side_of(v, self.tol));
        let mixed = sides.iter().any(|&s| s != sides[0]);
        if !mixed {
            match edge_topology(self.ls, tri, self.tol, &phi, sides[0]) {
                Topology::Ambiguous if depth < MAX_RESOLVE_DEPTH => {
                    self.subdivide(tri, depth, out)
                }
                _ => self.push_triangle(tri, &mut out.volume[sides[0].index()]),
            }
            return;
        }
        let lone = lone_vertex(&sides);
        let (ia, ib, ic) = (lone, (lone + 1) % 3, (lone + 2) % 3);
        let (a, b, c) = (tri[ia], tri[ib], tri[ic]);
        // an edge between equal signs that is crossed twice
        if let LevelSet::Circle { .. } = self.ls {
            let bc_double = matches!(
                self.ls.segment_roots(b, c),
                Some(SegmentRoots::Two(t1, t2))
                    if t1 * b.distance(c) >= -self.tol
                        && (t2 - 1.0) * b.distance(c) <= self.tol
                        && (t2 - t1) * b.distance(c) > self.tol
            );
            if bc_double && depth < MAX_RESOLVE_DEPTH {
                self.subdivide(tri, depth, out);
                return;
            }
        }
        let tp = self.exact_root(a, b, phi[ia], phi[ib]);
        let tq = self.exact_root(a, c, phi[ia], phi[ic]);
        let p = a.lerp(b, tp);
        let q = a.lerp(c, tq);
        match *self.ls {
            LevelSet::Line { .. } => self.straight_split(tri, lone, sides[lone], p, q, out),
            LevelSet::Circle { center, radius } => {
                let ok = self.curved_split(tri, lone, sides[lone], center, radius, p, q, out);
                if !ok {
                    if depth < MAX_RESOLVE_DEPTH {
                        self.subdivide(tri, depth, out);
                    } else {
                        self.straight_split(tri, lone, sides[lone], p, q, out);
                    }
                }
            }
            LevelSet::Generic { .. } => unreachable!("generic level sets use cut_generic"),
        }
    }

    /// Root parameter along `a -> b` for an edge whose endpoints carry
    /// different (tie-broken) signs.
    fn exact_root(&self, a: Point2, b: Point2, fa: f64, fb: f64) -> f64 {
        let candidates = match self.ls.segment_roots(a, b) {
            Some(SegmentRoots::One(t)) => [Some(t), None],
            Some(SegmentRoots::Two(t1, t2)) => [Some(t1), Some(t2)],
            _ => [None, None],
        };
        let inside: Vec<f64> = candidates
            .iter()
            .flatten()
            .copied()
            .filter(|t| (0.0..=1.0).contains(t))
            .collect();
        match inside.as_slice() {
            [t] => *t,
            // both roots on a sign-changing edge only happen within the tie
            // tolerance; keep the one nearer the vertex that sits on Gamma
            [t1, t2] => {
                if fa.abs() < fb.abs() {
                    t1.min(*t2)
                } else {
                    t1.max(*t2)
                }
            }
            _ => {
                let t = candidates
                    .iter()
                    .flatten()
                    .copied()
                    .min_by(|x, y| dist01(*x).total_cmp(&dist01(*y)));
                match t {
                    Some(t) => t.clamp(0.0, 1.0),
                    None => {
                        if fa.abs() <= fb.abs() {
                            0.0
                        } else {
                            1.0
                        }
                    }
                }
            }
        }
    }

    fn straight_split(
        &self,
        tri: [Point2; 3],
        lone: usize,
        lone_side: Side,
        p: Point2,
        q: Point2,
        out: &mut CellQuadrature,
    ) {
        let a = tri[lone];
        let b = tri[(lone + 1) % 3];
        let c = tri[(lone + 2) % 3];
        let other = lone_side.other();
        self.push_triangle([a, p, q], &mut out.volume[lone_side.index()]);
        self.push_triangle([p, b, c], &mut out.volume[other.index()]);
        self.push_triangle([p, c, q], &mut out.volume[other.index()]);
        let len = p.distance(q);
        if len > 0.0 {
            for (s, w) in self.segment.iter() {
                let x = p.lerp(q, s);
                out.interface.push(x, w * len, self.ls.unit_normal(x));
            }
        }
    }

    /// Splits along the exact arc between `p` (on edge a-b) and `q` (on edge
    /// a-c). Returns false when no star-shaped decomposition exists.
    #[allow(clippy::too_many_arguments)]
    fn curved_split(
        &self,
        tri: [Point2; 3],
        lone: usize,
        lone_side: Side,
        center: Point2,
        radius: f64,
        p: Point2,
        q: Point2,
        out: &mut CellQuadrature,
    ) -> bool {
        let a = tri[lone];
        let b = tri[(lone + 1) % 3];
        let c = tri[(lone + 2) % 3];
        let th0 = angle_of(p - center);
        let mut dth = angle_of(q - center) - th0;
        if dth > PI {
            dth -= 2.0 * PI;
        } else if dth <= -PI {
            dth += 2.0 * PI;
        }
        if dth.abs() > MAX_ARC_ANGLE {
            return false;
        }
        let th1 = th0 + dth;
        let arc = Arc {
            center,
            radius,
            th0,
            th1,
        };
        let scale = radius * radius;
        // the arc has to stay inside the triangle
        if dth.abs() > 0.0 {
            let mid = arc.point(0.5 * (th0 + th1));
            let slack = 1e-9 * scale.max(signed_area(a, b, c).abs());
            let inside = signed_area(a, b, mid) >= -slack
                && signed_area(b, c, mid) >= -slack
                && signed_area(c, a, mid) >= -slack;
            let inside = if signed_area(a, b, c) > 0.0 {
                inside
            } else {
                signed_area(a, b, mid) <= slack
                    && signed_area(b, c, mid) <= slack
                    && signed_area(c, a, mid) <= slack
            };
            if !inside {
                return false;
            }
        }
        // sweeps must carry the orientation of the triangle
        let orient = if signed_area(a, b, c) >= 0.0 { 1.0 } else { -1.0 };
        let s_lone = orient * dth.signum();
        let eps = 1e-12 * scale;
        if arc.signed_margin(a, s_lone) < -eps {
            return false;
        }
        let mb = arc.signed_margin(b, -s_lone);
        let mc = arc.signed_margin(c, -s_lone);
        if mb.max(mc) < -eps {
            return false;
        }
        let other = lone_side.other();
        self.curved_triangle(a, &arc, &mut out.volume[lone_side.index()]);
        {
            let rule = &mut out.volume[other.index()];
            if mb >= mc {
                self.push_triangle([b, c, q], rule);
                self.curved_triangle(b, &arc, rule);
            } else {
                self.push_triangle([p, b, c], rule);
                self.curved_triangle(c, &arc, rule);
            }
        }
        if dth != 0.0 {
            for (s, w) in self.angular.iter() {
                let th = th0 + s * dth;
                let e = Point2::new(th.cos(), th.sin());
                out.interface
                    .push(center + e * radius, w * radius * dth.abs(), e);
            }
        }
        true
    }

    /// Region swept by segments from `apex` to the arc.
    fn curved_triangle(&self, apex: Point2, arc: &Arc, out: &mut QuadRule) {
        let dth = arc.th1 - arc.th0;
        if dth == 0.0 {
            return;
        }
        for (s, ws) in self.angular.iter() {
            let th = arc.th0 + s * dth;
            let x = arc.point(th);
            let dx = Point2::new(-th.sin(), th.cos()) * arc.radius;
            let jac = ((x - apex).cross(dx) * dth).abs();
            if jac == 0.0 {
                continue;
            }
            for (t, wt) in self.radial.iter() {
                out.push(apex.lerp(x, t), ws * wt * t * jac);
            }
        }
    }
}

struct Arc {
    center: Point2,
    radius: f64,
    th0: f64,
    th1: f64,
}

impl Arc {
    fn point(&self, th: f64) -> Point2 {
        self.center + Point2::new(th.cos(), th.sin()) * self.radius
    }

    /// Smallest value of `sign * r (r - (v - c) . e(theta))` over the arc.
    /// The sweep from `v` has Jacobian `r (r - (v - c) . e(theta)) dtheta`,
    /// so a nonnegative margin means a one-to-one sweep of the given
    /// orientation.
    fn signed_margin(&self, v: Point2, sign: f64) -> f64 {
        let d = v - self.center;
        let g = |th: f64| sign * self.radius * (self.radius - d.dot(Point2::new(th.cos(), th.sin())));
        let (lo, hi) = if self.th0 <= self.th1 {
            (self.th0, self.th1)
        } else {
            (self.th1, self.th0)
        };
        let mut min = g(lo).min(g(hi));
        let phase = angle_of(d);
        for extra in [phase, phase + PI] {
            // any representative of the extremum angle inside [lo, hi]
            let mut t = extra;
            while t < lo {
                t += 2.0 * PI;
            }
            while t - 2.0 * PI >= lo {
                t -= 2.0 * PI;
            }
            if t <= hi {
                min = min.min(g(t));
            }
        }
        min
    }
}

fn angle_of(v: Point2) -> f64 {
    v.y.atan2(v.x)
}

fn dist01(t: f64) -> f64 {
    if t < 0.0 {
        -t
    } else if t > 1.0 {
        t - 1.0
    } else {
        0.0
    }
}

fn linear_root(fa: f64, fb: f64) -> f64 {
    if fa == fb {
        0.5
    } else {
        (fa / (fa - fb)).clamp(0.0, 1.0)
    }
}

/// Index of the vertex whose side differs from the other two.
fn lone_vertex(sides: &[Side; 3]) -> usize {
    if sides[1] == sides[2] {
        0
    } else if sides[0] == sides[2] {
        1
    } else {
        2
    }
}

fn split4(t: [Point2; 3]) -> [[Point2; 3]; 4] {
    let m01 = t[0].lerp(t[1], 0.5);
    let m12 = t[1].lerp(t[2], 0.5);
    let m20 = t[2].lerp(t[0], 0.5);
    [
        [t[0], m01, m20],
        [m01, t[1], m12],
        [m20, m12, t[2]],
        [m01, m12, m20],
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_structured_mesh, BoxDomain};
    use crate::quadrature::gauss_legendre;
    use core::f64::consts::PI;
    use proptest::prelude::*;

    fn unit_triangle() -> [Point2; 3] {
        [Point2::new(0.0, 0.0), Point2::new(1.0, 0.0), Point2::new(0.0, 1.0)]
    }

    fn opts(order: usize, geom_level: usize) -> QuadratureOptions {
        QuadratureOptions {
            volume_order: order,
            interface_order: order,
            geom_level,
        }
    }

    fn circle_setup(n: usize, geom_level: usize) -> (Mesh, CellClassification, CutQuadrature) {
        let mesh = build_structured_mesh(n, BoxDomain::symmetric_square()).unwrap();
        let ls = LevelSet::circle(Point2::new(0.0, 0.0), 0.5);
        let cls = classify_cells(&mesh, &ls, 1e-12 * mesh.h());
        let q = CutQuadrature::build(&mesh, &cls, &ls, opts(4, geom_level)).unwrap();
        (mesh, cls, q)
    }

    /// Sutherland-Hodgman clip of a polygon to `{phi <= 0}` for an affine phi.
    fn clip(poly: &[Point2], phi: impl Fn(Point2) -> f64) -> Vec<Point2> {
        let mut out = Vec::new();
        for i in 0..poly.len() {
            let (a, b) = (poly[i], poly[(i + 1) % poly.len()]);
            let (fa, fb) = (phi(a), phi(b));
            if fa <= 0.0 {
                out.push(a);
            }
            if (fa < 0.0 && fb > 0.0) || (fa > 0.0 && fb < 0.0) {
                out.push(a.lerp(b, fa / (fa - fb)));
            }
        }
        out
    }

    /// `int x^i y^j` over a counter-clockwise polygon by Green's theorem:
    /// `int_P f = oint x^(i+1) y^j / (i+1) dy`.
    fn polygon_monomial(poly: &[Point2], i: i32, j: i32) -> f64 {
        let (nodes, weights) = gauss_legendre(12);
        let mut s = 0.0;
        for e in 0..poly.len() {
            let (a, b) = (poly[e], poly[(e + 1) % poly.len()]);
            for (t, w) in nodes.iter().zip(&weights) {
                let p = a.lerp(b, *t);
                s += w * p.x.powi(i + 1) * p.y.powi(j) / (i + 1) as f64 * (b.y - a.y);
            }
        }
        s
    }

    #[test]
    fn far_cell_is_inside_two() {
        let mesh = build_structured_mesh(10, BoxDomain::symmetric_square()).unwrap();
        let ls = LevelSet::circle(Point2::new(0.0, 0.0), 0.5);
        let tri = [Point2::new(0.6, 0.6), Point2::new(0.7, 0.6), Point2::new(0.6, 0.7)];
        assert_eq!(classify_triangle(&ls, tri, 1e-12).0, CellTag::Inside2);
        let cls = classify_cells(&mesh, &ls, 1e-12);
        let c = (0..mesh.num_cells())
            .find(|&c| point_in_triangle(Point2::new(0.65, 0.62), mesh.cell_points(c)))
            .unwrap();
        assert_eq!(cls.tag(c), CellTag::Inside2);
        assert!(cls.tag(
            (0..mesh.num_cells())
                .find(|&c| point_in_triangle(Point2::new(0.01, 0.02), mesh.cell_points(c)))
                .unwrap()
        ) == CellTag::Inside1);
    }

    #[test]
    fn cell_containing_interface_point_is_cut() {
        let mesh = build_structured_mesh(5, BoxDomain::symmetric_square()).unwrap();
        let ls = LevelSet::circle(Point2::new(0.0, 0.0), 0.5);
        let cls = classify_cells(&mesh, &ls, 1e-12);
        let c = (0..mesh.num_cells())
            .find(|&c| point_in_triangle(Point2::new(0.5, 0.0), mesh.cell_points(c)))
            .unwrap();
        assert_eq!(cls.tag(c), CellTag::Cut);
    }

    #[test]
    fn vertical_line_matches_vertex_sign_oracle() {
        let mesh = build_structured_mesh(4, BoxDomain::unit_square()).unwrap();
        let ls = LevelSet::vertical_line(0.31);
        let cls = classify_cells(&mesh, &ls, 1e-12);
        let mut cut = 0;
        for c in 0..mesh.num_cells() {
            let xs = mesh.cell_points(c).map(|p| p.x - 0.31);
            let expected = if xs.iter().all(|&v| v < 0.0) {
                CellTag::Inside1
            } else if xs.iter().all(|&v| v > 0.0) {
                CellTag::Inside2
            } else {
                cut += 1;
                CellTag::Cut
            };
            assert_eq!(cls.tag(c), expected, "cell {c}");
        }
        // one column of squares, two triangles each
        assert_eq!(cut, 8);
        assert_eq!(cls.num_cut(), 8);
    }

    #[test]
    fn uncut_triangle_area() {
        let q = cut_triangle(&LevelSet::vertical_line(2.0), unit_triangle(), opts(2, 0), 1e-14);
        assert!((q.volume[0].total_weight() - 0.5).abs() < 1e-15);
        assert!(q.volume[1].is_empty() && q.interface.is_empty());
    }

    #[test]
    fn half_plane_area_of_unit_triangle() {
        let q = cut_triangle(&LevelSet::vertical_line(0.5), unit_triangle(), opts(2, 0), 1e-14);
        assert!((q.volume[0].total_weight() - 0.375).abs() < 1e-14);
        assert!((q.volume[1].total_weight() - 0.125).abs() < 1e-14);
    }

    #[test]
    fn vertical_chord_through_unit_triangle() {
        let q = cut_triangle(&LevelSet::vertical_line(0.5), unit_triangle(), opts(3, 0), 1e-14);
        assert!((q.interface.total_weight() - 0.5).abs() < 1e-14);
        for (p, _, n) in q.interface.iter() {
            assert!((p.x - 0.5).abs() < 1e-15 && (0.0..=0.5).contains(&p.y));
            assert!((n.x - 1.0).abs() < 1e-15 && n.y.abs() < 1e-15);
        }
    }

    #[test]
    fn line_rules_are_exact_for_polynomials() {
        let tri = [Point2::new(0.1, -0.2), Point2::new(0.9, 0.3), Point2::new(0.2, 0.8)];
        let ls = LevelSet::line(Point2::new(0.4, 0.1), Point2::new(0.3, 1.0));
        let phi = |p: Point2| ls.value(p);
        let order = 5;
        let q = cut_triangle(&ls, tri, opts(order, 0), 1e-14);
        let ccw = |mut v: Vec<Point2>| {
            let area: f64 = (0..v.len()).map(|i| v[i].cross(v[(i + 1) % v.len()])).sum();
            if area < 0.0 {
                v.reverse();
            }
            v
        };
        let part1 = ccw(clip(&tri, phi));
        let part2 = ccw(clip(&tri, |p| -phi(p)));
        // interface chord endpoints
        let chord: Vec<Point2> = part1.iter().copied().filter(|p| phi(*p).abs() < 1e-14).collect();
        assert_eq!(chord.len(), 2);
        for i in 0..=order as i32 {
            for j in 0..=(order as i32 - i) {
                let f = |p: Point2| p.x.powi(i) * p.y.powi(j);
                let v1 = q.volume[0].integrate(f);
                let v2 = q.volume[1].integrate(f);
                assert!((v1 - polygon_monomial(&part1, i, j)).abs() < 1e-14, "({i},{j})");
                assert!((v2 - polygon_monomial(&part2, i, j)).abs() < 1e-14, "({i},{j})");
                let (nodes, weights) = gauss_legendre(8);
                let len = chord[0].distance(chord[1]);
                let exact: f64 = nodes
                    .iter()
                    .zip(&weights)
                    .map(|(t, w)| w * len * f(chord[0].lerp(chord[1], *t)))
                    .sum();
                let got: f64 = q.interface.iter().map(|(p, w, _)| w * f(p)).sum();
                assert!((got - exact).abs() < 1e-14, "interface ({i},{j})");
            }
        }
    }

    #[test]
    fn circumference_and_disk_area() {
        let (mesh, _, q) = circle_setup(16, 3);
        assert!((q.interface_length() - PI).abs() < 1e-6);
        assert!((q.subdomain_area(Side::One) - PI * 0.25).abs() < 1e-6);
        let total = q.subdomain_area(Side::One) + q.subdomain_area(Side::Two);
        assert!((total - 4.0).abs() < 1e-10);
        for c in 0..mesh.num_cells() {
            let cq = q.cell(c);
            let sum = cq.volume[0].total_weight() + cq.volume[1].total_weight();
            assert!((sum - mesh.cell_area(c)).abs() < 1e-10 * mesh.cell_area(c).max(1e-300));
        }
    }

    #[test]
    fn arc_points_lie_on_circle() {
        let (_, cls, q) = circle_setup(13, 3);
        let mut count = 0;
        for c in cls.cut_cells() {
            for (p, w, n) in q.cell(c).interface.iter() {
                assert!((p.norm() - 0.5).abs() < 1e-12);
                assert!(w > 0.0);
                assert!((n.norm() - 1.0).abs() < 1e-12);
                let eps = 1e-6;
                let phi = |x: Point2| x.norm() - 0.5;
                assert!(phi(p + n * eps) > phi(p));
                count += 1;
            }
        }
        assert!(count > 0);
    }

    #[test]
    fn interface_rule_is_exact_on_circle_polynomials() {
        // int_Gamma x^2 ds = pi r^3 on a circle of radius r
        let (_, _, q) = circle_setup(16, 3);
        let s: f64 = q
            .cells()
            .iter()
            .flat_map(|c| c.interface.iter())
            .map(|(p, w, _)| w * p.x * p.x)
            .sum();
        assert!((s - PI * 0.125).abs() < 1e-10);
    }

    #[test]
    fn generic_circle_partition_improves_with_depth() {
        let mesh = build_structured_mesh(8, BoxDomain::symmetric_square()).unwrap();
        let ls = LevelSet::generic(
            |p| p.norm() - 0.5,
            |p| p.normalized(),
        );
        let cls = classify_cells(&mesh, &ls, 1e-12);
        let mut errors = Vec::new();
        for level in [1, 3, 5] {
            let q = CutQuadrature::build(&mesh, &cls, &ls, opts(2, level)).unwrap();
            let total = q.subdomain_area(Side::One) + q.subdomain_area(Side::Two);
            assert!((total - 4.0).abs() < 1e-12);
            errors.push((q.subdomain_area(Side::One) - PI * 0.25).abs());
        }
        // second-order geometry: each two levels gain roughly 16
        assert!(errors[1] < errors[0] / 8.0);
        assert!(errors[2] < errors[1] / 8.0);
    }

    #[test]
    fn circle_enclosed_in_a_cell() {
        let tri = [Point2::new(-1.0, -1.0), Point2::new(2.0, -1.0), Point2::new(-1.0, 2.0)];
        let ls = LevelSet::circle(Point2::new(0.0, 0.0), 0.3);
        assert_eq!(classify_triangle(&ls, tri, 1e-12).0, CellTag::Cut);
        let q = cut_triangle(&ls, tri, opts(4, 0), 1e-12);
        assert!((q.volume[0].total_weight() - PI * 0.09).abs() < 1e-10);
        assert!((q.interface.total_weight() - 2.0 * PI * 0.3).abs() < 1e-10);
        assert!((q.volume[0].total_weight() + q.volume[1].total_weight() - 4.5).abs() < 1e-10);
    }

    #[test]
    fn edge_crossed_twice() {
        // the circle dips into the triangle through its bottom edge only
        let tri = [Point2::new(-1.0, 0.0), Point2::new(1.0, 0.0), Point2::new(0.0, 1.0)];
        let ls = LevelSet::circle(Point2::new(0.0, -0.4), 0.5);
        assert_eq!(classify_triangle(&ls, tri, 1e-12).0, CellTag::Cut);
        let q = cut_triangle(&ls, tri, opts(4, 0), 1e-12);
        // circular segment of height 0.1: r^2 acos(d/r) - d sqrt(r^2 - d^2)
        let (r, d): (f64, f64) = (0.5, 0.4);
        let segment = r * r * (d / r).acos() - d * (r * r - d * d).sqrt();
        assert!((q.volume[0].total_weight() - segment).abs() < 1e-10);
        assert!((q.interface.total_weight() - 2.0 * r * (d / r).acos()).abs() < 1e-10);
    }

    #[test]
    fn vertex_on_circle() {
        let mesh = build_structured_mesh(8, BoxDomain::symmetric_square()).unwrap();
        let ls = LevelSet::circle(Point2::new(0.0, 0.0), 0.5);
        let cls = classify_cells(&mesh, &ls, 1e-12 * mesh.h());
        let q = CutQuadrature::build(&mesh, &cls, &ls, opts(4, 2)).unwrap();
        assert!((q.interface_length() - PI).abs() < 1e-10);
        assert!((q.subdomain_area(Side::One) - PI * 0.25).abs() < 1e-10);
        // every cut cell has both sides and a piece of the interface
        assert!(q.empty_interface_cells().is_empty());
        for c in cls.cut_cells() {
            for side in Side::BOTH {
                assert!(q.cell(c).volume(side).total_weight() > 0.0, "cell {c} {side:?}");
            }
        }
    }

    #[test]
    fn cells_touching_at_a_vertex_are_not_cut() {
        let ls = LevelSet::circle(Point2::new(0.0, 0.0), 0.5);
        let tol = 1e-12;
        // vertex on the circle, the rest inside: the disk holds the triangle
        let inner = [Point2::new(0.0, -0.5), Point2::new(0.25, -0.25), Point2::new(0.0, -0.25)];
        assert_eq!(classify_triangle(&ls, inner, tol).0, CellTag::Inside1);
        // the rest outside, touching only at the vertex
        let outer = [Point2::new(0.0, -0.5), Point2::new(0.0, -0.75), Point2::new(0.25, -0.75)];
        assert_eq!(classify_triangle(&ls, outer, tol).0, CellTag::Inside2);
        // the rest outside, but an edge passes through the disk
        let through = [Point2::new(0.0, -0.5), Point2::new(0.5, -0.3), Point2::new(0.6, -0.6)];
        assert_eq!(classify_triangle(&ls, through, tol).0, CellTag::Cut);
        // two vertices on the circle, the third inside
        let chord = [Point2::new(0.5, 0.0), Point2::new(0.0, 0.5), Point2::new(0.0, 0.0)];
        assert_eq!(classify_triangle(&ls, chord, tol).0, CellTag::Inside1);
        // a mesh edge on a straight interface keeps one cut neighbour
        let line = LevelSet::vertical_line(0.0);
        let left = [Point2::new(0.0, 0.0), Point2::new(0.0, 1.0), Point2::new(-1.0, 0.0)];
        let right = [Point2::new(0.0, 0.0), Point2::new(1.0, 0.0), Point2::new(0.0, 1.0)];
        let tags = [classify_triangle(&line, left, tol).0, classify_triangle(&line, right, tol).0];
        assert!(tags.contains(&CellTag::Cut), "{tags:?}");
    }

    proptest! {
        #[test]
        fn random_circle_cuts_are_consistent(
            cx in -0.5f64..0.5, cy in -0.5f64..0.5, r in 0.05f64..1.2,
            ax in -1.0f64..1.0, ay in -1.0f64..1.0,
            bx in -1.0f64..1.0, by in -1.0f64..1.0,
            qx in -1.0f64..1.0, qy in -1.0f64..1.0,
        ) {
            let tri = [Point2::new(ax, ay), Point2::new(bx, by), Point2::new(qx, qy)];
            let area = signed_area(tri[0], tri[1], tri[2]).abs();
            prop_assume!(area > 1e-3);
            let ls = LevelSet::circle(Point2::new(cx, cy), r);
            let q = cut_triangle(&ls, tri, opts(4, 0), 1e-12);
            check_weights(0, &q).unwrap();
            let sum = q.volume[0].total_weight() + q.volume[1].total_weight();
            prop_assert!((sum - area).abs() < 1e-10 * area.max(1.0));
            for (p, _, n) in q.interface.iter() {
                prop_assert!(((p - Point2::new(cx, cy)).norm() - r).abs() < 1e-12);
                prop_assert!((n.norm() - 1.0).abs() < 1e-12);
            }
            for (p, _) in q.volume[0].iter() {
                prop_assert!(ls.value(p) <= 1e-9);
            }
            for (p, _) in q.volume[1].iter() {
                prop_assert!(ls.value(p) >= -1e-9);
            }
        }

        #[test]
        fn vertex_on_circle_partition(
            theta in 0.0f64..6.3, r in 0.1f64..1.0,
            bx in -1.0f64..1.0, by in -1.0f64..1.0,
            qx in -1.0f64..1.0, qy in -1.0f64..1.0,
        ) {
            let a = Point2::new(theta.cos(), theta.sin()) * r;
            let tri = [a, Point2::new(bx, by), Point2::new(qx, qy)];
            let area = signed_area(tri[0], tri[1], tri[2]).abs();
            prop_assume!(area > 1e-3);
            let ls = LevelSet::circle(Point2::new(0.0, 0.0), r);
            let q = cut_triangle(&ls, tri, opts(4, 0), 1e-12);
            check_weights(0, &q).unwrap();
            let sum = q.volume[0].total_weight() + q.volume[1].total_weight();
            prop_assert!((sum - area).abs() < 1e-10 * area.max(1.0));
            for (p, _) in q.volume[0].iter() {
                prop_assert!(ls.value(p) <= 1e-9);
            }
            for (p, _) in q.volume[1].iter() {
                prop_assert!(ls.value(p) >= -1e-9);
            }
        }

        #[test]
        fn random_line_partition(
            px in 0.0f64..1.0, py in 0.0f64..1.0, angle in 0.0f64..6.3,
        ) {
            let ls = LevelSet::line(Point2::new(px, py), Point2::new(angle.cos(), angle.sin()));
            let q = cut_triangle(&ls, unit_triangle(), opts(2, 0), 1e-14);
            let sum = q.volume[0].total_weight() + q.volume[1].total_weight();
            prop_assert!((sum - 0.5).abs() < 1e-14);
            for (p, _, n) in q.interface.iter() {
                prop_assert!(ls.value(p).abs() < 1e-14);
                prop_assert!(ls.value(p + n * 1e-3) > 0.0);
            }
        }
    }
}
