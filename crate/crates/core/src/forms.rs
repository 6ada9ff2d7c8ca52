//! Bilinear forms, right-hand sides and the assembled linear systems.
//!
//! With `[[v]] = v_1 - v_2` and `{{w}} = w_1 w|_1 + w_2 w|_2` the penalised
//! operator is
//!
//! ```text
//! a(u, v) = sum_i mu_i (grad u_i, grad v_i)_{Omega_i}
//!         - <{{mu grad u . n}}, [[v]]> + <[[u]], {{mu grad v . n}}>
//!         + <c_0 h^{-1} [[u]], [[v]]>
//! l(v)    = (f, v) + <g_N, w_2 v_1 + w_1 v_2> + <g_D, {{mu grad v . n}}>
//!         + <c_0 h^{-1} g_D, [[v]]>
//! ```
//!
//! The penalty-free operator drops both `c_0 h^{-1}` terms and adds the
//! ghost penalty `s_h`. The adjoint forms swap the signs of the two
//! coupling terms.

use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::basis::MAX_LOCAL;
use crate::cut::CutQuadrature;
use crate::error::{Error, Result};
use crate::mesh::{FaceCells, Mesh};
use crate::point::Point2;
use crate::quadrature::LineRule;
use crate::space::{AffineMap, FeSpace};
use crate::sparse::{CsrMatrix, TripletBuilder};
use crate::Side;
#[allow(unused_imports)]
use crate::float::Float;

/// Harmonic averaging weights and the interface penalty scale.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NitscheWeights {
    pub w1: f64,
    pub w2: f64,
    /// `{{mu}} = w1 mu1 + w2 mu2 = 2 mu1 mu2 / (mu1 + mu2)`
    pub c0: f64,
}

impl NitscheWeights {
    pub fn new(mu1: f64, mu2: f64) -> Result<Self> {
        if !(mu1 > 0.0 && mu2 > 0.0) || !mu1.is_finite() || !mu2.is_finite() {
            return Err(Error::InvalidArgument("diffusion coefficients must be positive"));
        }
        let s = mu1 + mu2;
        let w1 = mu2 / s;
        let w2 = mu1 / s;
        Ok(Self {
            w1,
            w2,
            c0: w1 * mu1 + w2 * mu2,
        })
    }

    pub fn weight(&self, side: Side) -> f64 {
        match side {
            Side::One => self.w1,
            Side::Two => self.w2,
        }
    }
}

pub fn compute_weights(mu1: f64, mu2: f64) -> Result<NitscheWeights> {
    NitscheWeights::new(mu1, mu2)
}

pub type SideField = Arc<dyn Fn(Side, Point2) -> f64 + Send + Sync>;
pub type SideGradient = Arc<dyn Fn(Side, Point2) -> Point2 + Send + Sync>;
pub type SideHessian = Arc<dyn Fn(Side, Point2) -> [f64; 3] + Send + Sync>;
pub type InterfaceField = Arc<dyn Fn(Point2) -> f64 + Send + Sync>;

/// Exact solution pair `(u_1, u_2)` with derivatives.
#[derive(Clone)]
pub struct ExactSolution {
    pub value: SideField,
    pub gradient: SideGradient,
    /// `[u_xx, u_xy, u_yy]`, used for `|u_i|_{2, Omega_i}`.
    pub hessian: Option<SideHessian>,
}

impl fmt::Debug for ExactSolution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ExactSolution")
            .field("hessian", &self.hessian.is_some())
            .finish_non_exhaustive()
    }
}

/// Coefficients and data of the interface problem.
#[derive(Clone)]
pub struct ProblemData {
    mu: [f64; 2],
    pub source: SideField,
    /// `g_D = [[u]]` on the interface
    pub jump_value: InterfaceField,
    /// `g_N = [[mu grad u . n]]` on the interface
    pub jump_flux: InterfaceField,
    /// Dirichlet trace on the outer boundary, per side.
    pub boundary: SideField,
    pub exact: Option<ExactSolution>,
}

impl fmt::Debug for ProblemData {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProblemData")
            .field("mu", &self.mu)
            .field("exact", &self.exact)
            .finish_non_exhaustive()
    }
}

impl ProblemData {
    /// Homogeneous data with the given coefficients.
    pub fn new(mu1: f64, mu2: f64) -> Result<Self> {
        NitscheWeights::new(mu1, mu2)?;
        Ok(Self {
            mu: [mu1, mu2],
            source: Arc::new(|_, _| 0.0),
            jump_value: Arc::new(|_| 0.0),
            jump_flux: Arc::new(|_| 0.0),
            boundary: Arc::new(|_, _| 0.0),
            exact: None,
        })
    }

    pub fn mu(&self, side: Side) -> f64 {
        self.mu[side.index()]
    }

    pub fn mus(&self) -> [f64; 2] {
        self.mu
    }

    pub fn weights(&self) -> NitscheWeights {
        NitscheWeights::new(self.mu[0], self.mu[1]).expect("validated on construction")
    }

    pub fn with_source(mut self, f: impl Fn(Side, Point2) -> f64 + Send + Sync + 'static) -> Self {
        self.source = Arc::new(f);
        self
    }

    pub fn with_jump_value(mut self, g: impl Fn(Point2) -> f64 + Send + Sync + 'static) -> Self {
        self.jump_value = Arc::new(g);
        self
    }

    pub fn with_jump_flux(mut self, g: impl Fn(Point2) -> f64 + Send + Sync + 'static) -> Self {
        self.jump_flux = Arc::new(g);
        self
    }

    pub fn with_boundary(mut self, u: impl Fn(Side, Point2) -> f64 + Send + Sync + 'static) -> Self {
        self.boundary = Arc::new(u);
        self
    }

    pub fn with_exact(mut self, exact: ExactSolution) -> Self {
        self.exact = Some(exact);
        self
    }
}

/// Which method to discretise with.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Variant {
    /// Interface penalty `c_0 h^{-1}`; `ghost_penalty` optionally adds `s_h`
    /// for small-cut conditioning (off by default).
    Penalized { ghost_penalty: Option<f64> },
    /// No interface penalty, ghost penalty with parameter `gamma_g`.
    PenaltyFree { gamma_g: f64 },
}

impl Variant {
    pub const fn penalized() -> Self {
        Variant::Penalized {
            ghost_penalty: None,
        }
    }

    pub fn has_penalty(&self) -> bool {
        matches!(self, Variant::Penalized { .. })
    }

    pub fn ghost_penalty(&self) -> Option<f64> {
        match *self {
            Variant::Penalized { ghost_penalty } => ghost_penalty,
            Variant::PenaltyFree { gamma_g } => Some(gamma_g),
        }
    }

    fn terms(&self, coupling: Coupling) -> OperatorTerms {
        OperatorTerms {
            gradient: true,
            coupling: Some(coupling),
            penalty: self.has_penalty(),
            ghost_penalty: self.ghost_penalty().filter(|g| *g != 0.0),
        }
    }
}

/// Sign convention of the two consistency terms on the interface.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Coupling {
    /// `-<{{mu grad u . n}}, [[v]]> + <[[u]], {{mu grad v . n}}>`
    Primal,
    /// `+<{{mu grad u . n}}, [[v]]> - <[[u]], {{mu grad v . n}}>`
    Adjoint,
}

/// Selects the terms of an operator to assemble.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OperatorTerms {
    pub gradient: bool,
    pub coupling: Option<Coupling>,
    pub penalty: bool,
    pub ghost_penalty: Option<f64>,
}

impl OperatorTerms {
    pub const NONE: OperatorTerms = OperatorTerms {
        gradient: false,
        coupling: None,
        penalty: false,
        ghost_penalty: None,
    };
}

/// Dirichlet elimination bookkeeping.
#[derive(Clone, Debug, PartialEq)]
pub struct Constraints {
    global_to_free: Vec<Option<usize>>,
    free_to_global: Vec<usize>,
    /// prescribed values, indexed by global unknown (zero where free)
    values: Vec<f64>,
}

impl Constraints {
    /// Interpolates the boundary trace at every constrained node.
    pub fn from_space(space: &FeSpace, boundary: &SideField) -> Self {
        let n = space.num_dofs();
        let mut global_to_free = vec![None; n];
        let mut free_to_global = Vec::new();
        let mut values = vec![0.0; n];
        for d in 0..n {
            if space.is_constrained(d) {
                values[d] = boundary(space.dof_side(d), space.dof_point(d));
            } else {
                global_to_free[d] = Some(free_to_global.len());
                free_to_global.push(d);
            }
        }
        Self {
            global_to_free,
            free_to_global,
            values,
        }
    }

    pub fn num_free(&self) -> usize {
        self.free_to_global.len()
    }

    pub fn num_total(&self) -> usize {
        self.global_to_free.len()
    }

    pub fn free_index(&self, global: usize) -> Option<usize> {
        self.global_to_free[global]
    }

    pub fn free_to_global(&self) -> &[usize] {
        &self.free_to_global
    }

    pub fn constrained_value(&self, global: usize) -> f64 {
        self.values[global]
    }

    /// Full coefficient vector from free values plus the prescribed ones.
    pub fn expand(&self, free: &[f64]) -> Vec<f64> {
        assert_eq!(free.len(), self.num_free());
        let mut full = self.values.clone();
        for (f, &g) in self.free_to_global.iter().enumerate() {
            full[g] = free[f];
        }
        full
    }

    /// Free entries of a full vector.
    pub fn restrict(&self, full: &[f64]) -> Vec<f64> {
        self.free_to_global.iter().map(|&g| full[g]).collect()
    }

    /// Submatrix on free rows and columns.
    pub fn restrict_matrix(&self, full: &CsrMatrix) -> CsrMatrix {
        let n = self.num_free();
        let mut b = TripletBuilder::with_capacity(n, n, full.nnz());
        for (fi, &gi) in self.free_to_global.iter().enumerate() {
            for (gj, v) in full.row(gi) {
                if let Some(fj) = self.global_to_free[gj] {
                    b.push(fi, fj, v);
                }
            }
        }
        b.build()
    }

    /// Free rows of `rhs - A g` where `g` holds the prescribed values.
    pub fn lift_rhs(&self, full: &CsrMatrix, rhs: &[f64]) -> Vec<f64> {
        self.free_to_global
            .iter()
            .map(|&gi| {
                let lift: f64 = full
                    .row(gi)
                    .filter(|(gj, _)| self.global_to_free[*gj].is_none())
                    .map(|(gj, v)| v * self.values[gj])
                    .sum();
                rhs[gi] - lift
            })
            .collect()
    }
}

/// Operator on the free unknowns with its right-hand side.
#[derive(Clone, Debug)]
pub struct LinearSystem {
    pub matrix: CsrMatrix,
    pub rhs: Vec<f64>,
    pub constraints: Constraints,
}

impl LinearSystem {
    pub fn size(&self) -> usize {
        self.rhs.len()
    }

    /// Full coefficient vector for a solution on the free unknowns.
    pub fn expand(&self, free_solution: &[f64]) -> Vec<f64> {
        self.constraints.expand(free_solution)
    }
}

pub fn assemble_penalized(
    mesh: &Mesh,
    quad: &CutQuadrature,
    space: &FeSpace,
    data: &ProblemData,
) -> Result<LinearSystem> {
    assemble(mesh, quad, space, data, Variant::penalized())
}

/// Matrix of `a*` on the free unknowns.
pub fn assemble_adjoint_penalized(
    mesh: &Mesh,
    quad: &CutQuadrature,
    space: &FeSpace,
    data: &ProblemData,
) -> Result<CsrMatrix> {
    assemble_adjoint(mesh, quad, space, data, Variant::penalized())
}

pub fn assemble_penalty_free(
    mesh: &Mesh,
    quad: &CutQuadrature,
    space: &FeSpace,
    data: &ProblemData,
    gamma_g: f64,
) -> Result<LinearSystem> {
    assemble(mesh, quad, space, data, Variant::PenaltyFree { gamma_g })
}

/// Matrix of `a_0* + s_h` on the free unknowns.
pub fn assemble_adjoint_penalty_free(
    mesh: &Mesh,
    quad: &CutQuadrature,
    space: &FeSpace,
    data: &ProblemData,
    gamma_g: f64,
) -> Result<CsrMatrix> {
    assemble_adjoint(mesh, quad, space, data, Variant::PenaltyFree { gamma_g })
}

/// Assembles the system of `variant` with Dirichlet unknowns eliminated.
pub fn assemble(
    mesh: &Mesh,
    quad: &CutQuadrature,
    space: &FeSpace,
    data: &ProblemData,
    variant: Variant,
) -> Result<LinearSystem> {
    if let Variant::PenaltyFree { gamma_g } = variant {
        if !(gamma_g >= 0.0) {
            return Err(Error::InvalidArgument("ghost penalty parameter must be non-negative"));
        }
    }
    let full = assemble_operator(mesh, quad, space, data, variant.terms(Coupling::Primal))?;
    let rhs = assemble_rhs(mesh, quad, space, data, variant.has_penalty())?;
    let constraints = Constraints::from_space(space, &data.boundary);
    let matrix = constraints.restrict_matrix(&full);
    let rhs = constraints.lift_rhs(&full, &rhs);
    Ok(LinearSystem {
        matrix,
        rhs,
        constraints,
    })
}

/// Adjoint operator of `variant` on the free unknowns.
pub fn assemble_adjoint(
    mesh: &Mesh,
    quad: &CutQuadrature,
    space: &FeSpace,
    data: &ProblemData,
    variant: Variant,
) -> Result<CsrMatrix> {
    let full = assemble_operator(mesh, quad, space, data, variant.terms(Coupling::Adjoint))?;
    let constraints = Constraints::from_space(space, &data.boundary);
    Ok(constraints.restrict_matrix(&full))
}

fn check_consistency(mesh: &Mesh, quad: &CutQuadrature, space: &FeSpace) -> Result<()> {
    if quad.num_cells() != mesh.num_cells() {
        return Err(Error::QuadratureMismatch {
            expected: quad.num_cells(),
            found: mesh.num_cells(),
        });
    }
    if space.num_cells() != mesh.num_cells() {
        return Err(Error::InvalidArgument("space was built on another mesh"));
    }
    for c in 0..mesh.num_cells() {
        let q = quad.cell(c);
        for side in Side::BOTH {
            if !q.volume(side).is_empty() && space.local_dofs(c, side).is_none() {
                return Err(Error::InvalidArgument(
                    "quadrature and space use different classifications",
                ));
            }
        }
        let split = !q.volume[0].is_empty() && !q.volume[1].is_empty();
        if split && q.interface.is_empty() {
            return Err(Error::MissingInterfaceRule(c));
        }
    }
    Ok(())
}

/// Assembles the selected operator terms on all unknowns (no elimination).
/// Rows are test functions, columns trial functions.
pub fn assemble_operator(
    mesh: &Mesh,
    quad: &CutQuadrature,
    space: &FeSpace,
    data: &ProblemData,
    terms: OperatorTerms,
) -> Result<CsrMatrix> {
    check_consistency(mesh, quad, space)?;
    let n = space.num_dofs();
    let k = space.degree();
    let nloc = space.local_size();
    let weights = data.weights();
    let mu = data.mus();
    let mut builder = TripletBuilder::with_capacity(n, n, mesh.num_cells() * 4 * nloc * nloc);
    let mut local = [[0.0f64; 2 * MAX_LOCAL]; 2 * MAX_LOCAL];
    for c in 0..mesh.num_cells() {
        let map = AffineMap::for_cell(mesh, c);
        let q = quad.cell(c);
        if terms.gradient {
            for side in Side::BOTH {
                let Some(dofs) = space.local_dofs(c, side) else {
                    continue;
                };
                for row in local.iter_mut().take(nloc) {
                    row[..nloc].fill(0.0);
                }
                for (p, w) in q.volume(side).iter() {
                    let e = map.eval_physical(k, p);
                    let s = w * mu[side.index()];
                    for i in 0..nloc {
                        for j in 0..nloc {
                            local[i][j] += s * e.grads[i].dot(e.grads[j]);
                        }
                    }
                }
                for i in 0..nloc {
                    for j in 0..nloc {
                        builder.push(dofs[i], dofs[j], local[i][j]);
                    }
                }
            }
        }
        let interface_terms = terms.coupling.is_some() || terms.penalty;
        let (Some(d1), Some(d2)) = (space.local_dofs(c, Side::One), space.local_dofs(c, Side::Two))
        else {
            continue;
        };
        if !interface_terms || q.interface.is_empty() {
            continue;
        }
        let m = 2 * nloc;
        for row in local.iter_mut().take(m) {
            row[..m].fill(0.0);
        }
        let sigma = match terms.coupling {
            Some(Coupling::Primal) => 1.0,
            Some(Coupling::Adjoint) => -1.0,
            None => 0.0,
        };
        let pen = if terms.penalty {
            weights.c0 / mesh.cell_diameter(c)
        } else {
            0.0
        };
        let mut jump = [0.0; 2 * MAX_LOCAL];
        let mut flux = [0.0; 2 * MAX_LOCAL];
        for (p, w, nrm) in q.interface.iter() {
            let e = map.eval_physical(k, p);
            for i in 0..nloc {
                let dn = e.grads[i].dot(nrm);
                jump[i] = e.values[i];
                jump[nloc + i] = -e.values[i];
                flux[i] = weights.w1 * mu[0] * dn;
                flux[nloc + i] = weights.w2 * mu[1] * dn;
            }
            for i in 0..m {
                for j in 0..m {
                    local[i][j] += w
                        * (sigma * (jump[j] * flux[i] - flux[j] * jump[i]) + pen * jump[j] * jump[i]);
                }
            }
        }
        let dof = |i: usize| if i < nloc { d1[i] } else { d2[i - nloc] };
        for i in 0..m {
            for j in 0..m {
                builder.push(dof(i), dof(j), local[i][j]);
            }
        }
    }
    if let Some(gamma) = terms.ghost_penalty {
        push_ghost_penalty(mesh, space, mu, gamma, &mut builder);
    }
    Ok(builder.build())
}

/// Right-hand side on all unknowns (no elimination).
pub fn assemble_rhs(
    mesh: &Mesh,
    quad: &CutQuadrature,
    space: &FeSpace,
    data: &ProblemData,
    penalty: bool,
) -> Result<Vec<f64>> {
    check_consistency(mesh, quad, space)?;
    let k = space.degree();
    let nloc = space.local_size();
    let weights = data.weights();
    let mu = data.mus();
    let mut rhs = vec![0.0; space.num_dofs()];
    for c in 0..mesh.num_cells() {
        let map = AffineMap::for_cell(mesh, c);
        let q = quad.cell(c);
        for side in Side::BOTH {
            let Some(dofs) = space.local_dofs(c, side) else {
                continue;
            };
            for (p, w) in q.volume(side).iter() {
                let e = map.eval_physical(k, p);
                let f = (data.source)(side, p);
                for i in 0..nloc {
                    rhs[dofs[i]] += w * f * e.values[i];
                }
            }
        }
        let (Some(d1), Some(d2)) = (space.local_dofs(c, Side::One), space.local_dofs(c, Side::Two))
        else {
            continue;
        };
        let pen = if penalty {
            weights.c0 / mesh.cell_diameter(c)
        } else {
            0.0
        };
        for (p, w, nrm) in q.interface.iter() {
            let e = map.eval_physical(k, p);
            let gd = (data.jump_value)(p);
            let gn = (data.jump_flux)(p);
            for i in 0..nloc {
                let dn = e.grads[i].dot(nrm);
                let v = e.values[i];
                // side 1 test function: jump +v, flux w1 mu1 dn, Neumann weight w2
                rhs[d1[i]] += w * (gn * weights.w2 * v + gd * weights.w1 * mu[0] * dn + pen * gd * v);
                // side 2 test function: jump -v, flux w2 mu2 dn, Neumann weight w1
                rhs[d2[i]] += w * (gn * weights.w1 * v + gd * weights.w2 * mu[1] * dn - pen * gd * v);
            }
        }
    }
    Ok(rhs)
}

/// Faces carrying the ghost penalty of `side`: interior faces with at least
/// one cut neighbour and both neighbours active on `side`.
pub fn ghost_penalty_faces(mesh: &Mesh, space: &FeSpace, side: Side) -> Vec<usize> {
    let is_cut = |c: usize| {
        space.local_dofs(c, Side::One).is_some() && space.local_dofs(c, Side::Two).is_some()
    };
    (0..mesh.num_faces())
        .filter(|&f| match mesh.face_neighbors(f) {
            Ok(FaceCells::Interior(a, b)) => {
                (is_cut(a) || is_cut(b))
                    && space.local_dofs(a, side).is_some()
                    && space.local_dofs(b, side).is_some()
            }
            _ => false,
        })
        .collect()
}

/// `s_h` on all unknowns.
pub fn ghost_penalty_matrix(mesh: &Mesh, space: &FeSpace, mu: [f64; 2], gamma_g: f64) -> CsrMatrix {
    let n = space.num_dofs();
    let mut b = TripletBuilder::new(n, n);
    push_ghost_penalty(mesh, space, mu, gamma_g, &mut b);
    b.build()
}

fn push_ghost_penalty(
    mesh: &Mesh,
    space: &FeSpace,
    mu: [f64; 2],
    gamma: f64,
    builder: &mut TripletBuilder,
) {
    let k = space.degree();
    let nloc = space.local_size();
    let rule = LineRule::new(2 * k.get());
    let m = 2 * nloc;
    let mut local = [[0.0f64; 2 * MAX_LOCAL]; 2 * MAX_LOCAL];
    for side in Side::BOTH {
        for f in ghost_penalty_faces(mesh, space, side) {
            let FaceCells::Interior(ca, cb) = mesh.face_neighbors(f).expect("valid face") else {
                continue;
            };
            let (da, db) = (
                space.local_dofs(ca, side).expect("active"),
                space.local_dofs(cb, side).expect("active"),
            );
            let (ma, mb) = (AffineMap::for_cell(mesh, ca), AffineMap::for_cell(mesh, cb));
            let nrm = mesh.face_normal(f);
            let [v0, v1] = mesh.faces()[f].vertices.map(|v| mesh.vertices()[v]);
            let he = mesh.face_diameter(f);
            for row in local.iter_mut().take(m) {
                row[..m].fill(0.0);
            }
            for (s, w) in rule.iter() {
                let x = v0.lerp(v1, s);
                let ea = ma.eval_physical(k, x);
                let eb = mb.eval_physical(k, x);
                for order in 1..=k.get() {
                    let mut jump = [0.0; 2 * MAX_LOCAL];
                    for i in 0..nloc {
                        let (ja, jb) = match order {
                            1 => (ea.grads[i].dot(nrm), eb.grads[i].dot(nrm)),
                            _ => (normal_second(&ea.hessians[i], nrm), normal_second(&eb.hessians[i], nrm)),
                        };
                        jump[i] = ja;
                        jump[nloc + i] = -jb;
                    }
                    let scale = gamma * mu[side.index()] * he.powi(2 * order as i32 - 1) * w * he;
                    for i in 0..m {
                        for j in 0..m {
                            local[i][j] += scale * jump[i] * jump[j];
                        }
                    }
                }
            }
            let dof = |i: usize| if i < nloc { da[i] } else { db[i - nloc] };
            for i in 0..m {
                for j in 0..m {
                    builder.push(dof(i), dof(j), local[i][j]);
                }
            }
        }
    }
}

#[inline]
fn normal_second(h: &[f64; 3], n: Point2) -> f64 {
    n.x * n.x * h[0] + 2.0 * n.x * n.y * h[1] + n.y * n.y * h[2]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn equal_coefficients() {
        let w = compute_weights(2.5, 2.5).unwrap();
        assert_eq!(w.w1, 0.5);
        assert_eq!(w.w2, 0.5);
        assert!((w.c0 - 2.5).abs() < 1e-15);
    }

    #[test]
    fn contrast_one_to_three() {
        let w = compute_weights(1.0, 3.0).unwrap();
        assert!((w.w1 - 0.75).abs() < 1e-15);
        assert!((w.w2 - 0.25).abs() < 1e-15);
        assert!((w.c0 - 1.5).abs() < 1e-15);
        assert!(1.0 <= w.c0 && w.c0 <= 3.0 && w.c0 <= 2.0);
    }

    #[test]
    fn extreme_contrast_bound() {
        let w = compute_weights(1.0, 1e6).unwrap();
        let expected = 2e6 / (1.0 + 1e6);
        assert!((w.c0 - expected).abs() < 1e-12);
        assert!(w.c0 < 2.0);
    }

    #[test]
    fn rejects_nonpositive() {
        assert!(compute_weights(0.0, 1.0).is_err());
        assert!(compute_weights(1.0, -2.0).is_err());
        assert!(compute_weights(f64::NAN, 1.0).is_err());
        assert!(ProblemData::new(1.0, 0.0).is_err());
    }

    #[test]
    fn weight_bounds_over_contrast_range() {
        for e1 in -6..=6 {
            for e2 in -6..=6 {
                let (mu1, mu2) = (10f64.powi(e1), 10f64.powi(e2));
                let w = compute_weights(mu1, mu2).unwrap();
                let (lo, hi) = (mu1.min(mu2), mu1.max(mu2));
                let tol = 1e-12 * hi;
                assert!((w.w1 + w.w2 - 1.0).abs() < 1e-15);
                assert!(lo - tol <= w.c0 && w.c0 <= hi + tol);
                assert!(w.c0 <= 2.0 * lo * (1.0 + 1e-12));
                assert!(w.w1 * mu1 <= w.c0 * (1.0 + 1e-12));
                assert!(w.w2 * mu2 <= w.c0 * (1.0 + 1e-12));
                let harmonic = 2.0 * mu1 * mu2 / (mu1 + mu2);
                assert!((w.c0 - harmonic).abs() <= 1e-12 * harmonic);
            }
        }
    }
}
