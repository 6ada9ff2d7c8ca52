//! Error norms against an exact solution.
//!
//! All integrals use the rules passed in; for convergence studies build them
//! with [`QuadratureOptions::for_errors`](crate::cut::QuadratureOptions::for_errors).

use crate::cut::CutQuadrature;
use crate::error::{Error, Result};
use crate::forms::{ghost_penalty_faces, ExactSolution, ProblemData, Variant};
use crate::mesh::{FaceCells, Mesh};
use crate::quadrature::LineRule;
use crate::space::{combine, AffineMap, FeSpace};
use crate::Side;
#[allow(unused_imports)]
use crate::float::Float;

/// Errors of one discrete solution.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ErrorNorms {
    pub l2: f64,
    /// `|||u - u_h|||`, or `|||u - u_h|||_*` for the penalty-free method
    pub energy: f64,
    /// `||grad(u_i - u_{h,i})||_{Omega_i}`
    pub h1: [f64; 2],
}

fn exact_of(data: &ProblemData) -> Result<&ExactSolution> {
    data.exact.as_ref().ok_or(Error::MissingExactSolution)
}

fn check_lengths(mesh: &Mesh, quad: &CutQuadrature, space: &FeSpace, coeffs: &[f64]) -> Result<()> {
    if quad.num_cells() != mesh.num_cells() {
        return Err(Error::QuadratureMismatch {
            expected: mesh.num_cells(),
            found: quad.num_cells(),
        });
    }
    if coeffs.len() != space.num_dofs() {
        return Err(Error::InvalidArgument("coefficient vector does not match the space"));
    }
    Ok(())
}

/// Squared volume errors per side: `(||e_i||^2, ||grad e_i||^2)`.
fn volume_errors(
    mesh: &Mesh,
    quad: &CutQuadrature,
    space: &FeSpace,
    coeffs: &[f64],
    exact: Option<&ExactSolution>,
) -> [(f64, f64); 2] {
    let k = space.degree();
    let mut out = [(0.0, 0.0); 2];
    for c in 0..mesh.num_cells() {
        let map = AffineMap::for_cell(mesh, c);
        for side in Side::BOTH {
            let rule = quad.cell(c).volume(side);
            if rule.is_empty() {
                continue;
            }
            let dofs = space.local_dofs(c, side);
            for (p, w) in rule.iter() {
                let (uh, guh) = match dofs {
                    Some(d) => combine(&map.eval_physical(k, p), d, coeffs),
                    None => Default::default(),
                };
                let (u, gu) = match exact {
                    Some(ex) => ((ex.value)(side, p), (ex.gradient)(side, p)),
                    None => Default::default(),
                };
                let e = u - uh;
                let ge = gu - guh;
                out[side.index()].0 += w * e * e;
                out[side.index()].1 += w * ge.norm_squared();
            }
        }
    }
    out
}

/// `c_0 sum_T h_T^{-1} ||g_D - [[u_h]]||^2_{Gamma_T}`; with no exact
/// solution the data jump is taken as zero.
fn jump_term(
    mesh: &Mesh,
    quad: &CutQuadrature,
    space: &FeSpace,
    data: &ProblemData,
    coeffs: &[f64],
    with_data: bool,
) -> f64 {
    let k = space.degree();
    let c0 = data.weights().c0;
    let mut s = 0.0;
    for c in 0..mesh.num_cells() {
        let q = &quad.cell(c).interface;
        if q.is_empty() {
            continue;
        }
        let map = AffineMap::for_cell(mesh, c);
        let d1 = space.local_dofs(c, Side::One);
        let d2 = space.local_dofs(c, Side::Two);
        let mut cell = 0.0;
        for (p, w, _) in q.iter() {
            let e = map.eval_physical(k, p);
            let u1 = d1.map_or(0.0, |d| combine(&e, d, coeffs).0);
            let u2 = d2.map_or(0.0, |d| combine(&e, d, coeffs).0);
            let g = if with_data { (data.jump_value)(p) } else { 0.0 };
            let j = g - (u1 - u2);
            cell += w * j * j;
        }
        s += c0 * cell / mesh.cell_diameter(c);
    }
    s
}

/// `s_h(v, v)` summed face by face from the jumps of `v`, without forming
/// the matrix (no cancellation for nearly polynomial `v`).
pub fn ghost_seminorm_squared(mesh: &Mesh, space: &FeSpace, mu: [f64; 2], gamma_g: f64, coeffs: &[f64]) -> f64 {
    let k = space.degree();
    let rule = LineRule::new(2 * k.get());
    let mut total = 0.0;
    for side in Side::BOTH {
        for f in ghost_penalty_faces(mesh, space, side) {
            let Ok(FaceCells::Interior(ca, cb)) = mesh.face_neighbors(f) else {
                continue;
            };
            let (Some(da), Some(db)) = (space.local_dofs(ca, side), space.local_dofs(cb, side)) else {
                continue;
            };
            let (ma, mb) = (AffineMap::for_cell(mesh, ca), AffineMap::for_cell(mesh, cb));
            let n = mesh.face_normal(f);
            let [v0, v1] = mesh.faces()[f].vertices.map(|v| mesh.vertices()[v]);
            let he = mesh.face_diameter(f);
            for (s, w) in rule.iter() {
                let x = v0.lerp(v1, s);
                let (ea, eb) = (ma.eval_physical(k, x), mb.eval_physical(k, x));
                for order in 1..=k.get() {
                    let d = |e: &crate::basis::BasisEval, dofs: &[usize]| -> f64 {
                        dofs.iter()
                            .enumerate()
                            .map(|(i, &g)| {
                                let di = if order == 1 {
                                    e.grads[i].dot(n)
                                } else {
                                    let h = e.hessians[i];
                                    n.x * n.x * h[0] + 2.0 * n.x * n.y * h[1] + n.y * n.y * h[2]
                                };
                                coeffs[g] * di
                            })
                            .sum()
                    };
                    let jump = d(&ea, da) - d(&eb, db);
                    total += gamma_g * mu[side.index()] * he.powi(2 * order as i32 - 1) * w * he * jump * jump;
                }
            }
        }
    }
    total
}

fn ghost_term(mesh: &Mesh, space: &FeSpace, data: &ProblemData, coeffs: &[f64], variant: Variant) -> f64 {
    match variant.ghost_penalty() {
        Some(g) if g != 0.0 => ghost_seminorm_squared(mesh, space, data.mus(), g, coeffs),
        _ => 0.0,
    }
}

/// The three parts of `|||v|||_*^2`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct EnergyParts {
    /// `sum_i mu_i ||grad v_i||^2_{Omega_i}`
    pub gradient: f64,
    /// `c_0 ||h^{-1/2} [[v]]||^2_Gamma`
    pub jump: f64,
    /// `s_h(v, v)`; zero when the variant has no ghost penalty
    pub ghost: f64,
}

impl EnergyParts {
    pub fn total(&self) -> f64 {
        self.gradient + self.jump + self.ghost
    }
}

/// `||u - u_h||_0` over both subdomains.
pub fn l2_error(
    mesh: &Mesh,
    quad: &CutQuadrature,
    space: &FeSpace,
    data: &ProblemData,
    coeffs: &[f64],
) -> Result<f64> {
    check_lengths(mesh, quad, space, coeffs)?;
    let v = volume_errors(mesh, quad, space, coeffs, Some(exact_of(data)?));
    Ok((v[0].0 + v[1].0).sqrt())
}

/// `[||grad(u_1 - u_{h,1})||_{Omega_1}, ||grad(u_2 - u_{h,2})||_{Omega_2}]`
pub fn h1_seminorm_errors(
    mesh: &Mesh,
    quad: &CutQuadrature,
    space: &FeSpace,
    data: &ProblemData,
    coeffs: &[f64],
) -> Result<[f64; 2]> {
    check_lengths(mesh, quad, space, coeffs)?;
    let v = volume_errors(mesh, quad, space, coeffs, Some(exact_of(data)?));
    Ok([v[0].1.sqrt(), v[1].1.sqrt()])
}

/// Energy norm of the error. The jump part uses `g_D - [[u_h]]`; the
/// penalty-free variant adds `s_h(u_h, u_h)` since `s_h(u, .) = 0`.
pub fn energy_error(
    mesh: &Mesh,
    quad: &CutQuadrature,
    space: &FeSpace,
    data: &ProblemData,
    coeffs: &[f64],
    variant: Variant,
) -> Result<f64> {
    Ok(compute_errors(mesh, quad, space, data, coeffs, variant)?.energy)
}

/// All error norms in one pass over the rules.
pub fn compute_errors(
    mesh: &Mesh,
    quad: &CutQuadrature,
    space: &FeSpace,
    data: &ProblemData,
    coeffs: &[f64],
    variant: Variant,
) -> Result<ErrorNorms> {
    check_lengths(mesh, quad, space, coeffs)?;
    let v = volume_errors(mesh, quad, space, coeffs, Some(exact_of(data)?));
    let mu = data.mus();
    let energy_sq = mu[0] * v[0].1
        + mu[1] * v[1].1
        + jump_term(mesh, quad, space, data, coeffs, true)
        + ghost_term(mesh, space, data, coeffs, variant);
    Ok(ErrorNorms {
        l2: (v[0].0 + v[1].0).sqrt(),
        energy: energy_sq.max(0.0).sqrt(),
        h1: [v[0].1.sqrt(), v[1].1.sqrt()],
    })
}

/// Parts of `|||v_h|||^2` (or `|||v_h|||_*^2`) of a discrete function,
/// evaluated pointwise from the coefficients.
pub fn energy_parts(
    mesh: &Mesh,
    quad: &CutQuadrature,
    space: &FeSpace,
    data: &ProblemData,
    coeffs: &[f64],
    variant: Variant,
) -> Result<EnergyParts> {
    check_lengths(mesh, quad, space, coeffs)?;
    let v = volume_errors(mesh, quad, space, coeffs, None);
    let mu = data.mus();
    Ok(EnergyParts {
        gradient: mu[0] * v[0].1 + mu[1] * v[1].1,
        jump: jump_term(mesh, quad, space, data, coeffs, false),
        ghost: ghost_term(mesh, space, data, coeffs, variant),
    })
}

pub fn energy_norm_squared(
    mesh: &Mesh,
    quad: &CutQuadrature,
    space: &FeSpace,
    data: &ProblemData,
    coeffs: &[f64],
    variant: Variant,
) -> Result<f64> {
    Ok(energy_parts(mesh, quad, space, data, coeffs, variant)?.total())
}

/// `[|u_1|_{2, Omega_1}, |u_2|_{2, Omega_2}]` of the exact solution.
pub fn h2_seminorms(quad: &CutQuadrature, data: &ProblemData) -> Result<[f64; 2]> {
    let hess = exact_of(data)?
        .hessian
        .as_ref()
        .ok_or(Error::InvalidArgument("exact solution has no second derivatives"))?;
    let mut s = [0.0; 2];
    for cell in quad.cells() {
        for side in Side::BOTH {
            for (p, w) in cell.volume(side).iter() {
                let h = hess(side, p);
                s[side.index()] += w * (h[0] * h[0] + 2.0 * h[1] * h[1] + h[2] * h[2]);
            }
        }
    }
    Ok(s.map(f64::sqrt))
}

/// `||u - u_h|| / (mu_1^{1/2} |u_1|_2 + mu_2^{1/2} |u_2|_2)`, the
/// contrast-independent scaling of the energy error.
pub fn normalized_energy_error(energy: f64, mu: [f64; 2], h2: [f64; 2]) -> f64 {
    energy / (mu[0].sqrt() * h2[0] + mu[1].sqrt() * h2[1])
}

