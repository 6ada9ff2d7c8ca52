//! Manufactured interface problems with known solutions.

use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::error::{Error, Result};
use crate::forms::{ExactSolution, ProblemData};
use crate::levelset::LevelSet;
use crate::mesh::BoxDomain;
use crate::point::Point2;
use crate::Side;
#[allow(unused_imports)]
use crate::float::Float;

/// Default line position of the patch test; avoids alignment with mesh
/// lines for every power-of-two subdivision.
pub const PATCH_OFFSET: f64 = 0.5 + 1e-3 * core::f64::consts::SQRT_2;

#[derive(Clone, Debug)]
pub struct ManufacturedCase {
    pub name: &'static str,
    pub domain: BoxDomain,
    pub levelset: LevelSet,
    pub data: ProblemData,
}

fn check_radius(r0: f64) -> Result<()> {
    if r0 > 0.0 && r0 < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument("interface radius must lie in (0, 1)"))
    }
}

/// `u_1 = r^2 / mu_1` inside the circle of radius `r0`,
/// `u_2 = (r^2 - r0^2) / mu_2 + r0^2 / mu_1` outside; `f = -4`, no jumps.
pub fn case_radial(mu1: f64, mu2: f64, r0: f64) -> Result<ManufacturedCase> {
    check_radius(r0)?;
    let mu = [mu1, mu2];
    let value = move |side: Side, p: Point2| {
        let r2 = p.norm_squared();
        match side {
            Side::One => r2 / mu1,
            Side::Two => (r2 - r0 * r0) / mu2 + r0 * r0 / mu1,
        }
    };
    let exact = ExactSolution {
        value: Arc::new(value),
        gradient: Arc::new(move |side, p| p * (2.0 / mu[side.index()])),
        hessian: Some(Arc::new(move |side, _| {
            let d = 2.0 / mu[side.index()];
            [d, 0.0, d]
        })),
    };
    let data = ProblemData::new(mu1, mu2)?
        .with_source(|_, _| -4.0)
        .with_boundary(value)
        .with_exact(exact);
    Ok(ManufacturedCase {
        name: "radial",
        domain: BoxDomain::symmetric_square(),
        levelset: LevelSet::circle(Point2::new(0.0, 0.0), r0),
        data,
    })
}

/// `u_1 = sin(pi x) sin(pi y)`, `u_2 = cos(pi x) cos(pi y)` with the
/// resulting value and flux jumps on the circle of radius `r0`.
pub fn case_trig_jump(mu1: f64, mu2: f64, r0: f64) -> Result<ManufacturedCase> {
    check_radius(r0)?;
    let mu = [mu1, mu2];
    let value = |side: Side, p: Point2| {
        let (sx, cx) = (PI * p.x).sin_cos();
        let (sy, cy) = (PI * p.y).sin_cos();
        match side {
            Side::One => sx * sy,
            Side::Two => cx * cy,
        }
    };
    let gradient = |side: Side, p: Point2| {
        let (sx, cx) = (PI * p.x).sin_cos();
        let (sy, cy) = (PI * p.y).sin_cos();
        match side {
            Side::One => Point2::new(cx * sy, sx * cy) * PI,
            Side::Two => Point2::new(sx * cy, cx * sy) * -PI,
        }
    };
    let hessian = |side: Side, p: Point2| {
        let (sx, cx) = (PI * p.x).sin_cos();
        let (sy, cy) = (PI * p.y).sin_cos();
        let pi2 = PI * PI;
        match side {
            Side::One => [-pi2 * sx * sy, pi2 * cx * cy, -pi2 * sx * sy],
            Side::Two => [-pi2 * cx * cy, pi2 * sx * sy, -pi2 * cx * cy],
        }
    };
    let data = ProblemData::new(mu1, mu2)?
        .with_source(move |side, p| 2.0 * PI * PI * mu[side.index()] * value(side, p))
        .with_jump_value(move |p| value(Side::One, p) - value(Side::Two, p))
        .with_jump_flux(move |p| {
            let n = p.normalized();
            (gradient(Side::One, p) * mu1 - gradient(Side::Two, p) * mu2).dot(n)
        })
        .with_boundary(value)
        .with_exact(ExactSolution {
            value: Arc::new(value),
            gradient: Arc::new(gradient),
            hessian: Some(Arc::new(hessian)),
        });
    Ok(ManufacturedCase {
        name: "trig-jump",
        domain: BoxDomain::symmetric_square(),
        levelset: LevelSet::circle(Point2::new(0.0, 0.0), r0),
        data,
    })
}

/// `u = 1 + x + 2y` on both sides of `x = offset` in the unit square,
/// `mu_1 = mu_2 = 1`, homogeneous data.
pub fn case_linear_patch(offset: f64) -> Result<ManufacturedCase> {
    if !(offset > 0.0 && offset < 1.0) {
        return Err(Error::InvalidArgument("line offset must lie in (0, 1)"));
    }
    let value = |_: Side, p: Point2| 1.0 + p.x + 2.0 * p.y;
    let data = ProblemData::new(1.0, 1.0)?
        .with_boundary(value)
        .with_exact(ExactSolution {
            value: Arc::new(value),
            gradient: Arc::new(|_, _| Point2::new(1.0, 2.0)),
            hessian: Some(Arc::new(|_, _| [0.0; 3])),
        });
    Ok(ManufacturedCase {
        name: "linear-patch",
        domain: BoxDomain::unit_square(),
        levelset: LevelSet::vertical_line(offset),
        data,
    })
}

/// Largest relative residuals found by [`ManufacturedCase::self_check`].
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct SelfCheck {
    pub samples: usize,
    pub pde: f64,
    pub jump_value: f64,
    pub jump_flux: f64,
    pub boundary: f64,
}

impl SelfCheck {
    pub fn max_residual(&self) -> f64 {
        self.pde.max(self.jump_value).max(self.jump_flux).max(self.boundary)
    }

    pub fn passed(&self, tol: f64) -> bool {
        self.max_residual() <= tol
    }
}

/// Point `i` of the two-dimensional Halton sequence (bases 2 and 3).
fn halton(i: usize) -> (f64, f64) {
    let radical = |mut n: usize, base: usize| {
        let (mut f, mut r) = (1.0, 0.0);
        while n > 0 {
            f /= base as f64;
            r += f * (n % base) as f64;
            n /= base;
        }
        r
    };
    (radical(i + 1, 2), radical(i + 1, 3))
}

fn relative(residual: f64, scale: f64) -> f64 {
    residual.abs() / scale.abs().max(1.0)
}

impl ManufacturedCase {
    pub fn exact(&self) -> &ExactSolution {
        self.data.exact.as_ref().expect("manufactured cases carry an exact solution")
    }

    /// Points on `Gamma` inside the domain.
    pub fn interface_points(&self, count: usize) -> Vec<Point2> {
        match self.levelset {
            LevelSet::Circle { center, radius } => (0..count)
                .map(|i| {
                    let t = 2.0 * PI * (i as f64 + 0.5) / count as f64;
                    center + Point2::new(t.cos(), t.sin()) * radius
                })
                .collect(),
            LevelSet::Line { point, normal } => {
                let dir = normal.perp();
                let d = &self.domain;
                let reach = d.width().hypot(d.height());
                (0..count * 4)
                    .map(|i| point + dir * (reach * (2.0 * (i as f64 + 0.5) / (4 * count) as f64 - 1.0)))
                    .filter(|p| d.contains(*p))
                    .take(count)
                    .collect()
            }
            LevelSet::Generic { .. } => Vec::new(),
        }
    }

    /// Verifies the differential equation, both jump conditions and the
    /// boundary trace pointwise; residuals are relative to `max(1, |rhs|)`.
    pub fn self_check(&self, samples: usize) -> Result<SelfCheck> {
        let exact = self.exact();
        let hess = exact
            .hessian
            .as_ref()
            .ok_or(Error::InvalidArgument("exact solution has no second derivatives"))?;
        let d = &self.data;
        let mut out = SelfCheck {
            samples,
            ..Default::default()
        };
        for i in 0..samples {
            let (s, t) = halton(i);
            let p = Point2::new(
                self.domain.min.x + s * self.domain.width(),
                self.domain.min.y + t * self.domain.height(),
            );
            let side = if self.levelset.value(p) < 0.0 { Side::One } else { Side::Two };
            let h = hess(side, p);
            let f = (d.source)(side, p);
            out.pde = out.pde.max(relative(-d.mu(side) * (h[0] + h[2]) - f, f));
        }
        let gamma = self.interface_points(samples);
        if gamma.is_empty() {
            return Err(Error::InvalidArgument("no interface samples for this level set"));
        }
        for p in gamma {
            let n = self.levelset.unit_normal(p);
            let g_d = (d.jump_value)(p);
            let jump = (exact.value)(Side::One, p) - (exact.value)(Side::Two, p);
            out.jump_value = out.jump_value.max(relative(jump - g_d, g_d));
            let g_n = (d.jump_flux)(p);
            let flux = ((exact.gradient)(Side::One, p) * d.mu(Side::One)
                - (exact.gradient)(Side::Two, p) * d.mu(Side::Two))
            .dot(n);
            out.jump_flux = out.jump_flux.max(relative(flux - g_n, g_n));
        }
        let dom = &self.domain;
        for i in 0..samples {
            let t = (i as f64 + 0.5) / samples as f64 * 4.0;
            let (e, s) = (t as usize, t.fract());
            let p = match e {
                0 => Point2::new(dom.min.x + s * dom.width(), dom.min.y),
                1 => Point2::new(dom.max.x, dom.min.y + s * dom.height()),
                2 => Point2::new(dom.max.x - s * dom.width(), dom.max.y),
                _ => Point2::new(dom.min.x, dom.max.y - s * dom.height()),
            };
            let side = if self.levelset.value(p) < 0.0 { Side::One } else { Side::Two };
            let u = (exact.value)(side, p);
            out.boundary = out.boundary.max(relative((d.boundary)(side, p) - u, u));
        }
        Ok(out)
    }

    pub fn describe(&self) -> String {
        let mu = self.data.mus();
        alloc::format!("{} (mu1 = {}, mu2 = {})", self.name, mu[0], mu[1])
    }
}
