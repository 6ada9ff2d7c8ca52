//! Convergence studies and the interface-position conditioning sweep.

use std::num::NonZeroUsize;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use cutnitsche_core::cases::{case_linear_patch, case_radial, case_trig_jump, ManufacturedCase, PATCH_OFFSET};
use cutnitsche_core::convergence::{ConvergenceRow, ConvergenceTable};
use cutnitsche_core::cut::{classify_cells, CellClassification, CutQuadrature, QuadratureOptions};
use cutnitsche_core::forms::{assemble, LinearSystem, Variant};
use cutnitsche_core::levelset::LevelSet;
use cutnitsche_core::mesh::{build_structured_mesh, Mesh};
use cutnitsche_core::norms::{compute_errors, h2_seminorms, ErrorNorms};
use cutnitsche_core::space::{build_space, FeSpace};
use cutnitsche_core::Point2;

use crate::error::{Error, Result};
use crate::solver::{estimate_condition, solve, SolverMethod, DEFAULT_TOL};

/// Caps the number of worker threads.
pub const THREADS_ENV: &str = "CUTNITSCHE_THREADS";

/// Vertex-sign tie tolerance relative to the mesh size.
const CLASSIFY_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CaseKind {
    Radial,
    TrigJump,
    LinearPatch,
}

impl CaseKind {
    pub fn as_str(self) -> &'static str {
        match self {
            CaseKind::Radial => "radial",
            CaseKind::TrigJump => "trig-jump",
            CaseKind::LinearPatch => "linear-patch",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VariantKind {
    Penalized,
    PenaltyFree,
}

impl VariantKind {
    pub fn as_str(self) -> &'static str {
        match self {
            VariantKind::Penalized => "penalized",
            VariantKind::PenaltyFree => "penalty-free",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub case: CaseKind,
    pub variant: VariantKind,
    pub k: usize,
    pub mu1: f64,
    pub mu2: f64,
    pub gamma_g: f64,
    /// Adds `s_h` to the penalised variant.
    pub ghost_on_penalized: bool,
    /// Circle radius, or line position for the patch test; case default
    /// when `None`.
    pub position: Option<f64>,
    pub n0: usize,
    pub levels: usize,
    pub solver: SolverMethod,
    pub tol: f64,
    pub with_cond: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            case: CaseKind::Radial,
            variant: VariantKind::Penalized,
            k: 1,
            mu1: 1.0,
            mu2: 1000.0,
            gamma_g: 0.5,
            ghost_on_penalized: false,
            position: None,
            n0: 8,
            levels: 5,
            solver: SolverMethod::Direct,
            tol: DEFAULT_TOL,
            with_cond: false,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.into()));
        if !(self.k == 1 || self.k == 2) {
            return bad("k must be 1 or 2");
        }
        if !(self.mu1 > 0.0 && self.mu2 > 0.0 && self.mu1.is_finite() && self.mu2.is_finite()) {
            return bad("mu1 and mu2 must be positive and finite");
        }
        if !(self.gamma_g >= 0.0 && self.gamma_g.is_finite()) {
            return bad("gamma-g must be nonnegative");
        }
        if self.n0 == 0 {
            return bad("n0 must be positive");
        }
        if self.levels == 0 || self.levels > 12 {
            return bad("levels must lie in 1..=12");
        }
        if !(self.tol > 0.0 && self.tol < 1.0) {
            return bad("tolerance must lie in (0, 1)");
        }
        self.manufactured_case()?;
        Ok(())
    }

    pub fn method(&self) -> Variant {
        match self.variant {
            VariantKind::Penalized => Variant::Penalized {
                ghost_penalty: self.ghost_on_penalized.then_some(self.gamma_g),
            },
            VariantKind::PenaltyFree => Variant::PenaltyFree {
                gamma_g: self.gamma_g,
            },
        }
    }

    /// Same variant without any ghost penalty.
    pub fn method_without_ghost(&self) -> Variant {
        match self.variant {
            VariantKind::Penalized => Variant::penalized(),
            VariantKind::PenaltyFree => Variant::PenaltyFree { gamma_g: 0.0 },
        }
    }

    pub fn manufactured_case(&self) -> Result<ManufacturedCase> {
        let case = match self.case {
            CaseKind::Radial => case_radial(self.mu1, self.mu2, self.position.unwrap_or(0.5)),
            CaseKind::TrigJump => case_trig_jump(self.mu1, self.mu2, self.position.unwrap_or(0.5)),
            CaseKind::LinearPatch => case_linear_patch(self.position.unwrap_or(PATCH_OFFSET)),
        };
        Ok(case?)
    }

    pub fn subdivisions(&self, level: usize) -> usize {
        self.n0 << level
    }
}

/// Everything built for one mesh level.
pub struct Discretization {
    pub mesh: Mesh,
    pub classification: CellClassification,
    pub quadrature: CutQuadrature,
    pub space: FeSpace,
    pub system: LinearSystem,
}

pub fn discretize(
    case: &ManufacturedCase,
    levelset: &LevelSet,
    n: usize,
    level: usize,
    k: usize,
    variant: Variant,
) -> Result<Discretization> {
    let mesh = build_structured_mesh(n, case.domain)?;
    let classification = classify_cells(&mesh, levelset, CLASSIFY_TOL * mesh.h());
    for c in classification.cut_cells() {
        if classification.is_degenerate(c) {
            log::debug!("cell {c} touches the interface along an edge or at a tangency");
        }
    }
    let quadrature =
        CutQuadrature::build(&mesh, &classification, levelset, QuadratureOptions::for_degree(k, level))?;
    if !quadrature.empty_interface_cells().is_empty() {
        log::info!(
            "{} cut cells carry no interface segment",
            quadrature.empty_interface_cells().len()
        );
    }
    let space = build_space(&mesh, &classification, k)?;
    let system = assemble(&mesh, &quadrature, &space, &case.data, variant)?;
    Ok(Discretization {
        mesh,
        classification,
        quadrature,
        space,
        system,
    })
}

/// Result of one level of a convergence run.
#[derive(Clone, Debug)]
pub struct LevelOutput {
    pub row: ConvergenceRow,
    pub errors: ErrorNorms,
    /// `[|u_1|_{2, Omega_1}, |u_2|_{2, Omega_2}]`
    pub h2: Option<[f64; 2]>,
    pub solver_iterations: usize,
    pub residual: f64,
}

pub fn run_level(config: &RunConfig, level: usize) -> Result<LevelOutput> {
    let case = config.manufactured_case()?;
    let n = config.subdivisions(level);
    let variant = config.method();
    let d = discretize(&case, &case.levelset, n, level, config.k, variant)?;
    let report = solve(&d.system.matrix, &d.system.rhs, config.tol, config.solver)?;
    let u = d.system.expand(&report.solution);
    let error_quad = CutQuadrature::build(
        &d.mesh,
        &d.classification,
        &case.levelset,
        QuadratureOptions::for_errors(config.k, level),
    )?;
    let errors = compute_errors(&d.mesh, &error_quad, &d.space, &case.data, &u, variant)?;
    let h2 = h2_seminorms(&error_quad, &case.data).ok();
    let cond = if config.with_cond {
        Some(estimate_condition(&d.system.matrix)?.cond)
    } else {
        None
    };
    Ok(LevelOutput {
        row: ConvergenceRow {
            level,
            h: d.mesh.h(),
            ndof: d.system.size(),
            err_l2: errors.l2,
            err_energy: errors.energy,
            err_h1: errors.h1,
            eoc_l2: None,
            eoc_energy: None,
            cond,
        },
        errors,
        h2,
        solver_iterations: report.iterations,
        residual: report.residual,
    })
}

/// Worker count: available parallelism, capped by `CUTNITSCHE_THREADS`.
pub fn worker_count(jobs: usize) -> usize {
    let available = std::thread::available_parallelism().map_or(1, NonZeroUsize::get);
    let cap = match std::env::var(THREADS_ENV) {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(c) if c > 0 => c,
            _ => {
                log::warn!("ignoring {THREADS_ENV}={v:?}: expected a positive integer");
                available
            }
        },
        Err(_) => available,
    };
    available.min(cap).min(jobs).max(1)
}

/// Runs `job(i)` for `i in 0..count` on a scoped pool; results in index
/// order. Larger indices start first.
pub fn parallel_map<T: Send>(count: usize, job: impl Fn(usize) -> T + Sync) -> Vec<T> {
    let workers = worker_count(count);
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<T>>> = Mutex::new((0..count).map(|_| None).collect());
    std::thread::scope(|s| {
        for _ in 0..workers {
            s.spawn(|| loop {
                let t = next.fetch_add(1, Ordering::Relaxed);
                if t >= count {
                    break;
                }
                let i = count - 1 - t;
                let out = job(i);
                slots.lock().expect("no worker panicked while holding the lock")[i] = Some(out);
            });
        }
    });
    slots
        .into_inner()
        .expect("workers finished")
        .into_iter()
        .map(|o| o.expect("every index ran"))
        .collect()
}

/// All levels with per-level details.
pub fn run_study(config: &RunConfig) -> Result<Vec<LevelOutput>> {
    config.validate()?;
    let outputs = parallel_map(config.levels, |level| {
        log::info!("level {level}: n = {}", config.subdivisions(level));
        run_level(config, level).map_err(|e| Error::Level {
            level,
            source: Box::new(e),
        })
    });
    outputs.into_iter().collect()
}

pub fn run_convergence(config: &RunConfig) -> Result<ConvergenceTable> {
    if config.levels < 2 {
        return Err(Error::Config("a convergence run needs at least two levels".into()));
    }
    let outputs = run_study(config)?;
    Ok(ConvergenceTable::from_rows(outputs.into_iter().map(|o| o.row).collect())?)
}

/// Offsets `+-10^-1 .. +-10^-8` in units of the grid spacing.
pub fn default_sweep_offsets() -> Vec<f64> {
    (1..=8)
        .flat_map(|e| {
            let d = 10f64.powi(-e);
            [d, -d]
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    /// signed distance of the chosen vertex from the interface, in grid
    /// spacings; positive puts the vertex in `Omega_1`
    pub offset: f64,
    pub cond: f64,
    /// same sweep with the ghost penalty removed
    pub cond_no_ghost: Option<f64>,
}

/// Level set of the configured case moved so that the mesh vertex nearest
/// to the interface lies at signed distance `offset * spacing` inside
/// `Omega_1`.
///
/// The circle slides along a direction picked so that, at zero offset, every
/// other vertex stays well away from it; sliding along an axis would leave the
/// circle tangent to grid lines whenever the radius is a multiple of the
/// spacing.
pub fn shifted_levelset(case: &ManufacturedCase, mesh: &Mesh, offset: f64) -> Result<LevelSet> {
    let spacing = case.domain.width() / mesh.subdivisions() as f64;
    let d = offset * spacing;
    match case.levelset {
        LevelSet::Circle { center, radius } => {
            let (v, e) = sweep_anchor(mesh, center, radius);
            Ok(LevelSet::circle(v - e * (radius - d), radius))
        }
        LevelSet::Line { point, normal } => {
            let v = nearest_vertex(mesh, point);
            Ok(LevelSet::Line {
                point: v + normal * d,
                normal,
            })
        }
        LevelSet::Generic { .. } => Err(Error::Config("sweeps need a circle or a line".into())),
    }
}

const SWEEP_DIRECTIONS: usize = 32;

/// Vertex and unit direction for the circle sweep: the circle passes through
/// the vertex with outward normal `e` at zero offset.
fn sweep_anchor(mesh: &Mesh, center: Point2, radius: f64) -> (Point2, Point2) {
    let domain = mesh.domain();
    let origin = domain.min;
    let n = mesh.subdivisions() as f64;
    let step = Point2::new(domain.width() / n, domain.height() / n);
    let mut best = (center, Point2::new(1.0, 0.0), f64::NEG_INFINITY);
    for j in 0..SWEEP_DIRECTIONS {
        // quarter turn, skipping the axis itself
        let theta = (j as f64 + 0.5) * core::f64::consts::FRAC_PI_2 / SWEEP_DIRECTIONS as f64;
        let e = Point2::new(theta.cos(), theta.sin());
        let v = nearest_vertex(mesh, center + e * radius);
        let e = (v - center).normalized();
        let c = v - e * radius;
        let vertex_gap = mesh
            .vertices()
            .iter()
            .filter(|w| w.distance(v) > 0.0)
            .map(|w| (w.distance(c) - radius).abs())
            .fold(f64::INFINITY, f64::min);
        // tangency with a horizontal or vertical grid line
        let line_gap = [c.x - radius, c.x + radius, c.y - radius, c.y + radius]
            .iter()
            .zip([(origin.x, step.x), (origin.x, step.x), (origin.y, step.y), (origin.y, step.y)])
            .map(|(t, (o, h))| {
                let s = (t - o) / h;
                (s - s.round()).abs() * h
            })
            .fold(f64::INFINITY, f64::min);
        let clearance = vertex_gap.min(line_gap);
        if clearance > best.2 {
            best = (v, e, clearance);
        }
    }
    (best.0, best.1)
}

fn nearest_vertex(mesh: &Mesh, p: Point2) -> Point2 {
    mesh.vertices()
        .iter()
        .copied()
        .filter(|v| interior(mesh, *v))
        .min_by(|a, b| a.distance(p).total_cmp(&b.distance(p)))
        .unwrap_or(p)
}

fn interior(mesh: &Mesh, v: Point2) -> bool {
    let d = mesh.domain();
    v.x > d.min.x && v.x < d.max.x && v.y > d.min.y && v.y < d.max.y
}

fn sweep_condition(case: &ManufacturedCase, n: usize, k: usize, offset: f64, variant: Variant) -> Result<f64> {
    let mesh = build_structured_mesh(n, case.domain)?;
    let ls = shifted_levelset(case, &mesh, offset)?;
    let d = discretize(case, &ls, n, 0, k, variant)?;
    Ok(estimate_condition(&d.system.matrix)?.cond)
}

/// One condition estimate per offset on the level-0 mesh. Singular systems
/// give infinite rows rather than errors.
pub fn run_conditioning_sweep(config: &RunConfig, offsets: &[f64], compare_no_ghost: bool) -> Result<Vec<SweepRow>> {
    config.validate()?;
    let case = config.manufactured_case()?;
    let n = config.n0;
    let rows = parallel_map(offsets.len(), |i| -> Result<SweepRow> {
        let offset = offsets[i];
        let cond = sweep_condition(&case, n, config.k, offset, config.method())?;
        let cond_no_ghost = if compare_no_ghost {
            Some(sweep_condition(&case, n, config.k, offset, config.method_without_ghost())?)
        } else {
            None
        };
        Ok(SweepRow {
            offset,
            cond,
            cond_no_ghost,
        })
    });
    rows.into_iter().collect()
}

/// `max / min` over the rows; infinite if any entry is.
pub fn spread(values: impl IntoIterator<Item = f64>) -> f64 {
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for v in values {
        if !v.is_finite() {
            return f64::INFINITY;
        }
        lo = lo.min(v);
        hi = hi.max(v);
    }
    hi / lo
}
