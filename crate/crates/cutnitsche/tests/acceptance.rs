//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs as a plain binary (`harness = false`). The exit status is zero unless
//! `CUTNITSCHE_ACCEPTANCE_STRICT=1` is set, in which case any FAIL line makes
//! it nonzero.

use std::f64::consts::PI;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use cutnitsche::study::{
    default_sweep_offsets, discretize, run_conditioning_sweep, run_study, spread, CaseKind, LevelOutput, RunConfig,
    VariantKind,
};
use cutnitsche_core::convergence::ConvergenceTable;
use cutnitsche_core::cut::{CutQuadrature, QuadratureOptions};
use cutnitsche_core::forms::{assemble, assemble_adjoint, ghost_penalty_matrix, ProblemData, Variant};
use cutnitsche_core::mesh::Mesh;
use cutnitsche_core::norms::{energy_parts, ghost_seminorm_squared, normalized_energy_error};
use cutnitsche_core::{Point2, Side};
use faer::Mat;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

const STRICT_ENV: &str = "CUTNITSCHE_ACCEPTANCE_STRICT";

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        pass,
        detail: detail.into(),
    }
}

fn in_band(x: Option<f64>, lo: f64, hi: f64) -> bool {
    x.is_some_and(|v| (lo..=hi).contains(&v))
}

fn fmt_rate(x: Option<f64>) -> String {
    x.map_or("-".into(), |v| format!("{v:.3}"))
}

fn rates(outputs: &[LevelOutput], pick: impl Fn(&LevelOutput) -> Option<f64>) -> String {
    outputs.iter().skip(1).map(|o| fmt_rate(pick(o))).collect::<Vec<_>>().join(" ")
}

/// Levels of a study with the rates filled in.
fn timed_study(config: &RunConfig) -> (Vec<LevelOutput>, Duration) {
    let start = Instant::now();
    let mut out = run_study(config).expect("study runs");
    let elapsed = start.elapsed();
    let table = ConvergenceTable::from_rows(out.iter().map(|o| o.row.clone()).collect()).expect("levels refine");
    for (o, row) in out.iter_mut().zip(table.rows()) {
        o.row = row.clone();
    }
    (out, elapsed)
}

fn radial(mu2: f64, variant: VariantKind) -> RunConfig {
    RunConfig {
        case: CaseKind::Radial,
        variant,
        k: 1,
        mu1: 1.0,
        mu2,
        n0: 8,
        levels: 5,
        ..RunConfig::default()
    }
}

fn cell_area(mesh: &Mesh, c: usize) -> f64 {
    let [a, b, p] = mesh.cell_points(c);
    0.5 * ((b - a).cross(p - a)).abs()
}

/// Monomials of total degree at most `k`.
fn monomials(k: usize) -> Vec<(i32, i32)> {
    (0..=k as i32).flat_map(|d| (0..=d).map(move |i| (i, d - i))).collect()
}

fn main() -> ExitCode {
    let mut results: Vec<(usize, &str, Verdict)> = Vec::new();
    let mut run = |n: usize, title: &'static str, f: &mut dyn FnMut() -> Verdict| {
        let v = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            verdict(false, format!("panicked: {msg}"))
        });
        println!("criterion {n:>2}: {} {title}: {}", if v.pass { "PASS" } else { "FAIL" }, v.detail);
        results.push((n, title, v));
    };

    let (penalized, penalized_time) = timed_study(&radial(1000.0, VariantKind::Penalized));

    run(1, "optimal L2 rate, penalized", &mut || {
        let last = penalized.last().unwrap().row.eoc_l2;
        let pass = in_band(last, 1.8, 2.2) && penalized_time <= Duration::from_secs(120);
        verdict(
            pass,
            format!(
                "final EOC_L2 {} (band [1.8, 2.2]); EOCs {}; {:.1} s (limit 120 s)",
                fmt_rate(last),
                rates(&penalized, |o| o.row.eoc_l2),
                penalized_time.as_secs_f64()
            ),
        )
    });

    run(2, "energy rate, penalized", &mut || {
        let last = penalized.last().unwrap().row.eoc_energy;
        verdict(
            in_band(last, 0.8, 1.2),
            format!(
                "final EOC_energy {} (band [0.8, 1.2]); EOCs {}",
                fmt_rate(last),
                rates(&penalized, |o| o.row.eoc_energy)
            ),
        )
    });

    run(3, "k=2 rates, trig-jump", &mut || {
        let config = RunConfig {
            case: CaseKind::TrigJump,
            k: 2,
            mu1: 1.0,
            mu2: 10.0,
            n0: 8,
            levels: 4,
            ..RunConfig::default()
        };
        let (out, time) = timed_study(&config);
        let last = &out.last().unwrap().row;
        let pass = in_band(last.eoc_l2, 2.7, 3.3)
            && in_band(last.eoc_energy, 1.7, 2.3)
            && time <= Duration::from_secs(600);
        verdict(
            pass,
            format!(
                "final EOC_L2 {} (band [2.7, 3.3]), EOC_energy {} (band [1.7, 2.3]); {:.1} s (limit 600 s)",
                fmt_rate(last.eoc_l2),
                fmt_rate(last.eoc_energy),
                time.as_secs_f64()
            ),
        )
    });

    run(4, "penalty-free rates", &mut || {
        let config = RunConfig {
            gamma_g: 0.5,
            ..radial(1000.0, VariantKind::PenaltyFree)
        };
        let (out, _) = timed_study(&config);
        let last = &out.last().unwrap().row;
        // the gradient part alone, to separate it from the jump and ghost parts
        let grad = |o: &LevelOutput| (o.row.err_h1[0].powi(2) * config.mu1 + o.row.err_h1[1].powi(2) * config.mu2).sqrt();
        let n = out.len();
        let grad_rate = (grad(&out[n - 2]) / grad(&out[n - 1])).log2() / (out[n - 2].row.h / out[n - 1].row.h).log2();
        verdict(
            in_band(last.eoc_l2, 1.8, 2.2) && in_band(last.eoc_energy, 0.8, 1.2),
            format!(
                "final EOC_L2 {} (band [1.8, 2.2]), EOC_* {} (band [0.8, 1.2]); EOC_* sequence {}; gradient part alone {:.3}",
                fmt_rate(last.eoc_l2),
                fmt_rate(last.eoc_energy),
                rates(&out, |o| o.row.eoc_energy),
                grad_rate
            ),
        )
    });

    run(5, "coefficient robustness", &mut || {
        let mut normalized = Vec::new();
        for mu2 in [1.0, 10.0, 1000.0] {
            let out = if mu2 == 1000.0 {
                penalized.clone()
            } else {
                run_study(&radial(mu2, VariantKind::Penalized)).expect("study runs")
            };
            let last = out.last().unwrap();
            let h2 = last.h2.expect("radial case has second derivatives");
            normalized.push(normalized_energy_error(last.errors.energy, [1.0, mu2], h2));
        }
        let ratio = spread(normalized.iter().copied());
        verdict(
            ratio <= 3.0,
            format!(
                "normalized finest-level energy errors {:.3e} {:.3e} {:.3e}; max/min {ratio:.3} (limit 3)",
                normalized[0], normalized[1], normalized[2]
            ),
        )
    });

    run(6, "coercivity identity", &mut || {
        let mut rng = StdRng::seed_from_u64(20);
        let case = radial(1000.0, VariantKind::Penalized).manufactured_case().unwrap();
        // homogeneous boundary data so that the free vector is the whole function
        let data = ProblemData::new(1.0, 1000.0).unwrap();
        let mut worst = [0.0f64; 2];
        for k in [1, 2] {
            for (slot, variant) in [Variant::penalized(), Variant::PenaltyFree { gamma_g: 0.5 }].into_iter().enumerate() {
                let d = discretize(&case, &case.levelset, 16, 1, k, variant).unwrap();
                let sys = assemble(&d.mesh, &d.quadrature, &d.space, &data, variant).unwrap();
                for _ in 0..100 {
                    let v: Vec<f64> = (0..sys.size()).map(|_| rng.random_range(-1.0..1.0)).collect();
                    let lhs = sys.matrix.bilinear(&v, &v);
                    let full = sys.constraints.expand(&v);
                    let parts = energy_parts(&d.mesh, &d.quadrature, &d.space, &data, &full, variant).unwrap();
                    // without the jump penalty the form controls gradients and s_h only
                    let rhs = if variant.has_penalty() { parts.total() } else { parts.gradient + parts.ghost };
                    worst[slot] = worst[slot].max((lhs - rhs).abs() / rhs);
                }
            }
        }
        verdict(
            worst.iter().all(|&w| w <= 1e-10),
            format!(
                "max relative deviation over 100 vectors, k=1,2: penalized {:.1e}, penalty-free {:.1e} (limit 1e-10)",
                worst[0], worst[1]
            ),
        )
    });

    run(7, "adjoint equals transpose", &mut || {
        let case = radial(1000.0, VariantKind::Penalized).manufactured_case().unwrap();
        let mut worst = 0.0f64;
        for k in [1, 2] {
            for variant in [Variant::penalized(), Variant::PenaltyFree { gamma_g: 0.5 }] {
                let d = discretize(&case, &case.levelset, 16, 1, k, variant).unwrap();
                let adj = assemble_adjoint(&d.mesh, &d.quadrature, &d.space, &case.data, variant).unwrap();
                let a = &d.system.matrix;
                worst = worst.max(adj.max_abs_diff(&a.transpose()) / a.max_abs());
            }
        }
        verdict(worst <= 1e-13, format!("max relative entry difference {worst:.1e} (limit 1e-13)"))
    });

    run(8, "patch test", &mut || {
        let mut worst = 0.0f64;
        for variant in [VariantKind::Penalized, VariantKind::PenaltyFree] {
            for k in [1, 2] {
                let config = RunConfig {
                    case: CaseKind::LinearPatch,
                    variant,
                    k,
                    levels: 3,
                    ..RunConfig::default()
                };
                for o in run_study(&config).expect("study runs") {
                    let e = o.errors;
                    worst = worst.max(e.l2).max(e.energy).max(e.h1[0]).max(e.h1[1]);
                }
            }
        }
        verdict(
            worst <= 1e-9,
            format!("largest error over both variants, k=1,2, three levels: {worst:.1e} (limit 1e-9)"),
        )
    });

    run(9, "conditioning independent of the cut position", &mut || {
        let config = RunConfig {
            variant: VariantKind::PenaltyFree,
            gamma_g: 0.5,
            n0: 16,
            ..RunConfig::default()
        };
        let rows = run_conditioning_sweep(&config, &default_sweep_offsets(), true).unwrap();
        let with = spread(rows.iter().map(|r| r.cond));
        let without = spread(rows.iter().map(|r| r.cond_no_ghost.unwrap()));
        let singular = rows.iter().filter(|r| !r.cond_no_ghost.unwrap().is_finite()).count();
        verdict(
            with <= 10.0 && without >= 100.0,
            format!(
                "{} offsets: max/min kappa {with:.3} with gamma_g=0.5 (limit 10), {without:.3e} with gamma_g=0 \
                 (at least 100; {singular} singular rows)",
                rows.len()
            ),
        )
    });

    run(10, "geometry quadrature", &mut || {
        let case = radial(1000.0, VariantKind::Penalized).manufactured_case().unwrap();
        let r0 = 0.5;
        let (mut area_err, mut length_err, mut partition_err) = (0.0f64, 0.0f64, 0.0f64);
        for k in [1, 2] {
            for level in 0..5 {
                let n = 8 << level;
                let d = discretize(&case, &case.levelset, n, level, k, Variant::penalized()).unwrap();
                let q: &CutQuadrature = &d.quadrature;
                area_err = area_err.max((q.subdomain_area(Side::One) - PI * r0 * r0).abs());
                length_err = length_err.max((q.interface_length() - 2.0 * PI * r0).abs());
                for c in 0..d.mesh.num_cells() {
                    let cell = q.cell(c);
                    let sum = cell.volume(Side::One).total_weight() + cell.volume(Side::Two).total_weight();
                    partition_err = partition_err.max((sum - cell_area(&d.mesh, c)).abs());
                }
                assert_eq!(q.options(), QuadratureOptions::for_degree(k, level));
            }
        }
        verdict(
            area_err <= 1e-6 && length_err <= 1e-6 && partition_err <= 1e-10,
            format!(
                "solve rules on n=8..128, k=1,2: disk area error {area_err:.1e}, circumference error \
                 {length_err:.1e} (limits 1e-6), per-cell partition {partition_err:.1e} (limit 1e-10)"
            ),
        )
    });

    run(11, "ghost-penalty kernel and positivity", &mut || {
        let case = radial(1000.0, VariantKind::Penalized).manufactured_case().unwrap();
        let mu = [1.0, 1000.0];
        let (mut form, mut action, mut asym, mut min_eig) = (0.0f64, 0.0f64, 0.0f64, f64::INFINITY);
        for k in [1, 2] {
            let d = discretize(&case, &case.levelset, 16, 1, k, Variant::penalized()).unwrap();
            let sh = ghost_penalty_matrix(&d.mesh, &d.space, mu, 0.5);
            let scale = sh.max_abs();
            let terms = monomials(k);
            for &(a1, b1) in &terms {
                for &(a2, b2) in &terms {
                    // different polynomials on the two sides
                    let v = d.space.interpolate(|side, p: Point2| match side {
                        Side::One => p.x.powi(a1) * p.y.powi(b1),
                        Side::Two => 2.0 - 3.0 * p.x.powi(a2) * p.y.powi(b2),
                    });
                    let vmax = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
                    // s_h(p, p) from the face jumps, on the scale of the matrix
                    let energy = ghost_seminorm_squared(&d.mesh, &d.space, mu, 0.5, &v);
                    form = form.max(energy.abs() / (scale * vmax * vmax));
                    let sv = sh.mul_vec(&v).iter().fold(0.0f64, |m, x| m.max(x.abs()));
                    action = action.max(sv / (scale * vmax));
                }
            }
            asym = asym.max(sh.max_abs_diff(&sh.transpose()) / scale);
            let n = sh.nrows();
            let mut dense = Mat::<f64>::zeros(n, n);
            for (i, j, x) in sh.iter() {
                dense[(i, j)] += x;
            }
            let eig = dense.self_adjoint_eigenvalues(faer::Side::Lower).unwrap();
            min_eig = min_eig.min(eig[0] / eig[n - 1]);
        }
        verdict(
            form <= 1e-13 && action <= 1e-13 && asym <= 1e-13 && min_eig >= -1e-13,
            format!(
                "k=1,2, piecewise polynomials p: s_h(p,p)/(|S| |p|^2) {form:.1e}, |S p|/(|S| |p|) {action:.1e} \
                 (limits 1e-13); asymmetry {asym:.1e}, smallest eigenvalue / largest {min_eig:.1e}"
            ),
        )
    });

    let failed: Vec<usize> = results.iter().filter(|r| !r.2.pass).map(|r| r.0).collect();
    println!("acceptance: {} of {} criteria passed", results.len() - failed.len(), results.len());
    if !failed.is_empty() {
        println!("acceptance: failing criteria {failed:?}");
    }
    let strict = std::env::var(STRICT_ENV).is_ok_and(|v| v == "1");
    if strict && !failed.is_empty() {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
