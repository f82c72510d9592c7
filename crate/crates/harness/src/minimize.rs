//! Minimization of `E(y) - <f, v>_eps` with L-BFGS, and a conjugate-gradient
//! oracle for harmonic laws.

use std::collections::VecDeque;
use std::f64::consts::PI;

use bondvol::assembly::DofVec;
use bondvol::lattice::{sample_field, Deformation, LatticeField, Mat3, Vec3};
use bondvol::potentials::InteractionSet;
use bondvol::{EnergyReport, Reduction};

use crate::config::{RunConfig, SolveSpec};
use crate::model::Model;
use crate::report::{Check, SuiteReport, Table};
use crate::suites::all_harmonic;
use crate::{Error, Result};

/// `E(x) - eps^3 sum_l f_l . x_l` for a fixed `F`.
pub struct Objective<'a> {
    pub model: &'a Model,
    pub laws: &'a InteractionSet,
    pub f: Mat3,
    pub force: &'a LatticeField,
    pub mode: Reduction,
}

impl Objective<'_> {
    fn eps3(&self) -> f64 {
        self.force.config().spacing().powi(3)
    }

    /// Objective and its raw gradient.
    pub fn value_grad(&self, x: &DofVec) -> Result<(f64, DofVec)> {
        let (e, _, mut g) = self.model.evaluate_dofs(self.laws, &self.f, x, self.mode)?;
        let e3 = self.eps3();
        let mut work = 0.0;
        for (i, fl) in self.force.values().iter().enumerate() {
            work += fl.dot(&x.sites[i]);
            g.sites[i] -= fl * e3;
        }
        Ok((e - e3 * work, g))
    }

    /// Max-norm of the representer `g / eps^3`.
    pub fn scaled_norm(&self, g: &DofVec) -> f64 {
        g.max_norm() / self.eps3()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub iteration: usize,
    pub objective: f64,
    pub gradient_norm: f64,
    pub step: f64,
}

#[derive(Debug, Clone)]
pub struct Minimized {
    pub x: DofVec,
    pub objective: f64,
    pub converged: bool,
    pub trace: Vec<TraceRow>,
}

/// Armijo constant.
const C1: f64 = 1e-4;
const MAX_BACKTRACKS: usize = 40;
/// A drop of this many times the initial objective means there is no minimum.
const UNBOUNDED: f64 = 1e8;

/// L-BFGS with backtracking. A step is accepted when the objective does not
/// increase and either the Armijo condition holds or, once differences of the
/// objective are lost in rounding, the trapezoidal estimate of the decrease
/// from the two gradients satisfies it.
pub fn minimize(obj: &Objective<'_>, x0: DofVec, opts: &SolveSpec) -> Result<Minimized> {
    let mut x = x0;
    let (mut fx, mut g) = obj.value_grad(&x)?;
    let mut trace = vec![TraceRow {
        iteration: 0,
        objective: fx,
        gradient_norm: obj.scaled_norm(&g),
        step: 0.0,
    }];
    let mut hist: VecDeque<(DofVec, DofVec, f64)> = VecDeque::new();
    let eps = obj.force.config().spacing();
    let start = fx;
    for it in 1..=opts.max_iters {
        if !(fx - start > -UNBOUNDED * (1.0 + start.abs())) {
            return Err(Error::Minimize {
                iteration: it,
                reason: format!("objective {fx:e} is unbounded below (started at {start:e})"),
            });
        }
        if trace.last().unwrap().gradient_norm <= opts.g_tol {
            return Ok(Minimized { x, objective: fx, converged: true, trace });
        }
        let mut d = two_loop(&g, &hist, eps);
        let mut slope = g.dot(&d);
        if !(slope < 0.0) {
            // not a descent direction: restart from steepest descent
            hist.clear();
            d = two_loop(&g, &hist, eps);
            slope = g.dot(&d);
        }
        let noise = 64.0 * f64::EPSILON * fx.abs().max(f64::MIN_POSITIVE);
        let mut alpha = 1.0;
        let mut accepted = None;
        for _ in 0..MAX_BACKTRACKS {
            let xn = x.axpy(alpha, &d);
            let (fnew, gnew) = obj.value_grad(&xn)?;
            if fnew <= fx {
                let armijo = fnew <= fx + C1 * alpha * slope;
                let estimate = 0.5 * alpha * (slope + gnew.dot(&d));
                let in_noise = (C1 * alpha * slope).abs() <= noise;
                if armijo || (in_noise && estimate <= C1 * alpha * slope) {
                    accepted = Some((xn, fnew, gnew));
                    break;
                }
            }
            alpha *= 0.5;
        }
        let Some((xn, fnew, gnew)) = accepted else {
            return Err(Error::Minimize {
                iteration: it,
                reason: format!(
                    "no acceptable step after {MAX_BACKTRACKS} halvings (objective {fx:e}, scaled gradient {:e})",
                    trace.last().unwrap().gradient_norm
                ),
            });
        };
        let s = xn.axpy(-1.0, &x);
        let yv = gnew.axpy(-1.0, &g);
        let sy = s.dot(&yv);
        if sy > 0.0 {
            hist.push_back((s, yv, 1.0 / sy));
            if hist.len() > opts.memory {
                hist.pop_front();
            }
        }
        x = xn;
        fx = fnew;
        g = gnew;
        trace.push(TraceRow {
            iteration: it,
            objective: fx,
            gradient_norm: obj.scaled_norm(&g),
            step: alpha,
        });
    }
    let converged = trace.last().unwrap().gradient_norm <= opts.g_tol;
    Ok(Minimized { x, objective: fx, converged, trace })
}

/// `-H g` by the two-loop recursion. Without history the initial matrix is
/// `1/eps`, the scale of the inverse Hessian of a lattice energy.
fn two_loop(g: &DofVec, hist: &VecDeque<(DofVec, DofVec, f64)>, eps: f64) -> DofVec {
    let mut q = g.clone();
    let mut alphas = Vec::with_capacity(hist.len());
    for (s, y, rho) in hist.iter().rev() {
        let a = rho * s.dot(&q);
        q = q.axpy(-a, y);
        alphas.push(a);
    }
    let gamma = match hist.back() {
        Some((s, y, _)) => s.dot(y) / y.dot(y),
        None => 1.0 / eps,
    };
    q.scale(gamma);
    for ((s, y, rho), a) in hist.iter().zip(alphas.into_iter().rev()) {
        let b = rho * y.dot(&q);
        q = q.axpy(a - b, s);
    }
    q.scale(-1.0);
    q
}

/// Solves `H w = b` by conjugate gradients, with `H` applied as the map
/// `apply`. Stops at `|r| <= rtol |b|`, or once rounding makes the residual
/// grow again; returns the iterate with the smallest residual.
pub fn conjugate_gradient(
    b: &DofVec,
    mut apply: impl FnMut(&DofVec) -> Result<DofVec>,
    rtol: f64,
    max_iters: usize,
) -> Result<DofVec> {
    let mut w = b.axpy(-1.0, b);
    let mut r = b.clone();
    let mut p = r.clone();
    let mut rr = r.dot(&r);
    let stop = rtol * rtol * rr;
    let mut best = (rr, w.clone());
    for _ in 0..max_iters {
        if rr <= stop || rr > 1e4 * best.0 {
            break;
        }
        let hp = apply(&p)?;
        let php = p.dot(&hp);
        if !(php > 0.0) {
            break;
        }
        let alpha = rr / php;
        w = w.axpy(alpha, &p);
        r = r.axpy(-alpha, &hp);
        let rr_new = r.dot(&r);
        p = r.axpy(rr_new / rr, &p);
        rr = rr_new;
        if rr < best.0 {
            best = (rr, w.clone());
        }
    }
    Ok(best.1)
}

/// Smooth zero-mean force
/// `amp (sin 2 pi x_2/L_2, sin 2 pi x_3/L_3, sin 2 pi x_1/L_1)`.
pub fn smooth_force(cfg: &RunConfig, amp: f64) -> LatticeField {
    let lat = cfg.lattice;
    let len = lat.extents().map(|n| n as f64 * lat.spacing());
    let raw = sample_field(lat, |x| {
        let s = |i: usize| (2.0 * PI * x[i] / len[i]).sin();
        Vec3::new(s(1), s(2), s(0)) * amp
    });
    let mean = raw.mean();
    raw.map(|v| v - mean)
}

#[derive(Debug, Clone)]
pub struct Solved {
    pub minimized: Minimized,
    pub report: EnergyReport,
    /// Comparison with the linear-solve oracle, when every law is harmonic.
    pub oracle: Option<Oracle>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Oracle {
    /// `|J_min - J_cg| / |J_cg|`.
    pub objective: f64,
    /// Max-norm of the difference of the two minimizers relative to the
    /// displacement from `y_F`.
    pub solution: f64,
    /// `J(y_F) - J_cg`, for scale.
    pub decrease: f64,
}

/// Minimizes the selected model from `y_F` under the configured force.
pub fn solve_with(cfg: &RunConfig, model: &Model) -> Result<Solved> {
    let mode = cfg.reduction();
    let force = smooth_force(cfg, cfg.solve.force_amplitude);
    let obj = Objective {
        model,
        laws: &cfg.laws,
        f: cfg.f,
        force: &force,
        mode,
    };
    let x0 = model.embed(&Deformation::homogeneous(cfg.lattice, cfg.f)?);
    let (j0, g0) = obj.value_grad(&x0)?;
    let minimized = minimize(&obj, x0.clone(), &cfg.solve)?;
    let report = model.evaluate_state(&cfg.laws, &cfg.f, &minimized.x, mode)?;

    let oracle = if all_harmonic(&cfg.laws) {
        // Harmonic energies are quadratic in the dofs, with Hessian the
        // gradient map at F = 0. Solve H w = -g(x0) and compare.
        let zero = Mat3::zeros();
        let apply = |w: &DofVec| -> Result<DofVec> {
            let (_, _, hw) = model.evaluate_dofs(&cfg.laws, &zero, w, mode)?;
            Ok(hw)
        };
        let mut rhs = g0.clone();
        rhs.scale(-1.0);
        let w = conjugate_gradient(&rhs, apply, 1e-10, 10 * x0.len())?;
        let x_cg = x0.axpy(1.0, &w);
        let (j_cg, _) = obj.value_grad(&x_cg)?;
        let objective = (minimized.objective - j_cg).abs() / j_cg.abs().max(f64::MIN_POSITIVE);
        let solution = minimized.x.axpy(-1.0, &x_cg).max_norm() / w.max_norm().max(f64::MIN_POSITIVE);
        let decrease = (j0 - j_cg).abs();
        Some(Oracle {
            objective,
            solution,
            decrease,
        })
    } else {
        None
    };
    Ok(Solved {
        minimized,
        report,
        oracle,
    })
}

pub fn solve(cfg: &RunConfig) -> Result<SuiteReport> {
    let model = Model::build(cfg, cfg.model)?;
    let s = solve_with(cfg, &model)?;
    let m = &s.minimized;
    let mut report = SuiteReport::new("solve", cfg.seed);
    let last = m.trace.last().unwrap();
    report.notes.push(format!(
        "model {}, {} iterations, objective {:e}",
        cfg.model,
        last.iteration,
        m.objective
    ));
    report.push(Check::at_most("final scaled gradient", last.gradient_norm, cfg.solve.g_tol));
    let increases = m.trace.windows(2).filter(|w| w[1].objective > w[0].objective).count();
    report.push(Check::at_most("objective increases along the trace", increases as f64, 0.0));
    match s.oracle {
        Some(o) => {
            report.push(Check::at_most(
                "objective vs conjugate-gradient oracle, relative",
                o.objective,
                cfg.tolerances.solve_oracle,
            ));
            report.notes.push(format!(
                "oracle: minimizers differ by {:.3e} relative, objective decrease {:.3e}",
                o.solution, o.decrease
            ));
        }
        None => report.notes.push("oracle skipped: some law is not harmonic".into()),
    }
    report.tables.push(Table {
        name: "solve_trace".into(),
        header: ["iteration", "objective", "gradient_norm", "step"].map(String::from).to_vec(),
        rows: m
            .trace
            .iter()
            .map(|t| {
                vec![
                    t.iteration.to_string(),
                    format!("{:e}", t.objective),
                    format!("{:e}", t.gradient_norm),
                    format!("{:e}", t.step),
                ]
            })
            .collect(),
    });
    Ok(report)
}
