//! First-order solver over `{F : tr F = 1, F >= 0}`.
//!
//! Differentiable objectives use projected gradient descent with
//! Barzilai-Borwein trial steps and Armijo backtracking (halving), so the
//! objective sequence is monotone. Nonsmooth objectives use projected
//! subgradient steps of length `c / sqrt(t)` and return the best iterate.
//! Objectives are normalized by their value at the start point so the
//! tolerances are scale free.

use std::io::Write;

use crate::channels::SolverSettings;
use crate::error::{Error, Result};
use crate::linalg::{real_inner, CMat, C64};

use super::objective::LiftedObjective;
use super::projection::project_density_with_spectrum;

/// One accepted iterate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceEntry {
    pub iteration: usize,
    pub objective: f64,
    pub projected_grad_norm: f64,
}

/// Write a convergence trace as `iteration,objective,projected_grad_norm`.
pub fn write_trace_csv<W: Write>(mut out: W, trace: &[TraceEntry]) -> std::io::Result<()> {
    writeln!(out, "iteration,objective,projected_grad_norm")?;
    for e in trace {
        writeln!(out, "{},{:.9e},{:.9e}", e.iteration, e.objective, e.projected_grad_norm)?;
    }
    Ok(())
}

/// Result of minimizing a lifted objective.
#[derive(Debug, Clone)]
pub struct SolverOutput {
    pub f_hat: CMat,
    pub objective: f64,
    /// Projected spectrum of `f_hat`, sorted nonincreasing.
    pub spectrum: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub trace: Vec<TraceEntry>,
}

/// Backend that minimizes a convex objective over unit-trace PSD matrices.
pub trait LiftedSolver: Sync {
    fn minimize(&self, objective: &dyn LiftedObjective, start: &CMat) -> Result<SolverOutput>;
}

/// Projected (sub)gradient method.
#[derive(Debug, Clone)]
pub struct ProjectedGradient {
    pub settings: SolverSettings,
    pub record_trace: bool,
}

impl ProjectedGradient {
    pub fn new(settings: SolverSettings) -> Self {
        ProjectedGradient {
            settings,
            record_trace: false,
        }
    }

    pub fn with_trace(mut self) -> Self {
        self.record_trace = true;
        self
    }
}

struct Iterate {
    x: CMat,
    spectrum: Vec<f64>,
    value: f64,
    grad: CMat,
}

fn project(x: &CMat) -> Result<(CMat, Vec<f64>)> {
    project_density_with_spectrum(x).map(|(m, _, s)| (m, s))
}

impl LiftedSolver for ProjectedGradient {
    fn minimize(&self, objective: &dyn LiftedObjective, start: &CMat) -> Result<SolverOutput> {
        self.settings.validate()?;
        let (x0, s0) = project(start)?;
        let (v0, g0) = objective.evaluate(&x0)?;
        if !(v0 > 0.0) || !v0.is_finite() {
            return Err(Error::Boundary(format!("objective {v0} at the start point")));
        }
        let start = Iterate {
            x: x0,
            spectrum: s0,
            // The objective is rescaled by its starting value.
            value: 1.0,
            grad: g0 / C64::from(v0),
        };
        let mut out = if objective.is_smooth() {
            self.descend_smooth(objective, v0, start)?
        } else {
            self.descend_subgradient(objective, v0, start)?
        };
        out.objective *= v0;
        for e in &mut out.trace {
            e.objective *= v0;
        }
        Ok(out)
    }
}

impl ProjectedGradient {
    fn descend_smooth(
        &self,
        objective: &dyn LiftedObjective,
        scale: f64,
        mut cur: Iterate,
    ) -> Result<SolverOutput> {
        let s = &self.settings;
        let mut trace = Vec::new();
        let mut step = s.step_size_init;
        let mut converged = false;
        let mut iterations = 0;
        while iterations < s.max_iters {
            iterations += 1;
            let mut accepted = None;
            let mut trial = step;
            for _ in 0..80 {
                let (y, spec) = project(&(&cur.x - &cur.grad * C64::from(trial)))?;
                let d = &y - &cur.x;
                let dd = d.norm_squared();
                if dd == 0.0 {
                    accepted = Some((y, spec, 0.0, trial, cur.value, cur.grad.clone()));
                    break;
                }
                if let Ok((v, g)) = objective.evaluate(&y) {
                    let v = v / scale;
                    let bound = cur.value + real_inner(&cur.grad, &d) + dd / (2.0 * trial);
                    if v <= bound {
                        accepted = Some((y, spec, dd, trial, v, g / C64::from(scale)));
                        break;
                    }
                }
                trial *= 0.5;
            }
            let Some((y, spec, dd, used, v, g)) = accepted else {
                // No decrease found at any representable step: stationary to working precision.
                converged = true;
                break;
            };
            let pg_norm = dd.sqrt() / used;
            let rel_decrease = (cur.value - v) / cur.value.abs();
            let d = &y - &cur.x;
            let dg = &g - &cur.grad;
            let curvature = real_inner(&d, &dg);
            step = if curvature > 0.0 {
                (dd / curvature).clamp(1e-12, 1e12)
            } else {
                (used * 2.0).min(1e12)
            };
            cur = Iterate {
                x: y,
                spectrum: spec,
                value: v,
                grad: g,
            };
            if self.record_trace {
                trace.push(TraceEntry {
                    iteration: iterations,
                    objective: v,
                    projected_grad_norm: pg_norm,
                });
            }
            if pg_norm < s.tol_projected_grad || rel_decrease < s.tol_objective {
                converged = true;
                break;
            }
        }
        Ok(SolverOutput {
            f_hat: cur.x,
            objective: cur.value,
            spectrum: cur.spectrum,
            iterations,
            converged,
            trace,
        })
    }

    fn descend_subgradient(
        &self,
        objective: &dyn LiftedObjective,
        scale: f64,
        mut cur: Iterate,
    ) -> Result<SolverOutput> {
        let s = &self.settings;
        let mut trace = Vec::new();
        let mut best = (cur.x.clone(), cur.spectrum.clone(), cur.value);
        let window = (s.max_iters / 10).max(50);
        let mut best_at_window_start = cur.value;
        let mut converged = false;
        let mut iterations = 0;
        while iterations < s.max_iters {
            iterations += 1;
            let gnorm = cur.grad.norm();
            if gnorm == 0.0 {
                converged = true;
                break;
            }
            let mut step = s.step_size_init / (iterations as f64).sqrt();
            let mut next = None;
            for _ in 0..60 {
                let (y, spec) = project(&(&cur.x - &cur.grad * C64::from(step / gnorm)))?;
                if let Ok((v, g)) = objective.evaluate(&y) {
                    next = Some((y, spec, v / scale, g / C64::from(scale)));
                    break;
                }
                // Stepped outside the positive-gain region; shorten.
                step *= 0.5;
            }
            let Some((y, spec, v, g)) = next else {
                break;
            };
            let pg_norm = (&y - &cur.x).norm() / (step / gnorm);
            cur = Iterate {
                x: y,
                spectrum: spec,
                value: v,
                grad: g,
            };
            if v < best.2 {
                best = (cur.x.clone(), cur.spectrum.clone(), v);
            }
            if self.record_trace {
                trace.push(TraceEntry {
                    iteration: iterations,
                    objective: v,
                    projected_grad_norm: pg_norm,
                });
            }
            if pg_norm < s.tol_projected_grad {
                converged = true;
                break;
            }
            if iterations % window == 0 {
                if best_at_window_start - best.2 <= s.tol_objective.max(1e-9) * best.2 {
                    converged = true;
                    break;
                }
                best_at_window_start = best.2;
            }
        }
        Ok(SolverOutput {
            f_hat: best.0,
            objective: best.2,
            spectrum: best.1,
            iterations,
            converged,
            trace,
        })
    }
}
