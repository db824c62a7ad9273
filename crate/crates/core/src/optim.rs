//! Derivative-free minimisation (Nelder–Mead) for the likelihood fits.
//!
//! Infeasible points are signalled by the objective returning `+∞` or NaN;
//! the simplex then contracts away from them.

use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NelderMeadOptions {
    pub max_iter: usize,
    /// Convergence when the spread of simplex values is below
    /// `f_tol·(1 + |f_best|)` ...
    pub f_tol: f64,
    /// ... and every vertex lies within `x_tol` of the best one.
    pub x_tol: f64,
    pub initial_step: f64,
    /// Fresh simplices built around the current best after convergence;
    /// a collapsed simplex against a constraint is the usual reason.
    pub restarts: usize,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        NelderMeadOptions {
            max_iter: 4000,
            f_tol: 1e-12,
            x_tol: 1e-8,
            initial_step: 0.05,
            restarts: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
}

fn eval<F: FnMut(&[f64]) -> f64>(f: &mut F, x: &[f64], count: &mut usize) -> f64 {
    *count += 1;
    let v = f(x);
    if v.is_nan() {
        f64::INFINITY
    } else {
        v
    }
}

fn lerp(a: &[f64], b: &[f64], t: f64) -> Vec<f64> {
    a.iter().zip(b).map(|(a, b)| a + t * (b - a)).collect()
}

pub fn nelder_mead<F>(mut f: F, x0: &[f64], opts: &NelderMeadOptions) -> Minimum
where
    F: FnMut(&[f64]) -> f64,
{
    let mut best = single_run(&mut f, x0, opts);
    for _ in 0..opts.restarts {
        let next = single_run(&mut f, &best.x.clone(), opts);
        let gained = best.value - next.value;
        let (iterations, evaluations) = (best.iterations + next.iterations, best.evaluations + next.evaluations);
        let done = !(gained > opts.f_tol * (1.0 + best.value.abs()));
        if next.value <= best.value {
            best = Minimum {
                iterations,
                evaluations,
                ..next
            };
        } else {
            best.iterations = iterations;
            best.evaluations = evaluations;
        }
        if done {
            break;
        }
    }
    compass_polish(&mut f, &mut best, opts);
    best
}

/// Coordinate search from the simplex optimum. Nelder–Mead simplices tend to
/// flatten against a constraint and stop moving along it; axis moves do not.
fn compass_polish<F>(f: &mut F, best: &mut Minimum, opts: &NelderMeadOptions)
where
    F: FnMut(&[f64]) -> f64,
{
    let mut step = opts.initial_step;
    let mut evals = 0;
    while step > opts.x_tol {
        let mut improved = false;
        for i in 0..best.x.len() {
            for dir in [1.0, -1.0] {
                let mut x = best.x.clone();
                x[i] += dir * step;
                let v = eval(f, &x, &mut evals);
                if v < best.value - opts.f_tol * (1.0 + best.value.abs()) * 1e-3 {
                    best.x = x;
                    best.value = v;
                    improved = true;
                    break;
                }
            }
        }
        if !improved {
            step /= 2.0;
        }
    }
    best.evaluations += evals;
}

fn single_run<F>(f: &mut F, x0: &[f64], opts: &NelderMeadOptions) -> Minimum
where
    F: FnMut(&[f64]) -> f64,
{
    let n = x0.len();
    let mut evals = 0;
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    let f0 = eval(f, x0, &mut evals);
    simplex.push((x0.to_vec(), f0));
    for i in 0..n {
        let mut best = None;
        for step in [
            opts.initial_step,
            -opts.initial_step,
            opts.initial_step / 4.0,
            -opts.initial_step / 4.0,
        ] {
            let mut x = x0.to_vec();
            x[i] += step;
            let v = eval(f, &x, &mut evals);
            if v.is_finite() {
                best = Some((x, v));
                break;
            }
            best.get_or_insert((x, v));
        }
        simplex.push(best.expect("at least one trial vertex"));
    }

    let mut iterations = 0;
    let mut converged = false;
    while iterations < opts.max_iter {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let (fbest, fworst) = (simplex[0].1, simplex[n].1);
        let spread = simplex
            .iter()
            .skip(1)
            .flat_map(|(x, _)| x.iter().zip(&simplex[0].0).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max);
        if fbest.is_finite() && (fworst - fbest).abs() <= opts.f_tol * (1.0 + fbest.abs()) && spread <= opts.x_tol {
            converged = true;
            break;
        }
        iterations += 1;

        let mut centroid = vec![0.0; n];
        for (x, _) in &simplex[..n] {
            for (c, xi) in centroid.iter_mut().zip(x) {
                *c += xi / n as f64;
            }
        }
        let worst = simplex[n].0.clone();
        let reflected = lerp(&centroid, &worst, -1.0);
        let fr = eval(f, &reflected, &mut evals);
        if fr < simplex[0].1 {
            let expanded = lerp(&centroid, &worst, -2.0);
            let fe = eval(f, &expanded, &mut evals);
            simplex[n] = if fe < fr { (expanded, fe) } else { (reflected, fr) };
            continue;
        }
        if fr < simplex[n - 1].1 {
            simplex[n] = (reflected, fr);
            continue;
        }
        let (contracted, fc) = if fr < fworst {
            let x = lerp(&centroid, &reflected, 0.5);
            let v = eval(f, &x, &mut evals);
            (x, v)
        } else {
            let x = lerp(&centroid, &worst, 0.5);
            let v = eval(f, &x, &mut evals);
            (x, v)
        };
        if fc < fworst.min(fr) {
            simplex[n] = (contracted, fc);
            continue;
        }
        let best = simplex[0].0.clone();
        for vertex in simplex.iter_mut().skip(1) {
            let x = lerp(&best, &vertex.0, 0.5);
            let v = eval(f, &x, &mut evals);
            *vertex = (x, v);
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (x, value) = simplex.swap_remove(0);
    Minimum {
        x,
        value,
        iterations,
        evaluations: evals,
        converged,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rosenbrock() {
        let m = nelder_mead(
            |x| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2),
            &[-1.2, 1.0],
            &NelderMeadOptions {
                initial_step: 0.5,
                ..Default::default()
            },
        );
        assert!(m.converged);
        assert!((m.x[0] - 1.0).abs() < 1e-5 && (m.x[1] - 1.0).abs() < 1e-5, "{m:?}");
    }

    #[test]
    fn respects_infeasible_region() {
        // minimum of the unconstrained quadratic sits at x = -1, outside x ≥ 0
        let m = nelder_mead(
            |x| {
                if x[0] < 0.0 {
                    f64::INFINITY
                } else {
                    (x[0] + 1.0).powi(2) + x[1] * x[1]
                }
            },
            &[0.5, 0.3],
            &NelderMeadOptions::default(),
        );
        assert!(m.x[0] >= 0.0 && m.x[0] < 1e-6, "{m:?}");
        assert!(m.x[1].abs() < 1e-6, "{m:?}");
    }

    #[test]
    fn nan_counts_as_infeasible() {
        let m = nelder_mead(
            |x| if x[0] > 2.0 { f64::NAN } else { (x[0] - 2.5).powi(2) },
            &[0.0],
            &Default::default(),
        );
        assert!(m.x[0] <= 2.0 && m.x[0] > 2.0 - 1e-6);
    }
}
