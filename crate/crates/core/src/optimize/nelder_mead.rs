//! Derivative-free Nelder–Mead simplex minimizer.

use crate::error::{Error, Result};

#[derive(Clone, Debug)]
pub struct NmOptions {
    pub reflection: f64,
    pub expansion: f64,
    pub contraction: f64,
    pub shrink: f64,
    /// Relative perturbation of each coordinate in the initial simplex.
    pub initial_step: f64,
    /// Perturbation used for coordinates that are exactly zero.
    pub zero_step: f64,
    /// Stop when `f_worst − f_best` drops below this ...
    pub f_tol: f64,
    /// ... and every vertex is within this (max-norm) distance of the best.
    pub x_tol: f64,
    /// Evaluation budget per dimension.
    pub evals_per_dim: usize,
}

impl Default for NmOptions {
    fn default() -> Self {
        Self {
            reflection: 1.0,
            expansion: 2.0,
            contraction: 0.5,
            shrink: 0.5,
            initial_step: 0.05,
            zero_step: 0.00025,
            f_tol: 1e-10,
            x_tol: 1e-8,
            evals_per_dim: 400,
        }
    }
}

#[derive(Clone, Debug)]
pub struct NmResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub evaluations: usize,
}

struct Counted<F> {
    f: F,
    evals: usize,
}

impl<F: FnMut(&[f64]) -> f64> Counted<F> {
    fn eval(&mut self, x: &[f64]) -> Result<f64> {
        self.evals += 1;
        let v = (self.f)(x);
        if v.is_nan() {
            return Err(Error::NanObjective {
                evaluation: self.evals,
            });
        }
        Ok(v)
    }
}

fn lerp(from: &[f64], to: &[f64], t: f64) -> Vec<f64> {
    // from + t (to − from)
    from.iter().zip(to).map(|(a, b)| a + t * (b - a)).collect()
}

/// Minimizes `objective` from `x0`.
pub fn nelder_mead<F>(objective: F, x0: &[f64], opts: &NmOptions) -> Result<NmResult>
where
    F: FnMut(&[f64]) -> f64,
{
    let dim = x0.len();
    let mut obj = Counted {
        f: objective,
        evals: 0,
    };
    let f0 = obj.eval(x0)?;
    if dim == 0 {
        return Ok(NmResult {
            x: vec![],
            value: f0,
            evaluations: 1,
        });
    }
    let budget = opts.evals_per_dim * dim;

    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(dim + 1);
    simplex.push((x0.to_vec(), f0));
    for i in 0..dim {
        let mut x = x0.to_vec();
        x[i] = if x[i] != 0.0 {
            x[i] * (1.0 + opts.initial_step)
        } else {
            opts.zero_step
        };
        let v = obj.eval(&x)?;
        simplex.push((x, v));
    }

    loop {
        // stable sort keeps earlier vertices first among ties
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let best = simplex[0].1;
        let worst = simplex[dim].1;
        let x_spread = simplex[1..]
            .iter()
            .flat_map(|(x, _)| x.iter().zip(&simplex[0].0).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max);
        if (worst - best <= opts.f_tol && x_spread <= opts.x_tol)
            || worst == best
            || obj.evals >= budget
        {
            break;
        }

        let mut centroid = vec![0.0; dim];
        for (x, _) in &simplex[..dim] {
            for (c, xi) in centroid.iter_mut().zip(x) {
                *c += xi / dim as f64;
            }
        }
        let xw = simplex[dim].0.clone();
        let second_worst = simplex[dim - 1].1;

        let xr = lerp(&centroid, &xw, -opts.reflection);
        let fr = obj.eval(&xr)?;
        if fr < best {
            let xe = lerp(&centroid, &xr, opts.expansion);
            let fe = obj.eval(&xe)?;
            simplex[dim] = if fe < fr { (xe, fe) } else { (xr, fr) };
            continue;
        }
        if fr < second_worst {
            simplex[dim] = (xr, fr);
            continue;
        }
        let (xc, fc) = if fr < worst {
            let xc = lerp(&centroid, &xr, opts.contraction);
            let fc = obj.eval(&xc)?;
            (xc, fc)
        } else {
            let xc = lerp(&centroid, &xw, opts.contraction);
            let fc = obj.eval(&xc)?;
            (xc, fc)
        };
        if fc < fr.min(worst) {
            simplex[dim] = (xc, fc);
            continue;
        }
        let x_best = simplex[0].0.clone();
        for vertex in simplex.iter_mut().skip(1) {
            let x = lerp(&x_best, &vertex.0, opts.shrink);
            let v = obj.eval(&x)?;
            *vertex = (x, v);
        }
    }
    let (x, value) = simplex.swap_remove(0);
    Ok(NmResult {
        x,
        value,
        evaluations: obj.evals,
    })
}
