//! Nelder-Mead simplex minimizer used by the device calibration.

use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimplexOptions {
    pub max_evals: usize,
    /// Converged when the spread of objective values across the simplex falls below this.
    pub f_tol: f64,
    /// ... and every vertex lies within this distance of the best one (per coordinate).
    pub x_tol: f64,
    /// Initial edge length along each coordinate.
    pub initial_step: f64,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        Self { max_evals: 500, f_tol: 1e-10, x_tol: 1e-6, initial_step: 0.1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimplexResult {
    pub x: Vec<f64>,
    pub f: f64,
    pub evals: usize,
    pub converged: bool,
}

/// Minimize `f` starting at `x0`. Standard coefficients (1, 2, 0.5, 0.5).
/// Non-finite objective values are treated as `+inf`.
pub fn minimize<F>(mut f: F, x0: &[f64], opts: &SimplexOptions) -> SimplexResult
where
    F: FnMut(&[f64]) -> f64,
{
    let n = x0.len();
    let mut evals = 0usize;
    let mut eval = |x: &[f64], evals: &mut usize| {
        *evals += 1;
        let v = f(x);
        if v.is_finite() {
            v
        } else {
            f64::INFINITY
        }
    };

    if n == 0 {
        let v = eval(x0, &mut evals);
        return SimplexResult { x: Vec::new(), f: v, evals, converged: true };
    }

    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    let v0 = eval(x0, &mut evals);
    simplex.push((x0.to_vec(), v0));
    for i in 0..n {
        let mut x = x0.to_vec();
        x[i] += opts.initial_step;
        let v = eval(&x, &mut evals);
        simplex.push((x, v));
    }

    let converged = loop {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let (best, worst) = (simplex[0].1, simplex[n].1);
        let spread = simplex
            .iter()
            .flat_map(|(x, _)| x.iter().zip(&simplex[0].0).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max);
        if (worst - best).abs() <= opts.f_tol && spread <= opts.x_tol {
            break true;
        }
        if evals >= opts.max_evals {
            break false;
        }

        let centroid: Vec<f64> = (0..n)
            .map(|j| simplex[..n].iter().map(|(x, _)| x[j]).sum::<f64>() / n as f64)
            .collect();
        let along = |t: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&simplex[n].0)
                .map(|(c, w)| c + t * (w - c))
                .collect()
        };

        let xr = along(-1.0);
        let fr = eval(&xr, &mut evals);
        if fr < simplex[0].1 {
            let xe = along(-2.0);
            let fe = eval(&xe, &mut evals);
            simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
            continue;
        }
        if fr < simplex[n - 1].1 {
            simplex[n] = (xr, fr);
            continue;
        }
        let (xc, fc) = if fr < simplex[n].1 {
            let xc = along(-0.5);
            let fc = eval(&xc, &mut evals);
            (xc, fc)
        } else {
            let xc = along(0.5);
            let fc = eval(&xc, &mut evals);
            (xc, fc)
        };
        if fc < simplex[n].1.min(fr) {
            simplex[n] = (xc, fc);
            continue;
        }
        let x_best = simplex[0].0.clone();
        for v in simplex.iter_mut().skip(1) {
            v.0 = v.0.iter().zip(&x_best).map(|(a, b)| b + 0.5 * (a - b)).collect();
            v.1 = eval(&v.0, &mut evals);
        }
    };

    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (x, f) = simplex.swap_remove(0);
    SimplexResult { x, f, evals, converged }
}
