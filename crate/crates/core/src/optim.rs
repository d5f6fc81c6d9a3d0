//! A small dense BFGS minimizer with Armijo backtracking.

#[derive(Clone, Copy, Debug)]
pub struct BfgsOptions {
    pub max_iterations: usize,
    /// Stop when the objective improves by less than this between iterations.
    pub f_tolerance: f64,
    /// Stop when the largest gradient component falls below this.
    pub g_tolerance: f64,
}

impl Default for BfgsOptions {
    fn default() -> Self {
        BfgsOptions { max_iterations: 10_000, f_tolerance: 1e-10, g_tolerance: 1e-9 }
    }
}

#[derive(Clone, Debug)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Minimizes `f`, which returns the objective and writes the gradient.
pub fn minimize<F>(mut f: F, x0: &[f64], opts: BfgsOptions) -> Minimum
where
    F: FnMut(&[f64], &mut [f64]) -> f64,
{
    let d = x0.len();
    let mut x = x0.to_vec();
    let mut g = vec![0.0; d];
    let mut fx = f(&x, &mut g);
    let mut h = identity(d);
    let mut x_new = vec![0.0; d];
    let mut g_new = vec![0.0; d];
    let mut dir = vec![0.0; d];
    let mut restarted = false;

    for it in 0..opts.max_iterations {
        if inf_norm(&g) <= opts.g_tolerance {
            return Minimum { x, value: fx, iterations: it, converged: true };
        }
        for i in 0..d {
            dir[i] = -(0..d).map(|j| h[i * d + j] * g[j]).sum::<f64>();
        }
        let mut slope = dot(&dir, &g);
        if slope >= 0.0 {
            // not a descent direction: fall back to steepest descent
            h = identity(d);
            for i in 0..d {
                dir[i] = -g[i];
            }
            slope = -dot(&g, &g);
        }

        let mut step = 1.0;
        let mut accepted = false;
        let mut f_new = fx;
        for _ in 0..60 {
            for i in 0..d {
                x_new[i] = x[i] + step * dir[i];
            }
            f_new = f(&x_new, &mut g_new);
            if f_new.is_finite() && f_new <= fx + 1e-4 * step * slope {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            if restarted {
                return Minimum { x, value: fx, iterations: it, converged: inf_norm(&g) < 1e-6 };
            }
            restarted = true;
            h = identity(d);
            continue;
        }
        restarted = false;

        let s: Vec<f64> = (0..d).map(|i| x_new[i] - x[i]).collect();
        let y: Vec<f64> = (0..d).map(|i| g_new[i] - g[i]).collect();
        let improvement = fx - f_new;
        std::mem::swap(&mut x, &mut x_new);
        std::mem::swap(&mut g, &mut g_new);
        fx = f_new;
        if improvement.abs() <= opts.f_tolerance && inf_norm(&g) <= opts.g_tolerance.max(1e-6) {
            return Minimum { x, value: fx, iterations: it + 1, converged: true };
        }

        let sy = dot(&s, &y);
        if sy > 1e-300 {
            bfgs_update(&mut h, &s, &y, sy);
        }
    }
    Minimum { x, value: fx, iterations: opts.max_iterations, converged: false }
}

fn bfgs_update(h: &mut [f64], s: &[f64], y: &[f64], sy: f64) {
    let d = s.len();
    let rho = 1.0 / sy;
    let hy: Vec<f64> = (0..d).map(|i| (0..d).map(|j| h[i * d + j] * y[j]).sum()).collect();
    let yhy = dot(y, &hy);
    for i in 0..d {
        for j in 0..d {
            h[i * d + j] += -rho * (hy[i] * s[j] + s[i] * hy[j]) + (rho * rho * yhy + rho) * s[i] * s[j];
        }
    }
}

fn identity(d: usize) -> Vec<f64> {
    let mut m = vec![0.0; d * d];
    for i in 0..d {
        m[i * d + i] = 1.0;
    }
    m
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}
