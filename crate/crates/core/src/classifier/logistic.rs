//! L2-regularized logistic regression on already standardized features.
//!
//! Parameters are laid out as `[intercept, w_1, .., w_d]`. The objective is
//! the mean negative log-likelihood plus `lambda / 2 * |w|^2`; the intercept
//! is not penalized.

/// Linear scores beyond this magnitude are clamped so the sigmoid stays
/// strictly inside (0, 1).
pub const LINEAR_CLAMP: f64 = 35.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub lambda: f64,
    /// Stop once the gradient's infinity norm falls below this.
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            lambda: 1e-3,
            tolerance: 1e-6,
            max_iterations: 10_000,
        }
    }
}

pub fn sigmoid(z: f64) -> f64 {
    let z = z.clamp(-LINEAR_CLAMP, LINEAR_CLAMP);
    1.0 / (1.0 + (-z).exp())
}

/// log(1 + e^z) without overflow.
fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

pub struct Objective<'a> {
    rows: &'a [Vec<f64>],
    targets: &'a [f64],
    lambda: f64,
}

impl<'a> Objective<'a> {
    /// `rows` are feature vectors of equal length, `targets` are 0 or 1.
    pub fn new(rows: &'a [Vec<f64>], targets: &'a [f64], lambda: f64) -> Self {
        assert_eq!(rows.len(), targets.len());
        assert!(!rows.is_empty());
        Objective { rows, targets, lambda }
    }

    pub fn dim(&self) -> usize {
        self.rows[0].len() + 1
    }

    fn linear(params: &[f64], row: &[f64]) -> f64 {
        params[0] + row.iter().zip(&params[1..]).map(|(x, w)| x * w).sum::<f64>()
    }

    fn penalty(&self, params: &[f64]) -> f64 {
        0.5 * self.lambda * params[1..].iter().map(|w| w * w).sum::<f64>()
    }

    pub fn loss(&self, params: &[f64]) -> f64 {
        let nll: f64 = self
            .rows
            .iter()
            .zip(self.targets)
            .map(|(row, y)| {
                let z = Self::linear(params, row);
                softplus(z) - y * z
            })
            .sum();
        nll / self.rows.len() as f64 + self.penalty(params)
    }

    pub fn gradient(&self, params: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; params.len()];
        for (row, y) in self.rows.iter().zip(self.targets) {
            let r = 1.0 / (1.0 + (-Self::linear(params, row)).exp()) - y;
            g[0] += r;
            for (gj, x) in g[1..].iter_mut().zip(row) {
                *gj += r * x;
            }
        }
        let n = self.rows.len() as f64;
        g[0] /= n;
        for (gj, w) in g[1..].iter_mut().zip(&params[1..]) {
            *gj = *gj / n + self.lambda * w;
        }
        g
    }

    fn hessian(&self, params: &[f64]) -> Vec<Vec<f64>> {
        let d = params.len();
        let mut h = vec![vec![0.0; d]; d];
        let mut x = vec![1.0; d];
        for row in self.rows {
            x[1..].copy_from_slice(row);
            let p = 1.0 / (1.0 + (-Self::linear(params, row)).exp());
            let s = p * (1.0 - p);
            for i in 0..d {
                for j in 0..=i {
                    h[i][j] += s * x[i] * x[j];
                }
            }
        }
        let n = self.rows.len() as f64;
        for i in 0..d {
            for j in 0..=i {
                h[i][j] /= n;
                h[j][i] = h[i][j];
            }
            if i > 0 {
                h[i][i] += self.lambda;
            }
        }
        h
    }
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Fit {
    pub params: Vec<f64>,
    pub iterations: usize,
    /// Objective value at the start and after every accepted step.
    pub loss_trace: Vec<f64>,
    pub converged: bool,
}

impl Fit {
    pub fn final_loss(&self) -> f64 {
        *self.loss_trace.last().expect("trace starts with the initial loss")
    }
}

const ARMIJO_C: f64 = 1e-4;
const MIN_STEP: f64 = 1e-18;

/// Full-batch gradient descent from zero with Armijo backtracking. Every
/// accepted step lowers the objective, so the trace never increases.
pub fn gradient_descent(obj: &Objective<'_>, opts: &SolverOptions) -> Fit {
    let mut params = vec![0.0; obj.dim()];
    let mut loss = obj.loss(&params);
    let mut trace = vec![loss];
    let mut step = 1.0;
    let mut iterations = 0;
    let mut converged = false;
    let mut candidate = vec![0.0; params.len()];
    while iterations < opts.max_iterations {
        let g = obj.gradient(&params);
        if inf_norm(&g) < opts.tolerance {
            converged = true;
            break;
        }
        let g_sq: f64 = g.iter().map(|x| x * x).sum();
        // Let the step grow again after easy iterations.
        step *= 2.0;
        let accepted = loop {
            for ((c, p), gi) in candidate.iter_mut().zip(&params).zip(&g) {
                *c = p - step * gi;
            }
            let next = obj.loss(&candidate);
            if next <= loss - ARMIJO_C * step * g_sq {
                break Some(next);
            }
            step *= 0.5;
            if step < MIN_STEP {
                break None;
            }
        };
        let Some(next) = accepted else {
            // No representable descent step is left; the point is as good as it gets.
            break;
        };
        std::mem::swap(&mut params, &mut candidate);
        loss = next;
        trace.push(loss);
        iterations += 1;
    }
    if !converged {
        converged = inf_norm(&obj.gradient(&params)) < opts.tolerance;
    }
    Fit {
        params,
        iterations,
        loss_trace: trace,
        converged,
    }
}

/// Solves `a x = b` by Gaussian elimination with partial pivoting.
fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[pivot][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            if f != 0.0 {
                for k in col..n {
                    a[row][k] -= f * a[col][k];
                }
                b[row] -= f * b[col];
            }
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    Some(x)
}

/// Damped Newton iterations on the same objective. Reaches the same minimizer
/// as [`gradient_descent`] in far fewer steps; used inside cross-validation.
pub fn newton(obj: &Objective<'_>, opts: &SolverOptions) -> Fit {
    const MAX_NEWTON: usize = 100;
    let mut params = vec![0.0; obj.dim()];
    let mut loss = obj.loss(&params);
    let mut trace = vec![loss];
    let mut converged = false;
    let mut iterations = 0;
    while iterations < MAX_NEWTON {
        let g = obj.gradient(&params);
        if inf_norm(&g) < opts.tolerance {
            converged = true;
            break;
        }
        let dir = solve(obj.hessian(&params), g.clone()).unwrap_or(g);
        let mut step = 1.0;
        let accepted = loop {
            let cand: Vec<f64> = params.iter().zip(&dir).map(|(p, d)| p - step * d).collect();
            let next = obj.loss(&cand);
            if next <= loss {
                break Some((cand, next));
            }
            step *= 0.5;
            if step < MIN_STEP {
                break None;
            }
        };
        let Some((cand, next)) = accepted else { break };
        params = cand;
        loss = next;
        trace.push(loss);
        iterations += 1;
    }
    Fit {
        params,
        iterations,
        loss_trace: trace,
        converged,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn problem(seed: u64, n: usize, d: usize) -> (Vec<Vec<f64>>, Vec<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rows: Vec<Vec<f64>> = (0..n).map(|_| (0..d).map(|_| rng.gen_range(-2.0..2.0)).collect()).collect();
        let targets = rows
            .iter()
            .map(|r| if r[0] + 0.5 * r[1 % d] + rng.gen_range(-1.0..1.0) > 0.0 { 1.0 } else { 0.0 })
            .collect();
        (rows, targets)
    }

    #[test]
    fn gradient_matches_central_differences() {
        let (rows, targets) = problem(3, 60, 5);
        let obj = Objective::new(&rows, &targets, 1e-3);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let h = 1e-5;
        for _ in 0..20 {
            let p: Vec<f64> = (0..6).map(|_| rng.gen_range(-1.5..1.5)).collect();
            let g = obj.gradient(&p);
            for j in 0..p.len() {
                let (mut up, mut down) = (p.clone(), p.clone());
                up[j] += h;
                down[j] -= h;
                let fd = (obj.loss(&up) - obj.loss(&down)) / (2.0 * h);
                let rel = (g[j] - fd).abs() / g[j].abs().max(fd.abs()).max(1e-8);
                assert!(rel < 1e-6, "coordinate {j}: analytic {} vs numeric {fd}", g[j]);
            }
        }
    }

    #[test]
    fn descent_trace_never_increases() {
        let (rows, targets) = problem(5, 80, 3);
        let fit = gradient_descent(&Objective::new(&rows, &targets, 1e-3), &SolverOptions::default());
        assert!(fit.loss_trace.windows(2).all(|w| w[1] <= w[0]));
        assert!(fit.converged);
        assert_eq!(fit.loss_trace.len(), fit.iterations + 1);
    }

    #[test]
    fn newton_and_descent_agree() {
        let (rows, targets) = problem(9, 100, 4);
        let obj = Objective::new(&rows, &targets, 1e-3);
        let opts = SolverOptions::default();
        let a = gradient_descent(&obj, &opts);
        let b = newton(&obj, &opts);
        assert!(b.converged);
        for (x, y) in a.params.iter().zip(&b.params) {
            assert!((x - y).abs() < 1e-3, "{x} vs {y}");
        }
    }

    #[test]
    fn zero_parameters_give_one_half() {
        assert_eq!(sigmoid(0.0), 0.5);
        assert!(sigmoid(1e6) < 1.0 && sigmoid(-1e6) > 0.0);
    }

    #[test]
    fn separable_line_is_fit_exactly() {
        let rows: Vec<Vec<f64>> = [-3.0, -2.0, -1.0, -0.5, 0.5, 1.0, 2.0, 3.0].iter().map(|&x| vec![x]).collect();
        let targets = [0.0, 0.0, 0.0, 0.0, 1.0, 1.0, 1.0, 1.0];
        let fit = gradient_descent(&Objective::new(&rows, &targets, 1e-3), &SolverOptions::default());
        for (row, y) in rows.iter().zip(targets) {
            let p = sigmoid(fit.params[0] + fit.params[1] * row[0]);
            assert_eq!(p > 0.5, y == 1.0);
        }
    }

    #[test]
    fn solver_handles_singular_systems() {
        assert!(solve(vec![vec![0.0, 0.0], vec![0.0, 0.0]], vec![1.0, 1.0]).is_none());
        let x = solve(vec![vec![2.0, 1.0], vec![1.0, 3.0]], vec![3.0, 5.0]).unwrap();
        assert!((x[0] - 0.8).abs() < 1e-12 && (x[1] - 1.4).abs() < 1e-12);
    }
}
