//! Nelder–Mead simplex search inside a box.
//!
//! Trial points outside the box are projected back onto it, so every
//! evaluation happens at a feasible point.

/// Result of one simplex search.
#[derive(Debug, Clone, PartialEq)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub evaluations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimplexOptions {
    /// Edge length of the initial simplex along each axis.
    pub initial_step: Vec<f64>,
    pub max_evaluations: usize,
    /// Converged once every vertex is within `x_tol` of the best one
    /// (per coordinate) ...
    pub x_tol: f64,
    /// ... and the vertex values agree to `f_tol · (|f_best| + f_tol)`.
    pub f_tol: f64,
}

impl SimplexOptions {
    pub fn new(initial_step: Vec<f64>) -> Self {
        Self {
            initial_step,
            max_evaluations: 4000,
            x_tol: 1e-7,
            f_tol: 1e-10,
        }
    }
}

fn project(x: &mut [f64], lower: &[f64], upper: &[f64]) {
    for ((v, &lo), &hi) in x.iter_mut().zip(lower).zip(upper) {
        *v = v.clamp(lo, hi);
    }
}

fn combine(a: &[f64], b: &[f64], t: f64) -> Vec<f64> {
    // a + t (b − a)
    a.iter().zip(b).map(|(&p, &q)| p + t * (q - p)).collect()
}

/// Minimizes `f` from `start` over `[lower, upper]`. Non-finite values of
/// `f` count as `+∞`.
pub fn minimize(
    mut f: impl FnMut(&[f64]) -> f64,
    start: &[f64],
    lower: &[f64],
    upper: &[f64],
    options: &SimplexOptions,
) -> Minimum {
    let n = start.len();
    assert!(lower.len() == n && upper.len() == n && options.initial_step.len() == n);
    let evaluations = std::cell::Cell::new(0usize);
    let mut eval = |x: &[f64]| {
        evaluations.set(evaluations.get() + 1);
        let v = f(x);
        if v.is_finite() {
            v
        } else {
            f64::INFINITY
        }
    };

    let mut x0 = start.to_vec();
    project(&mut x0, lower, upper);
    let mut simplex = vec![x0.clone()];
    for i in 0..n {
        let mut v = x0.clone();
        let step = options.initial_step[i];
        v[i] = if v[i] + step <= upper[i] {
            v[i] + step
        } else {
            v[i] - step
        };
        project(&mut v, lower, upper);
        simplex.push(v);
    }
    let mut values: Vec<f64> = simplex.iter().map(|v| eval(v)).collect();

    let converged = loop {
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
        simplex = order.iter().map(|&i| simplex[i].clone()).collect();
        values = order.iter().map(|&i| values[i]).collect();

        let best = values[0];
        let spread = values[n] - best;
        let size = simplex[1..]
            .iter()
            .flat_map(|v| v.iter().zip(&simplex[0]).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max);
        if spread.is_finite() && spread <= options.f_tol * (best.abs() + options.f_tol) && size <= options.x_tol {
            break true;
        }
        if evaluations.get() >= options.max_evaluations {
            break false;
        }

        let centroid: Vec<f64> = (0..n)
            .map(|d| simplex[..n].iter().map(|v| v[d]).sum::<f64>() / n as f64)
            .collect();
        let worst = simplex[n].clone();

        let mut reflected = combine(&centroid, &worst, -1.0);
        project(&mut reflected, lower, upper);
        let fr = eval(&reflected);
        if fr < values[0] {
            let mut expanded = combine(&centroid, &worst, -2.0);
            project(&mut expanded, lower, upper);
            let fe = eval(&expanded);
            if fe < fr {
                simplex[n] = expanded;
                values[n] = fe;
            } else {
                simplex[n] = reflected;
                values[n] = fr;
            }
            continue;
        }
        if fr < values[n - 1] {
            simplex[n] = reflected;
            values[n] = fr;
            continue;
        }
        let (mut contracted, reference) = if fr < values[n] {
            (combine(&centroid, &worst, -0.5), fr)
        } else {
            (combine(&centroid, &worst, 0.5), values[n])
        };
        project(&mut contracted, lower, upper);
        let fc = eval(&contracted);
        if fc < reference {
            simplex[n] = contracted;
            values[n] = fc;
            continue;
        }
        for i in 1..=n {
            simplex[i] = combine(&simplex[0], &simplex[i], 0.5);
            values[i] = eval(&simplex[i]);
        }
    };

    Minimum {
        x: simplex[0].clone(),
        value: values[0],
        evaluations: evaluations.get(),
        converged,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_rosenbrock_minimum() {
        let rosen = |x: &[f64]| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2);
        let mut opts = SimplexOptions::new(vec![0.5, 0.5]);
        opts.max_evaluations = 10_000;
        let m = minimize(rosen, &[-1.2, 1.0], &[-5.0, -5.0], &[5.0, 5.0], &opts);
        assert!(m.converged);
        assert!((m.x[0] - 1.0).abs() < 1e-5 && (m.x[1] - 1.0).abs() < 1e-5, "{:?}", m.x);
    }

    #[test]
    fn stops_on_the_boundary() {
        let f = |x: &[f64]| (x[0] + 3.0).powi(2) + (x[1] - 0.5).powi(2);
        let m = minimize(
            f,
            &[1.0, 1.0],
            &[0.0, 0.0],
            &[2.0, 2.0],
            &SimplexOptions::new(vec![0.3, 0.3]),
        );
        assert!(m.converged);
        assert_eq!(m.x[0], 0.0);
        assert!((m.x[1] - 0.5).abs() < 1e-6);
    }

    #[test]
    fn evaluation_budget_reports_non_convergence() {
        let f = |x: &[f64]| x[0] * x[0];
        let mut opts = SimplexOptions::new(vec![1.0]);
        opts.max_evaluations = 5;
        let m = minimize(f, &[10.0], &[-100.0], &[100.0], &opts);
        assert!(!m.converged);
        assert!(m.evaluations >= 5);
    }

    #[test]
    fn non_finite_values_are_avoided() {
        let f = |x: &[f64]| if x[0] < 0.0 { f64::NAN } else { (x[0] - 1.0).powi(2) };
        let m = minimize(f, &[0.2], &[-2.0], &[3.0], &SimplexOptions::new(vec![0.5]));
        assert!((m.x[0] - 1.0).abs() < 1e-6);
    }
}
