//! Derivative-free Nelder-Mead simplex minimization with optional box projection.

/// Tuning knobs for [`nelder_mead`].
#[derive(Debug, Clone)]
pub struct NelderMeadConfig {
    /// Stop once every vertex lies within this max-norm distance of the best one.
    pub diameter_tol: f64,
    pub max_iter: usize,
    /// Initial edge length along each coordinate.
    pub initial_step: f64,
    /// Optional per-coordinate `[lo, hi]`; trial points are clamped into it.
    pub bounds: Option<Vec<(f64, f64)>>,
}

impl Default for NelderMeadConfig {
    fn default() -> Self {
        Self {
            diameter_tol: 1e-8,
            max_iter: 2_000,
            initial_step: 0.1,
            bounds: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct NelderMeadResult {
    pub x: Vec<f64>,
    pub fx: f64,
    pub iterations: usize,
    pub converged: bool,
}

const REFLECT: f64 = 1.0;
const EXPAND: f64 = 2.0;
const CONTRACT: f64 = 0.5;
const SHRINK: f64 = 0.5;

/// Minimizes `f` starting from `x0`. Non-finite objective values rank as +∞.
pub fn nelder_mead<F>(mut f: F, x0: &[f64], config: &NelderMeadConfig) -> NelderMeadResult
where
    F: FnMut(&[f64]) -> f64,
{
    let n = x0.len();
    let project = |x: &mut [f64]| {
        if let Some(bounds) = &config.bounds {
            for (xi, &(lo, hi)) in x.iter_mut().zip(bounds) {
                *xi = xi.clamp(lo, hi);
            }
        }
    };
    let mut eval = |x: &[f64]| {
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };

    let mut start = x0.to_vec();
    project(&mut start);
    if n == 0 {
        let fx = eval(&start);
        return NelderMeadResult {
            x: start,
            fx,
            iterations: 0,
            converged: true,
        };
    }

    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    simplex.push(start.clone());
    for i in 0..n {
        let mut v = start.clone();
        v[i] += config.initial_step;
        project(&mut v);
        if (v[i] - start[i]).abs() < 1e-12 {
            // Pinned against the upper bound; step inward instead.
            v[i] = start[i] - config.initial_step;
            project(&mut v);
        }
        simplex.push(v);
    }
    let mut values: Vec<f64> = simplex.iter().map(|v| eval(v)).collect();

    let mut iterations = 0;
    let mut converged = false;
    while iterations < config.max_iter {
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        simplex = order.iter().map(|&i| simplex[i].clone()).collect();
        values = order.iter().map(|&i| values[i]).collect();

        let diameter = simplex[1..]
            .iter()
            .map(|v| {
                v.iter()
                    .zip(&simplex[0])
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max);
        if diameter < config.diameter_tol {
            converged = true;
            break;
        }
        iterations += 1;

        let mut centroid = vec![0.0; n];
        for v in &simplex[..n] {
            for (c, x) in centroid.iter_mut().zip(v) {
                *c += x / n as f64;
            }
        }
        let toward = |coef: f64| -> Vec<f64> {
            let mut p: Vec<f64> = centroid
                .iter()
                .zip(&simplex[n])
                .map(|(c, w)| c + coef * (c - w))
                .collect();
            project(&mut p);
            p
        };

        let reflected = toward(REFLECT);
        let f_reflected = eval(&reflected);
        if f_reflected < values[0] {
            let expanded = toward(EXPAND);
            let f_expanded = eval(&expanded);
            if f_expanded < f_reflected {
                simplex[n] = expanded;
                values[n] = f_expanded;
            } else {
                simplex[n] = reflected;
                values[n] = f_reflected;
            }
            continue;
        }
        if f_reflected < values[n - 1] {
            simplex[n] = reflected;
            values[n] = f_reflected;
            continue;
        }
        let (contracted, f_contracted) = if f_reflected < values[n] {
            let c = toward(REFLECT * CONTRACT);
            let fc = eval(&c);
            (c, fc)
        } else {
            let c = toward(-CONTRACT);
            let fc = eval(&c);
            (c, fc)
        };
        if f_contracted < values[n].min(f_reflected) {
            simplex[n] = contracted;
            values[n] = f_contracted;
            continue;
        }
        let best = simplex[0].clone();
        for i in 1..=n {
            let mut v: Vec<f64> = simplex[i]
                .iter()
                .zip(&best)
                .map(|(x, b)| b + SHRINK * (x - b))
                .collect();
            project(&mut v);
            values[i] = eval(&v);
            simplex[i] = v;
        }
    }

    let best = (0..=n)
        .min_by(|&a, &b| values[a].total_cmp(&values[b]))
        .expect("simplex is nonempty");
    NelderMeadResult {
        x: simplex[best].clone(),
        fx: values[best],
        iterations,
        converged,
    }
}
