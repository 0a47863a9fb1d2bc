//! Nelder–Mead minimization inside the unit box.
//!
//! Trial points are clamped to `[0, 1]^d`. The best vertex never gets worse
//! between iterations, so the returned point is at least as good as the
//! start.

#[derive(Clone, Debug, PartialEq)]
pub struct SimplexOutcome {
    pub best: Vec<f64>,
    pub value: f64,
    pub evaluations: usize,
    pub converged: bool,
}

#[derive(Clone, Copy, Debug)]
pub struct SimplexSettings {
    /// Stop once `f(worst) − f(best)` falls to this level.
    pub tolerance: f64,
    /// Also require every vertex within this distance of the best one.
    pub min_size: f64,
    pub max_evaluations: usize,
}

fn clamp_unit(x: &mut [f64]) {
    for v in x {
        *v = v.clamp(0.0, 1.0);
    }
}

fn combine(a: &[f64], b: &[f64], t: f64) -> Vec<f64> {
    // a + t·(b − a)
    let mut out: Vec<f64> = a.iter().zip(b).map(|(x, y)| x + t * (y - x)).collect();
    clamp_unit(&mut out);
    out
}

/// Minimize `f` from `start`, with an initial simplex built from `steps`
/// along each axis (flipped inward where the box boundary is hit).
pub fn minimize(
    mut f: impl FnMut(&[f64]) -> f64,
    start: &[f64],
    steps: &[f64],
    settings: &SimplexSettings,
) -> SimplexOutcome {
    let dim = start.len();
    let mut evaluations = 0usize;
    let mut eval = |x: &[f64], evaluations: &mut usize| {
        *evaluations += 1;
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };

    let mut origin = start.to_vec();
    clamp_unit(&mut origin);
    let f0 = eval(&origin, &mut evaluations);
    let mut simplex = vec![(origin.clone(), f0)];
    for d in 0..dim {
        if evaluations >= settings.max_evaluations {
            break;
        }
        let mut v = origin.clone();
        v[d] = if origin[d] + steps[d] <= 1.0 { origin[d] + steps[d] } else { origin[d] - steps[d] };
        clamp_unit(&mut v);
        let fv = eval(&v, &mut evaluations);
        simplex.push((v, fv));
    }
    if simplex.len() < dim + 1 || dim == 0 {
        return finish(simplex, evaluations, dim == 0);
    }

    loop {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let (best, worst) = (simplex[0].1, simplex[dim].1);
        let size = simplex[1..]
            .iter()
            .map(|(v, _)| {
                v.iter()
                    .zip(&simplex[0].0)
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max);
        if (worst - best).abs() <= settings.tolerance && size <= settings.min_size {
            return finish(simplex, evaluations, true);
        }
        if evaluations >= settings.max_evaluations {
            return finish(simplex, evaluations, false);
        }

        let centroid: Vec<f64> = (0..dim)
            .map(|k| simplex[..dim].iter().map(|(v, _)| v[k]).sum::<f64>() / dim as f64)
            .collect();
        let worst_point = simplex[dim].0.clone();

        let reflected = combine(&centroid, &worst_point, -1.0);
        let fr = eval(&reflected, &mut evaluations);
        if fr < simplex[0].1 {
            if evaluations < settings.max_evaluations {
                let expanded = combine(&centroid, &worst_point, -2.0);
                let fe = eval(&expanded, &mut evaluations);
                simplex[dim] = if fe < fr { (expanded, fe) } else { (reflected, fr) };
            } else {
                simplex[dim] = (reflected, fr);
            }
            continue;
        }
        if fr < simplex[dim - 1].1 {
            simplex[dim] = (reflected, fr);
            continue;
        }
        if evaluations >= settings.max_evaluations {
            continue;
        }
        // Contract toward the better of the worst point and its reflection.
        let (towards, f_towards) = if fr < simplex[dim].1 { (reflected, fr) } else { (worst_point, simplex[dim].1) };
        let contracted = combine(&centroid, &towards, 0.5);
        let fc = eval(&contracted, &mut evaluations);
        if fc < f_towards {
            simplex[dim] = (contracted, fc);
            continue;
        }
        let anchor = simplex[0].0.clone();
        for vertex in simplex.iter_mut().skip(1) {
            if evaluations >= settings.max_evaluations {
                break;
            }
            let shrunk = combine(&anchor, &vertex.0, 0.5);
            let fs = eval(&shrunk, &mut evaluations);
            *vertex = (shrunk, fs);
        }
    }
}

fn finish(mut simplex: Vec<(Vec<f64>, f64)>, evaluations: usize, converged: bool) -> SimplexOutcome {
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (best, value) = simplex.swap_remove(0);
    SimplexOutcome {
        best,
        value,
        evaluations,
        converged,
    }
}
