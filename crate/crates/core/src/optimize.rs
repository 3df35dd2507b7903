//! Box-constrained Nelder–Mead maximizer.

pub const MAX_ITERATIONS: usize = 200;
pub const SIMPLEX_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct Maximum {
    pub point: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub evaluations: usize,
}

fn clamp(x: &mut [f64], bounds: &[(f64, f64)]) {
    for (v, &(lo, hi)) in x.iter_mut().zip(bounds) {
        *v = v.clamp(lo, hi);
    }
}

fn affine(a: &[f64], b: &[f64], t: f64) -> Vec<f64> {
    // a + t (b - a)
    a.iter().zip(b).map(|(x, y)| x + t * (y - x)).collect()
}

/// Maximizes `f` from `start` inside `bounds`. Trial points are projected
/// back into the box. Stops after `MAX_ITERATIONS` or when both the spread
/// of values and the simplex diameter fall below `SIMPLEX_TOL`.
pub fn nelder_mead_max<F>(mut f: F, start: &[f64], step: &[f64], bounds: &[(f64, f64)]) -> Maximum
where
    F: FnMut(&[f64]) -> f64,
{
    let n = start.len();
    let mut evaluations = 0;
    let mut eval = |x: &[f64]| {
        evaluations += 1;
        // minimize -f
        -f(x)
    };
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    let mut x0 = start.to_vec();
    clamp(&mut x0, bounds);
    simplex.push((x0.clone(), eval(&x0)));
    for i in 0..n {
        let mut x = x0.clone();
        x[i] += step[i];
        if x[i] > bounds[i].1 {
            x[i] = x0[i] - step[i];
        }
        clamp(&mut x, bounds);
        let v = eval(&x);
        simplex.push((x, v));
    }

    let mut iterations = 0;
    while iterations < MAX_ITERATIONS {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let spread = simplex[n].1 - simplex[0].1;
        let diameter = simplex[1..]
            .iter()
            .flat_map(|(x, _)| x.iter().zip(&simplex[0].0).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max);
        if spread.abs() < SIMPLEX_TOL && diameter < SIMPLEX_TOL {
            break;
        }
        iterations += 1;

        let centroid: Vec<f64> =
            (0..n).map(|j| simplex[..n].iter().map(|(x, _)| x[j]).sum::<f64>() / n as f64).collect();
        let worst = simplex[n].clone();
        let mut xr = affine(&centroid, &worst.0, -1.0);
        clamp(&mut xr, bounds);
        let fr = eval(&xr);

        if fr < simplex[0].1 {
            let mut xe = affine(&centroid, &worst.0, -2.0);
            clamp(&mut xe, bounds);
            let fe = eval(&xe);
            simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
        } else if fr < simplex[n - 1].1 {
            simplex[n] = (xr, fr);
        } else {
            let (xc, fc) = if fr < worst.1 {
                let xc = affine(&centroid, &xr, 0.5);
                let fc = eval(&xc);
                (xc, fc)
            } else {
                let xc = affine(&centroid, &worst.0, 0.5);
                let fc = eval(&xc);
                (xc, fc)
            };
            if fc < worst.1.min(fr) {
                simplex[n] = (xc, fc);
            } else {
                let best = simplex[0].0.clone();
                for item in simplex.iter_mut().skip(1) {
                    let x = affine(&best, &item.0, 0.5);
                    let v = eval(&x);
                    *item = (x, v);
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (point, v) = simplex.swap_remove(0);
    Maximum { point, value: -v, iterations, evaluations }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_interior_peak() {
        let m = nelder_mead_max(
            |x| -(x[0] - 0.3).powi(2) - 2.0 * (x[1] + 0.7).powi(2),
            &[0.0, 0.0],
            &[0.1, 0.1],
            &[(-2.0, 2.0), (-2.0, 2.0)],
        );
        assert!((m.point[0] - 0.3).abs() < 1e-4 && (m.point[1] + 0.7).abs() < 1e-4);
        assert!(m.iterations <= MAX_ITERATIONS);
    }

    #[test]
    fn respects_bounds() {
        let m = nelder_mead_max(|x| x[0], &[0.5], &[0.1], &[(0.0, 1.0)]);
        assert!((m.point[0] - 1.0).abs() < 1e-9);
        assert!((m.value - 1.0).abs() < 1e-9);
    }
}
