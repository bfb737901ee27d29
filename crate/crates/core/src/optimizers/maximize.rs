use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};

/// Best point of `score` over the box `[lower, upper]` (both inclusive).
///
/// Scores `n_candidates` uniform draws followed by every point in `prior`,
/// keeps the first strict maximum, then runs `n_refinements` rounds of
/// coordinate moves of radius `0.1 * side`, halving the radius each round.
/// Candidates are drawn sequentially from `rng` and scored in parallel, so
/// the result depends only on the rng state.
pub fn maximize_acquisition<F, R>(
    score: F,
    lower: &[f64],
    upper: &[f64],
    prior: &[&[f64]],
    rng: &mut R,
    n_candidates: usize,
    n_refinements: usize,
) -> Result<(Vec<f64>, f64)>
where
    F: Fn(&[f64]) -> Result<f64> + Sync,
    R: Rng + ?Sized,
{
    let d = lower.len();
    if d == 0 || upper.len() != d {
        return Err(Error::InvalidArgument("box bounds must share a nonzero dimension".into()));
    }
    if lower.iter().zip(upper).any(|(l, u)| !(l <= u)) {
        return Err(Error::InvalidArgument(format!("empty box {lower:?} .. {upper:?}")));
    }
    if n_candidates == 0 && prior.is_empty() {
        return Err(Error::InvalidArgument("nothing to score".into()));
    }

    let mut points: Vec<Vec<f64>> = Vec::with_capacity(n_candidates + prior.len());
    for _ in 0..n_candidates {
        points.push(
            lower
                .iter()
                .zip(upper)
                .map(|(&l, &u)| (l + rng.random::<f64>() * (u - l)).min(u))
                .collect(),
        );
    }
    points.extend(prior.iter().map(|p| p.to_vec()));

    let scores: Vec<f64> = points.par_iter().map(|x| score(x)).collect::<Result<_>>()?;
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate() {
        if s.is_nan() {
            return Err(Error::NanScore { point: points[i].clone() });
        }
        if s > scores[best] {
            best = i;
        }
    }
    let mut x = points.swap_remove(best);
    let mut fx = scores[best];

    let mut radius: Vec<f64> = lower.iter().zip(upper).map(|(l, u)| 0.1 * (u - l)).collect();
    for _ in 0..n_refinements {
        for j in 0..d {
            for sign in [1.0, -1.0] {
                let mut y = x.clone();
                y[j] = (x[j] + sign * radius[j]).clamp(lower[j], upper[j]);
                if y[j] == x[j] {
                    continue;
                }
                let fy = score(&y)?;
                if fy.is_nan() {
                    return Err(Error::NanScore { point: y });
                }
                if fy > fx {
                    x = y;
                    fx = fy;
                }
            }
        }
        radius.iter_mut().for_each(|r| *r *= 0.5);
    }
    Ok((x, fx))
}
