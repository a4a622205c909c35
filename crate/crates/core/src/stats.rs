//! Bootstrap confidence intervals, total-variation distance and
//! calibration-rescaling scans.

use rand::distr::{weighted::WeightedIndex, Distribution as _};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Binomial;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circuit::Timeline;
use crate::error::{Error, Result};
use crate::noise::{simulate, DeviceCalibration, SimOptions};

/// Resamples handed to one RNG stream; fixes the work split so results do
/// not depend on the thread count.
const CHUNK: usize = 256;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceInterval {
    /// Statistic on the original data.
    pub estimate: f64,
    /// Mean of the bootstrap replicates.
    pub bootstrap_mean: f64,
    pub low: f64,
    pub high: f64,
    pub level: f64,
}

impl ConfidenceInterval {
    pub fn width(&self) -> f64 {
        self.high - self.low
    }

    /// Degenerate interval at a known value.
    pub fn point(value: f64, level: f64) -> Self {
        Self { estimate: value, bootstrap_mean: value, low: value, high: value, level }
    }
}

fn check_bootstrap_args(level: f64, resamples: usize) -> Result<()> {
    if level != 0.95 && level != 0.99 {
        return Err(Error::InvalidArgument(format!("confidence level {level} must be 0.95 or 0.99")));
    }
    if resamples < 100 {
        return Err(Error::InvalidArgument(format!("{resamples} resamples is too few (need at least 100)")));
    }
    Ok(())
}

/// Linear-interpolated quantile of sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// Runs `draw` once per resample with chunked, seed-derived RNG streams and
/// summarizes the replicates as a percentile interval.
fn percentile_bootstrap<F>(estimate: f64, level: f64, resamples: usize, seed: u64, draw: F) -> ConfidenceInterval
where
    F: Fn(&mut ChaCha8Rng) -> f64 + Sync,
{
    let chunks = resamples.div_ceil(CHUNK);
    let mut reps: Vec<f64> = (0..chunks)
        .into_par_iter()
        .flat_map_iter(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c as u64);
            let len = CHUNK.min(resamples - c * CHUNK);
            (0..len).map(|_| draw(&mut rng)).collect::<Vec<_>>()
        })
        .collect();
    let bootstrap_mean = reps.iter().sum::<f64>() / reps.len() as f64;
    reps.sort_by(f64::total_cmp);
    let alpha = 1.0 - level;
    ConfidenceInterval {
        estimate,
        bootstrap_mean,
        low: quantile(&reps, alpha / 2.0),
        high: quantile(&reps, 1.0 - alpha / 2.0),
        level,
    }
}

/// Percentile bootstrap of the mean of `samples` (for example per-shot
/// success indicators).
pub fn bootstrap_ci(samples: &[f64], level: f64, resamples: usize, seed: u64) -> Result<ConfidenceInterval> {
    if samples.is_empty() {
        return Err(Error::EmptyInput("bootstrap samples"));
    }
    check_bootstrap_args(level, resamples)?;
    let n = samples.len();
    let mean = samples.iter().sum::<f64>() / n as f64;
    Ok(percentile_bootstrap(mean, level, resamples, seed, |rng| {
        (0..n).map(|_| samples[rng.random_range(0..n)]).sum::<f64>() / n as f64
    }))
}

/// Successes out of shots for one marked state.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SuccessCounts {
    pub successes: u64,
    pub shots: u64,
}

/// Percentile bootstrap of a weighted success average over marked states.
///
/// Each replicate redraws every marked state's shots (a binomial draw at the
/// observed rate). With `resample_marked`, the marked states themselves are
/// also redrawn with probabilities given by `weights`, and the replicate is
/// the plain mean of the drawn states.
pub fn bootstrap_success(
    per_marked: &[SuccessCounts],
    weights: Option<&[f64]>,
    resample_marked: bool,
    level: f64,
    resamples: usize,
    seed: u64,
) -> Result<ConfidenceInterval> {
    if per_marked.is_empty() {
        return Err(Error::EmptyInput("marked-state counts"));
    }
    check_bootstrap_args(level, resamples)?;
    if per_marked.iter().any(|c| c.shots == 0 || c.successes > c.shots) {
        return Err(Error::InvalidArgument("each marked state needs shots ≥ successes and shots > 0".into()));
    }
    let m = per_marked.len();
    let uniform = vec![1.0 / m as f64; m];
    let weights = weights.unwrap_or(&uniform);
    if weights.len() != m {
        return Err(Error::DimensionMismatch { expected: m, actual: weights.len() });
    }
    let wsum: f64 = weights.iter().sum();
    if !(wsum > 0.0) || weights.iter().any(|w| *w < 0.0) {
        return Err(Error::InvalidArgument("weights must be nonnegative with a positive sum".into()));
    }
    let rates: Vec<f64> = per_marked.iter().map(|c| c.successes as f64 / c.shots as f64).collect();
    let estimate = rates.iter().zip(weights).map(|(r, w)| r * w).sum::<f64>() / wsum;
    let binomials: Vec<Binomial> =
        per_marked.iter().zip(&rates).map(|(c, &r)| Binomial::new(c.shots, r).expect("valid rate")).collect();
    let picker = WeightedIndex::new(weights).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    Ok(percentile_bootstrap(estimate, level, resamples, seed, |rng| {
        let redraw = |i: usize, rng: &mut ChaCha8Rng| binomials[i].sample(rng) as f64 / per_marked[i].shots as f64;
        if resample_marked {
            (0..m).map(|_| redraw(picker.sample(rng), rng)).sum::<f64>() / m as f64
        } else {
            (0..m).map(|i| weights[i] * redraw(i, rng)).sum::<f64>() / wsum
        }
    }))
}

/// Percentile bootstrap of a statistic computed from several shot histograms.
///
/// Each replicate redraws every histogram multinomially at its observed
/// frequencies (same shot total) and evaluates `statistic` on the redrawn
/// frequency vectors. This covers statistics that post-process the whole
/// distribution, such as readout-mitigated success probabilities.
///
/// # Errors
/// Fails on empty or zero-shot histograms, bad bootstrap arguments, or the
/// first error returned by `statistic`.
pub fn bootstrap_histograms<F>(
    histograms: &[Vec<u64>],
    statistic: F,
    level: f64,
    resamples: usize,
    seed: u64,
) -> Result<ConfidenceInterval>
where
    F: Fn(&[Vec<f64>]) -> Result<f64> + Sync,
{
    if histograms.is_empty() {
        return Err(Error::EmptyInput("histograms"));
    }
    check_bootstrap_args(level, resamples)?;
    let totals: Vec<u64> = histograms.iter().map(|h| h.iter().sum()).collect();
    if totals.contains(&0) {
        return Err(Error::InvalidArgument("every histogram needs at least one shot".into()));
    }
    let freqs: Vec<Vec<f64>> =
        histograms.iter().zip(&totals).map(|(h, &t)| h.iter().map(|&c| c as f64 / t as f64).collect()).collect();
    let estimate = statistic(&freqs)?;
    let failure = std::sync::OnceLock::new();
    let ci = percentile_bootstrap(estimate, level, resamples, seed, |rng| {
        let redrawn: Vec<Vec<f64>> = histograms.iter().zip(&totals).map(|(h, &t)| redraw_histogram(h, t, rng)).collect();
        statistic(&redrawn).unwrap_or_else(|e| {
            let _ = failure.set(e);
            f64::NAN
        })
    });
    match failure.into_inner() {
        Some(e) => Err(e),
        None => Ok(ci),
    }
}

/// One multinomial redraw of `hist`, as frequencies, via conditional binomials.
fn redraw_histogram(hist: &[u64], total: u64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut left_shots = total;
    let mut left_count = total;
    hist.iter()
        .map(|&c| {
            if left_shots == 0 || c == 0 {
                left_count -= c;
                return 0.0;
            }
            let p = (c as f64 / left_count as f64).min(1.0);
            let x = Binomial::new(left_shots, p).expect("valid rate").sample(rng);
            left_shots -= x;
            left_count -= c;
            x as f64 / total as f64
        })
        .collect()
}

/// Total-variation distance `½ Σ |p_i − q_i|`.
pub fn distribution_distance(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::DimensionMismatch { expected: p.len(), actual: q.len() });
    }
    Ok((0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()).min(1.0))
}

/// Mean of the per-marked-state distances.
pub fn averaged_distance(p: &[Vec<f64>], q: &[Vec<f64>]) -> Result<f64> {
    if p.is_empty() {
        return Err(Error::EmptyInput("distributions"));
    }
    if p.len() != q.len() {
        return Err(Error::DimensionMismatch { expected: p.len(), actual: q.len() });
    }
    let total = p.iter().zip(q).map(|(a, b)| distribution_distance(a, b)).sum::<Result<f64>>()?;
    Ok(total / p.len() as f64)
}

/// Scale factors to scan: `T1/λ1`, `T2/λ2` and `λg · p_D`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LambdaGrid {
    pub lambda1: Vec<f64>,
    pub lambda2: Vec<f64>,
    pub lambda_g: Vec<f64>,
}

impl Default for LambdaGrid {
    /// Powers of two from 1/4 to 16 on every axis.
    fn default() -> Self {
        let axis: Vec<f64> = (-2..=4).map(|k| 2f64.powi(k)).collect();
        Self { lambda1: axis.clone(), lambda2: axis.clone(), lambda_g: axis }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanPoint {
    pub lambda1: f64,
    pub lambda2: f64,
    pub lambda_g: f64,
    /// `None` when the rescaled calibration is unphysical.
    pub distance: Option<f64>,
    /// Some gate's depolarizing strength hit 1.
    pub clamped: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LambdaScan {
    pub points: Vec<ScanPoint>,
    /// Best valid point over the whole grid.
    pub argmin: ScanPoint,
    /// Result of optimizing `λg`, then `λ1`, then `λ2`, one axis at a time
    /// from `(1, 1, 1)` (or the grid point nearest to it).
    pub descent: Vec<ScanPoint>,
}

impl LambdaScan {
    pub fn point(&self, l1: f64, l2: f64, lg: f64) -> Option<&ScanPoint> {
        self.points.iter().find(|p| p.lambda1 == l1 && p.lambda2 == l2 && p.lambda_g == lg)
    }
}

/// One circuit to fit and the outcome distribution it should reproduce.
#[derive(Clone, Debug)]
pub struct ScanTarget {
    pub timeline: Timeline,
    pub reference: Vec<f64>,
}

/// Averaged distance between simulation and reference at one grid point.
pub fn scan_point(
    calib: &DeviceCalibration,
    targets: &[ScanTarget],
    opts: &SimOptions,
    (lambda1, lambda2, lambda_g): (f64, f64, f64),
) -> Result<ScanPoint> {
    if !(lambda_g > 0.0) {
        return Err(Error::InvalidArgument(format!("λg = {lambda_g} must be positive")));
    }
    let rescaled = match calib.rescale_times(lambda1, lambda2) {
        Ok(c) => c,
        Err(Error::InvalidCalibration(_)) => {
            return Ok(ScanPoint { lambda1, lambda2, lambda_g, distance: None, clamped: false })
        }
        Err(e) => return Err(e),
    };
    let opts = SimOptions { depolarizing_scale: lambda_g, shots: None, ..opts.clone() };
    let mut sims = Vec::with_capacity(targets.len());
    let mut clamped = false;
    for t in targets {
        let r = simulate(&t.timeline, &rescaled, &opts)?;
        clamped |= r.noise.clamped_gates > 0;
        sims.push(r.exact.probs().to_vec());
    }
    let refs: Vec<Vec<f64>> = targets.iter().map(|t| t.reference.clone()).collect();
    Ok(ScanPoint { lambda1, lambda2, lambda_g, distance: Some(averaged_distance(&sims, &refs)?), clamped })
}

/// Evaluates the full grid (in parallel) and the axis-by-axis descent.
pub fn lambda_scan(
    calib: &DeviceCalibration,
    targets: &[ScanTarget],
    grid: &LambdaGrid,
    opts: &SimOptions,
) -> Result<LambdaScan> {
    if targets.is_empty() {
        return Err(Error::EmptyInput("scan targets"));
    }
    if grid.lambda1.is_empty() || grid.lambda2.is_empty() || grid.lambda_g.is_empty() {
        return Err(Error::EmptyInput("λ grid axis"));
    }
    if grid.lambda1.iter().chain(&grid.lambda2).chain(&grid.lambda_g).any(|&l| !(l > 0.0 && l.is_finite())) {
        return Err(Error::InvalidArgument("λ values must be positive".into()));
    }
    let combos: Vec<(f64, f64, f64)> = grid
        .lambda1
        .iter()
        .flat_map(|&a| grid.lambda2.iter().flat_map(move |&b| grid.lambda_g.iter().map(move |&g| (a, b, g))))
        .collect();
    let points = combos.par_iter().map(|&l| scan_point(calib, targets, opts, l)).collect::<Result<Vec<_>>>()?;
    let better = |a: &ScanPoint, b: &ScanPoint| match (a.distance, b.distance) {
        (Some(x), Some(y)) => x < y,
        (Some(_), None) => true,
        _ => false,
    };
    let argmin = points.iter().fold(points[0], |best, p| if better(p, &best) { *p } else { best });
    if argmin.distance.is_none() {
        return Err(Error::Degenerate("every grid point has an invalid calibration".into()));
    }
    let lookup = |l1: f64, l2: f64, lg: f64| {
        *points.iter().find(|p| p.lambda1 == l1 && p.lambda2 == l2 && p.lambda_g == lg).expect("grid point")
    };
    let nearest_one = |axis: &[f64]| *axis.iter().min_by(|a, b| a.ln().abs().total_cmp(&b.ln().abs())).expect("nonempty");
    let mut cur = lookup(nearest_one(&grid.lambda1), nearest_one(&grid.lambda2), nearest_one(&grid.lambda_g));
    let mut descent = Vec::with_capacity(3);
    for axis in 0..3 {
        let candidates: Vec<ScanPoint> = match axis {
            0 => grid.lambda_g.iter().map(|&g| lookup(cur.lambda1, cur.lambda2, g)).collect(),
            1 => grid.lambda1.iter().map(|&a| lookup(a, cur.lambda2, cur.lambda_g)).collect(),
            _ => grid.lambda2.iter().map(|&b| lookup(cur.lambda1, b, cur.lambda_g)).collect(),
        };
        for c in candidates {
            if better(&c, &cur) {
                cur = c;
            }
        }
        descent.push(cur);
    }
    Ok(LambdaScan { points, argmin, descent })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn distance_examples() {
        assert_eq!(distribution_distance(&[0.2, 0.8], &[0.2, 0.8]).unwrap(), 0.0);
        assert_eq!(distribution_distance(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 1.0);
        assert_eq!(distribution_distance(&[1.0, 0.0], &[0.5, 0.5]).unwrap(), 0.5);
        assert!(distribution_distance(&[1.0], &[0.5, 0.5]).is_err());
        let avg = averaged_distance(&[vec![1.0, 0.0], vec![0.5, 0.5]], &[vec![0.5, 0.5], vec![0.5, 0.5]]).unwrap();
        assert_eq!(avg, 0.25);
    }

    #[test]
    fn identical_samples_give_a_point_interval() {
        let ci = bootstrap_ci(&[0.3; 50], 0.95, 200, 1).unwrap();
        assert_eq!(ci.width(), 0.0);
        assert!((ci.low - 0.3).abs() < 1e-12 && (ci.estimate - 0.3).abs() < 1e-12);
        assert!(bootstrap_ci(&[], 0.95, 200, 1).is_err());
        assert!(bootstrap_ci(&[1.0], 0.9, 200, 1).is_err());
        assert!(bootstrap_ci(&[1.0], 0.95, 10, 1).is_err());
    }

    #[test]
    fn bootstrap_is_deterministic() {
        let counts = [SuccessCounts { successes: 40, shots: 100 }, SuccessCounts { successes: 70, shots: 100 }];
        let a = bootstrap_success(&counts, None, true, 0.99, 1000, 9).unwrap();
        let b = bootstrap_success(&counts, None, true, 0.99, 1000, 9).unwrap();
        assert_eq!(a, b);
        assert!((a.estimate - 0.55).abs() < 1e-15);
        assert!(a.low < 0.55 && a.high > 0.55);
    }

    #[test]
    fn default_grid_is_log_spaced() {
        let g = LambdaGrid::default();
        assert_eq!(g.lambda_g, vec![0.25, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0]);
    }
}
