//! Event-driven simulation of the walker and Kolmogorov-Smirnov distances.
//!
//! Two microscopic pictures produce the same position law: reversals at
//! rate `lambda/2`, or isotropic rescattering at rate `lambda` where every
//! event redraws the direction uniformly (half the redraws keep it).
//!
//! Every trial owns a ChaCha8 stream keyed on `(seed, trial index)`: the
//! generator is seeded with `seed` and positioned on stream `index`. Trials
//! are grouped into fixed-size blocks whose tallies are merged in block
//! order, so an ensemble is bit-identical for any thread count.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::domain::{check_time, Direction, InitialCondition, MixedDensity, ModelParams};
use crate::error::{Error, Result};

/// Which microscopic picture generates the events.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Model {
    /// Rate `lambda/2`, every event flips the direction.
    Reversal,
    /// Rate `lambda`, every event redraws the direction uniformly.
    Scattering,
}

impl Model {
    pub fn event_rate(self, params: &ModelParams<f64>) -> f64 {
        match self {
            Model::Reversal => params.reversal_rate(),
            Model::Scattering => params.lambda(),
        }
    }
}

/// Outcome of one trial.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub position: f64,
    /// Reversals (reversal model) or scatterings (scattering model).
    pub events: usize,
    /// The walker never changed direction, so `position` is exactly `±vt`.
    pub at_boundary: bool,
}

/// A trial with its event history.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub initial: Direction,
    /// Times of all events in increasing order.
    pub event_times: Vec<f64>,
    /// Times at which the direction actually changed.
    pub reversal_times: Vec<f64>,
    pub sample: Sample,
}

/// RNG for trial `index` of an ensemble with master `seed`.
pub fn trial_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

fn exponential<R: Rng + ?Sized>(rate: f64, rng: &mut R) -> f64 {
    let u: f64 = rng.gen();
    -(-u).ln_1p() / rate
}

fn initial_direction<R: Rng + ?Sized>(ic: InitialCondition, rng: &mut R) -> Direction {
    match ic.bullet() {
        Some(dir) => dir,
        None if rng.gen::<bool>() => Direction::Right,
        None => Direction::Left,
    }
}

fn flip(dir: Direction) -> Direction {
    match dir {
        Direction::Right => Direction::Left,
        Direction::Left => Direction::Right,
    }
}

/// Walks one trajectory, calling `on_event(time, reversed)` for each event.
fn walk<R: Rng + ?Sized>(
    t: f64,
    params: &ModelParams<f64>,
    ic: InitialCondition,
    model: Model,
    rng: &mut R,
    mut on_event: impl FnMut(f64, bool),
) -> (Direction, Sample) {
    let initial = initial_direction(ic, rng);
    let rate = model.event_rate(params);
    let mut dir = initial;
    let mut clock = 0.0;
    let mut moving_right = 0.0;
    let mut events = 0;
    let mut reversals = 0;
    loop {
        let next = clock + exponential(rate, rng);
        if next >= t {
            if dir == Direction::Right {
                moving_right += t - clock;
            }
            break;
        }
        if dir == Direction::Right {
            moving_right += next - clock;
        }
        clock = next;
        events += 1;
        let reversed = match model {
            Model::Reversal => true,
            Model::Scattering => rng.gen::<bool>(),
        };
        if reversed {
            dir = flip(dir);
            reversals += 1;
        }
        on_event(clock, reversed);
    }
    let reach = params.reach(t);
    let sample = if reversals == 0 {
        Sample {
            position: initial.sign::<f64>() * reach,
            events,
            at_boundary: true,
        }
    } else {
        let position = params.speed() * (2.0 * moving_right - t);
        Sample {
            position: position.clamp(-reach, reach),
            events,
            at_boundary: false,
        }
    };
    (initial, sample)
}

/// Position of one walker at time `t`.
pub fn simulate_position<R: Rng + ?Sized>(
    t: f64,
    params: &ModelParams<f64>,
    ic: InitialCondition,
    model: Model,
    rng: &mut R,
) -> Sample {
    walk(t, params, ic, model, rng, |_, _| {}).1
}

/// Like [`simulate_position`] but keeps the event times.
pub fn simulate_trajectory<R: Rng + ?Sized>(
    t: f64,
    params: &ModelParams<f64>,
    ic: InitialCondition,
    model: Model,
    rng: &mut R,
) -> Trajectory {
    let mut event_times = Vec::new();
    let mut reversal_times = Vec::new();
    let (initial, sample) = walk(t, params, ic, model, rng, |time, reversed| {
        event_times.push(time);
        if reversed {
            reversal_times.push(time);
        }
    });
    Trajectory {
        initial,
        event_times,
        reversal_times,
        sample,
    }
}

/// `r` independent uniform points on `[0, length]`, sorted.
pub fn sorted_uniform_points<R: Rng + ?Sized>(r: usize, length: f64, rng: &mut R) -> Vec<f64> {
    let mut points: Vec<f64> = (0..r).map(|_| rng.gen::<f64>() * length).collect();
    points.sort_by(f64::total_cmp);
    points
}

/// Default histogram resolution.
pub const DEFAULT_BINS: usize = 200;

const BLOCK: u64 = 4096;

/// Histogram of final positions with the front hits counted apart.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleResult {
    pub n_trials: u64,
    /// `bins + 1` equally spaced edges from `-vt` to `vt`.
    pub bin_edges: Vec<f64>,
    pub counts: Vec<u64>,
    /// Walkers that never turned, at `(+vt, -vt)`.
    pub atom_counts: (u64, u64),
    pub seed: u64,
    pub model: Model,
    pub ic: InitialCondition,
    pub t: f64,
    pub params: ModelParams<f64>,
    /// Sum of positions over all trials, atoms included.
    pub sum_x: f64,
    /// Sum of squared positions over all trials, atoms included.
    pub sum_x2: f64,
}

#[derive(Clone)]
struct Tally {
    counts: Vec<u64>,
    plus: u64,
    minus: u64,
    sum_x: f64,
    sum_x2: f64,
}

impl Tally {
    fn new(bins: usize) -> Self {
        Self {
            counts: vec![0; bins],
            plus: 0,
            minus: 0,
            sum_x: 0.0,
            sum_x2: 0.0,
        }
    }

    fn merge(mut self, other: &Tally) -> Self {
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        self.plus += other.plus;
        self.minus += other.minus;
        self.sum_x += other.sum_x;
        self.sum_x2 += other.sum_x2;
        self
    }
}

fn bin_index(x: f64, reach: f64, bins: usize) -> usize {
    let k = ((x + reach) / (2.0 * reach) * bins as f64).floor();
    (k.max(0.0) as usize).min(bins - 1)
}

/// Runs `n` independent trials and histograms the positions into `bins`
/// equal bins on `[-vt, vt]`.
pub fn run_ensemble(
    n: u64,
    t: f64,
    params: &ModelParams<f64>,
    ic: InitialCondition,
    model: Model,
    bins: usize,
    seed: u64,
) -> Result<EnsembleResult> {
    check_time(t)?;
    if n == 0 {
        return Err(Error::InvalidParams("ensemble needs at least one trial".into()));
    }
    if bins == 0 {
        return Err(Error::InvalidParams("histogram needs at least one bin".into()));
    }
    let reach = params.reach(t);
    let blocks = n.div_ceil(BLOCK);
    let tallies: Vec<Tally> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut tally = Tally::new(bins);
            for i in b * BLOCK..((b + 1) * BLOCK).min(n) {
                let mut rng = trial_rng(seed, i);
                let s = simulate_position(t, params, ic, model, &mut rng);
                tally.sum_x += s.position;
                tally.sum_x2 += s.position * s.position;
                if s.at_boundary {
                    if s.position > 0.0 {
                        tally.plus += 1;
                    } else {
                        tally.minus += 1;
                    }
                } else {
                    tally.counts[bin_index(s.position, reach, bins)] += 1;
                }
            }
            tally
        })
        .collect();
    let total = tallies.iter().fold(Tally::new(bins), Tally::merge);
    let bin_edges = (0..=bins)
        .map(|k| {
            if k == bins {
                reach
            } else {
                -reach + 2.0 * reach * k as f64 / bins as f64
            }
        })
        .collect();
    let result = EnsembleResult {
        n_trials: n,
        bin_edges,
        counts: total.counts,
        atom_counts: (total.plus, total.minus),
        seed,
        model,
        ic,
        t,
        params: *params,
        sum_x: total.sum_x,
        sum_x2: total.sum_x2,
    };
    debug_assert!(result.check().is_ok());
    Ok(result)
}

impl EnsembleResult {
    /// Verifies the bookkeeping invariants.
    pub fn check(&self) -> Result<()> {
        let binned: u64 = self.counts.iter().sum();
        if binned + self.atom_counts.0 + self.atom_counts.1 != self.n_trials {
            return Err(Error::Domain(format!(
                "{binned} binned + {:?} atoms != {} trials",
                self.atom_counts, self.n_trials
            )));
        }
        if self.bin_edges.len() != self.counts.len() + 1 {
            return Err(Error::Domain("need one more edge than bins".into()));
        }
        let reach = self.params.reach(self.t);
        if self.bin_edges.first() != Some(&-reach) || self.bin_edges.last() != Some(&reach) {
            return Err(Error::Domain("bin edges must span [-vt, vt]".into()));
        }
        if self.bin_edges.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::Domain("bin edges must increase".into()));
        }
        Ok(())
    }

    pub fn atom_fraction(&self) -> f64 {
        (self.atom_counts.0 + self.atom_counts.1) as f64 / self.n_trials as f64
    }

    pub fn mean(&self) -> f64 {
        self.sum_x / self.n_trials as f64
    }

    pub fn second_moment(&self) -> f64 {
        self.sum_x2 / self.n_trials as f64
    }

    /// Standard error of [`mean`](Self::mean).
    pub fn mean_std_error(&self) -> f64 {
        let n = self.n_trials as f64;
        ((self.second_moment() - self.mean().powi(2)).max(0.0) / n).sqrt()
    }

    /// Standard error of [`second_moment`](Self::second_moment). Needs the
    /// fourth moment, bounded here by `(vt)² <x²>`.
    pub fn second_moment_std_error_bound(&self) -> f64 {
        let reach = self.params.reach(self.t);
        let n = self.n_trials as f64;
        let m2 = self.second_moment();
        ((reach * reach * m2 - m2 * m2).max(0.0) / n).sqrt()
    }

    /// Empirical CDF at every bin edge, with the `-vt` atom counted at the
    /// left edge and the `+vt` atom at the right edge.
    pub fn empirical_cdf(&self) -> Vec<f64> {
        let n = self.n_trials as f64;
        let mut acc = self.atom_counts.1;
        let mut out = Vec::with_capacity(self.bin_edges.len());
        out.push(acc as f64 / n);
        for (k, &c) in self.counts.iter().enumerate() {
            acc += c;
            if k + 1 == self.counts.len() {
                acc += self.atom_counts.0;
            }
            out.push(acc as f64 / n);
        }
        out
    }

    /// Bin density estimates `(centre, count / (n · width))`.
    pub fn histogram_density(&self) -> Vec<(f64, f64)> {
        let n = self.n_trials as f64;
        self.bin_edges
            .windows(2)
            .zip(&self.counts)
            .map(|(w, &c)| ((w[0] + w[1]) / 2.0, c as f64 / (n * (w[1] - w[0]))))
            .collect()
    }
}

/// Quadrature tolerance for analytic CDFs.
const CDF_TOL: f64 = 1e-10;

/// `sup |F_empirical - F_analytic|` over the bin edges.
pub fn ks_distance(result: &EnsembleResult, analytic: &MixedDensity<f64>) -> Result<f64> {
    if result.t != analytic.t() || result.params != *analytic.params() {
        return Err(Error::Domain(format!(
            "ensemble at t={} {:?} compared with a law at t={} {:?}",
            result.t,
            result.params,
            analytic.t(),
            analytic.params()
        )));
    }
    result.check()?;
    let model = analytic.cdf_at(&result.bin_edges, CDF_TOL)?;
    let empirical = result.empirical_cdf();
    Ok(empirical
        .iter()
        .zip(&model)
        .fold(0.0f64, |d, (a, b)| d.max((a - b).abs())))
}

/// Two-sample distance between ensembles sharing the same bin edges.
pub fn ks_two_sample(a: &EnsembleResult, b: &EnsembleResult) -> Result<f64> {
    if a.bin_edges != b.bin_edges {
        return Err(Error::Domain("ensembles use different bin edges".into()));
    }
    a.check()?;
    b.check()?;
    Ok(a
        .empirical_cdf()
        .iter()
        .zip(&b.empirical_cdf())
        .fold(0.0f64, |d, (x, y)| d.max((x - y).abs())))
}

/// Exact one-sample statistic of `samples` against a continuous CDF.
pub fn ks_one_sample(samples: &mut [f64], cdf: impl Fn(f64) -> f64) -> f64 {
    samples.sort_by(f64::total_cmp);
    let n = samples.len() as f64;
    samples.iter().enumerate().fold(0.0f64, |d, (i, &x)| {
        let f = cdf(x);
        d.max((i as f64 + 1.0) / n - f).max(f - i as f64 / n)
    })
}

/// [`ks_one_sample`] with the CDF built by integrating `pdf` from `lower`
/// across the sorted samples.
pub fn ks_one_sample_pdf(samples: &mut [f64], lower: f64, pdf: impl Fn(f64) -> f64, tol: f64) -> Result<f64> {
    samples.sort_by(f64::total_cmp);
    let mut cdf = Vec::with_capacity(samples.len());
    let mut acc = 0.0;
    let mut last = lower;
    for &x in samples.iter() {
        if x < lower {
            return Err(Error::Domain(format!("sample {x} below the support start {lower}")));
        }
        acc += crate::domain::quadrature(&pdf, last, x, tol)?;
        last = x;
        cdf.push(acc);
    }
    let n = samples.len() as f64;
    Ok(cdf.iter().enumerate().fold(0.0f64, |d, (i, &f)| {
        d.max((i as f64 + 1.0) / n - f).max(f - i as f64 / n)
    }))
}

/// Dvoretzky-Kiefer-Wolfowitz band `sqrt(ln(2/alpha) / 2n)`.
pub fn dkw_bound(n: u64, alpha: f64) -> f64 {
    ((2.0 / alpha).ln() / (2.0 * n as f64)).sqrt()
}

/// Asymptotic two-sample critical value
/// `sqrt(-ln(alpha/2) / 2) · sqrt((n + m) / nm)`.
pub fn ks_two_sample_critical(n: u64, m: u64, alpha: f64) -> f64 {
    let (n, m) = (n as f64, m as f64);
    (-(alpha / 2.0).ln() / 2.0).sqrt() * ((n + m) / (n * m)).sqrt()
}
