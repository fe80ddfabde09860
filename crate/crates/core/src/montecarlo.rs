//! Seeded per-bin simulation of the differential click measurement.
//!
//! Every bin goes through the same chain as the real experiment: the source
//! emits (or not) a photon into each mode, the signal photon is absorbed by
//! the sample with probability `alpha` and then lost with probability
//! `gamma`, the reference photon is lost with probability `gamma`, and each
//! detector may additionally fire on a dark count with probability
//! `1 - exp(-n_dark)`. A detector clicks in a bin if a photon survived or a
//! dark count fired.
//!
//! Presence events are rare for weak probes, so each Bernoulli stream over
//! the `m` bins is sampled by drawing the geometric gaps between successes.
//! This has the same distribution as a bin-by-bin loop at `O(m p)` cost.
//!
//! Reproducibility: run `r` draws from ChaCha8 stream `2r` (exposure without
//! the defect) and `2r + 1` (with the defect) of the configured seed, and
//! per-run results are reduced in run order, so the output does not depend
//! on the thread schedule.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Geometric};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channels::ChannelParams;
use crate::error::{loss_rate, non_negative, unit_interval, Error, Result};
use crate::states::{truncation_warning, ClickBasisState, StateKind};

/// Monte Carlo budget.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct McConfig {
    /// Bins per exposure.
    pub m: u64,
    /// Independent repetitions of the (clean, defect) exposure pair.
    pub runs: usize,
    pub seed: u64,
    /// Common random numbers: both exposures of a run share one stream.
    pub paired: bool,
}

impl McConfig {
    pub fn new(m: u64, runs: usize, seed: u64) -> Result<Self> {
        if m == 0 {
            return Err(Error::Invalid("m must be at least 1".into()));
        }
        if runs < 2 {
            return Err(Error::Invalid("at least 2 runs are needed for error bars".into()));
        }
        Ok(Self {
            m,
            runs,
            seed,
            paired: false,
        })
    }

    pub fn paired(mut self, paired: bool) -> Self {
        self.paired = paired;
        self
    }
}

/// Click counts of one exposure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExposureCounts {
    pub m: u64,
    /// Signal detector clicks.
    pub c1: u64,
    /// Reference detector clicks.
    pub c2: u64,
    /// Bins where both detectors clicked.
    pub both: u64,
}

impl ExposureCounts {
    /// Outcome counts `[nu00, nu01, nu10, nu11]`.
    pub fn outcome_counts(&self) -> [u64; 4] {
        [
            self.m - self.c1 - self.c2 + self.both,
            self.c2 - self.both,
            self.c1 - self.both,
            self.both,
        ]
    }

    /// `c2 - c1`.
    pub fn difference(&self) -> i64 {
        self.c2 as i64 - self.c1 as i64
    }
}

/// Point estimates over the runs together with their standard errors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub runs: usize,
    pub mean_i_minus: f64,
    pub se_i_minus: f64,
    pub mean_gamma_minus: f64,
    pub se_gamma_minus: f64,
    /// Sample variance of `c2 - c1` without the defect.
    pub noise_sq: f64,
    pub se_noise_sq: f64,
    pub snr_star: f64,
    pub se_snr_star: f64,
    /// Set when the empirical noise is zero and `snr_star` is not meaningful.
    pub degenerate: bool,
}

/// Mean, unbiased variance and their standard errors of a sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleSummary {
    pub n: usize,
    pub mean: f64,
    pub variance: f64,
    pub se_mean: f64,
    pub se_variance: f64,
}

pub fn summarize(xs: &[f64]) -> SampleSummary {
    let n = xs.len();
    let nf = n as f64;
    let mean = xs.iter().sum::<f64>() / nf;
    let m2 = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / nf;
    let m4 = xs.iter().map(|x| (x - mean).powi(4)).sum::<f64>() / nf;
    let variance = if n > 1 { m2 * nf / (nf - 1.0) } else { 0.0 };
    let se_variance = if n > 3 {
        let v = (m4 - variance * variance * (nf - 3.0) / (nf - 1.0)) / nf;
        v.max(0.0).sqrt()
    } else {
        f64::INFINITY
    };
    SampleSummary {
        n,
        mean,
        variance,
        se_mean: (variance / nf).sqrt(),
        se_variance,
    }
}

#[derive(Debug, Clone)]
enum Source {
    Independent(f64),
    Paired(f64),
    Occupied(u64),
    Custom(ClickBasisState),
}

impl Source {
    fn new(kind: StateKind, n_mean: f64, m: u64) -> Result<Self> {
        non_negative("n_mean", n_mean)?;
        if let Some(w) = truncation_warning(n_mean) {
            log::warn!("{w}");
        }
        let present = -(-n_mean).exp_m1();
        Ok(match kind {
            StateKind::Coherent => Source::Independent(present),
            StateKind::Tmsv => Source::Paired(present),
            StateKind::TwinFock => Source::Occupied(crate::clickstats::occupancy(m, n_mean)?),
            StateKind::Custom(c) => Source::Custom(c.click),
        })
    }

    // Sorted bin indices holding a signal photon and a reference photon.
    fn emit<R: Rng>(&self, rng: &mut R, m: u64) -> (Vec<u64>, Vec<u64>) {
        match *self {
            Source::Independent(p) => (bernoulli_bins(rng, m, p), bernoulli_bins(rng, m, p)),
            Source::Paired(p) => {
                let bins = bernoulli_bins(rng, m, p);
                (bins.clone(), bins)
            }
            Source::Occupied(k) => {
                let mut bins: Vec<u64> = rand::seq::index::sample(rng, m as usize, k as usize)
                    .into_iter()
                    .map(|i| i as u64)
                    .collect();
                bins.sort_unstable();
                (bins.clone(), bins)
            }
            Source::Custom(s) => {
                let busy = 1.0 - s.p00();
                let (mut sig, mut refr) = (Vec::new(), Vec::new());
                for bin in bernoulli_bins(rng, m, busy) {
                    let u = rng.random::<f64>() * busy;
                    if u < s.p01() {
                        refr.push(bin);
                    } else if u < s.p01() + s.p10() {
                        sig.push(bin);
                    } else {
                        sig.push(bin);
                        refr.push(bin);
                    }
                }
                (sig, refr)
            }
        }
    }
}

/// Sorted indices of successes in `m` independent Bernoulli(`p`) trials.
fn bernoulli_bins<R: Rng>(rng: &mut R, m: u64, p: f64) -> Vec<u64> {
    if p <= 0.0 {
        return Vec::new();
    }
    if p >= 1.0 {
        return (0..m).collect();
    }
    let gaps = Geometric::new(p).expect("p in (0, 1)");
    let expected = (m as f64 * p * 1.2) as usize + 16;
    let mut bins = Vec::with_capacity(expected.min(m as usize));
    let mut next = 0u64;
    loop {
        next = match next.checked_add(gaps.sample(rng)) {
            Some(b) if b < m => b,
            _ => break,
        };
        bins.push(next);
        next += 1;
    }
    bins
}

fn union(a: &[u64], b: &[u64]) -> Vec<u64> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => {
                out.push(a[i]);
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                out.push(b[j]);
                j += 1;
            }
            std::cmp::Ordering::Equal => {
                out.push(a[i]);
                i += 1;
                j += 1;
            }
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
    out
}

fn intersection_len(a: &[u64], b: &[u64]) -> u64 {
    let (mut i, mut j, mut n) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                n += 1;
                i += 1;
                j += 1;
            }
        }
    }
    n
}

fn run_exposure<R: Rng>(
    rng: &mut R,
    source: &Source,
    alpha: f64,
    gamma: f64,
    n_dark: f64,
    m: u64,
) -> ExposureCounts {
    let (signal, reference) = source.emit(rng, m);
    // two uniforms per signal photon regardless of outcome, so paired
    // exposures at different alpha stay aligned
    let signal: Vec<u64> = signal
        .into_iter()
        .filter(|_| {
            let absorbed = rng.random::<f64>() < alpha;
            let lost = rng.random::<f64>() < gamma;
            !absorbed && !lost
        })
        .collect();
    let reference: Vec<u64> = reference
        .into_iter()
        .filter(|_| rng.random::<f64>() >= gamma)
        .collect();
    let fire = -(-n_dark).exp_m1();
    let dark1 = bernoulli_bins(rng, m, fire);
    let dark2 = bernoulli_bins(rng, m, fire);
    let clicks1 = union(&signal, &dark1);
    let clicks2 = union(&reference, &dark2);
    ExposureCounts {
        m,
        c1: clicks1.len() as u64,
        c2: clicks2.len() as u64,
        both: intersection_len(&clicks1, &clicks2),
    }
}

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

fn check_channel(alpha: f64, gamma: f64, n_dark: f64, m: u64) -> Result<()> {
    unit_interval("alpha", alpha)?;
    loss_rate(gamma)?;
    non_negative("n_dark", n_dark)?;
    if m == 0 {
        return Err(Error::Invalid("m must be at least 1".into()));
    }
    Ok(())
}

/// One exposure of `m` bins, seeded deterministically.
pub fn simulate_exposure(
    kind: StateKind,
    n_mean: f64,
    alpha: f64,
    gamma: f64,
    n_dark: f64,
    m: u64,
    seed: u64,
) -> Result<ExposureCounts> {
    check_channel(alpha, gamma, n_dark, m)?;
    let source = Source::new(kind, n_mean, m)?;
    Ok(run_exposure(&mut stream(seed, 0), &source, alpha, gamma, n_dark, m))
}

/// `mc.runs` exposures at a fixed absorption, in run order.
pub fn simulate_runs(
    kind: StateKind,
    n_mean: f64,
    alpha: f64,
    gamma: f64,
    n_dark: f64,
    mc: &McConfig,
) -> Result<Vec<ExposureCounts>> {
    check_channel(alpha, gamma, n_dark, mc.m)?;
    let source = Source::new(kind, n_mean, mc.m)?;
    Ok((0..mc.runs as u64)
        .into_par_iter()
        .map(|r| run_exposure(&mut stream(mc.seed, 2 * r), &source, alpha, gamma, n_dark, mc.m))
        .collect())
}

/// Empirical SNR* from repeated exposures with and without the defect.
pub fn estimate_snr_star(
    kind: StateKind,
    n_mean: f64,
    channel: &ChannelParams,
    mc: &McConfig,
) -> Result<McEstimate> {
    if mc.runs < 2 {
        return Err(Error::Invalid("at least 2 runs are needed for error bars".into()));
    }
    let (gamma, n_dark, m) = (channel.gamma(), channel.n_dark(), mc.m);
    check_channel(channel.alpha(), gamma, n_dark, m)?;
    let source = Source::new(kind, n_mean, m)?;
    let pairs: Vec<(f64, f64)> = (0..mc.runs as u64)
        .into_par_iter()
        .map(|r| {
            let clean = run_exposure(&mut stream(mc.seed, 2 * r), &source, channel.alpha(), gamma, n_dark, m);
            let defect_stream = if mc.paired { 2 * r } else { 2 * r + 1 };
            let defect = run_exposure(
                &mut stream(mc.seed, defect_stream),
                &source,
                channel.alpha_defect(),
                gamma,
                n_dark,
                m,
            );
            (clean.difference() as f64, defect.difference() as f64)
        })
        .collect();

    let clean: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let shift: Vec<f64> = pairs.iter().map(|p| p.1 - p.0).collect();
    let clean = summarize(&clean);
    let shift = summarize(&shift);

    let noise_sq = clean.variance;
    let degenerate = !(noise_sq > 0.0);
    let (snr_star, se_snr_star) = if degenerate {
        let s = if shift.mean == 0.0 { 0.0 } else { shift.mean.signum() * f64::INFINITY };
        (s, 0.0)
    } else {
        let sd = noise_sq.sqrt();
        let g = shift.mean;
        let se = ((shift.se_mean / sd).powi(2) + (g * clean.se_variance / (2.0 * sd * noise_sq)).powi(2)).sqrt();
        (g / sd, se)
    };
    Ok(McEstimate {
        runs: mc.runs,
        mean_i_minus: clean.mean,
        se_i_minus: clean.se_mean,
        mean_gamma_minus: shift.mean,
        se_gamma_minus: shift.se_mean,
        noise_sq,
        se_noise_sq: clean.se_variance,
        snr_star,
        se_snr_star,
        degenerate,
    })
}
