//! Learned click-time distribution relative to a clock's noon.
//!
//! Offsets are stored in units of the rotation period on the circle
//! `[-1/2, 1/2)`, so a density learned at one period carries over to another.
//! The estimate is a damped Parzen-window accumulator: after every committed
//! selection the accumulator is scaled by `lambda` and one unit-mass kernel is
//! added per click. Commitment is delayed by `n_delay` selections so that an
//! undone selection never trains the model.

use std::collections::VecDeque;
use std::f64::consts::SQRT_2;
use std::path::Path;

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::error::{Error, Result};
use crate::selector::ClockId;

pub const DEFAULT_BIN_COUNT: usize = 80;
pub const MIN_BIN_COUNT: usize = 16;
pub const DEFAULT_LAMBDA: f64 = 0.9;
pub const DEFAULT_N_DELAY: usize = 2;

/// Mean of the starting density, in periods.
pub const INITIAL_MEAN: f64 = 0.05;
/// Standard deviation of the starting density, in periods.
pub const INITIAL_SD: f64 = 0.14;
/// Lower bound on the click spread used for the kernel width.
pub const SIGMA_FLOOR: f64 = 0.005;
/// Added to every bin before normalisation so likelihoods stay positive.
pub const EPSILON_FLOOR: f64 = 1e-10;

const DENSITY_FORMAT: &str = "nomon-click-density";
const DENSITY_VERSION: u32 = 1;

/// Wraps an offset (in periods) onto `[-1/2, 1/2)`.
pub fn wrap_offset(x: f64) -> f64 {
    let r = x - (x + 0.5).floor();
    if r >= 0.5 {
        r - 1.0
    } else {
        r
    }
}

/// Normal-scale bandwidth `1.06 n^(-1/5) sigma`.
pub fn bandwidth(sigma_hat: f64, effective_n: f64) -> f64 {
    1.06 * effective_n.powf(-0.2) * sigma_hat
}

/// `1 / (1 - lambda)`.
pub fn effective_samples(lambda: f64) -> f64 {
    1.0 / (1.0 - lambda)
}

/// Number of recent clicks feeding the spread estimate: `ceil(n_lambda)`,
/// ignoring float noise such as `1 / (1 - 0.9) = 10.000000000000002`.
fn recent_capacity(effective_n: f64) -> usize {
    let rounded = effective_n.round();
    if (effective_n - rounded).abs() < 1e-9 {
        rounded as usize
    } else {
        effective_n.ceil() as usize
    }
}

/// `P(za <= Z < zb)` for a standard normal, using the tail that avoids
/// cancellation.
fn normal_interval(za: f64, zb: f64) -> f64 {
    let q = |z: f64| 0.5 * erfc(z / SQRT_2);
    if za >= 0.0 {
        q(za) - q(zb)
    } else if zb <= 0.0 {
        q(-zb) - q(-za)
    } else {
        1.0 - q(zb) - q(-za)
    }
}

/// Mass of a normal wrapped onto the unit circle, per grid cell, using the
/// central image and one image on either side. The result sums to one.
pub(crate) fn wrapped_normal_cells(mean: f64, sd: f64, bin_count: usize) -> Vec<f64> {
    let h = 1.0 / bin_count as f64;
    let mut cells: Vec<f64> = (0..bin_count)
        .map(|i| {
            let lo = -0.5 + i as f64 * h;
            let hi = lo + h;
            [-1.0, 0.0, 1.0]
                .iter()
                .map(|shift| {
                    let mu = mean + shift;
                    normal_interval((lo - mu) / sd, (hi - mu) / sd)
                })
                .sum()
        })
        .collect();
    let total: f64 = cells.iter().sum();
    cells.iter_mut().for_each(|c| *c /= total);
    cells
}

/// Gaussian maximum-likelihood standard deviation, or `None` with fewer than
/// two samples.
fn ml_sd(samples: &VecDeque<f64>) -> Option<f64> {
    if samples.len() < 2 {
        return None;
    }
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    Some(var.sqrt())
}

/// The damped, unnormalised click-offset density on a uniform grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ClickDensity {
    period: f64,
    bins: Vec<f64>,
    damping: f64,
    recent: VecDeque<f64>,
    total: f64,
}

impl ClickDensity {
    /// Starting estimate: `n_lambda` times a wrapped normal with mean 0.05 and
    /// sd 0.14 periods.
    pub fn new(period: f64, bin_count: usize, damping: f64) -> Result<Self> {
        Self::with_initial(period, bin_count, damping, INITIAL_MEAN, INITIAL_SD)
    }

    /// Like [`ClickDensity::new`] but seeded with an arbitrary normal shape.
    pub fn with_initial(
        period: f64,
        bin_count: usize,
        damping: f64,
        mean: f64,
        sd: f64,
    ) -> Result<Self> {
        if !(period.is_finite() && period > 0.0) {
            return Err(Error::Config(format!("period must be positive, got {period}")));
        }
        if !(damping > 0.0 && damping < 1.0) {
            return Err(Error::Config(format!("lambda must lie in (0, 1), got {damping}")));
        }
        if bin_count < MIN_BIN_COUNT {
            return Err(Error::Config(format!(
                "bin_count must be at least {MIN_BIN_COUNT}, got {bin_count}"
            )));
        }
        if !(sd.is_finite() && sd > 0.0) {
            return Err(Error::Config(format!("initial sd must be positive, got {sd}")));
        }
        let n_lambda = effective_samples(damping);
        let scale = n_lambda * bin_count as f64;
        let bins = wrapped_normal_cells(mean, sd, bin_count)
            .into_iter()
            .map(|m| m * scale)
            .collect();
        let mut density = Self {
            period,
            bins,
            damping,
            recent: VecDeque::with_capacity(recent_capacity(n_lambda)),
            total: 0.0,
        };
        density.refresh_total();
        Ok(density)
    }

    fn refresh_total(&mut self) {
        self.total = self.bins.iter().sum();
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    /// Changes the period without touching the learned shape.
    pub fn set_period(&mut self, period: f64) -> Result<()> {
        if !(period.is_finite() && period > 0.0) {
            return Err(Error::Config(format!("period must be positive, got {period}")));
        }
        self.period = period;
        Ok(())
    }

    pub fn bins(&self) -> &[f64] {
        &self.bins
    }

    pub fn bin_count(&self) -> usize {
        self.bins.len()
    }

    pub fn bin_width(&self) -> f64 {
        1.0 / self.bins.len() as f64
    }

    /// Centre of bin `i`, in periods.
    pub fn bin_center(&self, i: usize) -> f64 {
        -0.5 + (i as f64 + 0.5) * self.bin_width()
    }

    pub fn damping(&self) -> f64 {
        self.damping
    }

    pub fn effective_n(&self) -> f64 {
        effective_samples(self.damping)
    }

    pub fn recent_offsets(&self) -> impl Iterator<Item = f64> + '_ {
        self.recent.iter().copied()
    }

    /// Integral of the unnormalised accumulator.
    pub fn mass(&self) -> f64 {
        self.total * self.bin_width()
    }

    /// Click spread estimated from the recent offsets, floored.
    pub fn sigma_hat(&self) -> f64 {
        ml_sd(&self.recent).unwrap_or(INITIAL_SD).max(SIGMA_FLOOR)
    }

    /// Kernel width that the next committed selection will use.
    pub fn next_bandwidth(&self) -> f64 {
        bandwidth(self.sigma_hat(), self.effective_n())
    }

    /// Damps the accumulator and adds one unit-mass kernel per offset. The
    /// kernel width comes from clicks committed before this call.
    pub fn commit_offsets(&mut self, offsets: &[f64]) {
        let width = self.next_bandwidth();
        let n = self.bins.len();
        let scale = n as f64;
        for b in &mut self.bins {
            *b *= self.damping;
        }
        for &offset in offsets {
            let cells = wrapped_normal_cells(wrap_offset(offset), width, n);
            for (b, m) in self.bins.iter_mut().zip(cells) {
                *b += m * scale;
            }
        }
        let capacity = recent_capacity(self.effective_n());
        for &offset in offsets {
            if self.recent.len() == capacity {
                self.recent.pop_front();
            }
            self.recent.push_back(wrap_offset(offset));
        }
        self.refresh_total();
    }

    pub fn commit(&mut self, selection: &PendingSelection) {
        self.commit_offsets(&selection.offsets);
    }

    fn bin_index(&self, offset: f64) -> usize {
        let n = self.bins.len();
        let idx = ((wrap_offset(offset) + 0.5) * n as f64).floor() as usize;
        idx.min(n - 1)
    }

    fn normalizer(&self) -> f64 {
        (self.total + EPSILON_FLOOR * self.bins.len() as f64) * self.bin_width()
    }

    /// Normalised density (per period) at the bin containing `offset`.
    pub fn likelihood(&self, offset: f64) -> f64 {
        (self.bins[self.bin_index(offset)] + EPSILON_FLOOR) / self.normalizer()
    }

    pub fn log_likelihood(&self, offset: f64) -> f64 {
        self.likelihood(offset).ln()
    }

    /// Normalised density per bin; integrates to one over the circle.
    pub fn normalized(&self) -> Vec<f64> {
        let z = self.normalizer();
        self.bins.iter().map(|b| (b + EPSILON_FLOOR) / z).collect()
    }

    fn cell_masses(&self) -> Vec<f64> {
        let h = self.bin_width();
        self.normalized().into_iter().map(|p| p * h).collect()
    }

    /// Mean and standard deviation of the normalised density on `[-1/2, 1/2)`.
    pub fn moments(&self) -> (f64, f64) {
        let masses = self.cell_masses();
        let mean: f64 = masses
            .iter()
            .enumerate()
            .map(|(i, m)| m * self.bin_center(i))
            .sum();
        let var: f64 = masses
            .iter()
            .enumerate()
            .map(|(i, m)| m * (self.bin_center(i) - mean).powi(2))
            .sum();
        (mean, var.sqrt())
    }

    /// Width (in periods) of the central interval holding `coverage` of the
    /// mass. The circle is cut opposite the circular mean.
    pub fn central_width(&self, coverage: f64) -> f64 {
        let masses = self.cell_masses();
        let n = masses.len();
        let h = self.bin_width();
        let (s, c) = masses.iter().enumerate().fold((0.0, 0.0), |(s, c), (i, m)| {
            let angle = std::f64::consts::TAU * self.bin_center(i);
            (s + m * angle.sin(), c + m * angle.cos())
        });
        let mean = s.atan2(c) / std::f64::consts::TAU;
        let start = self.bin_index(mean + 0.5);

        let tail = 0.5 * (1.0 - coverage);
        let quantile = |target: f64| -> f64 {
            let mut acc = 0.0;
            for k in 0..n {
                let m = masses[(start + k) % n];
                if acc + m >= target {
                    let frac = if m > 0.0 { (target - acc) / m } else { 0.0 };
                    return (k as f64 + frac) * h;
                }
                acc += m;
            }
            1.0
        };
        quantile(1.0 - tail) - quantile(tail)
    }

    /// Expected information of one click about the phase, in bits: the
    /// divergence of the density from the uniform density on the circle.
    pub fn information_bits(&self) -> f64 {
        let h = self.bin_width();
        self.cell_masses()
            .into_iter()
            .filter(|m| *m > 0.0)
            .map(|m| m * (m / h).log2())
            .sum()
    }

    pub fn to_blob(&self) -> DensityBlob {
        DensityBlob {
            format: DENSITY_FORMAT.to_string(),
            version: DENSITY_VERSION,
            period_s: self.period,
            bin_count: self.bins.len(),
            damping_lambda: self.damping,
            bins: self.bins.clone(),
            recent_offsets: self.recent.iter().copied().collect(),
        }
    }

    pub fn from_blob(blob: DensityBlob) -> Result<Self> {
        if blob.format != DENSITY_FORMAT {
            return Err(Error::Format(format!("density blob format {:?}", blob.format)));
        }
        if blob.version != DENSITY_VERSION {
            return Err(Error::Version {
                format: DENSITY_FORMAT,
                found: blob.version,
                expected: DENSITY_VERSION,
            });
        }
        if blob.bins.len() != blob.bin_count || blob.bin_count < MIN_BIN_COUNT {
            return Err(Error::Format("density blob bin count".into()));
        }
        if blob.bins.iter().any(|b| !(b.is_finite() && *b >= 0.0))
            || blob.bins.iter().sum::<f64>() <= 0.0
        {
            return Err(Error::Format("density blob bins must be non-negative with positive sum".into()));
        }
        let mut density = Self::new(blob.period_s, blob.bin_count, blob.damping_lambda)?;
        density.bins = blob.bins;
        let capacity = recent_capacity(density.effective_n());
        let skip = blob.recent_offsets.len().saturating_sub(capacity);
        density.recent = blob.recent_offsets.into_iter().skip(skip).map(wrap_offset).collect();
        density.refresh_total();
        Ok(density)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.to_blob())?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Self::from_blob(serde_json::from_str(text)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

/// On-disk form of a [`ClickDensity`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityBlob {
    pub format: String,
    pub version: u32,
    pub period_s: f64,
    pub bin_count: usize,
    pub damping_lambda: f64,
    pub bins: Vec<f64>,
    #[serde(default)]
    pub recent_offsets: Vec<f64>,
}

/// Click offsets toward one selection, waiting for commitment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PendingSelection {
    pub clock_id: ClockId,
    pub offsets: Vec<f64>,
    /// Selections made since this one.
    pub age: usize,
}

/// A density plus the delay queue in front of it.
#[derive(Debug, Clone)]
pub struct ClickLearner {
    density: ClickDensity,
    pending: VecDeque<PendingSelection>,
    n_delay: usize,
    committed: usize,
}

impl ClickLearner {
    pub fn new(density: ClickDensity, n_delay: usize) -> Self {
        Self {
            density,
            pending: VecDeque::with_capacity(n_delay + 1),
            n_delay,
            committed: 0,
        }
    }

    pub fn density(&self) -> &ClickDensity {
        &self.density
    }

    pub fn density_mut(&mut self) -> &mut ClickDensity {
        &mut self.density
    }

    pub fn into_density(self) -> ClickDensity {
        self.density
    }

    pub fn n_delay(&self) -> usize {
        self.n_delay
    }

    pub fn pending(&self) -> impl Iterator<Item = &PendingSelection> {
        self.pending.iter()
    }

    /// Selections committed into the density so far.
    pub fn committed(&self) -> usize {
        self.committed
    }

    /// Queues a finished selection. Returns the selection that reached age
    /// `n_delay` and was committed, if any.
    pub fn stage_selection(&mut self, clock_id: ClockId, offsets: Vec<f64>) -> Option<PendingSelection> {
        for p in &mut self.pending {
            p.age += 1;
        }
        self.pending.push_back(PendingSelection {
            clock_id,
            offsets: offsets.into_iter().map(wrap_offset).collect(),
            age: 0,
        });
        if self.pending.len() > self.n_delay {
            let due = self.pending.pop_front()?;
            debug_assert_eq!(due.age, self.n_delay);
            self.density.commit(&due);
            self.committed += 1;
            Some(due)
        } else {
            None
        }
    }

    /// Drops the most recent pending selection; it will never be committed.
    pub fn discard_last(&mut self) -> Option<PendingSelection> {
        let dropped = self.pending.pop_back()?;
        for p in &mut self.pending {
            p.age -= 1;
        }
        Some(dropped)
    }

    /// Commits everything still pending, oldest first.
    pub fn flush(&mut self) {
        while let Some(p) = self.pending.pop_front() {
            self.density.commit(&p);
            self.committed += 1;
        }
    }
}
