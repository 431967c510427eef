//! Hardness binning, the self-paced factor schedule and the under-samplers.
//!
//! The self-paced sampler draws `target` majority rows across `k` hardness
//! bins. Each nonempty bin gets unnormalized weight `1 / (h + α)` where `h`
//! is its mean hardness. With `α = 0` every bin contributes the same total
//! hardness; as `α` grows the draw approaches uniform-over-bins.

use std::f64::consts::FRAC_PI_2;

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Result, SpeError};
use crate::rng::RandomSource;

pub const DEFAULT_ALPHA_CAP: f64 = 1e9;

/// Floor on `h + α` when forming bin weights, so a zero-hardness bin at
/// `α = 0` dominates without producing an infinite weight.
pub const MIN_WEIGHT_DENOMINATOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct BinPartition {
    edges: Vec<f64>,
    members: Vec<Vec<usize>>,
    mean_hardness: Vec<Option<f64>>,
}

impl BinPartition {
    pub fn k(&self) -> usize {
        self.members.len()
    }

    /// `k + 1` ascending edges; the last bin is closed on the right.
    pub fn edges(&self) -> &[f64] {
        &self.edges
    }

    pub fn members(&self) -> &[Vec<usize>] {
        &self.members
    }

    pub fn mean_hardness(&self) -> &[Option<f64>] {
        &self.mean_hardness
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.members.iter().map(Vec::len).collect()
    }

    pub fn total(&self) -> usize {
        self.members.iter().map(Vec::len).sum()
    }
}

/// Cuts `(row index, hardness)` pairs into `k` equal-width bins over the
/// observed `[min, max]` range.
pub fn partition_bins(values: &[(usize, f64)], k: usize) -> Result<BinPartition> {
    if k == 0 {
        return Err(SpeError::param("k_bins", "must be at least 1"));
    }
    if values.is_empty() {
        return Err(SpeError::InvalidInput("no hardness values to bin".into()));
    }
    if let Some(&(i, v)) = values.iter().find(|(_, v)| !v.is_finite()) {
        return Err(SpeError::InvalidInput(format!(
            "hardness of row {i} is not finite ({v})"
        )));
    }
    let lo = values.iter().map(|v| v.1).fold(f64::INFINITY, f64::min);
    let hi = values.iter().map(|v| v.1).fold(f64::NEG_INFINITY, f64::max);
    let range = hi - lo;

    let mut edges: Vec<f64> = (0..k).map(|l| lo + range * l as f64 / k as f64).collect();
    edges.push(hi);

    let mut members = vec![Vec::new(); k];
    let mut sums = vec![0.0; k];
    for &(i, v) in values {
        let mut bin = 0;
        if range > 0.0 {
            bin = (((v - lo) / range * k as f64).floor() as usize).min(k - 1);
            // keep assignment consistent with the stored edges despite rounding
            while bin > 0 && v < edges[bin] {
                bin -= 1;
            }
            while bin + 1 < k && v >= edges[bin + 1] {
                bin += 1;
            }
        }
        members[bin].push(i);
        sums[bin] += v;
    }
    let mean_hardness = members
        .iter()
        .zip(&sums)
        .map(|(m, &s)| (!m.is_empty()).then(|| s / m.len() as f64))
        .collect();
    Ok(BinPartition {
        edges,
        members,
        mean_hardness,
    })
}

/// `α_i = tan(((i − 1) / n) · π/2)`, clamped to `alpha_cap`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SelfPacedSchedule {
    pub n: usize,
    pub alpha_cap: f64,
}

impl SelfPacedSchedule {
    pub fn new(n: usize) -> Self {
        SelfPacedSchedule {
            n,
            alpha_cap: DEFAULT_ALPHA_CAP,
        }
    }

    pub fn alpha(&self, i: usize) -> Result<f64> {
        if self.n == 0 || i == 0 || i > self.n {
            return Err(SpeError::Range(format!(
                "iteration {i} not in 1..={}",
                self.n
            )));
        }
        let theta = (i - 1) as f64 / self.n as f64 * FRAC_PI_2;
        Ok(theta.tan().min(self.alpha_cap))
    }

    pub fn alphas(&self) -> Vec<f64> {
        (1..=self.n).map(|i| self.alpha(i).expect("in range")).collect()
    }
}

pub fn self_paced_alpha(i: usize, n: usize) -> Result<f64> {
    SelfPacedSchedule::new(n).alpha(i)
}

/// Normalized per-bin sampling weights; empty bins get zero.
pub fn bin_sampling_weights(partition: &BinPartition, alpha: f64) -> Result<Vec<f64>> {
    if !(alpha >= 0.0) {
        return Err(SpeError::Range(format!("self-paced factor {alpha} is negative")));
    }
    let raw: Vec<f64> = partition
        .mean_hardness
        .iter()
        .map(|h| match h {
            Some(h) => 1.0 / (h + alpha).max(MIN_WEIGHT_DENOMINATOR),
            None => 0.0,
        })
        .collect();
    let total: f64 = raw.iter().sum();
    if !(total > 0.0) {
        return Err(SpeError::InvalidInput("all hardness bins are empty".into()));
    }
    Ok(raw.into_iter().map(|w| w / total).collect())
}

/// Splits `target` into integer shares proportional to `weights` by the
/// largest-remainder rule; ties go to the lower index.
pub fn largest_remainder(weights: &[f64], target: usize) -> Vec<usize> {
    let total: f64 = weights.iter().sum();
    if target == 0 || !(total > 0.0) {
        return vec![0; weights.len()];
    }
    let raw: Vec<f64> = weights.iter().map(|w| w / total * target as f64).collect();
    let mut shares: Vec<usize> = raw.iter().map(|r| r.floor() as usize).collect();
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| {
        let fa = raw[a] - raw[a].floor();
        let fb = raw[b] - raw[b].floor();
        fb.total_cmp(&fa).then(a.cmp(&b))
    });
    let assigned: usize = shares.iter().sum();
    if assigned <= target {
        for &l in order.iter().filter(|&&l| weights[l] > 0.0).cycle().take(target - assigned) {
            shares[l] += 1;
        }
    } else {
        // rounding pushed the floors over target; take back from the smallest remainders
        let mut surplus = assigned - target;
        for &l in order.iter().rev() {
            if surplus == 0 {
                break;
            }
            if shares[l] > 0 {
                shares[l] -= 1;
                surplus -= 1;
            }
        }
    }
    shares
}

/// Per-bin quotas for drawing `target` rows, capped at bin sizes.
///
/// Returns the quotas and the shortfall left when every bin is exhausted.
/// Capped surplus is re-apportioned over bins with spare capacity by their
/// weights, or uniformly when those weights are all zero.
pub fn bin_quotas(sizes: &[usize], weights: &[f64], target: usize) -> (Vec<usize>, usize) {
    assert_eq!(sizes.len(), weights.len());
    let available: usize = sizes.iter().sum();
    if available <= target {
        return (sizes.to_vec(), target - available);
    }
    let mut quotas = largest_remainder(weights, target);
    loop {
        let mut excess = 0;
        for (q, &s) in quotas.iter_mut().zip(sizes) {
            if *q > s {
                excess += *q - s;
                *q = s;
            }
        }
        if excess == 0 {
            return (quotas, 0);
        }
        // spare capacity always exceeds the excess here since available > target
        let spare: Vec<usize> = sizes.iter().zip(&quotas).map(|(s, q)| s - q).collect();
        let eligible: Vec<f64> = weights
            .iter()
            .zip(&spare)
            .map(|(&w, &c)| if c > 0 { w } else { 0.0 })
            .collect();
        let eligible = if eligible.iter().sum::<f64>() > 0.0 {
            eligible
        } else {
            spare.iter().map(|&c| if c > 0 { 1.0 } else { 0.0 }).collect()
        };
        for (q, e) in quotas.iter_mut().zip(largest_remainder(&eligible, excess)) {
            *q += e;
        }
    }
}

/// Result of a resampling draw.
#[derive(Debug, Clone, PartialEq)]
pub struct Draw {
    pub indices: Vec<usize>,
    /// Set when the pool was smaller than the target and rows were repeated.
    pub with_replacement: bool,
}

/// Self-paced draw: quotas per bin, uniform without replacement inside each bin.
#[derive(Debug, Clone, PartialEq)]
pub struct BinDraw {
    pub indices: Vec<usize>,
    pub quotas: Vec<usize>,
    pub with_replacement: bool,
}

pub fn self_paced_undersample(
    partition: &BinPartition,
    weights: &[f64],
    target: usize,
    rng: &mut RandomSource,
) -> Result<BinDraw> {
    if target == 0 {
        return Err(SpeError::param("target", "must be at least 1"));
    }
    if weights.len() != partition.k() {
        return Err(SpeError::InvalidInput(format!(
            "{} weights for {} bins",
            weights.len(),
            partition.k()
        )));
    }
    if partition.total() == 0 {
        return Err(SpeError::InvalidInput("all hardness bins are empty".into()));
    }
    let (quotas, shortfall) = bin_quotas(&partition.sizes(), weights, target);
    let mut indices = Vec::with_capacity(target);
    for (members, &q) in partition.members.iter().zip(&quotas) {
        if q == 0 {
            continue;
        }
        indices.extend(index::sample(rng, members.len(), q).into_iter().map(|j| members[j]));
    }
    if shortfall > 0 {
        let all: Vec<usize> = partition.members.iter().flatten().copied().collect();
        indices.extend((0..shortfall).map(|_| all[rng.random_range(0..all.len())]));
    }
    Ok(BinDraw {
        indices,
        quotas,
        with_replacement: shortfall > 0,
    })
}

/// Draws `target` entries of `pool`: uniform without replacement when the
/// pool is large enough, otherwise the whole pool plus uniform repeats.
pub fn undersample_pool(pool: &[usize], target: usize, rng: &mut RandomSource) -> Draw {
    if pool.len() >= target {
        Draw {
            indices: index::sample(rng, pool.len(), target)
                .into_iter()
                .map(|j| pool[j])
                .collect(),
            with_replacement: false,
        }
    } else {
        let mut indices = pool.to_vec();
        if !pool.is_empty() {
            indices.extend((pool.len()..target).map(|_| pool[rng.random_range(0..pool.len())]));
        }
        Draw {
            indices,
            with_replacement: true,
        }
    }
}

/// `|P|` majority rows drawn uniformly.
pub fn random_undersample(data: &Dataset, rng: &mut RandomSource) -> Result<Draw> {
    if data.n_majority() == 0 {
        return Err(SpeError::InvalidInput("no majority rows to under-sample".into()));
    }
    Ok(undersample_pool(data.majority_indices(), data.n_minority(), rng))
}

/// `|N|` minority rows: every minority row once, topped up with uniform
/// repeats until the classes balance.
pub fn random_oversample(data: &Dataset, rng: &mut RandomSource) -> Result<Draw> {
    let minority = data.minority_indices();
    if minority.is_empty() {
        return Err(SpeError::InvalidInput("no minority rows to over-sample".into()));
    }
    let target = data.n_majority();
    if target <= minority.len() {
        return Ok(undersample_pool(minority, target, rng));
    }
    let mut indices = minority.to_vec();
    indices.extend((minority.len()..target).map(|_| minority[rng.random_range(0..minority.len())]));
    Ok(Draw {
        indices,
        with_replacement: true,
    })
}
