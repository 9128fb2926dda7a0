//! Syndrome computation and QBER estimators.
//!
//! The syndrome-based estimator maximizes the likelihood of the observed
//! syndrome differences. A check of degree `d` sees a flipped syndrome bit
//! exactly when an odd number of its `d` variables are in error, which for an
//! independent error rate `e` happens with probability
//! `p(e, d) = (1 - (1 - 2e)^d) / 2`.

use std::collections::BTreeMap;
use std::fmt;

use crate::bits::BitBlock;
use crate::codes::CodeFamily;
use crate::error::{check_len, Error, Result};
use crate::gf2::ParityCheckMatrix;
use crate::protocol::binary_entropy;

/// Default likelihood grid resolution.
pub const DEFAULT_GRID_STEP: f64 = 1e-4;

/// Syndromes of one key under every member of a family.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SyndromeSet {
    syndromes: Vec<BitBlock>,
    family_id: u64,
}

impl SyndromeSet {
    pub fn new(syndromes: Vec<BitBlock>, family_id: u64) -> Self {
        SyndromeSet {
            syndromes,
            family_id,
        }
    }

    pub fn syndromes(&self) -> &[BitBlock] {
        &self.syndromes
    }

    pub fn family_id(&self) -> u64 {
        self.family_id
    }

    pub fn u(&self) -> usize {
        self.syndromes.len()
    }

    pub(crate) fn check_against(&self, family: &CodeFamily) -> Result<()> {
        if self.family_id != family.id() || self.u() != family.u() {
            return Err(Error::FamilyMismatch);
        }
        for s in &self.syndromes {
            check_len(family.m(), s.len())?;
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum EstimateMethod {
    MultiSyndrome,
    SingleSyndrome,
    Sampling,
}

impl fmt::Display for EstimateMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EstimateMethod::MultiSyndrome => "multi",
            EstimateMethod::SingleSyndrome => "single",
            EstimateMethod::Sampling => "sampling",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EstimateReport {
    pub estimate: f64,
    pub method: EstimateMethod,
    /// Key bits revealed to obtain the estimate.
    pub disclosed_bits: usize,
    pub log_likelihood_at_estimate: f64,
    pub grid_step: f64,
    /// The likelihood is still rising past the threshold, i.e. the
    /// unconstrained maximum lies above it. Always false for sampling.
    pub exceeds_threshold: bool,
}

/// Alice's (or Bob's) syndrome under every family member.
pub fn compute_syndromes(x: &BitBlock, family: &CodeFamily) -> Result<SyndromeSet> {
    check_len(family.n(), x.len())?;
    let syndromes = family
        .codes()
        .iter()
        .map(|h| h.mul_vec(x))
        .collect::<Result<Vec<_>>>()?;
    Ok(SyndromeSet::new(syndromes, family.id()))
}

/// Per-member XOR of two syndrome sets.
pub fn syndrome_delta(za: &SyndromeSet, zb: &SyndromeSet) -> Result<Vec<BitBlock>> {
    if za.family_id != zb.family_id || za.u() != zb.u() {
        return Err(Error::FamilyMismatch);
    }
    za.syndromes
        .iter()
        .zip(&zb.syndromes)
        .map(|(a, b)| a.xor(b).map_err(|_| Error::FamilyMismatch))
        .collect()
}

/// Probability that a degree-`d` check covers an odd number of errors when
/// each bit is wrong independently with probability `e_prime`.
pub fn odd_error_prob(e_prime: f64, d: usize) -> f64 {
    (1.0 - (1.0 - 2.0 * e_prime).powi(d as i32)) / 2.0
}

fn check_deltas(deltas: &[BitBlock], family: &CodeFamily) -> Result<()> {
    check_len(family.u(), deltas.len())?;
    for d in deltas {
        check_len(family.m(), d.len())?;
    }
    Ok(())
}

/// Log-likelihood of `e_prime` given syndrome differences, summed over every
/// member and check. A term with zero probability yields `-inf`.
pub fn log_likelihood(e_prime: f64, deltas: &[BitBlock], family: &CodeFamily) -> Result<f64> {
    check_deltas(deltas, family)?;
    let mut total = 0.0;
    for (h, dz) in family.codes().iter().zip(deltas) {
        for j in 0..h.m() {
            let p = odd_error_prob(e_prime, h.check_degree(j));
            total += if dz.get(j) { p.ln() } else { (1.0 - p).ln() };
        }
    }
    Ok(total)
}

/// Counts of flipped and unflipped syndrome bits per check degree; a
/// sufficient statistic for the likelihood.
#[derive(Clone, Debug, Default)]
struct DegreeTally {
    // degree -> (unflipped, flipped)
    counts: Vec<(usize, u64, u64)>,
}

impl DegreeTally {
    fn from_members<'a>(members: impl Iterator<Item = (&'a ParityCheckMatrix, &'a BitBlock)>) -> Self {
        let mut map: BTreeMap<usize, (u64, u64)> = BTreeMap::new();
        for (h, dz) in members {
            for j in 0..h.m() {
                let entry = map.entry(h.check_degree(j)).or_default();
                if dz.get(j) {
                    entry.1 += 1;
                } else {
                    entry.0 += 1;
                }
            }
        }
        DegreeTally {
            counts: map.into_iter().map(|(d, (z, o))| (d, z, o)).collect(),
        }
    }

    fn all_unflipped(&self) -> bool {
        self.counts.iter().all(|&(_, _, ones)| ones == 0)
    }

    fn log_likelihood(&self, e: f64) -> f64 {
        let mut total = 0.0;
        for &(d, zeros, ones) in &self.counts {
            let p = odd_error_prob(e, d);
            if zeros > 0 {
                total += zeros as f64 * (1.0 - p).ln();
            }
            if ones > 0 {
                total += ones as f64 * p.ln();
            }
        }
        total
    }
}

fn grid_search(
    tally: &DegreeTally,
    threshold: f64,
    grid_step: f64,
    method: EstimateMethod,
) -> Result<EstimateReport> {
    if !(grid_step > 0.0) {
        return Err(Error::InvalidParameter(format!("grid step {grid_step} must be positive")));
    }
    if !(threshold > 0.0 && threshold <= 0.5) {
        return Err(Error::InvalidParameter(format!(
            "threshold {threshold} outside (0, 0.5]"
        )));
    }

    let mut grid: Vec<f64> = Vec::new();
    if tally.all_unflipped() {
        grid.push(0.0);
    }
    let steps = (threshold / grid_step + 1e-9).floor() as usize;
    grid.extend((1..=steps).map(|k| k as f64 * grid_step));
    if grid.last().is_none_or(|&g| g < threshold - 1e-12) {
        grid.push(threshold);
    }

    let mut best = (f64::NAN, f64::NEG_INFINITY);
    for &e in &grid {
        let ll = tally.log_likelihood(e);
        // Strict comparison keeps the smaller point on ties.
        if best.0.is_nan() || ll > best.1 {
            best = (e, ll);
        }
    }

    let at_top = best.0 >= threshold - 1e-12;
    let exceeds_threshold =
        at_top && threshold < 0.5 && tally.log_likelihood((threshold + grid_step).min(0.5)) > best.1;

    Ok(EstimateReport {
        estimate: best.0.min(threshold),
        method,
        disclosed_bits: 0,
        log_likelihood_at_estimate: best.1,
        grid_step,
        exceeds_threshold,
    })
}

/// Maximum-likelihood QBER from the syndrome differences of every member.
///
/// Grid `{step, 2 step, ..., threshold}`, plus 0 when no syndrome bit
/// differs; ties resolve to the smaller error rate.
pub fn estimate_qber_mle(
    deltas: &[BitBlock],
    family: &CodeFamily,
    threshold: f64,
    grid_step: f64,
) -> Result<EstimateReport> {
    check_deltas(deltas, family)?;
    let tally = DegreeTally::from_members(family.codes().iter().zip(deltas));
    let method = if family.u() == 1 {
        EstimateMethod::SingleSyndrome
    } else {
        EstimateMethod::MultiSyndrome
    };
    grid_search(&tally, threshold, grid_step, method)
}

/// The same estimator restricted to the first member.
pub fn estimate_qber_single(
    deltas: &[BitBlock],
    family: &CodeFamily,
    threshold: f64,
    grid_step: f64,
) -> Result<EstimateReport> {
    check_deltas(deltas, family)?;
    let tally = DegreeTally::from_members(std::iter::once((family.code(0), &deltas[0])));
    grid_search(&tally, threshold, grid_step, EstimateMethod::SingleSyndrome)
}

/// Fraction of disagreeing positions in a disclosed sample.
pub fn estimate_qber_sampling(x_sample: &BitBlock, y_sample: &BitBlock) -> Result<EstimateReport> {
    if x_sample.is_empty() {
        return Err(Error::EmptySample);
    }
    let dist = x_sample.hamming_distance(y_sample)?;
    Ok(EstimateReport {
        estimate: dist as f64 / x_sample.len() as f64,
        method: EstimateMethod::Sampling,
        disclosed_bits: x_sample.len(),
        log_likelihood_at_estimate: f64::NAN,
        grid_step: 0.0,
        exceeds_threshold: false,
    })
}

/// Error rate at which a code of rate `1 - m/n` reaches the Shannon limit,
/// i.e. `h(e) = m / n` with `e` in `[0, 0.5]`.
pub fn default_threshold(m: usize, n: usize) -> f64 {
    let target = (m as f64 / n as f64).min(1.0);
    let (mut lo, mut hi) = (0.0f64, 0.5f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if binary_entropy(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}
