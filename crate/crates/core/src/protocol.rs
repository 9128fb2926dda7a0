//! Reconciliation sessions, leakage accounting and efficiency.

use std::sync::Arc;

use crate::bits::BitBlock;
use crate::codes::CodeFamily;
use crate::decoder::{decode, ConvergenceMode, DecodeConfig, DecodeResult, Schedule};
use crate::error::{check_len, Error, Result};
use crate::estimation::{
    compute_syndromes, estimate_qber_mle, estimate_qber_sampling, syndrome_delta, EstimateReport,
    SyndromeSet, DEFAULT_GRID_STEP,
};
use crate::gf2::{gf2_rank, ParityCheckMatrix};

/// Shannon binary entropy in bits, with `h(0) = h(1) = 0`.
pub fn binary_entropy(e: f64) -> f64 {
    let term = |p: f64| if p <= 0.0 { 0.0 } else { -p * p.log2() };
    term(e) + term(1.0 - e)
}

/// Reconciliation efficiency `f = alpha m / (n h(e))`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Efficiency {
    pub f: f64,
    /// `f <= 1`: the code discloses no more than the Shannon minimum, so it
    /// cannot be expected to correct at this error rate.
    pub infeasible: bool,
}

pub fn reconciliation_efficiency(m: usize, n: usize, e: f64, alpha: f64) -> Result<Efficiency> {
    if e == 0.0 {
        return Err(Error::ZeroEntropy);
    }
    if !(e > 0.0 && e < 0.5) {
        return Err(Error::InvalidErrorRate(e));
    }
    if !(alpha >= 1.0) {
        return Err(Error::InvalidParameter(format!("alpha {alpha} must be at least 1")));
    }
    if n == 0 {
        return Err(Error::InvalidParameter("n must be positive".into()));
    }
    let f = alpha * m as f64 / (n as f64 * binary_entropy(e));
    Ok(Efficiency {
        f,
        infeasible: f <= 1.0 + 1e-12,
    })
}

/// Measured rank of all members stacked, relative to `m`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LeakageAudit {
    pub rank_stacked: usize,
    pub alpha: f64,
}

impl LeakageAudit {
    /// Disclosed syndrome bits charged to a session, never below `m`.
    pub fn leakage_bits(&self, m: usize) -> usize {
        self.rank_stacked.max(m)
    }
}

pub fn leakage_audit(family: &CodeFamily) -> LeakageAudit {
    let members: Vec<&ParityCheckMatrix> = family.codes().iter().collect();
    let stacked = ParityCheckMatrix::stack(&members).expect("family members share n");
    let rank_stacked = gf2_rank(&stacked);
    LeakageAudit {
        rank_stacked,
        alpha: rank_stacked as f64 / family.m() as f64,
    }
}

/// Removes the family's independent positions from `key`, keeping the order
/// of the remaining `n - m` bits.
pub fn discard_leakage(key: &BitBlock, family: &CodeFamily) -> Result<BitBlock> {
    check_len(family.n(), key.len())?;
    let mut drop = vec![false; family.n()];
    for &p in family.independent_positions() {
        drop[p] = true;
    }
    let keep: Vec<usize> = (0..family.n()).filter(|&i| !drop[i]).collect();
    Ok(key.select(&keep))
}

/// Alice's message to Bob: her syndrome under every member.
pub fn alice_encode(x: &BitBlock, family: &CodeFamily) -> Result<SyndromeSet> {
    compute_syndromes(x, family)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Estimator {
    /// Likelihood over the syndrome differences of all members.
    MultiSyndrome,
    /// Disagreement rate of a disclosed key sample.
    Sampling,
}

#[derive(Clone, Debug)]
pub struct SessionParams {
    pub family: Arc<CodeFamily>,
    pub threshold: f64,
    pub max_iterations: usize,
    pub schedule: Schedule,
    pub estimator: Estimator,
    pub convergence_mode: ConvergenceMode,
    /// Seeds the member choice of [`ConvergenceMode::RandomOne`].
    pub seed: u64,
    pub grid_step: f64,
    /// Stacked-rank audit of `family`, computed once in [`SessionParams::new`].
    pub audit: LeakageAudit,
}

impl SessionParams {
    /// Defaults: multi-syndrome estimation, all-member convergence check.
    pub fn new(
        family: Arc<CodeFamily>,
        threshold: f64,
        max_iterations: usize,
        schedule: Schedule,
    ) -> Result<Self> {
        let audit = leakage_audit(&family);
        Self::with_audit(family, audit, threshold, max_iterations, schedule)
    }

    /// Like [`SessionParams::new`] with an audit computed earlier for the
    /// same family.
    pub fn with_audit(
        family: Arc<CodeFamily>,
        audit: LeakageAudit,
        threshold: f64,
        max_iterations: usize,
        schedule: Schedule,
    ) -> Result<Self> {
        let params = SessionParams {
            family,
            threshold,
            max_iterations,
            schedule,
            estimator: Estimator::MultiSyndrome,
            convergence_mode: ConvergenceMode::All,
            seed: 0,
            grid_step: DEFAULT_GRID_STEP,
            audit,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.threshold > 0.0 && self.threshold <= 0.5) {
            return Err(Error::InvalidParameter(format!(
                "threshold {} outside (0, 0.5]",
                self.threshold
            )));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidParameter("max_iterations must be at least 1".into()));
        }
        Ok(())
    }
}

/// Optional inputs to [`bob_reconcile_with`].
#[derive(Clone, Copy, Debug, Default)]
pub struct ReconcileInputs<'a> {
    /// Alice's and Bob's bits at the sampled positions; required by the
    /// sampling estimator.
    pub sample: Option<(&'a BitBlock, &'a BitBlock)>,
    /// Error rate handed to the decoder instead of the estimate.
    pub decode_rate: Option<f64>,
    /// Alice's key, for per-iteration correction counts.
    pub truth: Option<&'a BitBlock>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ReconcileStatus {
    Success,
    DecodeFailure,
    Aborted,
}

#[derive(Clone, Debug)]
pub struct ReconcileOutcome {
    pub status: ReconcileStatus,
    /// Bob's key after discarding the independent positions; `Some` only on
    /// success.
    pub corrected_key: Option<BitBlock>,
    pub estimate_report: EstimateReport,
    /// `None` when the session aborted before decoding.
    pub decode_result: Option<DecodeResult>,
    pub leakage_bits: usize,
    pub alpha: f64,
    /// Efficiency at the error rate used for decoding; `NaN` on abort.
    pub efficiency_f: f64,
    pub efficiency_infeasible: bool,
}

/// Bob's side of a session using the syndrome-based estimator.
pub fn bob_reconcile(
    y: &BitBlock,
    alice: &SyndromeSet,
    params: &SessionParams,
) -> Result<ReconcileOutcome> {
    bob_reconcile_with(y, alice, params, ReconcileInputs::default())
}

/// Estimate, abort if the estimate is above the threshold, otherwise decode,
/// verify and discard.
///
/// An estimate of 0 is raised to `1 / (2n)` before decoding. The session
/// aborts when the estimate exceeds the threshold, including when the
/// likelihood still rises beyond it.
pub fn bob_reconcile_with(
    y: &BitBlock,
    alice: &SyndromeSet,
    params: &SessionParams,
    inputs: ReconcileInputs<'_>,
) -> Result<ReconcileOutcome> {
    params.validate()?;
    let family = params.family.as_ref();
    check_len(family.n(), y.len())?;
    alice.check_against(family)?;

    let report = match params.estimator {
        Estimator::MultiSyndrome => {
            let bob = compute_syndromes(y, family)?;
            let deltas = syndrome_delta(alice, &bob)?;
            estimate_qber_mle(&deltas, family, params.threshold, params.grid_step)?
        }
        Estimator::Sampling => {
            let (xs, ys) = inputs.sample.ok_or(Error::MissingSample)?;
            estimate_qber_sampling(xs, ys)?
        }
    };

    let leakage_bits = params.audit.leakage_bits(family.m());
    let alpha = leakage_bits as f64 / family.m() as f64;

    if report.estimate > params.threshold || report.exceeds_threshold {
        return Ok(ReconcileOutcome {
            status: ReconcileStatus::Aborted,
            corrected_key: None,
            estimate_report: report,
            decode_result: None,
            leakage_bits,
            alpha,
            efficiency_f: f64::NAN,
            efficiency_infeasible: false,
        });
    }

    let e_min = 1.0 / (2.0 * family.n() as f64);
    let rate = inputs.decode_rate.unwrap_or(report.estimate).max(e_min);
    let config = DecodeConfig {
        schedule: params.schedule,
        max_iterations: params.max_iterations,
        mode: params.convergence_mode,
        seed: params.seed,
    };
    let result = decode(y, rate, family, alice, &config, inputs.truth)?;
    let eff = reconciliation_efficiency(family.m(), family.n(), rate, alpha)?;

    let (status, corrected_key) = if result.success {
        (
            ReconcileStatus::Success,
            Some(discard_leakage(&result.corrected_key, family)?),
        )
    } else {
        (ReconcileStatus::DecodeFailure, None)
    };
    Ok(ReconcileOutcome {
        status,
        corrected_key,
        estimate_report: report,
        decode_result: Some(result),
        leakage_bits,
        alpha,
        efficiency_f: eff.f,
        efficiency_infeasible: eff.infeasible,
    })
}
