//! The experiment presets and their Monte-Carlo runner.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;
use std::time::Instant;

use mmrecon::codes::{
    build_base_matrix_with, derive_family, BuildOptions, CodeFamily, DegreeSpec, WaveLayout,
};
use mmrecon::decoder::{ConvergenceMode, Schedule};
use mmrecon::estimation::{
    compute_syndromes, estimate_qber_mle, estimate_qber_sampling, estimate_qber_single,
    syndrome_delta, EstimateMethod, DEFAULT_GRID_STEP,
};
use mmrecon::protocol::{
    alice_encode, bob_reconcile_with, discard_leakage, leakage_audit, reconciliation_efficiency,
    LeakageAudit, ReconcileInputs, ReconcileStatus, SessionParams,
};
use mmrecon::{BitBlock, ParityCheckMatrix};
use rayon::prelude::*;

use crate::error::BenchError;
use crate::sim::{apply_bsc, child_seed, gen_key, sample_positions, ErrorModel};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Experiment {
    /// Sampling vs single- vs multi-syndrome QBER estimates.
    EstAccuracy,
    /// Mean iterations per QBER, single- vs multi-matrix.
    IterationsVsQber,
    /// Mean iterations as the number of members grows.
    IterationsVsU,
    /// Compact vs separated member layouts.
    WaveEffect,
    /// Success rate at the iteration cap.
    SuccessRate,
    /// Per-iteration corrected and miscorrected bit counts.
    CorrectionsPerIter,
    /// Residual bit errors after a fixed number of iterations.
    BerAfterK,
}

impl Experiment {
    pub const ALL: [Experiment; 7] = [
        Experiment::EstAccuracy,
        Experiment::IterationsVsQber,
        Experiment::IterationsVsU,
        Experiment::WaveEffect,
        Experiment::SuccessRate,
        Experiment::CorrectionsPerIter,
        Experiment::BerAfterK,
    ];
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Experiment::EstAccuracy => "est_accuracy",
            Experiment::IterationsVsQber => "iterations_vs_qber",
            Experiment::IterationsVsU => "iterations_vs_u",
            Experiment::WaveEffect => "wave_effect",
            Experiment::SuccessRate => "success_rate",
            Experiment::CorrectionsPerIter => "corrections_per_iter",
            Experiment::BerAfterK => "ber_after_k",
        })
    }
}

impl FromStr for Experiment {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self, BenchError> {
        Experiment::ALL
            .into_iter()
            .find(|e| e.to_string() == s.replace('-', "_"))
            .ok_or_else(|| BenchError::Args(format!("unknown experiment {s:?}")))
    }
}

/// Error rate handed to the decoder.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum DecodeRate {
    /// The injected channel rate.
    Injected,
    /// The session's own QBER estimate.
    Estimated,
}

impl FromStr for DecodeRate {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self, BenchError> {
        match s {
            "injected" => Ok(DecodeRate::Injected),
            "estimated" => Ok(DecodeRate::Estimated),
            other => Err(BenchError::Args(format!("unknown decode rate {other:?}"))),
        }
    }
}

#[derive(Clone, Debug)]
pub struct ExperimentSpec {
    pub experiment: Experiment,
    pub n: usize,
    pub rate: f64,
    /// Largest family size; multi-matrix variants use this many members.
    pub u: usize,
    pub qber_list: Vec<f64>,
    pub trials: usize,
    pub max_iterations: usize,
    pub schedule_list: Vec<Schedule>,
    pub seed: u64,
    pub error_model: ErrorModel,
    /// Iteration cap of [`Experiment::BerAfterK`].
    pub k_iters: usize,
    pub convergence_mode: ConvergenceMode,
    pub decode_rate: DecodeRate,
    /// Abort threshold of every session and upper end of the estimator grid.
    pub threshold: f64,
    /// Fraction of the key disclosed by the sampling estimator.
    pub sample_rate: f64,
    /// Layouts compared by [`Experiment::WaveEffect`]; the first one is used
    /// by every other experiment.
    pub wave_layouts: Vec<WaveLayout>,
    /// Family sizes of [`Experiment::IterationsVsU`]; empty means `1..=u`.
    pub u_list: Vec<usize>,
    /// Record wall-clock time per session; off gives reproducible output.
    pub timing: bool,
}

impl ExperimentSpec {
    /// Reference simulation settings for `experiment`: n = 10000,
    /// rate 0.8, five members, 100 iterations, all three schedules.
    pub fn preset(experiment: Experiment) -> Self {
        let (qber_list, trials) = match experiment {
            Experiment::EstAccuracy => (vec![0.0068, 0.0166, 0.0267], 2000),
            Experiment::IterationsVsQber => (vec![0.02, 0.025, 0.03], 100),
            Experiment::IterationsVsU => (vec![0.0246], 100),
            Experiment::WaveEffect => (vec![0.02, 0.0225, 0.025], 100),
            Experiment::SuccessRate => (vec![0.0275], 1000),
            Experiment::CorrectionsPerIter => (vec![0.0267], 100),
            Experiment::BerAfterK => (vec![0.0202, 0.0216, 0.0229, 0.0243, 0.0256], 1000),
        };
        let schedule_list = if experiment == Experiment::CorrectionsPerIter {
            vec![Schedule::Flooding]
        } else {
            Schedule::ALL.to_vec()
        };
        let wave_layouts = if experiment == Experiment::WaveEffect {
            vec![WaveLayout::Compact, WaveLayout::Separated]
        } else {
            vec![WaveLayout::Separated]
        };
        ExperimentSpec {
            experiment,
            n: 10_000,
            rate: 0.8,
            u: 5,
            qber_list,
            trials,
            max_iterations: 100,
            schedule_list,
            seed: 1,
            error_model: ErrorModel::ExactCount,
            k_iters: 5,
            convergence_mode: ConvergenceMode::All,
            decode_rate: DecodeRate::Injected,
            threshold: 0.5,
            sample_rate: 0.5,
            wave_layouts,
            u_list: Vec::new(),
            timing: true,
        }
    }

    pub fn validate(&self) -> Result<(), BenchError> {
        let bad = |m: String| Err(BenchError::Args(m));
        if self.trials == 0 {
            return bad("trials must be at least 1".into());
        }
        if self.qber_list.is_empty() {
            return bad("empty QBER list".into());
        }
        if let Some(q) = self.qber_list.iter().find(|&&q| !(q > 0.0 && q < 0.5)) {
            return bad(format!("QBER {q} outside (0, 0.5)"));
        }
        if self.u == 0 {
            return bad("u must be at least 1".into());
        }
        if self.u_list.iter().any(|&u| u == 0 || u > self.u) {
            return bad(format!("u list entries must lie in 1..={}", self.u));
        }
        if self.max_iterations == 0 || self.k_iters == 0 {
            return bad("iteration caps must be at least 1".into());
        }
        if self.schedule_list.is_empty() || self.wave_layouts.is_empty() {
            return bad("empty schedule or layout list".into());
        }
        if !(self.rate > 0.0 && self.rate < 1.0) {
            return bad(format!("rate {} outside (0, 1)", self.rate));
        }
        if !(self.threshold > 0.0 && self.threshold <= 0.5) {
            return bad(format!("threshold {} outside (0, 0.5]", self.threshold));
        }
        if !(self.sample_rate > 0.0 && self.sample_rate <= 1.0) {
            return bad(format!("sample rate {} outside (0, 1]", self.sample_rate));
        }
        Ok(())
    }

    fn layout(&self) -> WaveLayout {
        self.wave_layouts[0]
    }

    fn u_values(&self) -> Vec<usize> {
        if self.u_list.is_empty() {
            (1..=self.u).collect()
        } else {
            self.u_list.clone()
        }
    }

    /// The algorithm variants compared at every (trial, QBER) point.
    pub fn variants(&self) -> Vec<Variant> {
        let layout = self.layout();
        let reconcile = |u: usize, schedule: Schedule, layout: WaveLayout, suffix: bool| Variant {
            label: if suffix {
                format!("{}/{}", schedule.algorithm_name(u), layout)
            } else {
                schedule.algorithm_name(u)
            },
            u,
            layout,
            kind: VariantKind::Reconcile(schedule),
        };
        let single_and_multi = || {
            let mut sizes = vec![1];
            if self.u > 1 {
                sizes.push(self.u);
            }
            sizes
                .into_iter()
                .flat_map(|u| self.schedule_list.iter().map(move |&s| reconcile(u, s, layout, false)))
                .collect()
        };
        match self.experiment {
            Experiment::EstAccuracy => vec![
                Variant {
                    label: EstimateMethod::Sampling.to_string(),
                    u: 0,
                    layout,
                    kind: VariantKind::Estimate(EstimateMethod::Sampling),
                },
                Variant {
                    label: EstimateMethod::SingleSyndrome.to_string(),
                    u: 1,
                    layout,
                    kind: VariantKind::Estimate(EstimateMethod::SingleSyndrome),
                },
                Variant {
                    label: EstimateMethod::MultiSyndrome.to_string(),
                    u: self.u,
                    layout,
                    kind: VariantKind::Estimate(EstimateMethod::MultiSyndrome),
                },
            ],
            Experiment::IterationsVsU => self
                .u_values()
                .into_iter()
                .flat_map(|u| self.schedule_list.iter().map(move |&s| reconcile(u, s, layout, false)))
                .collect(),
            Experiment::WaveEffect => self
                .wave_layouts
                .iter()
                .flat_map(|&l| self.schedule_list.iter().map(move |&s| reconcile(self.u, s, l, true)))
                .collect(),
            _ => single_and_multi(),
        }
    }

    fn iteration_cap(&self) -> usize {
        if self.experiment == Experiment::BerAfterK {
            self.k_iters
        } else {
            self.max_iterations
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VariantKind {
    Reconcile(Schedule),
    Estimate(EstimateMethod),
}

/// One algorithm column of an experiment.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Variant {
    pub label: String,
    /// Members used; 0 for the sampling estimator.
    pub u: usize,
    pub layout: WaveLayout,
    pub kind: VariantKind,
}

/// Parameters for building a family from scratch.
#[derive(Clone, Debug)]
pub struct BuildParams {
    pub n: usize,
    pub rate: f64,
    /// `(column degree, fraction)` pairs; `None` is regular degree 3.
    pub profile: Option<Vec<(usize, f64)>>,
    pub seed: u64,
    pub max_attempts: usize,
}

impl BuildParams {
    pub fn m(&self) -> usize {
        (self.n as f64 * (1.0 - self.rate)).round() as usize
    }

    pub fn degree_spec(&self) -> Result<DegreeSpec, BenchError> {
        let spec = match &self.profile {
            None => DegreeSpec::regular(self.n, self.m(), 3)?,
            Some(p) => DegreeSpec::from_fractions(self.n, self.m(), p)?,
        };
        Ok(spec)
    }

    pub fn build_base(&self) -> Result<ParityCheckMatrix, BenchError> {
        let opts = BuildOptions {
            max_attempts: self.max_attempts,
            ..Default::default()
        };
        Ok(build_base_matrix_with(&self.degree_spec()?, self.seed, opts)?.0)
    }
}

/// Parses `"3:0.5,2:0.19,6:0.16,20:0.15"` into a degree profile.
pub fn parse_profile(text: &str) -> Result<Vec<(usize, f64)>, BenchError> {
    text.split(',')
        .map(|item| {
            let (d, f) = item
                .split_once(':')
                .ok_or_else(|| BenchError::Args(format!("profile entry {item:?} lacks ':'")))?;
            let d = d
                .trim()
                .parse::<usize>()
                .map_err(|e| BenchError::Args(format!("degree {d:?}: {e}")))?;
            let f = f
                .trim()
                .parse::<f64>()
                .map_err(|e| BenchError::Args(format!("fraction {f:?}: {e}")))?;
            Ok((d, f))
        })
        .collect()
}

/// Where the families of an experiment come from.
#[derive(Clone, Debug)]
pub enum FamilySource {
    /// Build a base matrix and derive every needed family from it.
    Build(BuildParams),
    /// Use these members; other layouts are derived from member 0.
    Family(Arc<CodeFamily>),
}

/// A family and its leakage audit.
#[derive(Clone, Debug)]
pub struct AuditedFamily {
    pub family: Arc<CodeFamily>,
    pub audit: LeakageAudit,
}

/// Every family an experiment needs, keyed by layout and size.
#[derive(Clone, Debug)]
pub struct FamilySet {
    families: BTreeMap<(String, usize), AuditedFamily>,
}

impl FamilySet {
    pub fn get(&self, layout: WaveLayout, u: usize) -> Option<&AuditedFamily> {
        self.families.get(&(layout.to_string(), u))
    }

    /// Builds or derives the families required by `spec`.
    pub fn prepare(spec: &ExperimentSpec, source: &FamilySource) -> Result<Self, BenchError> {
        Self::prepare_for(spec, &spec.variants(), source)
    }

    /// Builds or derives the families required by `variants`.
    pub fn prepare_for(
        spec: &ExperimentSpec,
        variants: &[Variant],
        source: &FamilySource,
    ) -> Result<Self, BenchError> {
        let mut needed: Vec<(WaveLayout, usize)> = Vec::new();
        for v in variants {
            let u = v.u.max(1);
            if !needed.contains(&(v.layout, u)) {
                needed.push((v.layout, u));
            }
        }
        // The single-syndrome estimator and every u = 1 variant share member 0.
        let max_u = needed.iter().map(|&(_, u)| u).max().unwrap_or(1);

        let (base, given, family_seed) = match source {
            FamilySource::Build(p) => (p.build_base()?, None, child_seed(p.seed, &[u64::MAX])),
            FamilySource::Family(f) => (f.code(0).clone(), Some(f.clone()), f.seed()),
        };
        if base.n() != spec.n {
            return Err(BenchError::Args(format!(
                "family length {} differs from n = {}",
                base.n(),
                spec.n
            )));
        }

        let mut full: BTreeMap<String, Arc<CodeFamily>> = BTreeMap::new();
        let mut families = BTreeMap::new();
        for (layout, u) in needed {
            let key = layout.to_string();
            if !full.contains_key(&key) {
                let fam = match &given {
                    Some(f) if f.wave_layout() == layout || f.u() == 1 => {
                        if f.u() < max_u {
                            return Err(BenchError::Args(format!(
                                "family has {} members, experiment needs {max_u}",
                                f.u()
                            )));
                        }
                        f.clone()
                    }
                    _ => Arc::new(derive_family(&base, max_u, layout, family_seed)?),
                };
                full.insert(key.clone(), fam);
            }
            let fam = Arc::new(full[&key].truncated(u)?);
            let audit = leakage_audit(&fam);
            families.insert((key, u), AuditedFamily { family: fam, audit });
        }
        Ok(FamilySet { families })
    }
}

/// Outcome of one variant on one key pair.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricsRecord {
    pub trial_id: usize,
    pub algorithm: String,
    pub u: usize,
    /// Schedule name, or `none` for estimation-only rows.
    pub schedule: String,
    pub qber_injected: f64,
    pub qber_realized: f64,
    pub qber_estimated: f64,
    pub iterations_used: usize,
    pub success: bool,
    pub ber_final: f64,
    /// Bits still differing from Alice's key after the session.
    pub residual_errors: usize,
    pub n: usize,
    pub n_c_list: Vec<usize>,
    pub n_m_list: Vec<usize>,
    pub leakage_bits: usize,
    pub alpha: f64,
    pub efficiency_f: f64,
    pub wall_seconds: f64,
    /// Session status; `None` for estimation-only rows.
    pub status: Option<ReconcileStatus>,
    /// On success: Bob's discarded key equals Alice's discarded key.
    pub key_matches: Option<bool>,
}

impl MetricsRecord {
    /// Initial errors minus residual errors, from the per-iteration counts.
    pub fn net_corrections(&self) -> i64 {
        self.n_c_list.iter().sum::<usize>() as i64 - self.n_m_list.iter().sum::<usize>() as i64
    }
}

struct TrialContext<'a> {
    spec: &'a ExperimentSpec,
    families: &'a FamilySet,
    variants: &'a [Variant],
}

impl TrialContext<'_> {
    fn run_trial(&self, trial: usize) -> Result<Vec<MetricsRecord>, BenchError> {
        let spec = self.spec;
        let mut out = Vec::with_capacity(spec.qber_list.len() * self.variants.len());
        for &q in &spec.qber_list {
            let path = |tag: u64| child_seed(spec.seed, &[trial as u64, q.to_bits(), tag]);
            let x = gen_key(spec.n, path(0));
            let (y, realized) = apply_bsc(&x, q, spec.error_model, path(1));
            for (vi, variant) in self.variants.iter().enumerate() {
                let record = match variant.kind {
                    VariantKind::Estimate(method) => {
                        self.estimate(trial, q, &x, &y, realized, variant, method, path(2))?
                    }
                    VariantKind::Reconcile(schedule) => self.reconcile(
                        trial,
                        q,
                        &x,
                        &y,
                        realized,
                        variant,
                        schedule,
                        child_seed(path(3), &[vi as u64]),
                    )?,
                };
                out.push(record);
            }
        }
        Ok(out)
    }

    #[allow(clippy::too_many_arguments)]
    fn estimate(
        &self,
        trial: usize,
        q: f64,
        x: &BitBlock,
        y: &BitBlock,
        realized: f64,
        variant: &Variant,
        method: EstimateMethod,
        sample_seed: u64,
    ) -> Result<MetricsRecord, BenchError> {
        let spec = self.spec;
        let audited = self
            .families
            .get(variant.layout, variant.u.max(1))
            .expect("family prepared");
        let fam = audited.family.as_ref();
        let start = Instant::now();
        let (report, leakage) = match method {
            EstimateMethod::Sampling => {
                let pos = sample_positions(spec.n, spec.sample_rate, sample_seed);
                let r = estimate_qber_sampling(&x.select(&pos), &y.select(&pos))?;
                let disclosed = r.disclosed_bits;
                (r, disclosed)
            }
            EstimateMethod::SingleSyndrome | EstimateMethod::MultiSyndrome => {
                let za = compute_syndromes(x, fam)?;
                let zb = compute_syndromes(y, fam)?;
                let deltas = syndrome_delta(&za, &zb)?;
                let r = if method == EstimateMethod::SingleSyndrome {
                    estimate_qber_single(&deltas, fam, spec.threshold, DEFAULT_GRID_STEP)?
                } else {
                    estimate_qber_mle(&deltas, fam, spec.threshold, DEFAULT_GRID_STEP)?
                };
                (r, audited.audit.leakage_bits(fam.m()))
            }
        };
        let wall = if spec.timing { start.elapsed().as_secs_f64() } else { 0.0 };
        let residual = x.hamming_distance(y)?;
        Ok(MetricsRecord {
            trial_id: trial,
            algorithm: variant.label.clone(),
            u: variant.u,
            schedule: "none".into(),
            qber_injected: q,
            qber_realized: realized,
            qber_estimated: report.estimate,
            iterations_used: 0,
            success: false,
            ber_final: residual as f64 / spec.n as f64,
            residual_errors: residual,
            n: spec.n,
            n_c_list: Vec::new(),
            n_m_list: Vec::new(),
            leakage_bits: leakage,
            alpha: leakage as f64 / fam.m() as f64,
            efficiency_f: f64::NAN,
            wall_seconds: wall,
            status: None,
            key_matches: None,
        })
    }

    #[allow(clippy::too_many_arguments)]
    fn reconcile(
        &self,
        trial: usize,
        q: f64,
        x: &BitBlock,
        y: &BitBlock,
        realized: f64,
        variant: &Variant,
        schedule: Schedule,
        session_seed: u64,
    ) -> Result<MetricsRecord, BenchError> {
        let spec = self.spec;
        let audited = self.families.get(variant.layout, variant.u).expect("family prepared");
        let fam = audited.family.as_ref();
        let mut params = SessionParams::with_audit(
            audited.family.clone(),
            audited.audit,
            spec.threshold,
            spec.iteration_cap(),
            schedule,
        )?;
        params.convergence_mode = spec.convergence_mode;
        params.seed = session_seed;
        let inputs = ReconcileInputs {
            sample: None,
            decode_rate: match spec.decode_rate {
                DecodeRate::Injected => Some(q),
                DecodeRate::Estimated => None,
            },
            truth: Some(x),
        };

        let start = Instant::now();
        let alice = alice_encode(x, fam)?;
        let outcome = bob_reconcile_with(y, &alice, &params, inputs)?;
        let wall = if spec.timing { start.elapsed().as_secs_f64() } else { 0.0 };

        let (residual, iterations, n_c, n_m) = match &outcome.decode_result {
            Some(d) => (
                d.corrected_key.hamming_distance(x)?,
                d.iterations_used,
                d.per_iteration.iter().map(|s| s.n_c).collect(),
                d.per_iteration.iter().map(|s| s.n_m).collect(),
            ),
            None => (x.hamming_distance(y)?, 0, Vec::new(), Vec::new()),
        };
        let success = outcome.status == ReconcileStatus::Success;
        let key_matches = match &outcome.corrected_key {
            Some(k) => Some(*k == discard_leakage(x, fam)?),
            None => None,
        };
        let efficiency_f = if realized > 0.0 && realized < 0.5 {
            reconciliation_efficiency(fam.m(), fam.n(), realized, outcome.alpha)?.f
        } else {
            f64::NAN
        };
        Ok(MetricsRecord {
            trial_id: trial,
            algorithm: variant.label.clone(),
            u: variant.u,
            schedule: schedule.to_string(),
            qber_injected: q,
            qber_realized: realized,
            qber_estimated: outcome.estimate_report.estimate,
            iterations_used: iterations,
            success,
            ber_final: residual as f64 / spec.n as f64,
            residual_errors: residual,
            n: spec.n,
            n_c_list: n_c,
            n_m_list: n_m,
            leakage_bits: outcome.leakage_bits,
            alpha: outcome.alpha,
            efficiency_f,
            wall_seconds: wall,
            status: Some(outcome.status),
            key_matches,
        })
    }
}

/// Runs every trial of `spec` against prepared families. Records come back
/// ordered by trial, then QBER, then variant, however the trials were
/// scheduled across worker threads.
pub fn run_with_families(
    spec: &ExperimentSpec,
    families: &FamilySet,
) -> Result<Vec<MetricsRecord>, BenchError> {
    run_variants(spec, &spec.variants(), families)
}

/// Like [`run_with_families`] for an explicit variant list.
pub fn run_variants(
    spec: &ExperimentSpec,
    variants: &[Variant],
    families: &FamilySet,
) -> Result<Vec<MetricsRecord>, BenchError> {
    spec.validate()?;
    let ctx = TrialContext {
        spec,
        families,
        variants,
    };
    let per_trial: Vec<Vec<MetricsRecord>> = (0..spec.trials)
        .into_par_iter()
        .map(|t| ctx.run_trial(t))
        .collect::<Result<_, _>>()?;
    Ok(per_trial.into_iter().flatten().collect())
}

/// Prepares the families of `spec` from `source` and runs it.
pub fn run_experiment(
    spec: &ExperimentSpec,
    source: &FamilySource,
) -> Result<Vec<MetricsRecord>, BenchError> {
    spec.validate()?;
    let families = FamilySet::prepare(spec, source)?;
    run_with_families(spec, &families)
}

/// Aggregate statistics of one (algorithm, QBER) group.
#[derive(Clone, Debug, PartialEq)]
pub struct Summary {
    pub algorithm: String,
    pub qber_injected: f64,
    pub count: usize,
    pub mean_iterations: f64,
    /// Standard error of the mean iteration count.
    pub se_iterations: f64,
    pub success_rate: f64,
    /// Residual error bits over `count * n` compared bits.
    pub ber: f64,
    /// Root-mean-square difference between estimated and realized QBER.
    pub rmse_estimate: f64,
}

/// Groups records by (algorithm, QBER) in order of first appearance.
pub fn summarize(records: &[MetricsRecord]) -> Vec<Summary> {
    let mut order: Vec<(String, u64)> = Vec::new();
    let mut groups: BTreeMap<(String, u64), Vec<&MetricsRecord>> = BTreeMap::new();
    for r in records {
        let key = (r.algorithm.clone(), r.qber_injected.to_bits());
        if !groups.contains_key(&key) {
            order.push(key.clone());
        }
        groups.entry(key).or_default().push(r);
    }
    order
        .into_iter()
        .map(|key| {
            let rs = &groups[&key];
            let count = rs.len() as f64;
            let iters: Vec<f64> = rs.iter().map(|r| r.iterations_used as f64).collect();
            let mean = iters.iter().sum::<f64>() / count;
            let var = if rs.len() > 1 {
                iters.iter().map(|i| (i - mean).powi(2)).sum::<f64>() / (count - 1.0)
            } else {
                0.0
            };
            let residual: usize = rs.iter().map(|r| r.residual_errors).sum();
            let bits: usize = rs.iter().map(|r| r.n).sum();
            let mse = rs
                .iter()
                .map(|r| (r.qber_estimated - r.qber_realized).powi(2))
                .sum::<f64>()
                / count;
            Summary {
                algorithm: key.0,
                qber_injected: f64::from_bits(key.1),
                count: rs.len(),
                mean_iterations: mean,
                se_iterations: (var / count).sqrt(),
                success_rate: rs.iter().filter(|r| r.success).count() as f64 / count,
                ber: residual as f64 / bits as f64,
                rmse_estimate: mse.sqrt(),
            }
        })
        .collect()
}
