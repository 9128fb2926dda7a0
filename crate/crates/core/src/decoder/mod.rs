//! Belief-propagation syndrome decoding over one or several parity-check
//! matrices.
//!
//! Log-likelihood ratios follow `L = log(P(bit = 0) / P(bit = 1))`, so a
//! positive value favours 0. Each family member keeps its own v2c/c2v message
//! tables; members exchange nothing during message passing and are combined
//! only in the soft decision, which adds every member's incoming c2v messages
//! to the channel value.

mod schedules;

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bits::BitBlock;
use crate::codes::CodeFamily;
use crate::error::{check_len, Error, Result};
use crate::estimation::SyndromeSet;

/// Bound on every message magnitude.
pub const LLR_CLAMP: f64 = 30.0;
/// Bound on the magnitude of the tanh product fed to `atanh`.
pub const ATANH_CLAMP: f64 = 1.0 - 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Schedule {
    Flooding,
    Shuffled,
    Layered,
}

impl Schedule {
    pub const ALL: [Schedule; 3] = [Schedule::Flooding, Schedule::Shuffled, Schedule::Layered];

    /// Conventional algorithm name: BP/SBP/LBP, with an `M` prefix for
    /// multi-matrix decoding.
    pub fn algorithm_name(self, u: usize) -> String {
        let base = match self {
            Schedule::Flooding => "BP",
            Schedule::Shuffled => "SBP",
            Schedule::Layered => "LBP",
        };
        if u > 1 {
            format!("M{base}")
        } else {
            base.to_string()
        }
    }
}

impl fmt::Display for Schedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Schedule::Flooding => "flooding",
            Schedule::Shuffled => "shuffled",
            Schedule::Layered => "layered",
        })
    }
}

impl FromStr for Schedule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "flooding" => Ok(Schedule::Flooding),
            "shuffled" => Ok(Schedule::Shuffled),
            "layered" => Ok(Schedule::Layered),
            other => Err(Error::InvalidParameter(format!("unknown schedule {other:?}"))),
        }
    }
}

/// Stopping rule applied after each iteration.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ConvergenceMode {
    /// Compare the syndrome of one uniformly chosen member.
    RandomOne,
    /// Compare the syndromes of all members.
    All,
}

impl fmt::Display for ConvergenceMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ConvergenceMode::RandomOne => "random-one",
            ConvergenceMode::All => "all",
        })
    }
}

impl FromStr for ConvergenceMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "random-one" | "random_one" => Ok(ConvergenceMode::RandomOne),
            "all" => Ok(ConvergenceMode::All),
            other => Err(Error::InvalidParameter(format!("unknown convergence mode {other:?}"))),
        }
    }
}

#[inline]
pub(crate) fn clamp_llr(x: f64) -> f64 {
    x.clamp(-LLR_CLAMP, LLR_CLAMP)
}

/// `tanh(v / 2)`, written as `1 - 2 / (1 + e^v)` (one `exp` instead of a
/// `tanh`; identical up to rounding for clamped inputs).
#[inline]
pub(crate) fn half_tanh(v: f64) -> f64 {
    1.0 - 2.0 / (1.0 + v.exp())
}

/// `sign(z) * 2 atanh(prod)`, with the product and result clamped.
/// `2 atanh(p)` is evaluated as `ln((1 + p) / (1 - p))`.
#[inline]
pub(crate) fn c2v_from_product(prod: f64, syndrome_bit: bool) -> f64 {
    let p = prod.clamp(-ATANH_CLAMP, ATANH_CLAMP);
    let v = ((1.0 + p) / (1.0 - p)).ln();
    clamp_llr(if syndrome_bit { -v } else { v })
}

/// Message tables of one family member, indexed by edge id.
#[derive(Clone, Debug)]
pub(crate) struct MemberMessages {
    pub(crate) v2c: Vec<f64>,
    pub(crate) c2v: Vec<f64>,
    /// `tanh(v2c / 2)`, kept in sync with `v2c`.
    pub(crate) half_tanh: Vec<f64>,
}

/// Messages, channel values and decisions of one decoding session.
#[derive(Clone, Debug)]
pub struct DecoderState {
    members: Vec<MemberMessages>,
    channel: Vec<f64>,
    hard: BitBlock,
    iteration: usize,
}

impl DecoderState {
    /// Channel log-ratio of variable `i`.
    pub fn channel_llr(&self, i: usize) -> f64 {
        self.channel[i]
    }

    pub fn channel_llrs(&self) -> &[f64] {
        &self.channel
    }

    /// v2c message on edge `e` of member `k`.
    pub fn v2c(&self, k: usize, e: usize) -> f64 {
        self.members[k].v2c[e]
    }

    /// c2v message on edge `e` of member `k`.
    pub fn c2v(&self, k: usize, e: usize) -> f64 {
        self.members[k].c2v[e]
    }

    /// Overwrites the v2c message on edge `e` of member `k`.
    pub fn set_v2c(&mut self, k: usize, e: usize, value: f64) {
        let v = clamp_llr(value);
        self.members[k].v2c[e] = v;
        self.members[k].half_tanh[e] = half_tanh(v);
    }

    /// Overwrites the c2v message on edge `e` of member `k`.
    pub fn set_c2v(&mut self, k: usize, e: usize, value: f64) {
        self.members[k].c2v[e] = clamp_llr(value);
    }

    pub fn hard_decisions(&self) -> &BitBlock {
        &self.hard
    }

    pub fn iteration(&self) -> usize {
        self.iteration
    }

    /// Largest message magnitude over all members and edges.
    pub fn max_message_magnitude(&self) -> f64 {
        self.members
            .iter()
            .flat_map(|m| m.v2c.iter().chain(&m.c2v))
            .fold(0.0f64, |acc, &x| acc.max(x.abs()))
    }
}

fn check_error_rate(e: f64) -> Result<()> {
    if e > 0.0 && e < 0.5 {
        Ok(())
    } else {
        Err(Error::InvalidErrorRate(e))
    }
}

/// Channel log-ratios from Bob's bits and the error rate, with every v2c
/// message of every member set to its variable's channel value.
pub fn initialize(y: &BitBlock, e: f64, family: &CodeFamily) -> Result<DecoderState> {
    check_error_rate(e)?;
    check_len(family.n(), y.len())?;
    let l0 = ((1.0 - e) / e).ln();
    let channel: Vec<f64> = y.iter().map(|b| if b { -l0 } else { l0 }).collect();
    let members = family
        .codes()
        .iter()
        .map(|h| {
            let v2c: Vec<f64> = (0..h.edge_count())
                .map(|e| clamp_llr(channel[h.edge_var(e)]))
                .collect();
            let half_tanh = v2c.iter().map(|&v| half_tanh(v)).collect();
            MemberMessages {
                c2v: vec![0.0; v2c.len()],
                v2c,
                half_tanh,
            }
        })
        .collect();
    Ok(DecoderState {
        members,
        channel,
        hard: y.clone(),
        iteration: 0,
    })
}

/// c2v message from check `j` to variable `i` in member `k`, computed from
/// the current v2c messages of the other variables of `j`.
///
/// Panics if `(j, i)` is not an edge of member `k`.
pub fn c2v_message(
    state: &DecoderState,
    family: &CodeFamily,
    k: usize,
    j: usize,
    i: usize,
    syndrome_bit: bool,
) -> f64 {
    let h = family.code(k);
    let target = h.edge(j, i).expect("no such edge");
    let prod: f64 = h
        .row_edges(j)
        .filter(|&e| e != target)
        .map(|e| half_tanh(state.members[k].v2c[e]))
        .product();
    c2v_from_product(prod, syndrome_bit)
}

/// v2c message from variable `i` to check `j` in member `k`: the channel value
/// plus the c2v messages from the other checks of `i` in that member.
///
/// Panics if `(j, i)` is not an edge of member `k`.
pub fn v2c_message(state: &DecoderState, family: &CodeFamily, k: usize, i: usize, j: usize) -> f64 {
    let h = family.code(k);
    let target = h.edge(j, i).expect("no such edge");
    let extrinsic: f64 = h
        .col_edges(i)
        .iter()
        .filter(|&&e| e != target)
        .map(|&e| state.members[k].c2v[e])
        .sum();
    clamp_llr(state.channel[i] + extrinsic)
}

/// Soft value of variable `i` within member `k` only.
pub fn member_soft_decision(state: &DecoderState, family: &CodeFamily, k: usize, i: usize) -> f64 {
    let h = family.code(k);
    state.channel[i]
        + h.col_edges(i)
            .iter()
            .map(|&e| state.members[k].c2v[e])
            .sum::<f64>()
}

/// Soft value of variable `i`: the channel value plus every incoming c2v
/// message of every member.
pub fn soft_decision(state: &DecoderState, family: &CodeFamily, i: usize) -> f64 {
    let mut total = state.channel[i];
    for (h, msgs) in family.codes().iter().zip(&state.members) {
        for &e in h.col_edges(i) {
            total += msgs.c2v[e];
        }
    }
    total
}

/// Bit decision: 0 for positive, 1 for negative, the channel bit on a tie.
pub fn hard_decision(l: f64, channel_bit: bool) -> bool {
    if l > 0.0 {
        false
    } else if l < 0.0 {
        true
    } else {
        channel_bit
    }
}

/// Whether `y` reproduces Alice's syndromes under the given stopping rule.
pub fn convergence_check<R: Rng + ?Sized>(
    y: &BitBlock,
    family: &CodeFamily,
    alice: &SyndromeSet,
    mode: ConvergenceMode,
    rng: &mut R,
) -> Result<bool> {
    alice.check_against(family)?;
    check_len(family.n(), y.len())?;
    match mode {
        ConvergenceMode::All => member_matches_all(y, family, alice),
        ConvergenceMode::RandomOne => {
            let k = rng.random_range(0..family.u());
            Ok(family.code(k).mul_vec(y)? == alice.syndromes()[k])
        }
    }
}

fn member_matches_all(y: &BitBlock, family: &CodeFamily, alice: &SyndromeSet) -> Result<bool> {
    for (h, z) in family.codes().iter().zip(alice.syndromes()) {
        if &h.mul_vec(y)? != z {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Decoder settings besides the inputs.
#[derive(Clone, Copy, Debug)]
pub struct DecodeConfig {
    pub schedule: Schedule,
    pub max_iterations: usize,
    pub mode: ConvergenceMode,
    /// Seeds the member choice of [`ConvergenceMode::RandomOne`].
    pub seed: u64,
}

impl DecodeConfig {
    pub fn new(schedule: Schedule, max_iterations: usize) -> Self {
        DecodeConfig {
            schedule,
            max_iterations,
            mode: ConvergenceMode::All,
            seed: 0,
        }
    }
}

/// Corrections in one iteration, measured against the true key.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct IterationStats {
    /// Bits that went from wrong to right.
    pub n_c: usize,
    /// Bits that went from right to wrong.
    pub n_m: usize,
}

#[derive(Clone, Debug)]
pub struct DecodeResult {
    /// Every member's syndrome of `corrected_key` equals Alice's.
    pub success: bool,
    pub corrected_key: BitBlock,
    pub iterations_used: usize,
    /// Empty unless a true key was supplied.
    pub per_iteration: Vec<IterationStats>,
    pub schedule: Schedule,
    pub u: usize,
}

/// A decoding session that can be advanced one iteration at a time.
pub struct DecodeSession<'a> {
    family: &'a CodeFamily,
    alice: &'a SyndromeSet,
    schedule: Schedule,
    state: DecoderState,
    channel_bits: BitBlock,
    soft: Vec<f64>,
    scratch: Vec<f64>,
    totals: Vec<f64>,
    products: Vec<schedules::CheckProduct>,
}

impl<'a> DecodeSession<'a> {
    pub fn new(
        y: &BitBlock,
        e: f64,
        family: &'a CodeFamily,
        alice: &'a SyndromeSet,
        schedule: Schedule,
    ) -> Result<Self> {
        alice.check_against(family)?;
        let state = initialize(y, e, family)?;
        Ok(DecodeSession {
            family,
            alice,
            schedule,
            soft: state.channel.clone(),
            state,
            channel_bits: y.clone(),
            scratch: Vec::new(),
            totals: Vec::new(),
            products: Vec::new(),
        })
    }

    /// Runs one iteration of the schedule on every member (in index order),
    /// then recomputes soft values and hard decisions.
    pub fn step(&mut self) {
        let channel = &self.state.channel;
        for ((h, msgs), z) in self
            .family
            .codes()
            .iter()
            .zip(self.state.members.iter_mut())
            .zip(self.alice.syndromes())
        {
            match self.schedule {
                Schedule::Flooding => schedules::flooding(h, msgs, channel, z, &mut self.scratch),
                Schedule::Shuffled => {
                    schedules::shuffled(h, msgs, channel, z, &mut self.products)
                }
                Schedule::Layered => {
                    schedules::layered(h, msgs, channel, z, &mut self.scratch, &mut self.totals)
                }
            }
        }
        self.soft.copy_from_slice(channel);
        for (h, msgs) in self.family.codes().iter().zip(&self.state.members) {
            for (i, s) in self.soft.iter_mut().enumerate() {
                for &e in h.col_edges(i) {
                    *s += msgs.c2v[e];
                }
            }
        }
        let hard = BitBlock::from_bools(
            self.soft
                .iter()
                .enumerate()
                .map(|(i, &l)| hard_decision(l, self.channel_bits.get(i))),
        );
        self.state.hard = hard;
        self.state.iteration += 1;
    }

    pub fn state(&self) -> &DecoderState {
        &self.state
    }

    /// Soft values after the latest iteration (channel values before any).
    pub fn soft_values(&self) -> &[f64] {
        &self.soft
    }

    pub fn member_soft_value(&self, k: usize, i: usize) -> f64 {
        member_soft_decision(&self.state, self.family, k, i)
    }

    pub fn hard_decisions(&self) -> &BitBlock {
        &self.state.hard
    }
}

/// Iterates the chosen schedule until the stopping rule accepts the hard
/// decisions or `max_iterations` is reached.
///
/// The stopping rule is also applied once before the first iteration. With a
/// true key, per-iteration correction counts are recorded. `success` is
/// always checked against every member, whatever stopping rule is used.
pub fn decode(
    y: &BitBlock,
    e: f64,
    family: &CodeFamily,
    alice: &SyndromeSet,
    config: &DecodeConfig,
    truth: Option<&BitBlock>,
) -> Result<DecodeResult> {
    check_error_rate(e)?;
    check_len(family.n(), y.len())?;
    alice.check_against(family)?;
    if let Some(t) = truth {
        check_len(family.n(), t.len())?;
    }
    if config.max_iterations == 0 {
        return Err(Error::InvalidParameter("max_iterations must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    let finish = |key: BitBlock, iterations_used, per_iteration| -> Result<DecodeResult> {
        Ok(DecodeResult {
            success: member_matches_all(&key, family, alice)?,
            corrected_key: key,
            iterations_used,
            per_iteration,
            schedule: config.schedule,
            u: family.u(),
        })
    };

    if convergence_check(y, family, alice, config.mode, &mut rng)? {
        return finish(y.clone(), 0, Vec::new());
    }

    let mut session = DecodeSession::new(y, e, family, alice, config.schedule)?;
    let mut per_iteration = Vec::new();
    let mut previous = y.clone();
    let mut iterations = config.max_iterations;
    for it in 1..=config.max_iterations {
        session.step();
        let current = session.hard_decisions();
        if let Some(t) = truth {
            let mut stats = IterationStats::default();
            for i in 0..t.len() {
                let was_right = previous.get(i) == t.get(i);
                let is_right = current.get(i) == t.get(i);
                match (was_right, is_right) {
                    (false, true) => stats.n_c += 1,
                    (true, false) => stats.n_m += 1,
                    _ => {}
                }
            }
            per_iteration.push(stats);
            previous = current.clone();
        }
        if convergence_check(current, family, alice, config.mode, &mut rng)? {
            iterations = it;
            break;
        }
    }
    finish(session.hard_decisions().clone(), iterations, per_iteration)
}
