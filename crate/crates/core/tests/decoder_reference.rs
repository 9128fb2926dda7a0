//! The decoder against a plain transcription of the message-passing rules
//! and against exhaustive maximum-likelihood decoding on tiny codes.

use mmrecon::codes::{build_base_matrix, derive_family, CodeFamily, DegreeSpec, WaveLayout};
use mmrecon::decoder::{decode, ConvergenceMode, DecodeConfig, DecodeSession, Schedule};
use mmrecon::estimation::compute_syndromes;
use mmrecon::gf2::gf2_rank;
use mmrecon::{BitBlock, ParityCheckMatrix, SyndromeSet};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const CLAMP: f64 = 30.0;
const ATANH_CLAMP: f64 = 1.0 - 1e-12;

/// Dense per-member message tables indexed `[check][variable]`.
struct Reference<'a> {
    family: &'a CodeFamily,
    z: &'a SyndromeSet,
    channel: Vec<f64>,
    y: BitBlock,
    v2c: Vec<Vec<Vec<f64>>>,
    c2v: Vec<Vec<Vec<f64>>>,
}

impl<'a> Reference<'a> {
    fn new(y: &BitBlock, e: f64, family: &'a CodeFamily, z: &'a SyndromeSet) -> Self {
        let (m, n) = (family.m(), family.n());
        let channel: Vec<f64> = (0..n)
            .map(|i| {
                if y.get(i) {
                    (e / (1.0 - e)).ln()
                } else {
                    ((1.0 - e) / e).ln()
                }
            })
            .collect();
        let v2c = (0..family.u())
            .map(|_| (0..m).map(|_| channel.clone()).collect())
            .collect();
        let c2v = vec![vec![vec![0.0; n]; m]; family.u()];
        Reference {
            family,
            z,
            channel,
            y: y.clone(),
            v2c,
            c2v,
        }
    }

    fn check_message(&self, k: usize, j: usize, i: usize) -> f64 {
        let h = self.family.code(k);
        let prod: f64 = h
            .row(j)
            .iter()
            .filter(|&&v| v != i)
            .map(|&v| (self.v2c[k][j][v] / 2.0).tanh())
            .product();
        let prod = prod.clamp(-ATANH_CLAMP, ATANH_CLAMP);
        let sign = if self.z.syndromes()[k].get(j) { -1.0 } else { 1.0 };
        (sign * 2.0 * prod.atanh()).clamp(-CLAMP, CLAMP)
    }

    fn variable_message(&self, k: usize, i: usize, j: usize) -> f64 {
        let h = self.family.code(k);
        let sum: f64 = h
            .col(i)
            .iter()
            .filter(|&&c| c != j)
            .map(|&c| self.c2v[k][c][i])
            .sum();
        (self.channel[i] + sum).clamp(-CLAMP, CLAMP)
    }

    fn refresh_variable(&mut self, k: usize, i: usize) {
        for &c in self.family.code(k).col(i) {
            self.v2c[k][c][i] = self.variable_message(k, i, c);
        }
    }

    fn step(&mut self, schedule: Schedule) {
        for k in 0..self.family.u() {
            let h: &ParityCheckMatrix = self.family.code(k);
            match schedule {
                Schedule::Flooding => {
                    for j in 0..h.m() {
                        let msgs: Vec<(usize, f64)> =
                            h.row(j).iter().map(|&i| (i, self.check_message(k, j, i))).collect();
                        for (i, v) in msgs {
                            self.c2v[k][j][i] = v;
                        }
                    }
                    for i in 0..h.n() {
                        self.refresh_variable(k, i);
                    }
                }
                Schedule::Shuffled => {
                    for i in 0..h.n() {
                        for &j in h.col(i) {
                            self.c2v[k][j][i] = self.check_message(k, j, i);
                        }
                        self.refresh_variable(k, i);
                    }
                }
                Schedule::Layered => {
                    for j in 0..h.m() {
                        let msgs: Vec<(usize, f64)> =
                            h.row(j).iter().map(|&i| (i, self.check_message(k, j, i))).collect();
                        for &(i, v) in &msgs {
                            self.c2v[k][j][i] = v;
                        }
                        for (i, _) in msgs {
                            self.refresh_variable(k, i);
                        }
                    }
                }
            }
        }
    }

    fn soft(&self) -> Vec<f64> {
        (0..self.family.n())
            .map(|i| {
                let mut s = self.channel[i];
                for k in 0..self.family.u() {
                    for &c in self.family.code(k).col(i) {
                        s += self.c2v[k][c][i];
                    }
                }
                s
            })
            .collect()
    }

    fn hard(&self) -> BitBlock {
        BitBlock::from_bools(self.soft().iter().enumerate().map(|(i, &l)| {
            if l > 0.0 {
                false
            } else if l < 0.0 {
                true
            } else {
                self.y.get(i)
            }
        }))
    }

    fn satisfied(&self, key: &BitBlock) -> bool {
        (0..self.family.u()).all(|k| self.family.code(k).mul_vec(key).unwrap() == self.z.syndromes()[k])
    }

    /// Returns (success, corrected key, iterations used).
    fn run(mut self, schedule: Schedule, max_iterations: usize) -> (bool, BitBlock, usize) {
        if self.satisfied(&self.y) {
            return (true, self.y.clone(), 0);
        }
        let mut hard = self.y.clone();
        for it in 1..=max_iterations {
            self.step(schedule);
            hard = self.hard();
            if self.satisfied(&hard) {
                return (true, hard, it);
            }
        }
        (false, hard, max_iterations)
    }
}

fn family(u: usize, n: usize, m: usize, seed: u64) -> CodeFamily {
    let base = build_base_matrix(&DegreeSpec::regular(n, m, 3).unwrap(), seed).unwrap();
    derive_family(&base, u, WaveLayout::Separated, seed + 1).unwrap()
}

fn noisy_pair(n: usize, e: f64, rng: &mut ChaCha8Rng) -> (BitBlock, BitBlock) {
    let x = BitBlock::from_bools((0..n).map(|_| rng.random::<bool>()));
    let y = BitBlock::from_bools(x.iter().map(|b| b ^ rng.random_bool(e)));
    (x, y)
}

#[test]
fn flooding_single_member_tracks_transcription_per_iteration() {
    let fam = family(1, 200, 40, 3);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..10 {
        let (x, y) = noisy_pair(200, 0.04, &mut rng);
        let z = compute_syndromes(&x, &fam).unwrap();
        let mut reference = Reference::new(&y, 0.04, &fam, &z);
        let mut session = DecodeSession::new(&y, 0.04, &fam, &z, Schedule::Flooding).unwrap();
        for _ in 0..30 {
            reference.step(Schedule::Flooding);
            session.step();
            assert_eq!(*session.hard_decisions(), reference.hard());
            // Near saturation atanh magnifies last-bit differences between
            // equivalent forms of the same update, so only unsaturated
            // values are compared numerically.
            for (a, b) in session.soft_values().iter().zip(reference.soft()) {
                if b.abs() < 20.0 {
                    assert!((a - b).abs() <= 1e-6, "{a} vs {b}");
                }
            }
        }
    }
}

#[test]
fn every_schedule_matches_transcription() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for u in [1, 3] {
        let fam = family(u, 200, 40, 4);
        for schedule in Schedule::ALL {
            for _ in 0..8 {
                let (x, y) = noisy_pair(200, 0.05, &mut rng);
                let z = compute_syndromes(&x, &fam).unwrap();
                let (ok, key, iters) = Reference::new(&y, 0.05, &fam, &z).run(schedule, 40);
                let r = decode(&y, 0.05, &fam, &z, &DecodeConfig::new(schedule, 40), None).unwrap();
                assert_eq!((r.success, r.iterations_used), (ok, iters), "{schedule} u={u}");
                assert_eq!(r.corrected_key, key, "{schedule} u={u}");
            }
        }
    }
}

#[test]
fn messages_respect_clamps() {
    let fam = family(2, 200, 40, 5);
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let (x, y) = noisy_pair(200, 0.01, &mut rng);
    let z = compute_syndromes(&x, &fam).unwrap();
    for schedule in Schedule::ALL {
        let mut session = DecodeSession::new(&y, 0.01, &fam, &z, schedule).unwrap();
        for _ in 0..20 {
            session.step();
            assert!(session.state().max_message_magnitude() <= CLAMP);
        }
    }
}

#[test]
fn decoding_is_deterministic_and_success_is_verified() {
    let fam = family(3, 200, 40, 6);
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    for mode in [ConvergenceMode::All, ConvergenceMode::RandomOne] {
        for _ in 0..5 {
            let (x, y) = noisy_pair(200, 0.06, &mut rng);
            let z = compute_syndromes(&x, &fam).unwrap();
            let config = DecodeConfig {
                mode,
                seed: 99,
                ..DecodeConfig::new(Schedule::Layered, 50)
            };
            let a = decode(&y, 0.06, &fam, &z, &config, Some(&x)).unwrap();
            let b = decode(&y, 0.06, &fam, &z, &config, Some(&x)).unwrap();
            assert_eq!(a.corrected_key, b.corrected_key);
            assert_eq!(a.per_iteration, b.per_iteration);
            assert_eq!(a.per_iteration.len(), a.iterations_used);
            if a.success {
                for k in 0..fam.u() {
                    assert_eq!(fam.code(k).mul_vec(&a.corrected_key).unwrap(), z.syndromes()[k]);
                }
            }
        }
    }
}

#[test]
fn error_free_input_needs_no_iterations() {
    let fam = family(3, 200, 40, 7);
    let x = BitBlock::from_bools((0..200).map(|i| i % 7 < 3));
    let z = compute_syndromes(&x, &fam).unwrap();
    for schedule in Schedule::ALL {
        let r = decode(&x, 0.02, &fam, &z, &DecodeConfig::new(schedule, 100), None).unwrap();
        assert!(r.success);
        assert_eq!(r.iterations_used, 0);
        assert_eq!(r.corrected_key, x);
    }
}

/// Random full-rank 6x12 matrix with every column covered.
fn tiny_code(rng: &mut ChaCha8Rng) -> ParityCheckMatrix {
    loop {
        let rows: Vec<Vec<usize>> = (0..6)
            .map(|_| (0..12).filter(|_| rng.random_bool(0.3)).collect())
            .collect();
        let Ok(h) = ParityCheckMatrix::from_rows(12, rows) else {
            continue;
        };
        if gf2_rank(&h) == 6 && (0..12).all(|i| h.var_degree(i) > 0) {
            return h;
        }
    }
}

/// Unique nearest key to `y` with syndrome `z`, if there is one.
fn ml_decode(h: &ParityCheckMatrix, z: &BitBlock, y: &BitBlock) -> Option<BitBlock> {
    let mut best: Option<(usize, BitBlock)> = None;
    let mut tied = false;
    for v in 0u32..1 << 12 {
        let cand = BitBlock::from_bools((0..12).map(|i| v >> i & 1 == 1));
        if h.mul_vec(&cand).unwrap() != *z {
            continue;
        }
        let d = cand.hamming_distance(y).unwrap();
        match &best {
            Some((bd, _)) if d > *bd => {}
            Some((bd, _)) if d == *bd => tied = true,
            _ => {
                best = Some((d, cand));
                tied = false;
            }
        }
    }
    if tied {
        None
    } else {
        best.map(|(_, k)| k)
    }
}

#[test]
fn converged_output_agrees_with_exhaustive_ml() {
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    let (mut agree, mut compared) = (0, 0);
    for _ in 0..40 {
        let fam = CodeFamily::single(tiny_code(&mut rng)).unwrap();
        for e in [0.05, 0.1] {
            for _ in 0..25 {
                let (x, y) = noisy_pair(12, e, &mut rng);
                let z = compute_syndromes(&x, &fam).unwrap();
                let Some(ml) = ml_decode(fam.code(0), &z.syndromes()[0], &y) else {
                    continue;
                };
                let r = decode(&y, e, &fam, &z, &DecodeConfig::new(Schedule::Flooding, 100), None)
                    .unwrap();
                if r.success {
                    compared += 1;
                    agree += usize::from(r.corrected_key == ml);
                }
            }
        }
    }
    assert!(compared >= 500, "only {compared} comparable trials");
    assert!(agree as f64 >= 0.95 * compared as f64, "{agree}/{compared}");
}
