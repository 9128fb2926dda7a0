//! Base parity-check matrix construction by progressive edge growth.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::gf2::{gf2_rank, ParityCheckMatrix};

/// Column and row degree multisets of a code.
///
/// `variable_degrees[i]` is the degree assigned to column `i`; the order of
/// `check_degrees` is the order of rows.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DegreeSpec {
    pub n: usize,
    pub m: usize,
    pub variable_degrees: Vec<usize>,
    pub check_degrees: Vec<usize>,
}

impl DegreeSpec {
    /// Regular column degree with row degrees spread as evenly as possible.
    pub fn regular(n: usize, m: usize, column_degree: usize) -> Result<Self> {
        Self::with_columns(n, m, vec![column_degree; n])
    }

    /// Column degrees drawn from `(degree, fraction)` pairs; fractions are
    /// rounded and the remainder goes to the first entry. High-degree columns
    /// are spread evenly over the index range.
    pub fn from_fractions(n: usize, m: usize, profile: &[(usize, f64)]) -> Result<Self> {
        if profile.is_empty() {
            return Err(Error::InfeasibleSpec("empty degree profile".into()));
        }
        let mut counts: Vec<usize> = profile
            .iter()
            .map(|&(_, f)| (f * n as f64).round() as usize)
            .collect();
        let assigned: usize = counts[1..].iter().sum();
        if assigned > n {
            return Err(Error::InfeasibleSpec("fractions exceed 1".into()));
        }
        counts[0] = n - assigned;

        let mut degrees = vec![profile[0].0; n];
        let mut free: Vec<usize> = (0..n).collect();
        for (&(d, _), &count) in profile.iter().zip(&counts).skip(1) {
            if count == 0 {
                continue;
            }
            // Evenly spaced picks from the still-unassigned columns.
            let picks: Vec<usize> = (0..count)
                .map(|k| free[(k * free.len()) / count])
                .collect();
            for &p in &picks {
                degrees[p] = d;
            }
            free.retain(|c| !picks.contains(c));
        }
        Self::with_columns(n, m, degrees)
    }

    fn with_columns(n: usize, m: usize, variable_degrees: Vec<usize>) -> Result<Self> {
        if m == 0 {
            return Err(Error::InfeasibleSpec("no checks".into()));
        }
        let edges: usize = variable_degrees.iter().sum();
        let base = edges / m;
        let extra = edges % m;
        let check_degrees = (0..m).map(|j| base + usize::from(j < extra)).collect();
        let spec = DegreeSpec {
            n,
            m,
            variable_degrees,
            check_degrees,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn edge_count(&self) -> usize {
        self.variable_degrees.iter().sum()
    }

    pub fn validate(&self) -> Result<()> {
        if self.variable_degrees.len() != self.n || self.check_degrees.len() != self.m {
            return Err(Error::InfeasibleSpec(format!(
                "expected {} column and {} row degrees, got {} and {}",
                self.n,
                self.m,
                self.variable_degrees.len(),
                self.check_degrees.len()
            )));
        }
        let vsum: usize = self.variable_degrees.iter().sum();
        let csum: usize = self.check_degrees.iter().sum();
        if vsum != csum {
            return Err(Error::InfeasibleSpec(format!(
                "column degrees sum to {vsum}, row degrees to {csum}"
            )));
        }
        if let Some(&d) = self
            .variable_degrees
            .iter()
            .find(|&&d| d == 0 || d > self.m)
        {
            return Err(Error::InfeasibleSpec(format!(
                "column degree {d} outside [1, {}]",
                self.m
            )));
        }
        if let Some(&d) = self.check_degrees.iter().find(|&&d| d == 0 || d > self.n) {
            return Err(Error::InfeasibleSpec(format!(
                "row degree {d} outside [1, {}]",
                self.n
            )));
        }
        Ok(())
    }
}

/// Knobs for [`build_base_matrix_with`].
#[derive(Clone, Copy, Debug)]
pub struct BuildOptions {
    /// Reject matrices without full row rank.
    pub require_full_rank: bool,
    /// Construction attempts (fresh sub-seeds) before giving up.
    pub max_attempts: usize,
}

impl Default for BuildOptions {
    fn default() -> Self {
        BuildOptions {
            require_full_rank: true,
            max_attempts: 16,
        }
    }
}

/// Outcome details of a base construction.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BuildReport {
    pub attempts: usize,
    pub rank: usize,
    /// Check pairs sharing two or more variables; zero means girth >= 6.
    pub four_cycle_pairs: usize,
}

/// Builds a base matrix realizing `spec` exactly, with full row rank.
pub fn build_base_matrix(spec: &DegreeSpec, seed: u64) -> Result<ParityCheckMatrix> {
    build_base_matrix_with(spec, seed, BuildOptions::default()).map(|(h, _)| h)
}

/// Progressive edge growth with a bounded number of restarts.
///
/// Each attempt that realizes the degrees is kept if it beats the best so
/// far (full rank first, then fewer 4-cycles). Returns as soon as an attempt
/// is full rank and 4-cycle free.
pub fn build_base_matrix_with(
    spec: &DegreeSpec,
    seed: u64,
    opts: BuildOptions,
) -> Result<(ParityCheckMatrix, BuildReport)> {
    spec.validate()?;
    let mut best: Option<(ParityCheckMatrix, BuildReport)> = None;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    for attempt in 1..=opts.max_attempts.max(1) {
        let Some(h) = peg_attempt(spec, &mut rng) else {
            continue;
        };
        let rank = gf2_rank(&h);
        let report = BuildReport {
            attempts: attempt,
            rank,
            four_cycle_pairs: h.four_cycle_pairs(),
        };
        let full = rank == spec.m;
        let better = match &best {
            None => true,
            Some((_, b)) => {
                let b_full = b.rank == spec.m;
                (full && !b_full) || (full == b_full && report.four_cycle_pairs < b.four_cycle_pairs)
            }
        };
        if better {
            best = Some((h, report));
        }
        if full && best.as_ref().unwrap().1.four_cycle_pairs == 0 {
            break;
        }
    }

    match best {
        None => Err(Error::ConstructionFailed(format!(
            "degree profile not realized in {} attempts",
            opts.max_attempts
        ))),
        Some((_, r)) if opts.require_full_rank && r.rank < spec.m => {
            Err(Error::ConstructionFailed(format!(
                "best rank {} < {} after {} attempts",
                r.rank, spec.m, opts.max_attempts
            )))
        }
        Some((h, mut r)) => {
            r.attempts = r.attempts.max(1);
            Ok((h, r))
        }
    }
}

/// One PEG pass. Returns `None` if the row degrees cannot be completed
/// without a repeated edge.
fn peg_attempt(spec: &DegreeSpec, rng: &mut ChaCha8Rng) -> Option<ParityCheckMatrix> {
    let (n, m) = (spec.n, spec.m);
    let mut capacity = spec.check_degrees.clone();
    let mut open_checks = capacity.iter().filter(|&&c| c > 0).count();
    let mut check_vars: Vec<Vec<usize>> = vec![Vec::new(); m];
    let mut var_checks: Vec<Vec<usize>> = vec![Vec::new(); n];

    // Low-degree columns first; ties in random order.
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    order.sort_by_key(|&i| spec.variable_degrees[i]);

    let mut bfs = Bfs::new(n, m);
    for &v in &order {
        for k in 0..spec.variable_degrees[v] {
            let candidates = if k == 0 {
                (0..m).filter(|&c| capacity[c] > 0).collect()
            } else {
                bfs.farthest_open_checks(v, &check_vars, &var_checks, &capacity, open_checks)
            };
            let c = pick_check(&candidates, &capacity, rng)?;
            check_vars[c].push(v);
            var_checks[v].push(c);
            capacity[c] -= 1;
            if capacity[c] == 0 {
                open_checks -= 1;
            }
        }
    }
    ParityCheckMatrix::from_rows(n, check_vars).ok()
}

/// Candidate with the most remaining capacity, ties broken at random.
fn pick_check(candidates: &[usize], capacity: &[usize], rng: &mut ChaCha8Rng) -> Option<usize> {
    let best = candidates.iter().map(|&c| capacity[c]).max()?;
    let top: Vec<usize> = candidates
        .iter()
        .copied()
        .filter(|&c| capacity[c] == best)
        .collect();
    Some(top[rng.random_range(0..top.len())])
}

struct Bfs {
    var_stamp: Vec<u32>,
    check_stamp: Vec<u32>,
    stamp: u32,
}

impl Bfs {
    fn new(n: usize, m: usize) -> Self {
        Bfs {
            var_stamp: vec![0; n],
            check_stamp: vec![0; m],
            stamp: 0,
        }
    }

    /// Open checks at maximal Tanner-graph distance from `v`: expand the
    /// breadth-first tree until it stops growing or covers every open check,
    /// and return the open checks not reached one level earlier.
    fn farthest_open_checks(
        &mut self,
        v: usize,
        check_vars: &[Vec<usize>],
        var_checks: &[Vec<usize>],
        capacity: &[usize],
        open_checks: usize,
    ) -> Vec<usize> {
        self.stamp += 1;
        let s = self.stamp;
        self.var_stamp[v] = s;
        let mut frontier: Vec<usize> = var_checks[v].clone();
        let mut reached_open = 0;
        for &c in &frontier {
            self.check_stamp[c] = s;
            if capacity[c] > 0 {
                reached_open += 1;
            }
        }
        if reached_open == open_checks {
            // Every open check is already adjacent: no valid new edge.
            return Vec::new();
        }
        loop {
            let mut next = Vec::new();
            for &c in &frontier {
                for &u in &check_vars[c] {
                    if self.var_stamp[u] == s {
                        continue;
                    }
                    self.var_stamp[u] = s;
                    for &c2 in &var_checks[u] {
                        if self.check_stamp[c2] != s {
                            self.check_stamp[c2] = s;
                            next.push(c2);
                            if capacity[c2] > 0 {
                                reached_open += 1;
                            }
                        }
                    }
                }
            }
            if next.is_empty() {
                return (0..capacity.len())
                    .filter(|&c| capacity[c] > 0 && self.check_stamp[c] != s)
                    .collect();
            }
            if reached_open == open_checks {
                return next.into_iter().filter(|&c| capacity[c] > 0).collect();
            }
            frontier = next;
        }
    }
}
