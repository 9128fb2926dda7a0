//! Families of column-permuted parity-check matrices sharing one set of
//! linearly independent column positions.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::gf2::{systematic_decompose, ParityCheckMatrix};

/// Placement of high-degree columns across family members.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum WaveLayout {
    /// High-degree columns land where earlier members already had them.
    Compact,
    /// High-degree columns land where earlier members had the least degree.
    Separated,
}

impl fmt::Display for WaveLayout {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            WaveLayout::Compact => "compact",
            WaveLayout::Separated => "separated",
        })
    }
}

impl FromStr for WaveLayout {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "compact" => Ok(WaveLayout::Compact),
            "separated" => Ok(WaveLayout::Separated),
            other => Err(Error::InvalidParameter(format!("unknown wave layout {other:?}"))),
        }
    }
}

/// `u` same-shape parity-check matrices with a shared independent column set.
#[derive(Clone, Debug)]
pub struct CodeFamily {
    codes: Vec<ParityCheckMatrix>,
    independent_positions: Vec<usize>,
    wave_layout: WaveLayout,
    seed: u64,
}

impl CodeFamily {
    /// Assembles a family from explicit members.
    ///
    /// Checks that all members have the same shape and that the columns at
    /// `independent_positions` have full rank in every member. Degree
    /// multisets are not required to match.
    pub fn from_members(
        codes: Vec<ParityCheckMatrix>,
        independent_positions: Vec<usize>,
        wave_layout: WaveLayout,
        seed: u64,
    ) -> Result<Self> {
        let first = codes
            .first()
            .ok_or_else(|| Error::InvalidParameter("family needs at least one member".into()))?;
        let (m, n) = (first.m(), first.n());
        for h in &codes {
            if h.m() != m || h.n() != n {
                return Err(Error::Consistency(format!(
                    "member of shape {}x{} in a {m}x{n} family",
                    h.m(),
                    h.n()
                )));
            }
        }
        let mut positions = independent_positions;
        positions.sort_unstable();
        positions.dedup();
        if positions.len() != m || positions.iter().any(|&p| p >= n) {
            return Err(Error::Consistency(format!(
                "need {m} distinct independent positions below {n}"
            )));
        }
        for h in &codes {
            let rank = h.column_submatrix(&positions).rank();
            if rank != m {
                return Err(Error::RankDeficient { rank, rows: m });
            }
        }
        Ok(CodeFamily {
            codes,
            independent_positions: positions,
            wave_layout,
            seed,
        })
    }

    /// Single-member family; independent positions come from decomposition.
    pub fn single(h: ParityCheckMatrix) -> Result<Self> {
        let positions = systematic_decompose(&h)?.independent_positions;
        Self::from_members(vec![h], positions, WaveLayout::Compact, 0)
    }

    pub fn codes(&self) -> &[ParityCheckMatrix] {
        &self.codes
    }

    pub fn code(&self, k: usize) -> &ParityCheckMatrix {
        &self.codes[k]
    }

    pub fn u(&self) -> usize {
        self.codes.len()
    }

    pub fn m(&self) -> usize {
        self.codes[0].m()
    }

    pub fn n(&self) -> usize {
        self.codes[0].n()
    }

    pub fn independent_positions(&self) -> &[usize] {
        &self.independent_positions
    }

    pub fn wave_layout(&self) -> WaveLayout {
        self.wave_layout
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// The first `u` members as a family of their own.
    pub fn truncated(&self, u: usize) -> Result<Self> {
        if u == 0 || u > self.u() {
            return Err(Error::InvalidParameter(format!(
                "cannot take {u} of {} members",
                self.u()
            )));
        }
        Ok(CodeFamily {
            codes: self.codes[..u].to_vec(),
            ..self.clone()
        })
    }

    /// Identifier binding syndrome sets to this family: a hash of shape,
    /// seed and member structure.
    pub fn id(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        let mut mix = |x: u64| {
            h ^= x;
            h = h.wrapping_mul(0x0100_0000_01b3);
        };
        mix(self.u() as u64);
        mix(self.m() as u64);
        mix(self.n() as u64);
        for code in &self.codes {
            for j in 0..code.m() {
                for &i in code.row(j) {
                    mix(i as u64);
                }
                mix(u64::MAX);
            }
        }
        h
    }
}

/// Derives a `u`-member family from `base`.
///
/// Member 0 is `base`. Every other member permutes columns inside the
/// independent group and inside the remaining group separately, so each
/// member keeps the same independent positions. The permutation pairs the
/// columns sorted by degree (descending) with target positions sorted by how
/// much degree earlier members already placed there: ascending for
/// [`WaveLayout::Separated`], descending for [`WaveLayout::Compact`].
pub fn derive_family(
    base: &ParityCheckMatrix,
    u: usize,
    wave_layout: WaveLayout,
    seed: u64,
) -> Result<CodeFamily> {
    if u == 0 {
        return Err(Error::InvalidParameter("u must be at least 1".into()));
    }
    let n = base.n();
    let independent = systematic_decompose(base)?.independent_positions;
    let mut in_group = vec![false; n];
    for &p in &independent {
        in_group[p] = true;
    }
    let rest: Vec<usize> = (0..n).filter(|&c| !in_group[c]).collect();
    let degree = base.var_degrees();
    let mut usage = degree.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut codes = vec![base.clone()];
    for _ in 1..u {
        let mut perm = vec![0usize; n];
        for group in [&independent, &rest] {
            let mut sources = group.clone();
            sources.shuffle(&mut rng);
            sources.sort_by(|a, b| degree[*b].cmp(&degree[*a]));
            let mut targets = group.clone();
            targets.shuffle(&mut rng);
            match wave_layout {
                WaveLayout::Separated => targets.sort_by_key(|&t| usage[t]),
                WaveLayout::Compact => targets.sort_by(|a, b| usage[*b].cmp(&usage[*a])),
            }
            for (&t, &s) in targets.iter().zip(&sources) {
                perm[t] = s;
            }
        }
        for (t, &s) in perm.iter().enumerate() {
            usage[t] += degree[s];
        }
        codes.push(base.permute_columns(&perm)?);
    }

    CodeFamily::from_members(codes, independent, wave_layout, seed)
}
