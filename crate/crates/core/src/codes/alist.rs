//! MacKay alist format, plus the on-disk family directory layout.
//!
//! ```text
//! n m
//! max_col_degree max_row_degree
//! <n column degrees>
//! <m row degrees>
//! <n lines: 1-based check indices of each column>
//! <m lines: 1-based variable indices of each row>
//! ```
//!
//! Zero padding up to the maximum degree is accepted on read and never
//! written.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::codes::family::{CodeFamily, WaveLayout};
use crate::error::{Error, Result};
use crate::gf2::ParityCheckMatrix;

pub const MANIFEST_FILE: &str = "manifest.txt";

/// Canonical alist text for `h`.
pub fn write_alist(h: &ParityCheckMatrix) -> String {
    let join = |xs: &mut dyn Iterator<Item = usize>| {
        xs.map(|x| x.to_string()).collect::<Vec<_>>().join(" ")
    };
    let col_deg = h.var_degrees();
    let row_deg = h.check_degrees();
    let mut out = String::new();
    writeln!(out, "{} {}", h.n(), h.m()).unwrap();
    writeln!(
        out,
        "{} {}",
        col_deg.iter().max().copied().unwrap_or(0),
        row_deg.iter().max().copied().unwrap_or(0)
    )
    .unwrap();
    writeln!(out, "{}", join(&mut col_deg.iter().copied())).unwrap();
    writeln!(out, "{}", join(&mut row_deg.iter().copied())).unwrap();
    for i in 0..h.n() {
        writeln!(out, "{}", join(&mut h.col(i).iter().map(|j| j + 1))).unwrap();
    }
    for j in 0..h.m() {
        writeln!(out, "{}", join(&mut h.row(j).iter().map(|i| i + 1))).unwrap();
    }
    out
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
}

impl<'a> Lines<'a> {
    /// Next line parsed as integers, with its 1-based line number.
    fn next_numbers(&mut self, what: &str) -> Result<(usize, Vec<usize>)> {
        let Some((idx, line)) = self.inner.next() else {
            return Err(Error::Parse {
                line: 0,
                message: format!("unexpected end of input, expected {what}"),
            });
        };
        let nums = line
            .split_whitespace()
            .map(|t| {
                t.parse::<usize>().map_err(|_| Error::Parse {
                    line: idx + 1,
                    message: format!("invalid integer {t:?} in {what}"),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok((idx + 1, nums))
    }
}

fn expect_len(line: usize, nums: &[usize], len: usize, what: &str) -> Result<()> {
    if nums.len() == len {
        Ok(())
    } else {
        Err(Error::Parse {
            line,
            message: format!("expected {len} values for {what}, found {}", nums.len()),
        })
    }
}

/// Parses alist text and validates that the column and row lists agree.
pub fn read_alist(text: &str) -> Result<ParityCheckMatrix> {
    let mut lines = Lines {
        inner: text.lines().enumerate(),
    };
    let (ln, dims) = lines.next_numbers("header")?;
    expect_len(ln, &dims, 2, "n m")?;
    let (n, m) = (dims[0], dims[1]);
    let (ln, maxes) = lines.next_numbers("maximum degrees")?;
    expect_len(ln, &maxes, 2, "maximum degrees")?;
    let (ln, col_deg) = lines.next_numbers("column degrees")?;
    expect_len(ln, &col_deg, n, "column degrees")?;
    let (ln, row_deg) = lines.next_numbers("row degrees")?;
    expect_len(ln, &row_deg, m, "row degrees")?;

    let mut read_lists = |count: usize, degrees: &[usize], bound: usize, what: &str| {
        let mut lists = Vec::with_capacity(count);
        for (k, &deg) in degrees.iter().enumerate() {
            let (ln, nums) = lines.next_numbers(what)?;
            let entries: Vec<usize> = nums.into_iter().filter(|&x| x != 0).collect();
            if entries.len() != deg {
                return Err(Error::Parse {
                    line: ln,
                    message: format!("{what} {} lists {} entries, degree is {deg}", k + 1, entries.len()),
                });
            }
            if let Some(&bad) = entries.iter().find(|&&x| x > bound) {
                return Err(Error::Parse {
                    line: ln,
                    message: format!("index {bad} exceeds {bound}"),
                });
            }
            let mut zero_based: Vec<usize> = entries.into_iter().map(|x| x - 1).collect();
            zero_based.sort_unstable();
            lists.push(zero_based);
        }
        Ok::<_, Error>(lists)
    };
    let cols = read_lists(n, &col_deg, m, "column")?;
    let rows = read_lists(m, &row_deg, n, "row")?;

    for (ln, line) in lines.inner {
        if !line.trim().is_empty() {
            return Err(Error::Parse {
                line: ln + 1,
                message: "trailing content after row lists".into(),
            });
        }
    }

    let h = ParityCheckMatrix::from_rows(n, rows)?;
    for (i, list) in cols.iter().enumerate() {
        if h.col(i) != list.as_slice() {
            return Err(Error::Consistency(format!(
                "column {} lists checks {:?} but rows imply {:?}",
                i + 1,
                list.iter().map(|j| j + 1).collect::<Vec<_>>(),
                h.col(i).iter().map(|j| j + 1).collect::<Vec<_>>()
            )));
        }
    }
    Ok(h)
}

fn io_err(path: &Path, e: std::io::Error) -> Error {
    Error::Io(format!("{}: {e}", path.display()))
}

fn member_file(k: usize) -> String {
    format!("member_{k:02}.alist")
}

/// Writes each member as `member_KK.alist` plus a plain-text manifest.
pub fn write_family_dir(family: &CodeFamily, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    for (k, h) in family.codes().iter().enumerate() {
        let path = dir.join(member_file(k));
        fs::write(&path, write_alist(h)).map_err(|e| io_err(&path, e))?;
    }
    let positions = family
        .independent_positions()
        .iter()
        .map(|p| p.to_string())
        .collect::<Vec<_>>()
        .join(" ");
    let manifest = format!(
        "u {}\nseed {}\nwave_layout {}\nindependent_positions {}\n",
        family.u(),
        family.seed(),
        family.wave_layout(),
        positions
    );
    let path = dir.join(MANIFEST_FILE);
    fs::write(&path, manifest).map_err(|e| io_err(&path, e))
}

/// Reads a directory written by [`write_family_dir`].
pub fn read_family_dir(dir: &Path) -> Result<CodeFamily> {
    let path = dir.join(MANIFEST_FILE);
    let text = fs::read_to_string(&path).map_err(|e| io_err(&path, e))?;
    let mut u = None;
    let mut seed = None;
    let mut layout = None;
    let mut positions = None;
    for (idx, line) in text.lines().enumerate() {
        let parse_err = |message: String| Error::Parse {
            line: idx + 1,
            message,
        };
        let mut tokens = line.split_whitespace();
        let Some(key) = tokens.next() else { continue };
        let values: Vec<&str> = tokens.collect();
        let single = || -> Result<&str> {
            match values.as_slice() {
                [v] => Ok(v),
                _ => Err(parse_err(format!("{key} takes one value"))),
            }
        };
        match key {
            "u" => u = Some(single()?.parse::<usize>().map_err(|e| parse_err(e.to_string()))?),
            "seed" => seed = Some(single()?.parse::<u64>().map_err(|e| parse_err(e.to_string()))?),
            "wave_layout" => layout = Some(single()?.parse::<WaveLayout>()?),
            "independent_positions" => {
                positions = Some(
                    values
                        .iter()
                        .map(|v| v.parse::<usize>().map_err(|e| parse_err(e.to_string())))
                        .collect::<Result<Vec<_>>>()?,
                )
            }
            other => return Err(parse_err(format!("unknown manifest key {other:?}"))),
        }
    }
    let missing = |k: &str| Error::Parse {
        line: 0,
        message: format!("manifest lacks {k}"),
    };
    let u = u.ok_or_else(|| missing("u"))?;
    let mut codes = Vec::with_capacity(u);
    for k in 0..u {
        let path = dir.join(member_file(k));
        let text = fs::read_to_string(&path).map_err(|e| io_err(&path, e))?;
        codes.push(read_alist(&text)?);
    }
    CodeFamily::from_members(
        codes,
        positions.ok_or_else(|| missing("independent_positions"))?,
        layout.ok_or_else(|| missing("wave_layout"))?,
        seed.ok_or_else(|| missing("seed"))?,
    )
}
