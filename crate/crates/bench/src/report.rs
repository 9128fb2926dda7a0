//! CSV output.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::error::BenchError;
use crate::experiment::MetricsRecord;

pub const HEADER: [&str; 14] = [
    "trial_id",
    "algorithm",
    "u",
    "schedule",
    "qber_injected",
    "qber_realized",
    "qber_estimated",
    "iterations_used",
    "success",
    "ber_final",
    "leakage_bits",
    "alpha",
    "efficiency_f",
    "wall_seconds",
];

/// The first four columns are fixed; `algorithm` and `qber_injected` tell
/// apart the series of different variants within one trial.
pub const ITERS_HEADER: [&str; 6] = [
    "trial_id",
    "iteration",
    "n_c",
    "n_m",
    "algorithm",
    "qber_injected",
];

/// A real with 9 significant digits, in the style of C's `%.9g`.
pub fn format_real(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{x:.8e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-5..9).contains(&exp) {
        let mantissa = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mantissa}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (8 - exp).max(0) as usize;
        trim_zeros(&format!("{x:.decimals$}")).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Writes the record table.
pub fn write_records<W: Write>(out: W, records: &[MetricsRecord]) -> Result<(), BenchError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(HEADER)?;
    for r in records {
        w.write_record([
            r.trial_id.to_string(),
            r.algorithm.clone(),
            r.u.to_string(),
            r.schedule.clone(),
            format_real(r.qber_injected),
            format_real(r.qber_realized),
            format_real(r.qber_estimated),
            r.iterations_used.to_string(),
            u8::from(r.success).to_string(),
            format_real(r.ber_final),
            r.leakage_bits.to_string(),
            format_real(r.alpha),
            format_real(r.efficiency_f),
            format_real(r.wall_seconds),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Writes the per-iteration correction counts of every record that has them.
pub fn write_iterations<W: Write>(out: W, records: &[MetricsRecord]) -> Result<(), BenchError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(ITERS_HEADER)?;
    for r in records {
        for (k, (n_c, n_m)) in r.n_c_list.iter().zip(&r.n_m_list).enumerate() {
            w.write_record([
                r.trial_id.to_string(),
                (k + 1).to_string(),
                n_c.to_string(),
                n_m.to_string(),
                r.algorithm.clone(),
                format_real(r.qber_injected),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// `<out>.iters.csv` next to `out`.
pub fn iterations_path(out: &Path) -> PathBuf {
    let mut name = out.file_stem().unwrap_or_default().to_os_string();
    name.push(".iters.csv");
    out.with_file_name(name)
}

/// Writes `out` and its `.iters.csv` sibling.
pub fn write_csv_files(out: &Path, records: &[MetricsRecord]) -> Result<(), BenchError> {
    let create = |p: &Path| {
        File::create(p)
            .map(BufWriter::new)
            .map_err(|e| BenchError::Io(format!("{}: {e}", p.display())))
    };
    write_records(create(out)?, records)?;
    write_iterations(create(&iterations_path(out))?, records)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nine_significant_digits() {
        assert_eq!(format_real(0.0166), "0.0166");
        assert_eq!(format_real(1.0), "1");
        assert_eq!(format_real(0.0), "0");
        assert_eq!(format_real(1.0 / 3.0), "0.333333333");
        assert_eq!(format_real(1.41400118), "1.41400118");
        assert_eq!(format_real(123456789.4), "123456789");
        assert_eq!(format_real(1234567890.0), "1.23456789e+09");
        assert_eq!(format_real(4.5e-6), "4.5e-06");
        assert_eq!(format_real(0.0001), "0.0001");
        assert_eq!(format_real(-2.5), "-2.5");
        assert_eq!(format_real(f64::NAN), "nan");
        assert_eq!(format_real(0.99999999999), "1");
    }

    #[test]
    fn sibling_path() {
        assert_eq!(
            iterations_path(Path::new("/tmp/run.csv")),
            PathBuf::from("/tmp/run.iters.csv")
        );
    }
}
