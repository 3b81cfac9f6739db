use std::fmt::Write as _;
use std::io::{Read, Write};

use super::SummaryRow;
use crate::error::{Error, Result};

pub fn write_csv<W: Write>(rows: &[SummaryRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads rows written by [`write_csv`]. An empty input is an error.
pub fn read_csv<R: Read>(input: R) -> Result<Vec<SummaryRow>> {
    let mut r = csv::Reader::from_reader(input);
    let rows = r
        .deserialize()
        .collect::<std::result::Result<Vec<SummaryRow>, _>>()?;
    if rows.is_empty() {
        return Err(Error::Config("no summary rows found".into()));
    }
    Ok(rows)
}

fn display_name(algo: &str) -> &str {
    match algo {
        "dts" => "Double Thompson Sampling",
        "mergedts" => "MergeDTS",
        "re" => "Round-Efficient Dueling Bandits",
        "prefbest" => "prefBest",
        "prefbest-extra" => "prefBest (extra final phase)",
        other => other,
    }
}

fn range<T: PartialEq + std::fmt::Display>(lo: T, hi: T) -> String {
    if lo == hi {
        lo.to_string()
    } else {
        format!("{lo}-{hi}")
    }
}

/// Single-winner cases report "best found"; multi-winner cases report
/// "one found" and "both found".
fn single_winner(row: &SummaryRow) -> bool {
    row.true_winners <= 1
}

/// Fixed-width table with one line per algorithm and one column group per case.
pub fn render_table(rows: &[SummaryRow]) -> String {
    let mut algos: Vec<&str> = Vec::new();
    let mut cases: Vec<(&str, bool)> = Vec::new();
    for r in rows {
        if !algos.contains(&r.algo.as_str()) {
            algos.push(&r.algo);
        }
        if !cases.iter().any(|(c, _)| *c == r.case) {
            cases.push((&r.case, single_winner(r)));
        }
    }

    let mut header = vec!["Algorithm".to_string()];
    for &(case, single) in &cases {
        if single {
            header.push(format!("[{case}] best found"));
        } else {
            header.push(format!("[{case}] one found"));
            header.push(format!("[{case}] both found"));
        }
        header.push(format!("[{case}] comparisons"));
        header.push(format!("[{case}] assessors"));
    }

    let mut lines = vec![header];
    for algo in &algos {
        let mut line = vec![display_name(algo).to_string()];
        for &(case, single) in &cases {
            let row = rows.iter().find(|r| r.algo == *algo && r.case == case);
            let width = if single { 3 } else { 4 };
            match row {
                None => line.extend(std::iter::repeat_n("-".to_string(), width)),
                Some(r) => {
                    if single {
                        line.push(r.best_found.to_string());
                    } else {
                        line.push(r.one_found.to_string());
                        line.push(r.both_found.to_string());
                    }
                    line.push(range(r.comparisons_min, r.comparisons_max));
                    line.push(range(r.assessors_min, r.assessors_max));
                }
            }
        }
        lines.push(line);
    }

    let cols = lines[0].len();
    let widths: Vec<usize> = (0..cols)
        .map(|c| lines.iter().map(|l| l[c].len()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for (n, line) in lines.iter().enumerate() {
        for (c, cell) in line.iter().enumerate() {
            if c == 0 {
                let _ = write!(out, "{cell:<w$}", w = widths[c]);
            } else {
                let _ = write!(out, " | {cell:>w$}", w = widths[c]);
            }
        }
        out.push('\n');
        if n == 0 {
            let total = widths.iter().sum::<usize>() + 3 * (cols - 1);
            out.push_str(&"-".repeat(total));
            out.push('\n');
        }
    }
    out
}
