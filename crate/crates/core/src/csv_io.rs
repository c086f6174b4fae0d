//! CSV output and input for curves and estimate tables.
//!
//! Comma-separated, one header row, LF line endings, numbers in scientific
//! notation with 15 significant digits. Empty cells mark undefined values.

use std::io::{Read, Write};

use csv::{ReaderBuilder, Terminator, WriterBuilder};

use crate::error::{Error, Result};
use crate::forward_rates::ForwardRateCurve;
use crate::grid::TimeGrid;
use crate::kolmogorov::{CashFlow, TransitionCurve};
use crate::mc_oracle::{Estimate, EstimateTable};

/// 15 significant digits; any such decimal survives a round trip through
/// `f64`.
pub fn format_number(v: f64) -> String {
    format!("{v:.14e}")
}

/// Header plus rows of optional numbers.
#[derive(Debug, Clone, PartialEq)]
pub struct NumericTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<Option<f64>>>,
}

impl NumericTable {
    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    pub fn write<W: Write>(&self, w: W) -> Result<()> {
        let rows = self
            .rows
            .iter()
            .map(|r| r.iter().map(|v| v.map(format_number).unwrap_or_default()).collect());
        write_records(w, &self.header, rows)
    }

    pub fn read<R: Read>(r: R) -> Result<Self> {
        let (header, records) = read_records(r)?;
        let rows = records
            .into_iter()
            .map(|rec| {
                rec.iter()
                    .map(|cell| {
                        if cell.is_empty() {
                            Ok(None)
                        } else {
                            cell.parse::<f64>()
                                .map(Some)
                                .map_err(|e| Error::Parse(format!("bad number '{cell}': {e}")))
                        }
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<_>>()?;
        Ok(Self { header, rows })
    }

    /// Rebuild the uniform grid of the first column.
    pub fn time_grid(&self) -> Result<TimeGrid> {
        let times: Vec<f64> = self
            .rows
            .iter()
            .map(|r| r.first().copied().flatten())
            .collect::<Option<_>>()
            .ok_or_else(|| Error::Parse("missing time value".into()))?;
        if times.len() < 2 {
            return Err(Error::Parse("need at least two time points".into()));
        }
        let intervals = times.len() - 1;
        let step = (times[intervals] - times[0]) / intervals as f64;
        TimeGrid::with_intervals(times[0], step, intervals)
    }
}

fn write_records<W: Write, I>(w: W, header: &[String], rows: I) -> Result<()>
where
    I: Iterator<Item = Vec<String>>,
{
    let mut out = WriterBuilder::new().terminator(Terminator::Any(b'\n')).from_writer(w);
    out.write_record(header)?;
    for r in rows {
        out.write_record(&r)?;
    }
    out.flush()?;
    Ok(())
}

fn read_records<R: Read>(r: R) -> Result<(Vec<String>, Vec<Vec<String>>)> {
    let mut rdr = ReaderBuilder::new().has_headers(true).from_reader(r);
    let header = rdr.headers()?.iter().map(str::to_owned).collect();
    let mut rows = Vec::new();
    for rec in rdr.records() {
        rows.push(rec?.iter().map(str::to_owned).collect());
    }
    Ok((header, rows))
}

/// Columns `T, P_j_k` with `(j, k)` row-major.
pub fn transition_curve_table(curve: &TransitionCurve) -> NumericTable {
    let n = curve.num_states();
    let mut header = vec!["T".to_owned()];
    for j in 0..n {
        for k in 0..n {
            header.push(format!("P_{j}_{k}"));
        }
    }
    let rows = curve
        .grid()
        .nodes()
        .enumerate()
        .map(|(i, t)| {
            std::iter::once(Some(t))
                .chain(curve.matrix(i).iter().map(|v| Some(*v)))
                .collect()
        })
        .collect();
    NumericTable { header, rows }
}

pub fn transition_curve_from_table(table: &NumericTable) -> Result<TransitionCurve> {
    let cols = table.header.len() - 1;
    let n = (cols as f64).sqrt().round() as usize;
    if n * n != cols {
        return Err(Error::Parse(format!("{cols} matrix columns is not a square")));
    }
    let grid = table.time_grid()?;
    let values = table
        .rows
        .iter()
        .flat_map(|r| r[1..].iter().copied())
        .collect::<Option<Vec<f64>>>()
        .ok_or_else(|| Error::Parse("empty probability cell".into()))?;
    TransitionCurve::from_values(grid, n, values)
}

/// Columns `T`, `m_k_l` for every pair `k != l`, `residual` (empty unless
/// the rates come from a linear solve).
pub fn rate_curve_table(curve: &ForwardRateCurve) -> NumericTable {
    let n = curve.num_states();
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|k| (0..n).filter(move |&l| l != k).map(move |l| (k, l)))
        .collect();
    let mut header = vec!["T".to_owned()];
    header.extend(pairs.iter().map(|(k, l)| format!("m_{k}_{l}")));
    header.push("residual".to_owned());
    let rows = curve
        .grid
        .nodes()
        .enumerate()
        .map(|(i, t)| {
            let mut row = vec![Some(t)];
            row.extend(pairs.iter().map(|&(k, l)| curve.get(i, k, l)));
            row.push(curve.residual.as_ref().map(|r| r[i]));
            row
        })
        .collect();
    NumericTable { header, rows }
}

/// Columns `T, A, payment_rate, A_oracle` (the last empty without an
/// oracle).
pub fn cash_flow_table(cf: &CashFlow, oracle: Option<&CashFlow>) -> NumericTable {
    let header = ["T", "A", "payment_rate", "A_oracle"].map(str::to_owned).to_vec();
    let rows = cf
        .grid
        .nodes()
        .enumerate()
        .map(|(i, t)| {
            vec![
                Some(t),
                Some(cf.accumulated[i]),
                Some(cf.rate[i]),
                oracle.map(|o| o.accumulated[i]),
            ]
        })
        .collect();
    NumericTable { header, rows }
}

/// Columns `target, estimate, SE, N`.
pub fn write_estimates<W: Write>(w: W, table: &EstimateTable) -> Result<()> {
    let header = ["target", "estimate", "SE", "N"].map(str::to_owned);
    let rows = table.rows.iter().map(|e| {
        vec![
            e.target.clone(),
            format_number(e.estimate),
            format_number(e.standard_error),
            e.n.to_string(),
        ]
    });
    write_records(w, &header, rows)
}

pub fn read_estimates<R: Read>(r: R) -> Result<EstimateTable> {
    let (header, records) = read_records(r)?;
    if header != ["target", "estimate", "SE", "N"] {
        return Err(Error::Parse(format!("unexpected estimate header {header:?}")));
    }
    let num = |s: &str| s.parse::<f64>().map_err(|e| Error::Parse(format!("bad number '{s}': {e}")));
    let rows = records
        .iter()
        .map(|r| {
            Ok(Estimate {
                target: r[0].clone(),
                estimate: num(&r[1])?,
                standard_error: num(&r[2])?,
                n: r[3]
                    .parse()
                    .map_err(|e| Error::Parse(format!("bad count '{}': {e}", r[3])))?,
            })
        })
        .collect::<Result<_>>()?;
    Ok(EstimateTable { rows })
}
