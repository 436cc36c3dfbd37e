//! CSV report output.

use crate::error::{Error, Result};
use crate::num::Num;
use crate::verify::report::{PropertyReport, Ratio, RatioRow};

/// Fixed column order of every report.
pub const HEADER: [&str; 7] = ["instance", "mechanism", "value", "opt", "ratio", "pass", "witness"];

/// Fractional digits of the `ratio` column.
pub const RATIO_DIGITS: u32 = 30;

/// One CSV line. Fields that do not apply are left empty.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ReportRow {
    pub instance: String,
    pub mechanism: String,
    pub value: Option<Num>,
    pub opt: Option<Num>,
    pub ratio: Option<Ratio>,
    pub pass: Option<bool>,
    pub witness: Option<String>,
}

impl From<&RatioRow> for ReportRow {
    fn from(r: &RatioRow) -> Self {
        ReportRow {
            instance: r.instance.clone(),
            mechanism: r.mechanism.clone(),
            value: Some(r.value.clone()),
            opt: Some(r.opt.clone()),
            ratio: Some(r.ratio.clone()),
            ..ReportRow::default()
        }
    }
}

impl From<&PropertyReport> for ReportRow {
    fn from(r: &PropertyReport) -> Self {
        ReportRow {
            instance: r.instance.clone(),
            mechanism: r.property.clone(),
            pass: Some(r.pass),
            witness: r.witness.clone(),
            ..ReportRow::default()
        }
    }
}

/// Renders rows in the given order.
pub fn write_report(rows: &[ReportRow]) -> Result<String> {
    let io = |e: csv::Error| Error::Precondition(format!("csv output failed: {e}"));
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(HEADER).map_err(io)?;
    for r in rows {
        let ratio = match &r.ratio {
            Some(x) => x.to_decimal(RATIO_DIGITS)?,
            None => String::new(),
        };
        let text = |n: &Option<Num>| n.as_ref().map(ToString::to_string).unwrap_or_default();
        let pass = match r.pass {
            Some(true) => "pass",
            Some(false) => "fail",
            None => "",
        };
        w.write_record([
            r.instance.as_str(),
            r.mechanism.as_str(),
            &text(&r.value),
            &text(&r.opt),
            &ratio,
            pass,
            r.witness.as_deref().unwrap_or(""),
        ])
        .map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Precondition(format!("csv output failed: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}
