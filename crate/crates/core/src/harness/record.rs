//! Raw result records and their CSV form.

use std::cmp::Ordering;
use std::fmt;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::evaluation::{score, ConfusionCounts, Metric};
use crate::model::{Method, TuningRecord};

pub const RAW_HEADER: [&str; 20] = [
    "scenario_id",
    "replication",
    "method",
    "alpha",
    "lambda",
    "k",
    "realized_support_size",
    "tp",
    "fp",
    "fn",
    "tn",
    "precision",
    "recall",
    "f1",
    "f2",
    "mcc",
    "certified",
    "gap",
    "runtime_ms",
    "status",
];

/// Metrics reported as best-possible rows.
pub const BEST_METRICS: [Metric; 3] = [Metric::F1, Metric::F2, Metric::Mcc];

/// Formats like C's `%.10g`.
pub fn fmt_g10(x: f64) -> String {
    const SIG: i32 = 10;
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf" } else { "-inf" }.into();
    }
    if x == 0.0 {
        return if x.is_sign_negative() { "-0" } else { "0" }.into();
    }
    let sci = format!("{:.*e}", (SIG - 1) as usize, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("exponent digits");
    if !(-4..SIG).contains(&exp) {
        let m = strip_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{m}e{sign}{:02}", exp.abs())
    } else {
        strip_zeros(&format!("{:.*}", (SIG - 1 - exp) as usize, x)).to_string()
    }
}

fn strip_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// What a record describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RecordKind {
    /// Model at a requested subset size.
    FixedK,
    /// Best-possible score over the method's whole tuning grid (all α
    /// jointly for ENET).
    Best(Metric),
    /// ENET best-possible score within the path of one α.
    AlphaBest(Metric),
}

impl RecordKind {
    pub fn all() -> Vec<RecordKind> {
        let mut v = vec![RecordKind::FixedK];
        v.extend(BEST_METRICS.iter().map(|&m| RecordKind::Best(m)));
        v.extend(BEST_METRICS.iter().map(|&m| RecordKind::AlphaBest(m)));
        v
    }

    fn rank(self) -> usize {
        RecordKind::all().iter().position(|&k| k == self).unwrap_or(usize::MAX)
    }
}

impl fmt::Display for RecordKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RecordKind::FixedK => f.write_str("fixed_k"),
            RecordKind::Best(m) => write!(f, "best_{m}"),
            RecordKind::AlphaBest(m) => write!(f, "alpha_best_{m}"),
        }
    }
}

impl FromStr for RecordKind {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        RecordKind::all()
            .into_iter()
            .find(|k| k.to_string() == s)
            .ok_or_else(|| format!("unknown record kind `{s}`"))
    }
}

/// Counts and metrics of one evaluated support.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scores {
    pub counts: ConfusionCounts,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub f2: f64,
    pub mcc: f64,
}

impl Scores {
    pub fn from_counts(counts: ConfusionCounts) -> Self {
        let v = |m| score(counts, m).value;
        Scores {
            counts,
            precision: v(Metric::Precision),
            recall: v(Metric::Recall),
            f1: v(Metric::F1),
            f2: v(Metric::F2),
            mcc: v(Metric::Mcc),
        }
    }

    pub fn get(&self, metric: Metric) -> f64 {
        match metric {
            Metric::Precision => self.precision,
            Metric::Recall => self.recall,
            Metric::F1 => self.f1,
            Metric::F2 => self.f2,
            Metric::Mcc => self.mcc,
        }
    }
}

/// One raw CSV row. `scores` and `realized_support_size` are absent when
/// the solver failed, and `error` then holds the message.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRecord {
    pub scenario_id: String,
    pub replication: u64,
    pub method: Method,
    pub alpha: Option<f64>,
    pub lambda: Option<f64>,
    pub k: Option<usize>,
    pub realized_support_size: Option<usize>,
    pub scores: Option<Scores>,
    pub certified: bool,
    pub gap: f64,
    pub runtime_ms: u64,
    pub kind: RecordKind,
    pub converged: bool,
    pub error: Option<String>,
}

impl ResultRecord {
    pub fn new(scenario_id: &str, replication: u64, method: Method, kind: RecordKind) -> Self {
        ResultRecord {
            scenario_id: scenario_id.to_string(),
            replication,
            method,
            alpha: None,
            lambda: None,
            k: None,
            realized_support_size: None,
            scores: None,
            certified: true,
            gap: 0.0,
            runtime_ms: 0,
            kind,
            converged: true,
            error: None,
        }
    }

    pub fn with_tuning(mut self, tuning: TuningRecord) -> Self {
        match tuning {
            TuningRecord::SubsetSize(k) => self.k = Some(k),
            TuningRecord::Penalty { alpha, lambda } => {
                self.alpha = Some(alpha);
                self.lambda = Some(lambda);
            }
        }
        self
    }

    pub fn failed(mut self, message: impl fmt::Display) -> Self {
        let msg = message.to_string().replace(['\n', '\r'], " ");
        self.error = Some(msg);
        self.scores = None;
        self.realized_support_size = None;
        self.certified = false;
        self
    }

    pub fn status(&self) -> String {
        let mut s = self.kind.to_string();
        if !self.converged {
            s.push_str("|no_convergence");
        }
        if let Some(e) = &self.error {
            s.push_str("|error:");
            s.push_str(e);
        }
        s
    }

    pub fn metric(&self, metric: Metric) -> Option<f64> {
        self.scores.map(|s| s.get(metric))
    }

    pub fn to_fields(&self) -> Vec<String> {
        let opt_f = |v: Option<f64>| v.map(fmt_g10).unwrap_or_default();
        let opt_u = |v: Option<u64>| v.map(|x| x.to_string()).unwrap_or_default();
        let sc = self.scores;
        let c = sc.map(|s| s.counts);
        vec![
            self.scenario_id.clone(),
            self.replication.to_string(),
            self.method.to_string(),
            opt_f(self.alpha),
            opt_f(self.lambda),
            opt_u(self.k.map(|k| k as u64)),
            opt_u(self.realized_support_size.map(|k| k as u64)),
            opt_u(c.map(|c| c.tp)),
            opt_u(c.map(|c| c.fp)),
            opt_u(c.map(|c| c.fn_)),
            opt_u(c.map(|c| c.tn)),
            opt_f(sc.map(|s| s.precision)),
            opt_f(sc.map(|s| s.recall)),
            opt_f(sc.map(|s| s.f1)),
            opt_f(sc.map(|s| s.f2)),
            opt_f(sc.map(|s| s.mcc)),
            self.certified.to_string(),
            fmt_g10(self.gap),
            self.runtime_ms.to_string(),
            self.status(),
        ]
    }

    /// Canonical order: scenario, replication, method, record kind, then
    /// tuning (α ascending, k ascending, λ descending).
    pub fn sort_cmp(&self, other: &Self) -> Ordering {
        let alpha = |r: &Self| r.alpha.unwrap_or(f64::NEG_INFINITY);
        let lambda = |r: &Self| r.lambda.unwrap_or(f64::INFINITY);
        self.scenario_id
            .cmp(&other.scenario_id)
            .then(self.replication.cmp(&other.replication))
            .then(self.method.cmp(&other.method))
            .then(self.kind.rank().cmp(&other.kind.rank()))
            .then(alpha(self).total_cmp(&alpha(other)))
            .then(self.k.cmp(&other.k))
            .then(lambda(other).total_cmp(&lambda(self)))
    }
}

pub fn sort_records(records: &mut [ResultRecord]) {
    records.sort_by(ResultRecord::sort_cmp);
}

/// CSV writer that flushes after every record.
pub struct RawWriter<W: Write> {
    inner: csv::Writer<W>,
}

impl<W: Write> RawWriter<W> {
    pub fn new(sink: W) -> Result<Self> {
        let mut inner = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(sink);
        inner.write_record(RAW_HEADER)?;
        inner.flush()?;
        Ok(RawWriter { inner })
    }

    pub fn write(&mut self, record: &ResultRecord) -> Result<()> {
        self.inner.write_record(record.to_fields())?;
        self.inner.flush()?;
        Ok(())
    }

    pub fn into_inner(self) -> Result<W> {
        self.inner.into_inner().map_err(|e| Error::Io(e.into_error()))
    }
}

pub fn write_raw_csv(path: impl AsRef<Path>, records: &[ResultRecord]) -> Result<()> {
    let file = std::fs::File::create(path)?;
    let mut w = RawWriter::new(std::io::BufWriter::new(file))?;
    for r in records {
        w.write(r)?;
    }
    w.into_inner()?.flush()?;
    Ok(())
}

pub fn raw_csv_string(records: &[ResultRecord]) -> Result<String> {
    let mut w = RawWriter::new(Vec::new())?;
    for r in records {
        w.write(r)?;
    }
    Ok(String::from_utf8(w.into_inner()?).expect("csv output is utf-8"))
}

fn parse_err(line: usize, column: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        column,
        message: message.into(),
    }
}

/// Reads a raw CSV as written by [`RawWriter`]. Lines and columns in errors
/// are 1-based.
pub fn read_raw_csv<R: Read>(reader: R) -> Result<Vec<ResultRecord>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(false).from_reader(reader);
    let mut rows = rdr.records();
    let header = match rows.next() {
        None => return Err(parse_err(1, 1, "empty file")),
        Some(h) => h.map_err(|e| csv_err(e, 1))?,
    };
    if header.len() != RAW_HEADER.len() || header.iter().zip(RAW_HEADER).any(|(a, b)| a != b) {
        return Err(parse_err(1, 1, format!("expected header {}", RAW_HEADER.join(","))));
    }
    let mut out = Vec::new();
    for (i, row) in rows.enumerate() {
        let line = i + 2;
        let row = row.map_err(|e| csv_err(e, line))?;
        out.push(parse_row(&row, line)?);
    }
    Ok(out)
}

fn csv_err(e: csv::Error, line: usize) -> Error {
    let line = e.position().map_or(line, |p| p.line() as usize);
    parse_err(line, 1, e.to_string())
}

fn parse_row(row: &csv::StringRecord, line: usize) -> Result<ResultRecord> {
    if row.len() != RAW_HEADER.len() {
        return Err(parse_err(line, 1, format!("expected {} fields, got {}", RAW_HEADER.len(), row.len())));
    }
    let field = |c: usize| &row[c];
    fn num<T: FromStr>(s: &str, line: usize, c: usize) -> Result<T> {
        s.parse()
            .map_err(|_| parse_err(line, c + 1, format!("cannot parse `{s}` as {}", RAW_HEADER[c])))
    }
    let opt = |c: usize| -> Result<Option<&str>> { Ok(Some(field(c)).filter(|s| !s.is_empty())) };
    let opt_f = |c: usize| -> Result<Option<f64>> { opt(c)?.map(|s| num(s, line, c)).transpose() };
    let opt_u = |c: usize| -> Result<Option<u64>> { opt(c)?.map(|s| num(s, line, c)).transpose() };

    let scenario_id = field(0).to_string();
    if scenario_id.is_empty() {
        return Err(parse_err(line, 1, "empty scenario_id"));
    }
    let method: Method = field(2).parse().map_err(|e: Error| parse_err(line, 3, e.to_string()))?;
    let counts = [opt_u(7)?, opt_u(8)?, opt_u(9)?, opt_u(10)?];
    let metrics = [opt_f(11)?, opt_f(12)?, opt_f(13)?, opt_f(14)?, opt_f(15)?];
    let scores = match (counts, metrics) {
        ([Some(tp), Some(fp), Some(fn_), Some(tn)], [Some(precision), Some(recall), Some(f1), Some(f2), Some(mcc)]) => {
            if [tp, fp, fn_, tn].iter().try_fold(0u64, |a, &b| a.checked_add(b)).is_none() {
                return Err(parse_err(line, 8, "counts overflow"));
            }
            Some(Scores {
                counts: ConfusionCounts::new(tp, fp, fn_, tn),
                precision,
                recall,
                f1,
                f2,
                mcc,
            })
        }
        (c, m) if c.iter().all(Option::is_none) && m.iter().all(Option::is_none) => None,
        _ => return Err(parse_err(line, 8, "counts and metrics must be all present or all empty")),
    };
    let certified = match field(16) {
        "true" => true,
        "false" => false,
        s => return Err(parse_err(line, 17, format!("cannot parse `{s}` as certified"))),
    };
    let status = field(19);
    let mut parts = status.splitn(2, "|error:");
    let mut head = parts.next().unwrap_or_default().split('|');
    let kind: RecordKind = head
        .next()
        .unwrap_or_default()
        .parse()
        .map_err(|e: String| parse_err(line, 20, e))?;
    let mut converged = true;
    for flag in head {
        match flag {
            "no_convergence" => converged = false,
            other => return Err(parse_err(line, 20, format!("unknown status flag `{other}`"))),
        }
    }
    let error = parts.next().map(str::to_string);
    Ok(ResultRecord {
        scenario_id,
        replication: num(field(1), line, 1)?,
        method,
        alpha: opt_f(3)?,
        lambda: opt_f(4)?,
        k: opt_u(5)?.map(|k| k as usize),
        realized_support_size: opt_u(6)?.map(|k| k as usize),
        scores,
        certified,
        gap: num(field(17), line, 17)?,
        runtime_ms: num(field(18), line, 18)?,
        kind,
        converged,
        error,
    })
}

pub fn load_raw_csv(path: impl AsRef<Path>) -> Result<Vec<ResultRecord>> {
    read_raw_csv(std::fs::File::open(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn g10_matches_printf() {
        // reference strings produced by printf("%.10g")
        let cases = [
            (0.0, "0"),
            (1.0, "1"),
            (0.5, "0.5"),
            (1.0 / 3.0, "0.3333333333"),
            (2.0 / 3.0, "0.6666666667"),
            (123456789012.0, "1.23456789e+11"),
            (1234567890.0, "1234567890"),
            (0.0001, "0.0001"),
            (0.00001234, "1.234e-05"),
            (1e-9, "1e-09"),
            (12.5, "12.5"),
            (-0.25, "-0.25"),
            (1e20, "1e+20"),
            (0.1 + 0.2, "0.3"),
            (2f64.powi(60), "1.152921505e+18"),
            (9999999999.5, "1e+10"),
            (9.9999999995e-05, "0.0001"),
        ];
        for (x, want) in cases {
            assert_eq!(fmt_g10(x), want, "{x:e}");
        }
    }

    fn sample() -> ResultRecord {
        let mut r = ResultRecord::new("low-identity-tau6.00", 3, Method::Enet, RecordKind::Best(Metric::F1))
            .with_tuning(TuningRecord::Penalty {
                alpha: 0.1,
                lambda: 12.345678901234,
            });
        r.k = Some(10);
        r.realized_support_size = Some(9);
        r.scores = Some(Scores::from_counts(ConfusionCounts::new(8, 1, 2, 89)));
        r.converged = false;
        r
    }

    #[test]
    fn row_layout() {
        let text = raw_csv_string(&[sample()]).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), RAW_HEADER.join(","));
        assert_eq!(
            lines.next().unwrap(),
            "low-identity-tau6.00,3,ENET,0.1,12.3456789,10,9,8,1,2,89,0.8888888889,0.8,0.8421052632,0.8163265306,0.8269802601,true,0,0,best_f1|no_convergence"
        );
    }

    #[test]
    fn roundtrip_including_failures() {
        let ok = sample();
        let bad = ResultRecord::new("s", 0, Method::Bss, RecordKind::FixedK)
            .with_tuning(TuningRecord::SubsetSize(4))
            .failed("boom, with comma\nand newline");
        let text = raw_csv_string(&[ok.clone(), bad.clone()]).unwrap();
        let back = read_raw_csv(text.as_bytes()).unwrap();
        assert_eq!(back[1], bad);
        assert_eq!(back[1].error.as_deref(), Some("boom, with comma and newline"));
        // floats are rounded to 10 digits, so compare the reprinted text
        assert_eq!(raw_csv_string(&back).unwrap(), text);
    }

    #[test]
    fn malformed_rows_report_position() {
        let head = RAW_HEADER.join(",");
        let row = "s,x,BSS,,,1,1,1,0,9,90,1,0.1,0.18,0.12,0.3,true,0,5,fixed_k";
        match read_raw_csv(format!("{head}\n{row}\n").as_bytes()) {
            Err(Error::Parse { line, column, .. }) => assert_eq!((line, column), (2, 2)),
            other => panic!("{other:?}"),
        }
        assert!(read_raw_csv("a,b\n".as_bytes()).is_err());
        assert!(read_raw_csv("".as_bytes()).is_err());
        let row = "s,1,BSS,,,1,1,1,0,9,90,1,0.1,0.18,0.12,0.3,true,0,5,nope";
        assert!(read_raw_csv(format!("{head}\n{row}\n").as_bytes()).is_err());
    }

    #[test]
    fn sort_order() {
        let mk = |id: &str, rep, m, kind, k| {
            ResultRecord::new(id, rep, m, kind).with_tuning(TuningRecord::SubsetSize(k))
        };
        let mut v = vec![
            mk("b", 0, Method::Bss, RecordKind::FixedK, 1),
            mk("a", 1, Method::Bss, RecordKind::FixedK, 1),
            mk("a", 0, Method::Fss, RecordKind::FixedK, 1),
            mk("a", 0, Method::Bss, RecordKind::Best(Metric::F1), 2),
            mk("a", 0, Method::Bss, RecordKind::FixedK, 2),
            mk("a", 0, Method::Bss, RecordKind::FixedK, 1),
        ];
        sort_records(&mut v);
        let keys: Vec<_> = v.iter().map(|r| (r.scenario_id.as_str(), r.replication, r.method, r.k)).collect();
        assert_eq!(
            keys,
            [
                ("a", 0, Method::Bss, Some(1)),
                ("a", 0, Method::Bss, Some(2)),
                ("a", 0, Method::Bss, Some(2)),
                ("a", 0, Method::Fss, Some(1)),
                ("a", 1, Method::Bss, Some(1)),
                ("b", 0, Method::Bss, Some(1)),
            ]
        );
        assert_eq!(v[2].kind, RecordKind::Best(Metric::F1));
    }

    proptest! {
        #[test]
        fn g10_parses_back_within_ten_digits(x in proptest::num::f64::NORMAL) {
            let s = fmt_g10(x);
            let back: f64 = s.parse().unwrap();
            prop_assert!(((back - x) / x).abs() <= 5e-10);
            prop_assert_eq!(fmt_g10(back), s);
        }
    }
}
