//! Auction bid logs in a small CSV schema, and the bootstrap that turns one
//! (advertiser, day, hour) cell of a log into a [`BidDistribution`].
//!
//! The schema is a header line `advertiser_id,day,hour,exchange_id,second_bid`
//! followed by one row per observed auction. A wrong header fails the whole
//! file; individual bad rows are returned as [`RejectedLine`]s so a large log
//! with a few broken lines is still usable.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use rand::Rng;
use rand_distr::{Distribution, LogNormal};
use serde::{Deserialize, Serialize};

use crate::environments::BidDistribution;
use crate::error::{Error, Result};

pub const HEADER: [&str; 5] = ["advertiser_id", "day", "hour", "exchange_id", "second_bid"];

/// Bootstrap list length used when none is given.
pub const DEFAULT_BOOTSTRAP_N: usize = 10_000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BidLogRecord {
    pub advertiser_id: String,
    pub day: u32,
    pub hour: u32,
    pub exchange_id: i64,
    /// Raw currency units, strictly positive.
    pub second_bid: f64,
}

impl BidLogRecord {
    fn check(&self) -> std::result::Result<(), String> {
        if self.hour > 23 {
            return Err(format!("hour {} outside 0..=23", self.hour));
        }
        if !(self.second_bid.is_finite() && self.second_bid > 0.0) {
            return Err(format!("second_bid {} is not a positive number", self.second_bid));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RejectedLine {
    /// 1-based line number in the file, counting the header as line 1.
    pub line: u64,
    pub reason: String,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ParsedBidLog {
    pub records: Vec<BidLogRecord>,
    pub rejected: Vec<RejectedLine>,
}

pub fn parse_bid_log(path: impl AsRef<Path>) -> Result<ParsedBidLog> {
    let path = path.as_ref();
    let file = File::open(path)
        .map_err(|e| Error::BidLog(format!("cannot read {}: {e}", path.display())))?;
    parse_bid_log_reader(file)
}

/// Parses from any reader. Fails on a missing or wrong header; collects
/// malformed rows into `rejected`.
pub fn parse_bid_log_reader<R: Read>(input: R) -> Result<ParsedBidLog> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(input);
    let headers = reader.headers()?.clone();
    if headers.iter().map(str::trim).ne(HEADER) {
        return Err(Error::BidLog(format!(
            "expected header `{}`, found `{}`",
            HEADER.join(","),
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut out = ParsedBidLog::default();
    for row in reader.records() {
        let row = row?;
        let line = row.position().map_or(0, |p| p.line());
        if row.len() != HEADER.len() {
            out.rejected.push(RejectedLine {
                line,
                reason: format!("expected {} fields, found {}", HEADER.len(), row.len()),
            });
            continue;
        }
        match row.deserialize::<BidLogRecord>(Some(&headers)) {
            Ok(rec) => match rec.check() {
                Ok(()) => out.records.push(rec),
                Err(reason) => out.rejected.push(RejectedLine { line, reason }),
            },
            Err(e) => out.rejected.push(RejectedLine {
                line,
                reason: match e.kind() {
                    csv::ErrorKind::Deserialize { err, .. } => err.to_string(),
                    _ => e.to_string(),
                },
            }),
        }
    }
    Ok(out)
}

/// Like [`parse_bid_log`] but any malformed row is an error.
pub fn parse_bid_log_strict(path: impl AsRef<Path>) -> Result<Vec<BidLogRecord>> {
    let parsed = parse_bid_log(path)?;
    match parsed.rejected.first() {
        Some(r) => Err(Error::BidLog(format!("line {}: {}", r.line, r.reason))),
        None => Ok(parsed.records),
    }
}

/// Writes records in the log schema.
pub fn write_bid_log<W: Write>(records: &[BidLogRecord], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(HEADER)?;
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Bootstraps `bootstrap_n` second-bid values per exchange from the rows of
/// one (advertiser, day, hour) cell. The two smallest exchange ids give the
/// first and second list; further exchanges are ignored.
pub fn build_bid_distribution<R: Rng + ?Sized>(
    records: &[BidLogRecord],
    advertiser: &str,
    day: u32,
    hour: u32,
    bootstrap_n: usize,
    rng: &mut R,
) -> Result<BidDistribution> {
    if bootstrap_n == 0 {
        return Err(Error::InvalidParameter("bootstrap_n must be positive".into()));
    }
    let mut by_exchange: BTreeMap<i64, Vec<f64>> = BTreeMap::new();
    for r in records
        .iter()
        .filter(|r| r.advertiser_id == advertiser && r.day == day && r.hour == hour)
    {
        by_exchange.entry(r.exchange_id).or_default().push(r.second_bid);
    }
    if by_exchange.is_empty() {
        return Err(Error::EmptyFilter {
            advertiser: advertiser.to_string(),
            day,
            hour,
        });
    }
    if by_exchange.len() < 2 {
        return Err(Error::ExchangeCount(by_exchange.len()));
    }
    let mut pools = by_exchange.into_values();
    let mut resample = |pool: Vec<f64>| -> Vec<f64> {
        (0..bootstrap_n)
            .map(|_| pool[rng.random_range(0..pool.len())])
            .collect()
    };
    let first = resample(pools.next().expect("two exchanges"));
    let second = resample(pools.next().expect("two exchanges"));
    BidDistribution::new(first, second)
}

/// Shape of a synthetic log: every advertiser × day × hour × exchange cell
/// gets `rows_per_cell` log-normal second bids.
#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticLog {
    pub advertisers: Vec<String>,
    pub days: Vec<u32>,
    pub hours: Vec<u32>,
    /// `(exchange_id, mu, sigma)` of the log-normal bid per exchange.
    pub exchanges: Vec<(i64, f64, f64)>,
    pub rows_per_cell: usize,
}

impl SyntheticLog {
    pub fn generate<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Vec<BidLogRecord>> {
        let mut out = Vec::new();
        for &(exchange_id, mu, sigma) in &self.exchanges {
            let dist = LogNormal::new(mu, sigma)
                .map_err(|e| Error::InvalidParameter(format!("log-normal: {e}")))?;
            for advertiser in &self.advertisers {
                for &day in &self.days {
                    for &hour in &self.hours {
                        for _ in 0..self.rows_per_cell {
                            out.push(BidLogRecord {
                                advertiser_id: advertiser.clone(),
                                day,
                                hour,
                                exchange_id,
                                // Rounded like a currency amount, kept positive.
                                second_bid: ((dist.sample(rng) * 100.0).round() / 100.0).max(0.01),
                            });
                        }
                    }
                }
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn parse(text: &str) -> Result<ParsedBidLog> {
        parse_bid_log_reader(text.as_bytes())
    }

    fn rec(adv: &str, exchange_id: i64, bid: f64) -> BidLogRecord {
        BidLogRecord {
            advertiser_id: adv.into(),
            day: 6,
            hour: 14,
            exchange_id,
            second_bid: bid,
        }
    }

    #[test]
    fn header_only_and_single_row() {
        let h = "advertiser_id,day,hour,exchange_id,second_bid\n";
        assert_eq!(parse(h).unwrap(), ParsedBidLog::default());
        let p = parse(&format!("{h}1458,6,14,2,57.5\n")).unwrap();
        assert_eq!(p.records, [BidLogRecord {
            advertiser_id: "1458".into(),
            day: 6,
            hour: 14,
            exchange_id: 2,
            second_bid: 57.5
        }]);
        assert!(p.rejected.is_empty());
    }

    #[test]
    fn bad_rows_are_rejected_with_line_numbers() {
        let text = "advertiser_id,day,hour,exchange_id,second_bid\n\
                    a,1,2,1,-3\n\
                    a,1,2,1,4\n\
                    a,1,24,1,4\n\
                    a,1,2,1,abc\n\
                    a,1,2\n";
        let p = parse(text).unwrap();
        assert_eq!(p.records.len(), 1);
        let lines: Vec<u64> = p.rejected.iter().map(|r| r.line).collect();
        assert_eq!(lines, [2, 4, 5, 6]);
        assert!(p.rejected[0].reason.contains("second_bid"));
    }

    #[test]
    fn wrong_header_fails() {
        assert!(matches!(parse("a,b,c\n1,2,3\n"), Err(Error::BidLog(_))));
        assert!(parse("").is_err());
    }

    #[test]
    fn constant_cells_give_unit_pairs() {
        let records = [rec("x", 7, 80.0), rec("x", 3, 80.0), rec("x", 3, 80.0)];
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let d = build_bid_distribution(&records, "x", 6, 14, 100, &mut rng).unwrap();
        assert_eq!(d.first(), [80.0; 100]);
        assert_eq!(d.normalizer(), 80.0);
        for _ in 0..50 {
            assert_eq!(d.sample_pair(&mut rng), (1.0, 1.0));
        }
    }

    #[test]
    fn filter_and_exchange_errors() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let records = [rec("x", 1, 5.0), rec("y", 2, 5.0)];
        assert!(matches!(
            build_bid_distribution(&records, "z", 6, 14, 10, &mut rng),
            Err(Error::EmptyFilter { .. })
        ));
        assert!(matches!(
            build_bid_distribution(&records, "x", 6, 14, 10, &mut rng),
            Err(Error::ExchangeCount(1))
        ));
    }

    #[test]
    fn smallest_two_exchanges_in_order() {
        let records = [rec("x", 9, 1.0), rec("x", 4, 2.0), rec("x", 5, 3.0)];
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let d = build_bid_distribution(&records, "x", 6, 14, 5, &mut rng).unwrap();
        assert_eq!(d.first(), [2.0; 5]);
        assert_eq!(d.second(), [3.0; 5]);
    }

    #[test]
    fn synthetic_round_trip_and_bootstrap_membership() {
        let spec = SyntheticLog {
            advertisers: vec!["1458".into(), "3386".into()],
            days: vec![6, 7],
            hours: vec![13, 14],
            exchanges: vec![(1, 4.0, 0.5), (2, 3.8, 0.6)],
            rows_per_cell: 30,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let records = spec.generate(&mut rng).unwrap();
        assert_eq!(records.len(), 2 * 2 * 2 * 2 * 30);
        let mut buf = Vec::new();
        write_bid_log(&records, &mut buf).unwrap();
        let parsed = parse_bid_log_reader(buf.as_slice()).unwrap();
        assert!(parsed.rejected.is_empty());
        assert_eq!(parsed.records, records);

        let d = build_bid_distribution(&records, "3386", 7, 13, DEFAULT_BOOTSTRAP_N, &mut rng)
            .unwrap();
        assert_eq!(d.first().len(), DEFAULT_BOOTSTRAP_N);
        assert_eq!(d.second().len(), DEFAULT_BOOTSTRAP_N);
        let cell = |ex| -> Vec<f64> {
            records
                .iter()
                .filter(|r| r.advertiser_id == "3386" && r.day == 7 && r.hour == 13 && r.exchange_id == ex)
                .map(|r| r.second_bid)
                .collect()
        };
        let (c1, c2) = (cell(1), cell(2));
        assert!(d.first().iter().all(|v| c1.contains(v)));
        assert!(d.second().iter().all(|v| c2.contains(v)));
        let max = c1.iter().chain(&c2).copied().fold(0.0, f64::max);
        assert!(d.normalizer() <= max);
    }
}
