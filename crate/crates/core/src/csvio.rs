//! CSV readers and writers for every file the experiments emit. Absent
//! optional values (tau, concentration, p) are empty fields.

use std::io::{Read, Write};

use crate::dataset::{MovieId, UserId};
use crate::error::{Error, Result};
use crate::eval::PredictionRecord;
use crate::harness::{
    CharacteristicComparison, ComparisonRow, MembershipRow, NeighborhoodDumpRow, RegimeRecords,
    SweepTable,
};
use crate::neighborhood::Characteristics;

pub const RECORD_HEADER: [&str; 12] = [
    "test_user",
    "movie",
    "actual",
    "predicted",
    "fallback",
    "neighbors",
    "reviewers",
    "recs",
    "overlap",
    "tau",
    "mean_corr",
    "inter_corr",
];

fn fmt_opt(value: Option<f64>) -> String {
    value.map(|v| v.to_string()).unwrap_or_default()
}

pub fn write_records_csv<W: Write>(out: W, records: &[PredictionRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(RECORD_HEADER)?;
    for r in records {
        w.write_record(&[
            r.test_user_id.to_string(),
            r.movie_id.to_string(),
            r.actual.to_string(),
            r.predicted.to_string(),
            r.fallback.to_string(),
            r.neighborhood_size.to_string(),
            r.reviewers_seen.to_string(),
            r.n_recommendations.to_string(),
            r.overlap_count.to_string(),
            fmt_opt(r.tau),
            r.characteristics.mean_abs_corr_to_test.to_string(),
            r.characteristics.mean_inter_neighbor_abs_corr.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn field<'a>(record: &'a csv::StringRecord, idx: usize, name: &str) -> Result<&'a str> {
    record.get(idx).ok_or_else(|| {
        Error::InvalidInput(format!("results csv row is missing column '{name}'"))
    })
}

fn parse_field<T: std::str::FromStr>(record: &csv::StringRecord, idx: usize, name: &str) -> Result<T> {
    let raw = field(record, idx, name)?;
    raw.parse().map_err(|_| {
        Error::InvalidInput(format!("cannot parse '{raw}' in column '{name}'"))
    })
}

pub fn read_records_csv<R: Read>(input: R) -> Result<Vec<PredictionRecord>> {
    let mut reader = csv::Reader::from_reader(input);
    let headers = reader.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != RECORD_HEADER {
        return Err(Error::InvalidInput(format!(
            "unexpected results csv header: {headers:?}"
        )));
    }
    let mut records = Vec::new();
    for row in reader.records() {
        let row = row?;
        let tau_raw = field(&row, 9, "tau")?;
        let tau = if tau_raw.is_empty() {
            None
        } else {
            Some(parse_field(&row, 9, "tau")?)
        };
        let size: usize = parse_field(&row, 5, "neighbors")?;
        let overlap: usize = parse_field(&row, 8, "overlap")?;
        records.push(PredictionRecord {
            test_user_id: UserId(parse_field(&row, 0, "test_user")?),
            movie_id: MovieId(parse_field(&row, 1, "movie")?),
            actual: parse_field(&row, 2, "actual")?,
            predicted: parse_field(&row, 3, "predicted")?,
            fallback: parse_field(&row, 4, "fallback")?,
            neighborhood_size: size,
            reviewers_seen: parse_field(&row, 6, "reviewers")?,
            n_recommendations: parse_field(&row, 7, "recs")?,
            overlap_count: overlap,
            tau,
            characteristics: Characteristics {
                size,
                overlap_count: overlap,
                mean_abs_corr_to_test: parse_field(&row, 10, "mean_corr")?,
                mean_inter_neighbor_abs_corr: parse_field(&row, 11, "inter_corr")?,
            },
        });
    }
    Ok(records)
}

pub fn write_sweep_csv<W: Write>(out: W, table: &SweepTable) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "param",
        "value",
        "repeat",
        "mae",
        "tau_mean",
        "recs_mean",
        "overlap_mean",
        "neighbors_mean",
        "reviewers_mean",
        "mae_std",
        "tau_std",
        "recs_std",
        "overlap_std",
        "neighbors_std",
        "reviewers_std",
    ])?;
    for cell in &table.cells {
        let s = &cell.summary;
        w.write_record(&[
            table.param.to_string(),
            cell.value.to_string(),
            cell.repeat.to_string(),
            s.mae.to_string(),
            fmt_opt(s.tau_mean),
            s.recommendations_mean.to_string(),
            s.overlap_mean.to_string(),
            s.neighbors_mean.to_string(),
            s.reviewers_mean.to_string(),
            s.mae_std.to_string(),
            fmt_opt(s.tau_std),
            s.recommendations_std.to_string(),
            s.overlap_std.to_string(),
            s.neighbors_std.to_string(),
            s.reviewers_std.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_swap_records_csv<W: Write>(out: W, regimes: &[RegimeRecords]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "regime_predictor",
        "regime_neighborhood",
        "test_user",
        "movie",
        "actual",
        "predicted",
        "tau",
        "fallback",
        "neighbors",
        "reviewers",
        "recs",
        "overlap",
        "mean_corr",
        "inter_corr",
    ])?;
    for regime in regimes {
        for r in &regime.records {
            w.write_record(&[
                regime.predictor.to_string(),
                regime.neighborhood.to_string(),
                r.test_user_id.to_string(),
                r.movie_id.to_string(),
                r.actual.to_string(),
                r.predicted.to_string(),
                fmt_opt(r.tau),
                r.fallback.to_string(),
                r.neighborhood_size.to_string(),
                r.reviewers_seen.to_string(),
                r.n_recommendations.to_string(),
                r.overlap_count.to_string(),
                r.characteristics.mean_abs_corr_to_test.to_string(),
                r.characteristics.mean_inter_neighbor_abs_corr.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_comparisons_csv<W: Write>(out: W, rows: &[ComparisonRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "metric", "pred1", "nh1", "pred2", "nh2", "median1", "median2", "n", "wplus", "wminus",
        "p",
    ])?;
    for row in rows {
        w.write_record(&[
            row.metric.clone(),
            row.pred1.to_string(),
            row.nh1.to_string(),
            row.pred2.to_string(),
            row.nh2.to_string(),
            row.median1.to_string(),
            row.median2.to_string(),
            row.n.to_string(),
            row.w_plus.to_string(),
            row.w_minus.to_string(),
            fmt_opt(row.p),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_characteristics_csv<W: Write>(
    out: W,
    rows: &[CharacteristicComparison],
) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "characteristic",
        "mean_sp",
        "mean_ais",
        "n",
        "wplus",
        "wminus",
        "p",
    ])?;
    for row in rows {
        w.write_record(&[
            row.characteristic.clone(),
            row.mean_sp.to_string(),
            row.mean_ais.to_string(),
            row.n.to_string(),
            row.w_plus.to_string(),
            row.w_minus.to_string(),
            fmt_opt(row.p),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_membership_csv<W: Write>(out: W, rows: &[MembershipRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["test_user", "common", "unique_sp", "unique_ais"])?;
    for row in rows {
        w.write_record(&[
            row.test_user.to_string(),
            row.common.to_string(),
            row.unique_sp.to_string(),
            row.unique_ais.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_neighborhoods_csv<W: Write>(out: W, rows: &[NeighborhoodDumpRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "test_user",
        "neighbor_user",
        "r",
        "concentration",
        "weight",
        "method",
    ])?;
    for row in rows {
        w.write_record(&[
            row.test_user.to_string(),
            row.neighbor_user.to_string(),
            row.r.to_string(),
            fmt_opt(row.concentration),
            row.weight.to_string(),
            row.method.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Pulls two named numeric columns out of any CSV with a header row. Rows
/// where either field is empty or non-numeric are skipped, so optional
/// metrics (like tau) can be compared over the cases where both exist.
pub fn read_paired_columns<R: Read>(
    input: R,
    col_a: &str,
    col_b: &str,
) -> Result<(Vec<(f64, f64)>, usize)> {
    let mut reader = csv::Reader::from_reader(input);
    let headers = reader.headers()?.clone();
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::InvalidInput(format!("csv has no column named '{name}'")))
    };
    let ia = find(col_a)?;
    let ib = find(col_b)?;
    let mut pairs = Vec::new();
    let mut skipped = 0usize;
    for row in reader.records() {
        let row = row?;
        let a = row.get(ia).and_then(|v| v.parse::<f64>().ok());
        let b = row.get(ib).and_then(|v| v.parse::<f64>().ok());
        match (a, b) {
            (Some(a), Some(b)) => pairs.push((a, b)),
            _ => skipped += 1,
        }
    }
    Ok((pairs, skipped))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neighborhood::Weighting;

    fn sample_record(user: u32, tau: Option<f64>) -> PredictionRecord {
        PredictionRecord {
            test_user_id: UserId(user),
            movie_id: MovieId(12),
            actual: 0.8,
            predicted: 0.65,
            fallback: false,
            neighborhood_size: 4,
            reviewers_seen: 37,
            n_recommendations: 21,
            overlap_count: 3,
            tau,
            characteristics: Characteristics {
                size: 4,
                overlap_count: 3,
                mean_abs_corr_to_test: 0.11,
                mean_inter_neighbor_abs_corr: 0.04,
            },
        }
    }

    #[test]
    fn records_round_trip_through_csv() {
        let records = vec![sample_record(1, Some(0.4)), sample_record(2, None)];
        let mut buf = Vec::new();
        write_records_csv(&mut buf, &records).unwrap();
        let back = read_records_csv(buf.as_slice()).unwrap();
        assert_eq!(back, records);
    }

    #[test]
    fn record_csv_has_the_contract_header() {
        let mut buf = Vec::new();
        write_records_csv(&mut buf, &[]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text.lines().next().unwrap(),
            "test_user,movie,actual,predicted,fallback,neighbors,reviewers,recs,overlap,tau,mean_corr,inter_corr"
        );
    }

    #[test]
    fn paired_columns_skip_incomplete_rows() {
        let csv = "a,tau,b\n1.0,0.5,2.0\n1.5,,2.5\n2.0,0.1,3.0\n";
        let (pairs, skipped) = read_paired_columns(csv.as_bytes(), "tau", "b").unwrap();
        assert_eq!(pairs, vec![(0.5, 2.0), (0.1, 3.0)]);
        assert_eq!(skipped, 1);
    }

    #[test]
    fn missing_column_is_reported() {
        let csv = "a,b\n1,2\n";
        assert!(read_paired_columns(csv.as_bytes(), "a", "zzz").is_err());
    }

    #[test]
    fn swap_records_csv_lists_regime_tags() {
        let regimes = vec![RegimeRecords {
            predictor: Weighting::Ais,
            neighborhood: Weighting::Sp,
            records: vec![sample_record(1, None)],
        }];
        let mut buf = Vec::new();
        write_swap_records_csv(&mut buf, &regimes).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.lines().nth(1).unwrap().starts_with("AIS,SP,1,12,"));
    }
}
