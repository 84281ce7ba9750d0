use std::io::{Read, Write};

use chrono::NaiveDate;

use super::IngestError;

/// One logbook row as exported from a climbing website.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawAscentRow {
    pub climber_id: String,
    pub route_id: String,
    pub tick_type: String,
    pub date: NaiveDate,
    pub grade_label: String,
    pub grade_system: String,
}

const COLUMNS: [&str; 6] = [
    "climber_id",
    "route_id",
    "tick_type",
    "date",
    "grade_label",
    "grade_system",
];

/// Parses a CSV ascent log with header
/// `climber_id,route_id,tick_type,date,grade_label,grade_system`.
///
/// Columns may appear in any order and extra columns are ignored. Dates are
/// ISO-8601 `YYYY-MM-DD`.
pub fn parse_ascent_log<R: Read>(source: R) -> Result<Vec<RawAscentRow>, IngestError> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(source);
    let headers = reader.headers().map_err(|e| csv_error(e, 1))?.clone();
    let mut positions = [0usize; 6];
    for (slot, name) in positions.iter_mut().zip(COLUMNS) {
        *slot = headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| IngestError::MissingColumn(name.to_string()))?;
    }

    let mut rows = Vec::new();
    let mut record = csv::StringRecord::new();
    loop {
        let line = reader.position().line();
        match reader.read_record(&mut record) {
            Ok(false) => break,
            Ok(true) => {}
            Err(e) => return Err(csv_error(e, line)),
        }
        let line = record.position().map_or(line, |p| p.line());
        let field = |i: usize| -> Result<&str, IngestError> {
            record.get(positions[i]).ok_or_else(|| IngestError::Malformed {
                line,
                message: format!("missing field `{}`", COLUMNS[i]),
            })
        };
        let date_text = field(3)?.trim();
        let date = NaiveDate::parse_from_str(date_text, "%Y-%m-%d").map_err(|_| IngestError::InvalidDate {
            line,
            value: date_text.to_string(),
        })?;
        rows.push(RawAscentRow {
            climber_id: field(0)?.to_string(),
            route_id: field(1)?.to_string(),
            tick_type: field(2)?.to_string(),
            date,
            grade_label: field(4)?.trim().to_string(),
            grade_system: field(5)?.trim().to_string(),
        });
    }
    Ok(rows)
}

fn csv_error(e: csv::Error, line: u64) -> IngestError {
    let line = e.position().map_or(line, |p| p.line());
    match e.into_kind() {
        csv::ErrorKind::Io(io) => IngestError::Io(io),
        kind => IngestError::Malformed {
            line,
            message: format!("{kind:?}"),
        },
    }
}

/// Writes rows in the format read by [`parse_ascent_log`].
pub fn write_ascent_log<W: Write>(rows: &[RawAscentRow], sink: W) -> Result<(), IngestError> {
    let mut writer = csv::Writer::from_writer(sink);
    writer.write_record(COLUMNS).map_err(|e| csv_error(e, 0))?;
    for row in rows {
        let date = row.date.format("%Y-%m-%d").to_string();
        writer
            .write_record([
                row.climber_id.as_str(),
                row.route_id.as_str(),
                row.tick_type.as_str(),
                date.as_str(),
                row.grade_label.as_str(),
                row.grade_system.as_str(),
            ])
            .map_err(|e| csv_error(e, 0))?;
    }
    writer.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const HEADER: &str = "climber_id,route_id,tick_type,date,grade_label,grade_system\n";

    #[test]
    fn header_only() {
        assert!(parse_ascent_log(HEADER.as_bytes()).unwrap().is_empty());
    }

    #[test]
    fn one_row_verbatim() {
        let text = format!("{HEADER}alice,\"Route, The\",redpoint,2020-03-04,21,ewbank\n");
        let rows = parse_ascent_log(text.as_bytes()).unwrap();
        assert_eq!(
            rows,
            vec![RawAscentRow {
                climber_id: "alice".into(),
                route_id: "Route, The".into(),
                tick_type: "redpoint".into(),
                date: NaiveDate::from_ymd_opt(2020, 3, 4).unwrap(),
                grade_label: "21".into(),
                grade_system: "ewbank".into(),
            }]
        );
    }

    #[test]
    fn invalid_date_names_line() {
        let text = format!("{HEADER}a,r,onsight,2020-01-01,20,ewbank\nb,r,dog,2020-13-40,20,ewbank\n");
        let err = parse_ascent_log(text.as_bytes()).unwrap_err();
        match err {
            IngestError::InvalidDate { line, value } => {
                assert_eq!(line, 3);
                assert_eq!(value, "2020-13-40");
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(err_string(&text).contains("line 3"));
    }

    fn err_string(text: &str) -> String {
        parse_ascent_log(text.as_bytes()).unwrap_err().to_string()
    }

    #[test]
    fn missing_column() {
        let text = "climber_id,route_id,tick_type,date,grade_label\n";
        let err = parse_ascent_log(text.as_bytes()).unwrap_err();
        assert!(matches!(err, IngestError::MissingColumn(c) if c == "grade_system"));
    }

    #[test]
    fn ragged_row_is_malformed() {
        let text = format!("{HEADER}a,r,onsight,2020-01-01,20\n");
        let err = parse_ascent_log(text.as_bytes()).unwrap_err();
        assert!(matches!(err, IngestError::Malformed { line: 2, .. }), "{err:?}");
    }

    #[test]
    fn reordered_columns() {
        let text = "date,grade_system,grade_label,tick_type,route_id,climber_id,extra\n\
                    2021-05-06,ewbank,18,flash,r1,c1,x\n";
        let rows = parse_ascent_log(text.as_bytes()).unwrap();
        assert_eq!(rows[0].climber_id, "c1");
        assert_eq!(rows[0].grade_label, "18");
    }

    #[test]
    fn write_then_parse() {
        let text = format!("{HEADER}a,\"r,1\",onsight,2020-01-01,20,ewbank\nb,r2,dog,1999-12-31,5.10a,yds\n");
        let rows = parse_ascent_log(text.as_bytes()).unwrap();
        let mut out = Vec::new();
        write_ascent_log(&rows, &mut out).unwrap();
        assert_eq!(parse_ascent_log(out.as_slice()).unwrap(), rows);
    }
}
