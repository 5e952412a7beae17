//! Tab-separated query log format.
//!
//! One record per line, fields in fixed order:
//!
//! ```text
//! user_id \t timestamp \t asr_source \t 1P|3P \t locale \t clicks \t 0|1 \t raw_text
//! ```
//!
//! Backslash, tab, newline and carriage return inside any text field are
//! written as `\\`, `\t`, `\n` and `\r`. Numbers must be in canonical decimal
//! form so that parsing and writing a line is the identity.

use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::query::QueryLogRecord;

const FIELDS: usize = 8;

pub fn write_log_line(record: &QueryLogRecord) -> String {
    let mut line = String::with_capacity(64 + record.raw_text().len());
    escape_into(&mut line, record.user_id());
    line.push('\t');
    line.push_str(&record.timestamp().to_string());
    line.push('\t');
    escape_into(&mut line, record.asr_source());
    line.push('\t');
    line.push_str(record.asr_party().code());
    line.push('\t');
    escape_into(&mut line, record.locale());
    line.push('\t');
    line.push_str(&record.clicks().to_string());
    line.push('\t');
    line.push(if record.extended_interaction() { '1' } else { '0' });
    line.push('\t');
    escape_into(&mut line, record.raw_text());
    line
}

/// Parses one line (without its terminator). Errors carry line number 0;
/// [`read_logs`] fills in the real position.
pub fn parse_log_line(line: &str) -> Result<QueryLogRecord> {
    parse_at(line, 0)
}

fn parse_at(line: &str, line_no: usize) -> Result<QueryLogRecord> {
    let malformed = |reason: String| Error::LogParse {
        line: line_no,
        reason,
    };
    let fields: Vec<&str> = line.split('\t').collect();
    if fields.len() != FIELDS {
        return Err(malformed(format!(
            "expected {FIELDS} tab-separated fields, found {}",
            fields.len()
        )));
    }
    let unescape_field = |s: &str| unescape(s).map_err(|r| malformed(r.to_owned()));
    let timestamp = canonical_number::<u64>(fields[1])
        .ok_or_else(|| malformed(format!("bad timestamp {:?}", fields[1])))?;
    let party = fields[3]
        .parse()
        .map_err(|_| malformed(format!("bad ASR party {:?}", fields[3])))?;
    let clicks = canonical_number::<u32>(fields[5])
        .ok_or_else(|| malformed(format!("bad click count {:?}", fields[5])))?;
    let extended = match fields[6] {
        "0" => false,
        "1" => true,
        other => return Err(malformed(format!("bad interaction flag {other:?}"))),
    };

    QueryLogRecord::builder(unescape_field(fields[0])?, timestamp, unescape_field(fields[7])?)
        .asr_source(unescape_field(fields[2])?)
        .asr_party(party)
        .locale(unescape_field(fields[4])?)
        .clicks(clicks)
        .extended_interaction(extended)
        .build()
        .map_err(|e| match e {
            Error::InvalidRecord(reason) => malformed(reason),
            other => other,
        })
}

fn canonical_number<T: std::str::FromStr + ToString>(s: &str) -> Option<T> {
    let n: T = s.parse().ok()?;
    (n.to_string() == s).then_some(n)
}

fn escape_into(out: &mut String, s: &str) {
    for c in s.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '\t' => out.push_str("\\t"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            c => out.push(c),
        }
    }
}

fn unescape(s: &str) -> std::result::Result<String, &'static str> {
    let mut out = String::with_capacity(s.len());
    let mut chars = s.chars();
    while let Some(c) = chars.next() {
        if c != '\\' {
            out.push(c);
            continue;
        }
        match chars.next() {
            Some('\\') => out.push('\\'),
            Some('t') => out.push('\t'),
            Some('n') => out.push('\n'),
            Some('r') => out.push('\r'),
            Some(_) => return Err("unknown escape sequence"),
            None => return Err("dangling backslash"),
        }
    }
    Ok(out)
}

/// Reads a whole log. Blank lines are skipped; any malformed line aborts with
/// its 1-based line number.
pub fn read_logs(reader: impl BufRead) -> Result<Vec<QueryLogRecord>> {
    let mut records = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        if line.is_empty() {
            continue;
        }
        records.push(parse_at(&line, idx + 1)?);
    }
    Ok(records)
}

pub fn write_logs<'a>(
    mut writer: impl Write,
    records: impl IntoIterator<Item = &'a QueryLogRecord>,
) -> Result<()> {
    for record in records {
        writeln!(writer, "{}", write_log_line(record))?;
    }
    writer.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::query::AsrParty;
    use proptest::prelude::*;

    #[test]
    fn parses_unclicked_line() {
        let r = parse_log_line("u1\t100\tasr-3p-a\t3P\ten-US\t0\t0\trocks and").unwrap();
        assert_eq!(r.user_id(), "u1");
        assert_eq!(r.timestamp(), 100);
        assert_eq!(r.asr_party(), AsrParty::ThirdParty);
        assert_eq!(r.query().as_str(), "rocks and");
        assert!(!r.successful());
    }

    #[test]
    fn accepts_extended_interaction_with_clicks() {
        let r = parse_log_line("u1\t5\tasr\t1P\ten-US\t2\t1\troxanne").unwrap();
        assert!(r.successful());
        assert!(r.extended_interaction());
    }

    #[test]
    fn rejects_extended_interaction_without_clicks() {
        let err = parse_log_line("u1\t5\tasr\t1P\ten-US\t0\t1\troxanne").unwrap_err();
        assert!(matches!(err, Error::LogParse { .. }), "{err}");
    }

    #[test]
    fn rejects_bad_fields() {
        for line in [
            "u1\t5\tasr\t1P\ten-US\t0\troxanne",
            "u1\tfive\tasr\t1P\ten-US\t0\t0\troxanne",
            "u1\t05\tasr\t1P\ten-US\t0\t0\troxanne",
            "u1\t5\tasr\t2P\ten-US\t0\t0\troxanne",
            "u1\t5\tasr\t1P\ten-US\t-1\t0\troxanne",
            "u1\t5\tasr\t1P\ten-US\t0\t0\troxanne\\",
            "u1\t5\tasr\t1P\ten-US\t0\t0\t   ",
        ] {
            assert!(parse_log_line(line).is_err(), "{line:?}");
        }
    }

    #[test]
    fn reports_line_numbers() {
        let input = "u1\t1\tasr\t1P\ten-US\t0\t0\ta\n\nu1\tx\tasr\t1P\ten-US\t0\t0\ta\n";
        match read_logs(input.as_bytes()) {
            Err(Error::LogParse { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn escapes_tabs_and_writes_locale() {
        let r = QueryLogRecord::builder("u\t1", 7, "rocks\tand\\now")
            .build()
            .unwrap();
        let line = write_log_line(&r);
        assert_eq!(line, "u\\t1\t7\tasr\t1P\ten-US\t0\t0\trocks\\tand\\\\now");
        assert_eq!(parse_log_line(&line).unwrap(), r);
    }

    pub(crate) fn arb_record() -> impl Strategy<Value = QueryLogRecord> {
        (
            "[a-z0-9\\\\\t]{1,8}",
            any::<u64>(),
            "[\\PC\t\n\r]{0,12}[a-zA-Z][\\PC\t\n\r]{0,12}",
            "[a-z0-9\\- ]{0,8}",
            any::<bool>(),
            "[a-zA-Z\\-]{0,6}",
            0u32..20,
            any::<bool>(),
        )
            .prop_map(|(user, ts, text, source, third, locale, clicks, ext)| {
                QueryLogRecord::builder(user, ts, text)
                    .asr_source(source)
                    .asr_party(if third { AsrParty::ThirdParty } else { AsrParty::FirstParty })
                    .locale(locale)
                    .clicks(clicks)
                    .extended_interaction(ext && clicks > 0)
                    .build()
                    .unwrap()
            })
    }

    proptest! {
        #[test]
        fn line_round_trip(record in arb_record()) {
            let line = write_log_line(&record);
            prop_assert!(!line.contains('\n'));
            let parsed = parse_log_line(&line).unwrap();
            prop_assert_eq!(&parsed, &record);
            prop_assert_eq!(write_log_line(&parsed), line);
        }
    }
}
