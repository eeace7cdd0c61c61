//! The line-oriented `v`/`e` text grammar shared by graph and query files.

use std::io::BufRead;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Record {
    Vertex { line: usize, id: u64, label: String },
    Edge { line: usize, src: u64, dst: u64 },
}

fn parse_id(token: Option<&str>, line: usize, what: &str) -> Result<u64> {
    let token = token.ok_or_else(|| Error::Parse {
        line,
        message: format!("missing {what}"),
    })?;
    token.parse::<u64>().map_err(|_| Error::Parse {
        line,
        message: format!("{what} `{token}` is not a non-negative integer"),
    })
}

/// Parses one line. Blank lines and comments yield `None`.
pub fn parse_line(raw: &str, line: usize) -> Result<Option<Record>> {
    let content = match raw.find('#') {
        Some(pos) => &raw[..pos],
        None => raw,
    };
    let mut tokens = content.split_whitespace();
    let Some(kind) = tokens.next() else {
        return Ok(None);
    };
    let record = match kind {
        "v" => {
            let id = parse_id(tokens.next(), line, "node id")?;
            let label = tokens.next().ok_or_else(|| Error::Parse {
                line,
                message: "missing label".into(),
            })?;
            Record::Vertex {
                line,
                id,
                label: label.to_string(),
            }
        }
        "e" => {
            let src = parse_id(tokens.next(), line, "edge source")?;
            let dst = parse_id(tokens.next(), line, "edge target")?;
            Record::Edge { line, src, dst }
        }
        other => {
            return Err(Error::Parse {
                line,
                message: format!("unknown record type `{other}`"),
            })
        }
    };
    if let Some(extra) = tokens.next() {
        return Err(Error::Parse {
            line,
            message: format!("unexpected trailing token `{extra}`"),
        });
    }
    Ok(Some(record))
}

pub fn parse_records<R: BufRead>(source: R) -> Result<Vec<Record>> {
    let mut records = Vec::new();
    for (idx, line) in source.lines().enumerate() {
        if let Some(record) = parse_line(&line?, idx + 1)? {
            records.push(record);
        }
    }
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn comments_and_blank_lines_are_skipped() {
        let src = "# header\n\nv 1 a # trailing\ne 1 2\n";
        let recs = parse_records(src.as_bytes()).unwrap();
        assert_eq!(
            recs,
            vec![
                Record::Vertex {
                    line: 3,
                    id: 1,
                    label: "a".into()
                },
                Record::Edge {
                    line: 4,
                    src: 1,
                    dst: 2
                },
            ]
        );
    }

    #[test]
    fn malformed_lines_report_line_numbers() {
        for (src, line) in [
            ("v 1 a\nx 1 2\n", 2),
            ("v -1 a\n", 1),
            ("v 1\n", 1),
            ("e 1\n", 1),
            ("v 1 a\n\ne 1 2 3\n", 3),
        ] {
            match parse_records(src.as_bytes()) {
                Err(Error::Parse { line: l, .. }) => assert_eq!(l, line, "{src:?}"),
                other => panic!("expected parse error for {src:?}, got {other:?}"),
            }
        }
    }
}
