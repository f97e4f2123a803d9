//! Query-log files: UTF-8 text, queries separated by `;` or starting on a
//! new line with `SELECT`; `--` comments run to end of line.

use super::ast::QueryAst;
use super::{parse_query, ParseError};

#[derive(Debug, Clone, PartialEq)]
pub struct LoggedQuery {
    /// Source text with comments removed and surrounding whitespace trimmed.
    pub text: String,
    pub ast: QueryAst,
}

struct Piece {
    text: String,
    line: usize,
    column: usize,
}

fn split_log(source: &str) -> Vec<Piece> {
    let mut pieces = Vec::new();
    let mut cur = String::new();
    let (mut start_line, mut start_col) = (1, 1);
    let (mut line, mut col) = (1usize, 1usize);
    let mut quote: Option<char> = None;
    let mut comment = false;
    let mut at_line_start = true;

    let flush = |cur: &mut String, pieces: &mut Vec<Piece>, l: usize, c: usize| {
        // Leading whitespace shifts the reported start.
        let mut l = l;
        let mut c = c;
        for ch in cur.chars() {
            if ch == '\n' {
                l += 1;
                c = 1;
            } else if ch.is_whitespace() {
                c += 1;
            } else {
                break;
            }
        }
        let text = cur.trim().to_string();
        if !text.is_empty() {
            pieces.push(Piece {
                text,
                line: l,
                column: c,
            });
        }
        cur.clear();
    };

    let chars: Vec<char> = source.chars().collect();
    let mut i = 0;
    while i < chars.len() {
        let ch = chars[i];
        if comment {
            if ch == '\n' {
                comment = false;
            } else {
                i += 1;
                col += 1;
                continue;
            }
        }
        match quote {
            Some(q) => {
                cur.push(ch);
                if ch == q {
                    quote = None;
                }
            }
            None => {
                if at_line_start && !ch.is_whitespace() {
                    at_line_start = false;
                    let rest: String = chars[i..(i + 6).min(chars.len())].iter().collect();
                    let boundary = chars
                        .get(i + 6)
                        .is_none_or(|c| !c.is_ascii_alphanumeric() && *c != '_');
                    if rest.eq_ignore_ascii_case("SELECT") && boundary && !cur.trim().is_empty() {
                        flush(&mut cur, &mut pieces, start_line, start_col);
                        start_line = line;
                        start_col = col;
                    }
                }
                if ch == '-' && chars.get(i + 1) == Some(&'-') {
                    comment = true;
                    i += 2;
                    col += 2;
                    continue;
                } else if ch == ';' {
                    flush(&mut cur, &mut pieces, start_line, start_col);
                    start_line = line;
                    start_col = col + 1;
                } else {
                    if ch == '\'' || ch == '"' {
                        quote = Some(ch);
                    }
                    cur.push(ch);
                }
            }
        }
        if ch == '\n' {
            line += 1;
            col = 1;
            at_line_start = quote.is_none();
        } else {
            col += 1;
        }
        i += 1;
    }
    flush(&mut cur, &mut pieces, start_line, start_col);
    pieces
}

/// Parses every query of a log. Error positions refer to the whole file.
pub fn parse_log(source: &str) -> Result<Vec<LoggedQuery>, ParseError> {
    split_log(source)
        .into_iter()
        .map(|p| {
            parse_query(&p.text)
                .map(|ast| LoggedQuery {
                    text: p.text.clone(),
                    ast,
                })
                .map_err(|e| e.shifted(p.line, p.column))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn semicolons_lines_and_comments() {
        let log = "-- header\nSELECT a FROM T; SELECT b FROM T -- trailing\n\nSELECT p,\n  count(*) FROM T GROUP BY p\nSELECT q FROM T";
        let qs = parse_log(log).unwrap();
        let texts: Vec<&str> = qs.iter().map(|q| q.text.as_str()).collect();
        assert_eq!(
            texts,
            vec![
                "SELECT a FROM T",
                "SELECT b FROM T",
                "SELECT p,\n  count(*) FROM T GROUP BY p",
                "SELECT q FROM T"
            ]
        );
    }

    #[test]
    fn semicolon_inside_string_is_kept() {
        let qs = parse_log("SELECT a FROM T WHERE s = 'x;y'").unwrap();
        assert_eq!(qs.len(), 1);
    }

    #[test]
    fn errors_report_file_positions() {
        let err = parse_log("SELECT a FROM T;\n\nSELECT a FROM T WHERE").unwrap_err();
        match err {
            ParseError::Syntax { line, column, .. } => assert_eq!((line, column), (3, 22)),
            other => panic!("{other:?}"),
        }
        let err = parse_log("SELECT a FROM T; SELECT b FROM T WHER a = 1").unwrap_err();
        match err {
            ParseError::Syntax { line, column, .. } => assert_eq!((line, column), (1, 34)),
            other => panic!("{other:?}"),
        }
    }
}
