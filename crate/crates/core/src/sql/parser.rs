//! Recursive-descent parser for the single-table SELECT subset.
//!
//! ```text
//! query     := SELECT item (',' item)* FROM ident [WHERE pred]
//!              [GROUP BY column (',' column)*]
//!              [ORDER BY expr [ASC|DESC] (',' ...)*] [LIMIT integer]
//! item      := expr [[AS] ident]
//! expr      := column | agg '(' ('*' | column) ')'
//! pred      := conj (OR conj)*
//! conj      := atom (AND atom)*
//! atom      := '(' pred ')' | operand cmp operand
//!            | column BETWEEN literal AND literal
//!            | column IN '(' literal (',' literal)* ')'
//! ```

use crate::relational::Value;

use super::ast::*;
use super::ParseError;

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    QuotedIdent(String),
    Number(f64),
    Str(String),
    Sym(&'static str),
    Eof,
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    text: String,
    line: usize,
    column: usize,
}

const RESERVED: &[&str] = &[
    "SELECT", "FROM", "WHERE", "GROUP", "BY", "ORDER", "ASC", "DESC", "LIMIT", "AND", "OR",
    "BETWEEN", "IN", "AS",
];

const UNSUPPORTED: &[&str] = &[
    "JOIN",
    "INNER",
    "LEFT",
    "RIGHT",
    "FULL",
    "OUTER",
    "CROSS",
    "NATURAL",
    "ON",
    "USING",
    "UNION",
    "INTERSECT",
    "EXCEPT",
    "HAVING",
    "WITH",
    "DISTINCT",
    "LIKE",
    "ILIKE",
    "NOT",
    "IS",
    "NULL",
    "CASE",
    "OFFSET",
    "EXISTS",
    "INSERT",
    "UPDATE",
    "DELETE",
    "CREATE",
    "DROP",
    "ALTER",
    "OVER",
    "WINDOW",
    "CAST",
];

pub fn is_reserved(word: &str) -> bool {
    let upper = word.to_ascii_uppercase();
    RESERVED.contains(&upper.as_str()) || UNSUPPORTED.contains(&upper.as_str())
}

fn lex(text: &str) -> Result<Vec<Token>, ParseError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    let syntax = |m: String, line, column| ParseError::Syntax {
        message: m,
        line,
        column,
    };

    while i < chars.len() {
        let c = chars[i];
        let (start_line, start_col) = (line, col);
        let advance = |n: usize, i: &mut usize, col: &mut usize| {
            *i += n;
            *col += n;
        };
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            advance(1, &mut i, &mut col);
            continue;
        }
        if c == '-' && chars.get(i + 1) == Some(&'-') {
            while i < chars.len() && chars[i] != '\n' {
                advance(1, &mut i, &mut col);
            }
            continue;
        }
        let push = |out: &mut Vec<Token>, tok: Tok, text: String| {
            out.push(Token {
                tok,
                text,
                line: start_line,
                column: start_col,
            })
        };
        if c.is_ascii_alphabetic() || c == '_' {
            let s = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                advance(1, &mut i, &mut col);
            }
            let word: String = chars[s..i].iter().collect();
            push(&mut out, Tok::Ident(word.clone()), word);
            continue;
        }
        if c.is_ascii_digit() || (c == '.' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit()))
        {
            let s = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                advance(1, &mut i, &mut col);
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    while j < chars.len() && chars[j].is_ascii_digit() {
                        j += 1;
                    }
                    let n = j - i;
                    advance(n, &mut i, &mut col);
                }
            }
            let word: String = chars[s..i].iter().collect();
            let v = crate::relational::parse_decimal(&word).ok_or_else(|| {
                syntax(format!("malformed number `{word}`"), start_line, start_col)
            })?;
            push(&mut out, Tok::Number(v), word);
            continue;
        }
        if c == '\'' || c == '"' {
            let quote = c;
            let mut s = String::new();
            advance(1, &mut i, &mut col);
            loop {
                match chars.get(i) {
                    None => {
                        return Err(syntax(
                            "unterminated quoted text".into(),
                            start_line,
                            start_col,
                        ))
                    }
                    Some(&ch) if ch == quote => {
                        if chars.get(i + 1) == Some(&quote) {
                            s.push(quote);
                            advance(2, &mut i, &mut col);
                        } else {
                            advance(1, &mut i, &mut col);
                            break;
                        }
                    }
                    Some(&'\n') => {
                        s.push('\n');
                        i += 1;
                        line += 1;
                        col = 1;
                    }
                    Some(&ch) => {
                        s.push(ch);
                        advance(1, &mut i, &mut col);
                    }
                }
            }
            let tok = if quote == '\'' {
                Tok::Str(s.clone())
            } else {
                Tok::QuotedIdent(s.clone())
            };
            push(&mut out, tok, s);
            continue;
        }
        let two: String = chars[i..(i + 2).min(chars.len())].iter().collect();
        let sym2 = ["<=", ">=", "!=", "<>"].into_iter().find(|s| *s == two);
        if let Some(s) = sym2 {
            let canon = if s == "<>" { "!=" } else { s };
            push(&mut out, Tok::Sym(canon), s.to_string());
            advance(2, &mut i, &mut col);
            continue;
        }
        let sym1 = ["=", "<", ">", ",", "(", ")", "*", ".", ";", "-", "+"]
            .into_iter()
            .find(|s| s.starts_with(c));
        match sym1 {
            Some(s) => {
                push(&mut out, Tok::Sym(s), s.to_string());
                advance(1, &mut i, &mut col);
            }
            None => {
                return Err(syntax(
                    format!("unexpected character `{c}`"),
                    start_line,
                    start_col,
                ))
            }
        }
    }
    out.push(Token {
        tok: Tok::Eof,
        text: String::new(),
        line,
        column: col,
    });
    Ok(out)
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.toks[self.pos]
    }

    fn peek_at(&self, n: usize) -> &Token {
        &self.toks[(self.pos + n).min(self.toks.len() - 1)]
    }

    fn bump(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos < self.toks.len() - 1 {
            self.pos += 1;
        }
        t
    }

    fn error_at(&self, t: &Token, expected: &str) -> ParseError {
        if let Tok::Ident(w) = &t.tok {
            if UNSUPPORTED.contains(&w.to_ascii_uppercase().as_str()) {
                return ParseError::Unsupported {
                    feature: w.to_ascii_uppercase(),
                    line: t.line,
                    column: t.column,
                };
            }
        }
        let found = match &t.tok {
            Tok::Eof => "end of input".to_string(),
            _ => format!("`{}`", t.text),
        };
        ParseError::Syntax {
            message: format!("expected {expected}, found {found}"),
            line: t.line,
            column: t.column,
        }
    }

    fn unsupported(&self, t: &Token, feature: &str) -> ParseError {
        ParseError::Unsupported {
            feature: feature.to_string(),
            line: t.line,
            column: t.column,
        }
    }

    fn is_kw(&self, kw: &str) -> bool {
        matches!(&self.peek().tok, Tok::Ident(w) if w.eq_ignore_ascii_case(kw))
    }

    fn eat_kw(&mut self, kw: &str) -> bool {
        if self.is_kw(kw) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect_kw(&mut self, kw: &str) -> Result<(), ParseError> {
        if self.eat_kw(kw) {
            Ok(())
        } else {
            Err(self.error_at(self.peek(), kw))
        }
    }

    fn is_sym(&self, s: &str) -> bool {
        matches!(&self.peek().tok, Tok::Sym(x) if *x == s)
    }

    fn eat_sym(&mut self, s: &str) -> bool {
        if self.is_sym(s) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect_sym(&mut self, s: &str) -> Result<(), ParseError> {
        if self.eat_sym(s) {
            Ok(())
        } else {
            Err(self.error_at(self.peek(), &format!("`{s}`")))
        }
    }

    fn ident(&mut self, what: &str) -> Result<String, ParseError> {
        let t = self.peek().clone();
        match &t.tok {
            Tok::Ident(w) if !is_reserved(w) => {
                self.bump();
                Ok(w.clone())
            }
            Tok::QuotedIdent(w) => {
                self.bump();
                Ok(w.clone())
            }
            _ => Err(self.error_at(&t, what)),
        }
    }

    fn column(&mut self) -> Result<ColumnRef, ParseError> {
        let first = self.ident("column name")?;
        if self.eat_sym(".") {
            let name = self.ident("column name")?;
            Ok(ColumnRef {
                table: Some(first),
                name,
            })
        } else {
            Ok(ColumnRef::new(first))
        }
    }

    fn select_expr(&mut self) -> Result<SelectExpr, ParseError> {
        let t = self.peek().clone();
        if self.is_sym("*") {
            return Err(self.unsupported(&t, "*"));
        }
        if let Tok::Ident(w) = &t.tok {
            if let Some(func) = AggFunc::from_name(w) {
                if matches!(self.peek_at(1).tok, Tok::Sym("(")) {
                    self.bump();
                    self.bump();
                    let arg = if self.eat_sym("*") {
                        None
                    } else {
                        if self.is_kw("DISTINCT") {
                            let d = self.peek().clone();
                            return Err(self.unsupported(&d, "DISTINCT"));
                        }
                        Some(self.column()?)
                    };
                    self.expect_sym(")")?;
                    return Ok(SelectExpr::Agg(AggCall { func, arg }));
                }
            }
            if matches!(self.peek_at(1).tok, Tok::Sym("(")) && !is_reserved(w) {
                return Err(self.unsupported(&t, &format!("function {w}")));
            }
        }
        Ok(SelectExpr::Column(self.column()?))
    }

    fn select_item(&mut self) -> Result<SelectItem, ParseError> {
        let expr = self.select_expr()?;
        let alias = if self.eat_kw("AS") {
            Some(self.ident("alias")?)
        } else {
            match &self.peek().tok {
                Tok::Ident(w) if !is_reserved(w) => Some(self.ident("alias")?),
                Tok::QuotedIdent(_) => Some(self.ident("alias")?),
                _ => None,
            }
        };
        Ok(SelectItem::new(expr, alias))
    }

    fn literal(&mut self) -> Result<Value, ParseError> {
        let t = self.peek().clone();
        match &t.tok {
            Tok::Number(v) => {
                self.bump();
                Ok(Value::num(*v))
            }
            Tok::Sym("-") | Tok::Sym("+") => {
                let neg = matches!(t.tok, Tok::Sym("-"));
                self.bump();
                let n = self.peek().clone();
                match n.tok {
                    Tok::Number(v) => {
                        self.bump();
                        Ok(Value::num(if neg { -v } else { v }))
                    }
                    _ => Err(self.error_at(&n, "number")),
                }
            }
            Tok::Str(s) => {
                self.bump();
                Ok(Value::Str(s.clone()))
            }
            _ => Err(self.error_at(&t, "literal")),
        }
    }

    fn operand(&mut self) -> Result<Operand, ParseError> {
        match &self.peek().tok {
            Tok::Number(_) | Tok::Str(_) | Tok::Sym("-") | Tok::Sym("+") => {
                Ok(Operand::Literal(self.literal()?))
            }
            _ => Ok(Operand::Column(self.column()?)),
        }
    }

    fn predicate(&mut self) -> Result<Predicate, ParseError> {
        let mut lhs = self.conjunction()?;
        while self.eat_kw("OR") {
            let rhs = self.conjunction()?;
            lhs = Predicate::Or(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn conjunction(&mut self) -> Result<Predicate, ParseError> {
        let mut lhs = self.atom()?;
        while self.eat_kw("AND") {
            let rhs = self.atom()?;
            lhs = Predicate::And(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn atom(&mut self) -> Result<Predicate, ParseError> {
        if self.is_sym("(") {
            let next = self.peek_at(1).clone();
            if matches!(&next.tok, Tok::Ident(w) if w.eq_ignore_ascii_case("SELECT")) {
                return Err(self.unsupported(&next, "subquery"));
            }
            self.bump();
            let p = self.predicate()?;
            self.expect_sym(")")?;
            return Ok(p);
        }
        let lhs = self.operand()?;
        if let Operand::Column(column) = &lhs {
            if self.eat_kw("BETWEEN") {
                let low = self.literal()?;
                self.expect_kw("AND")?;
                let high = self.literal()?;
                return Ok(Predicate::Between {
                    column: column.clone(),
                    low,
                    high,
                });
            }
            if self.eat_kw("IN") {
                self.expect_sym("(")?;
                let next = self.peek().clone();
                if matches!(&next.tok, Tok::Ident(w) if w.eq_ignore_ascii_case("SELECT")) {
                    return Err(self.unsupported(&next, "subquery"));
                }
                let mut values = vec![self.literal()?];
                while self.eat_sym(",") {
                    values.push(self.literal()?);
                }
                self.expect_sym(")")?;
                return Ok(Predicate::InList {
                    column: column.clone(),
                    values,
                });
            }
        }
        let t = self.peek().clone();
        let op = match t.tok {
            Tok::Sym("=") => CmpOp::Eq,
            Tok::Sym("!=") => CmpOp::Ne,
            Tok::Sym("<") => CmpOp::Lt,
            Tok::Sym(">") => CmpOp::Gt,
            Tok::Sym("<=") => CmpOp::Le,
            Tok::Sym(">=") => CmpOp::Ge,
            _ => return Err(self.error_at(&t, "comparison operator")),
        };
        self.bump();
        let rhs = self.operand()?;
        Ok(Predicate::Cmp { op, lhs, rhs })
    }

    fn query(&mut self) -> Result<QueryAst, ParseError> {
        self.expect_kw("SELECT")?;
        let mut select = vec![self.select_item()?];
        while self.eat_sym(",") {
            select.push(self.select_item()?);
        }
        self.expect_kw("FROM")?;
        let t = self.peek().clone();
        if self.is_sym("(") {
            return Err(self.unsupported(&t, "subquery"));
        }
        let from = self.ident("table name")?;
        if self.is_sym(",") {
            let c = self.peek().clone();
            return Err(self.unsupported(&c, "multiple tables"));
        }
        // Table aliases are not supported; `FROM T x` would be ambiguous with joins.
        let filter = if self.eat_kw("WHERE") {
            Some(self.predicate()?)
        } else {
            None
        };
        let mut group_by = Vec::new();
        if self.eat_kw("GROUP") {
            self.expect_kw("BY")?;
            group_by.push(self.column()?);
            while self.eat_sym(",") {
                group_by.push(self.column()?);
            }
        }
        let mut order_by = Vec::new();
        if self.eat_kw("ORDER") {
            self.expect_kw("BY")?;
            loop {
                let expr = self.select_expr()?;
                let descending = if self.eat_kw("DESC") {
                    true
                } else {
                    self.eat_kw("ASC");
                    false
                };
                order_by.push(OrderItem { expr, descending });
                if !self.eat_sym(",") {
                    break;
                }
            }
        }
        let limit = if self.eat_kw("LIMIT") {
            let t = self.peek().clone();
            match t.tok {
                Tok::Number(v) if v >= 0.0 && v.fract() == 0.0 && v <= u64::MAX as f64 => {
                    self.bump();
                    Some(v as u64)
                }
                _ => return Err(self.error_at(&t, "non-negative integer")),
            }
        } else {
            None
        };
        self.eat_sym(";");
        let t = self.peek().clone();
        if t.tok != Tok::Eof {
            return Err(self.error_at(&t, "end of query"));
        }
        Ok(QueryAst {
            select,
            from,
            filter,
            group_by,
            order_by,
            limit,
        })
    }
}

/// Parses one query and checks its structural invariants.
pub fn parse_query(text: &str) -> Result<QueryAst, ParseError> {
    let toks = lex(text)?;
    let mut p = Parser { toks, pos: 0 };
    let q = p.query()?;
    q.validate().map_err(|e| ParseError::Invalid(e.0))?;
    Ok(q)
}
