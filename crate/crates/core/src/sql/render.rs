use crate::relational::Value;

use super::ast::*;
use super::parser::is_reserved;

/// Canonical single-line SQL. `parse_query(render_sql(q)) == q` for every
/// valid `q`.
pub fn render_sql(q: &QueryAst) -> String {
    let mut out = String::from("SELECT ");
    let items: Vec<String> = q.select.iter().map(render_select_item).collect();
    out.push_str(&items.join(", "));
    out.push_str(" FROM ");
    out.push_str(&ident(&q.from));
    if let Some(p) = &q.filter {
        out.push_str(" WHERE ");
        out.push_str(&render_predicate(p));
    }
    if !q.group_by.is_empty() {
        let cols: Vec<String> = q.group_by.iter().map(render_column).collect();
        out.push_str(" GROUP BY ");
        out.push_str(&cols.join(", "));
    }
    if !q.order_by.is_empty() {
        let items: Vec<String> = q
            .order_by
            .iter()
            .map(|o| {
                let e = render_expr(&o.expr);
                if o.descending {
                    format!("{e} DESC")
                } else {
                    e
                }
            })
            .collect();
        out.push_str(" ORDER BY ");
        out.push_str(&items.join(", "));
    }
    if let Some(n) = q.limit {
        out.push_str(&format!(" LIMIT {n}"));
    }
    out
}

pub fn ident(name: &str) -> String {
    let plain = name
        .chars()
        .next()
        .is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
        && name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_')
        && !is_reserved(name);
    if plain {
        name.to_string()
    } else {
        format!("\"{}\"", name.replace('"', "\"\""))
    }
}

pub fn render_column(c: &ColumnRef) -> String {
    match &c.table {
        Some(t) => format!("{}.{}", ident(t), ident(&c.name)),
        None => ident(&c.name),
    }
}

pub fn render_literal(v: &Value) -> String {
    match v {
        Value::Num(_) => v.to_string(),
        Value::Str(s) => format!("'{}'", s.replace('\'', "''")),
    }
}

pub fn render_expr(e: &SelectExpr) -> String {
    match e {
        SelectExpr::Column(c) => render_column(c),
        SelectExpr::Agg(AggCall { func, arg }) => {
            let arg = arg.as_ref().map_or_else(|| "*".to_string(), render_column);
            format!("{}({arg})", func.name())
        }
    }
}

fn render_select_item(item: &SelectItem) -> String {
    match &item.alias {
        Some(a) => format!("{} AS {}", render_expr(&item.expr), ident(a)),
        None => render_expr(&item.expr),
    }
}

fn render_operand(o: &Operand) -> String {
    match o {
        Operand::Column(c) => render_column(c),
        Operand::Literal(v) => render_literal(v),
    }
}

pub fn render_predicate(p: &Predicate) -> String {
    match p {
        Predicate::Cmp { op, lhs, rhs } => {
            format!(
                "{} {} {}",
                render_operand(lhs),
                op.symbol(),
                render_operand(rhs)
            )
        }
        Predicate::Between { column, low, high } => format!(
            "{} BETWEEN {} AND {}",
            render_column(column),
            render_literal(low),
            render_literal(high)
        ),
        Predicate::InList { column, values } => {
            let vs: Vec<String> = values.iter().map(render_literal).collect();
            format!("{} IN ({})", render_column(column), vs.join(", "))
        }
        Predicate::And(a, b) => {
            let l = match **a {
                Predicate::Or(..) => paren(a),
                _ => render_predicate(a),
            };
            let r = match **b {
                Predicate::Or(..) | Predicate::And(..) => paren(b),
                _ => render_predicate(b),
            };
            format!("{l} AND {r}")
        }
        Predicate::Or(a, b) => {
            let r = match **b {
                Predicate::Or(..) => paren(b),
                _ => render_predicate(b),
            };
            format!("{} OR {r}", render_predicate(a))
        }
    }
}

fn paren(p: &Predicate) -> String {
    format!("({})", render_predicate(p))
}

#[cfg(test)]
mod tests {
    use super::super::parse_query;
    use super::*;

    fn roundtrip(sql: &str) -> String {
        let q = parse_query(sql).unwrap();
        let text = render_sql(&q);
        assert_eq!(parse_query(&text).unwrap(), q, "{text}");
        text
    }

    #[test]
    fn canonical_forms() {
        assert_eq!(
            roundtrip("select p,count(*) from T where a=1 group by p"),
            "SELECT p, count(*) FROM T WHERE a = 1 GROUP BY p"
        );
        assert_eq!(
            roundtrip("SELECT a FROM T WHERE a between 1 and 5"),
            "SELECT a FROM T WHERE a BETWEEN 1 AND 5"
        );
        assert_eq!(
            roundtrip("SELECT p FROM T WHERE p in (1,2)"),
            "SELECT p FROM T WHERE p IN (1, 2)"
        );
    }

    #[test]
    fn precedence_is_preserved() {
        assert_eq!(
            roundtrip("SELECT a FROM T WHERE (a = 1 OR b = 2) AND c = 3"),
            "SELECT a FROM T WHERE (a = 1 OR b = 2) AND c = 3"
        );
        assert_eq!(
            roundtrip("SELECT a FROM T WHERE a = 1 OR b = 2 AND c = 3"),
            "SELECT a FROM T WHERE a = 1 OR b = 2 AND c = 3"
        );
        roundtrip("SELECT a FROM T WHERE a = 1 AND (b = 2 AND c = 3)");
        roundtrip("SELECT a FROM T WHERE a = 1 OR (b = 2 OR c = 3)");
    }

    #[test]
    fn quoting_and_order() {
        assert_eq!(
            roundtrip("SELECT \"my col\", \"from\" FROM T WHERE s = 'it''s' ORDER BY \"my col\" DESC LIMIT 3"),
            "SELECT \"my col\", \"from\" FROM T WHERE s = 'it''s' ORDER BY \"my col\" DESC LIMIT 3"
        );
        assert_eq!(
            roundtrip("SELECT a, sum(b) AS total FROM T GROUP BY a ORDER BY a ASC"),
            "SELECT a, sum(b) AS total FROM T GROUP BY a ORDER BY a"
        );
        assert_eq!(
            roundtrip("SELECT a FROM T WHERE a > -2.5"),
            "SELECT a FROM T WHERE a > -2.5"
        );
    }
}
