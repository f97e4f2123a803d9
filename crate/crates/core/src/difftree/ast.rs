//! Generic labeled-tree view of [`QueryAst`] used as the substrate for
//! choice nodes.

use serde::{Deserialize, Serialize};

use crate::relational::Value;
use crate::sql::{
    AggCall, AggFunc, CmpOp, ColumnRef, Operand, OrderItem, Predicate, QueryAst, SelectExpr,
    SelectItem,
};

use super::DiffError;

/// Node label. `Query` always has six children:
/// `Select, From, Where|Empty, GroupBy|Empty, OrderBy|Empty, Limit|Empty`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Label {
    Query,
    Select,
    SelectItem { alias: Option<String> },
    Column { table: Option<String>, name: String },
    Literal { value: Value },
    Agg { func: AggFunc, star: bool },
    From { table: String },
    Where,
    GroupBy,
    OrderBy,
    OrderItem { descending: bool },
    Limit,
    Cmp { op: CmpOp },
    And,
    Or,
    Between,
    InList,
    Empty,
}

impl Label {
    /// Labels whose children form a variable-length list. `Empty` children
    /// produced by absent optional parts are dropped in these positions.
    pub fn is_list(&self) -> bool {
        matches!(
            self,
            Label::Select | Label::GroupBy | Label::OrderBy | Label::InList
        )
    }

    pub fn literal(&self) -> Option<&Value> {
        match self {
            Label::Literal { value } => Some(value),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct AstNode {
    pub label: Label,
    pub children: Vec<AstNode>,
}

impl AstNode {
    pub fn leaf(label: Label) -> Self {
        Self {
            label,
            children: Vec::new(),
        }
    }

    pub fn new(label: Label, children: Vec<AstNode>) -> Self {
        Self { label, children }
    }

    pub fn empty() -> Self {
        Self::leaf(Label::Empty)
    }

    pub fn is_empty(&self) -> bool {
        self.label == Label::Empty
    }
}

fn column(c: &ColumnRef) -> AstNode {
    AstNode::leaf(Label::Column {
        table: c.table.clone(),
        name: c.name.clone(),
    })
}

fn literal(v: &Value) -> AstNode {
    AstNode::leaf(Label::Literal { value: v.clone() })
}

fn expr(e: &SelectExpr) -> AstNode {
    match e {
        SelectExpr::Column(c) => column(c),
        SelectExpr::Agg(AggCall { func, arg }) => AstNode::new(
            Label::Agg {
                func: *func,
                star: arg.is_none(),
            },
            arg.iter().map(column).collect(),
        ),
    }
}

fn operand(o: &Operand) -> AstNode {
    match o {
        Operand::Column(c) => column(c),
        Operand::Literal(v) => literal(v),
    }
}

fn predicate(p: &Predicate) -> AstNode {
    match p {
        Predicate::Cmp { op, lhs, rhs } => {
            AstNode::new(Label::Cmp { op: *op }, vec![operand(lhs), operand(rhs)])
        }
        Predicate::And(a, b) => AstNode::new(Label::And, vec![predicate(a), predicate(b)]),
        Predicate::Or(a, b) => AstNode::new(Label::Or, vec![predicate(a), predicate(b)]),
        Predicate::Between {
            column: c,
            low,
            high,
        } => AstNode::new(Label::Between, vec![column(c), literal(low), literal(high)]),
        Predicate::InList { column: c, values } => {
            let mut children = vec![column(c)];
            children.extend(values.iter().map(literal));
            AstNode::new(Label::InList, children)
        }
    }
}

pub fn to_ast(q: &QueryAst) -> AstNode {
    let select = AstNode::new(
        Label::Select,
        q.select
            .iter()
            .map(|s| {
                AstNode::new(
                    Label::SelectItem {
                        alias: s.alias.clone(),
                    },
                    vec![expr(&s.expr)],
                )
            })
            .collect(),
    );
    let from = AstNode::leaf(Label::From {
        table: q.from.clone(),
    });
    let filter = match &q.filter {
        Some(p) => AstNode::new(Label::Where, vec![predicate(p)]),
        None => AstNode::empty(),
    };
    let group = if q.group_by.is_empty() {
        AstNode::empty()
    } else {
        AstNode::new(Label::GroupBy, q.group_by.iter().map(column).collect())
    };
    let order = if q.order_by.is_empty() {
        AstNode::empty()
    } else {
        AstNode::new(
            Label::OrderBy,
            q.order_by
                .iter()
                .map(|o| {
                    AstNode::new(
                        Label::OrderItem {
                            descending: o.descending,
                        },
                        vec![expr(&o.expr)],
                    )
                })
                .collect(),
        )
    };
    let limit = match q.limit {
        Some(n) => AstNode::new(Label::Limit, vec![literal(&Value::num(n as f64))]),
        None => AstNode::empty(),
    };
    AstNode::new(
        Label::Query,
        vec![select, from, filter, group, order, limit],
    )
}

fn bad<T>(m: impl Into<String>) -> Result<T, DiffError> {
    Err(DiffError::InvalidAst(m.into()))
}

fn arity(n: &AstNode, k: usize) -> Result<(), DiffError> {
    if n.children.len() == k {
        Ok(())
    } else {
        bad(format!(
            "{:?} expects {k} children, found {}",
            n.label,
            n.children.len()
        ))
    }
}

fn from_column(n: &AstNode) -> Result<ColumnRef, DiffError> {
    match &n.label {
        Label::Column { table, name } if n.children.is_empty() => Ok(ColumnRef {
            table: table.clone(),
            name: name.clone(),
        }),
        other => bad(format!("expected column, found {other:?}")),
    }
}

fn from_literal(n: &AstNode) -> Result<Value, DiffError> {
    match &n.label {
        Label::Literal { value } if n.children.is_empty() => Ok(value.clone()),
        other => bad(format!("expected literal, found {other:?}")),
    }
}

fn from_expr(n: &AstNode) -> Result<SelectExpr, DiffError> {
    match &n.label {
        Label::Column { .. } => Ok(SelectExpr::Column(from_column(n)?)),
        Label::Agg { func, star } => {
            if *star {
                arity(n, 0)?;
                Ok(SelectExpr::Agg(AggCall {
                    func: *func,
                    arg: None,
                }))
            } else {
                arity(n, 1)?;
                Ok(SelectExpr::Agg(AggCall {
                    func: *func,
                    arg: Some(from_column(&n.children[0])?),
                }))
            }
        }
        other => bad(format!("expected select expression, found {other:?}")),
    }
}

fn from_operand(n: &AstNode) -> Result<Operand, DiffError> {
    match &n.label {
        Label::Column { .. } => Ok(Operand::Column(from_column(n)?)),
        Label::Literal { .. } => Ok(Operand::Literal(from_literal(n)?)),
        other => bad(format!("expected operand, found {other:?}")),
    }
}

fn from_predicate(n: &AstNode) -> Result<Predicate, DiffError> {
    match &n.label {
        Label::Cmp { op } => {
            arity(n, 2)?;
            Ok(Predicate::Cmp {
                op: *op,
                lhs: from_operand(&n.children[0])?,
                rhs: from_operand(&n.children[1])?,
            })
        }
        Label::And | Label::Or => {
            arity(n, 2)?;
            let a = Box::new(from_predicate(&n.children[0])?);
            let b = Box::new(from_predicate(&n.children[1])?);
            Ok(if n.label == Label::And {
                Predicate::And(a, b)
            } else {
                Predicate::Or(a, b)
            })
        }
        Label::Between => {
            arity(n, 3)?;
            Ok(Predicate::Between {
                column: from_column(&n.children[0])?,
                low: from_literal(&n.children[1])?,
                high: from_literal(&n.children[2])?,
            })
        }
        Label::InList => {
            if n.children.len() < 2 {
                return bad("IN list needs a column and at least one value");
            }
            Ok(Predicate::InList {
                column: from_column(&n.children[0])?,
                values: n.children[1..]
                    .iter()
                    .map(from_literal)
                    .collect::<Result<_, _>>()?,
            })
        }
        other => bad(format!("expected predicate, found {other:?}")),
    }
}

/// Inverse of [`to_ast`]; also enforces the query validity rules.
pub fn from_ast(n: &AstNode) -> Result<QueryAst, DiffError> {
    if n.label != Label::Query {
        return bad(format!("expected query, found {:?}", n.label));
    }
    arity(n, 6)?;
    let c = &n.children;
    if c[0].label != Label::Select || c[0].children.is_empty() {
        return bad("expected non-empty select list");
    }
    let select = c[0]
        .children
        .iter()
        .map(|item| match &item.label {
            Label::SelectItem { alias } => {
                arity(item, 1)?;
                let expr = from_expr(&item.children[0])?;
                if alias.as_deref() == Some(expr.default_name().as_str()) {
                    return bad("alias equal to default name");
                }
                Ok(SelectItem {
                    expr,
                    alias: alias.clone(),
                })
            }
            other => bad(format!("expected select item, found {other:?}")),
        })
        .collect::<Result<Vec<_>, _>>()?;
    let from = match &c[1].label {
        Label::From { table } if c[1].children.is_empty() => table.clone(),
        other => return bad(format!("expected FROM, found {other:?}")),
    };
    let filter = match &c[2].label {
        Label::Empty => None,
        Label::Where => {
            arity(&c[2], 1)?;
            Some(from_predicate(&c[2].children[0])?)
        }
        other => return bad(format!("expected WHERE, found {other:?}")),
    };
    let group_by = match &c[3].label {
        Label::Empty => Vec::new(),
        Label::GroupBy if !c[3].children.is_empty() => c[3]
            .children
            .iter()
            .map(from_column)
            .collect::<Result<_, _>>()?,
        other => return bad(format!("expected GROUP BY, found {other:?}")),
    };
    let order_by = match &c[4].label {
        Label::Empty => Vec::new(),
        Label::OrderBy if !c[4].children.is_empty() => c[4]
            .children
            .iter()
            .map(|o| match &o.label {
                Label::OrderItem { descending } => {
                    arity(o, 1)?;
                    Ok(OrderItem {
                        expr: from_expr(&o.children[0])?,
                        descending: *descending,
                    })
                }
                other => bad(format!("expected order item, found {other:?}")),
            })
            .collect::<Result<_, _>>()?,
        other => return bad(format!("expected ORDER BY, found {other:?}")),
    };
    let limit = match &c[5].label {
        Label::Empty => None,
        Label::Limit => {
            arity(&c[5], 1)?;
            match from_literal(&c[5].children[0])? {
                Value::Num(v) if v >= 0.0 && v.fract() == 0.0 => Some(v as u64),
                other => {
                    return bad(format!(
                        "LIMIT must be a non-negative integer, found {other}"
                    ))
                }
            }
        }
        other => return bad(format!("expected LIMIT, found {other:?}")),
    };
    let q = QueryAst {
        select,
        from,
        filter,
        group_by,
        order_by,
        limit,
    };
    q.validate().map_err(|e| DiffError::InvalidAst(e.0))?;
    Ok(q)
}
