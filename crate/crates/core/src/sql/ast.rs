use std::fmt;

use serde::{Deserialize, Serialize};

use crate::relational::Value;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ColumnRef {
    pub table: Option<String>,
    pub name: String,
}

impl ColumnRef {
    pub fn new(name: impl Into<String>) -> Self {
        Self {
            table: None,
            name: name.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AggFunc {
    Count,
    Sum,
    Avg,
    Min,
    Max,
}

impl AggFunc {
    pub fn name(self) -> &'static str {
        match self {
            AggFunc::Count => "count",
            AggFunc::Sum => "sum",
            AggFunc::Avg => "avg",
            AggFunc::Min => "min",
            AggFunc::Max => "max",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Some(match name.to_ascii_lowercase().as_str() {
            "count" => AggFunc::Count,
            "sum" => AggFunc::Sum,
            "avg" => AggFunc::Avg,
            "min" => AggFunc::Min,
            "max" => AggFunc::Max,
            _ => return None,
        })
    }
}

/// Aggregate call; `arg == None` means `*`, which only `count` accepts.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct AggCall {
    pub func: AggFunc,
    pub arg: Option<ColumnRef>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SelectExpr {
    Column(ColumnRef),
    Agg(AggCall),
}

impl SelectExpr {
    /// Output name used when no alias is given.
    pub fn default_name(&self) -> String {
        match self {
            SelectExpr::Column(c) => c.name.clone(),
            SelectExpr::Agg(AggCall { func, arg: None }) => func.name().to_string(),
            SelectExpr::Agg(AggCall { func, arg: Some(c) }) => {
                format!("{}_{}", func.name(), c.name)
            }
        }
    }

    pub fn is_aggregate(&self) -> bool {
        matches!(self, SelectExpr::Agg(_))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SelectItem {
    pub expr: SelectExpr,
    /// Never equal to `expr.default_name()`; such aliases are dropped.
    pub alias: Option<String>,
}

impl SelectItem {
    pub fn new(expr: SelectExpr, alias: Option<String>) -> Self {
        let alias = alias.filter(|a| *a != expr.default_name());
        Self { expr, alias }
    }

    pub fn output_name(&self) -> String {
        self.alias
            .clone()
            .unwrap_or_else(|| self.expr.default_name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum CmpOp {
    #[serde(rename = "=")]
    Eq,
    #[serde(rename = "!=")]
    Ne,
    #[serde(rename = "<")]
    Lt,
    #[serde(rename = ">")]
    Gt,
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = ">=")]
    Ge,
}

impl CmpOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Eq => "=",
            CmpOp::Ne => "!=",
            CmpOp::Lt => "<",
            CmpOp::Gt => ">",
            CmpOp::Le => "<=",
            CmpOp::Ge => ">=",
        }
    }

    pub fn is_ordering(self) -> bool {
        !matches!(self, CmpOp::Eq | CmpOp::Ne)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Operand {
    Column(ColumnRef),
    Literal(Value),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Predicate {
    Cmp {
        op: CmpOp,
        lhs: Operand,
        rhs: Operand,
    },
    And(Box<Predicate>, Box<Predicate>),
    Or(Box<Predicate>, Box<Predicate>),
    Between {
        column: ColumnRef,
        low: Value,
        high: Value,
    },
    InList {
        column: ColumnRef,
        values: Vec<Value>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct OrderItem {
    pub expr: SelectExpr,
    pub descending: bool,
}

/// One query of the supported single-table subset.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct QueryAst {
    pub select: Vec<SelectItem>,
    pub from: String,
    pub filter: Option<Predicate>,
    pub group_by: Vec<ColumnRef>,
    pub order_by: Vec<OrderItem>,
    pub limit: Option<u64>,
}

/// Violation of a structural rule that the grammar alone does not enforce.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid query: {0}")]
pub struct InvalidQuery(pub String);

impl QueryAst {
    pub fn is_aggregate(&self) -> bool {
        !self.group_by.is_empty() || self.select.iter().any(|s| s.expr.is_aggregate())
    }

    /// Catalog-independent validity: grouping discipline, `*` only in
    /// `count(*)`, ordered `BETWEEN` bounds, non-empty lists.
    pub fn validate(&self) -> Result<(), InvalidQuery> {
        let bad = |m: String| Err(InvalidQuery(m));
        if self.select.is_empty() {
            return bad("empty select list".into());
        }
        let check_agg = |e: &SelectExpr| match e {
            SelectExpr::Agg(AggCall { func, arg: None }) if *func != AggFunc::Count => {
                Err(InvalidQuery(format!("{}(*) is not allowed", func.name())))
            }
            _ => Ok(()),
        };
        for item in &self.select {
            check_agg(&item.expr)?;
        }
        for item in &self.order_by {
            check_agg(&item.expr)?;
        }
        if self.is_aggregate() {
            for item in &self.select {
                if let SelectExpr::Column(c) = &item.expr {
                    if !self.group_by.iter().any(|g| g.name == c.name) {
                        return bad(format!(
                            "column `{}` is neither grouped nor aggregated",
                            c.name
                        ));
                    }
                }
            }
            for item in &self.order_by {
                if let SelectExpr::Column(c) = &item.expr {
                    let grouped = self.group_by.iter().any(|g| g.name == c.name);
                    let aliased =
                        c.table.is_none() && self.select.iter().any(|s| s.output_name() == c.name);
                    if !grouped && !aliased {
                        return bad(format!("ORDER BY column `{}` is not grouped", c.name));
                    }
                }
            }
        }
        if let Some(p) = &self.filter {
            validate_predicate(p)?;
        }
        Ok(())
    }
}

fn validate_predicate(p: &Predicate) -> Result<(), InvalidQuery> {
    match p {
        Predicate::And(a, b) | Predicate::Or(a, b) => {
            validate_predicate(a)?;
            validate_predicate(b)
        }
        Predicate::Between { low, high, .. } => match (low, high) {
            (Value::Num(lo), Value::Num(hi)) if lo > hi => Err(InvalidQuery(format!(
                "BETWEEN lower bound {lo} exceeds upper bound {hi}"
            ))),
            _ => Ok(()),
        },
        Predicate::InList { values, .. } if values.is_empty() => {
            Err(InvalidQuery("empty IN list".into()))
        }
        _ => Ok(()),
    }
}

impl fmt::Display for QueryAst {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&super::render::render_sql(self))
    }
}
