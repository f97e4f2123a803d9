#![allow(dead_code)]

use std::collections::BTreeSet;
use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use vizgen_core::difftree::{enumerate_queries, expresses, result_schema, DiffForest};
use vizgen_core::relational::{Catalog, ColumnType, Table};
use vizgen_core::search::reachable_states;
use vizgen_core::sql::{parse_log, parse_query, QueryAst};
use vizgen_core::transform::{applicable_actions, apply, TransformAction};

pub fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

pub fn dataset(name: &str) -> Catalog {
    Catalog::from_dir(fixtures().join("datasets").join(name)).unwrap()
}

pub fn log(name: &str) -> Vec<QueryAst> {
    let text = std::fs::read_to_string(fixtures().join(name)).unwrap();
    parse_log(&text)
        .unwrap()
        .into_iter()
        .map(|l| l.ast)
        .collect()
}

pub fn q(sql: &str) -> QueryAst {
    parse_query(sql).unwrap()
}

/// Random table R(x num small, y num wide, z str) with 8..30 rows.
pub fn random_catalog(rng: &mut ChaCha8Rng) -> Catalog {
    let rows = rng.random_range(8..30);
    let mut csv = String::from("x,y,z\n");
    for _ in 0..rows {
        let x = rng.random_range(0..5);
        let y = rng.random_range(0..40);
        let z = ["u", "v", "w"][rng.random_range(0..3)];
        csv.push_str(&format!("{x},{y},{z}\n"));
    }
    let mut c = Catalog::new();
    c.insert(Table::from_csv_reader("R", csv.as_bytes()).unwrap());
    c
}

fn random_where(rng: &mut ChaCha8Rng) -> String {
    let lit = |rng: &mut ChaCha8Rng, hi: i32| rng.random_range(0..hi);
    match rng.random_range(0..9) {
        0 => String::new(),
        1 => format!(" WHERE x = {}", lit(rng, 5)),
        2 => format!(" WHERE y > {}", lit(rng, 40)),
        3 => format!(" WHERE z = '{}'", ["u", "v", "w"][rng.random_range(0..3)]),
        4 => {
            let a = lit(rng, 20);
            format!(" WHERE y BETWEEN {a} AND {}", a + lit(rng, 20))
        }
        5 => format!(" WHERE x IN ({}, {})", lit(rng, 5), lit(rng, 5)),
        6 => format!(" WHERE x = {} AND y < {}", lit(rng, 5), lit(rng, 40)),
        7 => format!(" WHERE x = {} OR z = 'v'", lit(rng, 5)),
        _ => format!(
            " WHERE y >= {} AND y <= {}",
            lit(rng, 20),
            20 + lit(rng, 20)
        ),
    }
}

/// A random query over R in the supported subset.
pub fn random_query(rng: &mut ChaCha8Rng) -> QueryAst {
    let w = random_where(rng);
    let sql = match rng.random_range(0..7) {
        0 => format!("SELECT x, count(*) FROM R{w} GROUP BY x"),
        1 => format!("SELECT z, sum(y) FROM R{w} GROUP BY z"),
        2 => format!("SELECT x, y FROM R{w}"),
        3 => format!("SELECT x, max(y) FROM R{w} GROUP BY x"),
        4 => format!("SELECT y FROM R{w}"),
        5 => format!(
            "SELECT y, x FROM R{w} ORDER BY y LIMIT {}",
            rng.random_range(1..10)
        ),
        _ => format!("SELECT z, x FROM R{w}"),
    };
    parse_query(&sql).unwrap_or_else(|e| panic!("{sql}: {e}"))
}

pub fn random_log(seed: u64) -> (Catalog, Vec<QueryAst>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let catalog = random_catalog(&mut rng);
    let n = rng.random_range(2..=4);
    let log = (0..n).map(|_| random_query(&mut rng)).collect();
    (catalog, log)
}

/// Applies the first applicable action of each requested kind in turn.
pub fn apply_kinds(log: &[QueryAst], catalog: &Catalog, kinds: &[&str]) -> DiffForest {
    let mut state = DiffForest::initial(log, catalog).unwrap();
    for k in kinds {
        let a = applicable_actions(&state, catalog)
            .into_iter()
            .find(|a| {
                matches!(
                    (a, *k),
                    (TransformAction::Cluster { .. }, "cluster")
                        | (TransformAction::Split { .. }, "split")
                        | (TransformAction::Pushdown { .. }, "pushdown")
                )
            })
            .unwrap_or_else(|| panic!("no {k} action"));
        state = apply(&state, &a, catalog).unwrap();
    }
    state
}

const CAP: usize = 4096;

fn queries(f: &DiffForest) -> (BTreeSet<QueryAst>, bool) {
    let mut out = BTreeSet::new();
    let mut truncated = false;
    for t in &f.trees {
        let e = enumerate_queries(t, CAP).unwrap();
        truncated |= e.truncated;
        out.extend(e.queries);
    }
    (out, truncated)
}

fn schemas(f: &DiffForest, c: &Catalog) -> BTreeSet<Vec<ColumnType>> {
    f.trees
        .iter()
        .map(|t| result_schema(t, c).unwrap().types())
        .collect()
}

/// Checks every applicable action of every state within depth 2.
pub fn expressiveness_violations(seed: u64) -> Vec<String> {
    let (catalog, log) = random_log(seed);
    let initial = DiffForest::initial(&log, &catalog).unwrap();
    let mut out = Vec::new();
    for (state, _) in reachable_states(&initial, &catalog, 2, 2000).unwrap() {
        let (before, _) = queries(&state);
        let sb = schemas(&state, &catalog);
        for a in applicable_actions(&state, &catalog) {
            let next = apply(&state, &a, &catalog).unwrap();
            let (after, truncated) = queries(&next);
            for q in &before {
                let kept = if truncated {
                    next.trees.iter().any(|t| expresses(t, q).is_some())
                } else {
                    after.contains(q)
                };
                if !kept {
                    out.push(format!("seed {seed}: {a} loses `{q}`"));
                }
            }
            if schemas(&next, &catalog) != sb {
                out.push(format!("seed {seed}: {a} changes result schemas"));
            }
        }
    }
    out
}
