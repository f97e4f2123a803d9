//! Monte Carlo Tree Search over DiffForest states, plus the exhaustive
//! breadth-first reference search.

use std::collections::{HashMap, VecDeque};

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cost::{space_value, CostBreakdown, CostContext, CostError, CostParams};
use crate::difftree::{DiffError, DiffForest};
use crate::mapping::{best_mapping, InterfaceSpec, MappingSpace};
use crate::relational::Catalog;
use crate::sql::QueryAst;
use crate::transform::{applicable_actions, apply, TransformAction};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    pub iterations: usize,
    /// Sampled mappings per state evaluation.
    pub k: usize,
    pub exploration: f64,
    pub max_depth: usize,
    pub seed: u64,
    /// Complete-search the five best states instead of only the best.
    pub complete_all: bool,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            iterations: 200,
            k: 10,
            exploration: 1.414,
            max_depth: 6,
            seed: 0,
            complete_all: false,
        }
    }
}

/// Reachable-state limit of [`exhaustive_search`].
pub const EXHAUSTIVE_STATE_CAP: usize = 10_000;
const COMPLETE_ALL_TOP: usize = 5;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SearchError {
    #[error("empty query log")]
    EmptyLog,
    #[error(transparent)]
    Diff(#[from] DiffError),
    #[error(transparent)]
    Cost(#[from] CostError),
    #[error("more than {cap} reachable states within depth {depth}")]
    BudgetExceeded { cap: usize, depth: usize },
}

/// One line of the search trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEvent {
    pub iteration: usize,
    pub actions: Vec<TransformAction>,
    pub cost: f64,
    pub best: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SearchResult {
    pub state: DiffForest,
    pub actions: Vec<TransformAction>,
    pub spec: InterfaceSpec,
    pub cost: CostBreakdown,
    pub config: SearchConfig,
    pub params: CostParams,
    pub states_visited: usize,
    #[serde(skip)]
    pub trace: Vec<TraceEvent>,
}

struct Node {
    state: DiffForest,
    actions: Vec<TransformAction>,
    space: MappingSpace,
    visits: usize,
    reward_sum: f64,
    /// Lowest sampled cost at or below this node.
    best_value: f64,
    /// Lowest sampled cost of this node's own state.
    own_value: f64,
    untried: Vec<TransformAction>,
    children: Vec<usize>,
}

impl Node {
    fn depth(&self) -> usize {
        self.actions.len()
    }

    fn mean_reward(&self) -> f64 {
        if self.visits == 0 {
            0.0
        } else {
            self.reward_sum / self.visits as f64
        }
    }
}

fn reward(cost: f64) -> f64 {
    if cost.is_finite() {
        1.0 / (1.0 + cost)
    } else {
        0.0
    }
}

struct Tree<'a> {
    nodes: Vec<Node>,
    by_key: HashMap<String, usize>,
    catalog: &'a Catalog,
    log: &'a [QueryAst],
    params: &'a CostParams,
}

impl<'a> Tree<'a> {
    fn node_for(
        &mut self,
        state: DiffForest,
        actions: Vec<TransformAction>,
    ) -> Result<(usize, bool), DiffError> {
        let key = state.canonical_key();
        if let Some(&i) = self.by_key.get(&key) {
            return Ok((i, false));
        }
        let space = MappingSpace::new(&state, self.catalog, self.log, self.params.screen())?;
        let untried = applicable_actions(&state, self.catalog);
        self.nodes.push(Node {
            state,
            actions,
            space,
            visits: 0,
            reward_sum: 0.0,
            best_value: f64::INFINITY,
            own_value: f64::INFINITY,
            untried,
            children: Vec::new(),
        });
        let i = self.nodes.len() - 1;
        self.by_key.insert(key, i);
        Ok((i, true))
    }

    fn uct_child(&self, n: usize, path: &[usize], c: f64) -> Option<usize> {
        let parent = &self.nodes[n];
        let ln = (parent.visits.max(1) as f64).ln();
        let mut best: Option<(f64, usize)> = None;
        for &ch in &parent.children {
            if path.contains(&ch) {
                continue;
            }
            let node = &self.nodes[ch];
            let score = if node.visits == 0 {
                f64::INFINITY
            } else {
                node.mean_reward() + c * (ln / node.visits as f64).sqrt()
            };
            if best.is_none_or(|(b, _)| score > b) {
                best = Some((score, ch));
            }
        }
        best.map(|b| b.1)
    }
}

fn finish(
    candidates: Vec<(DiffForest, Vec<TransformAction>, MappingSpace)>,
    ctx: &mut CostContext,
    config: &SearchConfig,
    states_visited: usize,
    trace: Vec<TraceEvent>,
) -> Result<SearchResult, SearchError> {
    let mut best: Option<(DiffForest, Vec<TransformAction>, InterfaceSpec, f64)> = None;
    for (state, actions, space) in candidates {
        let (spec, v) = best_mapping(&space, &mut |s| {
            ctx.interface_cost(s)
                .map(|c| c.total)
                .unwrap_or(f64::INFINITY)
        });
        if best.as_ref().is_none_or(|b| v < b.3) {
            best = Some((state, actions, spec, v));
        }
    }
    let (state, actions, spec, _) = best.ok_or(SearchError::EmptyLog)?;
    let cost = ctx.interface_cost(&spec)?;
    Ok(SearchResult {
        state,
        actions,
        spec,
        cost,
        config: config.clone(),
        params: ctx.params().clone(),
        states_visited,
        trace,
    })
}

/// UCT search from the initial state of `log`; returns the best state seen
/// with its completely searched mapping. Never worse than the initial
/// state, which is always a candidate.
pub fn search(
    log: &[QueryAst],
    catalog: &Catalog,
    params: &CostParams,
    config: &SearchConfig,
) -> Result<SearchResult, SearchError> {
    if log.is_empty() {
        return Err(SearchError::EmptyLog);
    }
    let initial = DiffForest::initial(log, catalog)?;
    let mut ctx = CostContext::new(log, params.clone());
    ctx.expresses_all(&initial)?;
    let mut tree = Tree {
        nodes: Vec::new(),
        by_key: HashMap::new(),
        catalog,
        log,
        params,
    };
    tree.node_for(initial, Vec::new())?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut trace = Vec::new();
    let mut incumbent = f64::INFINITY;

    for iteration in 0..config.iterations {
        let mut path = vec![0usize];
        let mut n = 0usize;
        loop {
            let node = &tree.nodes[n];
            if !node.untried.is_empty() || node.depth() >= config.max_depth {
                break;
            }
            match tree.uct_child(n, &path, config.exploration) {
                Some(ch) => {
                    n = ch;
                    path.push(ch);
                }
                None => break,
            }
        }
        if tree.nodes[n].depth() < config.max_depth {
            while !tree.nodes[n].untried.is_empty() {
                let action = tree.nodes[n].untried.remove(0);
                let Ok(next) = apply(&tree.nodes[n].state, &action, catalog) else {
                    continue;
                };
                let mut actions = tree.nodes[n].actions.clone();
                actions.push(action);
                let (ch, _) = tree.node_for(next, actions)?;
                if !tree.nodes[n].children.contains(&ch) {
                    tree.nodes[n].children.push(ch);
                }
                if !path.contains(&ch) {
                    n = ch;
                    path.push(ch);
                    break;
                }
            }
        }
        let value = space_value(&tree.nodes[n].space, &mut ctx, config.k, rng.next_u64());
        tree.nodes[n].own_value = tree.nodes[n].own_value.min(value);
        let r = reward(value);
        for &p in &path {
            let node = &mut tree.nodes[p];
            node.visits += 1;
            node.reward_sum += r;
            node.best_value = node.best_value.min(value);
        }
        incumbent = incumbent.min(value);
        trace.push(TraceEvent {
            iteration,
            actions: tree.nodes[n].actions.clone(),
            cost: value,
            best: incumbent,
        });
    }

    let mut ranked: Vec<usize> = (0..tree.nodes.len())
        .filter(|&i| tree.nodes[i].own_value.is_finite())
        .collect();
    ranked.sort_by(|a, b| {
        tree.nodes[*a]
            .own_value
            .total_cmp(&tree.nodes[*b].own_value)
    });
    ranked.truncate(if config.complete_all {
        COMPLETE_ALL_TOP
    } else {
        1
    });
    if !ranked.contains(&0) {
        ranked.push(0);
    }
    let states_visited = tree.nodes.len();
    let candidates = ranked
        .into_iter()
        .map(|i| {
            let n = &tree.nodes[i];
            (n.state.clone(), n.actions.clone(), n.space.clone())
        })
        .collect();
    finish(candidates, &mut ctx, config, states_visited, trace)
}

/// Every distinct state reachable within `depth` actions, in breadth-first
/// order with the action path that first reached it.
pub fn reachable_states(
    initial: &DiffForest,
    catalog: &Catalog,
    depth: usize,
    cap: usize,
) -> Result<Vec<(DiffForest, Vec<TransformAction>)>, SearchError> {
    let mut seen: HashMap<String, ()> = HashMap::new();
    let mut out = Vec::new();
    let mut queue = VecDeque::new();
    seen.insert(initial.canonical_key(), ());
    queue.push_back((initial.clone(), Vec::new()));
    while let Some((state, actions)) = queue.pop_front() {
        if actions.len() < depth {
            for a in applicable_actions(&state, catalog) {
                let Ok(next) = apply(&state, &a, catalog) else {
                    continue;
                };
                if seen.insert(next.canonical_key(), ()).is_none() {
                    if seen.len() > cap {
                        return Err(SearchError::BudgetExceeded { cap, depth });
                    }
                    let mut path = actions.clone();
                    path.push(a);
                    queue.push_back((next, path));
                }
            }
        }
        out.push((state, actions));
    }
    Ok(out)
}

/// Exact minimum over every state within `depth` actions, each with its
/// best mapping.
pub fn exhaustive_search(
    log: &[QueryAst],
    catalog: &Catalog,
    params: &CostParams,
    depth: usize,
) -> Result<SearchResult, SearchError> {
    if log.is_empty() {
        return Err(SearchError::EmptyLog);
    }
    let initial = DiffForest::initial(log, catalog)?;
    let states = reachable_states(&initial, catalog, depth, EXHAUSTIVE_STATE_CAP)?;
    let mut ctx = CostContext::new(log, params.clone());
    ctx.expresses_all(&initial)?;
    let n = states.len();
    let candidates = states
        .into_iter()
        .map(|(s, a)| {
            let space = MappingSpace::new(&s, catalog, log, params.screen())?;
            Ok((s, a, space))
        })
        .collect::<Result<Vec<_>, DiffError>>()?;
    let config = SearchConfig {
        iterations: 0,
        max_depth: depth,
        ..SearchConfig::default()
    };
    finish(candidates, &mut ctx, &config, n, Vec::new())
}
