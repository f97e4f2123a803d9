//! Interface cost: manipulation and navigation time over the query log plus
//! a penalty for layouts larger than the screen.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::difftree::{
    expand, witnesses, AstNode, Binding, DiffForest, DiffNode, DiffTree, NodeId, Selection, TreeId,
    WITNESS_CAP,
};
use crate::mapping::{
    path_distance, sample_mapping, InterfaceSpec, MappingSpace, Size, VisEvent, WidgetType,
};
use crate::relational::Catalog;
use crate::sql::QueryAst;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostParams {
    pub button_list: f64,
    pub radio_list: f64,
    pub dropdown: f64,
    pub toggle: f64,
    pub checkbox_item: f64,
    pub slider: f64,
    pub range_slider: f64,
    pub click: f64,
    pub multi_click_item: f64,
    pub brush: f64,
    pub pan_zoom: f64,
    pub nav_unit: f64,
    pub overflow_weight: f64,
    pub screen_width: f64,
    pub screen_height: f64,
}

impl Default for CostParams {
    fn default() -> Self {
        Self {
            button_list: 1.0,
            radio_list: 1.0,
            dropdown: 1.5,
            toggle: 0.5,
            checkbox_item: 0.8,
            slider: 2.0,
            range_slider: 2.5,
            click: 1.0,
            multi_click_item: 0.8,
            brush: 2.0,
            pan_zoom: 2.5,
            nav_unit: 0.1,
            overflow_weight: 10.0,
            screen_width: 1280.0,
            screen_height: 800.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CostError {
    #[error("interface cannot express query {index}: {query}")]
    NotExpressive { index: usize, query: String },
    #[error("cost config line {line}: {message}")]
    Config { line: usize, message: String },
}

impl CostParams {
    pub fn screen(&self) -> Size {
        Size::new(self.screen_width, self.screen_height)
    }

    pub fn with_screen(mut self, screen: Size) -> Self {
        self.screen_width = screen.width;
        self.screen_height = screen.height;
        self
    }

    fn field(&mut self, key: &str) -> Option<&mut f64> {
        Some(match key {
            "button_list" => &mut self.button_list,
            "radio_list" => &mut self.radio_list,
            "dropdown" => &mut self.dropdown,
            "toggle" => &mut self.toggle,
            "checkbox_item" => &mut self.checkbox_item,
            "slider" => &mut self.slider,
            "range_slider" => &mut self.range_slider,
            "click" => &mut self.click,
            "multi_click_item" => &mut self.multi_click_item,
            "brush" => &mut self.brush,
            "pan_zoom" => &mut self.pan_zoom,
            "nav_unit" => &mut self.nav_unit,
            "overflow_weight" => &mut self.overflow_weight,
            "screen_width" => &mut self.screen_width,
            "screen_height" => &mut self.screen_height,
            _ => return None,
        })
    }

    /// Parses `key = value` lines over the defaults. `#` starts a comment.
    pub fn from_config(text: &str) -> Result<Self, CostError> {
        let mut p = Self::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |message: String| CostError::Config {
                line: i + 1,
                message,
            };
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| err(format!("expected key=value, got `{line}`")))?;
            let (k, v) = (k.trim(), v.trim());
            let value: f64 = v
                .parse()
                .map_err(|_| err(format!("`{v}` is not a number")))?;
            if !(value.is_finite() && value > 0.0) {
                return Err(err(format!("`{k}` must be positive")));
            }
            *p.field(k)
                .ok_or_else(|| err(format!("unknown key `{k}`")))? = value;
        }
        Ok(p)
    }

    /// Every constant except the screen multiplied by `s`.
    pub fn scaled(&self, s: f64) -> Self {
        let mut p = self.clone();
        for k in [
            "button_list",
            "radio_list",
            "dropdown",
            "toggle",
            "checkbox_item",
            "slider",
            "range_slider",
            "click",
            "multi_click_item",
            "brush",
            "pan_zoom",
            "nav_unit",
            "overflow_weight",
        ] {
            if let Some(f) = p.field(k) {
                *f *= s;
            }
        }
        p
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostBreakdown {
    pub manipulation: f64,
    pub navigation: f64,
    pub layout_penalty: f64,
    pub total: f64,
}

impl CostBreakdown {
    pub fn new(manipulation: f64, navigation: f64, layout_penalty: f64) -> Self {
        Self {
            manipulation,
            navigation,
            layout_penalty,
            total: manipulation + navigation + layout_penalty,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Charge {
    /// Once per step in which the component changes.
    Once(f64),
    /// Per item added or removed.
    PerItem(f64),
}

struct Component {
    leaf: String,
    charge: Charge,
}

fn widget_charge(w: WidgetType, p: &CostParams) -> Charge {
    match w {
        WidgetType::ButtonList => Charge::Once(p.button_list),
        WidgetType::RadioList => Charge::Once(p.radio_list),
        WidgetType::Dropdown => Charge::Once(p.dropdown),
        WidgetType::Slider => Charge::Once(p.slider),
        WidgetType::RangeSlider => Charge::Once(p.range_slider),
        WidgetType::Toggle => Charge::Once(p.toggle),
        WidgetType::CheckboxList => Charge::PerItem(p.checkbox_item),
    }
}

fn event_charge(e: VisEvent, p: &CostParams) -> Charge {
    match e {
        VisEvent::Click => Charge::Once(p.click),
        VisEvent::MultiClick => Charge::PerItem(p.multi_click_item),
        VisEvent::BrushX => Charge::Once(p.brush),
        VisEvent::PanZoom => Charge::Once(p.pan_zoom),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
enum Item {
    Child(usize),
    Instance(Vec<AstNode>),
}

/// Items selected by a SUBSET or MULTI selection, comparable across
/// bindings.
fn items(sel: Option<&Selection>, node: Option<&DiffNode>) -> BTreeSet<Item> {
    match sel {
        Some(Selection::Subset(idx)) => idx.iter().map(|i| Item::Child(*i)).collect(),
        Some(Selection::Repeat(reps)) => {
            let Some(template) = node.and_then(|n| n.children().first()) else {
                return BTreeSet::new();
            };
            reps.iter()
                .filter_map(|b| expand(template, b).ok())
                .map(Item::Instance)
                .collect()
        }
        _ => BTreeSet::new(),
    }
}

/// Cost evaluation for one log; caches witnesses per tree.
pub struct CostContext {
    log: Vec<QueryAst>,
    params: CostParams,
    witnesses: HashMap<DiffTree, Vec<Vec<Binding>>>,
}

impl CostContext {
    pub fn new(log: &[QueryAst], params: CostParams) -> Self {
        Self {
            log: log.to_vec(),
            params,
            witnesses: HashMap::new(),
        }
    }

    pub fn params(&self) -> &CostParams {
        &self.params
    }

    pub fn log(&self) -> &[QueryAst] {
        &self.log
    }

    fn tree_witnesses(&mut self, tree: &DiffTree) -> &Vec<Vec<Binding>> {
        let log = &self.log;
        self.witnesses.entry(tree.clone()).or_insert_with(|| {
            log.iter()
                .map(|q| witnesses(tree, q, WITNESS_CAP))
                .collect()
        })
    }

    /// Whether every logged query is expressed by some tree of the forest.
    pub fn expresses_all(&mut self, forest: &DiffForest) -> Result<(), CostError> {
        for i in 0..self.log.len() {
            if !forest
                .trees
                .iter()
                .any(|t| !self.tree_witnesses(t)[i].is_empty())
            {
                return Err(CostError::NotExpressive {
                    index: i,
                    query: self.log[i].to_string(),
                });
            }
        }
        Ok(())
    }

    pub fn interface_cost(&mut self, spec: &InterfaceSpec) -> Result<CostBreakdown, CostError> {
        let p = self.params.clone();
        let mut comps: Vec<Component> = Vec::new();
        let mut node_comp: BTreeMap<NodeId, usize> = BTreeMap::new();
        for w in &spec.widgets {
            for t in &w.targets {
                node_comp.insert(*t, comps.len());
            }
            comps.push(Component {
                leaf: w.id.clone(),
                charge: widget_charge(w.widget, &p),
            });
        }
        for vi in &spec.vis_interactions {
            for t in &vi.targets {
                node_comp.insert(*t, comps.len());
            }
            comps.push(Component {
                leaf: vi.source.clone(),
                charge: event_charge(vi.event, &p),
            });
        }
        let paths = spec.layout.leaf_paths();
        let order: BTreeMap<&str, usize> = spec
            .layout
            .leaves()
            .into_iter()
            .enumerate()
            .map(|(i, l)| (l, i))
            .collect();
        let vis_leaf: BTreeMap<TreeId, String> = spec
            .visualizations
            .iter()
            .map(|v| (v.tree, v.id.clone()))
            .collect();
        let dist = |a: &Option<String>, b: &str| -> f64 {
            match a {
                None => 0.0,
                Some(a) => match (paths.get(a), paths.get(b)) {
                    (Some(x), Some(y)) => path_distance(x, y) as f64 * p.nav_unit,
                    _ => 0.0,
                },
            }
        };

        let mut state: BTreeMap<TreeId, Binding> = spec.defaults.clone();
        let mut focus: Option<String> = None;
        let (mut manipulation, mut navigation) = (0.0, 0.0);
        for i in 0..self.log.len() {
            // (cost, manipulation, navigation, tree, witness, new focus)
            let mut best: Option<(f64, f64, f64, TreeId, Binding, Option<String>)> = None;
            for tree in &spec.forest.trees {
                let ws = self.tree_witnesses(tree)[i].clone();
                let cur = state.get(&tree.id).cloned().unwrap_or_default();
                for w in ws {
                    let mut charged: BTreeMap<usize, f64> = BTreeMap::new();
                    for (node, sel) in &w.0 {
                        let old = cur.get(*node);
                        if old == Some(sel) {
                            continue;
                        }
                        let Some(&c) = node_comp.get(node) else {
                            continue;
                        };
                        let amount = match comps[c].charge {
                            Charge::Once(v) => v,
                            Charge::PerItem(v) => {
                                let n = tree.find(*node);
                                let a = items(old, n);
                                let b = items(Some(sel), n);
                                v * a.symmetric_difference(&b).count() as f64
                            }
                        };
                        if amount > 0.0 {
                            let e = charged.entry(c).or_insert(0.0);
                            *e = match comps[c].charge {
                                Charge::Once(v) => v,
                                Charge::PerItem(_) => *e + amount,
                            };
                        }
                    }
                    let m: f64 = charged.values().sum();
                    let mut touched: Vec<&str> =
                        charged.keys().map(|c| comps[*c].leaf.as_str()).collect();
                    touched.sort_by_key(|l| order.get(l).copied().unwrap_or(usize::MAX));
                    touched.dedup();
                    let mut f = focus.clone();
                    let mut nav = 0.0;
                    if touched.is_empty() {
                        if let Some(v) = vis_leaf.get(&tree.id) {
                            nav += dist(&f, v);
                            f = Some(v.clone());
                        }
                    } else {
                        for l in touched {
                            nav += dist(&f, l);
                            f = Some(l.to_string());
                        }
                    }
                    let total = m + nav;
                    if best.as_ref().is_none_or(|b| total < b.0) {
                        best = Some((total, m, nav, tree.id, w.clone(), f));
                    }
                }
            }
            let Some((_, m, nav, tree, w, f)) = best else {
                return Err(CostError::NotExpressive {
                    index: i,
                    query: self.log[i].to_string(),
                });
            };
            manipulation += m;
            navigation += nav;
            let s = state.entry(tree).or_default();
            for (k, v) in w.0 {
                s.insert(k, v);
            }
            focus = f;
        }
        let size = spec.layout.size();
        let ratio = (size.width * size.height) / (p.screen_width * p.screen_height);
        let layout_penalty = p.overflow_weight * (ratio - 1.0).max(0.0);
        Ok(CostBreakdown::new(manipulation, navigation, layout_penalty))
    }
}

pub fn interface_cost(
    spec: &InterfaceSpec,
    log: &[QueryAst],
    params: &CostParams,
) -> Result<CostBreakdown, CostError> {
    CostContext::new(log, params.clone()).interface_cost(spec)
}

/// Per-sample seeds derived from `seed`; the first k seeds do not depend on
/// how many are drawn.
pub fn sample_seeds(seed: u64, k: usize) -> Vec<u64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..k).map(|_| rng.next_u64()).collect()
}

/// Lowest cost over `k` sampled mappings of the space.
pub fn space_value(space: &MappingSpace, ctx: &mut CostContext, k: usize, seed: u64) -> f64 {
    sample_seeds(seed, k.max(1))
        .into_iter()
        .map(|s| {
            ctx.interface_cost(&sample_mapping(space, s))
                .map(|c| c.total)
                .unwrap_or(f64::INFINITY)
        })
        .fold(f64::INFINITY, f64::min)
}

pub fn state_value(
    state: &DiffForest,
    log: &[QueryAst],
    catalog: &Catalog,
    params: &CostParams,
    k: usize,
    seed: u64,
) -> Result<f64, crate::difftree::DiffError> {
    let space = MappingSpace::new(state, catalog, log, params.screen())?;
    let mut ctx = CostContext::new(log, params.clone());
    Ok(space_value(&space, &mut ctx, k, seed))
}
