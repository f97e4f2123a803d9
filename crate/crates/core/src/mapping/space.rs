use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::difftree::{
    expresses, Binding, ChoiceKind, DiffError, DiffForest, DiffNode, Selection, TreeId,
};
use crate::relational::Catalog;
use crate::sql::QueryAst;

use super::analysis::{analyze, template_items, Slot, SlotTarget, TreeAnalysis};
use super::candidates::{
    candidate_vis_interactions, candidate_visualizations, candidate_widgets, pan_zoom_candidates,
    VisCandidate,
};
use super::layout::{best_layout_index, layout_candidate, layout_count};
use super::spec::{InterfaceSpec, Size, VisSpec, WidgetSpec, SPEC_VERSION};

/// Largest candidate product searched exhaustively by [`best_mapping`].
pub const COMPLETE_SEARCH_CAP: usize = 20_000;
pub const BEAM_WIDTH: usize = 32;

#[derive(Debug, Clone, PartialEq)]
pub enum Part {
    Widget(WidgetSpec),
    Vis(VisCandidate),
}

/// One or two slots mapped together; each option is a list of parts
/// covering all of them.
#[derive(Debug, Clone)]
pub struct Unit {
    pub tree: TreeId,
    pub slots: Vec<Slot>,
    pub options: Vec<Vec<Part>>,
}

/// Every candidate for every decision of an interface mapping over one
/// state.
#[derive(Debug, Clone)]
pub struct MappingSpace {
    pub forest: DiffForest,
    pub trees: Vec<(TreeAnalysis, Vec<VisSpec>)>,
    pub units: Vec<Unit>,
    pub defaults: BTreeMap<TreeId, Binding>,
    pub screen: Size,
}

/// Indices into a [`MappingSpace`]: a visualization per tree, an option per
/// unit and a layout candidate.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Choice {
    pub vis: Vec<usize>,
    pub options: Vec<usize>,
    pub layout: usize,
}

fn default_selection(kind: ChoiceKind, children: &[DiffNode]) -> Selection {
    match kind {
        ChoiceKind::Any => Selection::Index(0),
        ChoiceKind::Opt => Selection::Present(true),
        ChoiceKind::Subset => Selection::Subset((0..children.len()).collect()),
        ChoiceKind::Multi => {
            let first = template_items(&children[0])
                .into_iter()
                .next()
                .map(|(b, _)| b);
            Selection::Repeat(vec![first.unwrap_or_default()])
        }
    }
}

/// Fills every choice node outside MULTI templates that `b` leaves open.
pub fn complete_binding(node: &DiffNode, b: &mut Binding) {
    if let DiffNode::Choice { id, kind, children } = node {
        if b.get(*id).is_none() {
            b.insert(*id, default_selection(*kind, children));
        }
        if *kind == ChoiceKind::Multi {
            return;
        }
    }
    for c in node.children() {
        complete_binding(c, b);
    }
}

/// Witness of the first logged query the tree expresses, completed with
/// default selections.
pub fn default_binding(tree: &crate::difftree::DiffTree, log: &[QueryAst]) -> Binding {
    let mut b = log
        .iter()
        .find_map(|q| expresses(tree, q))
        .unwrap_or_default();
    complete_binding(&tree.root, &mut b);
    b
}

fn build_units(trees: &[(TreeAnalysis, Vec<VisSpec>)], catalog: &Catalog) -> Vec<Unit> {
    let single = |slot: &Slot| -> Vec<Vec<Part>> {
        let mut out: Vec<Vec<Part>> = candidate_widgets(slot, catalog)
            .into_iter()
            .map(|w| vec![Part::Widget(w)])
            .collect();
        out.extend(
            candidate_vis_interactions(slot, trees, catalog)
                .into_iter()
                .map(|v| vec![Part::Vis(v)]),
        );
        out
    };
    let mut units = Vec::new();
    for (a, _) in trees {
        let mut paired = vec![false; a.slots.len()];
        for i in 0..a.slots.len() {
            if paired[i] {
                continue;
            }
            let si = &a.slots[i];
            let mut unit = None;
            if matches!(si.target, SlotTarget::Range { .. }) {
                for j in i + 1..a.slots.len() {
                    let sj = &a.slots[j];
                    if paired[j] || !matches!(sj.target, SlotTarget::Range { .. }) {
                        continue;
                    }
                    let (x, y, mut pz) = (si, sj, pan_zoom_candidates(si, sj, trees));
                    let (x, y) = if pz.is_empty() {
                        pz = pan_zoom_candidates(sj, si, trees);
                        (sj, si)
                    } else {
                        (x, y)
                    };
                    if pz.is_empty() {
                        continue;
                    }
                    paired[j] = true;
                    let mut options: Vec<Vec<Part>> =
                        pz.into_iter().map(|v| vec![Part::Vis(v)]).collect();
                    let (ox, oy) = (single(x), single(y));
                    for a in &ox {
                        for b in &oy {
                            options.push(a.iter().chain(b).cloned().collect());
                        }
                    }
                    unit = Some(Unit {
                        tree: a.tree,
                        slots: vec![x.clone(), y.clone()],
                        options,
                    });
                    break;
                }
            }
            paired[i] = true;
            units.push(unit.unwrap_or_else(|| Unit {
                tree: a.tree,
                slots: vec![si.clone()],
                options: single(si),
            }));
        }
    }
    units
}

/// Whether adding `edges` to the tree dependency graph keeps it acyclic.
fn acyclic(edges: &[(TreeId, TreeId)]) -> bool {
    let mut adj: BTreeMap<TreeId, Vec<TreeId>> = BTreeMap::new();
    for (a, b) in edges {
        if a != b {
            adj.entry(*a).or_default().push(*b);
        }
    }
    fn visit(
        n: TreeId,
        adj: &BTreeMap<TreeId, Vec<TreeId>>,
        state: &mut BTreeMap<TreeId, u8>,
    ) -> bool {
        match state.get(&n) {
            Some(1) => return false,
            Some(2) => return true,
            _ => {}
        }
        state.insert(n, 1);
        for m in adj.get(&n).into_iter().flatten() {
            if !visit(*m, adj, state) {
                return false;
            }
        }
        state.insert(n, 2);
        true
    }
    let mut state = BTreeMap::new();
    adj.keys().all(|k| visit(*k, &adj, &mut state))
}

fn option_edges(opt: &[Part]) -> impl Iterator<Item = (TreeId, TreeId)> + '_ {
    opt.iter().filter_map(|p| match p {
        Part::Vis(v) => Some((v.source_tree, v.spec.tree)),
        Part::Widget(_) => None,
    })
}

impl MappingSpace {
    pub fn new(
        forest: &DiffForest,
        catalog: &Catalog,
        log: &[QueryAst],
        screen: Size,
    ) -> Result<Self, DiffError> {
        let mut trees = Vec::with_capacity(forest.trees.len());
        for t in &forest.trees {
            let a = analyze(t, catalog)?;
            let vis = candidate_visualizations(&a);
            trees.push((a, vis));
        }
        let units = build_units(&trees, catalog);
        let defaults = forest
            .trees
            .iter()
            .map(|t| (t.id, default_binding(t, log)))
            .collect();
        Ok(Self {
            forest: forest.clone(),
            trees,
            units,
            defaults,
            screen,
        })
    }

    fn tree_pos(&self, id: TreeId) -> Option<usize> {
        self.trees.iter().position(|(a, _)| a.tree == id)
    }

    /// Whether the option's chart interactions use the chosen charts.
    pub fn option_fits(&self, opt: &[Part], vis: &[usize]) -> bool {
        opt.iter().all(|p| match p {
            Part::Widget(_) => true,
            Part::Vis(v) => self
                .tree_pos(v.source_tree)
                .is_some_and(|i| vis[i] == v.source_vis),
        })
    }

    /// Options of unit `u` usable with `vis` that keep `edges` acyclic.
    pub fn valid_options(&self, u: usize, vis: &[usize], edges: &[(TreeId, TreeId)]) -> Vec<usize> {
        self.units[u]
            .options
            .iter()
            .enumerate()
            .filter(|(_, o)| {
                self.option_fits(o, vis) && {
                    let mut e = edges.to_vec();
                    e.extend(option_edges(o));
                    acyclic(&e)
                }
            })
            .map(|(i, _)| i)
            .collect()
    }

    pub fn is_valid(&self, c: &Choice) -> bool {
        let mut edges = Vec::new();
        for (u, &o) in c.options.iter().enumerate() {
            let opt = &self.units[u].options[o];
            if !self.option_fits(opt, &c.vis) {
                return false;
            }
            edges.extend(option_edges(opt));
        }
        acyclic(&edges) && c.layout < layout_count(self.components(c).len())
    }

    /// Layout leaves in order: each tree's chart followed by its widgets.
    pub fn components(&self, c: &Choice) -> Vec<(String, Size)> {
        let mut out = Vec::new();
        for (a, visses) in &self.trees {
            let v = &visses[c.vis[self.tree_pos(a.tree).unwrap_or(0)]];
            out.push((v.id.clone(), Size::new(v.width, v.height)));
            for (u, unit) in self.units.iter().enumerate() {
                if unit.tree != a.tree {
                    continue;
                }
                for p in &unit.options[c.options[u]] {
                    if let Part::Widget(w) = p {
                        out.push((w.id.clone(), Size::new(w.width, w.height)));
                    }
                }
            }
        }
        out
    }

    pub fn build(&self, c: &Choice) -> InterfaceSpec {
        let visualizations = self
            .trees
            .iter()
            .zip(&c.vis)
            .map(|((_, vs), &i)| vs[i].clone())
            .collect();
        let mut widgets = Vec::new();
        let mut vis_interactions = Vec::new();
        for (u, &o) in c.options.iter().enumerate() {
            for p in &self.units[u].options[o] {
                match p {
                    Part::Widget(w) => widgets.push(w.clone()),
                    Part::Vis(v) => vis_interactions.push(v.spec.clone()),
                }
            }
        }
        let layout = layout_candidate(&self.components(c), c.layout, self.screen);
        InterfaceSpec {
            version: SPEC_VERSION,
            forest: self.forest.clone(),
            visualizations,
            widgets,
            vis_interactions,
            layout,
            defaults: self.defaults.clone(),
        }
    }

    /// First valid option per unit and the overflow-minimizing layout.
    fn complete(&self, vis: Vec<usize>, fixed: &[usize]) -> Choice {
        let mut options = Vec::with_capacity(self.units.len());
        let mut edges = Vec::new();
        for u in 0..self.units.len() {
            let valid = self.valid_options(u, &vis, &edges);
            let o = fixed
                .get(u)
                .copied()
                .filter(|o| valid.contains(o))
                .unwrap_or_else(|| valid.first().copied().unwrap_or(0));
            edges.extend(option_edges(&self.units[u].options[o]));
            options.push(o);
        }
        let mut c = Choice {
            vis,
            options,
            layout: 0,
        };
        c.layout = best_layout_index(&self.components(&c), self.screen);
        c
    }

    pub fn sample_choice(&self, seed: u64) -> Choice {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let vis: Vec<usize> = self
            .trees
            .iter()
            .map(|(_, v)| rng.random_range(0..v.len()))
            .collect();
        let mut options = Vec::with_capacity(self.units.len());
        let mut edges = Vec::new();
        for u in 0..self.units.len() {
            let valid = self.valid_options(u, &vis, &edges);
            let o = valid[rng.random_range(0..valid.len())];
            edges.extend(option_edges(&self.units[u].options[o]));
            options.push(o);
        }
        let mut c = Choice {
            vis,
            options,
            layout: 0,
        };
        c.layout = rng.random_range(0..layout_count(self.components(&c).len()));
        c
    }

    /// Upper bound on the number of complete choices.
    pub fn space_size(&self) -> usize {
        let mut n: usize = 1;
        let mut comps = self.trees.len();
        for (_, v) in &self.trees {
            n = n.saturating_mul(v.len());
        }
        for u in &self.units {
            n = n.saturating_mul(u.options.len());
            comps += u
                .options
                .iter()
                .map(|o| o.iter().filter(|p| matches!(p, Part::Widget(_))).count())
                .max()
                .unwrap_or(0);
        }
        n.saturating_mul(layout_count(comps).max(1))
    }

    /// Every valid choice in enumeration order: charts, then unit options,
    /// then layouts.
    pub fn enumerate(&self, f: &mut dyn FnMut(&Choice)) {
        let dims: Vec<usize> = self.trees.iter().map(|(_, v)| v.len()).collect();
        let mut vis = vec![0; dims.len()];
        loop {
            self.enumerate_options(&vis, 0, &mut Vec::new(), &mut Vec::new(), f);
            if !odometer(&mut vis, &dims) {
                break;
            }
        }
    }

    fn enumerate_options(
        &self,
        vis: &[usize],
        u: usize,
        chosen: &mut Vec<usize>,
        edges: &mut Vec<(TreeId, TreeId)>,
        f: &mut dyn FnMut(&Choice),
    ) {
        if u == self.units.len() {
            let mut c = Choice {
                vis: vis.to_vec(),
                options: chosen.clone(),
                layout: 0,
            };
            for l in 0..layout_count(self.components(&c).len()) {
                c.layout = l;
                f(&c);
            }
            return;
        }
        for o in self.valid_options(u, vis, edges) {
            let n = edges.len();
            edges.extend(option_edges(&self.units[u].options[o]));
            chosen.push(o);
            self.enumerate_options(vis, u + 1, chosen, edges, f);
            chosen.pop();
            edges.truncate(n);
        }
    }
}

fn odometer(idx: &mut [usize], dims: &[usize]) -> bool {
    for i in (0..idx.len()).rev() {
        idx[i] += 1;
        if idx[i] < dims[i] {
            return true;
        }
        idx[i] = 0;
    }
    false
}

pub fn sample_mapping(space: &MappingSpace, seed: u64) -> InterfaceSpec {
    space.build(&space.sample_choice(seed))
}

/// The candidate minimizing `cost`, by complete enumeration when the space
/// is at most [`COMPLETE_SEARCH_CAP`], by beam search otherwise. Earlier
/// candidates win ties.
pub fn best_mapping(
    space: &MappingSpace,
    cost: &mut dyn FnMut(&InterfaceSpec) -> f64,
) -> (InterfaceSpec, f64) {
    let best = if space.space_size() <= COMPLETE_SEARCH_CAP {
        let mut best: Option<(Choice, f64)> = None;
        space.enumerate(&mut |c| {
            let v = cost(&space.build(c));
            if best.as_ref().is_none_or(|(_, b)| v < *b) {
                best = Some((c.clone(), v));
            }
        });
        best
    } else {
        beam_search(space, cost)
    };
    let (c, v) = best.unwrap_or_else(|| {
        let c = space.complete(vec![0; space.trees.len()], &[]);
        let v = cost(&space.build(&c));
        (c, v)
    });
    (space.build(&c), v)
}

/// Per-decision beam: charts first, then unit options. Partial choices are
/// scored by completing them with first valid options; survivors finally
/// get every layout candidate tried.
fn beam_search(
    space: &MappingSpace,
    cost: &mut dyn FnMut(&InterfaceSpec) -> f64,
) -> Option<(Choice, f64)> {
    let nt = space.trees.len();
    let nu = space.units.len();
    let mut beam: Vec<(Vec<usize>, Vec<usize>, f64)> =
        vec![(Vec::new(), Vec::new(), f64::INFINITY)];
    for d in 0..nt + nu {
        let mut next: Vec<(Vec<usize>, Vec<usize>, f64)> = Vec::new();
        for (vis, opts, _) in &beam {
            let values: Vec<usize> = if d < nt {
                (0..space.trees[d].1.len()).collect()
            } else {
                let mut edges = Vec::new();
                for (u, &o) in opts.iter().enumerate() {
                    edges.extend(option_edges(&space.units[u].options[o]));
                }
                space.valid_options(d - nt, vis, &edges)
            };
            for val in values {
                let (mut v2, mut o2) = (vis.clone(), opts.clone());
                if d < nt {
                    v2.push(val);
                } else {
                    o2.push(val);
                }
                let mut full = v2.clone();
                full.resize(nt, 0);
                let c = space.complete(full, &o2);
                let score = cost(&space.build(&c));
                next.push((v2, o2, score));
            }
        }
        next.sort_by(|a, b| a.2.total_cmp(&b.2));
        next.truncate(BEAM_WIDTH);
        if next.is_empty() {
            break;
        }
        beam = next;
    }
    let mut best: Option<(Choice, f64)> = None;
    for (vis, opts, _) in beam {
        let mut c = space.complete(vis, &opts);
        for l in 0..layout_count(space.components(&c).len()) {
            c.layout = l;
            let v = cost(&space.build(&c));
            if best.as_ref().is_none_or(|(_, b)| v < *b) {
                best = Some((c.clone(), v));
            }
        }
    }
    best
}
