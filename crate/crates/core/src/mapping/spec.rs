use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::difftree::{Binding, DiffForest, NodeId, Selection, TreeId};
use crate::relational::Value;

pub const SPEC_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Size {
    pub width: f64,
    pub height: f64,
}

impl Size {
    pub const fn new(width: f64, height: f64) -> Self {
        Self { width, height }
    }
}

pub const CHART_SIZE: Size = Size::new(320.0, 240.0);
pub const LIST_WIDTH: f64 = 160.0;
pub const LIST_ROW_HEIGHT: f64 = 24.0;
pub const COMPACT_SIZE: Size = Size::new(160.0, 32.0);
pub const CONTINUOUS_SIZE: Size = Size::new(240.0, 48.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChartType {
    Bar,
    Line,
    Scatter,
    Table,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct Encodings {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub x: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub y: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub color: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VisSpec {
    pub id: String,
    pub chart: ChartType,
    pub encodings: Encodings,
    pub tree: TreeId,
    /// Output column names, `null` where the tree's queries disagree.
    pub columns: Vec<Option<String>>,
    pub width: f64,
    pub height: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WidgetType {
    ButtonList,
    RadioList,
    Dropdown,
    Slider,
    RangeSlider,
    Toggle,
    CheckboxList,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptionItem {
    pub label: String,
    /// Selection applied to the target when this option is chosen. For
    /// checkbox lists over MULTI nodes this is one template binding.
    pub payload: OptionPayload,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptionPayload {
    Index(usize),
    Template(Binding),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Domain {
    Options { options: Vec<OptionItem> },
    Range { min: f64, max: f64, step: f64 },
    Toggle { label: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WidgetSpec {
    pub id: String,
    #[serde(rename = "type")]
    pub widget: WidgetType,
    pub tree: TreeId,
    /// One node, or `[low, high]` for range sliders.
    pub targets: Vec<NodeId>,
    pub domain: Domain,
    /// Table column the value is compared against, when known.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub column: Option<String>,
    pub width: f64,
    pub height: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VisEvent {
    Click,
    MultiClick,
    BrushX,
    PanZoom,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct VisInteractionSpec {
    pub id: String,
    pub event: VisEvent,
    /// Visualization the user interacts with.
    pub source: String,
    /// Tree owning the target nodes.
    pub tree: TreeId,
    /// One node for click/multi_click, `[low, high]` for brush_x,
    /// `[x_low, x_high, y_low, y_high]` for pan_zoom.
    pub targets: Vec<NodeId>,
    /// Source output column whose values bind the target.
    pub column: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub column_y: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Dir {
    H,
    V,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LayoutNode {
    Leaf {
        leaf: String,
        width: f64,
        height: f64,
    },
    Split {
        dir: Dir,
        children: Vec<LayoutNode>,
        width: f64,
        height: f64,
    },
}

impl LayoutNode {
    pub fn size(&self) -> Size {
        match self {
            LayoutNode::Leaf { width, height, .. } | LayoutNode::Split { width, height, .. } => {
                Size::new(*width, *height)
            }
        }
    }

    pub fn split(dir: Dir, children: Vec<LayoutNode>) -> Self {
        let sizes: Vec<Size> = children.iter().map(LayoutNode::size).collect();
        let (width, height) = match dir {
            Dir::H => (
                sizes.iter().map(|s| s.width).sum(),
                sizes.iter().map(|s| s.height).fold(0.0, f64::max),
            ),
            Dir::V => (
                sizes.iter().map(|s| s.width).fold(0.0, f64::max),
                sizes.iter().map(|s| s.height).sum(),
            ),
        };
        LayoutNode::Split {
            dir,
            children,
            width,
            height,
        }
    }

    /// Leaf ids in order.
    pub fn leaves(&self) -> Vec<&str> {
        let mut out = Vec::new();
        fn go<'a>(n: &'a LayoutNode, out: &mut Vec<&'a str>) {
            match n {
                LayoutNode::Leaf { leaf, .. } => out.push(leaf),
                LayoutNode::Split { children, .. } => children.iter().for_each(|c| go(c, out)),
            }
        }
        go(self, &mut out);
        out
    }

    /// Ancestor chain (child indices from the root) of every leaf.
    pub fn leaf_paths(&self) -> BTreeMap<String, Vec<usize>> {
        let mut out = BTreeMap::new();
        fn go(n: &LayoutNode, path: &mut Vec<usize>, out: &mut BTreeMap<String, Vec<usize>>) {
            match n {
                LayoutNode::Leaf { leaf, .. } => {
                    out.insert(leaf.clone(), path.clone());
                }
                LayoutNode::Split { children, .. } => {
                    for (i, c) in children.iter().enumerate() {
                        path.push(i);
                        go(c, path, out);
                        path.pop();
                    }
                }
            }
        }
        go(self, &mut Vec::new(), &mut out);
        out
    }
}

/// Number of layout-tree edges between two leaves given their paths.
pub fn path_distance(a: &[usize], b: &[usize]) -> usize {
    let common = a.iter().zip(b).take_while(|(x, y)| x == y).count();
    a.len() + b.len() - 2 * common
}

/// The complete interface: one visualization per tree, one interaction per
/// slot, a layout, and the initial binding of every tree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct InterfaceSpec {
    pub version: u32,
    pub forest: DiffForest,
    pub visualizations: Vec<VisSpec>,
    pub widgets: Vec<WidgetSpec>,
    pub vis_interactions: Vec<VisInteractionSpec>,
    pub layout: LayoutNode,
    pub defaults: BTreeMap<TreeId, Binding>,
}

impl InterfaceSpec {
    pub fn vis_for_tree(&self, tree: TreeId) -> Option<&VisSpec> {
        self.visualizations.iter().find(|v| v.tree == tree)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).unwrap_or_default()
    }
}

/// Current value a widget shows for a default selection; used for display.
pub fn selection_value(domain: &Domain, sel: &Selection) -> Option<Value> {
    match (domain, sel) {
        (_, Selection::Value(v)) => Some(v.clone()),
        (Domain::Options { options }, Selection::Index(i)) => {
            options.get(*i).map(|o| Value::str(o.label.clone()))
        }
        _ => None,
    }
}
