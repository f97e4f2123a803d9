use std::sync::OnceLock;

use super::spec::{Dir, LayoutNode, Size};

/// Component count up to which every binary nesting is enumerated.
pub const LAYOUT_ENUM_MAX: usize = 6;

#[derive(Debug, Clone)]
enum Shape {
    Leaf(usize),
    Node(Dir, Box<Shape>, Box<Shape>),
}

fn shapes_over(lo: usize, hi: usize) -> Vec<Shape> {
    if hi - lo == 1 {
        return vec![Shape::Leaf(lo)];
    }
    let mut out = Vec::new();
    for mid in lo + 1..hi {
        let left = shapes_over(lo, mid);
        let right = shapes_over(mid, hi);
        for l in &left {
            for r in &right {
                for dir in [Dir::V, Dir::H] {
                    out.push(Shape::Node(dir, Box::new(l.clone()), Box::new(r.clone())));
                }
            }
        }
    }
    out
}

fn shapes(n: usize) -> &'static [Shape] {
    static CACHE: OnceLock<Vec<Vec<Shape>>> = OnceLock::new();
    let all = CACHE.get_or_init(|| {
        (0..=LAYOUT_ENUM_MAX)
            .map(|n| {
                if n == 0 {
                    Vec::new()
                } else {
                    shapes_over(0, n)
                }
            })
            .collect()
    });
    &all[n]
}

/// Number of layout candidates for `n` components.
pub fn layout_count(n: usize) -> usize {
    if n == 0 {
        0
    } else if n <= LAYOUT_ENUM_MAX {
        shapes(n).len()
    } else {
        1
    }
}

fn leaf(c: &(String, Size)) -> LayoutNode {
    LayoutNode::Leaf {
        leaf: c.0.clone(),
        width: c.1.width,
        height: c.1.height,
    }
}

fn build(shape: &Shape, comps: &[(String, Size)]) -> LayoutNode {
    match shape {
        Shape::Leaf(i) => leaf(&comps[*i]),
        Shape::Node(dir, l, r) => LayoutNode::split(*dir, vec![build(l, comps), build(r, comps)]),
    }
}

/// Rows filled left to right up to the screen width, stacked vertically.
fn row_packing(comps: &[(String, Size)], screen: Size) -> LayoutNode {
    let mut rows: Vec<Vec<LayoutNode>> = Vec::new();
    let mut width = 0.0;
    for c in comps {
        match rows.last_mut() {
            Some(row) if width + c.1.width <= screen.width => {
                row.push(leaf(c));
                width += c.1.width;
            }
            _ => {
                rows.push(vec![leaf(c)]);
                width = c.1.width;
            }
        }
    }
    let mut rows: Vec<LayoutNode> = rows
        .into_iter()
        .map(|mut r| {
            if r.len() == 1 {
                r.remove(0)
            } else {
                LayoutNode::split(Dir::H, r)
            }
        })
        .collect();
    if rows.len() == 1 {
        rows.remove(0)
    } else {
        LayoutNode::split(Dir::V, rows)
    }
}

/// The `index`-th layout candidate over `comps` in enumeration order.
pub fn layout_candidate(comps: &[(String, Size)], index: usize, screen: Size) -> LayoutNode {
    assert!(!comps.is_empty(), "layout needs at least one component");
    if comps.len() > LAYOUT_ENUM_MAX {
        return row_packing(comps, screen);
    }
    build(&shapes(comps.len())[index], comps)
}

pub fn layout_candidates(comps: &[(String, Size)], screen: Size) -> Vec<LayoutNode> {
    (0..layout_count(comps.len()))
        .map(|i| layout_candidate(comps, i, screen))
        .collect()
}

pub fn overflow(size: Size, screen: Size) -> f64 {
    (size.width - screen.width).max(0.0) + (size.height - screen.height).max(0.0)
}

fn root_is_v(n: &LayoutNode) -> bool {
    matches!(n, LayoutNode::Split { dir: Dir::V, .. })
}

/// Index of the candidate minimizing overflow; ties prefer V at the root,
/// then the earlier candidate.
pub fn best_layout_index(comps: &[(String, Size)], screen: Size) -> usize {
    let mut best: Option<(f64, bool, usize)> = None;
    for (i, cand) in layout_candidates(comps, screen).iter().enumerate() {
        let o = overflow(cand.size(), screen);
        let h = !root_is_v(cand);
        let better = match best {
            None => true,
            Some((bo, bh, _)) => o < bo || (o == bo && !h && bh),
        };
        if better {
            best = Some((o, h, i));
        }
    }
    best.map(|b| b.2).expect("at least one component")
}

pub fn assign_layout(comps: &[(String, Size)], screen: Size) -> LayoutNode {
    layout_candidate(comps, best_layout_index(comps, screen), screen)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn comps(sizes: &[(f64, f64)]) -> Vec<(String, Size)> {
        sizes
            .iter()
            .enumerate()
            .map(|(i, (w, h))| (format!("c{i}"), Size::new(*w, *h)))
            .collect()
    }

    #[test]
    fn counts() {
        assert_eq!(layout_count(1), 1);
        assert_eq!(layout_count(2), 2);
        assert_eq!(layout_count(3), 8);
        assert_eq!(layout_count(6), 1344);
        assert_eq!(layout_count(9), 1);
    }

    #[test]
    fn single_is_leaf() {
        let l = assign_layout(&comps(&[(320.0, 240.0)]), Size::new(1280.0, 800.0));
        assert!(matches!(l, LayoutNode::Leaf { .. }));
    }

    #[test]
    fn wide_charts_stack() {
        let l = assign_layout(
            &comps(&[(400.0, 240.0), (400.0, 240.0)]),
            Size::new(500.0, 800.0),
        );
        assert!(root_is_v(&l));
        assert_eq!(l.size(), Size::new(400.0, 480.0));
    }

    #[test]
    fn chart_and_buttons_vertical() {
        let l = assign_layout(
            &comps(&[(320.0, 240.0), (160.0, 72.0)]),
            Size::new(1280.0, 800.0),
        );
        assert!(root_is_v(&l));
        assert_eq!(l.leaves(), vec!["c0", "c1"]);
    }

    #[test]
    fn packing_many() {
        let c = comps(&[(320.0, 240.0); 8]);
        let l = layout_candidate(&c, 0, Size::new(1280.0, 800.0));
        assert_eq!(l.leaves().len(), 8);
        assert_eq!(l.size(), Size::new(1280.0, 480.0));
    }
}
