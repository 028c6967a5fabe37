//! Depth-wise and node-wise beam search over trails.

use super::{check_start, AdditiveGain, BeamParams, GainModel, PlanError, PlanResult};
use crate::criteria::CriterionContext;
use crate::graph::{ratio, Path, PlanGraph, VertexId};
use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::time::Instant;

/// A partial path stored as its last step: the parent is an index into the
/// previous depth's survivors.
#[derive(Clone, Copy)]
struct Node {
    parent: u32,
    vertex: VertexId,
    cost: f64,
    gain: f64,
    ratio: f64,
    // the end vertex also occurs earlier on the path
    revisit: bool,
}

impl Node {
    // same order as `preference_order`, with the ratio cached
    #[inline]
    fn prefer(&self, other: &Node) -> Ordering {
        self.ratio
            .total_cmp(&other.ratio)
            .then(self.gain.total_cmp(&other.gain))
            .then(other.cost.total_cmp(&self.cost))
    }
}

const ROOT: u32 = u32::MAX;

/// Maps `x` to an integer with the same order as `f64::total_cmp`.
#[inline]
fn total_key(x: f64) -> u64 {
    let b = x.to_bits();
    if b >> 63 == 1 {
        !b
    } else {
        b | 1 << 63
    }
}

#[inline]
fn from_key(k: u64) -> f64 {
    f64::from_bits(if k >> 63 == 1 { k & !(1 << 63) } else { !k })
}

struct Entry {
    // ascending: most preferred first, older first among equals
    rank: (u64, u64, u64, u64),
    parent: u32,
    vertex: VertexId,
    revisit: bool,
}

impl Entry {
    #[inline]
    fn new(node: Node, seq: u64) -> Self {
        Entry {
            rank: (!total_key(node.ratio), !total_key(node.gain), total_key(node.cost), seq),
            parent: node.parent,
            vertex: node.vertex,
            revisit: node.revisit,
        }
    }

    #[inline]
    fn node(&self) -> Node {
        Node {
            parent: self.parent,
            vertex: self.vertex,
            cost: from_key(self.rank.2),
            gain: from_key(!self.rank.1),
            ratio: from_key(!self.rank.0),
            revisit: self.revisit,
        }
    }
}

// Max-heap order puts the least preferred (and, among equals, the most
// recently inserted) path on top.
impl Ord for Entry {
    #[inline]
    fn cmp(&self, other: &Self) -> Ordering {
        self.rank.cmp(&other.rank)
    }
}

impl PartialOrd for Entry {
    #[inline]
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl PartialEq for Entry {
    fn eq(&self, other: &Self) -> bool {
        self.rank == other.rank
    }
}

impl Eq for Entry {}

/// Widths above this collect every candidate and select at the end.
const SELECT_ABOVE: usize = 64;

/// At most `width` paths. Narrow beams keep a heap with the worst path on
/// top; wide ones buffer all candidates and keep the top `width` by
/// (preference, insertion order), which is exactly what the heap keeps.
struct Beam {
    heap: BinaryHeap<Entry>,
    pending: Vec<Entry>,
    // worst survivor of the last compaction; anything not strictly
    // preferred to it can never make the cut
    floor: Option<Node>,
}

impl Beam {
    fn new() -> Self {
        Beam {
            heap: BinaryHeap::new(),
            pending: Vec::new(),
            floor: None,
        }
    }

    #[inline]
    fn admits(&self, width: usize, node: &Node) -> bool {
        if width > SELECT_ABOVE {
            return self.floor.map_or(true, |f| node.prefer(&f) == Ordering::Greater);
        }
        if self.heap.len() < width {
            return true;
        }
        node.prefer(&self.heap.peek().expect("width >= 1").node()) == Ordering::Greater
    }

    fn insert(&mut self, width: usize, node: Node, seq: u64) {
        if width > SELECT_ABOVE {
            self.pending.push(Entry::new(node, seq));
            if self.pending.len() >= 2 * width {
                self.pending.select_nth_unstable(width - 1);
                self.pending.truncate(width);
                self.floor = self.pending.iter().max().map(Entry::node);
            }
            return;
        }
        if self.heap.len() >= width {
            if let Some(mut top) = self.heap.peek_mut() {
                *top = Entry::new(node, seq);
            }
            return;
        }
        self.heap.push(Entry::new(node, seq));
    }

    fn into_best_first(self, width: usize) -> Vec<Node> {
        let entries = if width > SELECT_ABOVE {
            let mut v = self.pending;
            if v.len() > width {
                v.select_nth_unstable(width - 1);
                v.truncate(width);
            }
            v.sort_unstable();
            v
        } else {
            self.heap.into_sorted_vec()
        };
        entries.iter().map(Entry::node).collect()
    }
}

/// Visits the path ending at `layers[depth][idx]` from its end back to the
/// start, passing each vertex and the vertex that follows it.
#[inline]
fn walk_back(layers: &[Vec<Node>], depth: usize, idx: u32, mut f: impl FnMut(VertexId, Option<VertexId>)) {
    let mut d = depth;
    let mut i = idx;
    let mut next = None;
    loop {
        let n = &layers[d][i as usize];
        f(n.vertex, next);
        if n.parent == ROOT {
            break;
        }
        next = Some(n.vertex);
        i = n.parent;
        d -= 1;
    }
}

#[inline]
fn set_bit(bits: &mut [u64], v: VertexId) {
    bits[v.index() / 64] |= 1 << (v.index() % 64);
}

#[inline]
fn has_bit(bits: &[u64], v: VertexId) -> bool {
    bits[v.index() / 64] & (1 << (v.index() % 64)) != 0
}

/// Writes the vertex sequence ending at `layers[depth][idx]` into `buf`.
fn materialize(layers: &[Vec<Node>], depth: usize, idx: u32, buf: &mut Vec<VertexId>) {
    buf.clear();
    walk_back(layers, depth, idx, |v, _| buf.push(v));
    buf.reverse();
}

#[derive(Clone, Copy)]
enum Grouping {
    Depth,
    Node,
}

pub fn dbs(graph: &PlanGraph, start: VertexId, params: BeamParams, ctx: &CriterionContext<'_>) -> Result<PlanResult, PlanError> {
    dbs_with(graph, start, params, ctx, &AdditiveGain)
}

pub fn dbs_with<M: GainModel + ?Sized>(
    graph: &PlanGraph,
    start: VertexId,
    params: BeamParams,
    ctx: &CriterionContext<'_>,
    model: &M,
) -> Result<PlanResult, PlanError> {
    search(graph, start, params, ctx, model, Grouping::Depth)
}

pub fn nbs(graph: &PlanGraph, start: VertexId, params: BeamParams, ctx: &CriterionContext<'_>) -> Result<PlanResult, PlanError> {
    nbs_with(graph, start, params, ctx, &AdditiveGain)
}

pub fn nbs_with<M: GainModel + ?Sized>(
    graph: &PlanGraph,
    start: VertexId,
    params: BeamParams,
    ctx: &CriterionContext<'_>,
    model: &M,
) -> Result<PlanResult, PlanError> {
    search(graph, start, params, ctx, model, Grouping::Node)
}

fn search<M: GainModel + ?Sized>(
    graph: &PlanGraph,
    start: VertexId,
    params: BeamParams,
    ctx: &CriterionContext<'_>,
    model: &M,
    grouping: Grouping,
) -> Result<PlanResult, PlanError> {
    let t0 = Instant::now();
    params.validate()?;
    check_start(graph, start, ctx)?;
    let width = params.beam_width;
    let slots = match grouping {
        Grouping::Depth => 1,
        Grouping::Node => graph.vertex_count(),
    };

    let start_gain = model.start_gain(graph, start);
    let mut best = Path::from_parts(vec![start], 0.0, start_gain);
    let mut best_q = ctx.quality(&best);
    let mut layers: Vec<Vec<Node>> = vec![vec![Node {
        parent: ROOT,
        vertex: start,
        cost: 0.0,
        gain: start_gain,
        ratio: ratio(start_gain, 0.0),
        revisit: false,
    }]];
    let mut buf: Vec<VertexId> = Vec::new();
    // successors of the expanding vertex already used by the current path
    let mut used_after: Vec<VertexId> = Vec::new();
    let additive = model.is_additive();
    // visited set of every path in the open layer, `words` u64s each
    let words = graph.vertex_count().div_ceil(64);
    let mut visited = vec![0u64; words];
    set_bit(&mut visited, start);
    let mut expanded = 0u64;
    let mut seq = 0u64;

    for depth in 0..params.depth {
        let open = &layers[depth];
        if open.is_empty() {
            break;
        }
        let mut beams: Vec<Beam> = (0..slots).map(|_| Beam::new()).collect();
        for (idx, p) in open.iter().enumerate() {
            let from = p.vertex;
            let seen = &visited[idx * words..(idx + 1) * words];
            used_after.clear();
            if p.revisit {
                walk_back(&layers, depth, idx as u32, |v, next| {
                    if v == from {
                        if let Some(n) = next {
                            used_after.push(n);
                        }
                    }
                });
            }
            let mut have_buf = false;
            for e in graph.out_edges(from) {
                let to = e.target;
                if used_after.contains(&to) {
                    continue;
                }
                expanded += 1;
                let cost = p.cost + e.cost;
                if !ctx.affordable(cost) {
                    continue;
                }
                let again = has_bit(seen, to);
                let marginal = if additive {
                    if again {
                        0.0
                    } else {
                        graph.gain(to)
                    }
                } else {
                    if !have_buf {
                        materialize(&layers, depth, idx as u32, &mut buf);
                        have_buf = true;
                    }
                    model.marginal(graph, &buf, to)
                };
                let gain = p.gain + marginal;
                let q = ctx.score(to, gain, cost);
                let slot = match grouping {
                    Grouping::Depth => 0,
                    Grouping::Node => to.index(),
                };
                if q > best_q {
                    best_q = q;
                    if !have_buf {
                        materialize(&layers, depth, idx as u32, &mut buf);
                        have_buf = true;
                    }
                    let mut vs = Vec::with_capacity(buf.len() + 1);
                    vs.extend_from_slice(&buf);
                    vs.push(to);
                    best = Path::from_parts(vs, cost, gain);
                }
                let node = Node {
                    parent: idx as u32,
                    vertex: to,
                    cost,
                    gain,
                    ratio: ratio(gain, cost),
                    revisit: again,
                };
                if beams[slot].admits(width, &node) {
                    beams[slot].insert(width, node, seq);
                    seq += 1;
                }
            }
        }
        let next: Vec<Node> = beams.into_iter().flat_map(|b| b.into_best_first(width)).collect();
        let mut next_visited = vec![0u64; next.len() * words];
        for (k, n) in next.iter().enumerate() {
            let dst = &mut next_visited[k * words..(k + 1) * words];
            let p = n.parent as usize;
            dst.copy_from_slice(&visited[p * words..(p + 1) * words]);
            set_bit(dst, n.vertex);
        }
        visited = next_visited;
        layers.push(next);
    }

    Ok(PlanResult {
        best_path: best,
        paths_expanded: expanded,
        wall_time: t0.elapsed(),
    })
}
