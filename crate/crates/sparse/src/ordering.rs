//! Fill-reducing orderings.
//!
//! Each ordering implements [`FillOrdering`] and is registered by name in an
//! [`OrderingRegistry`]; the factorization looks the strategy up at runtime so
//! callers can switch orderings from configuration or the command line.

use std::collections::VecDeque;

use crate::csr::SparseMatrix;
use crate::error::{Result, SparseError};
use crate::scalar::Scalar;

/// Undirected adjacency structure without self loops.
#[derive(Debug, Clone)]
pub struct Graph {
    ptr: Vec<usize>,
    adj: Vec<usize>,
}

impl Graph {
    /// Pattern of `A + A^T` with the diagonal removed.
    pub fn from_pattern<T: Scalar>(a: &SparseMatrix<T>) -> Self {
        let n = a.nrows();
        let mut deg = vec![0usize; n];
        for r in 0..n {
            for &c in a.row(r).0 {
                if c != r {
                    deg[r] += 1;
                    deg[c] += 1;
                }
            }
        }
        let mut lists: Vec<Vec<usize>> = deg.iter().map(|&d| Vec::with_capacity(d)).collect();
        for r in 0..n {
            for &c in a.row(r).0 {
                if c != r {
                    lists[r].push(c);
                    lists[c].push(r);
                }
            }
        }
        let mut ptr = Vec::with_capacity(n + 1);
        ptr.push(0);
        let mut adj = Vec::new();
        for mut l in lists {
            l.sort_unstable();
            l.dedup();
            adj.extend_from_slice(&l);
            ptr.push(adj.len());
        }
        Self { ptr, adj }
    }

    pub fn from_adjacency(lists: &[Vec<usize>]) -> Self {
        let mut ptr = vec![0];
        let mut adj = Vec::new();
        for l in lists {
            let mut l = l.clone();
            l.sort_unstable();
            l.dedup();
            adj.extend_from_slice(&l);
            ptr.push(adj.len());
        }
        Self { ptr, adj }
    }

    pub fn len(&self) -> usize {
        self.ptr.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adj[self.ptr[v]..self.ptr[v + 1]]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.ptr[v + 1] - self.ptr[v]
    }
}

/// A strategy producing an elimination order (`order[new] = old`).
pub trait FillOrdering: Send + Sync {
    fn name(&self) -> &'static str;
    fn order(&self, graph: &Graph) -> Vec<usize>;
}

/// Name-indexed collection of ordering strategies.
pub struct OrderingRegistry {
    entries: Vec<Box<dyn FillOrdering>>,
}

impl Default for OrderingRegistry {
    fn default() -> Self {
        let mut r = Self {
            entries: Vec::new(),
        };
        r.register(Box::new(NestedDissection::default()));
        r.register(Box::new(ReverseCuthillMcKee));
        r.register(Box::new(Natural));
        r
    }
}

impl OrderingRegistry {
    pub const DEFAULT: &'static str = "nested-dissection";

    pub fn empty() -> Self {
        Self {
            entries: Vec::new(),
        }
    }

    /// Adds a strategy, replacing any existing one with the same name.
    pub fn register(&mut self, strategy: Box<dyn FillOrdering>) {
        self.entries.retain(|e| e.name() != strategy.name());
        self.entries.push(strategy);
    }

    pub fn get(&self, name: &str) -> Result<&dyn FillOrdering> {
        self.entries
            .iter()
            .find(|e| e.name() == name)
            .map(|b| b.as_ref())
            .ok_or_else(|| SparseError::UnknownOrdering(name.to_string()))
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.entries.iter().map(|e| e.name()).collect()
    }
}

/// Identity ordering.
pub struct Natural;

impl FillOrdering for Natural {
    fn name(&self) -> &'static str {
        "natural"
    }

    fn order(&self, graph: &Graph) -> Vec<usize> {
        (0..graph.len()).collect()
    }
}

/// Reverse Cuthill-McKee bandwidth reduction.
pub struct ReverseCuthillMcKee;

impl FillOrdering for ReverseCuthillMcKee {
    fn name(&self) -> &'static str {
        "rcm"
    }

    fn order(&self, graph: &Graph) -> Vec<usize> {
        let n = graph.len();
        let mut ws = Workspace::new(n);
        let mut visited = vec![false; n];
        let mut order = Vec::with_capacity(n);
        let mut nbrs = Vec::new();
        for seed in 0..n {
            if visited[seed] {
                continue;
            }
            // every vertex shares region 0, so searches stay within the component
            let start = ws.pseudo_peripheral(graph, seed, 0);
            let mut queue = VecDeque::from([start]);
            visited[start] = true;
            while let Some(v) = queue.pop_front() {
                order.push(v);
                nbrs.clear();
                nbrs.extend(graph.neighbors(v).iter().copied().filter(|&w| !visited[w]));
                nbrs.sort_by_key(|&w| graph.degree(w));
                for &w in &nbrs {
                    visited[w] = true;
                    queue.push_back(w);
                }
            }
        }
        order.reverse();
        order
    }
}

/// Recursive nested dissection with breadth-first level-set separators.
///
/// Each connected region is split at the level of a rooted level structure
/// (grown from a pseudo-peripheral vertex) that balances the two halves while
/// keeping the separator short. Separator vertices are numbered after both
/// halves.
pub struct NestedDissection {
    pub leaf_size: usize,
}

impl Default for NestedDissection {
    fn default() -> Self {
        Self { leaf_size: 48 }
    }
}

impl FillOrdering for NestedDissection {
    fn name(&self) -> &'static str {
        "nested-dissection"
    }

    fn order(&self, graph: &Graph) -> Vec<usize> {
        let n = graph.len();
        let mut ws = Workspace::new(n);
        let mut out = Vec::with_capacity(n);
        // explicit stack: Split(set) or Emit(set)
        enum Task {
            Split(Vec<usize>),
            Emit(Vec<usize>),
        }
        let mut stack = vec![Task::Split((0..n).collect())];
        while let Some(task) = stack.pop() {
            match task {
                Task::Emit(set) => out.extend(set),
                Task::Split(set) => {
                    if set.len() <= self.leaf_size {
                        out.extend(set);
                        continue;
                    }
                    match self.split(graph, &set, &mut ws) {
                        Split::Leaf => out.extend(set),
                        Split::Components(parts) => {
                            for p in parts.into_iter().rev() {
                                stack.push(Task::Split(p));
                            }
                        }
                        Split::Separator { a, b, sep } => {
                            stack.push(Task::Emit(sep));
                            stack.push(Task::Split(b));
                            stack.push(Task::Split(a));
                        }
                    }
                }
            }
        }
        out
    }
}

enum Split {
    Leaf,
    Components(Vec<Vec<usize>>),
    Separator {
        a: Vec<usize>,
        b: Vec<usize>,
        sep: Vec<usize>,
    },
}

impl NestedDissection {
    fn split(&self, graph: &Graph, set: &[usize], ws: &mut Workspace) -> Split {
        let id = ws.next_stamp();
        for &v in set {
            ws.region[v] = id;
        }
        let first = ws.component(graph, set[0], id);
        if first.len() < set.len() {
            let done = ws.next_stamp();
            let mut parts = Vec::new();
            for &v in set {
                if ws.region[v] == id {
                    let c = ws.component(graph, v, id);
                    for &w in &c {
                        ws.region[w] = done;
                    }
                    parts.push(c);
                }
            }
            return Split::Components(parts);
        }
        let start = ws.pseudo_peripheral(graph, set[0], id);
        let levels = ws.levels(graph, start, id);
        if levels.len() < 3 {
            return Split::Leaf;
        }
        let total = set.len();
        let mut cum = Vec::with_capacity(levels.len());
        let mut acc = 0;
        for l in &levels {
            cum.push(acc);
            acc += l.len();
        }
        // shortest level that leaves at least 30% of the region on each side
        let mut best: Option<(usize, usize)> = None;
        for s in 1..levels.len() - 1 {
            let before = cum[s];
            let after = total - before - levels[s].len();
            if (before.min(after) as f64) < 0.3 * total as f64 {
                continue;
            }
            let score = levels[s].len();
            if best.is_none_or(|(_, b)| score < b) {
                best = Some((s, score));
            }
        }
        let s = match best {
            Some((s, _)) => s,
            None => {
                let mut s = 1;
                while s + 2 < levels.len() && cum[s + 1] < total / 2 {
                    s += 1;
                }
                s
            }
        };
        let mut a: Vec<usize> = levels[..s].iter().flatten().copied().collect();
        let b: Vec<usize> = levels[s + 1..].iter().flatten().copied().collect();
        let mark_b = ws.next_stamp();
        for &v in &b {
            ws.region[v] = mark_b;
        }
        // separator vertices without a neighbor in `b` can join `a`
        let mut sep = Vec::with_capacity(levels[s].len());
        for &v in &levels[s] {
            if graph.neighbors(v).iter().any(|&w| ws.region[w] == mark_b) {
                sep.push(v);
            } else {
                a.push(v);
            }
        }
        Split::Separator { a, b, sep }
    }
}

struct Workspace {
    region: Vec<u32>,
    stamp: u32,
    seen: Vec<u32>,
    seen_stamp: u32,
}

impl Workspace {
    fn new(n: usize) -> Self {
        Self {
            region: vec![0; n],
            stamp: 0,
            seen: vec![0; n],
            seen_stamp: 0,
        }
    }

    fn next_stamp(&mut self) -> u32 {
        self.stamp += 1;
        self.stamp
    }

    fn component(&mut self, graph: &Graph, start: usize, region: u32) -> Vec<usize> {
        self.levels(graph, start, region).into_iter().flatten().collect()
    }

    fn pseudo_peripheral(&mut self, graph: &Graph, start: usize, region: u32) -> usize {
        let mut root = start;
        let mut depth = 0;
        for _ in 0..6 {
            let levels = self.levels(graph, root, region);
            if levels.len() <= depth {
                break;
            }
            depth = levels.len();
            root = *levels
                .last()
                .unwrap()
                .iter()
                .min_by_key(|&&v| graph.degree(v))
                .unwrap();
        }
        root
    }

    /// Breadth-first level structure restricted to vertices tagged `region`.
    fn levels(&mut self, graph: &Graph, start: usize, region: u32) -> Vec<Vec<usize>> {
        self.seen_stamp += 1;
        let mark = self.seen_stamp;
        self.seen[start] = mark;
        let mut levels = vec![vec![start]];
        loop {
            let mut next = Vec::new();
            for &v in levels.last().unwrap() {
                for &w in graph.neighbors(v) {
                    if self.seen[w] != mark && self.region[w] == region {
                        self.seen[w] = mark;
                        next.push(w);
                    }
                }
            }
            if next.is_empty() {
                break;
            }
            levels.push(next);
        }
        levels
    }
}

/// Number of off-diagonal nonzeros in the Cholesky-pattern factor for a given
/// elimination order. Quadratic-ish in the fill; for tests and diagnostics.
pub fn count_fill(graph: &Graph, order: &[usize]) -> usize {
    let n = graph.len();
    let mut pos = vec![0usize; n];
    for (k, &v) in order.iter().enumerate() {
        pos[v] = k;
    }
    let mut sets: Vec<std::collections::BTreeSet<usize>> = (0..n)
        .map(|k| {
            graph
                .neighbors(order[k])
                .iter()
                .map(|&w| pos[w])
                .filter(|&p| p > k)
                .collect()
        })
        .collect();
    let mut total = 0;
    for k in 0..n {
        let s = std::mem::take(&mut sets[k]);
        total += s.len();
        if let Some(&parent) = s.iter().next() {
            for &r in s.iter().skip(1) {
                sets[parent].insert(r);
            }
        }
    }
    total
}

/// Checks that `order` is a permutation of `0..n`.
pub fn is_permutation(order: &[usize], n: usize) -> bool {
    if order.len() != n {
        return false;
    }
    let mut seen = vec![false; n];
    for &v in order {
        if v >= n || seen[v] {
            return false;
        }
        seen[v] = true;
    }
    true
}
