//! Multifrontal sparse LU factorization.
//!
//! The symmetrized pattern of the matrix is permuted with a fill-reducing
//! ordering, relabelled in elimination-tree postorder, and grouped into
//! fundamental supernodes. Each supernode owns a dense frontal matrix whose
//! fully summed block is factorized with row pivoting restricted to the fully
//! summed rows; the Schur complement is passed to the parent front.

use crate::csr::SparseMatrix;
use crate::error::{Result, SparseError};
use crate::ordering::{Graph, OrderingRegistry};
use crate::scalar::{norm2, Scalar, C64};

const NONE: usize = usize::MAX;

/// Pivots smaller than this fraction of the column maximum are counted as weak.
const PIVOT_THRESHOLD: f64 = 0.01;

#[derive(Debug, Clone)]
struct Supernode {
    first: usize,
    ncols: usize,
    /// Front indices in elimination order; the first `ncols` are the pivots.
    rows: Vec<u32>,
    nchildren: usize,
}

#[derive(Debug, Clone)]
struct Panel<T> {
    /// `f x p` column-major: unit-lower L11 / upper U11 in the top block, L21 below.
    lower: Vec<T>,
    /// `p x (f - p)` column-major: U12.
    upper: Vec<T>,
    /// Local pivot row order within the fully summed block.
    rowperm: Vec<u32>,
}

/// Factorization diagnostics.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LuStats {
    pub n: usize,
    pub supernodes: usize,
    pub factor_entries: usize,
    pub max_front: usize,
    pub weak_pivots: usize,
    pub ordering: String,
}

/// Factorization `P (A - shift I) P^T = L U` (with row pivoting inside fronts).
#[derive(Debug, Clone)]
pub struct LuFactors<T> {
    perm: Vec<usize>,
    supernodes: Vec<Supernode>,
    panels: Vec<Panel<T>>,
    matrix: SparseMatrix<T>,
    stats: LuStats,
}

impl<T: Scalar> LuFactors<T> {
    /// Factorizes `a - shift * I` with the default nested-dissection ordering.
    pub fn factorize(a: &SparseMatrix<T>, shift: C64) -> Result<Self> {
        Self::factorize_with(a, shift, OrderingRegistry::DEFAULT)
    }

    /// Factorizes `a - shift * I` using the named ordering strategy.
    pub fn factorize_with(a: &SparseMatrix<T>, shift: C64, ordering: &str) -> Result<Self> {
        if !a.is_square() {
            return Err(SparseError::NotSquare {
                rows: a.nrows(),
                cols: a.ncols(),
            });
        }
        let shift_t = T::try_from_c64(shift).ok_or(SparseError::ComplexShiftOnRealMatrix {
            re: shift.re,
            im: shift.im,
        })?;
        let matrix = if shift_t.is_zero() {
            // keep explicit diagonal entries so the pattern always includes them
            a.shifted(T::zero())?
        } else {
            a.shifted(shift_t)?
        };
        let registry = OrderingRegistry::default();
        let strategy = registry.get(ordering)?;
        let graph = Graph::from_pattern(&matrix);
        let order = strategy.order(&graph);
        let (perm, parent) = postordered(&graph, &order);
        let supernodes = find_supernodes(&graph, &perm, &parent);
        let mut lu = Self {
            perm,
            supernodes,
            panels: Vec::new(),
            matrix,
            stats: LuStats {
                ordering: strategy.name().to_string(),
                ..Default::default()
            },
        };
        lu.numeric()?;
        Ok(lu)
    }

    pub fn stats(&self) -> &LuStats {
        &self.stats
    }

    pub fn dim(&self) -> usize {
        self.perm.len()
    }

    /// The factorized matrix `A - shift I`.
    pub fn matrix(&self) -> &SparseMatrix<T> {
        &self.matrix
    }

    fn numeric(&mut self) -> Result<()> {
        let n = self.perm.len();
        let mut iperm = vec![0usize; n];
        for (new, &old) in self.perm.iter().enumerate() {
            iperm[old] = new;
        }
        let at = self.matrix.transpose();
        let mut pos = vec![0u32; n];
        let mut stack: Vec<(Vec<u32>, Vec<T>)> = Vec::new();
        let mut panels = Vec::with_capacity(self.supernodes.len());
        let mut stats = LuStats {
            n,
            supernodes: self.supernodes.len(),
            ordering: std::mem::take(&mut self.stats.ordering),
            ..Default::default()
        };
        for sn in &self.supernodes {
            let f = sn.rows.len();
            let p = sn.ncols;
            stats.max_front = stats.max_front.max(f);
            for (l, &r) in sn.rows.iter().enumerate() {
                pos[r as usize] = l as u32;
            }
            let mut front = vec![T::zero(); f * f];
            let first = sn.first;
            let last = first + p;
            for j in first..last {
                let old = self.perm[j];
                let lj = pos[j] as usize;
                let (cols, vals) = self.matrix.row(old);
                for (&c, &v) in cols.iter().zip(vals) {
                    let c = iperm[c];
                    if c >= first {
                        front[lj + pos[c] as usize * f] += v;
                    }
                }
                let (rows, vals) = at.row(old);
                for (&r, &v) in rows.iter().zip(vals) {
                    let r = iperm[r];
                    if r >= last {
                        front[pos[r] as usize + lj * f] += v;
                    }
                }
            }
            for _ in 0..sn.nchildren {
                let (crow, cdata) = stack.pop().expect("contribution stack underflow");
                let fc = crow.len();
                let map: Vec<usize> = crow.iter().map(|&r| pos[r as usize] as usize).collect();
                for (b, &mb) in map.iter().enumerate() {
                    let src = &cdata[b * fc..(b + 1) * fc];
                    let dst = &mut front[mb * f..(mb + 1) * f];
                    for (a, &ma) in map.iter().enumerate() {
                        dst[ma] += src[a];
                    }
                }
            }
            let rowperm = partial_factor(&mut front, f, p, &mut stats).map_err(|k| {
                SparseError::SingularPivot {
                    index: self.perm[first + k],
                }
            })?;
            let lower = front[..f * p].to_vec();
            let mut upper = Vec::with_capacity(p * (f - p));
            for j in p..f {
                upper.extend_from_slice(&front[j * f..j * f + p]);
            }
            if f > p {
                let fc = f - p;
                let mut cb = Vec::with_capacity(fc * fc);
                for j in p..f {
                    cb.extend_from_slice(&front[j * f + p..(j + 1) * f]);
                }
                stack.push((sn.rows[p..].to_vec(), cb));
            }
            stats.factor_entries += lower.len() + upper.len();
            panels.push(Panel {
                lower,
                upper,
                rowperm,
            });
        }
        debug_assert!(stack.is_empty());
        self.panels = panels;
        self.stats = stats;
        Ok(())
    }

    /// Solves `(A - shift I) x = b` without refinement.
    pub fn solve_unrefined(&self, b: &[C64]) -> Vec<C64> {
        let n = self.dim();
        assert_eq!(b.len(), n);
        let mut x: Vec<C64> = self.perm.iter().map(|&o| b[o]).collect();
        let zero = C64::new(0.0, 0.0);
        let mut t = Vec::new();
        let mut w = Vec::new();
        for (sn, pan) in self.supernodes.iter().zip(&self.panels) {
            let f = sn.rows.len();
            let p = sn.ncols;
            t.clear();
            t.extend(pan.rowperm.iter().map(|&k| x[sn.rows[k as usize] as usize]));
            for k in 0..p {
                let tk = t[k];
                let col = &pan.lower[k * f..(k + 1) * f];
                for i in k + 1..p {
                    t[i] -= col[i].scale_c64(tk);
                }
            }
            if f > p {
                w.clear();
                w.resize(f - p, zero);
                for k in 0..p {
                    let tk = t[k];
                    let col = &pan.lower[k * f + p..(k + 1) * f];
                    for (wi, &l) in w.iter_mut().zip(col) {
                        *wi += l.scale_c64(tk);
                    }
                }
                for (i, &wi) in w.iter().enumerate() {
                    x[sn.rows[p + i] as usize] -= wi;
                }
            }
            for k in 0..p {
                x[sn.rows[k] as usize] = t[k];
            }
        }
        for (sn, pan) in self.supernodes.iter().zip(&self.panels).rev() {
            let f = sn.rows.len();
            let p = sn.ncols;
            t.clear();
            t.extend(sn.rows[..p].iter().map(|&r| x[r as usize]));
            for c in 0..f - p {
                let xv = x[sn.rows[p + c] as usize];
                let col = &pan.upper[c * p..(c + 1) * p];
                for (tk, &u) in t.iter_mut().zip(col) {
                    *tk -= u.scale_c64(xv);
                }
            }
            for j in (0..p).rev() {
                let col = &pan.lower[j * f..j * f + p];
                let tj = t[j] / col[j].to_c64();
                t[j] = tj;
                for k in 0..j {
                    t[k] -= col[k].scale_c64(tj);
                }
            }
            for k in 0..p {
                x[sn.rows[k] as usize] = t[k];
            }
        }
        let mut out = vec![zero; n];
        for (new, &old) in self.perm.iter().enumerate() {
            out[old] = x[new];
        }
        out
    }

    /// Solves `(A - shift I) x = b`, applying up to two steps of iterative
    /// refinement when the relative residual exceeds 1e-13.
    pub fn solve(&self, b: &[C64]) -> Vec<C64> {
        let mut x = self.solve_unrefined(b);
        let bn = norm2(b);
        if bn == 0.0 {
            return x;
        }
        for _ in 0..2 {
            let r = self.residual(&x, b);
            if norm2(&r) <= 1e-13 * bn {
                break;
            }
            let dx = self.solve_unrefined(&r);
            for (xi, d) in x.iter_mut().zip(dx) {
                *xi += d;
            }
        }
        x
    }

    /// `b - (A - shift I) x`
    pub fn residual(&self, x: &[C64], b: &[C64]) -> Vec<C64> {
        let ax = self.matrix.mul_vec_c64(x);
        b.iter().zip(ax).map(|(&bi, a)| bi - a).collect()
    }

    /// `||b - (A - shift I) x|| / ||b||`
    pub fn relative_residual(&self, x: &[C64], b: &[C64]) -> f64 {
        norm2(&self.residual(x, b)) / norm2(b)
    }
}

/// Factorizes the leading `p` columns of the `f x f` column-major front and
/// forms the Schur complement in place. Returns the local pivot row order, or
/// the local index of a zero pivot.
fn partial_factor<T: Scalar>(
    front: &mut [T],
    f: usize,
    p: usize,
    stats: &mut LuStats,
) -> std::result::Result<Vec<u32>, usize> {
    let mut rowperm: Vec<u32> = (0..p as u32).collect();
    for k in 0..p {
        let (mut best, mut best_abs) = (k, -1.0);
        for r in k..p {
            let a = front[r + k * f].modulus();
            if a > best_abs {
                best_abs = a;
                best = r;
            }
        }
        if best_abs == 0.0 || !best_abs.is_finite() {
            return Err(k);
        }
        let col_max = front[k * f + p..(k + 1) * f]
            .iter()
            .map(|v| v.modulus())
            .fold(best_abs, f64::max);
        if best_abs < PIVOT_THRESHOLD * col_max {
            stats.weak_pivots += 1;
        }
        if best != k {
            rowperm.swap(k, best);
            for j in 0..f {
                front.swap(k + j * f, best + j * f);
            }
        }
        let inv = T::one() / front[k + k * f];
        for v in &mut front[k * f + k + 1..(k + 1) * f] {
            *v *= inv;
        }
        // update the remaining fully summed columns
        let (head, tail) = front.split_at_mut((k + 1) * f);
        let lcol = &head[k * f + k + 1..(k + 1) * f];
        for j in k + 1..p {
            let col = &mut tail[(j - k - 1) * f..(j - k) * f];
            let u = col[k];
            if !u.is_zero() {
                for (c, &l) in col[k + 1..].iter_mut().zip(lcol) {
                    *c -= l * u;
                }
            }
        }
    }
    if f > p {
        let (head, tail) = front.split_at_mut(p * f);
        // U12 = L11^{-1} F12, then F22 -= L21 U12, column by column
        for jc in 0..f - p {
            let col = &mut tail[jc * f..(jc + 1) * f];
            for k in 0..p {
                let u = col[k];
                if u.is_zero() {
                    continue;
                }
                let lcol = &head[k * f..(k + 1) * f];
                for i in k + 1..f {
                    col[i] -= lcol[i] * u;
                }
            }
        }
    }
    Ok(rowperm)
}

/// Composes `order` with an elimination-tree postorder. Returns the final
/// permutation (`perm[new] = old`) and the elimination tree in that numbering.
fn postordered(graph: &Graph, order: &[usize]) -> (Vec<usize>, Vec<usize>) {
    let n = graph.len();
    let parent = etree(graph, order);
    let mut head = vec![NONE; n];
    let mut next = vec![NONE; n];
    for v in (0..n).rev() {
        if parent[v] != NONE {
            next[v] = head[parent[v]];
            head[parent[v]] = v;
        }
    }
    let mut post = Vec::with_capacity(n);
    let mut stack = Vec::new();
    for root in 0..n {
        if parent[root] != NONE {
            continue;
        }
        stack.push(root);
        while let Some(&v) = stack.last() {
            let c = head[v];
            if c == NONE {
                post.push(v);
                stack.pop();
            } else {
                head[v] = next[c];
                stack.push(c);
            }
        }
    }
    let perm: Vec<usize> = post.iter().map(|&k| order[k]).collect();
    let parent = etree(graph, &perm);
    (perm, parent)
}

/// Elimination tree of the permuted symmetric pattern (Liu's algorithm).
fn etree(graph: &Graph, order: &[usize]) -> Vec<usize> {
    let n = graph.len();
    let mut iperm = vec![0usize; n];
    for (new, &old) in order.iter().enumerate() {
        iperm[old] = new;
    }
    let mut parent = vec![NONE; n];
    let mut ancestor = vec![NONE; n];
    for j in 0..n {
        for &w in graph.neighbors(order[j]) {
            let mut r = iperm[w];
            if r >= j {
                continue;
            }
            loop {
                let a = ancestor[r];
                if a == j {
                    break;
                }
                ancestor[r] = j;
                if a == NONE {
                    parent[r] = j;
                    break;
                }
                r = a;
            }
        }
    }
    parent
}

/// Symbolic factorization with fundamental-supernode detection. Columns are in
/// postorder, so a supernode's children always precede it.
fn find_supernodes(graph: &Graph, perm: &[usize], parent: &[usize]) -> Vec<Supernode> {
    let n = graph.len();
    let mut iperm = vec![0usize; n];
    for (new, &old) in perm.iter().enumerate() {
        iperm[old] = new;
    }
    let mut child_count = vec![0usize; n];
    let mut only_child = vec![NONE; n];
    for v in 0..n {
        if parent[v] != NONE {
            child_count[parent[v]] += 1;
            only_child[parent[v]] = v;
        }
    }
    // children of each column, as supernode ids (filled when a supernode closes)
    let mut sn_children: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut supernodes: Vec<Supernode> = Vec::new();
    let mut in_open = vec![NONE; n];
    let mut mark = vec![NONE; n];
    let mut list: Vec<usize> = Vec::new();
    for j in 0..n {
        let nbrs = graph.neighbors(perm[j]);
        let open_id = supernodes.len().wrapping_sub(1);
        if let Some(s) = supernodes.last_mut() {
            let extends = j > 0
                && s.first + s.ncols == j
                && child_count[j] == 1
                && only_child[j] == j - 1
                && nbrs
                    .iter()
                    .all(|&w| iperm[w] < j || in_open[iperm[w]] == open_id);
            if extends {
                s.ncols += 1;
                continue;
            }
        }
        // close the previous supernode: register it with its parent column
        if let Some(s) = supernodes.last() {
            let lastc = s.first + s.ncols - 1;
            if parent[lastc] != NONE {
                sn_children[parent[lastc]].push(supernodes.len() - 1);
            }
        }
        list.clear();
        list.push(j);
        mark[j] = j;
        for &w in nbrs {
            let i = iperm[w];
            if i > j && mark[i] != j {
                mark[i] = j;
                list.push(i);
            }
        }
        for &c in &sn_children[j] {
            let cs: &Supernode = &supernodes[c];
            for &r in &cs.rows[cs.ncols..] {
                let r = r as usize;
                if mark[r] != j {
                    mark[r] = j;
                    list.push(r);
                }
            }
        }
        list.sort_unstable();
        let id = supernodes.len();
        for &r in &list {
            in_open[r] = id;
        }
        supernodes.push(Supernode {
            first: j,
            ncols: 1,
            rows: list.iter().map(|&r| r as u32).collect(),
            nchildren: sn_children[j].len(),
        });
    }
    supernodes
}
