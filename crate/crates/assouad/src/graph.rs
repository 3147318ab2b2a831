//! Transition graph over characteristic vectors, its loop classes and the
//! finite-type closure certificate.

use crate::ifs::SimilarityIfs;
use crate::net::{children_of, CharacteristicVector, CvGeometry};
use crate::rational::{ln_rational, rational_to_f64};
use crate::{Error, Result};
use num::{BigRational, Zero};
use std::collections::HashMap;

/// Nonnegative rational matrix attached to a parent-to-child transition.
/// Rows follow the parent's neighbour set, columns the child's; path products
/// therefore compose left to right and "every column has a nonzero entry"
/// says every child neighbour receives mass from some parent neighbour.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct TransitionMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<BigRational>, // row-major
}

impl TransitionMatrix {
    pub fn zero(rows: usize, cols: usize) -> Self {
        TransitionMatrix { rows, cols, entries: vec![BigRational::zero(); rows * cols] }
    }

    pub fn identity_like(n: usize) -> Self {
        let mut m = TransitionMatrix::zero(n, n);
        for i in 0..n {
            m.entries[i * n + i] = BigRational::from_integer(1.into());
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn entry(&self, r: usize, c: usize) -> &BigRational {
        &self.entries[r * self.cols + c]
    }

    pub fn add_entry(&mut self, r: usize, c: usize, v: &BigRational) {
        let e = &mut self.entries[r * self.cols + c];
        *e = &*e + v;
    }

    /// Entrywise-sum norm: the norm the matrix-product bounds are stated in.
    pub fn norm(&self) -> BigRational {
        self.entries.iter().cloned().sum()
    }

    pub fn columns_nonzero(&self) -> bool {
        (0..self.cols).all(|c| (0..self.rows).any(|r| !self.entry(r, c).is_zero()))
    }

    pub fn matmul(&self, other: &TransitionMatrix) -> Result<TransitionMatrix> {
        if self.cols != other.rows {
            return Err(Error::NeighbourMismatch);
        }
        let mut out = TransitionMatrix::zero(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.entry(i, k);
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let b = other.entry(k, j);
                    if b.is_zero() {
                        continue;
                    }
                    out.add_entry(i, j, &(a * b));
                }
            }
        }
        Ok(out)
    }

    pub fn to_f64(&self) -> FloatMatrix {
        FloatMatrix {
            rows: self.rows,
            cols: self.cols,
            entries: self.entries.iter().map(rational_to_f64).collect(),
        }
    }

    pub fn ln_norm(&self) -> f64 {
        ln_rational(&self.norm())
    }
}

/// Plain f64 matrix used in the path dynamic programs and spectral bounds.
#[derive(Clone, Debug, PartialEq)]
pub struct FloatMatrix {
    pub rows: usize,
    pub cols: usize,
    pub entries: Vec<f64>, // row-major
}

impl FloatMatrix {
    pub fn identity(n: usize) -> Self {
        let mut entries = vec![0.0; n * n];
        for i in 0..n {
            entries[i * n + i] = 1.0;
        }
        FloatMatrix { rows: n, cols: n, entries }
    }

    pub fn entry(&self, r: usize, c: usize) -> f64 {
        self.entries[r * self.cols + c]
    }

    pub fn matmul(&self, other: &FloatMatrix) -> FloatMatrix {
        debug_assert_eq!(self.cols, other.rows);
        let mut out = FloatMatrix { rows: self.rows, cols: other.cols, entries: vec![0.0; self.rows * other.cols] };
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.entry(i, k);
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out.entries[i * other.cols + j] += a * other.entry(k, j);
                }
            }
        }
        out
    }

    pub fn norm(&self) -> f64 {
        self.entries.iter().map(|x| x.abs()).sum()
    }

    /// Entrywise <=; dominated products can never produce a larger norm after
    /// further nonnegative extensions.
    pub fn dominated_by(&self, other: &FloatMatrix) -> bool {
        self.rows == other.rows
            && self.cols == other.cols
            && self.entries.iter().zip(other.entries.iter()).all(|(a, b)| a <= b)
    }

    /// One-sided spectral radius estimate for a nonnegative square matrix:
    /// never exceeds the true rho, so dimension upper bounds built from it
    /// stay valid. Power iteration with the Collatz-Wielandt lower bound
    /// (tolerance 1e-12, 1e4 iterations), combined with max diagonal entries
    /// of powers up to 64 as a fallback for defective or periodic structure.
    pub fn spectral_radius_lower(&self) -> f64 {
        debug_assert_eq!(self.rows, self.cols);
        let n = self.rows;
        if n == 1 {
            return self.entries[0].abs();
        }
        let mut best = 0.0f64;
        // Collatz-Wielandt: for any v >= 0, min over supported i of (Av)_i/v_i
        // is a lower bound for rho.
        let mut v = vec![1.0 / (n as f64); n];
        for _ in 0..10_000 {
            let mut w = vec![0.0; n];
            for i in 0..n {
                for j in 0..n {
                    w[i] += self.entry(i, j) * v[j];
                }
            }
            let mut lo = f64::INFINITY;
            let mut hi = 0.0f64;
            for i in 0..n {
                if v[i] > 0.0 {
                    let r = w[i] / v[i];
                    lo = lo.min(r);
                    hi = hi.max(r);
                }
            }
            if lo.is_finite() {
                best = best.max(lo);
            }
            let s: f64 = w.iter().sum();
            if s <= 0.0 {
                break;
            }
            for x in w.iter_mut() {
                *x /= s;
            }
            v = w;
            if (hi - lo).abs() <= 1e-12 * hi.max(1e-300) {
                return best.max(lo);
            }
        }
        // Diagonal entries of powers: rho(A)^k >= (A^k)_ii for nonnegative A.
        let mut p = self.clone();
        for k in 1..=64u32 {
            let diag_max = (0..n).map(|i| p.entry(i, i)).fold(0.0f64, f64::max);
            if diag_max > 0.0 {
                best = best.max(diag_max.powf(1.0 / k as f64));
            }
            if k < 64 {
                p = p.matmul(self);
            }
        }
        best
    }
}

/// A strongly connected component of the transition graph. `maximal` means no
/// other component is reachable from it (paths can never come back once they
/// leave, so these are the classes that govern asymptotics).
#[derive(Clone, Debug)]
pub struct LoopClass {
    pub nodes: Vec<usize>,
    pub has_cycle: bool,
    pub maximal: bool,
}

#[derive(Clone, Debug)]
pub struct Edge {
    pub from: usize,
    pub to: usize,
    pub matrix: TransitionMatrix,
}

/// Exploration budget for the closure search. Finite type is a semi-decision:
/// closure within budget certifies the graph to that depth; running out of
/// budget is reported as an error, never as a proof of infinite type.
#[derive(Clone, Copy, Debug)]
pub struct GraphBudget {
    pub max_level: u32,
    pub max_cvs: usize,
}

impl Default for GraphBudget {
    fn default() -> Self {
        GraphBudget { max_level: 30, max_cvs: 20_000 }
    }
}

/// The transition graph of a finite-type IFS: nodes are characteristic
/// vectors, edges carry primitive transition matrices.
pub struct TransitionGraph {
    pub ifs: SimilarityIfs,
    pub nodes: Vec<CharacteristicVector>,
    pub root: usize,
    pub edges: Vec<Edge>,
    /// Outgoing edge indices per node.
    pub out_edges: Vec<Vec<usize>>,
    pub loop_classes: Vec<LoopClass>,
    /// Loop-class id per node.
    pub node_class: Vec<usize>,
    /// Depth at which the child relation closed (no frontier CV was new).
    pub certified_level: u32,
    /// First level at which the CV count stabilized, if it did before closure.
    pub cv_counts_by_level: Vec<usize>,
}

impl TransitionGraph {
    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edge_between(&self, from: usize, to: usize) -> Option<&Edge> {
        self.out_edges[from].iter().map(|&e| &self.edges[e]).find(|e| e.to == to)
    }

    /// ln(lambda), the base of every exponent in the dimension bounds.
    pub fn ln_lambda(&self) -> f64 {
        let l = self.ifs.lambda.abs();
        if let Some(q) = l.as_rational() {
            ln_rational(&q)
        } else {
            l.to_f64().ln()
        }
    }

    pub fn maximal_loop_classes(&self) -> impl Iterator<Item = (usize, &LoopClass)> {
        self.loop_classes.iter().enumerate().filter(|(_, c)| c.maximal)
    }
}

/// Breadth-first closure over characteristic vectors. Children of a node
/// depend only on its (length, neighbour set) geometry, so templates are
/// memoized per geometry.
pub fn build_transition_graph(ifs: &SimilarityIfs, budget: GraphBudget) -> Result<TransitionGraph> {
    if budget.max_level == 0 || budget.max_cvs == 0 {
        return Err(Error::InvalidParam("graph budget must be positive".into()));
    }
    // The root is a distinguished node: a child that happens to share its
    // characteristic vector (the Cantor left child does) gets its own node,
    // keeping the level-0 convention separate from the recurrent structure.
    let root_cv = CharacteristicVector::root(ifs);
    let mut nodes: Vec<CharacteristicVector> = vec![root_cv];
    let mut index: HashMap<CharacteristicVector, usize> = HashMap::new();
    let mut templates: HashMap<CvGeometry, Vec<(CharacteristicVector, TransitionMatrix)>> =
        HashMap::new();
    let mut edges: Vec<Edge> = Vec::new();
    let mut out_edges: Vec<Vec<usize>> = vec![Vec::new()];

    let mut frontier: Vec<usize> = vec![0];
    let mut level = 0u32;
    let mut cv_counts = vec![1usize];
    while !frontier.is_empty() {
        if level >= budget.max_level {
            return Err(Error::NotClosedWithinBudget {
                explored_level: level,
                cv_count: nodes.len(),
            });
        }
        level += 1;
        let mut next: Vec<usize> = Vec::new();
        for node_id in frontier {
            let geom = nodes[node_id].geometry();
            if !templates.contains_key(&geom) {
                let kids = children_of(&geom, ifs)?
                    .into_iter()
                    .map(|c| (c.cv, c.matrix))
                    .collect::<Vec<_>>();
                templates.insert(geom.clone(), kids);
            }
            let kids = templates.get(&geom).unwrap().clone();
            for (cv, matrix) in kids {
                let child_id = match index.get(&cv) {
                    Some(&id) => id,
                    None => {
                        let id = nodes.len();
                        if id >= budget.max_cvs {
                            return Err(Error::NotClosedWithinBudget {
                                explored_level: level,
                                cv_count: nodes.len(),
                            });
                        }
                        nodes.push(cv.clone());
                        index.insert(cv, id);
                        out_edges.push(Vec::new());
                        next.push(id);
                        id
                    }
                };
                let eid = edges.len();
                edges.push(Edge { from: node_id, to: child_id, matrix });
                out_edges[node_id].push(eid);
            }
        }
        cv_counts.push(nodes.len());
        frontier = next;
    }

    let (loop_classes, node_class) = analyze_components(&nodes, &edges);
    Ok(TransitionGraph {
        ifs: ifs.clone(),
        nodes,
        root: 0,
        edges,
        out_edges,
        loop_classes,
        node_class,
        certified_level: level,
        cv_counts_by_level: cv_counts,
    })
}

/// Tarjan SCC over the node set, plus cycle and maximality flags.
fn analyze_components(
    nodes: &[CharacteristicVector],
    edges: &[Edge],
) -> (Vec<LoopClass>, Vec<usize>) {
    let n = nodes.len();
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for e in edges {
        adj[e.from].push(e.to);
    }

    struct TarjanState {
        index: usize,
        stack: Vec<usize>,
        on_stack: Vec<bool>,
        idx: Vec<Option<usize>>,
        low: Vec<usize>,
        comps: Vec<Vec<usize>>,
    }
    fn strongconnect(v: usize, adj: &[Vec<usize>], st: &mut TarjanState) {
        st.idx[v] = Some(st.index);
        st.low[v] = st.index;
        st.index += 1;
        st.stack.push(v);
        st.on_stack[v] = true;
        for &w in &adj[v] {
            if st.idx[w].is_none() {
                strongconnect(w, adj, st);
                st.low[v] = st.low[v].min(st.low[w]);
            } else if st.on_stack[w] {
                st.low[v] = st.low[v].min(st.idx[w].unwrap());
            }
        }
        if st.low[v] == st.idx[v].unwrap() {
            let mut comp = Vec::new();
            loop {
                let w = st.stack.pop().expect("stack underflow");
                st.on_stack[w] = false;
                comp.push(w);
                if w == v {
                    break;
                }
            }
            st.comps.push(comp);
        }
    }

    let mut st = TarjanState {
        index: 0,
        stack: Vec::new(),
        on_stack: vec![false; n],
        idx: vec![None; n],
        low: vec![0; n],
        comps: Vec::new(),
    };
    for v in 0..n {
        if st.idx[v].is_none() {
            strongconnect(v, &adj, &mut st);
        }
    }

    let mut node_class = vec![usize::MAX; n];
    for (cid, comp) in st.comps.iter().enumerate() {
        for &v in comp {
            node_class[v] = cid;
        }
    }
    let mut has_cycle = vec![false; st.comps.len()];
    let mut leaves_class = vec![false; st.comps.len()];
    for e in edges {
        let cf = node_class[e.from];
        let ct = node_class[e.to];
        if cf == ct {
            has_cycle[cf] = true;
        } else {
            leaves_class[cf] = true;
        }
    }
    let classes = st
        .comps
        .into_iter()
        .enumerate()
        .map(|(cid, nodes)| LoopClass {
            nodes,
            has_cycle: has_cycle[cid],
            maximal: !leaves_class[cid],
        })
        .collect();
    (classes, node_class)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ifs::fixtures::{cantor_ifs, golden_ifs, incommensurable_ifs};

    #[test]
    fn cantor_graph_is_three_nodes_one_maximal_class() {
        let ifs = cantor_ifs("1/2", "1/2");
        let g = build_transition_graph(&ifs, GraphBudget::default()).unwrap();
        assert_eq!(g.node_count(), 3);
        let maximal: Vec<_> = g.maximal_loop_classes().collect();
        assert_eq!(maximal.len(), 1);
        assert_eq!(maximal[0].1.nodes.len(), 2);
        assert!(maximal[0].1.has_cycle);
        // Every matrix passes the column-nonzero invariant.
        assert!(g.edges.iter().all(|e| e.matrix.columns_nonzero()));
    }

    #[test]
    fn golden_graph_closes_and_is_stable_under_budget_doubling() {
        let ifs = golden_ifs();
        let g30 = build_transition_graph(&ifs, GraphBudget { max_level: 30, max_cvs: 20_000 }).unwrap();
        let g60 = build_transition_graph(&ifs, GraphBudget { max_level: 60, max_cvs: 20_000 }).unwrap();
        assert_eq!(g30.node_count(), g60.node_count());
        assert_eq!(g30.edge_count(), g60.edge_count());
        assert!(g30.edges.iter().all(|e| e.matrix.columns_nonzero()));
        // CV count is non-decreasing, and constant once the frontier closes.
        let counts = &g30.cv_counts_by_level;
        assert!(counts.windows(2).all(|w| w[0] <= w[1]));
        let last = counts.len() - 1;
        assert_eq!(counts[last], counts[last - 1], "{counts:?}");
    }

    #[test]
    fn incommensurable_ratios_exhaust_budget() {
        let ifs = incommensurable_ifs();
        let r = build_transition_graph(&ifs, GraphBudget { max_level: 12, max_cvs: 4_000 });
        match r {
            Err(Error::NotClosedWithinBudget { .. }) => {}
            other => panic!("expected budget exhaustion, got {:?}", other.map(|g| g.node_count())),
        }
    }

    #[test]
    fn cv_count_grows_monotonically_for_infinite_type() {
        let ifs = incommensurable_ifs();
        // Frontier sizes strictly grow for a few levels before the budget stops us.
        let mut geoms = std::collections::HashSet::new();
        let root = CharacteristicVector::root(&ifs);
        geoms.insert(root.geometry());
        let mut frontier = vec![root.geometry()];
        let mut counts = vec![1usize];
        for _ in 0..7 {
            let mut next = Vec::new();
            for g in &frontier {
                for child in crate::net::children_of(g, &ifs).unwrap() {
                    let cg = child.cv.geometry();
                    if geoms.insert(cg.clone()) {
                        next.push(cg);
                    }
                }
            }
            counts.push(geoms.len());
            frontier = next;
        }
        assert!(counts.windows(2).all(|w| w[0] < w[1]), "{counts:?}");
    }

    #[test]
    fn float_matrix_spectral_radius() {
        // Defective (Jordan-like): diagonal powers recover rho exactly.
        let m = FloatMatrix { rows: 2, cols: 2, entries: vec![0.5, 0.25, 0.0, 0.5] };
        let r = m.spectral_radius_lower();
        assert!(r <= 0.5 + 1e-12 && r >= 0.5 - 1e-9, "{r}");
        // Irreducible positive: power iteration converges.
        let p = FloatMatrix { rows: 2, cols: 2, entries: vec![0.5, 0.25, 0.25, 0.5] };
        assert!((p.spectral_radius_lower() - 0.75).abs() < 1e-9);
        let one = FloatMatrix { rows: 1, cols: 1, entries: vec![0.75] };
        assert!((one.spectral_radius_lower() - 0.75).abs() < 1e-15);
    }
}
