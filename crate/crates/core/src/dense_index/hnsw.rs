use std::cell::RefCell;
use std::cmp::{Ordering, Reverse};
use std::collections::{BinaryHeap, HashMap};
use std::sync::atomic::{AtomicUsize, Ordering as AtomicOrdering};

use parking_lot::{Mutex, RwLock};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::{dot_slices, hit_order, normalize, DenseVector, ScoredHit};

pub const DEFAULT_M: usize = 16;
pub const DEFAULT_EF_CONSTRUCTION: usize = 1000;
pub const DEFAULT_EF_SEARCH: usize = 1000;
pub const DEFAULT_SEED: u64 = 0x5eed;

/// Sampled levels are capped here; reaching it needs U < M^-MAX_LEVEL.
const MAX_LEVEL: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HnswParams {
    /// Max neighbors per node on layers >= 1. Layer 0 allows `2 * m`.
    pub m: usize,
    pub ef_construction: usize,
    /// Level multiplier `mL`; levels are `floor(-ln(U) * mL)`.
    pub level_multiplier: f64,
    pub seed: u64,
}

impl Default for HnswParams {
    fn default() -> Self {
        Self::new(DEFAULT_M, DEFAULT_EF_CONSTRUCTION, DEFAULT_SEED)
    }
}

impl HnswParams {
    /// Parameters with the standard `mL = 1 / ln(m)`.
    pub fn new(m: usize, ef_construction: usize, seed: u64) -> Self {
        Self {
            m,
            ef_construction,
            level_multiplier: 1.0 / (m.max(2) as f64).ln(),
            seed,
        }
    }

    pub(crate) fn validate(&self) -> Result<()> {
        if self.m < 2 {
            return Err(Error::InvalidArgument("M must be >= 2".into()));
        }
        if self.ef_construction < 1 {
            return Err(Error::InvalidArgument("ef_construction must be >= 1".into()));
        }
        if !(self.level_multiplier.is_finite() && self.level_multiplier >= 0.0) {
            return Err(Error::InvalidArgument("level multiplier must be finite and >= 0".into()));
        }
        Ok(())
    }

    pub fn max_degree(&self, layer: usize) -> usize {
        if layer == 0 {
            2 * self.m
        } else {
            self.m
        }
    }
}

/// Layered proximity graph over unit-normalized vectors, scored by dot product.
#[derive(Debug, Clone)]
pub struct HnswGraph {
    pub(crate) params: HnswParams,
    pub(crate) dim: usize,
    pub(crate) doc_ids: Vec<String>,
    pub(crate) vectors: Vec<f32>,
    /// `links[node][layer]` for layers `0..=top_layer(node)`.
    pub(crate) links: Vec<Vec<Vec<u32>>>,
    pub(crate) entry_point: Option<u32>,
    id_index: HashMap<String, u32>,
    rng: ChaCha8Rng,
}

/// Similarity of a node to the current target; ordered so that a max-heap pops the
/// most similar node first and equal similarities prefer the lower ordinal.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Near {
    pub sim: f64,
    pub node: u32,
}

impl PartialEq for Near {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Near {}

impl PartialOrd for Near {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Near {
    fn cmp(&self, other: &Self) -> Ordering {
        self.sim
            .total_cmp(&other.sim)
            .then_with(|| other.node.cmp(&self.node))
    }
}

/// Read access to adjacency during search; implemented by the plain graph and by the
/// lock-protected builder used for parallel construction.
pub(crate) trait LinkRead {
    fn vector(&self, node: u32) -> &[f32];
    fn for_each_neighbor(&self, node: u32, layer: usize, f: impl FnMut(u32));

    fn sim(&self, query: &[f32], node: u32) -> f64 {
        dot_slices(query, self.vector(node))
    }
}

impl LinkRead for HnswGraph {
    fn vector(&self, node: u32) -> &[f32] {
        let start = node as usize * self.dim;
        &self.vectors[start..start + self.dim]
    }

    fn for_each_neighbor(&self, node: u32, layer: usize, f: impl FnMut(u32)) {
        self.links[node as usize][layer].iter().copied().for_each(f);
    }
}

struct Visited {
    marks: Vec<u32>,
    epoch: u32,
}

impl Visited {
    fn reset(&mut self, n: usize) {
        if self.marks.len() < n {
            self.marks.resize(n, 0);
        }
        self.epoch = self.epoch.wrapping_add(1);
        if self.epoch == 0 {
            self.marks.fill(0);
            self.epoch = 1;
        }
    }

    /// Returns true when `node` was not yet visited.
    fn insert(&mut self, node: u32) -> bool {
        let slot = &mut self.marks[node as usize];
        if *slot == self.epoch {
            false
        } else {
            *slot = self.epoch;
            true
        }
    }
}

thread_local! {
    static VISITED: RefCell<Visited> = const { RefCell::new(Visited { marks: Vec::new(), epoch: 0 }) };
}

/// Greedy walk on one layer towards the most similar node.
pub(crate) fn greedy_closest<G: LinkRead>(g: &G, query: &[f32], mut cur: Near, layer: usize) -> Near {
    loop {
        let mut best = cur;
        g.for_each_neighbor(cur.node, layer, |nb| {
            let cand = Near {
                sim: g.sim(query, nb),
                node: nb,
            };
            if cand > best {
                best = cand;
            }
        });
        if best.node == cur.node {
            return cur;
        }
        cur = best;
    }
}

/// Beam search on one layer. Returns up to `ef` nodes, most similar first.
///
/// The search stops only once the result set is full and the best remaining candidate
/// cannot improve it, so `ef >= node count` visits everything reachable from `entry`.
pub(crate) fn search_layer<G: LinkRead>(
    g: &G,
    node_count: usize,
    query: &[f32],
    entry: &[Near],
    ef: usize,
    layer: usize,
) -> Vec<Near> {
    VISITED.with_borrow_mut(|visited| {
        visited.reset(node_count);
        let mut candidates: BinaryHeap<Near> = BinaryHeap::new();
        let mut results: BinaryHeap<Reverse<Near>> = BinaryHeap::new();
        for &e in entry {
            if visited.insert(e.node) {
                candidates.push(e);
                results.push(Reverse(e));
                if results.len() > ef {
                    results.pop();
                }
            }
        }
        while let Some(c) = candidates.pop() {
            if results.len() >= ef {
                if let Some(Reverse(worst)) = results.peek() {
                    if c.sim < worst.sim {
                        break;
                    }
                }
            }
            g.for_each_neighbor(c.node, layer, |nb| {
                if !visited.insert(nb) {
                    return;
                }
                let cand = Near {
                    sim: g.sim(query, nb),
                    node: nb,
                };
                let admit = results.len() < ef
                    || results.peek().is_some_and(|Reverse(worst)| cand > *worst);
                if admit {
                    candidates.push(cand);
                    results.push(Reverse(cand));
                    if results.len() > ef {
                        results.pop();
                    }
                }
            });
        }
        let mut out: Vec<Near> = results.into_iter().map(|Reverse(n)| n).collect();
        out.sort_unstable_by(|a, b| b.cmp(a));
        out
    })
}

/// Neighbor-selection heuristic: walk candidates from most to least similar and keep
/// one only if it is at least as similar to the target as to every neighbor already kept.
pub(crate) fn select_neighbors<G: LinkRead>(g: &G, candidates: &[Near], m: usize) -> Vec<u32> {
    let mut kept: Vec<u32> = Vec::with_capacity(m);
    for c in candidates {
        if kept.len() >= m {
            break;
        }
        let cv = g.vector(c.node);
        if kept.iter().all(|&r| dot_slices(cv, g.vector(r)) <= c.sim) {
            kept.push(c.node);
        }
    }
    kept
}

/// Adds `new` to `owner`'s list on `layer`, re-selecting with the heuristic when the
/// degree bound is exceeded.
pub(crate) fn add_link<G: LinkRead>(
    g: &G,
    list: &mut Vec<u32>,
    owner: u32,
    new: u32,
    max_degree: usize,
) {
    if list.contains(&new) || owner == new {
        return;
    }
    list.push(new);
    if list.len() <= max_degree {
        return;
    }
    let ov = g.vector(owner);
    let mut cands: Vec<Near> = list
        .iter()
        .map(|&n| Near {
            sim: dot_slices(ov, g.vector(n)),
            node: n,
        })
        .collect();
    cands.sort_unstable_by(|a, b| b.cmp(a));
    *list = select_neighbors(g, &cands, max_degree);
}

pub(crate) fn sample_level(rng: &mut ChaCha8Rng, level_multiplier: f64) -> usize {
    let u: f64 = loop {
        let u: f64 = rng.random();
        if u > 0.0 {
            break u;
        }
    };
    ((-u.ln() * level_multiplier).floor() as usize).min(MAX_LEVEL)
}

impl HnswGraph {
    pub fn new(params: HnswParams) -> Result<Self> {
        params.validate()?;
        Ok(Self {
            params,
            dim: 0,
            doc_ids: Vec::new(),
            vectors: Vec::new(),
            links: Vec::new(),
            entry_point: None,
            id_index: HashMap::new(),
            rng: ChaCha8Rng::seed_from_u64(params.seed),
        })
    }

    /// Builds a graph from `items`. `threads == 1` is the deterministic path; more
    /// threads insert concurrently and the resulting graph depends on scheduling.
    pub fn build<I, S>(params: HnswParams, items: I, threads: usize) -> Result<Self>
    where
        I: IntoIterator<Item = (S, DenseVector)>,
        S: Into<String>,
    {
        if threads <= 1 {
            let mut g = Self::new(params)?;
            for (id, v) in items {
                g.insert(id, &v)?;
            }
            return Ok(g);
        }
        build_parallel(params, items, threads)
    }

    pub fn params(&self) -> &HnswParams {
        &self.params
    }

    /// Zero until the first insertion.
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.doc_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.doc_ids.is_empty()
    }

    pub fn entry_point(&self) -> Option<u32> {
        self.entry_point
    }

    pub fn doc_id(&self, node: u32) -> &str {
        &self.doc_ids[node as usize]
    }

    pub fn top_layer(&self, node: u32) -> usize {
        self.links[node as usize].len() - 1
    }

    pub fn neighbors(&self, node: u32, layer: usize) -> &[u32] {
        &self.links[node as usize][layer]
    }

    pub fn stored_vector(&self, node: u32) -> &[f32] {
        self.vector(node)
    }

    pub fn max_layer(&self) -> usize {
        self.entry_point.map_or(0, |ep| self.top_layer(ep))
    }

    fn check_new(&self, doc_id: &str, v: &DenseVector) -> Result<Vec<f32>> {
        if doc_id.is_empty() {
            return Err(Error::InvalidArgument("empty doc_id".into()));
        }
        if self.dim != 0 && v.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: v.dim(),
            });
        }
        if self.id_index.contains_key(doc_id) {
            return Err(Error::DuplicateDocId(doc_id.to_owned()));
        }
        Ok(normalize(v)?.into_values())
    }

    /// Normalizes `v` and links it into the graph.
    pub fn insert(&mut self, doc_id: impl Into<String>, v: &DenseVector) -> Result<u32> {
        let doc_id = doc_id.into();
        let unit = self.check_new(&doc_id, v)?;
        let level = sample_level(&mut self.rng, self.params.level_multiplier);
        let node = self.push_node(doc_id, &unit, level)?;

        let Some(entry) = self.entry_point else {
            self.entry_point = Some(node);
            return Ok(node);
        };
        let max_level = self.top_layer(entry);
        let plan = plan_links(self, self.len(), &unit, entry, max_level, level, &self.params);
        for (layer, selected) in plan {
            let max_degree = self.params.max_degree(layer);
            for &nb in &selected {
                let mut list = std::mem::take(&mut self.links[nb as usize][layer]);
                add_link(self, &mut list, nb, node, max_degree);
                self.links[nb as usize][layer] = list;
            }
            self.links[node as usize][layer] = selected;
        }
        if level > max_level {
            self.entry_point = Some(node);
        }
        Ok(node)
    }

    fn push_node(&mut self, doc_id: String, unit: &[f32], level: usize) -> Result<u32> {
        let node = u32::try_from(self.doc_ids.len())
            .map_err(|_| Error::InvalidArgument("too many nodes".into()))?;
        if self.dim == 0 {
            self.dim = unit.len();
        }
        self.id_index.insert(doc_id.clone(), node);
        self.doc_ids.push(doc_id);
        self.vectors.extend_from_slice(unit);
        self.links.push(vec![Vec::new(); level + 1]);
        Ok(node)
    }

    /// Approximate top-`k` by cosine similarity with beam width `ef_search` on layer 0.
    pub fn search(&self, query: &DenseVector, k: usize, ef_search: usize) -> Result<Vec<ScoredHit>> {
        if k < 1 {
            return Err(Error::InvalidArgument("k must be >= 1".into()));
        }
        if ef_search < k {
            return Err(Error::InvalidArgument(format!(
                "ef_search ({ef_search}) must be >= k ({k})"
            )));
        }
        let Some(entry) = self.entry_point else {
            return Ok(Vec::new());
        };
        if query.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: query.dim(),
            });
        }
        let q = normalize(query)?.into_values();
        let mut cur = Near {
            sim: self.sim(&q, entry),
            node: entry,
        };
        for layer in (1..=self.top_layer(entry)).rev() {
            cur = greedy_closest(self, &q, cur, layer);
        }
        let found = search_layer(self, self.len(), &q, &[cur], ef_search, 0);
        let mut hits: Vec<(u32, f64)> = found.iter().map(|n| (n.node, n.sim)).collect();
        hits.sort_by(|a, b| hit_order(a.1, self.doc_id(a.0), b.1, self.doc_id(b.0)));
        hits.truncate(k);
        Ok(hits
            .into_iter()
            .enumerate()
            .map(|(i, (node, score))| ScoredHit {
                doc_id: self.doc_id(node).to_owned(),
                score,
                rank: i as u32 + 1,
            })
            .collect())
    }

    pub(crate) fn from_parts(
        params: HnswParams,
        dim: usize,
        doc_ids: Vec<String>,
        vectors: Vec<f32>,
        links: Vec<Vec<Vec<u32>>>,
        entry_point: Option<u32>,
    ) -> Self {
        let id_index = doc_ids
            .iter()
            .enumerate()
            .map(|(i, id)| (id.clone(), i as u32))
            .collect();
        // Continue the level sequence deterministically if more nodes are inserted later.
        let rng = ChaCha8Rng::seed_from_u64(params.seed ^ (doc_ids.len() as u64).rotate_left(32));
        Self {
            params,
            dim,
            doc_ids,
            vectors,
            links,
            entry_point,
            id_index,
            rng,
        }
    }
}

/// Computes, for each layer the new node lives on (top-down), the neighbors it links to.
fn plan_links<G: LinkRead>(
    g: &G,
    node_count: usize,
    unit: &[f32],
    entry: u32,
    max_level: usize,
    level: usize,
    params: &HnswParams,
) -> Vec<(usize, Vec<u32>)> {
    let mut cur = Near {
        sim: g.sim(unit, entry),
        node: entry,
    };
    for layer in (level + 1..=max_level).rev() {
        cur = greedy_closest(g, unit, cur, layer);
    }
    let mut eps = vec![cur];
    let mut plan = Vec::with_capacity(level.min(max_level) + 1);
    for layer in (0..=level.min(max_level)).rev() {
        let found = search_layer(g, node_count, unit, &eps, params.ef_construction, layer);
        plan.push((layer, select_neighbors(g, &found, params.m)));
        eps = found;
    }
    plan
}

struct SharedGraph {
    dim: usize,
    vectors: Vec<f32>,
    links: Vec<Vec<RwLock<Vec<u32>>>>,
}

impl LinkRead for SharedGraph {
    fn vector(&self, node: u32) -> &[f32] {
        let start = node as usize * self.dim;
        &self.vectors[start..start + self.dim]
    }

    fn for_each_neighbor(&self, node: u32, layer: usize, f: impl FnMut(u32)) {
        self.links[node as usize][layer].read().iter().copied().for_each(f);
    }
}

/// Concurrent insertion with per-node-per-layer locks. Levels are sampled up front in
/// ingestion order from the seeded generator, so they match the serial build; the
/// adjacency depends on thread interleaving.
fn build_parallel<I, S>(params: HnswParams, items: I, threads: usize) -> Result<HnswGraph>
where
    I: IntoIterator<Item = (S, DenseVector)>,
    S: Into<String>,
{
    let mut staging = HnswGraph::new(params)?;
    let mut levels = Vec::new();
    for (id, v) in items {
        let id = id.into();
        let unit = staging.check_new(&id, &v)?;
        let level = sample_level(&mut staging.rng, params.level_multiplier);
        staging.push_node(id, &unit, level)?;
        levels.push(level);
    }
    let n = levels.len();
    if n == 0 {
        return Ok(staging);
    }
    let shared = SharedGraph {
        dim: staging.dim,
        vectors: std::mem::take(&mut staging.vectors),
        links: levels
            .iter()
            .map(|&l| (0..=l).map(|_| RwLock::new(Vec::new())).collect())
            .collect(),
    };
    // (entry point, its level)
    let top = Mutex::new((0u32, levels[0]));
    let next = AtomicUsize::new(1);

    std::thread::scope(|scope| {
        for _ in 0..threads {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, AtomicOrdering::Relaxed);
                if i >= n {
                    break;
                }
                let node = i as u32;
                let level = levels[i];
                let mut guard = Some(top.lock());
                let (entry, max_level) = **guard.as_ref().unwrap();
                if level <= max_level {
                    guard = None;
                }
                let unit = shared.vector(node).to_vec();
                let plan = plan_links(&shared, n, &unit, entry, max_level, level, &params);
                for (layer, selected) in plan {
                    *shared.links[i][layer].write() = selected.clone();
                    let max_degree = params.max_degree(layer);
                    for nb in selected {
                        let mut list = shared.links[nb as usize][layer].write();
                        add_link(&shared, &mut list, nb, node, max_degree);
                    }
                }
                if let Some(mut g) = guard {
                    *g = (node, level);
                }
            });
        }
    });

    let (entry, _) = top.into_inner();
    let links = shared
        .links
        .into_iter()
        .map(|layers| layers.into_iter().map(RwLock::into_inner).collect())
        .collect();
    Ok(HnswGraph::from_parts(
        params,
        staging.dim,
        staging.doc_ids,
        shared.vectors,
        links,
        Some(entry),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dv(v: &[f32]) -> DenseVector {
        DenseVector::new(v.to_vec()).unwrap()
    }

    #[test]
    fn first_insert_becomes_entry_point() {
        let mut g = HnswGraph::new(HnswParams::new(4, 10, 1)).unwrap();
        let node = g.insert("a", &dv(&[1.0, 2.0])).unwrap();
        assert_eq!(g.entry_point(), Some(node));
        for layer in 0..=g.top_layer(node) {
            assert!(g.neighbors(node, layer).is_empty());
        }
    }

    #[test]
    fn two_nodes_link_on_shared_layers() {
        let mut g = HnswGraph::new(HnswParams::new(4, 10, 7)).unwrap();
        let a = g.insert("a", &dv(&[1.0, 0.0])).unwrap();
        let b = g.insert("b", &dv(&[0.0, 1.0])).unwrap();
        let shared = g.top_layer(a).min(g.top_layer(b));
        for layer in 0..=shared {
            assert_eq!(g.neighbors(a, layer), [b]);
            assert_eq!(g.neighbors(b, layer), [a]);
        }
    }

    #[test]
    fn insert_errors() {
        let mut g = HnswGraph::new(HnswParams::new(4, 10, 7)).unwrap();
        g.insert("a", &dv(&[1.0, 0.0])).unwrap();
        assert!(matches!(g.insert("b", &dv(&[1.0])), Err(Error::DimensionMismatch { .. })));
        assert!(matches!(g.insert("a", &dv(&[0.0, 1.0])), Err(Error::DuplicateDocId(_))));
        assert!(matches!(g.insert("c", &dv(&[0.0, 0.0])), Err(Error::ZeroVector)));
        assert_eq!(g.len(), 1);
    }

    #[test]
    fn search_contract() {
        let empty = HnswGraph::new(HnswParams::default()).unwrap();
        assert!(empty.search(&dv(&[1.0]), 5, 10).unwrap().is_empty());

        let mut g = HnswGraph::new(HnswParams::new(4, 16, 3)).unwrap();
        g.insert("x", &dv(&[3.0, 4.0])).unwrap();
        g.insert("y", &dv(&[-1.0, 0.5])).unwrap();
        let hits = g.search(&dv(&[3.0, 4.0]), 1, 1).unwrap();
        assert_eq!(hits[0].doc_id, "x");
        assert!((hits[0].score - 1.0).abs() < 1e-5);
        assert_eq!(g.search(&dv(&[1.0, 1.0]), 10, 10).unwrap().len(), 2);
        assert!(g.search(&dv(&[1.0, 1.0]), 5, 4).is_err());
        assert!(g.search(&dv(&[1.0, 1.0]), 0, 4).is_err());
    }

    #[test]
    fn level_distribution_follows_multiplier() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let ml = 1.0 / 16f64.ln();
        let n = 100_000;
        let above = (0..n).filter(|_| sample_level(&mut rng, ml) >= 1).count();
        // P(level >= 1) = 1/M
        let frac = above as f64 / n as f64;
        assert!((frac - 1.0 / 16.0).abs() < 0.005, "{frac}");
    }
}
