//! Cardinality, partition and laminar matroid constraints.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use crate::document::{ConstraintDocument, LaminarSetDocument};
use crate::error::{Error, Result};
use crate::geometry::{PointId, PointSet};

/// Default cap on the number of candidate sets an exhaustive search may visit.
pub const DEFAULT_ORACLE_CAP: u128 = 1_000_000;

/// Enumeration cap, overridable through `DETMAX_ORACLE_CAP`.
pub fn oracle_cap() -> u128 {
    std::env::var("DETMAX_ORACLE_CAP")
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .unwrap_or(DEFAULT_ORACLE_CAP)
}

/// `C(n, k)`, saturating at `u128::MAX`.
pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        // acc * (n - i) / (i + 1) stays integral at every step
        acc = match acc.checked_mul((n - i) as u128) {
            Some(x) => x / (i as u128 + 1),
            None => return u128::MAX,
        };
    }
    acc
}

#[derive(Debug, Clone, PartialEq)]
pub struct PartitionConstraint {
    caps: BTreeMap<usize, usize>,
    rank: usize,
    stripped: Vec<usize>,
}

impl PartitionConstraint {
    /// `caps[g]` bounds group `g`. Groups with cap zero can never contribute
    /// and are dropped; see [`PartitionConstraint::stripped_groups`].
    pub fn new(caps: &[usize]) -> Self {
        let mut kept = BTreeMap::new();
        let mut stripped = Vec::new();
        for (g, &c) in caps.iter().enumerate() {
            if c == 0 {
                stripped.push(g);
            } else {
                kept.insert(g, c);
            }
        }
        let rank = kept.values().sum();
        Self {
            caps: kept,
            rank,
            stripped,
        }
    }

    pub fn caps(&self) -> &BTreeMap<usize, usize> {
        &self.caps
    }

    pub fn cap(&self, group: usize) -> Option<usize> {
        self.caps.get(&group).copied()
    }

    pub fn num_groups(&self) -> usize {
        self.caps.len()
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn stripped_groups(&self) -> &[usize] {
        &self.stripped
    }

    /// Every point must carry a label with a positive cap.
    pub fn validate(&self, points: &PointSet) -> Result<()> {
        self.members_of(points, points.ids()).map(drop)
    }

    /// Groups `ids` (ascending, all in `points`) by label, failing like
    /// [`Self::validate`] on an ungrouped or uncapped point.
    pub fn members_of(&self, points: &PointSet, ids: &[PointId]) -> Result<BTreeMap<usize, Vec<PointId>>> {
        let mut out: BTreeMap<usize, Vec<PointId>> =
            self.caps.keys().map(|&g| (g, Vec::new())).collect();
        for &id in ids {
            match points.group(id)? {
                None => {
                    return Err(Error::InvalidConstraint(format!(
                        "point {id} has no group under a partition constraint"
                    )))
                }
                Some(g) => match out.get_mut(&g) {
                    Some(list) => list.push(id),
                    None => {
                        return Err(Error::InvalidConstraint(format!(
                            "point {id} belongs to group {g}, which has no cap"
                        )))
                    }
                },
            }
        }
        Ok(out)
    }

    /// Ids of `points` in each group, ascending.
    pub fn members(&self, points: &PointSet) -> BTreeMap<usize, Vec<PointId>> {
        let mut out: BTreeMap<usize, Vec<PointId>> =
            self.caps.keys().map(|&g| (g, Vec::new())).collect();
        for (id, group, _) in points.iter() {
            if let Some(list) = group.and_then(|g| out.get_mut(&g)) {
                list.push(id);
            }
        }
        out
    }

    /// The same matroid as a flat laminar family.
    pub fn to_laminar(&self, points: &PointSet) -> Result<LaminarConstraint> {
        self.validate(points)?;
        let sets = self
            .members(points)
            .into_iter()
            .filter(|(_, ids)| !ids.is_empty())
            .map(|(g, ids)| (ids, self.caps[&g]))
            .collect();
        LaminarConstraint::new(sets, points.ids())
    }
}

/// A node of a laminar family.
#[derive(Debug, Clone, PartialEq)]
pub struct LaminarNode {
    pub ids: Vec<PointId>,
    pub cap: usize,
    pub parent: Option<usize>,
    pub children: Vec<usize>,
}

/// A validated, non-redundant laminar family.
///
/// Nodes are stored in preorder with roots and siblings ordered by their
/// smallest id.
#[derive(Debug, Clone, PartialEq)]
pub struct LaminarConstraint {
    nodes: Vec<LaminarNode>,
    roots: Vec<usize>,
    /// For each covered id, the nodes containing it from innermost outward.
    chains: HashMap<PointId, Vec<usize>>,
    rank: usize,
    warnings: Vec<String>,
}

impl LaminarConstraint {
    /// Validates laminarity over `ground`, then normalises the family:
    /// duplicate sets keep the smaller cap, caps are tightened to the rank
    /// of their set, and inner sets whose cap is not strictly below their
    /// parent's are dropped as redundant. Each repair is recorded in
    /// [`LaminarConstraint::warnings`].
    pub fn new(sets: Vec<(Vec<PointId>, usize)>, ground: &[PointId]) -> Result<Self> {
        let ground_set: BTreeSet<PointId> = ground.iter().copied().collect();
        let mut warnings = Vec::new();
        let mut family: Vec<(Vec<PointId>, usize)> = Vec::new();
        for (mut ids, cap) in sets {
            ids.sort_unstable();
            ids.dedup();
            if let Some(&bad) = ids.iter().find(|id| !ground_set.contains(id)) {
                return Err(Error::UnknownId(bad));
            }
            if cap == 0 {
                return Err(Error::InvalidConstraint(
                    "laminar caps must be >= 1 (strip cap-0 sets before construction)".into(),
                ));
            }
            if ids.is_empty() {
                warnings.push("dropped an empty laminar set".into());
                continue;
            }
            if let Some(existing) = family.iter_mut().find(|(other, _)| *other == ids) {
                warnings.push(format!(
                    "merged duplicate laminar set of size {} (caps {} and {cap})",
                    ids.len(),
                    existing.1
                ));
                existing.1 = existing.1.min(cap);
                continue;
            }
            family.push((ids, cap));
        }

        for i in 0..family.len() {
            for j in i + 1..family.len() {
                if relation(&family[i].0, &family[j].0) == Relation::Crossing {
                    return Err(Error::InvalidConstraint(format!(
                        "sets {i} and {j} overlap without nesting"
                    )));
                }
            }
        }

        // Parent = smallest strict superset.
        let mut order: Vec<usize> = (0..family.len()).collect();
        order.sort_by_key(|&i| (family[i].0.len(), family[i].0[0]));
        let mut parent: Vec<Option<usize>> = vec![None; family.len()];
        for (pos, &i) in order.iter().enumerate() {
            parent[i] = order[pos + 1..]
                .iter()
                .copied()
                .find(|&j| relation(&family[i].0, &family[j].0) == Relation::Subset);
        }

        // Tighten caps to ranks, smallest sets first.
        let mut alive = vec![true; family.len()];
        for &i in &order {
            let kids: Vec<usize> = (0..family.len()).filter(|&c| parent[c] == Some(i)).collect();
            let covered: usize = kids.iter().map(|&c| family[c].0.len()).sum();
            let kid_rank: usize = kids.iter().map(|&c| family[c].1).sum();
            let rank = family[i].1.min(kid_rank + family[i].0.len() - covered);
            if rank < family[i].1 {
                warnings.push(format!(
                    "tightened cap of a size-{} set from {} to its rank {rank}",
                    family[i].0.len(),
                    family[i].1
                ));
                family[i].1 = rank;
            }
        }

        // Drop redundant inner sets until the family is non-redundant.
        loop {
            let victim = (0..family.len()).find(|&c| {
                alive[c] && parent[c].is_some_and(|p| family[c].1 >= family[p].1)
            });
            let Some(c) = victim else { break };
            alive[c] = false;
            let p = parent[c];
            for other in 0..family.len() {
                if parent[other] == Some(c) {
                    parent[other] = p;
                }
            }
            warnings.push(format!(
                "dropped redundant laminar set of size {} (cap {} not below parent cap {})",
                family[c].0.len(),
                family[c].1,
                family[p.expect("victim has a parent")].1
            ));
        }

        // Preorder layout.
        let first = |i: usize| family[i].0[0];
        let mut roots: Vec<usize> = (0..family.len())
            .filter(|&i| alive[i] && parent[i].is_none())
            .collect();
        roots.sort_by_key(|&i| first(i));
        let mut new_index = vec![usize::MAX; family.len()];
        let mut layout = Vec::new();
        let mut stack: Vec<usize> = roots.iter().rev().copied().collect();
        while let Some(i) = stack.pop() {
            new_index[i] = layout.len();
            layout.push(i);
            let mut kids: Vec<usize> = (0..family.len())
                .filter(|&c| alive[c] && parent[c] == Some(i))
                .collect();
            kids.sort_by_key(|&c| first(c));
            stack.extend(kids.into_iter().rev());
        }
        let nodes: Vec<LaminarNode> = layout
            .iter()
            .map(|&i| {
                let mut children: Vec<usize> = (0..family.len())
                    .filter(|&c| alive[c] && parent[c] == Some(i))
                    .map(|c| new_index[c])
                    .collect();
                children.sort_unstable();
                LaminarNode {
                    ids: family[i].0.clone(),
                    cap: family[i].1,
                    parent: parent[i].map(|p| new_index[p]),
                    children,
                }
            })
            .collect();
        let roots: Vec<usize> = roots.iter().map(|&i| new_index[i]).collect();

        let mut chains: HashMap<PointId, Vec<usize>> = HashMap::new();
        for (n, node) in nodes.iter().enumerate() {
            for &id in &node.ids {
                chains.entry(id).or_default().push(n);
            }
        }
        for chain in chains.values_mut() {
            // preorder puts ancestors first; innermost first means larger index first
            chain.sort_unstable_by(|a, b| b.cmp(a));
        }

        let covered: usize = roots.iter().map(|&r| nodes[r].ids.len()).sum();
        let rank = roots.iter().map(|&r| nodes[r].cap).sum::<usize>() + ground_set.len() - covered;

        Ok(Self {
            nodes,
            roots,
            chains,
            rank,
            warnings,
        })
    }

    pub fn nodes(&self) -> &[LaminarNode] {
        &self.nodes
    }

    pub fn node(&self, i: usize) -> &LaminarNode {
        &self.nodes[i]
    }

    pub fn roots(&self) -> &[usize] {
        &self.roots
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    /// Nodes containing `id`, innermost first.
    pub fn chain(&self, id: PointId) -> &[usize] {
        self.chains.get(&id).map(Vec::as_slice).unwrap_or(&[])
    }

    /// The child of `node` that contains `id`, if any.
    pub fn child_containing(&self, node: usize, id: PointId) -> Option<usize> {
        let chain = self.chain(id);
        let pos = chain.iter().position(|&n| n == node)?;
        pos.checked_sub(1).map(|p| chain[p])
    }

    /// Maximum number of family sets sharing one element.
    pub fn cover_number(&self) -> usize {
        self.chains.values().map(Vec::len).max().unwrap_or(0)
    }

    pub fn to_document(&self) -> Vec<LaminarSetDocument> {
        self.nodes
            .iter()
            .map(|n| LaminarSetDocument {
                ids: n.ids.clone(),
                cap: n.cap,
            })
            .collect()
    }
}

#[derive(Debug, PartialEq)]
enum Relation {
    Disjoint,
    Subset,
    Superset,
    Crossing,
}

/// Relation of sorted `a` to sorted `b`.
fn relation(a: &[PointId], b: &[PointId]) -> Relation {
    let (mut i, mut j, mut common) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                common += 1;
                i += 1;
                j += 1;
            }
        }
    }
    if common == 0 {
        Relation::Disjoint
    } else if common == a.len() {
        Relation::Subset
    } else if common == b.len() {
        Relation::Superset
    } else {
        Relation::Crossing
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Constraint {
    Cardinality { k: usize },
    Partition(PartitionConstraint),
    Laminar(LaminarConstraint),
}

impl Constraint {
    pub fn rank(&self) -> usize {
        match self {
            Constraint::Cardinality { k } => *k,
            Constraint::Partition(p) => p.rank(),
            Constraint::Laminar(l) => l.rank(),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Constraint::Cardinality { .. } => "cardinality",
            Constraint::Partition(_) => "partition",
            Constraint::Laminar(_) => "laminar",
        }
    }

    pub fn to_document(&self) -> ConstraintDocument {
        match self {
            Constraint::Cardinality { k } => ConstraintDocument::Cardinality { k: *k },
            Constraint::Partition(p) => {
                let len = p
                    .caps
                    .keys()
                    .chain(p.stripped.iter())
                    .max()
                    .map_or(0, |g| g + 1);
                let caps = (0..len).map(|g| p.cap(g).unwrap_or(0)).collect();
                ConstraintDocument::Partition { caps }
            }
            Constraint::Laminar(l) => ConstraintDocument::Laminar {
                sets: l.to_document(),
            },
        }
    }

    /// Incremental independence checker over the points of `points`.
    pub fn tracker(&self, points: &PointSet) -> Result<IndependenceTracker> {
        let n = points.len();
        match self {
            Constraint::Cardinality { k } => Ok(IndependenceTracker {
                caps: vec![*k],
                counts: vec![0],
                membership: vec![vec![0]; n],
            }),
            Constraint::Partition(p) => {
                p.validate(points)?;
                let slot: BTreeMap<usize, usize> =
                    p.caps.keys().enumerate().map(|(s, &g)| (g, s)).collect();
                let membership = (0..n)
                    .map(|i| vec![slot[&points.group_at(i).expect("validated")]])
                    .collect();
                Ok(IndependenceTracker {
                    caps: p.caps.values().copied().collect(),
                    counts: vec![0; p.caps.len()],
                    membership,
                })
            }
            Constraint::Laminar(l) => {
                let membership = (0..n).map(|i| l.chain(points.id_at(i)).to_vec()).collect();
                Ok(IndependenceTracker {
                    caps: l.nodes.iter().map(|n| n.cap).collect(),
                    counts: vec![0; l.nodes.len()],
                    membership,
                })
            }
        }
    }

    pub fn is_independent(&self, points: &PointSet, set: &[PointId]) -> Result<bool> {
        let mut tracker = self.tracker(points)?;
        let idx = proper_indices(points, set)?;
        Ok(idx.into_iter().all(|i| tracker.try_add(i)))
    }

    pub fn is_base(&self, points: &PointSet, set: &[PointId]) -> Result<bool> {
        Ok(self.is_independent(points, set)? && set.len() == self.rank())
    }

    /// All bases over `points` in lexicographic order of their sorted ids.
    ///
    /// Refuses to start when `C(n, rank)` exceeds [`oracle_cap`].
    pub fn enumerate_bases(&self, points: &PointSet) -> Result<Bases> {
        self.enumerate_bases_capped(points, oracle_cap())
    }

    /// [`Constraint::enumerate_bases`] with an explicit cap.
    pub fn enumerate_bases_capped(&self, points: &PointSet, cap: u128) -> Result<Bases> {
        let count = binomial(points.len(), self.rank());
        if count > cap {
            return Err(Error::GuardExceeded { count, cap });
        }
        Ok(Bases {
            ids: points.ids().to_vec(),
            k: self.rank(),
            tracker: self.tracker(points)?,
            chosen: Vec::with_capacity(self.rank()),
            next_pos: 0,
            done: false,
        })
    }
}

fn proper_indices(points: &PointSet, set: &[PointId]) -> Result<Vec<usize>> {
    let idx = points.indices(set)?;
    let mut sorted = idx.clone();
    sorted.sort_unstable();
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::Precondition("set contains a repeated id".into()));
    }
    Ok(idx)
}

/// Counters for every capped set, updated one element at a time.
#[derive(Debug, Clone)]
pub struct IndependenceTracker {
    caps: Vec<usize>,
    counts: Vec<usize>,
    membership: Vec<Vec<usize>>,
}

impl IndependenceTracker {
    /// Adds the point at storage index `idx` if that keeps the set
    /// independent.
    pub fn try_add(&mut self, idx: usize) -> bool {
        let slots = &self.membership[idx];
        if slots.iter().any(|&s| self.counts[s] >= self.caps[s]) {
            return false;
        }
        for &s in slots {
            self.counts[s] += 1;
        }
        true
    }

    pub fn can_add(&self, idx: usize) -> bool {
        self.membership[idx]
            .iter()
            .all(|&s| self.counts[s] < self.caps[s])
    }

    pub fn remove(&mut self, idx: usize) {
        for &s in &self.membership[idx] {
            self.counts[s] -= 1;
        }
    }
}

/// Backtracking enumeration of bases; see [`Constraint::enumerate_bases`].
pub struct Bases {
    ids: Vec<PointId>,
    k: usize,
    tracker: IndependenceTracker,
    chosen: Vec<usize>,
    next_pos: usize,
    done: bool,
}

impl Bases {
    fn backtrack(&mut self) -> bool {
        match self.chosen.pop() {
            Some(p) => {
                self.tracker.remove(p);
                self.next_pos = p + 1;
                true
            }
            None => {
                self.done = true;
                false
            }
        }
    }
}

impl Iterator for Bases {
    type Item = Vec<PointId>;

    fn next(&mut self) -> Option<Vec<PointId>> {
        let n = self.ids.len();
        while !self.done {
            if self.chosen.len() == self.k {
                let out = self.chosen.iter().map(|&p| self.ids[p]).collect();
                self.backtrack();
                return Some(out);
            }
            if n - self.next_pos < self.k - self.chosen.len() {
                self.backtrack();
                continue;
            }
            let p = self.next_pos;
            self.next_pos += 1;
            if self.tracker.try_add(p) {
                self.chosen.push(p);
            }
        }
        None
    }
}
