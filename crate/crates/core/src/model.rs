//! Instance representation, feasibility, normalization with dummy items, and
//! the bipartite agent-slot/item graph.
//!
//! Agents and items are 0-based internally; the serialized formats in the
//! companion crate are 1-based.

use alloc::vec::Vec;

/// 0-based agent index.
pub type AgentId = usize;
/// 0-based item index.
pub type ItemId = usize;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ModelError {
    #[error("instance must have at least one agent")]
    NoAgents,
    #[error("utility rows must all have length {expected}, row {agent} has {found}")]
    UtilityShape {
        agent: AgentId,
        expected: usize,
        found: usize,
    },
    #[error("item {item} appears in more than one category")]
    CategoriesOverlap { item: ItemId },
    #[error("item {item} belongs to no category")]
    CategoriesIncomplete { item: ItemId },
    #[error("item {item} is out of range (instance has {items} items)")]
    ItemOutOfRange { item: ItemId, items: usize },
    #[error("category {category} has zero capacity")]
    ZeroCapacity { category: usize },
    #[error("category {category} has {size} items but n*s_h = {max}; no feasible allocation")]
    CategoryTooLarge {
        category: usize,
        size: usize,
        max: usize,
    },
    #[error("agent {agent} is out of range (instance has {agents} agents)")]
    AgentOutOfRange { agent: AgentId, agents: usize },
    #[error("allocation covers {found} items, instance has {expected}")]
    AllocationSize { expected: usize, found: usize },
}

/// A category: a set of items and the per-agent capacity `s_h`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Category {
    pub items: Vec<ItemId>,
    pub capacity: usize,
}

/// A validated instance: integer utilities and a category partition with
/// `|S_h| <= n*s_h` for every category.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instance {
    utilities: Vec<Vec<i64>>,
    categories: Vec<Category>,
    category_of: Vec<usize>,
}

impl Instance {
    pub fn new(utilities: Vec<Vec<i64>>, categories: Vec<Category>) -> Result<Self, ModelError> {
        if utilities.is_empty() {
            return Err(ModelError::NoAgents);
        }
        let n = utilities.len();
        let m = utilities[0].len();
        for (agent, row) in utilities.iter().enumerate() {
            if row.len() != m {
                return Err(ModelError::UtilityShape {
                    agent,
                    expected: m,
                    found: row.len(),
                });
            }
        }
        let mut category_of = alloc::vec![usize::MAX; m];
        for (h, cat) in categories.iter().enumerate() {
            if cat.capacity == 0 {
                return Err(ModelError::ZeroCapacity { category: h });
            }
            for &item in &cat.items {
                if item >= m {
                    return Err(ModelError::ItemOutOfRange { item, items: m });
                }
                if category_of[item] != usize::MAX {
                    return Err(ModelError::CategoriesOverlap { item });
                }
                category_of[item] = h;
            }
            if cat.items.len() > n * cat.capacity {
                return Err(ModelError::CategoryTooLarge {
                    category: h,
                    size: cat.items.len(),
                    max: n * cat.capacity,
                });
            }
        }
        if let Some(item) = category_of.iter().position(|&h| h == usize::MAX) {
            return Err(ModelError::CategoriesIncomplete { item });
        }
        Ok(Instance {
            utilities,
            categories,
            category_of,
        })
    }

    pub fn agents(&self) -> usize {
        self.utilities.len()
    }

    pub fn items(&self) -> usize {
        self.utilities[0].len()
    }

    pub fn utility(&self, agent: AgentId, item: ItemId) -> i64 {
        self.utilities[agent][item]
    }

    pub fn categories(&self) -> &[Category] {
        &self.categories
    }

    pub fn category_of(&self, item: ItemId) -> usize {
        self.category_of[item]
    }

    /// Additive bundle utility `u_i(S) = Σ_{j∈S} u_i(j)`.
    pub fn bundle_utility<I: IntoIterator<Item = ItemId>>(&self, agent: AgentId, items: I) -> i64 {
        items.into_iter().map(|j| self.utilities[agent][j]).sum()
    }

    pub fn max_abs_utility(&self) -> i64 {
        self.utilities
            .iter()
            .flat_map(|row| row.iter().map(|u| u.abs()))
            .max()
            .unwrap_or(0)
    }

    pub fn sum_abs_utilities(&self) -> i128 {
        self.utilities
            .iter()
            .flat_map(|row| row.iter().map(|u| u.unsigned_abs() as i128))
            .sum()
    }
}

/// An instance padded with zero-utility dummy items so that every category
/// has exactly `n*s_h` items; feasible allocations then give every agent
/// exactly `s_h` items of each category.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NormalizedInstance {
    base: Instance,
    padded: Instance,
}

/// Pad each category with `n*s_h - |S_h|` dummy items of all-zero utility.
/// Dummy ids are appended after the real ids, grouped by category in input
/// order.
pub fn normalize(base: Instance) -> NormalizedInstance {
    let n = base.agents();
    let m = base.items();
    let mut categories = base.categories.clone();
    let mut next_id = m;
    for cat in categories.iter_mut() {
        let want = n * cat.capacity;
        while cat.items.len() < want {
            cat.items.push(next_id);
            next_id += 1;
        }
    }
    let utilities = base
        .utilities
        .iter()
        .map(|row| {
            let mut row = row.clone();
            row.resize(next_id, 0);
            row
        })
        .collect();
    let padded = Instance::new(utilities, categories).expect("padding preserves validity");
    NormalizedInstance { base, padded }
}

impl NormalizedInstance {
    pub fn base(&self) -> &Instance {
        &self.base
    }

    pub fn padded(&self) -> &Instance {
        &self.padded
    }

    pub fn agents(&self) -> usize {
        self.padded.agents()
    }

    /// Item count including dummies.
    pub fn items(&self) -> usize {
        self.padded.items()
    }

    pub fn base_items(&self) -> usize {
        self.base.items()
    }

    pub fn is_dummy(&self, item: ItemId) -> bool {
        item >= self.base.items()
    }

    pub fn dummy_items(&self) -> core::ops::Range<ItemId> {
        self.base.items()..self.padded.items()
    }

    pub fn utility(&self, agent: AgentId, item: ItemId) -> i64 {
        self.padded.utility(agent, item)
    }

    pub fn bundle_utility<I: IntoIterator<Item = ItemId>>(&self, agent: AgentId, items: I) -> i64 {
        self.padded.bundle_utility(agent, items)
    }
}

/// A total assignment item → agent over a normalized instance.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Allocation {
    assignment: Vec<AgentId>,
}

impl Allocation {
    pub fn new(assignment: Vec<AgentId>, agents: usize) -> Result<Self, ModelError> {
        for &a in &assignment {
            if a >= agents {
                return Err(ModelError::AgentOutOfRange { agent: a, agents });
            }
        }
        Ok(Allocation { assignment })
    }

    pub fn agent_of(&self, item: ItemId) -> AgentId {
        self.assignment[item]
    }

    pub fn items(&self) -> usize {
        self.assignment.len()
    }

    pub fn assignment(&self) -> &[AgentId] {
        &self.assignment
    }

    pub fn bundle(&self, agent: AgentId) -> impl Iterator<Item = ItemId> + '_ {
        self.assignment
            .iter()
            .enumerate()
            .filter(move |(_, &a)| a == agent)
            .map(|(j, _)| j)
    }

    pub fn bundle_utility(&self, norm: &NormalizedInstance, agent: AgentId) -> i64 {
        norm.bundle_utility(agent, self.bundle(agent))
    }

    /// Utility of `viewer`'s valuation of `owner`'s bundle.
    pub fn bundle_utility_as(
        &self,
        norm: &NormalizedInstance,
        viewer: AgentId,
        owner: AgentId,
    ) -> i64 {
        norm.bundle_utility(viewer, self.bundle(owner))
    }

    /// In normalized form feasibility is the equality `|A_i ∩ S_h| = s_h`
    /// for every agent and category.
    pub fn is_feasible(&self, norm: &NormalizedInstance) -> Result<bool, ModelError> {
        if self.assignment.len() != norm.items() {
            return Err(ModelError::AllocationSize {
                expected: norm.items(),
                found: self.assignment.len(),
            });
        }
        let n = norm.agents();
        for &a in &self.assignment {
            if a >= n {
                return Err(ModelError::AgentOutOfRange {
                    agent: a,
                    agents: n,
                });
            }
        }
        let k = norm.padded().categories().len();
        let mut counts = alloc::vec![0usize; n * k];
        for (item, &agent) in self.assignment.iter().enumerate() {
            counts[agent * k + norm.padded().category_of(item)] += 1;
        }
        for agent in 0..n {
            for (h, cat) in norm.padded().categories().iter().enumerate() {
                if counts[agent * k + h] != cat.capacity {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }
}

/// One edge of the slot graph: `(agent, category)` slot to `item`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SlotEdge {
    pub agent: AgentId,
    pub category: usize,
    pub item: ItemId,
}

/// Bipartite graph between `(agent, category)` slots and items. Each item is
/// adjacent to the `n` slots of its own category, so the edge list ordered by
/// ascending `(item, agent)` has edge `j*n + i` joining item `j` to agent `i`,
/// and that index is the edge's perturbation rank.
#[derive(Debug, Clone)]
pub struct SlotGraph {
    agents: usize,
    categories: usize,
    capacities: Vec<usize>,
    edges: Vec<SlotEdge>,
    category_of: Vec<usize>,
}

/// Deterministic: same instance, identical edge set and ranks.
pub fn build_slot_graph(norm: &NormalizedInstance) -> SlotGraph {
    let n = norm.agents();
    let m = norm.items();
    let padded = norm.padded();
    let mut edges = Vec::with_capacity(n * m);
    for item in 0..m {
        let category = padded.category_of(item);
        for agent in 0..n {
            edges.push(SlotEdge {
                agent,
                category,
                item,
            });
        }
    }
    SlotGraph {
        agents: n,
        categories: padded.categories().len(),
        capacities: padded.categories().iter().map(|c| c.capacity).collect(),
        edges,
        category_of: (0..m).map(|j| padded.category_of(j)).collect(),
    }
}

impl SlotGraph {
    pub fn agents(&self) -> usize {
        self.agents
    }

    pub fn categories(&self) -> usize {
        self.categories
    }

    pub fn items(&self) -> usize {
        self.category_of.len()
    }

    /// Number of edges `d = n*m`.
    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[SlotEdge] {
        &self.edges
    }

    pub fn edge(&self, index: usize) -> SlotEdge {
        self.edges[index]
    }

    /// Perturbation rank of an edge; the bijection E → \[d\] ordered by
    /// ascending (item, agent).
    pub fn rank(&self, index: usize) -> u32 {
        index as u32
    }

    pub fn edge_index(&self, agent: AgentId, item: ItemId) -> usize {
        item * self.agents + agent
    }

    pub fn capacity(&self, category: usize) -> usize {
        self.capacities[category]
    }

    pub fn category_of_item(&self, item: ItemId) -> usize {
        self.category_of[item]
    }

    pub fn slot_count(&self) -> usize {
        self.agents * self.categories
    }

    pub fn slot_index(&self, agent: AgentId, category: usize) -> usize {
        agent * self.categories + category
    }

    /// Total items a slot must receive (its category capacity).
    pub fn slot_demand(&self, slot: usize) -> usize {
        self.capacities[slot % self.categories]
    }
}
