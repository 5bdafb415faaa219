//! Envy relations, envy-graph path rotation, EF1 / EF\[1,1\] checkers,
//! brute-force Pareto checks, and reallocation sets.
//!
//! Checkers evaluate on the normalized instance (dummies are worth 0, so
//! they never affect a verdict) and removal candidates deliberately include
//! dummies.

use alloc::collections::BTreeSet;
use alloc::vec::Vec;

use crate::model::{AgentId, Allocation, ItemId, NormalizedInstance};
use crate::oracle::{self, OracleError};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FairnessError {
    #[error("path step {from} -> {to} is not an arc of the envy graph")]
    NotAnEnvyArc { from: AgentId, to: AgentId },
    #[error("path must end at a sink of the envy graph, agent {agent} still envies")]
    NotASink { agent: AgentId },
    #[error("path must be nonempty and within the agent range")]
    BadPath,
    #[error("allocations are over different instances")]
    MismatchedAllocations,
}

/// Directed graph with an arc i → i' whenever agent i envies agent i'
/// (`u_i(A_{i'}) > u_i(A_i)`). Acyclic whenever the allocation is
/// Pareto-optimal.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EnvyGraph {
    out: Vec<Vec<AgentId>>,
}

impl EnvyGraph {
    pub fn arcs_from(&self, agent: AgentId) -> &[AgentId] {
        &self.out[agent]
    }

    pub fn has_arc(&self, from: AgentId, to: AgentId) -> bool {
        self.out[from].contains(&to)
    }

    pub fn is_sink(&self, agent: AgentId) -> bool {
        self.out[agent].is_empty()
    }

    pub fn agents(&self) -> usize {
        self.out.len()
    }

    pub fn is_acyclic(&self) -> bool {
        // DFS with colors over at most n vertices
        let n = self.out.len();
        let mut state = alloc::vec![0u8; n]; // 0 new, 1 open, 2 done
        fn visit(g: &EnvyGraph, v: AgentId, state: &mut [u8]) -> bool {
            state[v] = 1;
            for &w in &g.out[v] {
                match state[w] {
                    0 => {
                        if !visit(g, w, state) {
                            return false;
                        }
                    }
                    1 => return false,
                    _ => {}
                }
            }
            state[v] = 2;
            true
        }
        (0..n).all(|v| state[v] != 0 || visit(self, v, &mut state))
    }
}

pub fn envy_graph(norm: &NormalizedInstance, a: &Allocation) -> EnvyGraph {
    let n = norm.agents();
    let values: Vec<Vec<i64>> = (0..n)
        .map(|viewer| {
            (0..n)
                .map(|owner| a.bundle_utility_as(norm, viewer, owner))
                .collect()
        })
        .collect();
    let out = (0..n)
        .map(|i| {
            (0..n)
                .filter(|&j| j != i && values[i][j] > values[i][i])
                .collect()
        })
        .collect();
    EnvyGraph { out }
}

/// True iff agent `i` values no other bundle strictly above its own.
pub fn is_envy_free_for(norm: &NormalizedInstance, a: &Allocation, agent: AgentId) -> bool {
    let own = a.bundle_utility(norm, agent);
    (0..norm.agents()).all(|other| other == agent || a.bundle_utility_as(norm, agent, other) <= own)
}

/// Shift bundles along a directed envy path ending at a sink:
/// `A'_{i_ℓ} = A_{i_{ℓ+1}}` cyclically with `i_{q+1} = i_1`. Feasibility is
/// preserved because all bundles have the same per-category cardinalities.
pub fn rotate_along_path(
    norm: &NormalizedInstance,
    a: &Allocation,
    path: &[AgentId],
) -> Result<Allocation, FairnessError> {
    let n = norm.agents();
    if path.is_empty() || path.iter().any(|&i| i >= n) {
        return Err(FairnessError::BadPath);
    }
    let mut seen = alloc::vec![false; n];
    for &i in path {
        if seen[i] {
            return Err(FairnessError::BadPath);
        }
        seen[i] = true;
    }
    let envy = envy_graph(norm, a);
    for pair in path.windows(2) {
        if !envy.has_arc(pair[0], pair[1]) {
            return Err(FairnessError::NotAnEnvyArc {
                from: pair[0],
                to: pair[1],
            });
        }
    }
    let last = *path.last().unwrap();
    if !envy.is_sink(last) {
        return Err(FairnessError::NotASink { agent: last });
    }
    // A'_{i_ℓ} = A_{i_{ℓ+1}}: items owned by the path-successor move to the
    // path-predecessor; off-path agents keep their bundles.
    let q = path.len();
    let mut new_owner: Vec<AgentId> = (0..n).collect();
    for l in 0..q {
        new_owner[path[(l + 1) % q]] = path[l];
    }
    let assignment = a
        .assignment()
        .iter()
        .map(|&owner| new_owner[owner])
        .collect();
    Ok(Allocation::new(assignment, n).expect("agents in range"))
}

/// EF1: for every ordered pair there is a single item whose removal (from
/// the union of the two bundles) kills the envy.
pub fn is_ef1(norm: &NormalizedInstance, a: &Allocation) -> bool {
    let n = norm.agents();
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            if !pair_ef1(norm, a, i, j) {
                return false;
            }
        }
    }
    true
}

fn pair_ef1(norm: &NormalizedInstance, a: &Allocation, i: AgentId, j: AgentId) -> bool {
    let own: Vec<ItemId> = a.bundle(i).collect();
    let other: Vec<ItemId> = a.bundle(j).collect();
    let u_own = norm.bundle_utility(i, own.iter().copied());
    let u_other = norm.bundle_utility(i, other.iter().copied());
    if u_own >= u_other {
        return true;
    }
    // exhaustive over singletons of A_i ∪ A_j, removed from both sides
    for &x in own.iter().chain(other.iter()) {
        let u = norm.utility(i, x);
        let left = if own.contains(&x) { u_own - u } else { u_own };
        let right = if other.contains(&x) {
            u_other - u
        } else {
            u_other
        };
        if left >= right {
            return true;
        }
    }
    false
}

/// EF\[1,1\]: for every ordered pair there are a chore in the envier's bundle
/// and a good in the envied bundle (each optional) whose removal kills the
/// envy.
pub fn is_ef11(norm: &NormalizedInstance, a: &Allocation) -> bool {
    let n = norm.agents();
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            if !pair_ef11(norm, a, i, j) {
                return false;
            }
        }
    }
    true
}

fn pair_ef11(norm: &NormalizedInstance, a: &Allocation, i: AgentId, j: AgentId) -> bool {
    let own: Vec<ItemId> = a.bundle(i).collect();
    let other: Vec<ItemId> = a.bundle(j).collect();
    let u_own = norm.bundle_utility(i, own.iter().copied());
    let u_other = norm.bundle_utility(i, other.iter().copied());
    // exhaustive over all (|A_i|+1)(|A_j|+1) removal pairs
    let mut lefts: Vec<i64> = alloc::vec![u_own];
    lefts.extend(own.iter().map(|&x| u_own - norm.utility(i, x)));
    let mut rights: Vec<i64> = alloc::vec![u_other];
    rights.extend(other.iter().map(|&y| u_other - norm.utility(i, y)));
    lefts
        .iter()
        .any(|left| rights.iter().any(|right| left >= right))
}

/// Exact Pareto-optimality by exhaustive enumeration (guarded by `limit`).
pub fn is_pareto_optimal_bruteforce(
    norm: &NormalizedInstance,
    a: &Allocation,
    limit: u64,
) -> Result<bool, OracleError> {
    oracle::is_pareto_optimal(norm, a, limit)
}

/// Items whose assigned agent differs across any pair of the given
/// allocations (dummy items included).
pub fn reallocation_set(allocs: &[Allocation]) -> Result<BTreeSet<ItemId>, FairnessError> {
    let Some(first) = allocs.first() else {
        return Err(FairnessError::MismatchedAllocations);
    };
    if allocs.iter().any(|a| a.items() != first.items()) {
        return Err(FairnessError::MismatchedAllocations);
    }
    let mut out = BTreeSet::new();
    for item in 0..first.items() {
        if allocs
            .iter()
            .any(|a| a.agent_of(item) != first.agent_of(item))
        {
            out.insert(item);
        }
    }
    Ok(out)
}
