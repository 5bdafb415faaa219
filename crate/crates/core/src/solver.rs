//! Exact maximization of the weighted objective over feasible allocations —
//! an assignment/transportation problem on the slot graph — plus face
//! probing (which edges are fixed across all optima) and enumeration of all
//! integral optima.
//!
//! All arithmetic is [`LexCost`]-exact; the solver is successive shortest
//! paths (longest, since we maximize) with Bellman-Ford search, which needs
//! nothing beyond the ordered-group operations. Deterministic throughout:
//! arcs are relaxed in rank order and ties keep the first-found label.

use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::arith::LexCost;
use crate::model::{Allocation, ItemId, SlotGraph};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SolveError {
    #[error("no feasible assignment under the given forced/forbidden edges")]
    Infeasible,
    #[error("edge {edge} is both forced and forbidden")]
    ForcedForbiddenConflict { edge: usize },
    #[error("{found} free items exceed the n(n-1) = {bound} bound; perturbation is broken")]
    TooManyFreeItems { found: usize, bound: usize },
}

/// An integral optimum with its objective and a per-vertex potential vector
/// (longest distances in the residual digraph) certifying optimality.
#[derive(Debug, Clone)]
pub struct SolveResult {
    pub allocation: Allocation,
    pub objective: LexCost,
    pub potentials: Vec<LexCost>,
}

/// Which edges take the same value in every optimum.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FaceReport {
    pub fixed_one: Vec<usize>,
    pub fixed_zero: Vec<usize>,
    pub free_items: Vec<ItemId>,
}

struct Network<'a> {
    graph: &'a SlotGraph,
    costs: &'a [LexCost],
    allowed: Vec<bool>,
    locked: Vec<bool>,
    assigned: Vec<Option<usize>>,
    remaining: Vec<usize>,
}

impl<'a> Network<'a> {
    fn new(
        graph: &'a SlotGraph,
        costs: &'a [LexCost],
        forced: &[usize],
        forbidden: &[usize],
    ) -> Result<Self, SolveError> {
        let mut allowed = alloc::vec![true; graph.edge_count()];
        for &e in forbidden {
            allowed[e] = false;
        }
        for &e in forced {
            if !allowed[e] {
                return Err(SolveError::ForcedForbiddenConflict { edge: e });
            }
        }
        let mut remaining: Vec<usize> = (0..graph.slot_count())
            .map(|s| graph.slot_demand(s))
            .collect();
        let mut assigned = alloc::vec![None; graph.items()];
        let mut locked = alloc::vec![false; graph.items()];
        for &e in forced {
            let edge = graph.edge(e);
            let slot = graph.slot_index(edge.agent, edge.category);
            if assigned[edge.item].is_some() || remaining[slot] == 0 {
                return Err(SolveError::Infeasible);
            }
            assigned[edge.item] = Some(e);
            locked[edge.item] = true;
            remaining[slot] -= 1;
        }
        Ok(Network {
            graph,
            costs,
            allowed,
            locked,
            assigned,
            remaining,
        })
    }

    fn slot_of(&self, e: usize) -> usize {
        let edge = self.graph.edge(e);
        self.graph.slot_index(edge.agent, edge.category)
    }

    /// One longest augmenting path, returning the newly assigned item.
    fn augment(&mut self) -> Result<Option<ItemId>, SolveError> {
        let slots = self.graph.slot_count();
        let items = self.graph.items();
        if self.assigned.iter().all(|a| a.is_some()) {
            return Ok(None);
        }
        let nodes = slots + items;
        let mut dist: Vec<Option<LexCost>> = alloc::vec![None; nodes];
        let mut pred_item: Vec<Option<usize>> = alloc::vec![None; items];
        let mut pred_slot: Vec<Option<usize>> = alloc::vec![None; slots];
        for s in 0..slots {
            if self.remaining[s] > 0 {
                dist[s] = Some(LexCost::zero());
            }
        }
        for _round in 0..nodes {
            let mut changed = false;
            for e in 0..self.graph.edge_count() {
                if !self.allowed[e] {
                    continue;
                }
                let edge = self.graph.edge(e);
                let slot = self.graph.slot_index(edge.agent, edge.category);
                let item_node = slots + edge.item;
                if self.assigned[edge.item] == Some(e) {
                    // reverse arc item -> slot, cost -c_e (not for locked items)
                    if self.locked[edge.item] {
                        continue;
                    }
                    if let Some(di) = dist[item_node].clone() {
                        let cand = di - self.costs[e].clone();
                        if dist[slot].as_ref().is_none_or(|cur| cand > *cur) {
                            dist[slot] = Some(cand);
                            pred_slot[slot] = Some(e);
                            changed = true;
                        }
                    }
                } else if self.assigned[edge.item].is_none() || !self.locked[edge.item] {
                    // forward arc slot -> item, cost c_e
                    if let Some(ds) = dist[slot].clone() {
                        let cand = ds + self.costs[e].clone();
                        if dist[item_node].as_ref().is_none_or(|cur| cand > *cur) {
                            dist[item_node] = Some(cand);
                            pred_item[edge.item] = Some(e);
                            changed = true;
                        }
                    }
                }
            }
            if !changed {
                break;
            }
        }

        // Best reachable unassigned item; ties broken by smallest id.
        let mut target: Option<ItemId> = None;
        for item in 0..items {
            if self.assigned[item].is_some() {
                continue;
            }
            if let Some(d) = &dist[slots + item] {
                let better = match &target {
                    None => true,
                    Some(t) => {
                        let cur = dist[slots + t].as_ref().unwrap();
                        d.cmp(cur) == Ordering::Greater
                    }
                };
                if better {
                    target = Some(item);
                }
            }
        }
        let Some(target) = target else {
            return Err(SolveError::Infeasible);
        };

        // Walk predecessors back to a source slot, flipping assignments.
        let mut item = target;
        let mut guard = 0;
        loop {
            guard += 1;
            assert!(guard <= nodes + 1, "augmenting walk left the path tree");
            let e = pred_item[item].expect("reached item has a predecessor edge");
            self.assigned[item] = Some(e);
            let slot = self.slot_of(e);
            match pred_slot[slot] {
                None => {
                    self.remaining[slot] -= 1;
                    break;
                }
                Some(e2) => {
                    let prev_item = self.graph.edge(e2).item;
                    // unassign prev_item from this slot; it is reassigned next
                    item = prev_item;
                }
            }
        }
        Ok(Some(target))
    }

    fn objective(&self) -> LexCost {
        let mut total = LexCost::zero();
        for e in self.assigned.iter().flatten() {
            total += &self.costs[*e];
        }
        total
    }

    fn allocation(&self) -> Allocation {
        let assignment = self
            .assigned
            .iter()
            .map(|e| self.graph.edge(e.expect("complete assignment")).agent)
            .collect();
        Allocation::new(assignment, self.graph.agents()).expect("agents in range")
    }
}

/// Longest distances from a virtual root in the residual digraph of `x`
/// (arc slot→item with cost `c_e` when `x_e = 0`, arc item→slot with cost
/// `-c_e` when `x_e = 1`), restricted to arcs the constraints keep mutable:
/// forbidden edges have no forward arc, forced items no reverse arc.
/// Returns `None` if a positive cycle exists, i.e. `x` is not optimal for
/// the constrained program.
fn residual_potentials(
    graph: &SlotGraph,
    costs: &[LexCost],
    x: &Allocation,
    allowed: Option<&[bool]>,
    locked: Option<&[bool]>,
) -> Option<Vec<LexCost>> {
    let slots = graph.slot_count();
    let nodes = slots + graph.items();
    let mut dist = alloc::vec![LexCost::zero(); nodes];
    for round in 0..=nodes {
        let mut changed = false;
        for e in 0..graph.edge_count() {
            if allowed.is_some_and(|a| !a[e]) {
                continue;
            }
            let edge = graph.edge(e);
            let slot = graph.slot_index(edge.agent, edge.category);
            let item_node = slots + edge.item;
            if x.agent_of(edge.item) == edge.agent {
                if locked.is_some_and(|l| l[edge.item]) {
                    continue;
                }
                let cand = dist[item_node].clone() - costs[e].clone();
                if cand > dist[slot] {
                    dist[slot] = cand;
                    changed = true;
                }
            } else {
                let cand = dist[slot].clone() + costs[e].clone();
                if cand > dist[item_node] {
                    dist[item_node] = cand;
                    changed = true;
                }
            }
        }
        if !changed {
            return Some(dist);
        }
        if round == nodes {
            // still improving after |V| rounds: positive cycle
            return None;
        }
    }
    Some(dist)
}

/// Maximize `Σ cost(e)·x_e` over feasible 0/1 assignments with `x = 1` on
/// `forced` and `x = 0` on `forbidden`.
pub fn solve(
    graph: &SlotGraph,
    costs: &[LexCost],
    forced: &[usize],
    forbidden: &[usize],
) -> Result<SolveResult, SolveError> {
    let mut net = Network::new(graph, costs, forced, forbidden)?;
    while net.augment()?.is_some() {}
    let allocation = net.allocation();
    let objective = net.objective();
    let potentials = residual_potentials(
        graph,
        costs,
        &allocation,
        Some(&net.allowed),
        Some(&net.locked),
    )
    .expect("solver produced a non-optimum");
    Ok(SolveResult {
        allocation,
        objective,
        potentials,
    })
}

/// True iff the residual digraph of `a` has no directed cycle of positive
/// total cost, i.e. `a` maximizes the objective.
pub fn verify_optimality(graph: &SlotGraph, costs: &[LexCost], a: &Allocation) -> bool {
    residual_potentials(graph, costs, a, None, None).is_some()
}

/// Probe which edges are fixed across all optima.
///
/// An edge can change value in some optimum iff its residual arc lies on a
/// zero-cost residual cycle (augmenting along that cycle is another optimum;
/// conversely any alternate optimum decomposes into such cycles, all of cost
/// exactly zero by optimality). With the optimality potentials π in hand,
/// every residual arc has reduced cost ≤ 0 and a cycle is zero-cost iff all
/// its arcs have reduced cost zero — so the probe is a strongly connected
/// component computation on the zero-reduced-cost subgraph.
pub fn probe_face(graph: &SlotGraph, costs: &[LexCost]) -> Result<FaceReport, SolveError> {
    let base = solve(graph, costs, &[], &[])?;
    probe_face_with(graph, costs, &base)
}

/// [`probe_face`] reusing an already computed unconstrained optimum.
pub fn probe_face_with(
    graph: &SlotGraph,
    costs: &[LexCost],
    base: &SolveResult,
) -> Result<FaceReport, SolveError> {
    let slots = graph.slot_count();
    let nodes = slots + graph.items();
    // zero-reduced-cost residual arcs
    let mut zero_arcs: Vec<(usize, usize, usize, bool)> = Vec::new(); // (from, to, edge, used)
    for e in 0..graph.edge_count() {
        let edge = graph.edge(e);
        let slot = graph.slot_index(edge.agent, edge.category);
        let item_node = slots + edge.item;
        let used = base.allocation.agent_of(edge.item) == edge.agent;
        let reduced = if used {
            // arc item -> slot with cost -c_e
            base.potentials[item_node].clone() - costs[e].clone() - base.potentials[slot].clone()
        } else {
            // arc slot -> item with cost c_e
            base.potentials[slot].clone() + costs[e].clone() - base.potentials[item_node].clone()
        };
        debug_assert!(reduced.sign() != core::cmp::Ordering::Greater);
        if reduced.is_zero() {
            if used {
                zero_arcs.push((item_node, slot, e, true));
            } else {
                zero_arcs.push((slot, item_node, e, false));
            }
        }
    }
    let component = scc(nodes, &zero_arcs);

    let mut fixed_one = Vec::new();
    let mut fixed_zero = Vec::new();
    let mut on_cycle = alloc::vec![false; graph.edge_count()];
    for &(from, to, e, _) in &zero_arcs {
        if component[from] == component[to] {
            on_cycle[e] = true;
        }
    }
    for e in 0..graph.edge_count() {
        let edge = graph.edge(e);
        let used = base.allocation.agent_of(edge.item) == edge.agent;
        if used {
            if !on_cycle[e] {
                fixed_one.push(e);
            }
        } else if !on_cycle[e] {
            fixed_zero.push(e);
        }
    }
    let mut covered = alloc::vec![false; graph.items()];
    for &e in &fixed_one {
        covered[graph.edge(e).item] = true;
    }
    let free_items = (0..graph.items()).filter(|&j| !covered[j]).collect();
    Ok(FaceReport {
        fixed_one,
        fixed_zero,
        free_items,
    })
}

/// Kosaraju over an arc list; returns a component id per node.
fn scc(nodes: usize, arcs: &[(usize, usize, usize, bool)]) -> Vec<usize> {
    let mut fwd = alloc::vec![Vec::new(); nodes];
    let mut bwd = alloc::vec![Vec::new(); nodes];
    for &(from, to, _, _) in arcs {
        fwd[from].push(to);
        bwd[to].push(from);
    }
    let mut order = Vec::with_capacity(nodes);
    let mut seen = alloc::vec![false; nodes];
    for start in 0..nodes {
        if seen[start] {
            continue;
        }
        // iterative post-order
        let mut stack = alloc::vec![(start, 0usize)];
        seen[start] = true;
        while let Some(&mut (v, ref mut i)) = stack.last_mut() {
            if *i < fwd[v].len() {
                let w = fwd[v][*i];
                *i += 1;
                if !seen[w] {
                    seen[w] = true;
                    stack.push((w, 0));
                }
            } else {
                order.push(v);
                stack.pop();
            }
        }
    }
    let mut component = alloc::vec![usize::MAX; nodes];
    let mut current = 0;
    for &start in order.iter().rev() {
        if component[start] != usize::MAX {
            continue;
        }
        let mut stack = alloc::vec![start];
        component[start] = current;
        while let Some(v) = stack.pop() {
            for &w in &bwd[v] {
                if component[w] == usize::MAX {
                    component[w] = current;
                    stack.push(w);
                }
            }
        }
        current += 1;
    }
    component
}

/// Reference probe: re-solve with each edge forbidden (respectively forced)
/// and compare optima — the plain recipe, kept as an independent route and
/// cross-checked against [`probe_face`] in the tests. An edge already at the
/// probed value in the unconstrained optimum cannot be pinned the other way,
/// so one re-solve per edge suffices.
pub fn probe_face_by_resolve(
    graph: &SlotGraph,
    costs: &[LexCost],
) -> Result<FaceReport, SolveError> {
    let base = solve(graph, costs, &[], &[])?;
    let mut fixed_one = Vec::new();
    let mut fixed_zero = Vec::new();
    for e in 0..graph.edge_count() {
        let edge = graph.edge(e);
        let used = base.allocation.agent_of(edge.item) == edge.agent;
        if used {
            match solve(graph, costs, &[], &[e]) {
                Err(SolveError::Infeasible) => fixed_one.push(e),
                Ok(probe) => {
                    if probe.objective < base.objective {
                        fixed_one.push(e);
                    }
                }
                Err(other) => return Err(other),
            }
        } else {
            match solve(graph, costs, &[e], &[]) {
                Err(SolveError::Infeasible) => fixed_zero.push(e),
                Ok(probe) => {
                    if probe.objective < base.objective {
                        fixed_zero.push(e);
                    }
                }
                Err(other) => return Err(other),
            }
        }
    }
    let mut covered = alloc::vec![false; graph.items()];
    for &e in &fixed_one {
        covered[graph.edge(e).item] = true;
    }
    let free_items = (0..graph.items()).filter(|&j| !covered[j]).collect();
    Ok(FaceReport {
        fixed_one,
        fixed_zero,
        free_items,
    })
}

/// All integral optima: every feasible completion of the fixed partial
/// assignment over the free items whose objective equals the optimum.
/// Deterministic order (free items ascending, agents ascending).
pub fn enumerate_optima(
    graph: &SlotGraph,
    costs: &[LexCost],
    report: &FaceReport,
) -> Result<Vec<Allocation>, SolveError> {
    let base = solve(graph, costs, &[], &[])?;
    enumerate_optima_with(graph, costs, report, &base.objective)
}

/// [`enumerate_optima`] with a known optimal value.
pub fn enumerate_optima_with(
    graph: &SlotGraph,
    costs: &[LexCost],
    report: &FaceReport,
    optimum: &LexCost,
) -> Result<Vec<Allocation>, SolveError> {
    let n = graph.agents();
    let bound = n * (n - 1);
    if report.free_items.len() > bound {
        return Err(SolveError::TooManyFreeItems {
            found: report.free_items.len(),
            bound,
        });
    }

    let mut fixed_agent: Vec<Option<usize>> = alloc::vec![None; graph.items()];
    let mut used = alloc::vec![0usize; graph.slot_count()];
    let mut fixed_cost = LexCost::zero();
    for &e in &report.fixed_one {
        let edge = graph.edge(e);
        fixed_agent[edge.item] = Some(edge.agent);
        used[graph.slot_index(edge.agent, edge.category)] += 1;
        fixed_cost += &costs[e];
    }
    let mut banned = alloc::vec![false; graph.edge_count()];
    for &e in &report.fixed_zero {
        banned[e] = true;
    }

    let mut free = report.free_items.clone();
    free.sort_unstable();

    let mut out = Vec::new();
    dfs(
        graph,
        costs,
        optimum,
        &free,
        0,
        &mut fixed_agent,
        &mut used,
        fixed_cost,
        &banned,
        &mut out,
    );
    debug_assert!(!out.is_empty(), "optimum itself must be enumerated");
    Ok(out)
}

#[allow(clippy::too_many_arguments)]
fn dfs(
    graph: &SlotGraph,
    costs: &[LexCost],
    optimum: &LexCost,
    free: &[ItemId],
    pos: usize,
    fixed_agent: &mut Vec<Option<usize>>,
    used: &mut Vec<usize>,
    acc: LexCost,
    banned: &[bool],
    out: &mut Vec<Allocation>,
) {
    if pos == free.len() {
        if acc == *optimum {
            let assignment = fixed_agent
                .iter()
                .map(|a| a.expect("complete assignment"))
                .collect();
            out.push(Allocation::new(assignment, graph.agents()).expect("agents in range"));
        }
        return;
    }
    let item = free[pos];
    let category = graph.category_of_item(item);
    for agent in 0..graph.agents() {
        let e = graph.edge_index(agent, item);
        if banned[e] {
            continue;
        }
        let slot = graph.slot_index(agent, category);
        if used[slot] == graph.capacity(category) {
            continue;
        }
        used[slot] += 1;
        fixed_agent[item] = Some(agent);
        dfs(
            graph,
            costs,
            optimum,
            free,
            pos + 1,
            fixed_agent,
            used,
            acc.clone() + costs[e].clone(),
            banned,
            out,
        );
        fixed_agent[item] = None;
        used[slot] -= 1;
    }
}
