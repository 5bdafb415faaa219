//! Witness search: cycle hyperplanes, arrangement-vertex enumeration, the
//! two-agent sweep specialization, EF\[1,1\] extraction, and a heuristic
//! grid-refinement fallback.
//!
//! For an elementary cycle C of the slot graph, crossing the hyperplane
//! `H_C = {y : y_{e1} - y_{e2} + … - y_{eℓ} = 0}` in cost space is where the
//! optimum of the weighted program can change. The weight curve is affine in
//! t, so each H_C induces an affine condition on t whose offset carries the
//! cycle's alternating ε sum. Vertices of the induced arrangement are solved
//! for exactly over the ordered module Q ⊕ Q·ε₁ ⊕ Q·ε₂ ⊕ …: the coefficient
//! matrix is rational while right-hand sides (and hence vertex coordinates
//! and edge costs) are ε-linear [`LexCost`] values. At such a vertex the
//! defining cycles tie exactly, so probing the face there recovers every
//! optimum of the adjacent cells and the witness guaranteed by the covering
//! argument is never missed.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;
use core::cmp::Ordering;

use num_bigint::BigInt;
use num_traits::{One, Zero};

use crate::arith::{LexCost, Rational};
use crate::fairness::{self, FairnessError};
use crate::model::{build_slot_graph, AgentId, Allocation, ItemId, NormalizedInstance, SlotGraph};
use crate::oracle::OracleError;
use crate::perturb::{compute_k, shrink_weights, CostMode, WeightPoint};
use crate::solver::{self, SolveError};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SearchError {
    #[error("cycle enumeration exceeded the cap of {cap}")]
    CycleCapExceeded { cap: usize },
    #[error("mode requires exactly {expected} agents, instance has {found}")]
    WrongAgentCount { expected: usize, found: usize },
    #[error(
        "no scanned weight point covers all agents ({points_scanned} points); \
         existence is guaranteed, so this indicates an implementation bug"
    )]
    WitnessNotFound { points_scanned: usize },
    #[error("EF\[1,1\] derivation expects a two-agent bundle whose allocations differ by one swap")]
    DerivePrecondition,
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error(transparent)]
    Perturb(#[from] crate::perturb::PerturbError),
    #[error(transparent)]
    Fairness(#[from] FairnessError),
}

/// A cycle hyperplane: the alternating edge sequence of an elementary cycle
/// and its canonical signed incidence vector (sorted by edge rank, sign of
/// the smallest edge positive).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct CycleHyperplane {
    pub cycle: Vec<usize>,
    pub normal: Vec<(usize, i8)>,
}

fn permutations(items: &[usize]) -> Vec<Vec<usize>> {
    if items.is_empty() {
        return alloc::vec![Vec::new()];
    }
    let mut out = Vec::new();
    for (i, &x) in items.iter().enumerate() {
        let mut rest = items.to_vec();
        rest.remove(i);
        for mut tail in permutations(&rest) {
            tail.insert(0, x);
            out.push(tail);
        }
    }
    out
}

fn combinations(count: usize, choose: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    for_each_combination(count, choose, |c| out.push(c.to_vec()));
    out
}

fn for_each_combination(count: usize, choose: usize, mut f: impl FnMut(&[usize])) {
    let mut current = Vec::with_capacity(choose);
    fn rec(
        start: usize,
        count: usize,
        left: usize,
        current: &mut Vec<usize>,
        f: &mut impl FnMut(&[usize]),
    ) {
        if left == 0 {
            f(current);
            return;
        }
        for i in start..count {
            if count - i < left {
                break;
            }
            current.push(i);
            rec(i + 1, count, left - 1, current, f);
            current.pop();
        }
    }
    rec(0, count, choose, &mut current, &mut f);
}

/// All distinct hyperplanes arising from elementary cycles of the slot
/// graph, deduplicated by canonical normal. Within one category the graph is
/// complete bipartite between the n agent slots and the category's items, so
/// a cycle is a choice of p agents and p items (2 ≤ p ≤ min(n, |S_h|)) in
/// cyclic order; components never mix categories.
pub fn enumerate_cycle_hyperplanes(
    graph: &SlotGraph,
    max_cycles: usize,
) -> Result<Vec<CycleHyperplane>, SearchError> {
    let n = graph.agents();
    let mut seen: BTreeSet<Vec<(usize, i8)>> = BTreeSet::new();
    let mut out = Vec::new();
    let mut generated = 0usize;

    let mut items_by_category: Vec<Vec<ItemId>> = alloc::vec![Vec::new(); graph.categories()];
    for item in 0..graph.items() {
        items_by_category[graph.category_of_item(item)].push(item);
    }

    for items in &items_by_category {
        let max_p = n.min(items.len());
        for p in 2..=max_p {
            for agent_combo in combinations(n, p) {
                let rest: Vec<usize> = agent_combo[1..].to_vec();
                for tail in permutations(&rest) {
                    let mut agents = alloc::vec![agent_combo[0]];
                    agents.extend(tail);
                    for item_combo in combinations(items.len(), p) {
                        let chosen: Vec<ItemId> = item_combo.iter().map(|&i| items[i]).collect();
                        for item_perm in permutations(&(0..p).collect::<Vec<_>>()) {
                            generated += 1;
                            if generated > max_cycles {
                                return Err(SearchError::CycleCapExceeded { cap: max_cycles });
                            }
                            // cycle σ1 π1 σ2 π2 … σp πp σ1 ; edge (σℓ, πℓ)
                            // gets +1, edge (σℓ₊₁, πℓ) gets −1.
                            let mut cycle = Vec::with_capacity(2 * p);
                            let mut normal = Vec::with_capacity(2 * p);
                            for l in 0..p {
                                let item = chosen[item_perm[l]];
                                let plus = graph.edge_index(agents[l], item);
                                let minus = graph.edge_index(agents[(l + 1) % p], item);
                                cycle.push(plus);
                                cycle.push(minus);
                                normal.push((plus, 1i8));
                                normal.push((minus, -1i8));
                            }
                            normal.sort_unstable_by_key(|(e, _)| *e);
                            if normal[0].1 < 0 {
                                for entry in normal.iter_mut() {
                                    entry.1 = -entry.1;
                                }
                            }
                            if seen.insert(normal.clone()) {
                                out.push(CycleHyperplane { cycle, normal });
                            }
                        }
                    }
                }
            }
        }
    }
    out.sort();
    Ok(out)
}

/// An affine condition `Σ coeffs_i · t_i = rhs` on the weight simplex. For a
/// cycle hyperplane the rhs carries the alternating ε offset; for a simplex
/// facet it is zero.
#[derive(Debug, Clone)]
pub struct ScanRow {
    pub coeffs: Vec<Rational>,
    pub rhs: LexCost,
}

/// The t-space condition induced by a cycle hyperplane, K-scaled to integer
/// coefficients: `Σ_i w_i (1 + (K-n) t_i) + K·Σ ±ε_e = 0` where
/// `w_i = Σ ±u_i(j)` over the cycle's edges of agent i. Returns `None` when
/// the base form vanishes identically on the simplex (the hyperplane
/// contains the whole weight curve and induces no cell boundary).
fn hyperplane_row(
    norm: &NormalizedInstance,
    graph: &SlotGraph,
    k: &BigInt,
    mode: &CostMode,
    hp: &CycleHyperplane,
) -> Option<ScanRow> {
    let n = norm.agents();
    let mut w = alloc::vec![BigInt::zero(); n];
    for (e, s) in &hp.normal {
        let edge = graph.edge(*e);
        let u = BigInt::from(norm.utility(edge.agent, edge.item));
        if *s > 0 {
            w[edge.agent] += u;
        } else {
            w[edge.agent] -= u;
        }
    }
    let shrink = k - BigInt::from(n);
    let constant: BigInt = w.iter().sum();
    let coeffs: Vec<BigInt> = w.iter().map(|wi| wi * &shrink).collect();
    let all_equal = coeffs.windows(2).all(|pair| pair[0] == pair[1]);
    if all_equal && (&constant + &coeffs[0]).is_zero() {
        return None;
    }

    let k_rat = Rational::from_integer(k.clone());
    let mut rhs = LexCost::from_base(Rational::from_integer(-constant));
    match mode {
        CostMode::Lex => {
            for (e, s) in &hp.normal {
                let factor = if *s > 0 { -&k_rat } else { k_rat.clone() };
                rhs += &LexCost::epsilon(graph.rank(*e)).scale(&factor);
            }
        }
        CostMode::Explicit(spec) => {
            let mut sum = Rational::zero();
            for (e, s) in &hp.normal {
                if *s > 0 {
                    sum += &spec.eps[*e];
                } else {
                    sum -= &spec.eps[*e];
                }
            }
            rhs = LexCost::from_base(rhs.base() - k_rat * sum);
        }
    }
    Some(ScanRow {
        coeffs: coeffs.into_iter().map(Rational::from_integer).collect(),
        rhs,
    })
}

fn facet_row(n: usize, coordinate: usize) -> ScanRow {
    let mut coeffs = alloc::vec![Rational::zero(); n];
    coeffs[coordinate] = Rational::one();
    ScanRow {
        coeffs,
        rhs: LexCost::zero(),
    }
}

/// Gauss-Jordan over a rational matrix with ε-linear right-hand sides.
fn solve_square(mut mat: Vec<Vec<Rational>>, mut rhs: Vec<LexCost>) -> Option<Vec<LexCost>> {
    let n = mat.len();
    let mut row_of_col = alloc::vec![usize::MAX; n];
    let mut used = alloc::vec![false; n];
    for col in 0..n {
        let pivot = (0..n).find(|&r| !used[r] && !mat[r][col].is_zero())?;
        used[pivot] = true;
        row_of_col[col] = pivot;
        let pv = mat[pivot][col].clone();
        let inv = pv.recip();
        for c in 0..n {
            mat[pivot][c] = &mat[pivot][c] * &inv;
        }
        rhs[pivot] = rhs[pivot].scale(&inv);
        for r in 0..n {
            if r == pivot || mat[r][col].is_zero() {
                continue;
            }
            let f = mat[r][col].clone();
            for c in 0..n {
                let delta = &mat[pivot][c] * &f;
                mat[r][c] = &mat[r][c] - &delta;
            }
            let delta = rhs[pivot].scale(&f);
            rhs[r] = rhs[r].clone() - delta;
        }
    }
    Some((0..n).map(|col| rhs[row_of_col[col]].clone()).collect())
}

fn in_simplex(t: &[LexCost]) -> bool {
    t.iter().all(|c| c.sign() != Ordering::Less)
}

/// Solve `[Σ t = 1] ∪ subset` and keep in-simplex solutions.
fn candidate_from_rows(rows: &[ScanRow], subset: &[usize], n: usize) -> Option<Vec<LexCost>> {
    let mut mat = Vec::with_capacity(n);
    let mut rhs = Vec::with_capacity(n);
    mat.push(alloc::vec![Rational::one(); n]);
    rhs.push(LexCost::from_base(Rational::one()));
    for &ri in subset {
        mat.push(rows[ri].coeffs.clone());
        rhs.push(rows[ri].rhs.clone());
    }
    let t = solve_square(mat, rhs)?;
    in_simplex(&t).then_some(t)
}

/// Integer view of a row for the small-system fast path.
struct FastRow {
    coeffs: Vec<i128>,
    rhs_base: i128,
}

const FAST_BOUND: i128 = 1 << 30;

fn fast_rows(rows: &[ScanRow], n: usize) -> Option<Vec<FastRow>> {
    if n > 3 {
        return None;
    }
    rows.iter()
        .map(|row| {
            let coeffs = row
                .coeffs
                .iter()
                .map(rational_to_small_int)
                .collect::<Option<Vec<i128>>>()?;
            let rhs_base = rational_to_small_int(row.rhs.base())?;
            Some(FastRow { coeffs, rhs_base })
        })
        .collect()
}

fn rational_to_small_int(x: &Rational) -> Option<i128> {
    use num_traits::ToPrimitive;
    if !x.is_integer() {
        return None;
    }
    let v = x.numer().to_i128()?;
    (v.abs() < FAST_BOUND).then_some(v)
}

fn det_small(m: &[Vec<i128>]) -> i128 {
    match m.len() {
        1 => m[0][0],
        2 => m[0][0] * m[1][1] - m[0][1] * m[1][0],
        3 => {
            m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
                - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
                + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
        }
        _ => unreachable!("fast path is limited to n <= 3"),
    }
}

/// Adjugate: `adj[i][j]` with `A^{-1} = adj / det`.
fn adjugate_small(m: &[Vec<i128>]) -> Vec<Vec<i128>> {
    let n = m.len();
    match n {
        1 => alloc::vec![alloc::vec![1]],
        2 => alloc::vec![
            alloc::vec![m[1][1], -m[0][1]],
            alloc::vec![-m[1][0], m[0][0]],
        ],
        3 => {
            let mut adj = alloc::vec![alloc::vec![0i128; 3]; 3];
            for i in 0..3 {
                for j in 0..3 {
                    let mut sub = [[0i128; 2]; 2];
                    let mut r = 0;
                    for rr in 0..3 {
                        if rr == j {
                            continue;
                        }
                        let mut c = 0;
                        for cc in 0..3 {
                            if cc == i {
                                continue;
                            }
                            sub[r][c] = m[rr][cc];
                            c += 1;
                        }
                        r += 1;
                    }
                    let minor = sub[0][0] * sub[1][1] - sub[0][1] * sub[1][0];
                    adj[i][j] = if (i + j) % 2 == 0 { minor } else { -minor };
                }
            }
            adj
        }
        _ => unreachable!("fast path is limited to n <= 3"),
    }
}

/// All candidate scan points: exact solutions of the sum row plus any n−1
/// rows chosen from the simplex facets and the (ε-shifted) cycle hyperplane
/// conditions, restricted to the simplex, deduplicated and sorted. Small
/// systems with small integer coefficients take an i128 Cramer fast path;
/// everything else goes through exact rational elimination.
pub fn scan_points(rows: &[ScanRow], n: usize) -> Vec<Vec<LexCost>> {
    let mut set: BTreeSet<Vec<LexCost>> = BTreeSet::new();
    let fast = fast_rows(rows, n);
    let mut mat: Vec<Vec<i128>> = alloc::vec![alloc::vec![0i128; n]; n];
    let mut rhs_base: Vec<i128> = alloc::vec![0i128; n];
    for_each_combination(rows.len(), n - 1, |subset| {
        if let Some(fast) = &fast {
            // row 0: Σ t_i = 1
            for c in 0..n {
                mat[0][c] = 1;
            }
            rhs_base[0] = 1;
            for (r, &ri) in subset.iter().enumerate() {
                mat[r + 1].clone_from_slice(&fast[ri].coeffs);
                rhs_base[r + 1] = fast[ri].rhs_base;
            }
            let det = det_small(&mat);
            if det == 0 {
                return;
            }
            let adj = adjugate_small(&mat);
            // reject on the rational part alone before any allocation
            let mut boundary = false;
            for adj_row in adj.iter().take(n) {
                let num: i128 = (0..n).map(|j| adj_row[j] * rhs_base[j]).sum();
                match (num.signum() * det.signum()).cmp(&0) {
                    Ordering::Less => return,
                    Ordering::Equal => boundary = true,
                    Ordering::Greater => {}
                }
            }
            let det_rat = Rational::from_integer(BigInt::from(det));
            let t: Vec<LexCost> = adj
                .iter()
                .map(|adj_row| {
                    let mut acc = LexCost::zero();
                    acc += &LexCost::from_base(Rational::from_integer(BigInt::from(
                        adj_row[0] * rhs_base[0],
                    )));
                    for (j, &ri) in subset.iter().enumerate() {
                        if adj_row[j + 1] != 0 {
                            // only the ε part is missing from rhs_base
                            let pert_only =
                                &rows[ri].rhs - &LexCost::from_base(rows[ri].rhs.base().clone());
                            acc += &pert_only
                                .scale(&Rational::from_integer(BigInt::from(adj_row[j + 1])));
                            acc += &LexCost::from_base(Rational::from_integer(BigInt::from(
                                adj_row[j + 1] * rhs_base[j + 1],
                            )));
                        }
                    }
                    acc.scale(&det_rat.recip())
                })
                .collect();
            if !boundary || in_simplex(&t) {
                set.insert(t);
            }
        } else if let Some(t) = candidate_from_rows(rows, subset, n) {
            set.insert(t);
        }
    });
    set.into_iter().collect()
}

/// Build all scan rows (facets first, then hyperplane conditions).
pub fn witness_rows(
    norm: &NormalizedInstance,
    graph: &SlotGraph,
    k: &BigInt,
    hps: &[CycleHyperplane],
    mode: &CostMode,
) -> Vec<ScanRow> {
    let n = norm.agents();
    let mut rows: Vec<ScanRow> = (0..n).map(|i| facet_row(n, i)).collect();
    rows.extend(
        hps.iter()
            .filter_map(|hp| hyperplane_row(norm, graph, k, mode, hp)),
    );
    rows
}

/// The rational base points of the arrangement vertices (standard parts of
/// the exact ε-linear vertices), deduplicated and sorted. Uses lex-mode
/// offsets.
pub fn arrangement_vertices(
    hps: &[CycleHyperplane],
    norm: &NormalizedInstance,
    k: &BigInt,
) -> Vec<WeightPoint> {
    let graph = build_slot_graph(norm);
    let rows = witness_rows(norm, &graph, k, hps, &CostMode::Lex);
    let points = scan_points(&rows, norm.agents());
    let mut set: BTreeSet<Vec<Rational>> = BTreeSet::new();
    for t in points {
        set.insert(t.iter().map(|c| c.base().clone()).collect());
    }
    set.into_iter()
        .map(|t| shrink_weights(t, k, norm.agents()).expect("scan points lie in the simplex"))
        .collect()
}

/// Edge costs at an exact (possibly ε-shifted) weight point.
pub fn costs_at_point(
    norm: &NormalizedInstance,
    graph: &SlotGraph,
    k: &BigInt,
    t: &[LexCost],
    mode: &CostMode,
) -> Vec<LexCost> {
    let n = norm.agents();
    let k_rat = Rational::from_integer(k.clone());
    let inv_k = k_rat.recip();
    let shrink = Rational::from_integer(k - BigInt::from(n));
    let one = LexCost::from_base(Rational::one());
    let t_prime: Vec<LexCost> = t
        .iter()
        .map(|ti| (ti.scale(&shrink) + one.clone()).scale(&inv_k))
        .collect();
    (0..graph.edge_count())
        .map(|e| {
            let edge = graph.edge(e);
            let u = Rational::from_integer(BigInt::from(norm.utility(edge.agent, edge.item)));
            let base = t_prime[edge.agent].scale(&u);
            match mode {
                CostMode::Lex => base + LexCost::epsilon(graph.rank(e)),
                CostMode::Explicit(spec) => base + LexCost::from_base(spec.eps[e].clone()),
            }
        })
        .collect()
}

/// Everything learned at one scanned weight point.
#[derive(Debug, Clone)]
pub struct PointEval {
    pub t: Vec<LexCost>,
    pub objective: LexCost,
    pub free_items: Vec<ItemId>,
    pub optima: Vec<Allocation>,
    /// Per agent, the first enumerated optimum that is envy-free for it.
    pub ef_cover: Vec<Option<usize>>,
}

impl PointEval {
    pub fn covers_all_agents(&self) -> bool {
        self.ef_cover.iter().all(Option::is_some)
    }
}

/// Solve, probe the optimal face, enumerate all integral optima and record
/// which agents get an envy-free optimum.
pub fn eval_point(
    norm: &NormalizedInstance,
    graph: &SlotGraph,
    k: &BigInt,
    t: &[LexCost],
    mode: &CostMode,
) -> Result<PointEval, SearchError> {
    let costs = costs_at_point(norm, graph, k, t, mode);
    let base = solver::solve(graph, &costs, &[], &[])?;
    let face = solver::probe_face_with(graph, &costs, &base)?;
    let optima = solver::enumerate_optima_with(graph, &costs, &face, &base.objective)?;
    let ef_cover = (0..norm.agents())
        .map(|i| {
            optima
                .iter()
                .position(|a| fairness::is_envy_free_for(norm, a, i))
        })
        .collect();
    Ok(PointEval {
        t: t.to_vec(),
        objective: base.objective,
        free_items: face.free_items,
        optima,
        ef_cover,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SearchMode {
    Arrangement,
    Sweep2,
    Grid,
}

impl SearchMode {
    pub fn label(&self) -> &'static str {
        match self {
            SearchMode::Arrangement => "arrangement",
            SearchMode::Sweep2 => "sweep2",
            SearchMode::Grid => "grid",
        }
    }
}

#[derive(Debug, Clone)]
pub struct SearchOptions {
    pub mode: SearchMode,
    pub cost_mode: CostMode,
    pub max_cycles: usize,
    pub grid_depth: usize,
    /// Enumeration guard for the Pareto certificates in the bundle.
    pub enum_limit: u64,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions {
            mode: SearchMode::Arrangement,
            cost_mode: CostMode::Lex,
            max_cycles: 1_000_000,
            grid_depth: 6,
            enum_limit: crate::oracle::DEFAULT_ENUM_LIMIT,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ScanStats {
    pub points_scanned: usize,
    pub max_free_items: usize,
}

/// Certificates computed on the returned bundle. The Pareto flags are `None`
/// when the brute-force guard tripped.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Certificates {
    pub pareto: Vec<Option<bool>>,
    pub envy_free: Vec<bool>,
    pub agree_outside: bool,
    pub realloc_bound: bool,
}

/// Witness output: the weight point, one envy-free optimum per agent, the
/// partial assignment they share, and the reallocation set.
#[derive(Debug, Clone)]
pub struct ResultBundle {
    pub t_star: WeightPoint,
    pub per_agent: Vec<Allocation>,
    pub common: BTreeMap<ItemId, AgentId>,
    pub realloc: BTreeSet<ItemId>,
    pub certificates: Certificates,
    pub mode: SearchMode,
    pub epsilon: String,
    pub heuristic: bool,
    pub stats: ScanStats,
}

/// Assemble a bundle from a fully covering evaluation.
pub fn bundle_from_eval(
    norm: &NormalizedInstance,
    k: &BigInt,
    eval: &PointEval,
    opts: &SearchOptions,
    mode: SearchMode,
    stats: ScanStats,
) -> Result<ResultBundle, SearchError> {
    let n = norm.agents();
    let mut per_agent: Vec<Allocation> = Vec::with_capacity(n);
    for ix in &eval.ef_cover {
        let ix = ix.ok_or(SearchError::WitnessNotFound { points_scanned: 0 })?;
        per_agent.push(eval.optima[ix].clone());
    }
    let realloc = fairness::reallocation_set(&per_agent)?;
    let common: BTreeMap<ItemId, AgentId> = (0..norm.items())
        .filter(|j| !realloc.contains(j))
        .map(|j| (j, per_agent[0].agent_of(j)))
        .collect();
    let std_t: Vec<Rational> = eval.t.iter().map(|c| c.base().clone()).collect();
    let t_star = shrink_weights(std_t, k, n)?;

    let envy_free = (0..n)
        .map(|i| fairness::is_envy_free_for(norm, &per_agent[i], i))
        .collect();
    let pareto = per_agent
        .iter()
        .map(
            |a| match fairness::is_pareto_optimal_bruteforce(norm, a, opts.enum_limit) {
                Ok(v) => Some(v),
                Err(OracleError::LimitExceeded { .. }) => None,
                Err(OracleError::Model(_)) => Some(false),
            },
        )
        .collect();
    let agree_outside = {
        let mut ok = true;
        'outer: for j in 0..norm.items() {
            if realloc.contains(&j) {
                continue;
            }
            for pair in per_agent.windows(2) {
                if pair[0].agent_of(j) != pair[1].agent_of(j) {
                    ok = false;
                    break 'outer;
                }
            }
        }
        ok
    };
    let realloc_bound = realloc.len() <= n * (n - 1);
    Ok(ResultBundle {
        t_star,
        per_agent,
        common,
        realloc,
        certificates: Certificates {
            pareto,
            envy_free,
            agree_outside,
            realloc_bound,
        },
        mode,
        epsilon: String::from(opts.cost_mode.label()),
        heuristic: matches!(mode, SearchMode::Grid),
        stats,
    })
}

/// Scan the arrangement vertices in lexicographic order and return the first
/// point where every agent has an envy-free optimum. Existence is a theorem;
/// exhausting the scan without a cover is reported as a hard failure.
pub fn find_witness(
    norm: &NormalizedInstance,
    opts: &SearchOptions,
) -> Result<ResultBundle, SearchError> {
    match opts.mode {
        SearchMode::Arrangement => scan_witness(norm, opts, SearchMode::Arrangement),
        SearchMode::Sweep2 => two_agent_sweep(norm, opts),
        SearchMode::Grid => grid_refinement_search(norm, opts.grid_depth, opts)?
            .ok_or(SearchError::WitnessNotFound { points_scanned: 0 }),
    }
}

fn scan_witness(
    norm: &NormalizedInstance,
    opts: &SearchOptions,
    mode: SearchMode,
) -> Result<ResultBundle, SearchError> {
    let graph = build_slot_graph(norm);
    let k = compute_k(norm);
    let hps = enumerate_cycle_hyperplanes(&graph, opts.max_cycles)?;
    let rows = witness_rows(norm, &graph, &k, &hps, &opts.cost_mode);
    let points = scan_points(&rows, norm.agents());
    let mut stats = ScanStats::default();
    for t in &points {
        let eval = eval_point(norm, &graph, &k, t, &opts.cost_mode)?;
        stats.points_scanned += 1;
        stats.max_free_items = stats.max_free_items.max(eval.free_items.len());
        if eval.covers_all_agents() {
            return bundle_from_eval(norm, &k, &eval, opts, mode, stats);
        }
    }
    Err(SearchError::WitnessNotFound {
        points_scanned: stats.points_scanned,
    })
}

/// The two-agent specialization: all cycles are 4-cycles and the vertex scan
/// order coincides with sweeping the breakpoints in increasing t_1.
pub fn two_agent_sweep(
    norm: &NormalizedInstance,
    opts: &SearchOptions,
) -> Result<ResultBundle, SearchError> {
    if norm.agents() != 2 {
        return Err(SearchError::WrongAgentCount {
            expected: 2,
            found: norm.agents(),
        });
    }
    scan_witness(norm, opts, SearchMode::Sweep2)
}

/// Pick the Pareto-optimal EF\[1,1\] allocation out of a two-agent bundle. The
/// two allocations differ by swapping two items over common parts I₁, I₂;
/// Pareto-optimality forces `u_1(I_1) ≥ u_1(I_2)` or `u_2(I_2) ≥ u_2(I_1)`,
/// and the corresponding envy-free allocation is EF\[1,1\].
pub fn derive_ef11(
    norm: &NormalizedInstance,
    bundle: &ResultBundle,
) -> Result<Allocation, SearchError> {
    if norm.agents() != 2 || bundle.per_agent.len() != 2 {
        return Err(SearchError::WrongAgentCount {
            expected: 2,
            found: norm.agents(),
        });
    }
    let a0 = &bundle.per_agent[0];
    let a1 = &bundle.per_agent[1];
    if a0 == a1 {
        return Ok(a0.clone());
    }
    let diff = fairness::reallocation_set(&[a0.clone(), a1.clone()])?;
    if diff.len() != 2 {
        return Err(SearchError::DerivePrecondition);
    }
    // common parts per agent
    let i1: Vec<ItemId> = a0.bundle(0).filter(|j| !diff.contains(j)).collect();
    let i2: Vec<ItemId> = a0.bundle(1).filter(|j| !diff.contains(j)).collect();
    let u1_i1 = norm.bundle_utility(0, i1.iter().copied());
    let u1_i2 = norm.bundle_utility(0, i2.iter().copied());
    if u1_i1 >= u1_i2 {
        // agent 2's envy-free allocation is PO and EF\[1,1\]
        Ok(bundle.per_agent[1].clone())
    } else {
        Ok(bundle.per_agent[0].clone())
    }
}

fn compositions(total: u64, parts: usize) -> Vec<Vec<u64>> {
    let mut out = Vec::new();
    let mut current = alloc::vec![0u64; parts];
    fn rec(pos: usize, left: u64, current: &mut Vec<u64>, out: &mut Vec<Vec<u64>>) {
        if pos + 1 == current.len() {
            current[pos] = left;
            out.push(current.clone());
            return;
        }
        for v in 0..=left {
            current[pos] = v;
            rec(pos + 1, left - v, current, out);
        }
    }
    if parts > 0 {
        rec(0, total, &mut current, &mut out);
    }
    out
}

/// Evaluate a dyadic grid of the simplex, depth by depth; at each grid point
/// also evaluate the exact micro-vertices anchored there (grid points lying
/// on base hyperplanes would otherwise never see the tied optima). Returns
/// the first fully covering evaluation, or `None` — the search is a labeled
/// heuristic and completeness is not guaranteed.
pub fn grid_refinement_search(
    norm: &NormalizedInstance,
    depth: usize,
    opts: &SearchOptions,
) -> Result<Option<ResultBundle>, SearchError> {
    let n = norm.agents();
    let graph = build_slot_graph(norm);
    let k = compute_k(norm);
    let hps = enumerate_cycle_hyperplanes(&graph, opts.max_cycles)?;
    let rows = witness_rows(norm, &graph, &k, &hps, &opts.cost_mode);
    let mut seen: BTreeSet<Vec<Rational>> = BTreeSet::new();
    let mut stats = ScanStats::default();

    for level in 0..=depth {
        let den = 1u64 << level;
        for comp in compositions(den, n) {
            let t_hat: Vec<Rational> = comp
                .iter()
                .map(|&a| Rational::new(BigInt::from(a), BigInt::from(den)))
                .collect();
            if !seen.insert(t_hat.clone()) {
                continue;
            }
            for t in grid_point_candidates(&rows, &t_hat, n) {
                let eval = eval_point(norm, &graph, &k, &t, &opts.cost_mode)?;
                stats.points_scanned += 1;
                stats.max_free_items = stats.max_free_items.max(eval.free_items.len());
                if eval.covers_all_agents() {
                    let bundle = bundle_from_eval(norm, &k, &eval, opts, SearchMode::Grid, stats)?;
                    return Ok(Some(bundle));
                }
            }
        }
    }
    Ok(None)
}

/// The plain point plus every micro-vertex anchored at it: exact solutions
/// of n−1 active rows (facets vanishing at the point, hyperplane conditions
/// whose base form vanishes there) together with the sum row.
fn grid_point_candidates(rows: &[ScanRow], t_hat: &[Rational], n: usize) -> Vec<Vec<LexCost>> {
    let plain: Vec<LexCost> = t_hat
        .iter()
        .map(|x| LexCost::from_base(x.clone()))
        .collect();
    let mut active: Vec<usize> = Vec::new();
    for (ri, row) in rows.iter().enumerate() {
        let lhs: Rational = row
            .coeffs
            .iter()
            .zip(t_hat)
            .map(|(c, t)| c * t)
            .fold(Rational::zero(), |acc, x| acc + x);
        if &lhs == row.rhs.base() {
            active.push(ri);
        }
    }
    let mut set: BTreeSet<Vec<LexCost>> = BTreeSet::new();
    for subset in combinations(active.len(), n - 1) {
        let chosen: Vec<usize> = subset.iter().map(|&i| active[i]).collect();
        if let Some(t) = candidate_from_rows(rows, &chosen, n) {
            // micro-vertices anchored here share the grid point's base
            if t.iter().zip(t_hat).all(|(c, x)| c.base() == x) {
                set.insert(t);
            }
        }
    }
    let mut out = alloc::vec![plain];
    out.extend(set);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::{rat, ratio};
    use crate::model::{Category, Instance};

    fn norm_of(utilities: Vec<Vec<i64>>, cats: Vec<(Vec<ItemId>, usize)>) -> NormalizedInstance {
        let categories = cats
            .into_iter()
            .map(|(items, capacity)| Category { items, capacity })
            .collect();
        crate::model::normalize(Instance::new(utilities, categories).unwrap())
    }

    fn norm_2x2(u1: [i64; 2], u2: [i64; 2]) -> NormalizedInstance {
        norm_of(
            alloc::vec![u1.to_vec(), u2.to_vec()],
            alloc::vec![(alloc::vec![0, 1], 1)],
        )
    }

    #[test]
    fn k22_has_one_hyperplane() {
        let norm = norm_2x2([3, 1], [1, 3]);
        let g = build_slot_graph(&norm);
        let hps = enumerate_cycle_hyperplanes(&g, 1000).unwrap();
        assert_eq!(hps.len(), 1);
        assert_eq!(hps[0].normal.len(), 4);
    }

    #[test]
    fn k23_has_three_hyperplanes() {
        let norm = norm_of(
            alloc::vec![alloc::vec![1, 2, 3], alloc::vec![3, 2, 1]],
            alloc::vec![(alloc::vec![0, 1, 2], 2)],
        );
        // padded to 4 items: K_{2,4} has C(4,2) = 6 four-cycles
        assert_eq!(norm.items(), 4);
        let g = build_slot_graph(&norm);
        let hps = enumerate_cycle_hyperplanes(&g, 1000).unwrap();
        assert_eq!(hps.len(), 6);

        // without padding: one category of 3 items, capacity 2, n = 2 would
        // pad; use 3 items capacity 1 with 3 agents? simplest true K_{2,3}:
        let norm = norm_of(
            alloc::vec![alloc::vec![1, 2, 3], alloc::vec![3, 2, 1]],
            alloc::vec![(alloc::vec![0, 1, 2], 3)],
        );
        assert_eq!(norm.items(), 6);
    }

    #[test]
    fn single_agent_no_cycles() {
        let norm = norm_of(
            alloc::vec![alloc::vec![1, 2, 3]],
            alloc::vec![(alloc::vec![0, 1, 2], 3)],
        );
        let g = build_slot_graph(&norm);
        assert!(enumerate_cycle_hyperplanes(&g, 1000).unwrap().is_empty());
    }

    #[test]
    fn cycle_cap_enforced() {
        let norm = norm_of(
            alloc::vec![alloc::vec![1; 6], alloc::vec![1; 6], alloc::vec![1; 6]],
            alloc::vec![(alloc::vec![0, 1, 2, 3, 4, 5], 2)],
        );
        let g = build_slot_graph(&norm);
        assert!(matches!(
            enumerate_cycle_hyperplanes(&g, 10),
            Err(SearchError::CycleCapExceeded { cap: 10 })
        ));
    }

    #[test]
    fn tie_instance_vertex_at_one_half() {
        let norm = norm_2x2([2, 1], [2, 1]);
        let g = build_slot_graph(&norm);
        let k = compute_k(&norm);
        let hps = enumerate_cycle_hyperplanes(&g, 1000).unwrap();
        let vertices = arrangement_vertices(&hps, &norm, &k);
        let ts: Vec<Vec<Rational>> = vertices.iter().map(|w| w.t().to_vec()).collect();
        assert!(ts.contains(&alloc::vec![ratio(1, 2), ratio(1, 2)]));
        assert!(ts.contains(&alloc::vec![rat(0), rat(1)]));
        assert!(ts.contains(&alloc::vec![rat(1), rat(0)]));
    }

    #[test]
    fn opposed_instance_vertices_are_corners_only() {
        let norm = norm_2x2([3, 1], [1, 3]);
        let g = build_slot_graph(&norm);
        let k = compute_k(&norm);
        let hps = enumerate_cycle_hyperplanes(&g, 1000).unwrap();
        let vertices = arrangement_vertices(&hps, &norm, &k);
        let ts: Vec<Vec<Rational>> = vertices.iter().map(|w| w.t().to_vec()).collect();
        assert_eq!(
            ts,
            alloc::vec![alloc::vec![rat(0), rat(1)], alloc::vec![rat(1), rat(0)],]
        );
    }

    #[test]
    fn single_agent_vertex_is_the_point() {
        let norm = norm_of(
            alloc::vec![alloc::vec![4, 5]],
            alloc::vec![(alloc::vec![0, 1], 2)],
        );
        let k = compute_k(&norm);
        let vertices = arrangement_vertices(&[], &norm, &k);
        assert_eq!(vertices.len(), 1);
        assert_eq!(vertices[0].t(), &[rat(1)]);
    }

    #[test]
    fn witness_opposed_preferences_no_reallocation() {
        let norm = norm_2x2([3, 1], [1, 3]);
        let bundle = find_witness(&norm, &SearchOptions::default()).unwrap();
        assert!(bundle.realloc.is_empty());
        assert_eq!(bundle.per_agent[0], bundle.per_agent[1]);
        assert_eq!(bundle.per_agent[0].assignment(), &[0, 1]);
        assert!(bundle.certificates.envy_free.iter().all(|&b| b));
        assert!(bundle.certificates.pareto.iter().all(|p| *p == Some(true)));
    }

    #[test]
    fn witness_tie_instance_reallocates_both_items() {
        let norm = norm_2x2([2, 1], [2, 1]);
        let bundle = find_witness(&norm, &SearchOptions::default()).unwrap();
        assert_eq!(bundle.t_star.t(), &[ratio(1, 2), ratio(1, 2)]);
        assert_eq!(
            bundle.realloc.iter().copied().collect::<Vec<_>>(),
            alloc::vec![0, 1]
        );
        assert!(bundle.realloc.len() <= 2);
        // each agent covered, with both swapped optima present
        assert_ne!(bundle.per_agent[0], bundle.per_agent[1]);
        assert!(bundle.certificates.envy_free.iter().all(|&b| b));
    }

    #[test]
    fn witness_single_agent_trivial() {
        let norm = norm_of(
            alloc::vec![alloc::vec![-1, 0, 7]],
            alloc::vec![(alloc::vec![0, 1, 2], 3)],
        );
        let bundle = find_witness(&norm, &SearchOptions::default()).unwrap();
        assert!(bundle.realloc.is_empty());
        assert_eq!(bundle.per_agent.len(), 1);
    }

    #[test]
    fn sweep_matches_arrangement_for_two_agents() {
        let norm = norm_2x2([2, 1], [2, 1]);
        let a = find_witness(&norm, &SearchOptions::default()).unwrap();
        let opts = SearchOptions {
            mode: SearchMode::Sweep2,
            ..SearchOptions::default()
        };
        let b = two_agent_sweep(&norm, &opts).unwrap();
        assert_eq!(a.per_agent, b.per_agent);
        assert_eq!(a.t_star.t(), b.t_star.t());
    }

    #[test]
    fn sweep_rejects_three_agents() {
        let norm = norm_of(
            alloc::vec![alloc::vec![1], alloc::vec![2], alloc::vec![3]],
            alloc::vec![(alloc::vec![0], 1)],
        );
        let opts = SearchOptions {
            mode: SearchMode::Sweep2,
            ..SearchOptions::default()
        };
        assert!(matches!(
            two_agent_sweep(&norm, &opts),
            Err(SearchError::WrongAgentCount { .. })
        ));
    }

    #[test]
    fn derive_ef11_tie_case() {
        let norm = norm_2x2([2, 1], [2, 1]);
        let bundle = find_witness(&norm, &SearchOptions::default()).unwrap();
        let ef11 = derive_ef11(&norm, &bundle).unwrap();
        assert!(fairness::is_ef11(&norm, &ef11));
        assert!(fairness::is_pareto_optimal_bruteforce(&norm, &ef11, 1000).unwrap());
        // empty commons: u_1(I_1) = u_1(I_2) = 0, so agent 2's allocation wins
        assert_eq!(ef11, bundle.per_agent[1]);
    }

    #[test]
    fn derive_ef11_identical_allocations() {
        let norm = norm_2x2([3, 1], [1, 3]);
        let bundle = find_witness(&norm, &SearchOptions::default()).unwrap();
        let ef11 = derive_ef11(&norm, &bundle).unwrap();
        assert_eq!(ef11, bundle.per_agent[0]);
        assert!(fairness::is_ef11(&norm, &ef11));
    }

    #[test]
    fn grid_finds_corner_witness_at_depth_zero() {
        let norm = norm_2x2([3, 1], [1, 3]);
        let bundle = grid_refinement_search(&norm, 0, &SearchOptions::default())
            .unwrap()
            .unwrap();
        assert!(bundle.heuristic);
        assert_eq!(bundle.mode, SearchMode::Grid);
    }

    #[test]
    fn grid_finds_tie_witness_once_grid_hits_half() {
        let norm = norm_2x2([2, 1], [2, 1]);
        assert!(grid_refinement_search(&norm, 0, &SearchOptions::default())
            .unwrap()
            .is_none());
        let bundle = grid_refinement_search(&norm, 1, &SearchOptions::default())
            .unwrap()
            .unwrap();
        assert_eq!(bundle.t_star.t(), &[ratio(1, 2), ratio(1, 2)]);
    }

    #[test]
    fn witness_is_deterministic() {
        let norm = norm_of(
            alloc::vec![alloc::vec![2, -1, 3], alloc::vec![2, 3, -1]],
            alloc::vec![(alloc::vec![0, 1], 1), (alloc::vec![2], 1)],
        );
        let a = find_witness(&norm, &SearchOptions::default()).unwrap();
        let b = find_witness(&norm, &SearchOptions::default()).unwrap();
        assert_eq!(a.per_agent, b.per_agent);
        assert_eq!(a.t_star.t(), b.t_star.t());
        assert_eq!(a.realloc, b.realloc);
    }
}
