//! Command execution: wiring files, modes, the solver and the oracle, with
//! stable machine-readable output. Exit codes: 0 success, 1 check failure
//! (or grid search not finding a witness), 2 usage/parse/validation errors.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};

use catfair_core::arith::Rational;
use catfair_core::model::{build_slot_graph, normalize, NormalizedInstance};
use catfair_core::oracle;
use catfair_core::perturb::{compute_k, default_alpha, epsilon_explicit, shrink_weights, CostMode};
use catfair_core::search::{self, ResultBundle, ScanStats, SearchError, SearchMode, SearchOptions};

use crate::formats::{self, FormatError, InstanceFile, OracleReportFile, ResultBundleFile};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

/// Environment variable overriding the default enumeration limit.
pub const ENUM_LIMIT_ENV: &str = "CATFAIR_ENUM_LIMIT";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EpsilonChoice {
    Lex,
    Explicit,
}

#[derive(Debug, Clone)]
pub enum Command {
    Solve {
        input: PathBuf,
        output: Option<PathBuf>,
        mode: SearchMode,
        epsilon: EpsilonChoice,
        alpha: Option<String>,
        max_cycles: usize,
        grid_depth: usize,
        threads: usize,
    },
    Verify {
        input: PathBuf,
        result: PathBuf,
        output: Option<PathBuf>,
    },
    Oracle {
        input: PathBuf,
        check: Option<PathBuf>,
        output: Option<PathBuf>,
    },
}

/// Fully resolved invocation.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub command: Command,
    pub enum_limit: u64,
    pub verbosity: u8,
}

#[derive(Debug, thiserror::Error)]
enum RunError {
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("cannot write {path}: {source}")]
    Write {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Parse {
        path: PathBuf,
        source: serde_json::Error,
    },
    #[error(transparent)]
    Format(#[from] FormatError),
    #[error("--alpha requires --epsilon explicit")]
    AlphaWithoutExplicit,
    #[error("invalid --alpha: {0}")]
    BadAlpha(String),
    #[error("--threads must be at least 1")]
    BadThreads,
    #[error(transparent)]
    Perturb(#[from] catfair_core::perturb::PerturbError),
    #[error(transparent)]
    Search(#[from] SearchError),
    #[error(transparent)]
    Oracle(#[from] oracle::OracleError),
}

pub fn run(config: &RunConfig) -> i32 {
    match dispatch(config) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            match err {
                RunError::Search(SearchError::WitnessNotFound { .. }) => EXIT_CHECK_FAILED,
                _ => EXIT_USAGE,
            }
        }
    }
}

fn dispatch(config: &RunConfig) -> Result<i32, RunError> {
    match &config.command {
        Command::Solve {
            input,
            output,
            mode,
            epsilon,
            alpha,
            max_cycles,
            grid_depth,
            threads,
        } => solve_command(
            config,
            input,
            output.as_deref(),
            *mode,
            *epsilon,
            alpha.as_deref(),
            *max_cycles,
            *grid_depth,
            *threads,
        ),
        Command::Verify {
            input,
            result,
            output,
        } => verify_command(config, input, result, output.as_deref()),
        Command::Oracle {
            input,
            check,
            output,
        } => oracle_command(config, input, check.as_deref(), output.as_deref()),
    }
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, RunError> {
    let text = fs::read_to_string(path).map_err(|source| RunError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|source| RunError::Parse {
        path: path.to_path_buf(),
        source,
    })
}

fn write_json<T: serde::Serialize>(value: &T, output: Option<&Path>) -> Result<(), RunError> {
    let mut text = serde_json::to_string_pretty(value).expect("serialization cannot fail");
    text.push('\n');
    match output {
        Some(path) => fs::write(path, text).map_err(|source| RunError::Write {
            path: path.to_path_buf(),
            source,
        }),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .map_err(|source| RunError::Write {
                    path: PathBuf::from("<stdout>"),
                    source,
                })
        }
    }
}

fn load_normalized(path: &Path) -> Result<NormalizedInstance, RunError> {
    let file: InstanceFile = read_json(path)?;
    Ok(normalize(file.into_instance()?))
}

#[allow(clippy::too_many_arguments)]
fn solve_command(
    config: &RunConfig,
    input: &Path,
    output: Option<&Path>,
    mode: SearchMode,
    epsilon: EpsilonChoice,
    alpha: Option<&str>,
    max_cycles: usize,
    grid_depth: usize,
    threads: usize,
) -> Result<i32, RunError> {
    if threads == 0 {
        return Err(RunError::BadThreads);
    }
    let norm = load_normalized(input)?;
    let cost_mode = match epsilon {
        EpsilonChoice::Lex => {
            if alpha.is_some() {
                return Err(RunError::AlphaWithoutExplicit);
            }
            CostMode::Lex
        }
        EpsilonChoice::Explicit => {
            let alpha: Rational = match alpha {
                Some(text) => {
                    formats::parse_rational(text).map_err(|_| RunError::BadAlpha(text.into()))?
                }
                None => default_alpha(&norm),
            };
            CostMode::Explicit(epsilon_explicit(&norm, alpha)?)
        }
    };
    let opts = SearchOptions {
        mode,
        cost_mode,
        max_cycles,
        grid_depth,
        enum_limit: config.enum_limit,
    };

    let outcome = match mode {
        SearchMode::Grid => search::grid_refinement_search(&norm, grid_depth, &opts)?,
        _ if threads > 1 => Some(parallel_scan(&norm, &opts, threads)?),
        _ => Some(search::find_witness(&norm, &opts)?),
    };

    match outcome {
        None => {
            eprintln!("grid search exhausted depth {grid_depth} without covering all agents");
            #[derive(serde::Serialize)]
            struct NotFound {
                format: u32,
                mode: &'static str,
                found: bool,
                grid_depth: usize,
            }
            write_json(
                &NotFound {
                    format: formats::FORMAT_VERSION,
                    mode: mode.label(),
                    found: false,
                    grid_depth,
                },
                output,
            )?;
            Ok(EXIT_CHECK_FAILED)
        }
        Some(bundle) => {
            let file = ResultBundleFile::from_bundle(&norm, &bundle);
            write_json(&file, output)?;
            print_summary(config, &norm, &bundle);
            Ok(EXIT_OK)
        }
    }
}

fn print_summary(config: &RunConfig, norm: &NormalizedInstance, bundle: &ResultBundle) {
    let t: Vec<String> = bundle
        .t_star
        .t()
        .iter()
        .map(formats::rational_to_string)
        .collect();
    eprintln!(
        "t* = ({}), |R| = {} (bound {}), mode {}{}",
        t.join(", "),
        bundle.realloc.len(),
        norm.agents() * (norm.agents() - 1),
        bundle.mode.label(),
        if bundle.heuristic { " [heuristic]" } else { "" },
    );
    for i in 0..norm.agents() {
        eprintln!(
            "agent {}: envy-free {} pareto {}",
            i + 1,
            bundle.certificates.envy_free[i],
            match bundle.certificates.pareto[i] {
                Some(true) => "yes",
                Some(false) => "NO",
                None => "unchecked (limit)",
            }
        );
    }
    if config.verbosity > 0 {
        eprintln!(
            "scanned {} points, max free items {}",
            bundle.stats.points_scanned, bundle.stats.max_free_items
        );
    }
}

/// Evaluate scan points across worker threads. The winner is the
/// lexicographically-first covering point regardless of completion order, so
/// the output is identical to the sequential scan.
fn parallel_scan(
    norm: &NormalizedInstance,
    opts: &SearchOptions,
    threads: usize,
) -> Result<ResultBundle, RunError> {
    let graph = build_slot_graph(norm);
    let k = compute_k(norm);
    let hps = search::enumerate_cycle_hyperplanes(&graph, opts.max_cycles)?;
    let rows = search::witness_rows(norm, &graph, &k, &hps, &opts.cost_mode);
    let points = search::scan_points(&rows, norm.agents());

    let min_found = AtomicUsize::new(usize::MAX);
    let workers = threads.min(points.len().max(1));
    let results = std::thread::scope(|scope| {
        let mut handles = Vec::new();
        for worker in 0..workers {
            let points = &points;
            let graph = &graph;
            let k = &k;
            let min_found = &min_found;
            let cost_mode = &opts.cost_mode;
            handles.push(scope.spawn(move || {
                let mut best: Option<(usize, search::PointEval)> = None;
                let mut index = worker;
                while index < points.len() {
                    if min_found.load(Ordering::SeqCst) < index {
                        break;
                    }
                    let eval = search::eval_point(norm, graph, k, &points[index], cost_mode)?;
                    if eval.covers_all_agents() {
                        min_found.fetch_min(index, Ordering::SeqCst);
                        best = Some((index, eval));
                        break;
                    }
                    index += workers;
                }
                Ok::<_, SearchError>(best)
            }));
        }
        handles
            .into_iter()
            .map(|h| h.join().expect("worker panicked"))
            .collect::<Result<Vec<_>, _>>()
    })?;

    let winner = results
        .into_iter()
        .flatten()
        .min_by_key(|(index, _)| *index);
    match winner {
        Some((index, eval)) => {
            let stats = ScanStats {
                points_scanned: index + 1,
                max_free_items: eval.free_items.len(),
            };
            Ok(search::bundle_from_eval(
                norm, &k, &eval, opts, opts.mode, stats,
            )?)
        }
        None => Err(RunError::Search(SearchError::WitnessNotFound {
            points_scanned: points.len(),
        })),
    }
}

fn verify_command(
    config: &RunConfig,
    input: &Path,
    result: &Path,
    output: Option<&Path>,
) -> Result<i32, RunError> {
    let norm = load_normalized(input)?;
    let file: ResultBundleFile = read_json(result)?;
    let bundle = bundle_from_file(&norm, file)?;
    let report = oracle::check_theorem1(&norm, &bundle, config.enum_limit)?;
    let verify = formats::verify_report_from_oracle(&report);
    write_json(&verify, output)?;
    for clause in verify.clauses.iter().filter(|c| !c.passed) {
        eprintln!(
            "FAIL {}{}: {}",
            clause.name,
            clause
                .agent
                .map(|a| format!(" (agent {a})"))
                .unwrap_or_default(),
            clause.detail
        );
    }
    if verify.passed {
        eprintln!("all checks passed");
        Ok(EXIT_OK)
    } else {
        Ok(EXIT_CHECK_FAILED)
    }
}

/// Rebuild a core bundle from its serialized form; certificates are
/// recomputed by the checker, so placeholders are fine.
fn bundle_from_file(
    norm: &NormalizedInstance,
    file: ResultBundleFile,
) -> Result<ResultBundle, RunError> {
    if file.format != formats::FORMAT_VERSION {
        return Err(FormatError::Version(file.format).into());
    }
    let n = norm.agents();
    if file.allocations.len() != n {
        return Err(FormatError::AgentCount {
            expected: n,
            found: file.allocations.len(),
        }
        .into());
    }
    let mut per_agent = Vec::with_capacity(n);
    for agent in 1..=n as u64 {
        let alloc_file = file
            .allocations
            .get(&agent)
            .ok_or(FormatError::AgentId(agent))?;
        let alloc_file = crate::formats::AllocationFile {
            assignment: alloc_file.assignment.clone(),
        };
        per_agent.push(alloc_file.into_allocation(norm)?);
    }
    let mut t = Vec::with_capacity(n);
    for s in &file.t_star {
        t.push(formats::parse_rational(s)?);
    }
    let k = compute_k(norm);
    let t_star = shrink_weights(t, &k, n)?;
    let realloc = file
        .reallocation_set
        .iter()
        .map(|&raw| {
            if raw == 0 || raw as usize > norm.items() {
                Err(FormatError::ItemId(raw))
            } else {
                Ok(raw as usize - 1)
            }
        })
        .collect::<Result<_, _>>()?;
    let common = file
        .common
        .iter()
        .map(|(&item, &agent)| {
            if item == 0 || item as usize > norm.items() {
                return Err(FormatError::ItemId(item));
            }
            if agent == 0 || agent as usize > n {
                return Err(FormatError::AgentId(agent));
            }
            Ok((item as usize - 1, agent as usize - 1))
        })
        .collect::<Result<_, _>>()?;
    let mode = match file.mode.as_str() {
        "sweep2" => SearchMode::Sweep2,
        "grid" => SearchMode::Grid,
        _ => SearchMode::Arrangement,
    };
    Ok(ResultBundle {
        t_star,
        per_agent,
        common,
        realloc,
        certificates: search::Certificates {
            pareto: vec![None; n],
            envy_free: vec![false; n],
            agree_outside: false,
            realloc_bound: false,
        },
        mode,
        epsilon: file.epsilon,
        heuristic: file.heuristic,
        stats: ScanStats::default(),
    })
}

fn oracle_command(
    config: &RunConfig,
    input: &Path,
    check: Option<&Path>,
    output: Option<&Path>,
) -> Result<i32, RunError> {
    let norm = load_normalized(input)?;
    match check {
        None => {
            let report = oracle::oracle_report(&norm, config.enum_limit)?;
            write_json(&OracleReportFile::from_report(&report, false), output)?;
            eprintln!(
                "{} feasible allocations, {} Pareto-optimal",
                report.feasible_count,
                report.pareto_set.len()
            );
            Ok(EXIT_OK)
        }
        Some(result) => {
            let file: ResultBundleFile = read_json(result)?;
            let bundle = bundle_from_file(&norm, file)?;
            let report = oracle::check_theorem1(&norm, &bundle, config.enum_limit)?;
            let passed = report.passed();
            write_json(&OracleReportFile::from_report(&report, true), output)?;
            for clause in report.verdicts.iter().filter(|c| !c.passed) {
                eprintln!("FAIL {}: {}", clause.name, clause.detail);
            }
            Ok(if passed { EXIT_OK } else { EXIT_CHECK_FAILED })
        }
    }
}
