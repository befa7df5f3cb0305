//! Exhaustive backends for deterministic positional strategies.
//!
//! Observation functions are enumerated as canonical set partitions of the
//! non-goal states (restricted-growth strings), so each renaming class is
//! visited once. For a partition with `k` blocks only injective strategies
//! `blocks → actions` are tried: a strategy that maps two blocks to the same
//! action lifts to the same state strategy as the coarser partition that
//! merges them, which is enumerated separately. The lifted state strategies
//! visited are thus exactly those with at most `B` distinct actions on the
//! non-goal states, each once.
//!
//! Work is processed in chunks; within a chunk candidates are evaluated in
//! parallel and the enumeration-order-minimal satisfying candidate wins, so
//! the reported witness does not depend on the number of workers.

use std::io::Write;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::Instant;

use rayon::prelude::*;
use thiserror::Error;

use crate::analysis::{evaluate_det_value, evaluate_obs_strategy, mdp_min_expected_reward};
use crate::model::{DetStrategy, Mdp, ModelError, Obs, ObservationFunction, Pomdp};
use crate::rational::{Threshold, Value};
use crate::solve::{Diagnostics, SolveResult, Verdict, Witness};
use crate::tpmc::SensorMap;

#[derive(Debug, Error)]
pub enum EnumError {
    #[error(
        "the MDP optimum is infinite; no observation function can reach the goal almost surely"
    )]
    InfiniteOptimum,
    #[error("budget must be at least 1")]
    ZeroBudget,
    #[error("{0}")]
    Model(#[from] ModelError),
    #[error("could not start worker pool: {0}")]
    Pool(String),
}

/// Restricted-growth strings of length `n` with at most `b` distinct values,
/// in lexicographic order.
pub fn observation_partitions(n: usize, b: usize) -> impl Iterator<Item = Vec<usize>> {
    assert!(b >= 1, "budget must be at least 1");
    let mut next = Some(vec![0; n]);
    std::iter::from_fn(move || {
        let cur = next.take()?;
        let mut a = cur.clone();
        // prefix maxima decide how far each position may grow
        let mut pmax = vec![0; n];
        for i in 1..n {
            pmax[i] = pmax[i - 1].max(a[i - 1]);
        }
        for i in (1..n).rev() {
            if a[i] <= pmax[i] && a[i] + 1 < b {
                a[i] += 1;
                a[i + 1..].iter_mut().for_each(|x| *x = 0);
                next = Some(a);
                break;
            }
        }
        Some(cur)
    })
}

/// How progress is reported on standard error.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ProgressMode {
    #[default]
    Off,
    Text,
    Ndjson,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct EnumOptions {
    /// Worker threads; `None` uses the global pool.
    pub jobs: Option<usize>,
    pub progress: ProgressMode,
}

struct Progress {
    mode: ProgressMode,
    total: Option<u128>,
    explored: u64,
}

impl Progress {
    fn report(&mut self, add: u64, best: Option<&Value>) {
        self.explored += add;
        let best = best.map_or("none".to_string(), |v| v.to_string());
        let total = self.total.map_or("?".to_string(), |t| t.to_string());
        let mut err = std::io::stderr().lock();
        let _ = match self.mode {
            ProgressMode::Off => Ok(()),
            ProgressMode::Text => writeln!(
                err,
                "explored {}/{} candidates, best {best}",
                self.explored, total
            ),
            ProgressMode::Ndjson => writeln!(
                err,
                "{}",
                serde_json::json!({"explored": self.explored, "total": total, "best": best})
            ),
        };
    }
}

/// One family of candidates: an observation function and whether strategies
/// over it must be injective.
struct Family {
    obs: ObservationFunction,
    injective: bool,
}

/// Outcome of searching one family.
struct FamilyResult {
    first_sat: Option<(DetStrategy, Value)>,
    best: Option<(DetStrategy, Value)>,
    explored: u64,
}

/// Calls `f` on every assignment of `k` labels to `n_act` actions in
/// lexicographic order (first label most significant); stops when `f`
/// returns `false`.
fn for_each_assignment(
    k: usize,
    n_act: usize,
    injective: bool,
    mut f: impl FnMut(&[usize]) -> bool,
) {
    if injective && k > n_act {
        return;
    }
    let mut a = vec![0; k];
    loop {
        let ok = !injective || {
            let mut seen = vec![false; n_act];
            a.iter().all(|&x| !std::mem::replace(&mut seen[x], true))
        };
        if ok && !f(&a) {
            return;
        }
        let mut i = k;
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            a[i] += 1;
            if a[i] < n_act {
                break;
            }
            a[i] = 0;
        }
    }
}

fn search_family(m: &Mdp, fam: &Family, threshold: Option<&Threshold>) -> FamilyResult {
    let mut choice = vec![0; m.num_states()];
    let mut out = FamilyResult {
        first_sat: None,
        best: None,
        explored: 0,
    };
    for_each_assignment(
        fam.obs.num_labels(),
        m.num_actions(),
        fam.injective,
        |assign| {
            for (s, c) in choice.iter_mut().enumerate() {
                if let Obs::Label(l) = fam.obs.get(s) {
                    *c = assign[l];
                }
            }
            let v = evaluate_det_value(m, &choice);
            out.explored += 1;
            if out.best.as_ref().is_none_or(|(_, b)| &v < b) {
                out.best = Some((DetStrategy(assign.to_vec()), v.clone()));
            }
            if threshold.is_some_and(|t| t.admits(&v)) {
                out.first_sat = Some((DetStrategy(assign.to_vec()), v));
                return false;
            }
            true
        },
    );
    out
}

/// Result of an exhaustive search.
pub struct SearchOutcome {
    /// First satisfying candidate in enumeration order.
    pub sat: Option<(ObservationFunction, DetStrategy, Value)>,
    /// Best candidate among those explored (first one on ties).
    pub best: Option<(ObservationFunction, DetStrategy, Value)>,
    pub explored: u64,
}

const CHUNK: usize = 256;

fn run_search(
    m: &Mdp,
    families: impl Iterator<Item = Family>,
    threshold: Option<&Threshold>,
    opts: EnumOptions,
    total: Option<u128>,
) -> Result<SearchOutcome, EnumError> {
    let pool = opts
        .jobs
        .map(|n| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build()
        })
        .transpose()
        .map_err(|e| EnumError::Pool(e.to_string()))?;
    {
        let mut progress = Progress {
            mode: opts.progress,
            total,
            explored: 0,
        };
        let mut out = SearchOutcome {
            sat: None,
            best: None,
            explored: 0,
        };
        let mut families = families;
        // smallest chunk position with a satisfying candidate; lets workers skip later work
        let cutoff = AtomicUsize::new(usize::MAX);
        loop {
            let chunk: Vec<Family> = families.by_ref().take(CHUNK).collect();
            if chunk.is_empty() {
                break;
            }
            let eval = || -> Vec<Option<FamilyResult>> {
                chunk
                    .par_iter()
                    .enumerate()
                    .map(|(i, fam)| {
                        if i > cutoff.load(Ordering::Relaxed) {
                            return None;
                        }
                        let r = search_family(m, fam, threshold);
                        if r.first_sat.is_some() {
                            cutoff.fetch_min(i, Ordering::Relaxed);
                        }
                        Some(r)
                    })
                    .collect()
            };
            let results = match &pool {
                Some(p) => p.install(eval),
                None => eval(),
            };
            let mut added = 0;
            for (fam, r) in chunk.into_iter().zip(results) {
                let Some(r) = r else { break };
                added += r.explored;
                if let Some((sigma, v)) = r.best {
                    if out.best.as_ref().is_none_or(|(_, _, b)| &v < b) {
                        out.best = Some((fam.obs.clone(), sigma, v));
                    }
                }
                if let Some((sigma, v)) = r.first_sat {
                    out.sat = Some((fam.obs, sigma, v));
                    break;
                }
            }
            out.explored += added;
            progress.report(added, out.best.as_ref().map(|b| &b.2));
            if out.sat.is_some() {
                break;
            }
        }
        Ok(out)
    }
}

fn partition_families(m: &Mdp, budget: usize) -> impl Iterator<Item = Family> + '_ {
    let n_act = m.num_actions();
    observation_partitions(m.non_goal_states().len(), budget)
        .filter(move |rgs| rgs.iter().max().map_or(0, |x| x + 1) <= n_act)
        .map(move |rgs| Family {
            obs: ObservationFunction::from_blocks(m, &rgs),
            injective: true,
        })
}

/// `Σ_k S(n, k) · n_act!/(n_act-k)!` for `k ≤ budget`, saturating.
fn pdoop_candidates(n: usize, budget: usize, n_act: usize) -> u128 {
    let mut stirling = vec![vec![0u128; n + 1]; n + 1];
    stirling[0][0] = 1;
    for i in 1..=n {
        for k in 1..=i {
            stirling[i][k] = stirling[i - 1][k - 1]
                .saturating_add((k as u128).saturating_mul(stirling[i - 1][k]));
        }
    }
    let mut total: u128 = if n == 0 { 1 } else { 0 };
    for k in 1..=budget.min(n).min(n_act) {
        let perms: u128 = (0..k).map(|i| (n_act - i) as u128).product();
        total = total.saturating_add(stirling[n][k].saturating_mul(perms));
    }
    total
}

/// Turns a search outcome into a verified result. The witness is
/// re-evaluated through the observation-lifted chain.
fn finish(m: &Mdp, out: SearchOutcome, start: Instant) -> Result<SolveResult, EnumError> {
    let diagnostics = Diagnostics {
        seconds: start.elapsed().as_secs_f64(),
        candidates: out.explored,
        ..Default::default()
    };
    let best = out.best.as_ref().map(|b| b.2.clone());
    match out.sat {
        Some((obs, sigma, v)) => {
            let strategy = sigma.to_rand();
            let value = evaluate_obs_strategy(m, &obs, &strategy)?;
            let verified = value == v;
            Ok(SolveResult {
                verdict: Verdict::Sat,
                witness: Some(Witness {
                    obs,
                    strategy,
                    claimed: v.finite().cloned(),
                    value,
                }),
                verified,
                best,
                diagnostics,
            })
        }
        None => Ok(SolveResult {
            verdict: Verdict::Unsat,
            witness: None,
            verified: false,
            best,
            diagnostics,
        }),
    }
}

/// Is there an observation function with at most `budget` labels and a
/// deterministic positional strategy over it meeting `threshold`?
pub fn solve_pdoop_enum(
    m: &Mdp,
    budget: usize,
    threshold: &Threshold,
    opts: EnumOptions,
) -> Result<SolveResult, EnumError> {
    if budget == 0 {
        return Err(EnumError::ZeroBudget);
    }
    let start = Instant::now();
    let total = pdoop_candidates(m.non_goal_states().len(), budget, m.num_actions());
    let out = run_search(
        m,
        partition_families(m, budget),
        Some(threshold),
        opts,
        Some(total),
    )?;
    finish(m, out, start)
}

/// Exact optimum over deterministic observation-based strategies with at most
/// `budget` labels, with a witness.
pub fn optimum_pdoop_enum(
    m: &Mdp,
    budget: usize,
    opts: EnumOptions,
) -> Result<SearchOutcome, EnumError> {
    if budget == 0 {
        return Err(EnumError::ZeroBudget);
    }
    let total = pdoop_candidates(m.non_goal_states().len(), budget, m.num_actions());
    run_search(m, partition_families(m, budget), None, opts, Some(total))
}

/// Best deterministic strategy for a fixed observation function. Sat iff the
/// best value meets the threshold; the witness is the first optimal strategy.
pub fn solve_pdpep_enum(p: &Pomdp, threshold: &Threshold) -> Result<SolveResult, EnumError> {
    let start = Instant::now();
    let fam = Family {
        obs: p.obs.clone(),
        injective: false,
    };
    let r = search_family(&p.mdp, &fam, None);
    let diagnostics = Diagnostics {
        seconds: start.elapsed().as_secs_f64(),
        candidates: r.explored,
        ..Default::default()
    };
    let (sigma, v) = r.best.expect("at least one strategy exists");
    if !threshold.admits(&v) {
        return Ok(SolveResult {
            verdict: Verdict::Unsat,
            witness: None,
            verified: false,
            best: Some(v),
            diagnostics,
        });
    }
    let strategy = sigma.to_rand();
    let value = evaluate_obs_strategy(&p.mdp, &p.obs, &strategy)?;
    Ok(SolveResult {
        verdict: Verdict::Sat,
        verified: value == v,
        witness: Some(Witness {
            obs: p.obs.clone(),
            strategy,
            claimed: v.finite().cloned(),
            value,
        }),
        best: Some(v),
        diagnostics,
    })
}

/// `k`-subsets of `0..n` in lexicographic order.
fn combinations(n: usize, k: usize) -> impl Iterator<Item = Vec<usize>> {
    let mut next = (k <= n).then(|| (0..k).collect::<Vec<_>>());
    std::iter::from_fn(move || {
        let cur = next.take()?;
        let mut c = cur.clone();
        for i in (0..k).rev() {
            if c[i] < n - k + i {
                c[i] += 1;
                for j in i + 1..k {
                    c[j] = c[j - 1] + 1;
                }
                next = Some(c);
                break;
            }
        }
        Some(cur)
    })
}

/// Observation function induced by switching on `on` (sensor indices):
/// each non-goal state observes the switched-on subset of its sensors.
/// Labels follow the ordering of sensor subsets; `@d` for single-sensor
/// maps, `{d1,d2}` otherwise, `⊥` for the empty subset.
pub fn sensor_observation(
    m: &Mdp,
    sensors: &SensorMap,
    on: &[usize],
    singletons: bool,
) -> ObservationFunction {
    let seen: Vec<Option<Vec<usize>>> = (0..m.num_states())
        .map(|s| {
            (!m.is_goal(s)).then(|| {
                sensors.loc[s]
                    .iter()
                    .copied()
                    .filter(|d| on.contains(d))
                    .collect()
            })
        })
        .collect();
    let mut subsets: Vec<Vec<usize>> = seen.iter().flatten().cloned().collect();
    subsets.sort();
    subsets.dedup();
    let labels = subsets
        .iter()
        .map(|o| {
            let names: Vec<&str> = o.iter().map(|&d| sensors.names[d].as_str()).collect();
            match (o.len(), singletons) {
                (0, _) => crate::tpmc::BLIND.to_string(),
                (_, true) => format!("@{}", names[0]),
                _ => format!("{{{}}}", names.join(",")),
            }
        })
        .collect();
    let map = seen
        .iter()
        .map(|o| match o {
            None => Obs::Goal,
            Some(o) => Obs::Label(subsets.binary_search(o).unwrap()),
        })
        .collect();
    ObservationFunction::new(labels, map).expect("labels cover every subset")
}

fn sensor_families<'a>(
    m: &'a Mdp,
    sensors: &'a SensorMap,
    budget: usize,
    singletons: bool,
) -> impl Iterator<Item = Family> + 'a {
    let d = sensors.names.len();
    (0..=budget.min(d)).flat_map(move |k| {
        combinations(d, k).map(move |on| Family {
            obs: sensor_observation(m, sensors, &on, singletons),
            injective: false,
        })
    })
}

/// Sensor selection: at most `budget` states carry a sensor that identifies
/// them; every other non-goal state looks the same.
pub fn solve_ssp_enum(
    m: &Mdp,
    budget: usize,
    threshold: &Threshold,
    opts: EnumOptions,
) -> Result<SolveResult, EnumError> {
    solve_general_ssp_enum(m, &SensorMap::per_state(m), budget, threshold, opts, true)
}

/// Sensor selection over arbitrary sensor sets per state.
pub fn solve_general_ssp_enum(
    m: &Mdp,
    sensors: &SensorMap,
    budget: usize,
    threshold: &Threshold,
    opts: EnumOptions,
    singletons: bool,
) -> Result<SolveResult, EnumError> {
    if budget == 0 {
        return Err(EnumError::ZeroBudget);
    }
    let start = Instant::now();
    let out = run_search(
        m,
        sensor_families(m, sensors, budget, singletons),
        Some(threshold),
        opts,
        None,
    )?;
    finish(m, out, start)
}

/// Exact optimum of sensor selection with at most `budget` sensors.
pub fn optimum_ssp_enum(
    m: &Mdp,
    sensors: &SensorMap,
    budget: usize,
    singletons: bool,
    opts: EnumOptions,
) -> Result<SearchOutcome, EnumError> {
    run_search(
        m,
        sensor_families(m, sensors, budget, singletons),
        None,
        opts,
        None,
    )
}

/// Best deterministic strategy when exactly the sensors of the named states
/// are switched on.
pub fn ssp_probe(
    m: &Mdp,
    on_states: &[&str],
) -> Result<(Value, ObservationFunction, DetStrategy), EnumError> {
    let sensors = SensorMap::per_state(m);
    let on = on_states
        .iter()
        .map(|s| {
            let name = s.to_string();
            sensors
                .names
                .iter()
                .position(|d| *d == name)
                .ok_or(ModelError::UnknownState(name))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let obs = sensor_observation(m, &sensors, &on, true);
    let r = search_family(
        m,
        &Family {
            obs: obs.clone(),
            injective: false,
        },
        None,
    );
    let (sigma, v) = r.best.expect("at least one strategy exists");
    Ok((v, obs, sigma))
}

/// Smallest observation budget achieving the MDP optimum.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MinBudget {
    pub budget: usize,
    /// The smallest action subset (in declaration order) achieving the optimum.
    pub actions: Vec<usize>,
    pub obs: ObservationFunction,
    pub strategy: DetStrategy,
    pub value: Value,
}

/// Tries action subsets by increasing size, ties in lexicographic order; the
/// first whose restricted optimum equals the full optimum fixes the
/// observation function "state ↦ chosen action".
pub fn solve_mpbp(m: &Mdp) -> Result<MinBudget, EnumError> {
    let target = mdp_min_expected_reward(m).value;
    if !target.is_finite() {
        return Err(EnumError::InfiniteOptimum);
    }
    for k in 1..=m.num_actions() {
        for subset in combinations(m.num_actions(), k) {
            let restricted = m.restrict_actions(&subset)?;
            let opt = mdp_min_expected_reward(&restricted);
            if opt.value != target {
                continue;
            }
            let chosen: Vec<Option<usize>> = (0..m.num_states())
                .map(|s| (!m.is_goal(s)).then(|| subset[opt.strategy.0[s]]))
                .collect();
            let mut used: Vec<usize> = chosen.iter().flatten().copied().collect();
            used.sort_unstable();
            used.dedup();
            let labels = used.iter().map(|&a| m.action_name(a).to_string()).collect();
            let map = chosen
                .iter()
                .map(|c| c.map_or(Obs::Goal, |a| Obs::Label(used.binary_search(&a).unwrap())))
                .collect();
            let obs = ObservationFunction::new(labels, map)?;
            let strategy = DetStrategy(used.clone());
            let value = evaluate_obs_strategy(m, &obs, &strategy.to_rand())?;
            debug_assert_eq!(value, target);
            return Ok(MinBudget {
                budget: used.len(),
                actions: subset,
                obs,
                strategy,
                value,
            });
        }
    }
    unreachable!("the full action set reproduces the optimum")
}
