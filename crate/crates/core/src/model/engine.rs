use rand::seq::{index, SliceRandom};
use rand::Rng;
use rand_distr::{Binomial, Distribution};

use super::population::{AgentId, Population};
use super::{merger_probability, ModelParams, ParamsError};
use crate::rng::seeded_rng;

/// Bookkeeping for one cycle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CycleStats {
    pub cycle_index: u64,
    pub mergers_executed: usize,
    pub live_count_after: usize,
}

/// One executed merger.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MergerRecord {
    pub cycle_index: u64,
    pub source: AgentId,
    pub partner: AgentId,
    /// Partner's ancestry at the moment it was absorbed.
    pub partner_ancestry: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Outcome {
    /// Live count fell to the target.
    ReachedTarget,
    /// `max_cycles` ran out first.
    MaxCyclesReached,
}

impl Outcome {
    pub fn as_str(self) -> &'static str {
        match self {
            Outcome::ReachedTarget => "reached_target",
            Outcome::MaxCyclesReached => "max_cycles_reached",
        }
    }

    pub fn terminated_normally(self) -> bool {
        self == Outcome::ReachedTarget
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationResult {
    pub params: ModelParams,
    pub seed: u64,
    pub final_population: Population,
    pub cycles_run: u64,
    pub outcome: Outcome,
    pub history: Option<Vec<CycleStats>>,
}

/// Draws the sources for one cycle.
///
/// Each live agent is included independently with its merger probability.
/// Agents sharing an ancestry value share that probability, so the number of
/// sources in such a group is one binomial draw and the members are then a
/// uniform subset. The returned order is a uniform random permutation.
pub fn select_sources<R: Rng + ?Sized>(pop: &Population, params: &ModelParams, rng: &mut R) -> Vec<AgentId> {
    let mut sources = Vec::new();
    if params.ancestry_weighting {
        for (ancestry, members) in pop.classes() {
            let q = merger_probability(ancestry, params);
            let picked = bernoulli_subset(members.len(), q, rng);
            sources.extend(picked.into_iter().map(|i| members[i]));
        }
    } else {
        let picked = bernoulli_subset(pop.live_count(), params.base_probability, rng);
        sources.extend(picked.into_iter().map(|i| pop.agent_at(i).id));
    }
    sources.shuffle(rng);
    sources
}

// Indices of a subset of 0..n where each index is kept with probability q.
fn bernoulli_subset<R: Rng + ?Sized>(n: usize, q: f64, rng: &mut R) -> Vec<usize> {
    if n == 0 {
        return Vec::new();
    }
    let k = if q >= 1.0 {
        n
    } else {
        Binomial::new(n as u64, q).expect("probability in [0, 1]").sample(rng) as usize
    };
    match k {
        0 => Vec::new(),
        k if k == n => (0..n).collect(),
        k => index::sample(rng, n, k).into_vec(),
    }
}

/// Runs one cycle: select sources, then let each still-live source absorb
/// a uniformly chosen other live agent.
pub fn execute_cycle<R: Rng + ?Sized>(pop: &mut Population, params: &ModelParams, rng: &mut R) -> CycleStats {
    run_cycle(pop, params, rng, |_| {})
}

/// [`execute_cycle`] that also appends every merger to `log`.
pub fn execute_cycle_logged<R: Rng + ?Sized>(
    pop: &mut Population,
    params: &ModelParams,
    rng: &mut R,
    log: &mut Vec<MergerRecord>,
) -> CycleStats {
    run_cycle(pop, params, rng, |m| log.push(m))
}

fn run_cycle<R: Rng + ?Sized>(
    pop: &mut Population,
    params: &ModelParams,
    rng: &mut R,
    mut on_merger: impl FnMut(MergerRecord),
) -> CycleStats {
    let cycle_index = pop.cycles_completed();
    let mut mergers_executed = 0;
    if !pop.is_empty() {
        for source in select_sources(pop, params, rng) {
            // Absorbed earlier in this cycle: the source loses its turn.
            let Some(source_idx) = pop.index_of(source) else { continue };
            let n = pop.live_count();
            if n < 2 {
                break;
            }
            let mut partner_idx = rng.gen_range(0..n - 1);
            if partner_idx >= source_idx {
                partner_idx += 1;
            }
            let partner = pop.agent_at(partner_idx).id;
            let partner_ancestry = pop.absorb(source, partner);
            mergers_executed += 1;
            on_merger(MergerRecord { cycle_index, source, partner, partner_ancestry });
        }
    }
    pop.finish_cycle();
    CycleStats { cycle_index, mergers_executed, live_count_after: pop.live_count() }
}

/// Runs cycles from a fresh population until the live count reaches
/// `target_count` or `max_cycles` is exhausted.
pub fn run_simulation(params: &ModelParams, seed: u64) -> Result<SimulationResult, ParamsError> {
    run_simulation_observed(params, seed, |_, _, _| {})
}

/// Like [`run_simulation`], but calls `observer` after every cycle with the
/// population, that cycle's stats, and its mergers.
pub fn run_simulation_observed(
    params: &ModelParams,
    seed: u64,
    mut observer: impl FnMut(&Population, &CycleStats, &[MergerRecord]),
) -> Result<SimulationResult, ParamsError> {
    params.validate()?;
    let mut rng = seeded_rng(seed);
    let mut pop = Population::new(params.initial_count);
    let mut log = Vec::new();
    while pop.live_count() > params.target_count && pop.cycles_completed() < params.max_cycles {
        log.clear();
        let stats = execute_cycle_logged(&mut pop, params, &mut rng, &mut log);
        observer(&pop, &stats, &log);
    }
    let outcome = if pop.live_count() <= params.target_count {
        Outcome::ReachedTarget
    } else {
        Outcome::MaxCyclesReached
    };
    Ok(SimulationResult {
        params: *params,
        seed,
        cycles_run: pop.cycles_completed(),
        final_population: pop,
        outcome,
        history: None,
    })
}

impl SimulationResult {
    /// Re-runs with the same params and seed, keeping every cycle's stats.
    pub fn with_history(params: &ModelParams, seed: u64) -> Result<Self, ParamsError> {
        let mut history = Vec::new();
        let mut result = run_simulation_observed(params, seed, |_, stats, _| history.push(*stats))?;
        result.history = Some(history);
        Ok(result)
    }

    pub fn ancestries(&self) -> Vec<u64> {
        self.final_population.ancestries()
    }
}
