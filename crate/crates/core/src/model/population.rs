use std::collections::BTreeMap;
use std::fmt;

/// Stable agent identifier; agents are numbered `0..initial_count`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AgentId(pub u32);

impl fmt::Display for AgentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Agent {
    pub id: AgentId,
    /// Number of agents absorbed into this agent's lineage.
    pub ancestry: u64,
}

/// The live agents of one simulation plus removal bookkeeping.
///
/// Live agents sit in a dense vector so a uniform partner draw is a single
/// index. They are also grouped by ancestry value, since the merger
/// probability depends on nothing else; source selection then needs one
/// binomial draw per distinct ancestry instead of one Bernoulli per agent.
#[derive(Debug, Clone, PartialEq)]
pub struct Population {
    live: Vec<Agent>,
    // id -> index into `live`
    slot: Vec<Option<u32>>,
    classes: BTreeMap<u64, Vec<AgentId>>,
    // id -> index into its ancestry class
    class_slot: Vec<u32>,
    absorbed: usize,
    initial: usize,
    cycles: u64,
}

impl Population {
    /// `count` agents, all with zero ancestry.
    pub fn new(count: usize) -> Self {
        Self::from_ancestries(&vec![0; count])
    }

    /// A population whose agent `i` has ancestry `ancestries[i]`.
    ///
    /// The absorbed count is set to the ancestry total, as if the lineages
    /// had been grown by the model, so the conservation laws hold.
    pub fn from_ancestries(ancestries: &[u64]) -> Self {
        assert!(ancestries.len() <= u32::MAX as usize, "population too large");
        let mut pop = Population {
            live: Vec::with_capacity(ancestries.len()),
            slot: Vec::with_capacity(ancestries.len()),
            classes: BTreeMap::new(),
            class_slot: vec![0; ancestries.len()],
            absorbed: 0,
            initial: ancestries.len(),
            cycles: 0,
        };
        for (i, &ancestry) in ancestries.iter().enumerate() {
            let id = AgentId(i as u32);
            pop.slot.push(Some(i as u32));
            pop.live.push(Agent { id, ancestry });
            pop.class_insert(id, ancestry);
            pop.absorbed += ancestry as usize;
        }
        pop.initial += pop.absorbed;
        pop
    }

    pub fn live_count(&self) -> usize {
        self.live.len()
    }

    pub fn absorbed_count(&self) -> usize {
        self.absorbed
    }

    pub fn initial_count(&self) -> usize {
        self.initial
    }

    /// Cycles executed on this population so far.
    pub fn cycles_completed(&self) -> u64 {
        self.cycles
    }

    pub(crate) fn finish_cycle(&mut self) {
        self.cycles += 1;
    }

    pub fn is_empty(&self) -> bool {
        self.live.is_empty()
    }

    pub fn get(&self, id: AgentId) -> Option<&Agent> {
        let idx = (*self.slot.get(id.0 as usize)?)?;
        Some(&self.live[idx as usize])
    }

    pub fn is_live(&self, id: AgentId) -> bool {
        self.get(id).is_some()
    }

    /// Live agents in internal order (deterministic, not sorted).
    pub fn agents(&self) -> impl Iterator<Item = &Agent> {
        self.live.iter()
    }

    /// Live agents sorted by id.
    pub fn sorted_agents(&self) -> Vec<Agent> {
        let mut out = self.live.clone();
        out.sort_by_key(|a| a.id);
        out
    }

    /// Ancestry values of live agents in id order.
    pub fn ancestries(&self) -> Vec<u64> {
        self.sorted_agents().into_iter().map(|a| a.ancestry).collect()
    }

    pub fn total_ancestry(&self) -> u64 {
        self.live.iter().map(|a| a.ancestry).sum()
    }

    pub fn max_ancestry(&self) -> u64 {
        self.classes.keys().next_back().copied().unwrap_or(0)
    }

    /// Distinct ancestry values with the agents holding them, ascending.
    pub(crate) fn classes(&self) -> impl Iterator<Item = (u64, &[AgentId])> {
        self.classes.iter().map(|(&a, ids)| (a, ids.as_slice()))
    }

    pub(crate) fn agent_at(&self, index: usize) -> Agent {
        self.live[index]
    }

    pub(crate) fn index_of(&self, id: AgentId) -> Option<usize> {
        self.slot.get(id.0 as usize).copied().flatten().map(|i| i as usize)
    }

    /// Removes `partner` and credits its lineage plus itself to `source`.
    /// Returns the partner's ancestry at absorption.
    pub(crate) fn absorb(&mut self, source: AgentId, partner: AgentId) -> u64 {
        debug_assert_ne!(source, partner);
        let partner_idx = self.index_of(partner).expect("partner must be live");
        let gained = self.live[partner_idx].ancestry;
        self.remove(partner_idx);

        let source_idx = self.index_of(source).expect("source must be live");
        let old = self.live[source_idx].ancestry;
        let new = old + gained + 1;
        self.live[source_idx].ancestry = new;
        self.class_remove(source, old);
        self.class_insert(source, new);
        self.absorbed += 1;
        gained
    }

    fn remove(&mut self, idx: usize) {
        let agent = self.live.swap_remove(idx);
        self.slot[agent.id.0 as usize] = None;
        if let Some(moved) = self.live.get(idx) {
            self.slot[moved.id.0 as usize] = Some(idx as u32);
        }
        self.class_remove(agent.id, agent.ancestry);
    }

    fn class_insert(&mut self, id: AgentId, ancestry: u64) {
        let members = self.classes.entry(ancestry).or_default();
        self.class_slot[id.0 as usize] = members.len() as u32;
        members.push(id);
    }

    fn class_remove(&mut self, id: AgentId, ancestry: u64) {
        let members = self.classes.get_mut(&ancestry).expect("ancestry class exists");
        let pos = self.class_slot[id.0 as usize] as usize;
        debug_assert_eq!(members[pos], id);
        members.swap_remove(pos);
        if let Some(&moved) = members.get(pos) {
            self.class_slot[moved.0 as usize] = pos as u32;
        }
        if members.is_empty() {
            self.classes.remove(&ancestry);
        }
    }
}
