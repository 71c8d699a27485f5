//! Acquisition forest built from dated merger events.
//!
//! An entity's ancestry as of a date is the number of distinct entities
//! reachable from it through absorption edges dated on or before that date,
//! at any depth. The surviving entity does not count itself.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use chrono::NaiveDate;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EntityId(pub String);

impl EntityId {
    pub fn new(id: impl Into<String>) -> Self {
        EntityId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for EntityId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for EntityId {
    fn from(s: &str) -> Self {
        EntityId(s.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MergerEvent {
    pub date: NaiveDate,
    pub acquirer: EntityId,
    pub target: EntityId,
}

impl MergerEvent {
    pub fn new(date: NaiveDate, acquirer: impl Into<EntityId>, target: impl Into<EntityId>) -> Result<Self, GenealogyError> {
        let (acquirer, target) = (acquirer.into(), target.into());
        if acquirer == target {
            return Err(GenealogyError::SelfMerger { entity: acquirer, date });
        }
        Ok(Self { date, acquirer, target })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GenealogyError {
    #[error("entity {entity} acquires itself on {date}")]
    SelfMerger { entity: EntityId, date: NaiveDate },
    #[error("entity {entity} absorbed twice: by {first_acquirer} on {first_date} and by {second_acquirer} on {second_date}")]
    DuplicateAbsorption {
        entity: EntityId,
        first_acquirer: EntityId,
        first_date: NaiveDate,
        second_acquirer: EntityId,
        second_date: NaiveDate,
    },
    #[error("entity {entity} acquires {target} on {acquired_on} after being absorbed on {absorbed_on}")]
    AcquiredAfterAbsorption { entity: EntityId, target: EntityId, absorbed_on: NaiveDate, acquired_on: NaiveDate },
    #[error("absorption cycle through entity {entity}")]
    Cycle { entity: EntityId },
    #[error("unknown entity {0}")]
    UnknownEntity(EntityId),
    #[error("snapshot dates must be strictly increasing")]
    UnorderedDates,
}

impl From<&String> for EntityId {
    fn from(s: &String) -> Self {
        EntityId(s.clone())
    }
}

/// Absorption of one entity.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Absorption {
    pub acquirer: EntityId,
    pub date: NaiveDate,
}

/// Validated, immutable acquisition forest.
/// Ancestor counts of the entities live on a date.
pub type AncestrySnapshot = (NaiveDate, BTreeMap<EntityId, u64>);

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct GenealogyForest {
    nodes: BTreeSet<EntityId>,
    absorption: BTreeMap<EntityId, Absorption>,
    children: BTreeMap<EntityId, Vec<(NaiveDate, EntityId)>>,
    events: Vec<MergerEvent>,
}

/// Ancestor count of one entity at a date.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AncestryRecord {
    pub entity: EntityId,
    pub as_of: NaiveDate,
    pub ancestor_count: u64,
}

impl GenealogyForest {
    /// Sorts events by (date, acquirer, target) and validates them.
    pub fn build(events: &[MergerEvent]) -> Result<Self, GenealogyError> {
        let mut sorted = events.to_vec();
        sorted.sort();
        sorted.dedup();

        let mut forest = GenealogyForest::default();
        for ev in &sorted {
            if ev.acquirer == ev.target {
                return Err(GenealogyError::SelfMerger { entity: ev.acquirer.clone(), date: ev.date });
            }
            if let Some(prev) = forest.absorption.get(&ev.target) {
                return Err(GenealogyError::DuplicateAbsorption {
                    entity: ev.target.clone(),
                    first_acquirer: prev.acquirer.clone(),
                    first_date: prev.date,
                    second_acquirer: ev.acquirer.clone(),
                    second_date: ev.date,
                });
            }
            forest.nodes.insert(ev.acquirer.clone());
            forest.nodes.insert(ev.target.clone());
            forest.absorption.insert(ev.target.clone(), Absorption { acquirer: ev.acquirer.clone(), date: ev.date });
            forest.children.entry(ev.acquirer.clone()).or_default().push((ev.date, ev.target.clone()));
        }

        // Every acquisition must happen on or before the acquirer's own absorption.
        for ev in &sorted {
            if let Some(abs) = forest.absorption.get(&ev.acquirer) {
                if ev.date > abs.date {
                    return Err(GenealogyError::AcquiredAfterAbsorption {
                        entity: ev.acquirer.clone(),
                        target: ev.target.clone(),
                        absorbed_on: abs.date,
                        acquired_on: ev.date,
                    });
                }
            }
        }
        forest.check_acyclic()?;
        forest.events = sorted;
        Ok(forest)
    }

    // Each entity has at most one acquirer, so following acquirer links from
    // any node either ends at a root or revisits a node.
    fn check_acyclic(&self) -> Result<(), GenealogyError> {
        let mut state: BTreeMap<&EntityId, bool> = BTreeMap::new(); // false = on current path, true = done
        for start in self.absorption.keys() {
            let mut path = Vec::new();
            let mut cur = start;
            loop {
                match state.get(cur) {
                    Some(true) => break,
                    Some(false) => return Err(GenealogyError::Cycle { entity: cur.clone() }),
                    None => {}
                }
                state.insert(cur, false);
                path.push(cur);
                match self.absorption.get(cur) {
                    Some(abs) => cur = &abs.acquirer,
                    None => break,
                }
            }
            for node in path {
                state.insert(node, true);
            }
        }
        Ok(())
    }

    pub fn nodes(&self) -> impl Iterator<Item = &EntityId> {
        self.nodes.iter()
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn contains(&self, entity: &EntityId) -> bool {
        self.nodes.contains(entity)
    }

    /// Events in canonical order.
    pub fn events(&self) -> &[MergerEvent] {
        &self.events
    }

    pub fn absorption(&self, entity: &EntityId) -> Option<&Absorption> {
        self.absorption.get(entity)
    }

    /// Entities absorbed by `entity`, in date order.
    pub fn children(&self, entity: &EntityId) -> &[(NaiveDate, EntityId)] {
        self.children.get(entity).map_or(&[], Vec::as_slice)
    }

    pub fn first_date(&self) -> Option<NaiveDate> {
        self.events.first().map(|e| e.date)
    }

    pub fn last_date(&self) -> Option<NaiveDate> {
        self.events.last().map(|e| e.date)
    }

    /// Not absorbed on or before `as_of`.
    pub fn is_live(&self, entity: &EntityId, as_of: NaiveDate) -> bool {
        self.absorption.get(entity).is_none_or(|a| a.date > as_of)
    }

    pub fn absorbed_count(&self, as_of: NaiveDate) -> usize {
        self.absorption.values().filter(|a| a.date <= as_of).count()
    }

    /// Number of entities absorbed, directly or through earlier acquisitions,
    /// into `entity` by `as_of`.
    pub fn ancestry_count(&self, entity: &EntityId, as_of: NaiveDate) -> Result<u64, GenealogyError> {
        if !self.nodes.contains(entity) {
            return Err(GenealogyError::UnknownEntity(entity.clone()));
        }
        Ok(self.subtree_size(entity, as_of))
    }

    /// Ancestors of `entity` as of `as_of` (excluding itself).
    pub fn ancestors(&self, entity: &EntityId, as_of: NaiveDate) -> Vec<&EntityId> {
        let mut out = Vec::new();
        let mut stack = vec![entity];
        while let Some(node) = stack.pop() {
            for (date, child) in self.children(node) {
                if *date <= as_of {
                    out.push(child);
                    stack.push(child);
                }
            }
        }
        out
    }

    fn subtree_size(&self, entity: &EntityId, as_of: NaiveDate) -> u64 {
        let mut count = 0;
        let mut stack = vec![entity];
        while let Some(node) = stack.pop() {
            for (date, child) in self.children(node) {
                if *date > as_of {
                    break;
                }
                count += 1;
                stack.push(child);
            }
        }
        count
    }

    /// Ancestor counts for every entity live at `as_of`, keyed by id.
    pub fn ancestry_table(&self, as_of: NaiveDate) -> BTreeMap<EntityId, u64> {
        self.nodes
            .iter()
            .filter(|e| self.is_live(e, as_of))
            .map(|e| (e.clone(), self.subtree_size(e, as_of)))
            .collect()
    }

    pub fn ancestry_records(&self, as_of: NaiveDate) -> Vec<AncestryRecord> {
        self.ancestry_table(as_of)
            .into_iter()
            .map(|(entity, ancestor_count)| AncestryRecord { entity, as_of, ancestor_count })
            .collect()
    }

    /// One ancestry table per date; dates must be strictly increasing.
    pub fn accumulated_ancestry_series(
        &self,
        dates: &[NaiveDate],
    ) -> Result<Vec<AncestrySnapshot>, GenealogyError> {
        if dates.windows(2).any(|w| w[0] >= w[1]) {
            return Err(GenealogyError::UnorderedDates);
        }
        Ok(dates.iter().map(|&d| (d, self.ancestry_table(d))).collect())
    }

    /// Acquisitions made by `entity` with dates in `[from, until)`.
    pub fn acquisitions_between(&self, entity: &EntityId, from: NaiveDate, until: NaiveDate) -> usize {
        self.children(entity).iter().filter(|(d, _)| *d >= from && *d < until).count()
    }
}
