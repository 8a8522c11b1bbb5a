//! Episodic transition storage with train/validation partitions.
//! Rewards are recomputable from the known reward function and are not
//! stored.

use crate::dynamics::{Action, SysState};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Partition {
    Train,
    Val,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Transition {
    pub x: SysState,
    pub u: Action,
    pub x_next: SysState,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Episode {
    pub partition: Partition,
    pub transitions: Vec<Transition>,
}

/// Append-only store of episodes. Splitting is per episode, never per
/// transition.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct TransitionDataset {
    pub episodes: Vec<Episode>,
}

impl TransitionDataset {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push_episode(&mut self, episode: Episode) {
        self.episodes.push(episode);
    }

    pub fn num_episodes(&self) -> usize {
        self.episodes.len()
    }

    pub fn total_transitions(&self) -> usize {
        self.episodes.iter().map(|e| e.transitions.len()).sum()
    }

    pub fn partition_transitions(&self, partition: Partition) -> Vec<Transition> {
        self.episodes
            .iter()
            .filter(|e| e.partition == partition)
            .flat_map(|e| e.transitions.iter().copied())
            .collect()
    }

    pub fn train_transitions(&self) -> Vec<Transition> {
        self.partition_transitions(Partition::Train)
    }

    pub fn val_transitions(&self) -> Vec<Transition> {
        self.partition_transitions(Partition::Val)
    }

    /// All states visited in the training partition (both endpoints of
    /// each transition, deduplicated by construction order: x of every
    /// transition plus the final x_next of each episode).
    pub fn train_states(&self) -> Vec<SysState> {
        let mut states = Vec::new();
        for e in self.episodes.iter().filter(|e| e.partition == Partition::Train) {
            for t in &e.transitions {
                states.push(t.x);
            }
            if let Some(last) = e.transitions.last() {
                states.push(last.x_next);
            }
        }
        states
    }
}
