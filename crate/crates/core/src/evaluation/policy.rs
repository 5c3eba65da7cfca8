use crate::error::{Error, Result};
use crate::matrix_equilibria::MixedStrategy;

/// A per-step, per-state mixed strategy for one player. Entries may be
/// missing; oracles reject policies with holes.
#[derive(Debug, Clone, PartialEq)]
pub struct MarkovPolicy {
    horizon: usize,
    num_states: usize,
    num_actions: usize,
    entries: Vec<Option<MixedStrategy>>,
}

impl MarkovPolicy {
    /// A policy with no entries.
    pub fn empty(horizon: usize, num_states: usize, num_actions: usize) -> Self {
        Self { horizon, num_states, num_actions, entries: vec![None; horizon * num_states] }
    }

    /// Total policy from `f(h, x)`, `h` 1-based.
    pub fn from_fn<F>(horizon: usize, num_states: usize, num_actions: usize, mut f: F) -> Result<Self>
    where
        F: FnMut(usize, usize) -> MixedStrategy,
    {
        let mut p = Self::empty(horizon, num_states, num_actions);
        for h in 1..=horizon {
            for x in 0..num_states {
                p.set(h, x, f(h, x))?;
            }
        }
        Ok(p)
    }

    pub fn uniform(horizon: usize, num_states: usize, num_actions: usize) -> Self {
        let u = MixedStrategy::uniform(num_actions);
        Self { horizon, num_states, num_actions, entries: vec![Some(u); horizon * num_states] }
    }

    /// Deterministic policy from `f(h, x) -> action`.
    pub fn deterministic<F>(horizon: usize, num_states: usize, num_actions: usize, mut f: F) -> Result<Self>
    where
        F: FnMut(usize, usize) -> usize,
    {
        let mut bad = None;
        let p = Self::from_fn(horizon, num_states, num_actions, |h, x| {
            let a = f(h, x);
            if a >= num_actions {
                bad = Some(a);
                return MixedStrategy::uniform(num_actions);
            }
            MixedStrategy::point_mass(num_actions, a)
        })?;
        match bad {
            Some(a) => Err(Error::Input(format!("action {a} out of range"))),
            None => Ok(p),
        }
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    fn slot(&self, h: usize, x: usize) -> Result<usize> {
        if h == 0 || h > self.horizon || x >= self.num_states {
            return Err(Error::Input(format!("policy index (h={h}, x={x}) out of range")));
        }
        Ok((h - 1) * self.num_states + x)
    }

    pub fn set(&mut self, h: usize, x: usize, s: MixedStrategy) -> Result<()> {
        if s.len() != self.num_actions {
            return Err(Error::Input(format!("strategy has {} actions, expected {}", s.len(), self.num_actions)));
        }
        let i = self.slot(h, x)?;
        self.entries[i] = Some(s);
        Ok(())
    }

    pub fn get(&self, h: usize, x: usize) -> Option<&MixedStrategy> {
        self.slot(h, x).ok().and_then(|i| self.entries[i].as_ref())
    }

    /// Like [`get`](Self::get) but a missing entry is an input error.
    pub fn require(&self, h: usize, x: usize) -> Result<&MixedStrategy> {
        self.get(h, x)
            .ok_or_else(|| Error::Input(format!("policy has no entry at (h={h}, x={x})")))
    }

    pub fn is_total(&self) -> bool {
        self.entries.iter().all(Option::is_some)
    }

    /// Whether every defined entry is a point mass.
    pub fn is_deterministic(&self) -> bool {
        self.entries.iter().flatten().all(|s| s.probs().contains(&1.0))
    }
}
