//! Agents and coalitions as bitmasks.

use std::fmt;

/// Upper bound on the number of agents; a coalition fits in one byte.
pub const MAX_AGENTS: usize = 8;

pub type AgentId = usize;

/// A set of agents, stored as a bitmask over agent indices.
#[derive(Copy, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Coalition(pub u8);

impl Coalition {
    pub const EMPTY: Coalition = Coalition(0);

    pub fn singleton(a: AgentId) -> Self {
        assert!(a < MAX_AGENTS, "agent index out of range");
        Coalition(1 << a)
    }

    /// The grand coalition of `n` agents.
    pub fn full(n: usize) -> Self {
        assert!(n <= MAX_AGENTS, "too many agents");
        if n == MAX_AGENTS {
            Coalition(u8::MAX)
        } else {
            Coalition(((1u16 << n) - 1) as u8)
        }
    }

    pub fn from_agents<I: IntoIterator<Item = AgentId>>(it: I) -> Self {
        it.into_iter()
            .fold(Coalition::EMPTY, |c, a| c.union(Coalition::singleton(a)))
    }

    pub fn mask(self) -> u8 {
        self.0
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn contains(self, a: AgentId) -> bool {
        a < MAX_AGENTS && self.0 & (1 << a) != 0
    }

    pub fn is_subset(self, other: Coalition) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn is_proper_subset(self, other: Coalition) -> bool {
        self.is_subset(other) && self != other
    }

    pub fn union(self, other: Coalition) -> Self {
        Coalition(self.0 | other.0)
    }

    pub fn intersection(self, other: Coalition) -> Self {
        Coalition(self.0 & other.0)
    }

    pub fn minus(self, other: Coalition) -> Self {
        Coalition(self.0 & !other.0)
    }

    pub fn with(self, a: AgentId) -> Self {
        self.union(Coalition::singleton(a))
    }

    pub fn without(self, a: AgentId) -> Self {
        self.minus(Coalition::singleton(a))
    }

    /// Agents in increasing order.
    pub fn agents(self) -> impl Iterator<Item = AgentId> {
        (0..MAX_AGENTS).filter(move |&a| self.contains(a))
    }

    /// All coalitions over `n` agents, in mask order.
    pub fn all(n: usize) -> impl Iterator<Item = Coalition> {
        (0..(1usize << n)).map(|m| Coalition(m as u8))
    }

    /// All supersets of `self` within the grand coalition of `n` agents.
    pub fn supersets(self, n: usize) -> impl Iterator<Item = Coalition> {
        Coalition::all(n).filter(move |b| self.is_subset(*b))
    }

    /// All subsets of `self`.
    pub fn subsets(self) -> impl Iterator<Item = Coalition> {
        Coalition::all(MAX_AGENTS).filter(move |b| b.is_subset(self))
    }

    /// Comma-separated agent names.
    pub fn names(self, agents: &[String]) -> String {
        self.agents()
            .map(|a| agents.get(a).cloned().unwrap_or_else(|| format!("#{a}")))
            .collect::<Vec<_>>()
            .join(",")
    }
}

/// Serialised as the sorted list of agent indices.
impl serde::Serialize for Coalition {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(self.agents())
    }
}

impl fmt::Debug for Coalition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, a) in self.agents().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{a}")?;
        }
        write!(f, "}}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn set_algebra() {
        let ab = Coalition::from_agents([0, 1]);
        let b = Coalition::singleton(1);
        assert!(b.is_subset(ab));
        assert!(b.is_proper_subset(ab));
        assert_eq!(ab.minus(b), Coalition::singleton(0));
        assert_eq!(ab.len(), 2);
        assert_eq!(Coalition::full(3).0, 0b111);
        assert_eq!(Coalition::full(8).0, 0xff);
        assert_eq!(Coalition::all(2).count(), 4);
        assert_eq!(b.supersets(2).collect::<Vec<_>>(), vec![b, ab]);
        assert_eq!(ab.subsets().count(), 4);
    }

    #[test]
    fn names() {
        let agents = vec!["a".to_string(), "b".to_string()];
        assert_eq!(Coalition::full(2).names(&agents), "a,b");
        assert_eq!(Coalition::EMPTY.names(&agents), "");
    }
}
