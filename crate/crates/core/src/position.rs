//! Dewey positions: words over positive integers, ε being the empty word.

use std::fmt;

#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Position(Vec<u32>);

impl Position {
    pub fn root() -> Position {
        Position(Vec::new())
    }
    pub fn path(&self) -> &[u32] {
        &self.0
    }
    pub fn is_root(&self) -> bool {
        self.0.is_empty()
    }
    pub fn len(&self) -> usize {
        self.0.len()
    }
    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
    /// `self.k`
    pub fn child(&self, k: u32) -> Position {
        let mut v = self.0.clone();
        v.push(k);
        Position(v)
    }
    /// `self.other`
    pub fn concat(&self, other: &Position) -> Position {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        Position(v)
    }
    /// `k.self`
    pub fn prefixed(&self, k: u32) -> Position {
        let mut v = Vec::with_capacity(self.0.len() + 1);
        v.push(k);
        v.extend_from_slice(&self.0);
        Position(v)
    }
    /// `1^n`
    pub fn ones(n: usize) -> Position {
        Position(vec![1; n])
    }
    pub fn is_prefix_of(&self, other: &Position) -> bool {
        other.0.starts_with(&self.0)
    }
    /// Parse `ε` or a dot-separated word like `1.2.2`.
    pub fn parse(s: &str) -> Option<Position> {
        let s = s.trim();
        if s == "ε" || s.is_empty() {
            return Some(Position::root());
        }
        s.split('.')
            .map(|k| k.parse::<u32>().ok().filter(|&k| k > 0))
            .collect::<Option<Vec<_>>>()
            .map(Position)
    }
}

impl From<Vec<u32>> for Position {
    fn from(v: Vec<u32>) -> Position {
        Position(v)
    }
}

impl fmt::Display for Position {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "ε");
        }
        let parts: Vec<String> = self.0.iter().map(|k| k.to_string()).collect();
        write!(f, "{}", parts.join("."))
    }
}
