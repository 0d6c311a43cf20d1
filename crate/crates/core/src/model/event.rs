use serde::{Deserialize, Serialize};

use super::Symbol;

/// A symmetric event on a finite prefix.
///
/// Events are evaluated on the observed prefix only: the count of a symbol is
/// the number of its occurrences among `x_1..x_n`, and coordinates beyond the
/// prefix are ignored. The exchangeable-event reading is the limit `n -> inf`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EventSpec {
    CountOfSymbolEquals { symbol: Symbol, count: usize },
    CountOfSymbolAtLeast { symbol: Symbol, count: usize },
}

impl EventSpec {
    pub fn symbol(&self) -> Symbol {
        match *self {
            EventSpec::CountOfSymbolEquals { symbol, .. } | EventSpec::CountOfSymbolAtLeast { symbol, .. } => symbol,
        }
    }

    /// Whether the event holds given the number of occurrences of its symbol.
    pub fn holds_for_count(&self, occurrences: usize) -> bool {
        match *self {
            EventSpec::CountOfSymbolEquals { count, .. } => occurrences == count,
            EventSpec::CountOfSymbolAtLeast { count, .. } => occurrences >= count,
        }
    }

    pub fn evaluate(&self, prefix: &[Symbol]) -> bool {
        let sym = self.symbol();
        self.holds_for_count(prefix.iter().filter(|&&x| x == sym).count())
    }
}
