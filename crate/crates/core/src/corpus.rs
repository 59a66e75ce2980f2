//! Worked models bundled with the crate.

pub const ATM_FULL: &str = include_str!("../examples/atm_full.tm");
pub const ATM_SIMPLIFIED: &str = include_str!("../examples/atm_simplified.tm");
pub const DAVIDSON: &str = include_str!("../examples/davidson.tm");
pub const MUD: &str = include_str!("../examples/mud.tm");
pub const SHIPS: &str = include_str!("../examples/ships.tm");
pub const CAESAR_EVENT: &str = include_str!("../examples/caesar_event.tm");
pub const CAESAR_FACT: &str = include_str!("../examples/caesar_fact.tm");
pub const BROKEN: &str = include_str!("../examples/broken.tm");

/// Every model expected to validate cleanly, as (file name, source).
pub const VALID: [(&str, &str); 7] = [
    ("atm_full.tm", ATM_FULL),
    ("atm_simplified.tm", ATM_SIMPLIFIED),
    ("davidson.tm", DAVIDSON),
    ("mud.tm", MUD),
    ("ships.tm", SHIPS),
    ("caesar_event.tm", CAESAR_EVENT),
    ("caesar_fact.tm", CAESAR_FACT),
];
