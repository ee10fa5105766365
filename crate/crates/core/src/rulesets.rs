//! Bundled knowledge bases.

/// Goal slots and the ordering tree with only their default rules.
pub const DEFAULT: &str = include_str!("../rulesets/default.frames");
/// Rules trained on the test city: scouting and dousing buildings, clearing
/// requested blockages, unburying humans, and non-scout goals before scouting.
pub const TEST_CITY: &str = include_str!("../rulesets/test_city.frames");
/// The test-city rules with a further road rule for blockages trapping civilians.
pub const KOBE: &str = include_str!("../rulesets/kobe.frames");
