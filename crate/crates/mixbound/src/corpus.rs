//! Bundled reference chains. The same files ship under `data/` so the CLI
//! examples can point at them.

use crate::chain::ChainSpec;
use crate::report::parse_chain_json;

/// Two states; the tight case where every method agrees on the rate 0.7.
pub const P2_JSON: &str = include_str!("../data/p2.json");

/// Three states with one-step and two-step coefficients exactly zero: only
/// the three-step blocks (or the operator route) see the mixing.
pub const C3_JSON: &str = include_str!("../data/c3.json");

/// Frozen random three-state chain witnessing
/// `r(V^(2)) != r(V^(1))^2`.
pub const WITNESS3_JSON: &str = include_str!("../data/witness3.json");

/// Two-block cyclic non-homogeneous pair.
pub const CYCLIC2_JSON: &str = include_str!("../data/cyclic2.json");

/// All rows equal: couples in a single step, every bound collapses to zero.
pub const INSTANT_JSON: &str = include_str!("../data/instant.json");

fn load(text: &str) -> ChainSpec {
    parse_chain_json(text).expect("bundled chain must parse")
}

pub fn p2() -> ChainSpec {
    load(P2_JSON)
}

pub fn c3() -> ChainSpec {
    load(C3_JSON)
}

pub fn witness3() -> ChainSpec {
    load(WITNESS3_JSON)
}

pub fn cyclic2() -> ChainSpec {
    load(CYCLIC2_JSON)
}

pub fn instant() -> ChainSpec {
    load(INSTANT_JSON)
}

/// Every bundled chain.
pub fn bundled() -> Vec<ChainSpec> {
    vec![p2(), c3(), witness3(), cyclic2(), instant()]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn corpus_parses() {
        let chains = bundled();
        assert_eq!(chains.len(), 5);
        let names: Vec<&str> = chains.iter().map(|c| c.name()).collect();
        assert_eq!(
            names,
            vec!["p2", "c3", "witness3", "cyclic2", "instant"]
        );
    }

    #[test]
    fn homogeneous_corpus_members_are_primitive() {
        for chain in [p2(), c3(), witness3(), instant()] {
            chain
                .m_step_kernel(0, 1)
                .unwrap()
                .check_primitive()
                .unwrap();
        }
    }
}
