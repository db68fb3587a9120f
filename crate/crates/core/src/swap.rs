//! Entanglement swapping between two GHZ triples.
//!
//! Particles of `|Ψ_g1⟩_{A1B1C1} ⊗ |Ψ_g2⟩_{A2B2C2}` are paired up as
//! (A1, A2), (B1, B2), (C1, C2) and each pair is measured in the Bell basis.
//! Exactly eight of the 64 possible outcome triples occur, each with
//! probability 1/8, and the set that occurs (the "collection") identifies the
//! relation between `g1` and `g2`.
//!
//! The collections and the `(g1, g2) → collection` table are derived from
//! state vectors on first use. Collection `C_m` is defined as the support of
//! swapping `|Ψ_0⟩` with `|Ψ_m⟩`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use serde::Serialize;

use crate::codebook::{ghz_state, string_serde, BellLabel, GhzLabel};
use crate::error::{LabelError, StateError};
use crate::published;
use crate::rng::StreamRng;
use crate::state::{MeasBasis, Outcome, StateVector, AMP_TOL};

/// Qubit pairs measured during swapping in a register laid out as
/// `A1 B1 C1 A2 B2 C2`. Measured in this order.
pub const SWAP_PAIRS: [[usize; 2]; 3] = [[0, 3], [1, 4], [2, 5]];

/// Bell outcomes on the (A1A2), (B1B2), (C1C2) pairs.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct BellTriple {
    pub a: BellLabel,
    pub b: BellLabel,
    pub c: BellLabel,
}

impl BellTriple {
    pub fn new(a: BellLabel, b: BellLabel, c: BellLabel) -> Self {
        Self { a, b, c }
    }

    /// Dense index in `0..64`, consistent with the derived ordering.
    pub fn code(self) -> usize {
        self.a.index() * 16 + self.b.index() * 4 + self.c.index()
    }

    pub fn from_code(code: usize) -> Self {
        let l = |i: usize| BellLabel::from_index(i).expect("index < 4");
        Self::new(l((code >> 4) & 3), l((code >> 2) & 3), l(code & 3))
    }

    pub fn all() -> impl Iterator<Item = BellTriple> {
        (0..64).map(Self::from_code)
    }

    fn sign_parity(self) -> bool {
        self.a.minus ^ self.b.minus ^ self.c.minus
    }

    fn flip_pattern(self) -> [bool; 3] {
        [self.a.flip, self.b.flip, self.c.flip]
    }
}

impl fmt::Display for BellTriple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {}", self.a, self.b, self.c)
    }
}

/// One of the eight outcome collections `C_0 … C_7`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CollectionLabel(u8);

impl CollectionLabel {
    pub const ALL: [CollectionLabel; 8] = [
        CollectionLabel(0),
        CollectionLabel(1),
        CollectionLabel(2),
        CollectionLabel(3),
        CollectionLabel(4),
        CollectionLabel(5),
        CollectionLabel(6),
        CollectionLabel(7),
    ];

    pub fn new(index: usize) -> Result<Self, LabelError> {
        if index < 8 {
            Ok(CollectionLabel(index as u8))
        } else {
            Err(LabelError::OutOfRange { kind: "collection", index })
        }
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }

    /// Oracle-derived member set, sorted.
    pub fn members(self) -> &'static [BellTriple] {
        &derived().members[self.index()]
    }
}

impl fmt::Display for CollectionLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "c{}", self.0)
    }
}

impl FromStr for CollectionLabel {
    type Err = LabelError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let lower = s.trim().to_ascii_lowercase();
        let digits = lower.strip_prefix('c').ok_or_else(|| LabelError::Parse {
            kind: "collection",
            input: s.to_string(),
        })?;
        let index: usize = digits.parse().map_err(|_| LabelError::Parse {
            kind: "collection",
            input: s.to_string(),
        })?;
        CollectionLabel::new(index)
    }
}

string_serde!(CollectionLabel);

/// Joint distribution of a swap, keyed by outcome triple; zero-probability
/// triples are omitted.
pub type SwapDistribution = BTreeMap<BellTriple, f64>;

fn bell_of(o: Outcome) -> BellLabel {
    match o {
        Outcome::Bell(l) => l,
        other => unreachable!("Bell measurement produced {other}"),
    }
}

/// Exact Bell-triple distribution for an arbitrary register given the qubit
/// indices of the three pairs.
pub fn bell_triple_distribution(
    state: &StateVector,
    pairs: [[usize; 2]; 3],
) -> Result<SwapDistribution, StateError> {
    let joint = state.joint_distribution(&[
        (MeasBasis::Bell, &pairs[0]),
        (MeasBasis::Bell, &pairs[1]),
        (MeasBasis::Bell, &pairs[2]),
    ])?;
    Ok(joint
        .into_iter()
        .map(|(os, p)| (BellTriple::new(bell_of(os[0]), bell_of(os[1]), bell_of(os[2])), p))
        .collect())
}

/// Samples the three Bell measurements in pair order.
pub fn measure_bell_triple(
    state: &StateVector,
    pairs: [[usize; 2]; 3],
    rng: &mut StreamRng,
) -> Result<(BellTriple, StateVector), StateError> {
    let (a, s) = state.measure(MeasBasis::Bell, &pairs[0], rng)?;
    let (b, s) = s.measure(MeasBasis::Bell, &pairs[1], rng)?;
    let (c, s) = s.measure(MeasBasis::Bell, &pairs[2], rng)?;
    Ok((BellTriple::new(bell_of(a), bell_of(b), bell_of(c)), s))
}

pub fn swap_distribution(g1: GhzLabel, g2: GhzLabel) -> SwapDistribution {
    let joint = ghz_state(g1)
        .tensor(&ghz_state(g2))
        .expect("six qubits fit the engine");
    bell_triple_distribution(&joint, SWAP_PAIRS).expect("valid pairs")
}

struct Derived {
    members: [Vec<BellTriple>; 8],
    /// Collection index of each triple code, `None` if in no collection.
    lookup: [Option<u8>; 64],
    /// Collection of each `(g1, g2)`, `None` if the support is not a collection.
    table: [[Option<u8>; 8]; 8],
}

fn derived() -> &'static Derived {
    static DERIVED: OnceLock<Derived> = OnceLock::new();
    DERIVED.get_or_init(|| {
        let members: [Vec<BellTriple>; 8] = std::array::from_fn(|m| {
            let g0 = GhzLabel::ALL[0];
            swap_distribution(g0, GhzLabel::ALL[m]).into_keys().collect()
        });
        let mut lookup = [None; 64];
        for (m, set) in members.iter().enumerate() {
            for t in set {
                lookup[t.code()] = Some(m as u8);
            }
        }
        let mut table = [[None; 8]; 8];
        for g1 in GhzLabel::ALL {
            for g2 in GhzLabel::ALL {
                let support: Vec<BellTriple> = swap_distribution(g1, g2).into_keys().collect();
                table[g1.index()][g2.index()] = members
                    .iter()
                    .position(|set| *set == support)
                    .map(|m| m as u8);
            }
        }
        Derived {
            members,
            lookup,
            table,
        }
    })
}

/// Collection containing `t`.
pub fn collection_of(t: BellTriple) -> CollectionLabel {
    let m = derived().lookup[t.code()].expect("the collections partition all 64 triples");
    CollectionLabel(m)
}

/// Collection produced by swapping `|Ψ_g1⟩` with `|Ψ_g2⟩`.
pub fn collection_table(g1: GhzLabel, g2: GhzLabel) -> CollectionLabel {
    let m = derived().table[g1.index()][g2.index()]
        .expect("every swap support is exactly one collection");
    CollectionLabel(m)
}

/// Printed member set of `C_m`.
pub fn printed_collection(m: CollectionLabel) -> BTreeSet<BellTriple> {
    let l = |i: u8| BellLabel::from_index(i as usize).expect("index < 4");
    published::COLLECTIONS[m.index()]
        .iter()
        .map(|t| BellTriple::new(l(t[0]), l(t[1]), l(t[2])))
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Table2Entry {
    pub g1: GhzLabel,
    pub g2: GhzLabel,
    /// Collection according to the printed table.
    pub expected: CollectionLabel,
    /// Collection whose derived member set equals the swap support.
    pub got: Option<CollectionLabel>,
    pub support: Vec<BellTriple>,
    /// Support equals the printed member set of `expected`.
    pub support_matches_printed: bool,
    /// Largest `|p − 1/8|` over the support.
    pub max_prob_deviation: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Table2Report {
    pub entries: Vec<Table2Entry>,
    pub matched: usize,
    pub mismatches: usize,
    /// Printed collections whose member set equals the derived one.
    pub printed_sets_matched: usize,
    pub collections_disjoint: bool,
    pub collections_cover_all_triples: bool,
    pub symmetric: bool,
    pub latin_square: bool,
    pub sign_parity_constant: bool,
    pub max_prob_deviation: f64,
}

impl Table2Report {
    pub fn passed(&self) -> bool {
        self.mismatches == 0
            && self.printed_sets_matched == 8
            && self.collections_disjoint
            && self.collections_cover_all_triples
            && self.symmetric
            && self.latin_square
            && self.sign_parity_constant
    }
}

pub fn verify_table2() -> Table2Report {
    let d = derived();
    let mut entries = Vec::with_capacity(64);
    let mut mismatches = 0;
    let mut worst = 0.0f64;
    for g1 in GhzLabel::ALL {
        for g2 in GhzLabel::ALL {
            let dist = swap_distribution(g1, g2);
            let expected = CollectionLabel(published::TABLE2[g1.index()][g2.index()]);
            let got = d.table[g1.index()][g2.index()].map(CollectionLabel);
            let support: Vec<BellTriple> = dist.keys().copied().collect();
            let support_set: BTreeSet<BellTriple> = support.iter().copied().collect();
            let support_matches_printed = support_set == printed_collection(expected);
            let dev = dist
                .values()
                .map(|p| (p - 0.125).abs())
                .fold(0.0f64, f64::max);
            worst = worst.max(dev);
            let ok = got == Some(expected)
                && support_matches_printed
                && support.len() == 8
                && dev <= AMP_TOL;
            if !ok {
                mismatches += 1;
            }
            entries.push(Table2Entry {
                g1,
                g2,
                expected,
                got,
                support,
                support_matches_printed,
                max_prob_deviation: dev,
            });
        }
    }

    let printed_sets_matched = CollectionLabel::ALL
        .iter()
        .filter(|&&m| {
            let derived_set: BTreeSet<BellTriple> = m.members().iter().copied().collect();
            derived_set == printed_collection(m)
        })
        .count();

    let total: usize = d.members.iter().map(Vec::len).sum();
    let union: BTreeSet<BellTriple> = d.members.iter().flatten().copied().collect();
    let collections_disjoint = total == union.len();
    let collections_cover_all_triples = union.len() == 64;

    let symmetric = GhzLabel::ALL.iter().all(|&i| {
        GhzLabel::ALL
            .iter()
            .all(|&j| d.table[i.index()][j.index()] == d.table[j.index()][i.index()])
    });
    let latin_square = (0..8).all(|i| {
        let row: BTreeSet<_> = (0..8).filter_map(|j| d.table[i][j]).collect();
        let col: BTreeSet<_> = (0..8).filter_map(|j| d.table[j][i]).collect();
        row.len() == 8 && col.len() == 8
    });
    let sign_parity_constant = d.members.iter().all(|set| {
        let parities: BTreeSet<bool> = set.iter().map(|t| t.sign_parity()).collect();
        let patterns: BTreeSet<[bool; 3]> = set.iter().map(|t| t.flip_pattern()).collect();
        let complementary = patterns.len() == 2 && {
            let v: Vec<_> = patterns.iter().collect();
            v[0].iter().zip(v[1]).all(|(x, y)| x != y)
        };
        parities.len() == 1 && complementary
    });

    Table2Report {
        matched: entries.len() - mismatches,
        entries,
        mismatches,
        printed_sets_matched,
        collections_disjoint,
        collections_cover_all_triples,
        symmetric,
        latin_square,
        sign_parity_constant,
        max_prob_deviation: worst,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g(i: usize) -> GhzLabel {
        GhzLabel::new(i).unwrap()
    }

    fn cl(i: usize) -> CollectionLabel {
        CollectionLabel::new(i).unwrap()
    }

    #[test]
    fn psi0_psi0_is_uniform_over_c0() {
        let d = swap_distribution(g(0), g(0));
        assert_eq!(d.len(), 8);
        assert!(d.values().all(|p| (p - 0.125).abs() < 1e-9));
        let support: BTreeSet<_> = d.keys().copied().collect();
        assert_eq!(support, printed_collection(cl(0)));
    }

    #[test]
    fn psi0_psi1_matches_c1() {
        let support: BTreeSet<_> = swap_distribution(g(0), g(1)).into_keys().collect();
        assert_eq!(support, printed_collection(cl(1)));
    }

    #[test]
    fn psi2_psi5_is_c7() {
        let support: BTreeSet<_> = swap_distribution(g(2), g(5)).into_keys().collect();
        assert_eq!(support, printed_collection(cl(7)));
        assert_eq!(collection_table(g(2), g(5)), cl(7));
    }

    #[test]
    fn collection_lookup_examples() {
        use BellLabel as B;
        let t = |a, b, c| BellTriple::new(a, b, c);
        assert_eq!(collection_of(t(B::PHI_PLUS, B::PHI_PLUS, B::PHI_PLUS)), cl(0));
        assert_eq!(collection_of(t(B::PSI_PLUS, B::PHI_PLUS, B::PHI_PLUS)), cl(2));
        assert_eq!(collection_of(t(B::PHI_MINUS, B::PHI_MINUS, B::PSI_MINUS)), cl(7));
    }

    #[test]
    fn table_examples() {
        assert_eq!(collection_table(g(0), g(0)), cl(0));
        assert_eq!(collection_table(g(7), g(4)), cl(3));
    }

    #[test]
    fn every_supported_triple_belongs_to_table_entry() {
        for g1 in GhzLabel::ALL {
            for g2 in GhzLabel::ALL {
                let m = collection_table(g1, g2);
                for t in swap_distribution(g1, g2).keys() {
                    assert_eq!(collection_of(*t), m);
                }
            }
        }
    }

    #[test]
    fn triple_code_round_trip_and_order() {
        let all: Vec<BellTriple> = BellTriple::all().collect();
        for (i, t) in all.iter().enumerate() {
            assert_eq!(t.code(), i);
            assert_eq!(BellTriple::from_code(i), *t);
        }
        let mut sorted = all.clone();
        sorted.sort();
        assert_eq!(sorted, all);
    }

    #[test]
    fn full_verification() {
        let r = verify_table2();
        assert_eq!(r.entries.len(), 64);
        assert_eq!(r.matched, 64);
        assert_eq!(r.printed_sets_matched, 8);
        assert!(r.max_prob_deviation <= 1e-9);
        assert!(r.passed(), "{r:?}");
    }

    #[test]
    fn sampled_triple_lands_in_table_collection() {
        let state = ghz_state(g(3)).tensor(&ghz_state(g(6))).unwrap();
        for t in 0..200 {
            let mut rng = StreamRng::new(11, t);
            let (triple, _) = measure_bell_triple(&state, SWAP_PAIRS, &mut rng).unwrap();
            assert_eq!(collection_of(triple), collection_table(g(3), g(6)));
        }
    }
}
