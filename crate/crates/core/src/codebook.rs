//! GHZ and Bell labels, the eight composite encoding operations, and the
//! GHZ-to-GHZ transformation table.
//!
//! The transformation table is derived once from state vectors: each
//! `U_k` is applied to the first two particles of every `|Ψ_p⟩` and the
//! result is classified back into the GHZ basis. The derivation also checks
//! whether the table equals bitwise XOR on indices; only when that holds for
//! all 64 entries does [`transform_label`] use XOR directly.

use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{LabelError, StateError};
use crate::published;
use crate::state::{c, SingleQubitOp, StateVector, AMP_TOL};

macro_rules! string_serde {
    ($t:ty) => {
        impl serde::Serialize for $t {
            fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
                s.collect_str(self)
            }
        }

        impl<'de> serde::Deserialize<'de> for $t {
            fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
                let s = <String as serde::Deserialize>::deserialize(d)?;
                s.parse().map_err(serde::de::Error::custom)
            }
        }
    };
}

pub(crate) use string_serde;

fn parse_indexed(input: &str, prefixes: &[&str], kind: &'static str) -> Result<u8, LabelError> {
    let err = || LabelError::Parse {
        kind,
        input: input.to_string(),
    };
    let lower = input.trim().to_ascii_lowercase();
    let digits = prefixes
        .iter()
        .find_map(|p| lower.strip_prefix(p))
        .ok_or_else(err)?;
    let index: usize = digits.parse().map_err(|_| err())?;
    if index >= 8 {
        return Err(LabelError::OutOfRange { kind, index });
    }
    Ok(index as u8)
}

/// One of the eight GHZ basis states `|Ψ_0⟩ … |Ψ_7⟩`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct GhzLabel(u8);

impl GhzLabel {
    pub const ALL: [GhzLabel; 8] = [
        GhzLabel(0),
        GhzLabel(1),
        GhzLabel(2),
        GhzLabel(3),
        GhzLabel(4),
        GhzLabel(5),
        GhzLabel(6),
        GhzLabel(7),
    ];

    pub fn new(index: usize) -> Result<Self, LabelError> {
        if index < 8 {
            Ok(GhzLabel(index as u8))
        } else {
            Err(LabelError::OutOfRange { kind: "GHZ label", index })
        }
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for GhzLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "psi{}", self.0)
    }
}

impl FromStr for GhzLabel {
    type Err = LabelError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_indexed(s, &["psi", "ψ"], "GHZ label").map(GhzLabel)
    }
}

string_serde!(GhzLabel);

/// A Bell state: `flip` selects Φ (false) or Ψ (true), `minus` the sign.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BellLabel {
    pub flip: bool,
    pub minus: bool,
}

impl BellLabel {
    pub const PHI_PLUS: BellLabel = BellLabel { flip: false, minus: false };
    pub const PHI_MINUS: BellLabel = BellLabel { flip: false, minus: true };
    pub const PSI_PLUS: BellLabel = BellLabel { flip: true, minus: false };
    pub const PSI_MINUS: BellLabel = BellLabel { flip: true, minus: true };
    pub const ALL: [BellLabel; 4] = [
        Self::PHI_PLUS,
        Self::PHI_MINUS,
        Self::PSI_PLUS,
        Self::PSI_MINUS,
    ];

    /// 0 = Φ+, 1 = Φ−, 2 = Ψ+, 3 = Ψ−.
    pub fn index(self) -> usize {
        usize::from(self.flip) * 2 + usize::from(self.minus)
    }

    pub fn from_index(index: usize) -> Result<Self, LabelError> {
        Self::ALL
            .get(index)
            .copied()
            .ok_or(LabelError::OutOfRange { kind: "Bell label", index })
    }
}

impl fmt::Display for BellLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let letter = if self.flip { "psi" } else { "phi" };
        let sign = if self.minus { '-' } else { '+' };
        write!(f, "{letter}{sign}")
    }
}

impl FromStr for BellLabel {
    type Err = LabelError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "phi+" => Ok(Self::PHI_PLUS),
            "phi-" => Ok(Self::PHI_MINUS),
            "psi+" => Ok(Self::PSI_PLUS),
            "psi-" => Ok(Self::PSI_MINUS),
            _ => Err(LabelError::Parse {
                kind: "Bell label",
                input: s.to_string(),
            }),
        }
    }
}

string_serde!(BellLabel);

/// Composite operation `U_k = first ⊗ second`, applied to the first and
/// second particles of a triple.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CompositeOp(u8);

const COMPOSITE_PARTS: [(SingleQubitOp, SingleQubitOp); 8] = {
    use SingleQubitOp::*;
    [
        (SZ, SZ),
        (I, SZ),
        (ISY, SZ),
        (SX, SZ),
        (I, SX),
        (SZ, SX),
        (SX, SX),
        (ISY, SX),
    ]
};

impl CompositeOp {
    pub const ALL: [CompositeOp; 8] = [
        CompositeOp(0),
        CompositeOp(1),
        CompositeOp(2),
        CompositeOp(3),
        CompositeOp(4),
        CompositeOp(5),
        CompositeOp(6),
        CompositeOp(7),
    ];

    pub fn new(index: usize) -> Result<Self, LabelError> {
        if index < 8 {
            Ok(CompositeOp(index as u8))
        } else {
            Err(LabelError::OutOfRange {
                kind: "composite operation",
                index,
            })
        }
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn first(self) -> SingleQubitOp {
        COMPOSITE_PARTS[self.index()].0
    }

    pub fn second(self) -> SingleQubitOp {
        COMPOSITE_PARTS[self.index()].1
    }
}

impl fmt::Display for CompositeOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "U{}", self.0)
    }
}

impl FromStr for CompositeOp {
    type Err = LabelError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_indexed(s, &["u"], "composite operation").map(CompositeOp)
    }
}

string_serde!(CompositeOp);

/// Three message bits `(b2, b1, b0)`, most significant first.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MessageTriple(u8);

impl MessageTriple {
    pub fn new(b2: bool, b1: bool, b0: bool) -> Self {
        MessageTriple(u8::from(b2) << 2 | u8::from(b1) << 1 | u8::from(b0))
    }

    pub fn from_value(value: u8) -> Result<Self, LabelError> {
        if value < 8 {
            Ok(MessageTriple(value))
        } else {
            Err(LabelError::OutOfRange {
                kind: "message triple",
                index: value as usize,
            })
        }
    }

    pub fn value(self) -> u8 {
        self.0
    }

    pub fn bits(self) -> [bool; 3] {
        [self.0 & 4 != 0, self.0 & 2 != 0, self.0 & 1 != 0]
    }

    pub fn all() -> impl Iterator<Item = MessageTriple> {
        (0..8).map(MessageTriple)
    }
}

impl fmt::Display for MessageTriple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:03b}", self.0)
    }
}

impl FromStr for MessageTriple {
    type Err = LabelError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || LabelError::Parse {
            kind: "message triple",
            input: s.to_string(),
        };
        if s.len() != 3 || !s.chars().all(|ch| ch == '0' || ch == '1') {
            return Err(err());
        }
        u8::from_str_radix(s, 2).map(MessageTriple).map_err(|_| err())
    }
}

string_serde!(MessageTriple);

/// Splits a bit string whose length is a multiple of three into triples.
pub fn parse_message_bits(bits: &str) -> Result<Vec<MessageTriple>, LabelError> {
    let bits = bits.trim();
    if bits.len() % 3 != 0 || !bits.chars().all(|ch| ch == '0' || ch == '1') {
        return Err(LabelError::Parse {
            kind: "message bit string",
            input: bits.to_string(),
        });
    }
    bits.as_bytes()
        .chunks(3)
        .map(|chunk| std::str::from_utf8(chunk).expect("ascii").parse())
        .collect()
}

pub fn format_message_bits(messages: &[MessageTriple]) -> String {
    messages.iter().map(ToString::to_string).collect()
}

pub fn message_to_op(m: MessageTriple) -> CompositeOp {
    CompositeOp(m.0)
}

pub fn op_to_message(k: CompositeOp) -> MessageTriple {
    MessageTriple(k.0)
}

/// Kets of each GHZ state: (first ket, second ket, relative sign is minus).
const GHZ_KETS: [(usize, usize, bool); 8] = [
    (0b000, 0b111, false),
    (0b000, 0b111, true),
    (0b100, 0b011, false),
    (0b100, 0b011, true),
    (0b010, 0b101, false),
    (0b010, 0b101, true),
    (0b110, 0b001, false),
    (0b110, 0b001, true),
];

pub fn ghz_state(label: GhzLabel) -> StateVector {
    let (first, second, minus) = GHZ_KETS[label.index()];
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let mut amps = [0.0; 8];
    amps[first] = h;
    amps[second] = if minus { -h } else { h };
    StateVector::from_real(&amps).expect("GHZ states are normalized")
}

pub fn bell_state(label: BellLabel) -> StateVector {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let s = if label.minus { -h } else { h };
    let amps = if label.flip {
        [0.0, h, s, 0.0]
    } else {
        [h, 0.0, 0.0, s]
    };
    StateVector::from_real(&amps).expect("Bell states are normalized")
}

/// Applies `U_k`: the first factor on `q1`, the second on `q2`.
pub fn apply_composite(
    s: &StateVector,
    k: CompositeOp,
    q1: usize,
    q2: usize,
) -> Result<StateVector, StateError> {
    if q1 == q2 {
        return Err(StateError::DuplicateQubit(q1));
    }
    s.apply_single(k.first(), q1)?.apply_single(k.second(), q2)
}

/// Identifies a 3-qubit state as `phase · |Ψ_t⟩`, if it is one.
pub fn classify_ghz(s: &StateVector) -> Option<(GhzLabel, Complex64)> {
    if s.num_qubits() != 3 {
        return None;
    }
    GhzLabel::ALL.iter().find_map(|&t| {
        let overlap = ghz_state(t).inner(s).ok()?;
        (overlap.norm() > 1.0 - AMP_TOL).then(|| (t, overlap / overlap.norm()))
    })
}

struct TransformTable {
    result: [[GhzLabel; 8]; 8],
    phase: [[Complex64; 8]; 8],
    xor_certified: bool,
}

fn oracle_transform(p: GhzLabel, k: CompositeOp) -> Option<(GhzLabel, Complex64)> {
    let out = apply_composite(&ghz_state(p), k, 0, 1).ok()?;
    classify_ghz(&out)
}

fn transform_table() -> &'static TransformTable {
    static TABLE: OnceLock<TransformTable> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut result = [[GhzLabel(0); 8]; 8];
        let mut phase = [[c(1.0); 8]; 8];
        let mut xor_certified = true;
        for p in GhzLabel::ALL {
            for k in CompositeOp::ALL {
                let (t, ph) = oracle_transform(p, k)
                    .expect("composite operations map GHZ states onto GHZ states");
                result[p.index()][k.index()] = t;
                phase[p.index()][k.index()] = ph;
                xor_certified &= t.0 == p.0 ^ k.0;
            }
        }
        TransformTable {
            result,
            phase,
            xor_certified,
        }
    })
}

/// True once the derived table has been certified equal to index XOR.
pub fn xor_closed_form_certified() -> bool {
    transform_table().xor_certified
}

/// Label reached from `initial` after `U_k` on its first and second particles.
pub fn transform_label(initial: GhzLabel, k: CompositeOp) -> GhzLabel {
    let table = transform_table();
    if table.xor_certified {
        GhzLabel(initial.0 ^ k.0)
    } else {
        table.result[initial.index()][k.index()]
    }
}

/// Global phase picked up by `U_k |Ψ_initial⟩` relative to the target state.
pub fn transform_phase(initial: GhzLabel, k: CompositeOp) -> Complex64 {
    transform_table().phase[initial.index()][k.index()]
}

/// The unique `U_k` with `transform_label(initial, k) == result`.
pub fn invert_transform(initial: GhzLabel, result: GhzLabel) -> CompositeOp {
    CompositeOp::ALL
        .into_iter()
        .find(|&k| transform_label(initial, k) == result)
        .expect("every row of the transform table is a permutation")
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Table1Entry {
    pub initial: GhzLabel,
    pub op: CompositeOp,
    /// Result according to the printed table.
    pub expected: GhzLabel,
    /// Result according to the state-vector computation.
    pub got: Option<GhzLabel>,
    /// Real part of the global phase; `U_k` only ever produces ±1.
    pub phase: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Table1Report {
    pub entries: Vec<Table1Entry>,
    pub mismatches: usize,
    pub matched: usize,
    pub rows_are_permutations: bool,
    pub columns_are_permutations: bool,
    /// Cases of `(p, k, l)` where applying `U_k` then `U_l` disagrees with the
    /// brute-forced label composition.
    pub composition_failures: usize,
    pub xor_closed_form: bool,
}

impl Table1Report {
    pub fn passed(&self) -> bool {
        self.mismatches == 0
            && self.rows_are_permutations
            && self.columns_are_permutations
            && self.composition_failures == 0
    }
}

fn printed_table1_result(initial: GhzLabel, k: CompositeOp) -> GhzLabel {
    let row = &published::TABLE1[initial.index()];
    let q = row
        .iter()
        .position(|&x| x as usize == k.index())
        .expect("printed rows contain every operation");
    GhzLabel(q as u8)
}

/// Brute-forces the label-level composition of two operations: the `m` with
/// `U_l U_k |Ψ_0⟩ ∝ U_m |Ψ_0⟩`.
pub fn compose_ops(k: CompositeOp, l: CompositeOp) -> Option<CompositeOp> {
    let p = GhzLabel(0);
    let twice = apply_composite(&apply_composite(&ghz_state(p), k, 0, 1).ok()?, l, 0, 1).ok()?;
    let (t, _) = classify_ghz(&twice)?;
    Some(invert_transform(p, t))
}

/// Compares the printed table, the served table and the state-vector oracle
/// on all 64 entries, and checks the permutation and composition structure.
pub fn verify_table1() -> Table1Report {
    let mut entries = Vec::with_capacity(64);
    let mut mismatches = 0;
    for p in GhzLabel::ALL {
        for k in CompositeOp::ALL {
            let expected = printed_table1_result(p, k);
            let oracle = oracle_transform(p, k);
            let got = oracle.map(|(t, _)| t);
            let phase = oracle.map(|(_, ph)| ph).unwrap_or(c(0.0));
            let phase_ok = phase.im.abs() < AMP_TOL && (phase.re.abs() - 1.0).abs() < AMP_TOL;
            if got != Some(expected) || transform_label(p, k) != expected || !phase_ok {
                mismatches += 1;
            }
            entries.push(Table1Entry {
                initial: p,
                op: k,
                expected,
                got,
                phase: phase.re,
            });
        }
    }
    let is_perm = |xs: [usize; 8]| {
        let mut seen = [false; 8];
        xs.iter().for_each(|&x| seen[x] = true);
        seen.iter().all(|&s| s)
    };
    let rows_are_permutations = GhzLabel::ALL
        .iter()
        .all(|&p| is_perm(CompositeOp::ALL.map(|k| transform_label(p, k).index())));
    let columns_are_permutations = CompositeOp::ALL
        .iter()
        .all(|&k| is_perm(GhzLabel::ALL.map(|p| transform_label(p, k).index())));

    let mut composition_failures = 0;
    for k in CompositeOp::ALL {
        for l in CompositeOp::ALL {
            let m = compose_ops(k, l);
            for p in GhzLabel::ALL {
                let direct = apply_composite(&ghz_state(p), k, 0, 1)
                    .and_then(|s| apply_composite(&s, l, 0, 1))
                    .ok()
                    .and_then(|s| classify_ghz(&s))
                    .map(|(t, _)| t);
                let via_labels = m.map(|m| transform_label(p, m));
                let chained = transform_label(transform_label(p, k), l);
                if direct.is_none() || direct != via_labels || Some(chained) != via_labels {
                    composition_failures += 1;
                }
            }
        }
    }

    Table1Report {
        matched: entries.len() - mismatches,
        entries,
        mismatches,
        rows_are_permutations,
        columns_are_permutations,
        composition_failures,
        xor_closed_form: xor_closed_form_certified(),
    }
}
