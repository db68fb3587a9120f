//! The seven-step bidirectional session.
//!
//! Each group `n` consists of two GHZ triples prepared in the same random
//! state `|Ψ_p⟩`: the odd triple `(A_{2n−1}, B_{2n−1}, C_{2n−1})` carries
//! Alice's encoding and the even triple `(A_{2n}, B_{2n}, C_{2n})` is the
//! shared secret state Bob measures, re-prepares and encodes on. After both
//! encodings Bob swaps entanglement across the two triples and announces
//! which outcome collection he saw; each side then recovers the other's
//! operation from the announcement, its own operation and the initial state.
//!
//! The three particle sequences travel in three hops (S′_C, then S″_B, then
//! S″_A), each guarded by decoys and followed by an eavesdropping check.
//!
//! Independent triples and decoys live in separate registers. A register is
//! a [`StateVector`] whose first qubits are the A, B, C particles of a triple
//! (or the single decoy particle); an eavesdropper's ancilla, if any, is
//! appended after them and never measured by the honest parties.

use std::fmt;
use std::str::FromStr;

use rand::seq::index;
use serde::Serialize;

use crate::adversary::{apply_attack, AttackConfig, Transmission};
use crate::codebook::{
    apply_composite, format_message_bits, ghz_state, invert_transform, message_to_op,
    op_to_message, string_serde, transform_label, CompositeOp, GhzLabel, MessageTriple,
};
use crate::error::{LabelError, ProtocolError, StateError};
use crate::rng::{StreamRng, ADVERSARY_STREAM, PROTOCOL_STREAM};
use crate::state::{hadamard, MeasBasis, Outcome, Sign, StateVector, PROB_EPS};
use crate::swap::{collection_of, collection_table, measure_bell_triple, BellTriple, CollectionLabel};

/// Message bits exchanged per group, three in each direction.
pub const CAPACITY_BITS_PER_GROUP: usize = 6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Role {
    A,
    B,
    C,
}

impl Role {
    /// Qubit index of this particle inside a triple register.
    pub fn qubit(self) -> usize {
        match self {
            Role::A => 0,
            Role::B => 1,
            Role::C => 2,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Slot {
    /// Position `2n − 1`: Alice's encoding triple.
    Odd,
    /// Position `2n`: the shared secret triple.
    Even,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct ParticleRole {
    pub role: Role,
    pub slot: Slot,
    /// 1-based group index.
    pub group: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SequenceEntry {
    /// Data particle of group `group` (0-based).
    Data { group: usize, slot: Slot },
    /// Particle of the Step-1 GHZ sample with this index.
    Sample(usize),
    /// Single-particle decoy with this index (per-sequence numbering).
    Decoy(usize),
}

impl SequenceEntry {
    pub fn is_data(self) -> bool {
        matches!(self, SequenceEntry::Data { .. })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ParticleSequence {
    pub role: Role,
    pub entries: Vec<SequenceEntry>,
}

impl ParticleSequence {
    fn ordered(role: Role, groups: usize) -> Self {
        let entries = (0..groups)
            .flat_map(|g| {
                [
                    SequenceEntry::Data { group: g, slot: Slot::Odd },
                    SequenceEntry::Data { group: g, slot: Slot::Even },
                ]
            })
            .collect();
        Self { role, entries }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Indices of non-data entries.
    pub fn check_positions(&self) -> Vec<usize> {
        (0..self.entries.len())
            .filter(|&i| !self.entries[i].is_data())
            .collect()
    }

    /// The sequence with all sample and decoy entries removed.
    pub fn without_checks(&self) -> ParticleSequence {
        ParticleSequence {
            role: self.role,
            entries: self.entries.iter().copied().filter(|e| e.is_data()).collect(),
        }
    }

    /// Role of each data particle in order.
    pub fn data_roles(&self) -> Vec<ParticleRole> {
        self.entries
            .iter()
            .filter_map(|e| match *e {
                SequenceEntry::Data { group, slot } => Some(ParticleRole {
                    role: self.role,
                    slot,
                    group: group + 1,
                }),
                _ => None,
            })
            .collect()
    }

    /// Inserts `extra` at the given sorted final positions.
    fn with_inserted(&self, positions: &[usize], extra: impl Fn(usize) -> SequenceEntry) -> Self {
        let total = self.entries.len() + positions.len();
        let mut out = Vec::with_capacity(total);
        let mut data = self.entries.iter().copied();
        let mut next = 0;
        for i in 0..total {
            if positions.get(next) == Some(&i) {
                out.push(extra(next));
                next += 1;
            } else {
                out.push(data.next().expect("position count matches"));
            }
        }
        Self {
            role: self.role,
            entries: out,
        }
    }
}

fn random_positions(total: usize, count: usize, rng: &mut StreamRng) -> Vec<usize> {
    let mut v = index::sample(rng, total, count).into_vec();
    v.sort_unstable();
    v
}

/// Basis of an eavesdropping-check measurement.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum CheckBasis {
    Z,
    X,
}

impl CheckBasis {
    pub fn meas(self) -> MeasBasis {
        match self {
            CheckBasis::Z => MeasBasis::Z,
            CheckBasis::X => MeasBasis::X,
        }
    }

    pub fn random(rng: &mut StreamRng) -> Self {
        if rng.coin() {
            CheckBasis::X
        } else {
            CheckBasis::Z
        }
    }
}

impl fmt::Display for CheckBasis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CheckBasis::Z => "Z",
            CheckBasis::X => "X",
        })
    }
}

impl FromStr for CheckBasis {
    type Err = LabelError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "z" | "Z" => Ok(CheckBasis::Z),
            "x" | "X" => Ok(CheckBasis::X),
            _ => Err(LabelError::Parse {
                kind: "basis",
                input: s.to_string(),
            }),
        }
    }
}

/// The four single-particle decoy states.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SingleState {
    Zero,
    One,
    Plus,
    Minus,
}

impl SingleState {
    pub const ALL: [SingleState; 4] = [Self::Zero, Self::One, Self::Plus, Self::Minus];

    pub fn basis(self) -> CheckBasis {
        match self {
            Self::Zero | Self::One => CheckBasis::Z,
            Self::Plus | Self::Minus => CheckBasis::X,
        }
    }

    /// Outcome a faithful measurement in [`basis`](Self::basis) must return.
    pub fn eigen_outcome(self) -> Outcome {
        match self {
            Self::Zero => Outcome::Bit(0),
            Self::One => Outcome::Bit(1),
            Self::Plus => Outcome::Sign(Sign::Plus),
            Self::Minus => Outcome::Sign(Sign::Minus),
        }
    }

    pub fn state(self) -> StateVector {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let amps = match self {
            Self::Zero => [1.0, 0.0],
            Self::One => [0.0, 1.0],
            Self::Plus => [h, h],
            Self::Minus => [h, -h],
        };
        StateVector::from_real(&amps).expect("normalized")
    }

    /// Rewrites qubit `q`, known to be `|0⟩`, into this state.
    pub(crate) fn prepare_from_zero(self, s: &StateVector, q: usize) -> Result<StateVector, StateError> {
        use crate::state::SingleQubitOp::SX;
        match self {
            Self::Zero => Ok(s.clone()),
            Self::One => s.apply_single(SX, q),
            Self::Plus => s.apply_matrix(&hadamard(), q),
            Self::Minus => s.apply_single(SX, q)?.apply_matrix(&hadamard(), q),
        }
    }

    pub fn random(rng: &mut StreamRng) -> Self {
        Self::ALL[rng.below(4)]
    }
}

impl fmt::Display for SingleState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Zero => "0",
            Self::One => "1",
            Self::Plus => "+",
            Self::Minus => "-",
        })
    }
}

impl FromStr for SingleState {
    type Err = LabelError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "0" => Ok(Self::Zero),
            "1" => Ok(Self::One),
            "+" | "plus" => Ok(Self::Plus),
            "-" | "minus" => Ok(Self::Minus),
            _ => Err(LabelError::Parse {
                kind: "single-particle state",
                input: s.to_string(),
            }),
        }
    }
}

string_serde!(SingleState);

/// Result of checking one Step-1 GHZ sample.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleCheck {
    pub basis: CheckBasis,
    /// Outcomes on (A, B, C).
    pub outcomes: [Outcome; 3],
    pub consistent: bool,
}

/// Bob measures C in `basis`, then Alice measures A and B in the same basis.
/// The joint outcome is an error iff it has zero probability for the sample's
/// genuine GHZ state.
pub fn ghz_sample_check(
    label: GhzLabel,
    register: &StateVector,
    basis: CheckBasis,
    rng: &mut StreamRng,
) -> Result<SampleCheck, StateError> {
    let mb = basis.meas();
    let (oc, s) = register.measure(mb, &[Role::C.qubit()], rng)?;
    let (oa, s) = s.measure(mb, &[Role::A.qubit()], rng)?;
    let (ob, _) = s.measure(mb, &[Role::B.qubit()], rng)?;
    let outcomes = [oa, ob, oc];
    Ok(SampleCheck {
        basis,
        outcomes,
        consistent: genuine_probability(label, basis, outcomes)? > PROB_EPS,
    })
}

/// Probability of a joint (A, B, C) outcome for an untouched `|Ψ_label⟩`.
pub fn genuine_probability(
    label: GhzLabel,
    basis: CheckBasis,
    outcomes: [Outcome; 3],
) -> Result<f64, StateError> {
    let mb = basis.meas();
    let mut s = ghz_state(label);
    let mut p = 1.0;
    for (q, o) in outcomes.into_iter().enumerate() {
        let (pq, post) = s.collapse_onto(mb, &[q], o)?;
        p *= pq;
        match post {
            Some(next) => s = next,
            None => return Ok(0.0),
        }
    }
    Ok(p)
}

#[derive(Clone, Debug, PartialEq)]
pub struct DecoyCheck {
    pub prepared: SingleState,
    pub outcome: Outcome,
    pub consistent: bool,
}

/// Bob measures a decoy (qubit 0 of its register) in its preparation basis.
pub fn decoy_check(
    prepared: SingleState,
    register: &StateVector,
    rng: &mut StreamRng,
) -> Result<DecoyCheck, StateError> {
    let (outcome, _) = register.measure(prepared.basis().meas(), &[0], rng)?;
    Ok(DecoyCheck {
        prepared,
        outcome,
        consistent: outcome == prepared.eigen_outcome(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct DecoyCounts {
    pub step1: usize,
    pub step3: usize,
    pub step5: usize,
}

impl DecoyCounts {
    pub fn uniform(count: usize) -> Self {
        Self {
            step1: count,
            step3: count,
            step5: count,
        }
    }

    /// 16 per check for up to 16 groups, otherwise one per group.
    pub fn default_for(groups: usize) -> Self {
        Self::uniform(if groups <= 16 { 16 } else { groups })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SessionConfig {
    pub groups: usize,
    pub decoys: DecoyCounts,
    pub seed: u64,
    /// Sessions with different `stream` values draw independent randomness
    /// from the same seed.
    pub stream: u64,
    pub attack: Option<AttackConfig>,
    /// Largest tolerated error rate per check; a check aborts above it.
    pub check_threshold: f64,
    /// Forces every group's initial state instead of drawing it.
    pub initial: Option<GhzLabel>,
}

impl SessionConfig {
    pub fn new(groups: usize, seed: u64) -> Self {
        Self {
            groups,
            decoys: DecoyCounts::default_for(groups),
            seed,
            stream: 0,
            attack: None,
            check_threshold: 0.0,
            initial: None,
        }
    }

    pub fn validate(&self) -> Result<(), ProtocolError> {
        if self.groups == 0 {
            return Err(ProtocolError::InvalidConfig("at least one group is required".into()));
        }
        if !(0.0..1.0).contains(&self.check_threshold) {
            return Err(ProtocolError::InvalidConfig(format!(
                "check threshold {} outside [0, 1)",
                self.check_threshold
            )));
        }
        if let Some(attack) = &self.attack {
            attack
                .validate()
                .map_err(|e| ProtocolError::InvalidConfig(e.to_string()))?;
        }
        Ok(())
    }
}

/// Messages drawn from a stream reserved for message generation, so they do
/// not perturb the session's own randomness.
pub fn random_messages(count: usize, seed: u64, stream: u64) -> Vec<MessageTriple> {
    let mut rng = StreamRng::new(seed, u64::MAX - stream);
    (0..count)
        .map(|_| MessageTriple::from_value(rng.below(8) as u8).expect("below 8"))
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckRecord {
    /// Index in the transmitted sequence.
    pub position: usize,
    /// GHZ label of a sample, or the decoy state.
    pub prepared: String,
    pub basis: CheckBasis,
    /// Outcomes as measured, space separated (A B C for samples).
    pub outcome: String,
    pub consistent: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckResult {
    pub step: u8,
    pub samples: usize,
    pub errors: usize,
    pub error_rate: f64,
    pub aborted: bool,
    pub records: Vec<CheckRecord>,
}

impl CheckResult {
    fn from_records(step: u8, records: Vec<CheckRecord>, threshold: f64) -> Self {
        let samples = records.len();
        let errors = records.iter().filter(|r| !r.consistent).count();
        let error_rate = if samples == 0 {
            0.0
        } else {
            errors as f64 / samples as f64
        };
        Self {
            step,
            samples,
            errors,
            error_rate,
            aborted: error_rate > threshold,
            records,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GroupRecord {
    /// 1-based group number.
    pub n: usize,
    pub prepared_label: GhzLabel,
    pub a_op: Option<CompositeOp>,
    pub p_label: Option<GhzLabel>,
    pub b_op: Option<CompositeOp>,
    pub bell_triple: Option<BellTriple>,
    pub announcement: Option<CollectionLabel>,
    /// Bob's message as recovered by Alice.
    pub decoded_by_alice: Option<MessageTriple>,
    /// Alice's message as recovered by Bob.
    pub decoded_by_bob: Option<MessageTriple>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Abort {
    pub step: u8,
    pub error_rate: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SessionTranscript {
    pub config: SessionConfig,
    pub groups: Vec<GroupRecord>,
    pub checks: Vec<CheckResult>,
    pub abort: Option<Abort>,
}

impl SessionTranscript {
    pub fn aborted(&self) -> bool {
        self.abort.is_some()
    }

    /// Bob's bits as Alice decoded them, if the session completed.
    pub fn bits_decoded_by_alice(&self) -> Option<String> {
        let m: Option<Vec<_>> = self.groups.iter().map(|g| g.decoded_by_alice).collect();
        m.map(|m| format_message_bits(&m))
    }

    /// Alice's bits as Bob decoded them, if the session completed.
    pub fn bits_decoded_by_bob(&self) -> Option<String> {
        let m: Option<Vec<_>> = self.groups.iter().map(|g| g.decoded_by_bob).collect();
        m.map(|m| format_message_bits(&m))
    }

    pub fn exchanged_bits(&self) -> usize {
        if self.aborted() {
            0
        } else {
            self.groups.len() * CAPACITY_BITS_PER_GROUP
        }
    }

    pub fn check(&self, step: u8) -> Option<&CheckResult> {
        self.checks.iter().find(|c| c.step == step)
    }
}

/// Collection announced for initial state `p` when Alice applies `a` and Bob
/// applies `b`, computed on labels.
pub fn announced_collection(p: GhzLabel, a: CompositeOp, b: CompositeOp) -> CollectionLabel {
    collection_table(transform_label(p, a), transform_label(p, b))
}

/// The unique label `g` with `table(g) == m`, if exactly one exists.
fn solve_partner(m: CollectionLabel, table: impl Fn(GhzLabel) -> CollectionLabel) -> Option<GhzLabel> {
    let mut hits = GhzLabel::ALL.into_iter().filter(|&g| table(g) == m);
    let first = hits.next()?;
    hits.next().is_none().then_some(first)
}

fn decode_with(
    group: usize,
    initial: GhzLabel,
    own: CompositeOp,
    m: CollectionLabel,
    table: impl Fn(GhzLabel, GhzLabel) -> CollectionLabel,
    own_is_first: bool,
) -> Result<MessageTriple, ProtocolError> {
    let own_state = transform_label(initial, own);
    let partner = solve_partner(m, |g| {
        if own_is_first {
            table(own_state, g)
        } else {
            table(g, own_state)
        }
    })
    .ok_or_else(|| ProtocolError::InconsistentAnnouncement {
        group,
        announcement: m.to_string(),
    })?;
    Ok(op_to_message(invert_transform(initial, partner)))
}

/// Alice recovers Bob's message from her prepared label, her own operation
/// and the announcement.
pub fn alice_decode_group(
    initial: GhzLabel,
    a: CompositeOp,
    m: CollectionLabel,
) -> Result<MessageTriple, ProtocolError> {
    decode_with(0, initial, a, m, collection_table, true)
}

/// Bob recovers Alice's message from his measured label, his own operation and
/// the announcement.
pub fn bob_decode_group(
    measured: GhzLabel,
    b: CompositeOp,
    m: CollectionLabel,
) -> Result<MessageTriple, ProtocolError> {
    decode_with(0, measured, b, m, collection_table, false)
}

#[derive(Clone, Debug)]
struct Decoy {
    state: SingleState,
    register: StateVector,
}

/// A session in progress. Methods must be called in protocol order:
/// [`prepare`](Self::prepare), [`check1`](Self::check1),
/// [`alice_encode`](Self::alice_encode), [`check2`](Self::check2),
/// [`check3`](Self::check3), [`bob_encode`](Self::bob_encode),
/// [`swap_and_announce`](Self::swap_and_announce), then the two decoders.
#[derive(Clone, Debug)]
pub struct Session {
    cfg: SessionConfig,
    rng: StreamRng,
    eve_rng: StreamRng,
    odd: Vec<StateVector>,
    even: Vec<StateVector>,
    samples: Vec<(GhzLabel, StateVector)>,
    decoys_b: Vec<Decoy>,
    decoys_a: Vec<Decoy>,
    s_a: ParticleSequence,
    s_b: ParticleSequence,
    s_c: ParticleSequence,
    transcript: SessionTranscript,
}

impl Session {
    /// Step 1: draws the initial labels, prepares two identical triples per
    /// group, inserts the GHZ samples at the same random positions of all
    /// three sequences and sends S′_C.
    pub fn prepare(cfg: &SessionConfig) -> Result<Session, ProtocolError> {
        cfg.validate()?;
        let mut rng = StreamRng::new(cfg.seed, 2 * cfg.stream + PROTOCOL_STREAM);
        let eve_rng = StreamRng::new(cfg.seed, 2 * cfg.stream + ADVERSARY_STREAM);
        let n = cfg.groups;

        let labels: Vec<GhzLabel> = (0..n)
            .map(|_| match cfg.initial {
                Some(l) => l,
                None => GhzLabel::ALL[rng.below(8)],
            })
            .collect();
        let odd: Vec<StateVector> = labels.iter().map(|&l| ghz_state(l)).collect();
        let even = odd.clone();

        let d1 = cfg.decoys.step1;
        let samples: Vec<(GhzLabel, StateVector)> = (0..d1)
            .map(|_| {
                let l = GhzLabel::ALL[rng.below(8)];
                (l, ghz_state(l))
            })
            .collect();
        let positions = random_positions(2 * n + d1, d1, &mut rng);
        let [s_a, s_b, s_c] = [Role::A, Role::B, Role::C].map(|role| {
            ParticleSequence::ordered(role, n).with_inserted(&positions, SequenceEntry::Sample)
        });

        let groups = labels
            .iter()
            .enumerate()
            .map(|(i, &l)| GroupRecord {
                n: i + 1,
                prepared_label: l,
                a_op: None,
                p_label: None,
                b_op: None,
                bell_triple: None,
                announcement: None,
                decoded_by_alice: None,
                decoded_by_bob: None,
            })
            .collect();

        let mut session = Session {
            cfg: cfg.clone(),
            rng,
            eve_rng,
            odd,
            even,
            samples,
            decoys_b: Vec::new(),
            decoys_a: Vec::new(),
            s_a,
            s_b,
            s_c,
            transcript: SessionTranscript {
                config: cfg.clone(),
                groups,
                checks: Vec::new(),
                abort: None,
            },
        };
        session.transmit(Transmission::SC)?;
        Ok(session)
    }

    pub fn config(&self) -> &SessionConfig {
        &self.cfg
    }

    pub fn sequence(&self, role: Role) -> &ParticleSequence {
        match role {
            Role::A => &self.s_a,
            Role::B => &self.s_b,
            Role::C => &self.s_c,
        }
    }

    pub fn transcript(&self) -> &SessionTranscript {
        &self.transcript
    }

    pub fn into_transcript(self) -> SessionTranscript {
        self.transcript
    }

    /// Current register holding group `group`'s triple in `slot`.
    pub fn triple(&self, group: usize, slot: Slot) -> &StateVector {
        match slot {
            Slot::Odd => &self.odd[group],
            Slot::Even => &self.even[group],
        }
    }

    fn register_mut(&mut self, role: Role, entry: SequenceEntry) -> (&mut StateVector, usize) {
        match entry {
            SequenceEntry::Data { group, slot: Slot::Odd } => (&mut self.odd[group], role.qubit()),
            SequenceEntry::Data { group, slot: Slot::Even } => (&mut self.even[group], role.qubit()),
            SequenceEntry::Sample(i) => (&mut self.samples[i].1, role.qubit()),
            SequenceEntry::Decoy(i) => match role {
                Role::A => (&mut self.decoys_a[i].register, 0),
                Role::B => (&mut self.decoys_b[i].register, 0),
                Role::C => unreachable!("S_C carries no single-particle decoys"),
            },
        }
    }

    /// Sends one sequence over the quantum channel, letting the configured
    /// adversary act on every particle of the targeted transmission.
    fn transmit(&mut self, which: Transmission) -> Result<(), ProtocolError> {
        let Some(attack) = self.cfg.attack.clone().filter(|a| a.target == which) else {
            return Ok(());
        };
        let seq = match which {
            Transmission::SC => self.s_c.clone(),
            Transmission::SB => self.s_b.clone(),
            Transmission::SA => self.s_a.clone(),
        };
        let mut eve_rng = self.eve_rng.clone();
        for entry in seq.entries {
            let (reg, q) = self.register_mut(seq.role, entry);
            *reg = apply_attack(&attack, reg, q, &mut eve_rng)?;
        }
        self.eve_rng = eve_rng;
        Ok(())
    }

    fn record_check(&mut self, result: CheckResult) -> bool {
        let aborted = result.aborted;
        if aborted && self.transcript.abort.is_none() {
            self.transcript.abort = Some(Abort {
                step: result.step,
                error_rate: result.error_rate,
            });
        }
        self.transcript.checks.push(result);
        !aborted
    }

    /// Step 2: GHZ-correlation check on the samples in S′_C. Returns `false`
    /// if the session aborts.
    pub fn check1(&mut self) -> Result<bool, ProtocolError> {
        let mut records = Vec::with_capacity(self.samples.len());
        for position in self.s_c.check_positions() {
            let SequenceEntry::Sample(i) = self.s_c.entries[position] else {
                unreachable!("S'_C only holds samples besides data");
            };
            let basis = CheckBasis::random(&mut self.rng);
            let (label, reg) = &self.samples[i];
            let r = ghz_sample_check(*label, reg, basis, &mut self.rng)?;
            records.push(CheckRecord {
                position,
                prepared: label.to_string(),
                basis,
                outcome: r.outcomes.map(|o| o.to_string()).join(" "),
                consistent: r.consistent,
            });
        }
        let result = CheckResult::from_records(2, records, self.cfg.check_threshold);
        Ok(self.record_check(result))
    }

    fn insert_decoys(&mut self, role: Role, count: usize) {
        let decoys: Vec<Decoy> = (0..count)
            .map(|_| {
                let state = SingleState::random(&mut self.rng);
                Decoy {
                    state,
                    register: state.state(),
                }
            })
            .collect();
        let base = self.sequence(role).without_checks();
        let positions = random_positions(base.len() + count, count, &mut self.rng);
        let seq = base.with_inserted(&positions, SequenceEntry::Decoy);
        match role {
            Role::A => {
                self.decoys_a = decoys;
                self.s_a = seq;
            }
            Role::B => {
                self.decoys_b = decoys;
                self.s_b = seq;
            }
            Role::C => unreachable!(),
        }
    }

    fn decoy_check_step(&mut self, role: Role, step: u8) -> Result<bool, ProtocolError> {
        let seq = self.sequence(role).clone();
        let mut records = Vec::new();
        for position in seq.check_positions() {
            let SequenceEntry::Decoy(i) = seq.entries[position] else {
                unreachable!("only decoys are interleaved at this point");
            };
            let decoy = match role {
                Role::A => &self.decoys_a[i],
                _ => &self.decoys_b[i],
            };
            let r = decoy_check(decoy.state, &decoy.register, &mut self.rng)?;
            records.push(CheckRecord {
                position,
                prepared: decoy.state.to_string(),
                basis: decoy.state.basis(),
                outcome: r.outcome.to_string(),
                consistent: r.consistent,
            });
        }
        let result = CheckResult::from_records(step, records, self.cfg.check_threshold);
        Ok(self.record_check(result))
    }

    /// Step 3: strips the samples, applies `U_a` to (A_{2n−1}, B_{2n−1}),
    /// inserts single-particle decoys into S_B and sends S″_B.
    pub fn alice_encode(&mut self, messages: &[MessageTriple]) -> Result<(), ProtocolError> {
        let n = self.cfg.groups;
        if messages.len() != n {
            return Err(ProtocolError::MessageLength {
                party: "Alice",
                expected: 3 * n,
                got: 3 * messages.len(),
            });
        }
        self.s_a = self.s_a.without_checks();
        self.s_b = self.s_b.without_checks();
        self.s_c = self.s_c.without_checks();
        for (g, &m) in messages.iter().enumerate() {
            let a = message_to_op(m);
            self.odd[g] = apply_composite(&self.odd[g], a, Role::A.qubit(), Role::B.qubit())?;
            self.transcript.groups[g].a_op = Some(a);
        }
        self.insert_decoys(Role::B, self.cfg.decoys.step3);
        self.transmit(Transmission::SB)
    }

    /// Step 4: Bob measures the S″_B decoys in Alice's announced bases.
    pub fn check2(&mut self) -> Result<bool, ProtocolError> {
        self.decoy_check_step(Role::B, 4)
    }

    /// Step 5: Alice inserts fresh decoys into S_A, sends S″_A, and Bob checks
    /// them.
    pub fn check3(&mut self) -> Result<bool, ProtocolError> {
        self.insert_decoys(Role::A, self.cfg.decoys.step5);
        self.transmit(Transmission::SA)?;
        self.decoy_check_step(Role::A, 5)
    }

    /// Step 6: GHZ-basis measurement of each even triple, re-preparation of
    /// the measured state, and `U_b` on the new (A_{2n}, B_{2n}).
    pub fn bob_encode(&mut self, messages: &[MessageTriple]) -> Result<(), ProtocolError> {
        let n = self.cfg.groups;
        if messages.len() != n {
            return Err(ProtocolError::MessageLength {
                party: "Bob",
                expected: 3 * n,
                got: 3 * messages.len(),
            });
        }
        self.s_a = self.s_a.without_checks();
        self.s_b = self.s_b.without_checks();
        for (g, &m) in messages.iter().enumerate() {
            let (outcome, _) = self.even[g].measure(MeasBasis::Ghz, &[0, 1, 2], &mut self.rng)?;
            let Outcome::Ghz(p) = outcome else {
                unreachable!("GHZ measurement yields a GHZ label");
            };
            let b = message_to_op(m);
            self.even[g] = apply_composite(&ghz_state(p), b, Role::A.qubit(), Role::B.qubit())?;
            let rec = &mut self.transcript.groups[g];
            rec.p_label = Some(p);
            rec.b_op = Some(b);
        }
        Ok(())
    }

    /// Step 7: Bell measurements on (A_{2n−1}, A_{2n}), (B_{2n−1}, B_{2n}),
    /// (C_{2n−1}, C_{2n}) and the public announcement of the collection.
    pub fn swap_and_announce(&mut self) -> Result<Vec<CollectionLabel>, ProtocolError> {
        let mut out = Vec::with_capacity(self.cfg.groups);
        for g in 0..self.cfg.groups {
            let w = self.odd[g].num_qubits();
            let joint = self.odd[g].tensor(&self.even[g])?;
            let pairs = [[0, w], [1, w + 1], [2, w + 2]];
            let (triple, _) = measure_bell_triple(&joint, pairs, &mut self.rng)?;
            let m = collection_of(triple);
            let rec = &mut self.transcript.groups[g];
            rec.bell_triple = Some(triple);
            rec.announcement = Some(m);
            out.push(m);
        }
        Ok(out)
    }

    /// Alice's view: Bob's messages from her labels, operations and the
    /// announcements.
    pub fn alice_decode(&mut self) -> Result<Vec<MessageTriple>, ProtocolError> {
        let mut out = Vec::with_capacity(self.cfg.groups);
        for rec in &mut self.transcript.groups {
            let (Some(a), Some(m)) = (rec.a_op, rec.announcement) else {
                return Err(ProtocolError::InvalidConfig("decoding before announcement".into()));
            };
            let msg = decode_with(rec.n, rec.prepared_label, a, m, collection_table, true)?;
            rec.decoded_by_alice = Some(msg);
            out.push(msg);
        }
        Ok(out)
    }

    /// Bob's view: Alice's messages from his measured labels, operations and
    /// the announcements.
    pub fn bob_decode(&mut self) -> Result<Vec<MessageTriple>, ProtocolError> {
        let mut out = Vec::with_capacity(self.cfg.groups);
        for rec in &mut self.transcript.groups {
            let (Some(p), Some(b), Some(m)) = (rec.p_label, rec.b_op, rec.announcement) else {
                return Err(ProtocolError::InvalidConfig("decoding before announcement".into()));
            };
            let msg = decode_with(rec.n, p, b, m, collection_table, false)?;
            rec.decoded_by_bob = Some(msg);
            out.push(msg);
        }
        Ok(out)
    }
}

/// Runs all seven steps. A failed check stops the session and the transcript
/// carries the abort step; nothing is decoded in that case.
pub fn run_session(
    cfg: &SessionConfig,
    alice: &[MessageTriple],
    bob: &[MessageTriple],
) -> Result<SessionTranscript, ProtocolError> {
    for (party, msgs) in [("Alice", alice), ("Bob", bob)] {
        if msgs.len() != cfg.groups {
            return Err(ProtocolError::MessageLength {
                party,
                expected: 3 * cfg.groups,
                got: 3 * msgs.len(),
            });
        }
    }
    let mut s = Session::prepare(cfg)?;
    if !s.check1()? {
        return Ok(s.into_transcript());
    }
    s.alice_encode(alice)?;
    if !s.check2()? {
        return Ok(s.into_transcript());
    }
    if !s.check3()? {
        return Ok(s.into_transcript());
    }
    s.bob_encode(bob)?;
    s.swap_and_announce()?;
    s.alice_decode()?;
    s.bob_decode()?;
    Ok(s.into_transcript())
}
