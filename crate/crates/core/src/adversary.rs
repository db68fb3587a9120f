//! Eavesdropping strategies and Monte Carlo detection estimates.
//!
//! An attack acts on one particle of a register while it is in flight. The
//! register keeps every particle it is entangled with, so a tampered GHZ
//! sample is checked against the real joint state rather than a marginal.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::codebook::{string_serde, GhzLabel};
use crate::error::{AttackError, LabelError, StateError};
use crate::protocol::{decoy_check, ghz_sample_check, CheckBasis, SingleState};
use crate::published::detection as published;
use crate::rng::StreamRng;
use crate::state::{unitarity_defect4, MeasBasis, Outcome, SingleQubitOp, StateVector, AMP_TOL};

pub type Matrix4 = [[Complex64; 4]; 4];

/// Which quantum transmission Eve sits on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Transmission {
    /// S′_C, checked at Step 2 with GHZ samples.
    SC,
    /// S″_B, checked at Step 4 with single-particle decoys.
    SB,
    /// S″_A, checked at Step 5 with single-particle decoys.
    SA,
}

impl Transmission {
    pub const ALL: [Transmission; 3] = [Self::SC, Self::SB, Self::SA];

    /// Step number of the check guarding this transmission.
    pub fn check_step(self) -> u8 {
        match self {
            Self::SC => 2,
            Self::SB => 4,
            Self::SA => 5,
        }
    }
}

impl fmt::Display for Transmission {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::SC => "S_C",
            Self::SB => "S_B",
            Self::SA => "S_A",
        })
    }
}

impl FromStr for Transmission {
    type Err = LabelError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_uppercase().replace(['\'', '′', '″'], "").as_str() {
            "S_C" | "SC" | "C" => Ok(Self::SC),
            "S_B" | "SB" | "B" => Ok(Self::SB),
            "S_A" | "SA" | "A" => Ok(Self::SA),
            _ => Err(LabelError::Parse {
                kind: "transmission",
                input: s.to_string(),
            }),
        }
    }
}

string_serde!(Transmission);

/// What Eve substitutes in an intercept-resend attack.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum FakePolicy {
    Fixed(SingleState),
    /// Uniform over `|0⟩, |1⟩, |+⟩, |−⟩`.
    Uniform,
}

impl fmt::Display for FakePolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Fixed(s) => write!(f, "{s}"),
            Self::Uniform => f.write_str("uniform"),
        }
    }
}

impl FromStr for FakePolicy {
    type Err = LabelError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "uniform" | "random" => Ok(Self::Uniform),
            other => other.parse().map(Self::Fixed),
        }
    }
}

string_serde!(FakePolicy);

/// Basis choice for Eve's measure-resend or Bob's GHZ-sample check.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BasisPolicy {
    Fixed(CheckBasis),
    Uniform,
}

impl BasisPolicy {
    pub fn draw(self, rng: &mut StreamRng) -> CheckBasis {
        match self {
            Self::Fixed(b) => b,
            Self::Uniform => CheckBasis::random(rng),
        }
    }
}

impl fmt::Display for BasisPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Fixed(b) => write!(f, "{b}"),
            Self::Uniform => f.write_str("uniform"),
        }
    }
}

impl FromStr for BasisPolicy {
    type Err = LabelError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "uniform" | "random" => Ok(Self::Uniform),
            other => other.parse().map(Self::Fixed),
        }
    }
}

string_serde!(BasisPolicy);

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Strategy {
    InterceptResend { fake: FakePolicy },
    MeasureResend { basis: BasisPolicy },
    /// Couples the particle to a fresh ancilla with [`eve_unitary`].
    EntangleMeasure { alpha: f64, beta: f64 },
}

impl Strategy {
    /// Entangle-and-measure with flip probability `beta2`.
    pub fn entangle(beta2: f64) -> Result<Strategy, AttackError> {
        if !(0.0..=1.0).contains(&beta2) {
            return Err(AttackError::InvalidAmplitudes {
                alpha: (1.0 - beta2).sqrt(),
                beta: beta2.sqrt(),
            });
        }
        Ok(Strategy::EntangleMeasure {
            alpha: (1.0 - beta2).sqrt(),
            beta: beta2.sqrt(),
        })
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Self::InterceptResend { .. } => "intercept-resend",
            Self::MeasureResend { .. } => "measure-resend",
            Self::EntangleMeasure { .. } => "entangle-measure",
        }
    }

    /// Short parameter summary, e.g. `fake=+` or `beta2=0.25`.
    pub fn params(&self) -> String {
        match self {
            Self::InterceptResend { fake } => format!("fake={fake}"),
            Self::MeasureResend { basis } => format!("basis={basis}"),
            Self::EntangleMeasure { beta, .. } => format!("beta2={}", round12(beta * beta)),
        }
    }

    pub fn validate(&self) -> Result<(), AttackError> {
        if let Self::EntangleMeasure { alpha, beta } = *self {
            let ok = alpha.is_finite()
                && beta.is_finite()
                && alpha >= 0.0
                && beta >= 0.0
                && (alpha * alpha + beta * beta - 1.0).abs() <= AMP_TOL;
            if !ok {
                return Err(AttackError::InvalidAmplitudes { alpha, beta });
            }
        }
        Ok(())
    }
}

fn round12(x: f64) -> f64 {
    (x * 1e12).round() / 1e12
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.kind(), self.params())
    }
}

/// Accepts `intercept[-resend][:FAKE]`, `measure[-resend][:BASIS]` and
/// `entangle[-measure]:BETA2` (also `entangle:beta2=BETA2`).
impl FromStr for Strategy {
    type Err = LabelError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || LabelError::Parse {
            kind: "strategy",
            input: s.to_string(),
        };
        let (kind, arg) = match s.trim().split_once(':') {
            Some((k, a)) => (k, Some(a.trim())),
            None => (s.trim(), None),
        };
        let arg = arg.map(|a| a.split_once('=').map_or(a, |(_, v)| v));
        match kind {
            "intercept" | "intercept-resend" | "intercept_resend" => Ok(Self::InterceptResend {
                fake: arg.map_or(Ok(FakePolicy::Uniform), str::parse)?,
            }),
            "measure" | "measure-resend" | "measure_resend" => Ok(Self::MeasureResend {
                basis: arg.map_or(Ok(BasisPolicy::Uniform), str::parse)?,
            }),
            "entangle" | "entangle-measure" | "entangle_measure" => {
                let beta2: f64 = arg.ok_or_else(err)?.parse().map_err(|_| err())?;
                Strategy::entangle(beta2).map_err(|_| err())
            }
            _ => Err(err()),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct AttackConfig {
    pub target: Transmission,
    pub strategy: Strategy,
}

impl AttackConfig {
    pub fn new(target: Transmission, strategy: Strategy) -> Result<Self, AttackError> {
        strategy.validate()?;
        Ok(Self { target, strategy })
    }

    pub fn validate(&self) -> Result<(), AttackError> {
        self.strategy.validate()
    }
}

impl fmt::Display for AttackConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}@{}", self.strategy, self.target)
    }
}

/// Eve's two-qubit unitary on (particle, ancilla), particle as the high bit.
///
/// With the ancilla starting in `|0⟩ = |ε_0⟩`:
/// `|0⟩|0⟩ → α|0⟩|ε_0⟩ + β|1⟩|ε_1⟩` and `|1⟩|0⟩ → α|1⟩|ε_1⟩ − β|0⟩|ε_0⟩`.
/// The minus sign is the phase that makes the two images orthogonal; the
/// ancilla-`|1⟩` inputs are completed by swapping them onto each other.
pub fn eve_unitary(alpha: f64, beta: f64) -> Matrix4 {
    let z = Complex64::new(0.0, 0.0);
    let r = |x: f64| Complex64::new(x, 0.0);
    let mut m = [[z; 4]; 4];
    // column j = image of basis state j
    m[0][0] = r(alpha);
    m[3][0] = r(beta);
    m[3][2] = r(alpha);
    m[0][2] = r(-beta);
    m[2][1] = r(1.0);
    m[1][3] = r(1.0);
    m
}

/// Replaces qubit `q` with a fresh particle drawn from `fake`. Eve keeps the
/// original, which amounts to tracing it out; sampling its Z outcome and
/// discarding it yields the same reduced state for everything else.
pub fn attack_intercept_resend(
    s: &StateVector,
    q: usize,
    fake: FakePolicy,
    rng: &mut StreamRng,
) -> Result<StateVector, StateError> {
    let (o, post) = s.measure(MeasBasis::Z, &[q], rng)?;
    let reset = if o == Outcome::Bit(1) {
        post.apply_single(SingleQubitOp::SX, q)?
    } else {
        post
    };
    let state = match fake {
        FakePolicy::Fixed(st) => st,
        FakePolicy::Uniform => SingleState::random(rng),
    };
    state.prepare_from_zero(&reset, q)
}

/// Measures qubit `q` in Eve's basis and forwards the collapsed particle.
pub fn attack_measure_resend(
    s: &StateVector,
    q: usize,
    basis: BasisPolicy,
    rng: &mut StreamRng,
) -> Result<StateVector, StateError> {
    let b = basis.draw(rng);
    Ok(s.measure(b.meas(), &[q], rng)?.1)
}

/// Appends an ancilla and applies [`eve_unitary`] to (`q`, ancilla).
pub fn attack_entangle_measure(
    s: &StateVector,
    q: usize,
    alpha: f64,
    beta: f64,
) -> Result<StateVector, AttackError> {
    Strategy::EntangleMeasure { alpha, beta }.validate()?;
    let e = eve_unitary(alpha, beta);
    debug_assert!(unitarity_defect4(&e) <= AMP_TOL);
    let extended = s.with_ancilla()?;
    let anc = extended.num_qubits() - 1;
    Ok(extended.apply_two(&e, q, anc)?)
}

pub fn apply_attack(
    cfg: &AttackConfig,
    s: &StateVector,
    q: usize,
    rng: &mut StreamRng,
) -> Result<StateVector, AttackError> {
    match cfg.strategy {
        Strategy::InterceptResend { fake } => Ok(attack_intercept_resend(s, q, fake, rng)?),
        Strategy::MeasureResend { basis } => Ok(attack_measure_resend(s, q, basis, rng)?),
        Strategy::EntangleMeasure { alpha, beta } => attack_entangle_measure(s, q, alpha, beta),
    }
}

/// Decoy states used by a single-particle check.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum DecoyPolicy {
    Fixed(SingleState),
    /// `|0⟩` or `|1⟩`.
    ZBasis,
    /// `|+⟩` or `|−⟩`.
    XBasis,
    /// Any of the four.
    Bb84,
}

impl DecoyPolicy {
    fn draw(self, rng: &mut StreamRng) -> SingleState {
        use SingleState::*;
        match self {
            Self::Fixed(s) => s,
            Self::ZBasis => [Zero, One][rng.below(2)],
            Self::XBasis => [Plus, Minus][rng.below(2)],
            Self::Bb84 => SingleState::random(rng),
        }
    }
}

impl fmt::Display for DecoyPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Fixed(s) => write!(f, "{s}"),
            Self::ZBasis => f.write_str("Z"),
            Self::XBasis => f.write_str("X"),
            Self::Bb84 => f.write_str("bb84"),
        }
    }
}

impl FromStr for DecoyPolicy {
    type Err = LabelError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "z" | "Z" => Ok(Self::ZBasis),
            "x" | "X" => Ok(Self::XBasis),
            "bb84" | "BB84" | "uniform" => Ok(Self::Bb84),
            other => other.parse().map(Self::Fixed),
        }
    }
}

/// One isolated check experiment.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CheckTemplate {
    /// A Step-2 GHZ sample; C travels over S′_C.
    GhzSample { label: GhzLabel, bob_basis: BasisPolicy },
    /// A Step-4/5 single-particle decoy.
    SingleDecoy { decoys: DecoyPolicy },
}

impl CheckTemplate {
    fn name(&self) -> &'static str {
        match self {
            Self::GhzSample { .. } => "ghz-sample",
            Self::SingleDecoy { .. } => "single-decoy",
        }
    }

    fn accepts(&self, target: Transmission) -> bool {
        matches!(
            (self, target),
            (Self::GhzSample { .. }, Transmission::SC)
                | (Self::SingleDecoy { .. }, Transmission::SB | Transmission::SA)
        )
    }
}

impl fmt::Display for CheckTemplate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::GhzSample { label, bob_basis } => write!(f, "sample={label} check={bob_basis}"),
            Self::SingleDecoy { decoys } => write!(f, "decoys={decoys}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DetectionEstimate {
    pub strategy: String,
    pub target: String,
    pub params: String,
    pub trials: u64,
    pub detections: u64,
    pub rate: f64,
    pub per_decoy_rate: f64,
    pub ci95: f64,
    /// Published value for this attack/check pair, when one exists.
    pub reference_value: Option<f64>,
    pub abs_error: Option<f64>,
}

impl DetectionEstimate {
    /// Whether the estimate lies within `tol` of the published value.
    pub fn matches_reference(&self, tol: f64) -> Option<bool> {
        self.abs_error.map(|e| e <= tol)
    }
}

fn run_trial(
    attack: Option<&AttackConfig>,
    template: &CheckTemplate,
    rng: &mut StreamRng,
) -> Result<bool, AttackError> {
    match *template {
        CheckTemplate::GhzSample { label, bob_basis } => {
            let mut reg = crate::codebook::ghz_state(label);
            if let Some(a) = attack {
                reg = apply_attack(a, &reg, 2, rng)?;
            }
            let basis = bob_basis.draw(rng);
            Ok(!ghz_sample_check(label, &reg, basis, rng)?.consistent)
        }
        CheckTemplate::SingleDecoy { decoys } => {
            let st = decoys.draw(rng);
            let mut reg = st.state();
            if let Some(a) = attack {
                reg = apply_attack(a, &reg, 0, rng)?;
            }
            Ok(!decoy_check(st, &reg, rng)?.consistent)
        }
    }
}

/// Runs `trials` independent check experiments. Trial `t` draws from stream
/// `t` of `seed`, so the result does not depend on thread scheduling.
pub fn estimate_detection(
    attack: Option<&AttackConfig>,
    template: &CheckTemplate,
    trials: u64,
    seed: u64,
) -> Result<DetectionEstimate, AttackError> {
    if trials == 0 {
        return Err(AttackError::ZeroTrials);
    }
    if let Some(a) = attack {
        a.validate()?;
        if !template.accepts(a.target) {
            return Err(AttackError::TargetMismatch {
                template: template.name(),
                target: match a.target {
                    Transmission::SC => "S_C",
                    Transmission::SB => "S_B",
                    Transmission::SA => "S_A",
                },
            });
        }
    }
    let detections = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = StreamRng::new(seed, t);
            run_trial(attack, template, &mut rng).map(u64::from)
        })
        .try_reduce(|| 0, |a, b| Ok(a + b))?;
    let rate = detections as f64 / trials as f64;
    let reference_value = reference_detection_rate(attack, template);
    Ok(DetectionEstimate {
        strategy: attack.map_or("none".into(), |a| a.strategy.kind().to_string()),
        target: attack.map_or("-".into(), |a| a.target.to_string()),
        params: match attack {
            Some(a) => format!("{} {template}", a.strategy.params()),
            None => template.to_string(),
        },
        trials,
        detections,
        rate,
        per_decoy_rate: rate,
        ci95: 1.96 * (rate * (1.0 - rate) / trials as f64).sqrt(),
        reference_value,
        abs_error: reference_value.map(|r| (rate - r).abs()),
    })
}

/// The published per-sample detection probability for an attack/check pair.
/// Pairs the published analysis does not cover return `None`.
pub fn reference_detection_rate(attack: Option<&AttackConfig>, template: &CheckTemplate) -> Option<f64> {
    use BasisPolicy as B;
    use CheckBasis::{X, Z};
    use SingleState::*;
    let Some(attack) = attack else {
        return Some(0.0);
    };
    match (attack.strategy, *template) {
        (Strategy::InterceptResend { fake: FakePolicy::Fixed(f) }, CheckTemplate::GhzSample { bob_basis, .. }) => {
            match (f, bob_basis) {
                (Zero | One, _) => Some(published::IR_FAKE_Z_STATE),
                (Plus | Minus, B::Fixed(Z)) => Some(published::IR_FAKE_X_STATE_Z_CHECK),
                (Plus | Minus, B::Fixed(X)) => Some(published::IR_FAKE_X_STATE_X_CHECK),
                (Plus | Minus, B::Uniform) => {
                    Some((published::IR_FAKE_X_STATE_Z_CHECK + published::IR_FAKE_X_STATE_X_CHECK) / 2.0)
                }
            }
        }
        (Strategy::MeasureResend { basis: B::Fixed(eve) }, CheckTemplate::GhzSample { bob_basis, .. }) => {
            match (eve, bob_basis) {
                (Z, B::Fixed(Z)) => Some(published::MR_Z_Z_CHECK),
                (Z, B::Fixed(X)) => Some(published::MR_Z_X_CHECK),
                (Z, B::Uniform) => Some(published::MR_Z_TOTAL),
                (X, B::Fixed(Z)) => Some(published::MR_X_Z_CHECK),
                (X, B::Fixed(X)) => Some(published::MR_X_X_CHECK),
                (X, B::Uniform) => Some(published::MR_X_TOTAL),
            }
        }
        (Strategy::InterceptResend { fake: FakePolicy::Uniform }, CheckTemplate::SingleDecoy { decoys: DecoyPolicy::Bb84 }) => {
            Some(published::IR_DECOY)
        }
        (Strategy::MeasureResend { basis: B::Uniform }, CheckTemplate::SingleDecoy { decoys: DecoyPolicy::Bb84 }) => {
            Some(published::MR_DECOY)
        }
        (Strategy::EntangleMeasure { beta, .. }, CheckTemplate::SingleDecoy { decoys: DecoyPolicy::ZBasis })
        | (
            Strategy::EntangleMeasure { beta, .. },
            CheckTemplate::GhzSample {
                bob_basis: B::Fixed(Z),
                ..
            },
        ) => Some(round12(beta * beta)),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use super::Strategy;
    use proptest::prelude::*;

    fn psi0() -> GhzLabel {
        GhzLabel::new(0).unwrap()
    }

    fn ir(fake: &str) -> AttackConfig {
        AttackConfig::new(
            Transmission::SC,
            Strategy::InterceptResend {
                fake: fake.parse().unwrap(),
            },
        )
        .unwrap()
    }

    #[test]
    fn eve_unitary_is_unitary() {
        for beta2 in [0.0f64, 0.1, 0.25, 0.5, 0.9, 1.0] {
            let e = eve_unitary((1.0 - beta2).sqrt(), beta2.sqrt());
            assert!(unitarity_defect4(&e) < 1e-12);
        }
    }

    #[test]
    fn eve_unitary_acts_as_stated() {
        let (a, b) = (0.8, 0.6);
        let e = eve_unitary(a, b);
        let s = StateVector::basis("00").unwrap().apply_two(&e, 0, 1).unwrap();
        assert!((s.amp(0).re - a).abs() < 1e-12 && (s.amp(3).re - b).abs() < 1e-12);
        let s = StateVector::basis("10").unwrap().apply_two(&e, 0, 1).unwrap();
        assert!((s.amp(3).re - a).abs() < 1e-12 && (s.amp(0).re + b).abs() < 1e-12);
    }

    #[test]
    fn beta_zero_never_flips() {
        // orthogonal ancilla states still record the Z value, so β = 0 is
        // invisible to a Z check but not to an X check
        for st in [SingleState::Zero, SingleState::One] {
            let t = attack_entangle_measure(&st.state(), 0, 1.0, 0.0).unwrap();
            assert_eq!(t.num_qubits(), 2);
            let d = t.born_distribution(MeasBasis::Z, &[0]).unwrap();
            assert!((d[&st.eigen_outcome()] - 1.0).abs() < 1e-12);
        }
        let a = AttackConfig::new(Transmission::SA, Strategy::entangle(0.0).unwrap()).unwrap();
        let t = CheckTemplate::SingleDecoy { decoys: DecoyPolicy::ZBasis };
        assert_eq!(estimate_detection(Some(&a), &t, 1_000, 2).unwrap().detections, 0);
    }

    #[test]
    fn invalid_amplitudes_rejected() {
        assert!(AttackConfig::new(Transmission::SB, Strategy::EntangleMeasure { alpha: 0.5, beta: 0.5 }).is_err());
        assert!(AttackConfig::new(Transmission::SB, Strategy::EntangleMeasure { alpha: -0.6, beta: 0.8 }).is_err());
        assert!(Strategy::entangle(1.5).is_err());
        assert!(attack_entangle_measure(&SingleState::Zero.state(), 0, 0.1, 0.1).is_err());
    }

    #[test]
    fn intercept_resend_severs_entanglement() {
        let mut rng = StreamRng::new(1, 0);
        let s = crate::codebook::ghz_state(psi0());
        let t = attack_intercept_resend(&s, 2, FakePolicy::Fixed(SingleState::Plus), &mut rng).unwrap();
        let d = t.born_distribution(MeasBasis::X, &[2]).unwrap();
        assert!((d[&Outcome::Sign(crate::state::Sign::Plus)] - 1.0).abs() < 1e-12);
        // A and B are left collapsed onto |00⟩ or |11⟩
        let ab = t.born_distribution(MeasBasis::Z, &[0]).unwrap();
        assert!(ab.values().any(|p| (p - 1.0).abs() < 1e-12));
        let d = t.joint_distribution(&[(MeasBasis::Z, &[0]), (MeasBasis::Z, &[1])]).unwrap();
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].0[0], d[0].0[1]);
    }

    #[test]
    fn no_attack_baseline_is_zero() {
        for template in [
            CheckTemplate::GhzSample {
                label: psi0(),
                bob_basis: BasisPolicy::Uniform,
            },
            CheckTemplate::SingleDecoy { decoys: DecoyPolicy::Bb84 },
        ] {
            let e = estimate_detection(None, &template, 2_000, 4).unwrap();
            assert_eq!(e.detections, 0);
            assert_eq!(e.rate, 0.0);
            assert_eq!(e.ci95, 0.0);
            assert_eq!(e.reference_value, Some(0.0));
        }
    }

    #[test]
    fn estimate_is_deterministic_and_ci_formula() {
        let t = CheckTemplate::GhzSample {
            label: psi0(),
            bob_basis: BasisPolicy::Fixed(CheckBasis::Z),
        };
        let a = estimate_detection(Some(&ir("-")), &t, 5_000, 11).unwrap();
        let b = estimate_detection(Some(&ir("-")), &t, 5_000, 11).unwrap();
        assert_eq!(a, b);
        let expect = 1.96 * (a.rate * (1.0 - a.rate) / 5_000.0).sqrt();
        assert!((a.ci95 - expect).abs() < 1e-15);
        assert_eq!(a.reference_value, Some(0.75));
    }

    #[test]
    fn target_template_mismatch() {
        let t = CheckTemplate::SingleDecoy { decoys: DecoyPolicy::Bb84 };
        assert!(matches!(
            estimate_detection(Some(&ir("0")), &t, 10, 0),
            Err(AttackError::TargetMismatch { .. })
        ));
        assert!(matches!(estimate_detection(None, &t, 0, 0), Err(AttackError::ZeroTrials)));
    }

    #[test]
    fn full_flip_always_detected_on_z_decoys() {
        let a = AttackConfig::new(Transmission::SB, Strategy::entangle(1.0).unwrap()).unwrap();
        let t = CheckTemplate::SingleDecoy { decoys: DecoyPolicy::ZBasis };
        assert_eq!(estimate_detection(Some(&a), &t, 1_000, 3).unwrap().rate, 1.0);
    }

    #[test]
    fn strategy_parsing() {
        assert_eq!(
            "intercept:+".parse::<Strategy>().unwrap(),
            Strategy::InterceptResend {
                fake: FakePolicy::Fixed(SingleState::Plus)
            }
        );
        assert_eq!(
            "measure-resend:X".parse::<Strategy>().unwrap(),
            Strategy::MeasureResend {
                basis: BasisPolicy::Fixed(CheckBasis::X)
            }
        );
        let Strategy::EntangleMeasure { beta, .. } = "entangle:beta2=0.25".parse().unwrap() else {
            panic!()
        };
        assert!((beta - 0.5).abs() < 1e-15);
        assert!("teleport".parse::<Strategy>().is_err());
        assert_eq!("S''_B".parse::<Transmission>().unwrap(), Transmission::SB);
        assert_eq!(ir("uniform").to_string(), "intercept-resend:fake=uniform@S_C");
    }

    proptest! {
        #[test]
        fn eve_unitary_unitary_for_all_valid(beta2 in 0.0f64..=1.0) {
            let Strategy::EntangleMeasure { alpha, beta } = Strategy::entangle(beta2).unwrap() else { unreachable!() };
            prop_assert!(unitarity_defect4(&eve_unitary(alpha, beta)) <= 1e-9);
        }

        #[test]
        fn entangle_flip_probability_is_beta2(beta2 in 0.0f64..=1.0, one in any::<bool>()) {
            let st = if one { SingleState::One } else { SingleState::Zero };
            let Strategy::EntangleMeasure { alpha, beta } = Strategy::entangle(beta2).unwrap() else { unreachable!() };
            let t = attack_entangle_measure(&st.state(), 0, alpha, beta).unwrap();
            let d = t.born_distribution(MeasBasis::Z, &[0]).unwrap();
            let flipped = Outcome::Bit(if one { 0 } else { 1 });
            prop_assert!((d[&flipped] - beta2).abs() < 1e-9);
        }
    }
}
