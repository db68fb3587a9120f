//! Entropy, leakage, efficiency and comparison figures.
//!
//! Everything here is exact enumeration over the label tables except
//! [`monte_carlo_leakage`], which runs full sessions and exists to
//! cross-check the enumeration.

use serde::Serialize;

use crate::codebook::{CompositeOp, GhzLabel, MessageTriple};
use crate::error::{AnalysisError, ProtocolError};
use crate::protocol::{
    announced_collection, random_messages, run_session, DecoyCounts, SessionConfig, CAPACITY_BITS_PER_GROUP,
};
use crate::published::{CLAIMED_EVE_ENTROPY_BITS, CLAIMED_LEAKAGE_BITS};

/// Leakage below this many bits counts as zero.
pub const LEAKAGE_EPS: f64 = 1e-9;

/// Probability of each (Alice op, Bob op) combination, indexed `[a][b]`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ComboDistribution {
    probs: [[f64; 8]; 8],
}

impl ComboDistribution {
    pub fn uniform() -> Self {
        Self {
            probs: [[1.0 / 64.0; 8]; 8],
        }
    }

    pub fn point(a: CompositeOp, b: CompositeOp) -> Self {
        let mut probs = [[0.0; 8]; 8];
        probs[a.index()][b.index()] = 1.0;
        Self { probs }
    }

    pub fn new(probs: [[f64; 8]; 8]) -> Result<Self, AnalysisError> {
        if probs.iter().flatten().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(AnalysisError::InvalidDistribution("negative or non-finite entry".into()));
        }
        let total: f64 = probs.iter().flatten().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(AnalysisError::InvalidDistribution(format!("sums to {total}")));
        }
        Ok(Self { probs })
    }

    /// Independent priors on the two messages.
    pub fn product(alice: &[f64; 8], bob: &[f64; 8]) -> Result<Self, AnalysisError> {
        let mut probs = [[0.0; 8]; 8];
        for (a, pa) in alice.iter().enumerate() {
            for (b, pb) in bob.iter().enumerate() {
                probs[a][b] = pa * pb;
            }
        }
        Self::new(probs)
    }

    pub fn prob(&self, a: CompositeOp, b: CompositeOp) -> f64 {
        self.probs[a.index()][b.index()]
    }

    pub fn iter(&self) -> impl Iterator<Item = (CompositeOp, CompositeOp, f64)> + '_ {
        CompositeOp::ALL
            .into_iter()
            .flat_map(move |a| CompositeOp::ALL.into_iter().map(move |b| (a, b, self.prob(a, b))))
    }

    pub fn entropy(&self) -> f64 {
        shannon_entropy(self.probs.iter().flatten().copied())
    }
}

/// `−Σ p log₂ p`, with `0 · log 0 = 0`.
pub fn shannon_entropy(probs: impl IntoIterator<Item = f64>) -> f64 {
    let h: f64 = probs
        .into_iter()
        .filter(|&p| p > 0.0)
        .map(|p| -p * p.log2())
        .sum();
    // avoid printing -0
    h.max(0.0)
}

/// Joint probability of (a, b, announced m) with the initial label uniform
/// and unknown to the observer, indexed `[m][a][b]`.
pub fn announcement_joint(prior: &ComboDistribution) -> [[[f64; 8]; 8]; 8] {
    let mut joint = [[[0.0; 8]; 8]; 8];
    for (a, b, pab) in prior.iter() {
        for p in GhzLabel::ALL {
            let m = announced_collection(p, a, b);
            joint[m.index()][a.index()][b.index()] += pab / 8.0;
        }
    }
    joint
}

/// `H(a, b | m)` in bits by exhaustive enumeration over the 8 initial labels
/// and 64 operation pairs.
pub fn conditional_entropy_given_announcement(prior: &ComboDistribution) -> f64 {
    conditional_entropy(&announcement_joint(prior))
}

fn conditional_entropy(joint: &[[[f64; 8]; 8]; 8]) -> f64 {
    joint
        .iter()
        .map(|slice| {
            let pm: f64 = slice.iter().flatten().sum();
            if pm <= 0.0 {
                0.0
            } else {
                pm * shannon_entropy(slice.iter().flatten().map(|p| p / pm))
            }
        })
        .sum()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LeakageReport {
    /// Eve's uncertainty about the operation pair before the announcement.
    pub entropy_bits: f64,
    /// Remaining uncertainty after the announcement, as computed.
    pub conditional_entropy_bits: f64,
    /// `entropy_bits − conditional_entropy_bits`.
    pub leakage_bits: f64,
    pub published_entropy_bits: f64,
    pub published_leakage_bits: f64,
    /// Set when the computed leakage differs from the published figure.
    pub discrepancy: bool,
}

pub fn leakage_report(prior: &ComboDistribution) -> LeakageReport {
    let h = prior.entropy();
    let hc = conditional_entropy_given_announcement(prior);
    let leak = h - hc;
    LeakageReport {
        entropy_bits: h,
        conditional_entropy_bits: hc,
        leakage_bits: leak,
        published_entropy_bits: CLAIMED_EVE_ENTROPY_BITS,
        published_leakage_bits: CLAIMED_LEAKAGE_BITS,
        discrepancy: (leak - CLAIMED_LEAKAGE_BITS).abs() > LEAKAGE_EPS,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MonteCarloLeakage {
    pub groups: usize,
    pub seed: u64,
    /// Observed frequency of each announced collection.
    pub announcement_freq: [f64; 8],
    /// Plug-in estimate of `H(a, b)` from the observed pairs.
    pub entropy_bits: f64,
    /// Plug-in estimate of `H(a, b | m)`.
    pub conditional_entropy_bits: f64,
    pub leakage_bits: f64,
    /// Observed (a, b, m) combinations the enumeration gives zero probability.
    pub impossible_observations: usize,
    /// Largest `|observed − exact|` over the posterior cells `P(a, b | m)`.
    pub max_posterior_deviation: f64,
    pub discrepancy: bool,
}

/// Threshold on the plug-in leakage estimate for flagging a discrepancy.
/// Finite-sample bias of the estimator is far below this.
pub const MC_LEAKAGE_FLAG_BITS: f64 = 0.1;

/// Runs one session of `groups` groups with uniformly random messages and
/// initial labels, and tabulates what the announcements reveal.
pub fn monte_carlo_leakage(groups: usize, seed: u64) -> Result<MonteCarloLeakage, ProtocolError> {
    let cfg = SessionConfig {
        decoys: DecoyCounts::uniform(0),
        ..SessionConfig::new(groups, seed)
    };
    let alice = random_messages(groups, seed, 0);
    let bob = random_messages(groups, seed, 1);
    let t = run_session(&cfg, &alice, &bob)?;

    let mut counts = [[[0u64; 8]; 8]; 8];
    for rec in &t.groups {
        let (Some(a), Some(b), Some(m)) = (rec.a_op, rec.b_op, rec.announcement) else {
            return Err(ProtocolError::InvalidConfig("session did not complete".into()));
        };
        counts[m.index()][a.index()][b.index()] += 1;
    }
    let n = groups as f64;
    let mut joint = [[[0.0; 8]; 8]; 8];
    let mut pair = [[0.0; 8]; 8];
    for m in 0..8 {
        for a in 0..8 {
            for b in 0..8 {
                joint[m][a][b] = counts[m][a][b] as f64 / n;
                pair[a][b] += joint[m][a][b];
            }
        }
    }
    let exact = announcement_joint(&ComboDistribution::uniform());
    let mut impossible = 0;
    let mut max_dev: f64 = 0.0;
    let mut freq = [0.0; 8];
    for m in 0..8 {
        let cm: u64 = counts[m].iter().flatten().sum();
        freq[m] = cm as f64 / n;
        let em: f64 = exact[m].iter().flatten().sum();
        for a in 0..8 {
            for b in 0..8 {
                if counts[m][a][b] > 0 && exact[m][a][b] <= 0.0 {
                    impossible += 1;
                }
                let observed = if cm == 0 {
                    0.0
                } else {
                    counts[m][a][b] as f64 / cm as f64
                };
                max_dev = max_dev.max((observed - exact[m][a][b] / em).abs());
            }
        }
    }
    let h = shannon_entropy(pair.iter().flatten().copied());
    let hc = conditional_entropy(&joint);
    Ok(MonteCarloLeakage {
        groups,
        seed,
        announcement_freq: freq,
        entropy_bits: h,
        conditional_entropy_bits: hc,
        leakage_bits: h - hc,
        impossible_observations: impossible,
        max_posterior_deviation: max_dev,
        discrepancy: h - hc > MC_LEAKAGE_FLAG_BITS,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EfficiencyInputs {
    /// Secret bits delivered.
    pub secret_bits: f64,
    /// Qubits consumed.
    pub qubits: f64,
    /// Classical bits exchanged.
    pub classical_bits: f64,
}

impl EfficiencyInputs {
    pub fn new(secret_bits: f64, qubits: f64, classical_bits: f64) -> Self {
        Self {
            secret_bits,
            qubits,
            classical_bits,
        }
    }

    /// One group of this protocol: 3 + 3 bits over two GHZ triples and a
    /// 3-bit announcement.
    pub fn this_protocol() -> Self {
        Self::new(CAPACITY_BITS_PER_GROUP as f64, 6.0, 3.0)
    }
}

/// `η = b_s / (q_t + b_t)`.
pub fn cabello_efficiency(e: EfficiencyInputs) -> Result<f64, AnalysisError> {
    let denom = e.qubits + e.classical_bits;
    if denom <= 0.0 {
        return Err(AnalysisError::ZeroDenominator);
    }
    Ok(e.secret_bits / denom)
}

/// Percentage with one decimal, e.g. `66.7%`.
pub fn format_percent(x: f64) -> String {
    format!("{:.1}%", x * 100.0)
}

/// Secret bits per transmitted qubit never exceed one for this accounting.
pub fn holevo_consistent(secret_bits: f64, qubits_transmitted: f64) -> bool {
    qubits_transmitted > 0.0 && secret_bits / qubits_transmitted <= 1.0 + 1e-12
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ComparisonRow {
    pub protocols: String,
    pub bits_per_round: u32,
    pub leaked_bits: u32,
    pub efficiency: Option<f64>,
    /// The leak figure is the authors' own claim rather than a cited one.
    pub claimed: bool,
}

impl ComparisonRow {
    fn new(protocols: &str, bits: u32, leaked: u32, efficiency: Option<f64>) -> Self {
        Self {
            protocols: protocols.into(),
            bits_per_round: bits,
            leaked_bits: leaked,
            efficiency,
            claimed: false,
        }
    }
}

/// Previously published bidirectional protocols next to this one.
pub fn comparison_report() -> Vec<ComparisonRow> {
    let eta = |b, q, c| cabello_efficiency(EfficiencyInputs::new(b, q, c)).ok();
    vec![
        ComparisonRow::new("[15] [16] [18] [19] [25] [30] [35, second]", 4, 2, None),
        ComparisonRow::new("[20] [21] [23] [35, first]", 4, 3, None),
        ComparisonRow::new("[24]", 3, 2, None),
        ComparisonRow::new("[22] [26]", 2, 1, None),
        ComparisonRow::new("[31] [34]", 4, 0, eta(4.0, 4.0, 2.0)),
        ComparisonRow::new("[32]", 2, 0, eta(2.0, 2.0, 1.0)),
        ComparisonRow::new("[33]", 3, 0, eta(3.0, 3.0, 1.0)),
        ComparisonRow {
            claimed: true,
            ..ComparisonRow::new(
                "this protocol",
                CAPACITY_BITS_PER_GROUP as u32,
                CLAIMED_LEAKAGE_BITS as u32,
                cabello_efficiency(EfficiencyInputs::this_protocol()).ok(),
            )
        },
    ]
}

/// Distinct (bits, leaked) pairs in the comparison.
pub fn comparison_classes(rows: &[ComparisonRow]) -> Vec<(u32, u32)> {
    let mut v: Vec<_> = rows.iter().map(|r| (r.bits_per_round, r.leaked_bits)).collect();
    v.sort_unstable();
    v.dedup();
    v
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EfficiencyRow {
    pub protocols: String,
    pub inputs: EfficiencyInputs,
    pub efficiency: f64,
    pub percent: String,
}

pub fn efficiency_rows() -> Vec<EfficiencyRow> {
    [
        ("this protocol", EfficiencyInputs::this_protocol()),
        ("[33]", EfficiencyInputs::new(3.0, 3.0, 1.0)),
        ("[31] [34]", EfficiencyInputs::new(4.0, 4.0, 2.0)),
        ("[32]", EfficiencyInputs::new(2.0, 2.0, 1.0)),
    ]
    .into_iter()
    .map(|(p, inputs)| {
        let eta = cabello_efficiency(inputs).expect("nonzero denominators");
        EfficiencyRow {
            protocols: p.into(),
            inputs,
            efficiency: eta,
            percent: format_percent(eta),
        }
    })
    .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AnalysisReport {
    pub capacity_bits_per_group: usize,
    pub holevo_consistent: bool,
    pub leakage: LeakageReport,
    pub efficiency: Vec<EfficiencyRow>,
    pub comparison: Vec<ComparisonRow>,
}

pub fn analysis_report() -> AnalysisReport {
    AnalysisReport {
        capacity_bits_per_group: CAPACITY_BITS_PER_GROUP,
        holevo_consistent: holevo_consistent(CAPACITY_BITS_PER_GROUP as f64, 6.0),
        leakage: leakage_report(&ComboDistribution::uniform()),
        efficiency: efficiency_rows(),
        comparison: comparison_report(),
    }
}

/// Operation pairs consistent with announcement `m`, for any initial label.
pub fn consistent_pairs(m: crate::swap::CollectionLabel) -> Vec<(MessageTriple, MessageTriple)> {
    let p0 = GhzLabel::ALL[0];
    CompositeOp::ALL
        .into_iter()
        .flat_map(|a| CompositeOp::ALL.into_iter().map(move |b| (a, b)))
        .filter(|&(a, b)| announced_collection(p0, a, b) == m)
        .map(|(a, b)| (crate::codebook::op_to_message(a), crate::codebook::op_to_message(b)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn op(k: usize) -> CompositeOp {
        CompositeOp::new(k).unwrap()
    }

    #[test]
    fn entropy_examples() {
        assert_eq!(ComboDistribution::uniform().entropy(), 6.0);
        assert_eq!(ComboDistribution::point(op(3), op(5)).entropy(), 0.0);
        assert_eq!(shannon_entropy([0.125; 8]), 3.0);
        assert_eq!(shannon_entropy([1.0, 0.0]), 0.0);
    }

    #[test]
    fn uniform_prior_leaks_three_bits() {
        let r = leakage_report(&ComboDistribution::uniform());
        assert_eq!(r.entropy_bits, 6.0);
        assert!((r.conditional_entropy_bits - 3.0).abs() < 1e-12);
        assert!((r.leakage_bits - 3.0).abs() < 1e-12);
        assert_eq!(r.published_leakage_bits, 0.0);
        assert!(r.discrepancy);
        assert_eq!(r.leakage_bits, r.entropy_bits - r.conditional_entropy_bits);
    }

    #[test]
    fn point_mass_leaks_nothing() {
        let r = leakage_report(&ComboDistribution::point(op(1), op(6)));
        assert_eq!(r.conditional_entropy_bits, 0.0);
        assert_eq!(r.leakage_bits, 0.0);
        assert!(!r.discrepancy);
    }

    #[test]
    fn each_announcement_leaves_eight_pairs() {
        for m in crate::swap::CollectionLabel::ALL {
            let pairs = consistent_pairs(m);
            assert_eq!(pairs.len(), 8);
            // every Alice message appears exactly once
            let mut alice: Vec<_> = pairs.iter().map(|p| p.0.value()).collect();
            alice.sort_unstable();
            assert_eq!(alice, (0..8).collect::<Vec<_>>());
        }
    }

    #[test]
    fn efficiency_examples() {
        let e = |b, q, c| cabello_efficiency(EfficiencyInputs::new(b, q, c)).unwrap();
        assert!((e(6.0, 6.0, 3.0) - 2.0 / 3.0).abs() < 1e-12);
        assert!((e(3.0, 3.0, 1.0) - 0.75).abs() < 1e-12);
        assert!((e(4.0, 4.0, 2.0) - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(format_percent(e(6.0, 6.0, 3.0)), "66.7%");
        assert_eq!(
            cabello_efficiency(EfficiencyInputs::new(1.0, 0.0, 0.0)),
            Err(AnalysisError::ZeroDenominator)
        );
    }

    #[test]
    fn comparison_fixture() {
        let rows = comparison_report();
        let find = |p: &str| rows.iter().find(|r| r.protocols == p).unwrap();
        assert_eq!((find("[24]").bits_per_round, find("[24]").leaked_bits), (3, 2));
        assert_eq!((find("[32]").bits_per_round, find("[32]").leaked_bits), (2, 0));
        let me = find("this protocol");
        assert_eq!((me.bits_per_round, me.leaked_bits, me.claimed), (6, 0, true));
        assert_eq!(comparison_classes(&rows).len(), 8);
    }

    #[test]
    fn holevo_accounting() {
        assert!(holevo_consistent(6.0, 6.0));
        assert!(!holevo_consistent(7.0, 6.0));
    }

    #[test]
    fn invalid_distribution_rejected() {
        assert!(ComboDistribution::new([[0.0; 8]; 8]).is_err());
        let mut p = [[1.0 / 64.0; 8]; 8];
        p[0][0] = -p[0][0];
        assert!(ComboDistribution::new(p).is_err());
    }

    fn weights() -> impl proptest::strategy::Strategy<Value = [f64; 8]> {
        proptest::array::uniform8(0.0f64..1.0).prop_filter_map("nonzero", |w| {
            let s: f64 = w.iter().sum();
            (s > 1e-6).then(|| w.map(|x| x / s))
        })
    }

    proptest! {
        #[test]
        fn conditioning_never_increases_entropy(a in weights(), b in weights()) {
            let d = ComboDistribution::product(&a, &b).unwrap();
            let r = leakage_report(&d);
            prop_assert!(r.conditional_entropy_bits <= r.entropy_bits + 1e-12);
            prop_assert!(r.leakage_bits >= -1e-12);
            prop_assert!((r.leakage_bits - (r.entropy_bits - r.conditional_entropy_bits)).abs() < 1e-12);
        }

        #[test]
        fn entropy_bounded_by_support(w in weights()) {
            let support = w.iter().filter(|&&p| p > 0.0).count() as f64;
            prop_assert!(shannon_entropy(w) <= support.log2() + 1e-12);
        }
    }
}
