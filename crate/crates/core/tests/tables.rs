use std::collections::BTreeSet;

use bqsdc::codebook::{classify_ghz, ghz_state, verify_table1, CompositeOp, GhzLabel};
use bqsdc::published;
use bqsdc::swap::{printed_collection, swap_distribution, verify_table2, BellTriple, CollectionLabel};

#[test]
fn table1_report_is_clean() {
    let r = verify_table1();
    assert!(r.passed(), "{r:?}");
    assert_eq!(r.matched, 64);
    assert!(r.entries.iter().all(|e| (e.phase.abs() - 1.0).abs() < 1e-9));
    assert!(r.xor_closed_form);
}

#[test]
fn table2_report_is_clean() {
    let r = verify_table2();
    assert!(r.passed(), "{r:?}");
    assert_eq!(r.matched, 64);
    assert_eq!(r.printed_sets_matched, 8);
    assert!(r.max_prob_deviation < 1e-9);
}

#[test]
fn printed_tables_agree_with_state_vectors_entry_by_entry() {
    for (i, row) in published::TABLE1.iter().enumerate() {
        for (j, &k) in row.iter().enumerate() {
            let s = bqsdc::codebook::apply_composite(
                &ghz_state(GhzLabel::new(i).unwrap()),
                CompositeOp::new(k as usize).unwrap(),
                0,
                1,
            )
            .unwrap();
            assert_eq!(classify_ghz(&s).unwrap().0.index(), j);
        }
    }
    for g1 in GhzLabel::ALL {
        for g2 in GhzLabel::ALL {
            let m = CollectionLabel::new(published::TABLE2[g1.index()][g2.index()] as usize).unwrap();
            let support: BTreeSet<BellTriple> = swap_distribution(g1, g2)
                .into_iter()
                .filter(|(_, p)| *p > 1e-12)
                .map(|(t, p)| {
                    assert!((p - 0.125).abs() < 1e-9);
                    t
                })
                .collect();
            assert_eq!(support, printed_collection(m), "{g1} {g2}");
        }
    }
}

#[test]
fn collections_partition_all_triples() {
    let mut seen = BTreeSet::new();
    for m in CollectionLabel::ALL {
        assert_eq!(m.members().len(), 8);
        for t in m.members() {
            assert!(seen.insert(*t), "{t} appears twice");
        }
    }
    assert_eq!(seen.len(), 64);
}
