use microcluster::Partition;
use proptest::prelude::*;

fn raw_tokens() -> impl Strategy<Value = Vec<u8>> {
    prop::collection::vec(0u8..12, 1..200)
}

proptest! {
    #[test]
    fn canonicalize_is_idempotent(raw in raw_tokens()) {
        let p = Partition::canonicalize(raw.iter()).unwrap();
        let again = Partition::canonicalize(p.labels()).unwrap();
        prop_assert_eq!(&again, &p);
        prop_assert_eq!(Partition::from_labels(&p.labels()).unwrap(), p);
    }

    #[test]
    fn canonical_labels_first_appear_in_order(raw in raw_tokens()) {
        let p = Partition::canonicalize(raw).unwrap();
        let mut max = 0;
        for c in p.labels() {
            prop_assert!(c <= max + 1);
            max = max.max(c);
        }
        prop_assert_eq!(max as usize, p.k());
    }

    #[test]
    fn restriction_is_consistent(raw in raw_tokens(), a in 1usize..200, b in 1usize..200) {
        let p = Partition::canonicalize(raw).unwrap();
        let (a, b) = (a.min(p.len()), b.min(p.len()));
        let (m1, m2) = (a.min(b), a.max(b));
        let direct = p.restrict(m1).unwrap();
        prop_assert_eq!(&p.restrict(m2).unwrap().restrict(m1).unwrap(), &direct);
        prop_assert_eq!(&direct.labels()[..], &p.labels()[..m1]);
        prop_assert!(p.restrict(0).is_err());
        prop_assert!(p.restrict(p.len() + 1).is_err());
    }

    #[test]
    fn stats_identities(raw in raw_tokens()) {
        let p = Partition::canonicalize(raw).unwrap();
        let st = p.stats();
        prop_assert_eq!(st.sizes.iter().sum::<u64>() as usize, st.n);
        prop_assert_eq!(st.size_histogram.values().sum::<usize>(), st.k);
        prop_assert_eq!(st.size_histogram.iter().map(|(r, c)| *r as usize * c).sum::<usize>(), st.n);
        let ks = p.cluster_count_trajectory();
        prop_assert_eq!(*ks.last().unwrap(), st.k);
        prop_assert!(ks.windows(2).all(|w| w[1] == w[0] || w[1] == w[0] + 1));
        for j in 0..st.k {
            prop_assert_eq!(*p.cluster_trajectory(j).last().unwrap(), st.sizes[j]);
        }
    }
}

#[test]
fn five_partitions_of_three() {
    let mut seen = std::collections::HashSet::new();
    for a in 0..3u8 {
        for b in 0..3u8 {
            for c in 0..3u8 {
                seen.insert(Partition::canonicalize([a, b, c]).unwrap());
            }
        }
    }
    assert_eq!(seen.len(), 5);
}

#[test]
fn string_tokens() {
    let p = Partition::canonicalize(["x", "y", "x", "z"]).unwrap();
    assert_eq!(p.labels(), vec![1, 2, 1, 3]);
    assert!(Partition::canonicalize(Vec::<&str>::new()).is_err());
}
