use microcluster::graphs::{degree_stats, partition_to_multigraph};
use microcluster::Partition;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn degrees_are_cluster_sizes_on_random_partitions() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..1000 {
        let n = 2 * rng.random_range(1..100);
        let width = rng.random_range(1..=n as u32);
        let raw: Vec<u32> = (0..n).map(|_| rng.random_range(0..width)).collect();
        let p = Partition::canonicalize(raw).unwrap();
        let g = partition_to_multigraph(&p).unwrap();
        assert_eq!(g.edge_count(), n / 2);
        assert!(!g.dropped_last);
        let d = degree_stats(&g);
        assert_eq!(d.degrees.iter().sum::<u64>() as usize, 2 * g.edge_count());
        assert_eq!(&d.degrees[..], p.sizes());
        assert_eq!(d.histogram.values().sum::<usize>(), g.vertex_count);
        let loops = g.edges.iter().filter(|(u, v)| u == v).count();
        assert_eq!(g.summary().self_loops, loops);
    }
}

#[test]
fn odd_length_drops_last_item() {
    let p = Partition::from_labels(&[1, 2, 1, 3, 2]).unwrap();
    let g = partition_to_multigraph(&p).unwrap();
    assert!(g.dropped_last);
    assert_eq!(g.edge_count(), 2);
    assert_eq!(g.edge_list(), "1 2\n1 3\n");
    assert!(partition_to_multigraph(&Partition::from_labels(&[1]).unwrap()).is_err());
}
