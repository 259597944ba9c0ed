use proptest::prelude::*;

use cslab::cs_space::{depth, trace};
use cslab::e1::{
    blocks_agree_from, blowup_inverse, blowup_iso, cs_decode, cs_encode, reduce_f, BinaryGrid,
};
use cslab::partition::{bell_table, rank, unrank};
use cslab::{coarsens, meet_refine, PartitionPrefix, SetPartition};

fn partition(max_len: usize) -> impl Strategy<Value = SetPartition> {
    prop::collection::vec(0u32..5, 0..=max_len).prop_map(|v| SetPartition::from_labels(&v))
}

fn same_len_triple() -> impl Strategy<Value = (SetPartition, SetPartition, SetPartition)> {
    (1usize..9).prop_flat_map(|n| {
        let p = || prop::collection::vec(0u32..4, n).prop_map(|v| SetPartition::from_labels(&v));
        (p(), p(), p())
    })
}

fn grid(rows: usize, cols: usize) -> impl Strategy<Value = BinaryGrid> {
    prop::collection::vec(any::<bool>(), rows * cols).prop_map(move |bits| {
        let rows: Vec<Vec<bool>> = bits.chunks(cols).map(<[bool]>::to_vec).collect();
        BinaryGrid::from_rows(&rows).unwrap()
    })
}

proptest! {
    #[test]
    fn order_is_a_partial_order((a, b, c) in same_len_triple()) {
        prop_assert!(coarsens(&a, &a));
        if coarsens(&a, &b) && coarsens(&b, &a) {
            prop_assert_eq!(&a, &b);
        }
        if coarsens(&a, &b) && coarsens(&b, &c) {
            prop_assert!(coarsens(&a, &c));
        }
        prop_assert!(coarsens(&SetPartition::single_block(a.len()), &a));
        prop_assert!(coarsens(&a, &SetPartition::discrete(a.len())));
    }

    #[test]
    fn meet_is_least_common_refinement((a, b, c) in same_len_triple()) {
        let m = meet_refine(&a, &b).unwrap();
        prop_assert!(coarsens(&a, &m) && coarsens(&b, &m));
        if coarsens(&a, &c) && coarsens(&b, &c) {
            prop_assert!(coarsens(&m, &c));
        }
    }

    #[test]
    fn rank_round_trip(p in partition(12)) {
        let table = bell_table(p.len());
        prop_assert_eq!(unrank(p.len(), rank(&p, &table), &table), p);
    }

    #[test]
    fn text_round_trip(p in partition(12)) {
        prop_assert_eq!(p.to_string().parse::<SetPartition>().unwrap(), p);
    }

    #[test]
    fn encode_round_trip(p in partition(10).prop_filter("nonempty", |p| !p.is_empty())) {
        let a = PartitionPrefix::new(p);
        prop_assert_eq!(cs_decode(&cs_encode(&a).unwrap()).unwrap(), a);
    }

    #[test]
    fn approximation_at_depth(b in partition(12), n in 0usize..6) {
        let b = PartitionPrefix::new(b);
        prop_assume!(n < b.visible_blocks() && b.mu(n).unwrap() < b.len());
        let s = b.approx_r(n).unwrap();
        prop_assert_eq!(depth(&b, &s).unwrap(), n);
    }

    #[test]
    fn traces_nest(a in partition(12), b in partition(12), n in 0usize..5) {
        let (a, b) = (PartitionPrefix::new(a), PartitionPrefix::new(b));
        if let (Ok(lo), Ok(hi)) = (trace(&a, &b, n), trace(&a, &b, n + 1)) {
            prop_assert_eq!(hi.partition.restrict(lo.partition.len()), lo.partition);
        }
    }

    #[test]
    fn blowup_round_trip(d in partition(14), a in partition(8)) {
        let d = PartitionPrefix::new(d);
        let a = PartitionPrefix::new(a);
        prop_assume!(a.len() <= d.visible_blocks());
        let c = blowup_iso(&a, &d).unwrap();
        prop_assert!(coarsens(c.as_partition(), &d.as_partition().restrict(c.len())));
        prop_assert_eq!(blowup_inverse(&c, &d).unwrap(), a);
    }

    #[test]
    fn reduction_respects_row_tails(x in grid(4, 6), y in grid(4, 6), n0 in 0usize..4) {
        let mut y = y;
        for n in n0..4 {
            for m in 0..6 {
                y.set(n, m, x.get(n, m));
            }
        }
        let horizon = cslab::e1::max_window_len(4, 6);
        let (fx, fy) = (reduce_f(&x, horizon).unwrap(), reduce_f(&y, horizon).unwrap());
        prop_assert!(blocks_agree_from(&fx, &fy, 2 * n0 as u32));
    }
}
