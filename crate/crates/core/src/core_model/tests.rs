use super::*;

use proptest::prelude::*;
use rand::Rng;

use crate::property_harness::gen::{self, Fixing};
use crate::stdlib_seq::SeqValue;
use crate::testutil::{rng, ty};

fn random_elem(rng: &mut impl Rng, depth: u32) -> ElemType {
    match rng.gen_range(0..if depth == 0 { 3 } else { 5 }) {
        0 => ElemType::Int,
        1 => ElemType::Str,
        2 => ElemType::Bool,
        3 => ElemType::Tuple((0..rng.gen_range(1..=3)).map(|_| random_elem(rng, depth - 1)).collect()),
        _ => ElemType::Set(Box::new(random_elem(rng, depth - 1))),
    }
}

fn random_lattice(rng: &mut impl Rng, depth: u32) -> Lattice {
    match rng.gen_range(0..if depth == 0 { 2 } else { 3 }) {
        0 => Lattice::MaxNat,
        1 => Lattice::SetUnion(random_elem(rng, 1)),
        _ => Lattice::Product(
            Box::new(random_lattice(rng, depth - 1)),
            Box::new(random_lattice(rng, depth - 1)),
        ),
    }
}

fn random_type(rng: &mut impl Rng, depth: u32) -> StreamType {
    let tag = match rng.gen_range(0..if depth == 0 { 5 } else { 6 }) {
        0 => CollectionTypeTag::Seq(random_elem(rng, 1)),
        1 => CollectionTypeTag::Set(random_elem(rng, 1)),
        2 => CollectionTypeTag::ZSet(random_elem(rng, 1)),
        3 => CollectionTypeTag::LVar(random_lattice(rng, 1)),
        4 => CollectionTypeTag::Nat,
        _ => CollectionTypeTag::Nested((0..rng.gen_range(1..=2)).map(|_| random_type(rng, depth - 1)).collect()),
    };
    let bound = if rng.gen() { Boundedness::Bounded } else { Boundedness::Unbounded };
    StreamType::new(tag, bound)
}

#[test]
fn rank_is_zero_padded_lexicographic() {
    assert!(Rank(vec![1, 0]) > Rank(vec![0, 9]));
    assert!(Rank(vec![0, 1]) > Rank(vec![0]));
    assert_eq!(Rank(vec![2]).cmp(&Rank(vec![2, 0, 0])), Ordering::Equal);
    assert_eq!(Rank::concat([Rank(vec![1]), Rank(vec![2, 3])]), Rank(vec![1, 2, 3]));
}

#[test]
fn subtyping_only_widens_boundedness() {
    let b = ty("seq<int>:B");
    let u = ty("seq<int>:U");
    assert!(subtype(&b, &u));
    assert!(subtype(&b, &b));
    assert!(!subtype(&u, &b));
    assert!(!subtype(&ty("set<int>:B"), &u));
    assert!(!subtype(&ty("[seq<int>:B]:B"), &ty("[seq<int>:U]:B")));
    assert!(subtype_all(&[b.clone(), u.clone()], &[u.clone(), u.clone()]));
    assert!(!subtype_all(&[b], &[u.clone(), u]));
}

#[test]
fn boundedness_join_is_bounded_only_when_both_are() {
    use Boundedness::*;
    assert_eq!(Bounded.join(Bounded), Bounded);
    assert_eq!(Bounded.join(Unbounded), Unbounded);
    assert_eq!(Unbounded.join(Bounded), Unbounded);
}

#[test]
fn language_mismatch_is_rejected() {
    let c = Collection::Seq(SeqValue::default());
    let d = Delta::Nat(crate::stdlib_seq::SingletonNat::new(Some(1), false));
    assert_eq!(c.concat(&d), Err(ConcatError::PayloadShapeMismatch("seq")));
    assert!(Collection::concat_all(&[c], &[]).is_err());
}

#[test]
fn take_content_splits_flat_values() {
    let c = Collection::Seq(SeqValue::ints(&[2, 1], true));
    let (d, rest) = c.take_content().unwrap();
    assert_eq!(rest, Collection::Seq(SeqValue::ints(&[], true)));
    assert_eq!(Collection::Seq(SeqValue::default()).concat(&d).unwrap().terminate(), c);
    assert!(Collection::bottom(&ty("[nat:B]:U").collection).take_content().is_none());
}

#[test]
fn empty_deltas_are_recognised() {
    assert!(Delta::Empty.is_empty());
    assert!(!Delta::End.is_empty());
    assert!(Delta::Seq(SeqValue::default()).is_empty());
    assert!(!Delta::Seq(SeqValue::ints(&[], true)).is_empty());
}

proptest! {
    #[test]
    fn type_syntax_round_trips(seed in any::<u64>()) {
        let t = random_type(&mut rng(seed), 2);
        let back: StreamType = t.to_string().parse().unwrap();
        prop_assert_eq!(back, t);
    }

    #[test]
    fn rank_order_is_total_and_transitive(a in prop::collection::vec(0u64..3, 0..4),
                                          b in prop::collection::vec(0u64..3, 0..4),
                                          c in prop::collection::vec(0u64..3, 0..4)) {
        let (a, b, c) = (Rank(a), Rank(b), Rank(c));
        prop_assert_eq!(a.cmp(&b), b.cmp(&a).reverse());
        if a <= b && b <= c {
            prop_assert!(a <= c);
        }
    }

    #[test]
    fn collection_laws_hold(seed in any::<u64>()) {
        let mut r = rng(seed);
        let t = random_type(&mut r, 1);
        let c = gen::collection(&t.collection, Fixing::Random, false, &mut r);
        prop_assert!(c.member(&t.collection));
        prop_assert_eq!(c.concat(&Delta::Empty).unwrap(), c.clone());
        let f = c.fix();
        prop_assert!(f.is_fixed());
        prop_assert!(f.member(&t.collection));
        let d = gen::delta(&c, &t.collection, &mut r);
        let next = c.concat(&d).unwrap();
        prop_assert!(next.member(&t.collection));
        if c.is_fixed() {
            prop_assert_eq!(next, c.clone());
        }
        let b = Collection::bottom(&t.collection);
        prop_assert!(b.member(&t.collection));
        prop_assert_eq!(b.content_size(), 0);
        prop_assert_eq!(c.bottom_like(), b);
    }

    #[test]
    fn whole_value_delta_rebuilds_from_bottom(seed in any::<u64>()) {
        let mut r = rng(seed);
        let t = random_type(&mut r, 1);
        let c = gen::collection(&t.collection, Fixing::Random, false, &mut r);
        prop_assert_eq!(Collection::bottom(&t.collection).concat(&c.as_delta()).unwrap(), c);
    }
}
