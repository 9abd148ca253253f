use proptest::prelude::*;
use skewlab::{Letter, ReducedWord};

fn raw_letters(max: usize) -> impl Strategy<Value = Vec<Letter>> {
    prop::collection::vec((0usize..4).prop_map(Letter::from_index), 0..max)
}

fn word(max: usize) -> impl Strategy<Value = ReducedWord> {
    raw_letters(max).prop_map(ReducedWord::reduce)
}

/// Reduction by repeated deletion of adjacent inverse pairs.
fn reduce_by_rewriting(raw: &[Letter]) -> Vec<Letter> {
    let mut v = raw.to_vec();
    loop {
        match v.windows(2).position(|p| p[0].inverse() == p[1]) {
            Some(i) => {
                v.drain(i..i + 2);
            }
            None => return v,
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10_000))]

    #[test]
    fn multiplication_is_associative(u in word(24), v in word(24), w in word(24)) {
        prop_assert_eq!(u.multiply(&v).multiply(&w), u.multiply(&v.multiply(&w)));
    }

    #[test]
    fn product_length_is_bounded(u in word(40), v in word(40)) {
        let n = u.multiply(&v).len();
        prop_assert!(n <= u.len() + v.len());
        prop_assert!(n >= u.len().abs_diff(v.len()));
    }

    #[test]
    fn reduce_is_idempotent(raw in raw_letters(60)) {
        let once = ReducedWord::reduce(raw.clone());
        let twice = ReducedWord::reduce(once.letters().iter().copied());
        prop_assert_eq!(&once, &twice);
        let rewritten = reduce_by_rewriting(&raw);
        prop_assert_eq!(once.letters(), rewritten.as_slice());
    }

    #[test]
    fn inverse_cancels(u in word(40)) {
        prop_assert!(u.multiply(&u.inverse()).is_empty());
        prop_assert!(u.inverse().multiply(&u).is_empty());
    }

    #[test]
    fn text_round_trip(u in word(40)) {
        prop_assert_eq!(u.to_string().parse::<ReducedWord>().unwrap(), u);
    }
}
