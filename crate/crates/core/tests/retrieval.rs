mod common;

use std::sync::Arc;

use common::{random_query, synthetic_corpus, BruteBm25};
use hanrag::{Corpus, RetrievalConfig, Retriever};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn retriever(passages: Vec<hanrag::Passage>) -> Retriever {
    Retriever::new(
        Arc::new(Corpus::from_passages(passages).unwrap()),
        RetrievalConfig::default(),
    )
    .unwrap()
}

fn assert_matches_oracle(r: &Retriever, oracle: &BruteBm25, query: &str) {
    let n = r.corpus().doc_count();
    let got = r.retrieve(query, n);
    let want = oracle.rank(query);
    assert_eq!(
        got.iter().map(|p| p.passage.id.as_str()).collect::<Vec<_>>(),
        want.iter().map(|(id, _)| id.as_str()).collect::<Vec<_>>(),
        "ordering for {query:?}"
    );
    for (g, (_, s)) in got.iter().zip(&want) {
        assert!((g.score - s).abs() <= 1e-9, "{query:?}: {} vs {s}", g.score);
    }
    for (i, g) in got.iter().enumerate() {
        assert_eq!(g.rank, i + 1);
    }
}

#[test]
fn matches_brute_force_on_fixed_corpora() {
    for (size, seed) in [(50, 1), (120, 2), (200, 3)] {
        let passages = synthetic_corpus(size, seed);
        let oracle = BruteBm25::new(&passages, 1.2, 0.75);
        let r = retriever(passages);
        let mut rng = ChaCha8Rng::seed_from_u64(seed + 100);
        for _ in 0..100 {
            assert_matches_oracle(&r, &oracle, &random_query(&mut rng));
        }
    }
}

#[test]
fn disjoint_query_and_oversized_k() {
    let r = retriever(synthetic_corpus(50, 9));
    assert!(r.retrieve("qqq www", 10).is_empty());
    let all = r.retrieve("river", 1000);
    assert!(all.len() <= 50);
    assert!(all.iter().all(|p| p.score > 0.0));
}

#[test]
fn concurrent_callers_see_identical_rankings() {
    let r = retriever(synthetic_corpus(150, 4));
    let expected = r.retrieve("castle king river", 10);
    std::thread::scope(|s| {
        for _ in 0..4 {
            s.spawn(|| {
                for _ in 0..20 {
                    assert_eq!(r.retrieve("castle king river", 10), expected);
                }
            });
        }
    });
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn truncation_is_a_prefix(seed in 0u64..1000, size in 50usize..=120, k in 1usize..30) {
        let r = retriever(synthetic_corpus(size, seed));
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let q = random_query(&mut rng);
        let short = r.retrieve(&q, k);
        let long = r.retrieve(&q, k + 1);
        prop_assert!(short.len() <= long.len());
        prop_assert_eq!(&long[..short.len()], &short[..]);
    }

    #[test]
    fn any_corpus_matches_oracle(seed in 0u64..1000, size in 50usize..=200) {
        let passages = synthetic_corpus(size, seed);
        let oracle = BruteBm25::new(&passages, 1.2, 0.75);
        let r = retriever(passages);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xbeef);
        for _ in 0..5 {
            assert_matches_oracle(&r, &oracle, &random_query(&mut rng));
        }
    }
}
