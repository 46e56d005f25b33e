use proptest::prelude::*;
use vervaat::engine::build_path;
use vervaat::{
    forward_reconstruct, multigamma_update, DrivingPair, StreamFactory, UniformSource,
    UniformStream, VervaatParams,
};

fn unit() -> impl Strategy<Value = f64> {
    0.0..1.0f64
}

proptest! {
    #[test]
    fn coupler_is_monotone(x in 0.0..50.0f64, dx in 0.0..50.0f64, w1 in unit(), w2 in unit()) {
        let pair = DrivingPair::new(w1, w2).unwrap();
        prop_assert!(multigamma_update(x, pair).unwrap() <= multigamma_update(x + dx, pair).unwrap());
    }

    #[test]
    fn dominating_walk_dominates(beta in 0.01..5.0f64, k in 0u64..40, frac in 0.0..=1.0f64, w1 in unit(), w2 in unit()) {
        let p = VervaatParams::new(beta).unwrap();
        let d = p.floor() + k;
        let x = frac * d as f64;
        let next = p.dominating_update(d, w1).unwrap();
        prop_assert!(next >= p.floor());
        prop_assert!(multigamma_update(x, DrivingPair::new(w1, w2).unwrap()).unwrap() <= next as f64);
    }

    #[test]
    fn paths_are_legal(beta in 0.05..2.5f64, seed in any::<u64>()) {
        let p = VervaatParams::new(beta).unwrap();
        let path = build_path(&p, &mut UniformStream::new(seed)).unwrap();
        let t = path.coalesce_index().unwrap();
        prop_assert_eq!(t, path.len());
        for s in 1..=t {
            let (newer, older) = (path.state(s - 1), path.state(s));
            prop_assert!(older >= p.floor());
            let held = newer == older && older == p.floor();
            prop_assert!(held || newer.abs_diff(older) == 1);
            let u = path.imputed_u()[s - 1];
            prop_assert!(u > 0.0 && u < 1.0);
            prop_assert_eq!(u > 2.0 / 3.0, path.forward_up(s));
            prop_assert_eq!(p.coalesces(u, older), s == t);
        }
    }
}

/// Counts violations over a fixed number of seeded random triples.
fn count_violations(n: usize, seed: u64, mut bad: impl FnMut(&mut UniformStream) -> bool) -> usize {
    let mut s = UniformStream::new(seed);
    (0..n).filter(|_| bad(&mut s)).count()
}

#[test]
fn monotonicity_million_triples() {
    let violations = count_violations(1_000_000, 11, |s| {
        let (a, b) = (20.0 * s.next_uniform(), 20.0 * s.next_uniform());
        let (x, y) = (a.min(b), a.max(b));
        let pair = DrivingPair::new(s.next_uniform(), s.next_uniform()).unwrap();
        multigamma_update(x, pair).unwrap() > multigamma_update(y, pair).unwrap()
    });
    assert_eq!(violations, 0);
}

#[test]
fn domination_million_tuples() {
    let params: Vec<VervaatParams> = [0.1, 0.25, 0.5, 1.0, 2.0, 4.0]
        .iter()
        .map(|&b| VervaatParams::new(b).unwrap())
        .collect();
    let violations = count_violations(1_000_000, 12, |s| {
        let p = &params[(s.next_uniform() * params.len() as f64) as usize];
        let d = p.floor() + (s.next_uniform() * 30.0) as u64;
        let x = s.next_uniform() * d as f64;
        let pair = DrivingPair::new(p.sample_w(s), p.sample_w(s)).unwrap();
        let next = p.dominating_update(d, pair.w1).unwrap();
        next < p.floor() || multigamma_update(x, pair).unwrap() > next as f64
    });
    assert_eq!(violations, 0);
}

#[test]
fn coalescence_consensus_ten_thousand_paths() {
    let factory = StreamFactory::new(13);
    for beta in [0.25, 1.0, 2.0] {
        let p = VervaatParams::new(beta).unwrap();
        for i in 0..10_000 {
            let mut src = factory.substream(i);
            let path = build_path(&p, &mut src).unwrap();
            let top = path.state(path.coalesce_index().unwrap()) as f64;
            let x: Vec<u64> = [0.0, top / 2.0, top]
                .iter()
                .map(|&start| forward_reconstruct(&p, &path, &mut src.clone(), start).unwrap().to_bits())
                .collect();
            assert!(x[0] == x[1] && x[1] == x[2], "beta {beta}, path {i}");
        }
    }
}
