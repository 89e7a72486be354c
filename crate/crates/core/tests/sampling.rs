mod common;

use liptest::distribution::{DistributionSpec, ProductDistribution, SeededRng};
use liptest::hypercube::{self, Edge, Vertex};
use proptest::prelude::*;

fn v(s: &str) -> Vertex {
    Vertex::parse(s).unwrap()
}

#[test]
fn vertex_mass_examples() {
    let uni = ProductDistribution::uniform(2).unwrap();
    assert_eq!(uni.vertex_mass(v("01")).unwrap(), 0.25);
    let one = ProductDistribution::new(vec![0.9]).unwrap();
    assert_eq!(one.vertex_mass(v("1")).unwrap(), 0.9);
    let three = ProductDistribution::new(vec![0.9, 0.2, 0.5]).unwrap();
    assert!((three.vertex_mass(v("101")).unwrap() - 0.36).abs() < 1e-15);
}

#[test]
fn edge_mass_examples() {
    let uni = ProductDistribution::uniform(2).unwrap();
    for e in hypercube::edges(2).unwrap() {
        assert_eq!(uni.edge_mass(e).unwrap(), 0.25);
    }
    let single = ProductDistribution::new(vec![0.3]).unwrap();
    let e = Edge::between(v("0"), v("1")).unwrap();
    assert!((single.edge_mass(e).unwrap() - 1.0).abs() < 1e-15);
    let skew = ProductDistribution::new(vec![0.9, 0.5]).unwrap();
    let e = Edge::between(v("10"), v("11")).unwrap();
    assert!((skew.edge_mass(e).unwrap() - 0.45).abs() < 1e-15);
}

#[test]
fn degenerate_probabilities_are_rejected() {
    assert!(ProductDistribution::new(vec![0.5, 0.0]).is_err());
    assert!(ProductDistribution::new(vec![1.0]).is_err());
    assert!(ProductDistribution::new(vec![f64::NAN]).is_err());
    assert!(ProductDistribution::new(vec![]).is_err());
    let d = ProductDistribution::uniform(2).unwrap();
    assert!(d.vertex_mass(v("010")).is_err());
}

#[test]
fn masses_normalize_up_to_twelve_dimensions() {
    let mut r = common::rng(1);
    for d in 1..=12 {
        let p = common::random_p(d, &mut r);
        let dist = ProductDistribution::new(p.clone()).unwrap();
        let total: f64 = hypercube::vertices(d)
            .unwrap()
            .map(|x| dist.vertex_mass(x).unwrap())
            .sum();
        assert!((total - 1.0).abs() < 1e-12, "d = {d}: {total}");
        for i in 1..=d {
            let matching: f64 = hypercube::dimension_edges(d, i)
                .unwrap()
                .map(|e| dist.endpoint_mass(e).unwrap())
                .sum();
            assert!((matching - 1.0).abs() < 1e-12, "d = {d}, i = {i}: {matching}");
        }
        let edges: f64 = hypercube::edges(d).unwrap().map(|e| dist.edge_mass(e).unwrap()).sum();
        assert!((edges - 1.0).abs() < 1e-12);
    }
}

#[test]
fn tiny_probabilities_do_not_underflow_to_garbage() {
    let mut p = vec![0.5; 62];
    p[0] = 1e-5;
    let dist = ProductDistribution::new(p).unwrap();
    let x = Vertex::new(62, 1).unwrap();
    let m = dist.vertex_mass(x).unwrap();
    let expected = (1e-5f64).ln() + 61.0 * 0.5f64.ln();
    assert!((m.ln() - expected).abs() < 1e-9);
}

#[test]
fn biased_coordinate_frequency() {
    let dist = ProductDistribution::new(vec![0.999]).unwrap();
    let mut rng = SeededRng::new(3);
    let n = 100_000;
    let ones = (0..n).filter(|_| dist.sample_vertex(&mut rng).coord(1) == 1).count();
    assert!((ones as f64 / n as f64 - 0.999).abs() < 0.005);
}

#[test]
fn uniform_vertex_and_edge_frequencies() {
    let dist = ProductDistribution::uniform(2).unwrap();
    let mut rng = SeededRng::new(4);
    let n = 100_000;
    let mut vc = [0usize; 4];
    let mut ec = std::collections::BTreeMap::new();
    for _ in 0..n {
        vc[dist.sample_vertex(&mut rng).index()] += 1;
        *ec.entry(dist.sample_edge(&mut rng)).or_insert(0usize) += 1;
    }
    for c in vc {
        assert!((c as f64 / n as f64 - 0.25).abs() < 0.01);
    }
    assert_eq!(ec.len(), 4);
    for c in ec.values() {
        assert!((*c as f64 / n as f64 - 0.25).abs() < 0.01);
    }
}

#[test]
fn single_dimension_edge_is_certain() {
    let dist = ProductDistribution::new(vec![0.3]).unwrap();
    let mut rng = SeededRng::new(5);
    let e = Edge::between(v("0"), v("1")).unwrap();
    assert!((0..1000).all(|_| dist.sample_edge(&mut rng) == e));
}

#[test]
fn edge_frequencies_match_enumerated_law() {
    let p = [0.9, 0.2, 0.5];
    let dist = ProductDistribution::new(p.to_vec()).unwrap();
    let law = common::edge_law(&p);
    let total: f64 = law.iter().map(|e| e.3).sum();
    assert!((total - 1.0).abs() < 1e-12);
    let mut rng = SeededRng::new(6);
    let n = 100_000;
    let mut counts = std::collections::HashMap::new();
    for _ in 0..n {
        let (x, y) = dist.sample_edge(&mut rng).endpoints();
        *counts.entry((x.bits(), y.bits())).or_insert(0usize) += 1;
    }
    for (x, y, _, m) in law {
        let f = *counts.get(&(x, y)).unwrap_or(&0) as f64 / n as f64;
        assert!((f - m).abs() < 0.01, "edge {x:b}-{y:b}: {f} vs {m}");
    }
}

#[test]
fn edge_sampler_total_variation_small_dimensions() {
    let mut r = common::rng(7);
    for d in 1..=4 {
        let p = common::random_p(d, &mut r);
        let dist = ProductDistribution::new(p.clone()).unwrap();
        let mut rng = SeededRng::new(d as u64);
        let n = 1_000_000;
        let mut counts = std::collections::HashMap::new();
        for _ in 0..n {
            let (x, y) = dist.sample_edge(&mut rng).endpoints();
            *counts.entry((x.bits(), y.bits())).or_insert(0usize) += 1;
        }
        let tv: f64 = common::edge_law(&p)
            .iter()
            .map(|&(x, y, _, m)| (*counts.get(&(x, y)).unwrap_or(&0) as f64 / n as f64 - m).abs())
            .sum::<f64>()
            / 2.0;
        assert!(tv < 0.01, "d = {d}: TV {tv}");
    }
}

#[test]
fn seeded_streams_replay() {
    let dist = ProductDistribution::new(vec![0.3, 0.6, 0.9]).unwrap();
    let draw = |seed| {
        let mut rng = SeededRng::new(seed);
        (0..50).map(|_| dist.sample_vertex(&mut rng)).collect::<Vec<_>>()
    };
    assert_eq!(draw(42), draw(42));
    assert_ne!(draw(42), draw(43));
    let root = SeededRng::new(42);
    let mut a = root.split(0);
    let mut b = root.split(1);
    let xs: Vec<_> = (0..20).map(|_| dist.sample_vertex(&mut a)).collect();
    let ys: Vec<_> = (0..20).map(|_| dist.sample_vertex(&mut b)).collect();
    assert_ne!(xs, ys);
}

#[test]
fn distribution_specs_parse() {
    let spec: DistributionSpec = serde_json::from_str("\"uniform\"").unwrap();
    assert_eq!(spec.resolve(3).unwrap().probs(), &[0.5, 0.5, 0.5]);
    let spec: DistributionSpec = serde_json::from_str("[0.1, 0.2]").unwrap();
    assert_eq!(spec.resolve(2).unwrap().probs(), &[0.1, 0.2]);
    assert!(spec.resolve(3).is_err());
    let spec: DistributionSpec = serde_json::from_str("\"zipf\"").unwrap();
    assert!(spec.resolve(2).is_err());
}

proptest! {
    #[test]
    fn mass_is_product_of_coordinates(p in prop::collection::vec(0.01f64..0.99, 1..16), bits: u64) {
        let d = p.len();
        let dist = ProductDistribution::new(p.clone()).unwrap();
        let x = Vertex::new(d, bits & ((1u64 << d) - 1)).unwrap();
        let m = dist.vertex_mass(x).unwrap();
        let expected = common::mass(&p, x.bits());
        prop_assert!((m - expected).abs() <= 1e-12 * expected.max(1e-300));
    }

    #[test]
    fn bitstrings_round_trip(d in 1usize..=62, bits: u64) {
        let mask = (1u64 << d) - 1;
        let x = Vertex::new(d, bits & mask).unwrap();
        let s = x.to_bitstring();
        prop_assert_eq!(s.len(), d);
        prop_assert_eq!(Vertex::parse(&s).unwrap(), x);
        for i in 1..=d {
            prop_assert_eq!(s.as_bytes()[i - 1] - b'0', x.coord(i));
        }
    }

    #[test]
    fn shortest_paths_have_hamming_length(d in 1usize..=20, a: u64, b: u64) {
        let mask = (1u64 << d) - 1;
        let (x, y) = (Vertex::new(d, a & mask).unwrap(), Vertex::new(d, b & mask).unwrap());
        let path = hypercube::shortest_path(x, y).unwrap();
        prop_assert_eq!(path.len(), hypercube::hamming_distance(x, y).unwrap());
        let mut cur = x;
        for (u, w) in path {
            prop_assert_eq!(u, cur);
            prop_assert_eq!(hypercube::hamming_distance(u, w).unwrap(), 1);
            cur = w;
        }
        prop_assert_eq!(cur, y);
    }
}
