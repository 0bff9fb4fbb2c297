use std::collections::BTreeMap;

use polyglue_core::surface::{random_surface, DomainComponent, NodedSurface, PointRef};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The same surface with component ids and point labels renamed and the
/// component and node lists shuffled.
fn relabeled(s: &NodedSurface, rng: &mut ChaCha8Rng) -> NodedSurface {
    let mut ids: Vec<String> = s.components().iter().map(|c| c.id.clone()).collect();
    ids.shuffle(rng);
    let rename: BTreeMap<String, String> = s
        .components()
        .iter()
        .zip(&ids)
        .map(|(c, n)| (c.id.clone(), format!("v{n}")))
        .collect();
    let point = |p: &PointRef| PointRef::new(rename[&p.component].clone(), format!("q{}", p.point));
    let mut components: Vec<DomainComponent> = s
        .components()
        .iter()
        .map(|c| DomainComponent::new(rename[&c.id].clone(), c.genus))
        .collect();
    components.shuffle(rng);
    let marked = s.marked().iter().map(point).collect();
    let mut nodes: Vec<(PointRef, PointRef)> = s.nodes().iter().map(|(x, y)| (point(y), point(x))).collect();
    nodes.shuffle(rng);
    NodedSurface::new(components, marked, nodes, s.is_ordered()).unwrap()
}

fn chain(genera: &[u32]) -> NodedSurface {
    let components = genera
        .iter()
        .enumerate()
        .map(|(i, &g)| DomainComponent::new(format!("c{i}"), g))
        .collect();
    let nodes = (1..genera.len())
        .map(|i| (PointRef::new(format!("c{}", i - 1), "r"), PointRef::new(format!("c{i}"), "l")))
        .collect();
    NodedSurface::new(components, vec![], nodes, true).unwrap()
}

#[test]
fn chain_of_three_spheres_has_genus_zero() {
    assert_eq!(chain(&[0, 0, 0]).arithmetic_genus().unwrap(), 0);
}

#[test]
fn torus_sphere_torus_chain_collapses_to_one_node() {
    let s = chain(&[1, 0, 1]).stabilize().unwrap();
    assert_eq!(s.components().len(), 2);
    assert_eq!(s.nodes().len(), 1);
    let (x, y) = &s.nodes()[0];
    assert_ne!(x.component, y.component);
    assert_eq!(s.arithmetic_genus().unwrap(), 2);
}

#[test]
fn long_sphere_chains_between_tori_weed_in_any_order() {
    let s = chain(&[1, 0, 0, 0, 0, 1]);
    let reference = s.stabilize().unwrap().canonical_form().unwrap();
    assert_eq!(reference, chain(&[1, 1]).canonical_form().unwrap());
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut ids: Vec<String> = (0..6).map(|i| format!("c{i}")).collect();
    for _ in 0..20 {
        ids.shuffle(&mut rng);
        assert_eq!(s.stabilize_with_order(&ids).unwrap().canonical_form().unwrap(), reference);
    }
}

#[test]
fn energy_stabilizes_maps_but_not_domains() {
    let s = chain(&[0, 0, 0]);
    assert!(!s.is_stable());
    let energy = [("c0", 1.0), ("c1", 0.5), ("c2", 2.0)]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect();
    let with = s.clone().with_energy(energy).unwrap();
    assert!(with.is_stable());
    // weeding ignores the map and sees an unstabilizable domain
    assert!(with.stabilize().is_err());
}

#[test]
fn negative_energy_is_rejected() {
    let e = [("c0".to_string(), -1.0)].into_iter().collect();
    assert!(chain(&[0]).with_energy(e).is_err());
}

#[test]
fn disconnected_surfaces_have_no_genus() {
    let s = NodedSurface::new(
        vec![DomainComponent::new("a", 1), DomainComponent::new("b", 1)],
        vec![],
        vec![],
        false,
    )
    .unwrap();
    assert!(!s.is_connected());
    assert!(s.arithmetic_genus().is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn stabilization_invariants(seed in any::<u64>(), max in 1usize..=8) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = random_surface(&mut rng, max);
        prop_assume!(s.stabilize().is_ok());
        let st = s.stabilize().unwrap();
        prop_assert_eq!(st.arithmetic_genus().unwrap(), s.arithmetic_genus().unwrap());
        prop_assert!(st.is_stable());
        prop_assert!(st.is_connected());
        prop_assert_eq!(&st.stabilize().unwrap(), &st);
        prop_assert_eq!(st.marked().len(), s.marked().len());
    }

    #[test]
    fn canonical_form_ignores_labels(seed in any::<u64>(), max in 1usize..=6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = random_surface(&mut rng, max);
        let r = relabeled(&s, &mut rng);
        prop_assert_eq!(r.canonical_form().unwrap(), s.canonical_form().unwrap());
        prop_assert_eq!(r.arithmetic_genus().unwrap(), s.arithmetic_genus().unwrap());
    }

    #[test]
    fn forgetting_drops_one_mark_and_keeps_genus(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = random_surface(&mut rng, 6);
        prop_assume!(s.is_ordered() && s.stabilize().is_ok());
        let st = s.stabilize().unwrap();
        prop_assume!(st.marked().len() >= 2);
        let k = (seed % st.marked().len() as u64) as usize;
        prop_assume!(st.forget_marked_point(k).is_ok());
        let f = st.forget_marked_point(k).unwrap();
        prop_assert_eq!(f.marked().len(), st.marked().len() - 1);
        prop_assert_eq!(f.arithmetic_genus().unwrap(), st.arithmetic_genus().unwrap());
        prop_assert!(f.is_stable());
    }
}
