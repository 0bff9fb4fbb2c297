//! Noded Riemann surfaces as decorated multigraphs.
//!
//! Components are vertices carrying a genus, nodal pairs are edges (self-loops
//! allowed) and marked points decorate vertices. The analytic data of a
//! surface plays no role here: genus, stability and the forgetful map only
//! depend on this graph.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::{Error, Result};

/// A special point: a point label on a component.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PointRef {
    pub component: String,
    pub point: String,
}

impl PointRef {
    pub fn new(component: impl Into<String>, point: impl Into<String>) -> Self {
        Self {
            component: component.into(),
            point: point.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PointKind {
    Marked,
    Nodal,
}

/// A special point together with its kind.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpecialPoint {
    pub at: PointRef,
    pub kind: PointKind,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DomainComponent {
    pub id: String,
    pub genus: u32,
}

impl DomainComponent {
    pub fn new(id: impl Into<String>, genus: u32) -> Self {
        Self {
            id: id.into(),
            genus,
        }
    }
}

/// Connected or disconnected noded surface with ordered or unordered marked
/// points and an optional per-component energy decoration.
#[derive(Debug, Clone, PartialEq)]
pub struct NodedSurface {
    components: Vec<DomainComponent>,
    marked: Vec<PointRef>,
    ordered: bool,
    nodes: Vec<(PointRef, PointRef)>,
    energy: Option<BTreeMap<String, f64>>,
}

impl NodedSurface {
    /// Validates and builds a surface. Components are kept sorted by id.
    pub fn new(
        mut components: Vec<DomainComponent>,
        marked: Vec<PointRef>,
        nodes: Vec<(PointRef, PointRef)>,
        ordered: bool,
    ) -> Result<Self> {
        components.sort_by(|a, b| a.id.cmp(&b.id));
        for w in components.windows(2) {
            if w[0].id == w[1].id {
                return Err(Error::InvalidSurface(format!(
                    "duplicate component id {:?}",
                    w[0].id
                )));
            }
        }
        let surface = Self {
            components,
            marked,
            ordered,
            nodes,
            energy: None,
        };
        let mut seen = BTreeSet::new();
        let endpoints = surface
            .marked
            .iter()
            .chain(surface.nodes.iter().flat_map(|(x, y)| [x, y]));
        for p in endpoints {
            if surface.index_of(&p.component).is_none() {
                return Err(Error::InvalidSurface(format!(
                    "point {:?} lies on unknown component {:?}",
                    p.point, p.component
                )));
            }
            if !seen.insert(p.clone()) {
                return Err(Error::InvalidSurface(format!(
                    "special point ({:?}, {:?}) used twice",
                    p.component, p.point
                )));
            }
        }
        Ok(surface)
    }

    /// Attaches an energy decoration (symplectic area per component).
    pub fn with_energy(mut self, energy: BTreeMap<String, f64>) -> Result<Self> {
        for (id, e) in &energy {
            if self.index_of(id).is_none() {
                return Err(Error::InvalidSurface(format!(
                    "energy given for unknown component {id:?}"
                )));
            }
            if !(e.is_finite() && *e >= 0.0) {
                return Err(Error::InvalidSurface(format!(
                    "energy {e} on {id:?} is not a non-negative number"
                )));
            }
        }
        self.energy = Some(energy);
        Ok(self)
    }

    pub fn components(&self) -> &[DomainComponent] {
        &self.components
    }

    pub fn marked(&self) -> &[PointRef] {
        &self.marked
    }

    pub fn nodes(&self) -> &[(PointRef, PointRef)] {
        &self.nodes
    }

    pub fn is_ordered(&self) -> bool {
        self.ordered
    }

    pub fn energy(&self) -> Option<&BTreeMap<String, f64>> {
        self.energy.as_ref()
    }

    fn index_of(&self, id: &str) -> Option<usize> {
        self.components
            .binary_search_by(|c| c.id.as_str().cmp(id))
            .ok()
    }

    /// All special points on a component, marked points first.
    pub fn special_points(&self, id: &str) -> Vec<SpecialPoint> {
        let marked = self
            .marked
            .iter()
            .filter(|p| p.component == id)
            .map(|p| SpecialPoint {
                at: p.clone(),
                kind: PointKind::Marked,
            });
        let nodal = self
            .nodes
            .iter()
            .flat_map(|(x, y)| [x, y])
            .filter(|p| p.component == id)
            .map(|p| SpecialPoint {
                at: p.clone(),
                kind: PointKind::Nodal,
            });
        marked.chain(nodal).collect()
    }

    fn special_counts(&self) -> Vec<usize> {
        let mut counts = vec![0usize; self.components.len()];
        let all = self
            .marked
            .iter()
            .chain(self.nodes.iter().flat_map(|(x, y)| [x, y]));
        for p in all {
            counts[self.index_of(&p.component).expect("validated")] += 1;
        }
        counts
    }

    pub fn is_connected(&self) -> bool {
        let n = self.components.len();
        if n == 0 {
            return false;
        }
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(parent: &mut [usize], mut i: usize) -> usize {
            while parent[i] != i {
                parent[i] = parent[parent[i]];
                i = parent[i];
            }
            i
        }
        let mut classes = n;
        for (x, y) in &self.nodes {
            let a = find(&mut parent, self.index_of(&x.component).expect("validated"));
            let b = find(&mut parent, self.index_of(&y.component).expect("validated"));
            if a != b {
                parent[a] = b;
                classes -= 1;
            }
        }
        classes == 1
    }

    /// `1 + #D + sum_C (g(C) - 1)`.
    pub fn arithmetic_genus(&self) -> Result<i64> {
        if !self.is_connected() {
            return Err(Error::NotConnected);
        }
        let sum: i64 = self
            .components
            .iter()
            .map(|c| c.genus as i64 - 1)
            .sum();
        Ok(1 + self.nodes.len() as i64 + sum)
    }

    /// Domain stability, or stable-map stability when an energy decoration is
    /// present.
    pub fn is_stable(&self) -> bool {
        let counts = self.special_counts();
        self.components.iter().zip(&counts).all(|(c, &n)| {
            let stable_domain = 2 * c.genus as usize + n >= 3;
            match &self.energy {
                None => stable_domain,
                Some(e) => stable_domain || e.get(&c.id).copied().unwrap_or(0.0) > 0.0,
            }
        })
    }

    /// Runs the weeding algorithm, visiting components in ascending id order.
    pub fn stabilize(&self) -> Result<Self> {
        self.stabilize_with_order(&[])
    }

    /// Runs the weeding algorithm, visiting the components listed in
    /// `priority` first (in that order) and the rest in ascending id order.
    pub fn stabilize_with_order(&self, priority: &[String]) -> Result<Self> {
        if !self.is_connected() {
            return Err(Error::NotConnected);
        }
        let total = 2 * self.arithmetic_genus()? + self.marked.len() as i64;
        if total < 3 {
            return Err(Error::Unstabilizable(total));
        }
        let mut s = self.clone();
        s.energy = None;
        loop {
            let counts = s.special_counts();
            let unstable = |idx: usize| 2 * s.components[idx].genus as usize + counts[idx] < 3;
            let listed = priority.iter().filter_map(|id| s.index_of(id));
            let victim = listed
                .chain(0..s.components.len())
                .find(|&idx| unstable(idx));
            let Some(idx) = victim else { break };
            s.weed(idx)?;
        }
        if let Some(energy) = &self.energy {
            let kept = energy
                .iter()
                .filter(|(id, _)| s.index_of(id).is_some())
                .map(|(id, e)| (id.clone(), *e))
                .collect();
            s.energy = Some(kept);
        }
        Ok(s)
    }

    fn weed(&mut self, idx: usize) -> Result<()> {
        let id = self.components[idx].id.clone();
        let no_rule = || Error::NoWeedingRule(id.clone());
        if self.components[idx].genus != 0 {
            return Err(no_rule());
        }
        // (node index, endpoint on this component, partner endpoint)
        let mut ends: Vec<(usize, PointRef)> = Vec::new();
        for (k, (x, y)) in self.nodes.iter().enumerate() {
            if x.component == id && y.component == id {
                return Err(no_rule());
            }
            if x.component == id {
                ends.push((k, y.clone()));
            } else if y.component == id {
                ends.push((k, x.clone()));
            }
        }
        let marks: Vec<usize> = (0..self.marked.len())
            .filter(|&i| self.marked[i].component == id)
            .collect();
        match (ends.len(), marks.len()) {
            (1, 0) => {
                self.nodes.remove(ends[0].0);
            }
            (2, 0) => {
                let (i, y) = ends[0].clone();
                let (j, y2) = ends[1].clone();
                let (hi, lo) = if i > j { (i, j) } else { (j, i) };
                self.nodes.remove(hi);
                self.nodes.remove(lo);
                self.nodes.push((y, y2));
            }
            (1, 1) => {
                let (k, partner) = ends[0].clone();
                self.nodes.remove(k);
                self.marked[marks[0]] = partner;
            }
            _ => return Err(no_rule()),
        }
        self.components.remove(idx);
        Ok(())
    }

    /// Removes marked point `index` and stabilizes.
    pub fn forget_marked_point(&self, index: usize) -> Result<Self> {
        if !self.ordered {
            return Err(Error::InvalidSurface(
                "forgetting a point requires ordered marked points".to_string(),
            ));
        }
        if index >= self.marked.len() {
            return Err(Error::InvalidIndex {
                index,
                len: self.marked.len(),
            });
        }
        if !self.is_stable() {
            return Err(Error::InvalidSurface("surface is not stable".to_string()));
        }
        let mut s = self.clone();
        s.energy = None;
        s.marked.remove(index);
        s.stabilize()
    }

    /// Relabeling-invariant encoding: the lexicographically smallest
    /// encoding over all component relabelings that respect a refined
    /// invariant coloring. Point labels never enter the encoding.
    pub fn canonical_form(&self) -> Result<CanonicalForm> {
        let n = self.components.len();
        if n > 8 {
            return Err(Error::TooManyComponents(n));
        }
        let comp_of = |p: &PointRef| self.index_of(&p.component).expect("validated");
        let marks: Vec<usize> = self.marked.iter().map(comp_of).collect();
        let edges: Vec<(usize, usize)> = self
            .nodes
            .iter()
            .map(|(x, y)| (comp_of(x), comp_of(y)))
            .collect();

        let colors = refine_colors(self, &marks, &edges);
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by_key(|&i| colors[i]);
        let mut blocks: Vec<(usize, usize)> = Vec::new();
        let mut start = 0;
        for i in 1..=n {
            if i == n || colors[order[i]] != colors[order[start]] {
                blocks.push((start, i));
                start = i;
            }
        }

        let mut best: Option<Vec<u32>> = None;
        let mut position = vec![0usize; n];
        loop {
            for (p, &c) in order.iter().enumerate() {
                position[c] = p;
            }
            let code = self.encode(&position, &marks, &edges);
            if best.as_ref().is_none_or(|b| code < *b) {
                best = Some(code);
            }
            // Odometer over per-block permutations.
            let mut advanced = false;
            for &(lo, hi) in &blocks {
                if next_permutation(&mut order[lo..hi]) {
                    advanced = true;
                    break;
                }
            }
            if !advanced {
                break;
            }
        }
        Ok(CanonicalForm(best.unwrap_or_default()))
    }

    fn encode(&self, position: &[usize], marks: &[usize], edges: &[(usize, usize)]) -> Vec<u32> {
        let n = self.components.len();
        let mut code = Vec::with_capacity(3 + n + marks.len() + 2 * edges.len());
        code.push(self.ordered as u32);
        code.push(n as u32);
        let mut genus = vec![0u32; n];
        for (i, c) in self.components.iter().enumerate() {
            genus[position[i]] = c.genus;
        }
        code.extend(genus);
        let mut m: Vec<u32> = marks.iter().map(|&c| position[c] as u32).collect();
        if !self.ordered {
            m.sort_unstable();
        }
        code.push(m.len() as u32);
        code.extend(m);
        let mut e: Vec<(u32, u32)> = edges
            .iter()
            .map(|&(x, y)| {
                let (a, b) = (position[x] as u32, position[y] as u32);
                if a <= b {
                    (a, b)
                } else {
                    (b, a)
                }
            })
            .collect();
        e.sort_unstable();
        code.push(e.len() as u32);
        for (a, b) in e {
            code.push(a);
            code.push(b);
        }
        code
    }
}

/// Opaque canonical encoding of a surface up to relabeling.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct CanonicalForm(pub Vec<u32>);

fn refine_colors(s: &NodedSurface, marks: &[usize], edges: &[(usize, usize)]) -> Vec<usize> {
    let n = s.components.len();
    let mut keys: Vec<Vec<u32>> = (0..n)
        .map(|i| {
            let mut key = vec![s.components[i].genus];
            let loops = edges.iter().filter(|&&(x, y)| x == i && y == i).count();
            key.push(loops as u32);
            if s.ordered {
                key.extend(
                    marks
                        .iter()
                        .enumerate()
                        .filter(|&(_, &c)| c == i)
                        .map(|(k, _)| k as u32),
                );
            } else {
                key.push(marks.iter().filter(|&&c| c == i).count() as u32);
            }
            key
        })
        .collect();
    let mut colors = rank(&keys);
    loop {
        let classes = colors.iter().collect::<BTreeSet<_>>().len();
        keys = (0..n)
            .map(|i| {
                let mut nb: Vec<u32> = edges
                    .iter()
                    .filter_map(|&(x, y)| match (x == i, y == i) {
                        (true, false) => Some(colors[y] as u32),
                        (false, true) => Some(colors[x] as u32),
                        _ => None,
                    })
                    .collect();
                nb.sort_unstable();
                let mut key = vec![colors[i] as u32];
                key.extend(nb);
                key
            })
            .collect();
        let next = rank(&keys);
        if next.iter().collect::<BTreeSet<_>>().len() == classes {
            return next;
        }
        colors = next;
    }
}

fn rank(keys: &[Vec<u32>]) -> Vec<usize> {
    let distinct: BTreeSet<&Vec<u32>> = keys.iter().collect();
    let table: BTreeMap<&Vec<u32>, usize> = distinct.into_iter().zip(0..).collect();
    keys.iter().map(|k| table[k]).collect()
}

/// Advances to the next lexicographic permutation; on the last one resets to
/// the first and returns false.
fn next_permutation(v: &mut [usize]) -> bool {
    if v.len() < 2 {
        return false;
    }
    let mut i = v.len() - 1;
    while i > 0 && v[i - 1] >= v[i] {
        i -= 1;
    }
    if i == 0 {
        v.reverse();
        return false;
    }
    let mut j = v.len() - 1;
    while v[j] <= v[i - 1] {
        j -= 1;
    }
    v.swap(i - 1, j);
    v[i..].reverse();
    true
}

/// Random connected surface with at most `max_components` components and
/// `2 g_a + #M >= 3`. Point labels are unique per surface.
pub fn random_surface<R: Rng>(rng: &mut R, max_components: usize) -> NodedSurface {
    let n = rng.random_range(1..=max_components.max(1));
    let components: Vec<DomainComponent> = (0..n)
        .map(|i| {
            let genus = match rng.random_range(0..10) {
                0..=6 => 0,
                7 | 8 => 1,
                _ => 2,
            };
            DomainComponent::new(format!("c{i}"), genus)
        })
        .collect();
    let mut label = 0usize;
    let mut fresh = |c: usize| {
        label += 1;
        PointRef::new(format!("c{c}"), format!("p{label}"))
    };
    let mut nodes = Vec::new();
    for i in 1..n {
        let j = rng.random_range(0..i);
        nodes.push((fresh(i), fresh(j)));
    }
    let extra = rng.random_range(0..=2);
    for _ in 0..extra {
        let i = rng.random_range(0..n);
        let j = rng.random_range(0..n);
        nodes.push((fresh(i), fresh(j)));
    }
    let mut marked = Vec::new();
    for _ in 0..rng.random_range(0..=4) {
        marked.push(fresh(rng.random_range(0..n)));
    }
    let genus = 1 + nodes.len() as i64 + components.iter().map(|c| c.genus as i64 - 1).sum::<i64>();
    while 2 * genus + (marked.len() as i64) < 3 {
        marked.push(fresh(rng.random_range(0..n)));
    }
    let ordered = rng.random_bool(0.5);
    NodedSurface::new(components, marked, nodes, ordered).expect("generated surface is valid")
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn p(c: &str, x: &str) -> PointRef {
        PointRef::new(c, x)
    }

    fn chain3() -> NodedSurface {
        NodedSurface::new(
            vec![
                DomainComponent::new("a", 0),
                DomainComponent::new("b", 0),
                DomainComponent::new("c", 0),
            ],
            vec![],
            vec![(p("a", "x"), p("b", "y")), (p("b", "z"), p("c", "w"))],
            false,
        )
        .unwrap()
    }

    #[test]
    fn genus_examples() {
        let torus = NodedSurface::new(vec![DomainComponent::new("t", 1)], vec![], vec![], false).unwrap();
        assert_eq!(torus.arithmetic_genus(), Ok(1));
        let self_node = NodedSurface::new(
            vec![DomainComponent::new("s", 0)],
            vec![],
            vec![(p("s", "x"), p("s", "y"))],
            false,
        )
        .unwrap();
        assert_eq!(self_node.arithmetic_genus(), Ok(1));
        assert_eq!(chain3().arithmetic_genus(), Ok(0));
    }

    #[test]
    fn connectivity() {
        let two = NodedSurface::new(
            vec![DomainComponent::new("a", 0), DomainComponent::new("b", 0)],
            vec![],
            vec![],
            false,
        )
        .unwrap();
        assert!(!two.is_connected());
        assert_eq!(two.arithmetic_genus(), Err(Error::NotConnected));
        let joined = NodedSurface::new(
            two.components().to_vec(),
            vec![],
            vec![(p("a", "x"), p("b", "y"))],
            false,
        )
        .unwrap();
        assert!(joined.is_connected());
    }

    #[test]
    fn validation_rejects_reused_points() {
        let r = NodedSurface::new(
            vec![DomainComponent::new("a", 0)],
            vec![p("a", "x")],
            vec![(p("a", "x"), p("a", "y"))],
            false,
        );
        assert!(matches!(r, Err(Error::InvalidSurface(_))));
        let dup = NodedSurface::new(
            vec![DomainComponent::new("a", 0), DomainComponent::new("a", 1)],
            vec![],
            vec![],
            false,
        );
        assert!(dup.is_err());
    }

    #[test]
    fn stability_examples() {
        let sphere3 = NodedSurface::new(
            vec![DomainComponent::new("s", 0)],
            vec![p("s", "1"), p("s", "2"), p("s", "3")],
            vec![],
            true,
        )
        .unwrap();
        assert!(sphere3.is_stable());
        let torus = NodedSurface::new(vec![DomainComponent::new("t", 1)], vec![], vec![], false).unwrap();
        assert!(!torus.is_stable());

        // sphere with two nodes carrying energy, between two stable tori
        let s = NodedSurface::new(
            vec![
                DomainComponent::new("A", 1),
                DomainComponent::new("s", 0),
                DomainComponent::new("B", 1),
            ],
            vec![],
            vec![(p("A", "x"), p("s", "y")), (p("s", "z"), p("B", "w"))],
            false,
        )
        .unwrap();
        assert!(!s.is_stable());
        let mut energy = BTreeMap::new();
        energy.insert("s".to_string(), 0.5);
        assert!(s.clone().with_energy(energy).unwrap().is_stable());
    }

    #[test]
    fn weeding_case_one() {
        let s = NodedSurface::new(
            vec![DomainComponent::new("t", 1), DomainComponent::new("s", 0)],
            vec![p("t", "m1")],
            vec![(p("t", "x"), p("s", "y"))],
            true,
        )
        .unwrap();
        let out = s.stabilize().unwrap();
        assert_eq!(out.components(), &[DomainComponent::new("t", 1)]);
        assert_eq!(out.marked(), &[p("t", "m1")]);
        assert!(out.nodes().is_empty());
    }

    #[test]
    fn weeding_case_two() {
        let s = NodedSurface::new(
            vec![
                DomainComponent::new("A", 1),
                DomainComponent::new("s", 0),
                DomainComponent::new("B", 1),
            ],
            vec![],
            vec![(p("A", "x"), p("s", "y")), (p("s", "z"), p("B", "w"))],
            false,
        )
        .unwrap();
        let out = s.stabilize().unwrap();
        assert_eq!(out.components().len(), 2);
        assert_eq!(out.nodes(), &[(p("A", "x"), p("B", "w"))]);
        assert_eq!(out.arithmetic_genus(), s.arithmetic_genus());
    }

    #[test]
    fn weeding_case_three_via_forget() {
        // stable: sphere s with m1, m2 and a node to a torus with one mark
        let s = NodedSurface::new(
            vec![DomainComponent::new("T", 1), DomainComponent::new("s", 0)],
            vec![p("s", "m1"), p("s", "m2"), p("T", "m3")],
            vec![(p("s", "x"), p("T", "y"))],
            true,
        )
        .unwrap();
        assert!(s.is_stable());
        let out = s.forget_marked_point(1).unwrap();
        assert_eq!(out.components(), &[DomainComponent::new("T", 1)]);
        assert_eq!(out.marked(), &[p("T", "y"), p("T", "m3")]);
        assert!(out.nodes().is_empty());
    }

    #[test]
    fn forget_simple() {
        let s = NodedSurface::new(
            vec![DomainComponent::new("s", 0)],
            vec![p("s", "1"), p("s", "2"), p("s", "3"), p("s", "4")],
            vec![],
            true,
        )
        .unwrap();
        let out = s.forget_marked_point(3).unwrap();
        assert_eq!(out.marked().len(), 3);
        assert_eq!(out.marked()[2], p("s", "3"));
        assert!(matches!(
            s.forget_marked_point(4),
            Err(Error::InvalidIndex { index: 4, len: 4 })
        ));
        let torus = NodedSurface::new(
            vec![DomainComponent::new("t", 1)],
            vec![p("t", "1"), p("t", "2")],
            vec![],
            true,
        )
        .unwrap();
        let out = torus.forget_marked_point(1).unwrap();
        assert_eq!(out.marked(), &[p("t", "1")]);
        assert!(out.is_stable());
    }

    #[test]
    fn unstabilizable_and_fixed_points() {
        assert!(matches!(chain3().stabilize(), Err(Error::Unstabilizable(0))));
        let sphere3 = NodedSurface::new(
            vec![DomainComponent::new("s", 0)],
            vec![p("s", "1"), p("s", "2"), p("s", "3")],
            vec![],
            false,
        )
        .unwrap();
        assert_eq!(sphere3.stabilize().unwrap(), sphere3);
    }

    #[test]
    fn canonical_form_examples() {
        let relabeled = NodedSurface::new(
            vec![
                DomainComponent::new("z", 0),
                DomainComponent::new("y", 0),
                DomainComponent::new("x", 0),
            ],
            vec![],
            vec![(p("y", "q"), p("z", "r")), (p("x", "u"), p("y", "v"))],
            false,
        )
        .unwrap();
        assert_eq!(chain3().canonical_form(), relabeled.canonical_form());

        let self_node = NodedSurface::new(
            vec![DomainComponent::new("s", 0)],
            vec![],
            vec![(p("s", "x"), p("s", "y"))],
            false,
        )
        .unwrap();
        let two = NodedSurface::new(
            vec![DomainComponent::new("a", 0), DomainComponent::new("b", 0)],
            vec![],
            vec![(p("a", "x"), p("b", "y"))],
            false,
        )
        .unwrap();
        assert_ne!(self_node.canonical_form(), two.canonical_form());
    }

    #[test]
    fn ordered_marks_distinguish_positions() {
        let mk = |first: &str| {
            NodedSurface::new(
                vec![DomainComponent::new("a", 1), DomainComponent::new("b", 2)],
                vec![p(first, "m1"), p("a", "m2")],
                vec![(p("a", "x"), p("b", "y"))],
                true,
            )
            .unwrap()
        };
        assert_ne!(mk("a").canonical_form(), mk("b").canonical_form());
    }

    #[test]
    fn too_many_components() {
        let comps: Vec<_> = (0..9).map(|i| DomainComponent::new(format!("c{i}"), 1)).collect();
        let s = NodedSurface::new(comps, vec![], vec![], false).unwrap();
        assert_eq!(s.canonical_form(), Err(Error::TooManyComponents(9)));
    }

    #[test]
    fn random_surfaces_weed_consistently() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let s = random_surface(&mut rng, 8);
            let out = s.stabilize().unwrap();
            assert!(out.is_stable());
            assert!(out.is_connected());
            assert_eq!(out.arithmetic_genus(), s.arithmetic_genus());
            assert_eq!(out.stabilize().unwrap(), out);
            let mut ids: Vec<String> = s.components().iter().map(|c| c.id.clone()).collect();
            ids.reverse();
            let alt = s.stabilize_with_order(&ids).unwrap();
            assert_eq!(alt.canonical_form(), out.canonical_form());
        }
    }
}
