use rand::seq::SliceRandom;
use rand::Rng;
use serde_json::{json, Value};
use std::collections::HashMap;

use super::{GeodesicSpace, SpaceKind, VertexRef, COINCIDENT};
use crate::error::{Error, Result};

/// A point of a metric tree: an edge and an offset measured from the edge's
/// lower (child) endpoint once the tree is rooted at its first vertex.
///
/// Canonical form: every vertex other than the root is `(edge to its parent, 0)`;
/// the root is `(its first incident edge, length)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TreePoint {
    pub edge: usize,
    pub offset: f64,
}

/// A finite tree with positive edge weights and its path-length metric.
#[derive(Debug, Clone)]
pub struct MetricTree {
    names: Vec<String>,
    /// Edges as given: (u, v, length).
    edges: Vec<(usize, usize, f64)>,
    root: usize,
    parent: Vec<usize>,
    /// Edge joining a non-root vertex to its parent.
    up_edge: Vec<usize>,
    /// Child endpoint of each edge.
    child: Vec<usize>,
    hop_depth: Vec<usize>,
    /// Weighted distance to the root.
    depth: Vec<f64>,
    /// Binary lifting table: `lift[k][v]` is the 2^k-th ancestor of `v`.
    lift: Vec<Vec<usize>>,
    root_edge: usize,
    leaves: Vec<usize>,
    total_length: f64,
}

impl MetricTree {
    /// Builds a tree from named vertices and weighted edges, rooted at the
    /// first vertex.
    pub fn new(names: Vec<String>, edges: Vec<(usize, usize, f64)>) -> Result<Self> {
        let n = names.len();
        if n < 2 {
            return Err(Error::Construction("metric tree needs at least two vertices".into()));
        }
        let mut seen = HashMap::new();
        for (i, name) in names.iter().enumerate() {
            if seen.insert(name.as_str(), i).is_some() {
                return Err(Error::Construction(format!("duplicate vertex name {name:?}")));
            }
        }
        let mut uf: Vec<usize> = (0..n).collect();
        fn find(uf: &mut [usize], mut v: usize) -> usize {
            while uf[v] != v {
                uf[v] = uf[uf[v]];
                v = uf[v];
            }
            v
        }
        let mut adj = vec![Vec::new(); n];
        for (i, &(u, v, w)) in edges.iter().enumerate() {
            if u >= n || v >= n {
                return Err(Error::Construction(format!("edge {i} references an unknown vertex")));
            }
            if u == v {
                return Err(Error::Construction(format!(
                    "edge {i} is a self-loop at {:?}",
                    names[u]
                )));
            }
            if !(w.is_finite() && w > 0.0) {
                return Err(Error::Construction(format!(
                    "edge ({:?}, {:?}) has nonpositive weight {w}",
                    names[u], names[v]
                )));
            }
            let (ru, rv) = (find(&mut uf, u), find(&mut uf, v));
            if ru == rv {
                return Err(Error::Construction(format!(
                    "edge ({:?}, {:?}) closes a cycle",
                    names[u], names[v]
                )));
            }
            uf[ru] = rv;
            adj[u].push((v, i));
            adj[v].push((u, i));
        }
        let r0 = find(&mut uf, 0);
        if let Some(v) = (1..n).find(|&v| find(&mut uf, v) != r0) {
            return Err(Error::Construction(format!(
                "tree is disconnected: vertex {:?} is unreachable from {:?}",
                names[v], names[0]
            )));
        }

        let root = 0;
        let mut parent = vec![root; n];
        let mut up_edge = vec![usize::MAX; n];
        let mut child = vec![usize::MAX; edges.len()];
        let mut hop_depth = vec![0; n];
        let mut depth = vec![0.0; n];
        let mut visited = vec![false; n];
        let mut queue = std::collections::VecDeque::from([root]);
        visited[root] = true;
        while let Some(u) = queue.pop_front() {
            for &(v, e) in &adj[u] {
                if !visited[v] {
                    visited[v] = true;
                    parent[v] = u;
                    up_edge[v] = e;
                    child[e] = v;
                    hop_depth[v] = hop_depth[u] + 1;
                    depth[v] = depth[u] + edges[e].2;
                    queue.push_back(v);
                }
            }
        }
        let levels = (usize::BITS - n.leading_zeros()) as usize;
        let mut lift = vec![parent.clone()];
        for k in 1..levels.max(1) {
            let prev = &lift[k - 1];
            let next = (0..n).map(|v| prev[prev[v]]).collect();
            lift.push(next);
        }
        let root_edge = adj[root].iter().map(|&(_, e)| e).min().expect("root has an edge");
        let leaves = (0..n).filter(|&v| adj[v].len() == 1).collect();
        let total_length = edges.iter().map(|e| e.2).sum();
        Ok(Self {
            names,
            edges,
            root,
            parent,
            up_edge,
            child,
            hop_depth,
            depth,
            lift,
            root_edge,
            leaves,
            total_length,
        })
    }

    pub fn vertex_count(&self) -> usize {
        self.names.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    /// Edges as supplied at construction: `(u, v, length)`.
    pub fn edges(&self) -> &[(usize, usize, f64)] {
        &self.edges
    }

    pub fn vertex_index(&self, r: &VertexRef) -> Result<usize> {
        match r {
            VertexRef::Index(i) if *i < self.names.len() => Ok(*i),
            VertexRef::Index(i) => Err(Error::config(format!("vertex index {i} out of range"))),
            VertexRef::Name(s) => self
                .names
                .iter()
                .position(|n| n == s)
                .ok_or_else(|| Error::config(format!("unknown vertex {s:?}"))),
        }
    }

    /// Canonical point of vertex `v`.
    pub fn vertex(&self, v: usize) -> TreePoint {
        if v == self.root {
            TreePoint {
                edge: self.root_edge,
                offset: self.edges[self.root_edge].2,
            }
        } else {
            TreePoint {
                edge: self.up_edge[v],
                offset: 0.0,
            }
        }
    }

    /// Point on the edge `(u, v)` at distance `offset` from `u`.
    pub fn point_on_edge(&self, u: usize, v: usize, offset: f64) -> Result<TreePoint> {
        let e = self
            .edges
            .iter()
            .position(|&(a, b, _)| (a, b) == (u, v) || (a, b) == (v, u))
            .ok_or_else(|| {
                Error::domain(format!(
                    "no edge between {:?} and {:?}",
                    self.names[u], self.names[v]
                ))
            })?;
        let len = self.edges[e].2;
        if !(0.0..=len).contains(&offset) {
            return Err(Error::domain(format!("offset {offset} outside [0, {len}]")));
        }
        let from_child = if self.child[e] == u { offset } else { len - offset };
        Ok(self.normalize(self.child[e], from_child))
    }

    /// The vertex this point coincides with, if any.
    pub fn as_vertex(&self, p: &TreePoint) -> Option<usize> {
        let c = self.child[p.edge];
        if p.offset == 0.0 {
            Some(c)
        } else if p.offset == self.edges[p.edge].2 {
            Some(self.parent[c])
        } else {
            None
        }
    }

    /// Maps a vertex permutation onto points. The permutation must be an
    /// automorphism of the weighted tree.
    pub fn permute(&self, perm: &[usize], p: &TreePoint) -> TreePoint {
        let (u, v, len) = self.edges[p.edge];
        let c = self.child[p.edge];
        let from_u = if c == u { p.offset } else { len - p.offset };
        let (pu, pv) = (perm[u], perm[v]);
        self.point_on_edge(pu, pv, from_u)
            .expect("permutation is a validated automorphism")
    }

    /// Checks that `perm` is a weight-preserving graph automorphism.
    pub fn check_automorphism(&self, perm: &[usize]) -> Result<()> {
        let n = self.names.len();
        if perm.len() != n {
            return Err(Error::config(format!(
                "permutation has length {}, tree has {n} vertices",
                perm.len()
            )));
        }
        let mut hit = vec![false; n];
        for &p in perm {
            if p >= n || std::mem::replace(&mut hit[p], true) {
                return Err(Error::config("vertex map is not a permutation"));
            }
        }
        for &(u, v, w) in &self.edges {
            let image = self.edges.iter().find(|&&(a, b, _)| {
                (a, b) == (perm[u], perm[v]) || (a, b) == (perm[v], perm[u])
            });
            match image {
                Some(&(_, _, w2)) if w2 == w => {}
                _ => {
                    return Err(Error::config(format!(
                        "permutation does not preserve edge ({:?}, {:?}, {w})",
                        self.names[u], self.names[v]
                    )))
                }
            }
        }
        Ok(())
    }

    fn edge_len_above(&self, c: usize) -> f64 {
        self.edges[self.up_edge[c]].2
    }

    fn normalize(&self, c: usize, t: f64) -> TreePoint {
        let len = self.edge_len_above(c);
        if t >= len {
            self.vertex(self.parent[c])
        } else {
            TreePoint {
                edge: self.up_edge[c],
                offset: t.max(0.0),
            }
        }
    }

    /// (child vertex, height above it, weighted depth of the point)
    fn locate(&self, p: &TreePoint) -> (usize, f64, f64) {
        let c = self.child[p.edge];
        (c, p.offset, self.depth[c] - p.offset)
    }

    fn lca(&self, mut a: usize, mut b: usize) -> usize {
        if self.hop_depth[a] < self.hop_depth[b] {
            std::mem::swap(&mut a, &mut b);
        }
        let mut diff = self.hop_depth[a] - self.hop_depth[b];
        let mut k = 0;
        while diff > 0 {
            if diff & 1 == 1 {
                a = self.lift[k][a];
            }
            diff >>= 1;
            k += 1;
        }
        if a == b {
            return a;
        }
        for k in (0..self.lift.len()).rev() {
            if self.lift[k][a] != self.lift[k][b] {
                a = self.lift[k][a];
                b = self.lift[k][b];
            }
        }
        self.parent[a]
    }

    /// Moves `s` toward the root starting from height `t` above vertex `c`.
    fn walk_up(&self, mut c: usize, mut t: f64, mut s: f64) -> TreePoint {
        loop {
            let room = self.edge_len_above(c) - t;
            if s <= room {
                return self.normalize(c, t + s);
            }
            s -= room;
            let p = self.parent[c];
            if p == self.root {
                return self.vertex(self.root);
            }
            c = p;
            t = 0.0;
        }
    }
}

impl GeodesicSpace for MetricTree {
    type Point = TreePoint;

    fn kind(&self) -> SpaceKind {
        SpaceKind::MetricTree
    }

    fn tolerance(&self) -> f64 {
        1e-9
    }

    fn validate(&self, p: &TreePoint) -> Result<()> {
        if p.edge >= self.edges.len() {
            return Err(Error::domain(format!("edge {} does not exist", p.edge)));
        }
        let len = self.edges[p.edge].2;
        if !(0.0..=len).contains(&p.offset) {
            return Err(Error::domain(format!(
                "offset {} outside [0, {len}] on edge {}",
                p.offset, p.edge
            )));
        }
        Ok(())
    }

    fn dist(&self, p: &TreePoint, q: &TreePoint) -> f64 {
        let (c1, t1, h1) = self.locate(p);
        let (c2, t2, h2) = self.locate(q);
        if c1 == c2 {
            return (t1 - t2).abs();
        }
        let l = self.lca(c1, c2);
        if l == c1 || l == c2 {
            (h1 - h2).abs()
        } else {
            (h1 - self.depth[l]) + (h2 - self.depth[l])
        }
    }

    fn combine(&self, p: &TreePoint, q: &TreePoint, lambda: f64) -> TreePoint {
        if lambda == 0.0 {
            return *p;
        }
        if lambda == 1.0 {
            return *q;
        }
        let d = self.dist(p, q);
        if d < COINCIDENT {
            return *p;
        }
        let (c1, t1, h1) = self.locate(p);
        let (c2, t2, _) = self.locate(q);
        if c1 == c2 {
            return self.normalize(c1, t1 + lambda * (t2 - t1));
        }
        let l = self.lca(c1, c2);
        if l == c1 {
            // p lies above q on q's root path
            self.walk_up(c2, t2, (1.0 - lambda) * d)
        } else if l == c2 {
            self.walk_up(c1, t1, lambda * d)
        } else {
            let ascent = h1 - self.depth[l];
            if lambda * d <= ascent {
                self.walk_up(c1, t1, lambda * d)
            } else {
                self.walk_up(c2, t2, (1.0 - lambda) * d)
            }
        }
    }

    fn base_point(&self) -> TreePoint {
        self.vertex(self.root)
    }

    fn scale(&self) -> f64 {
        self.total_length / 2.0
    }

    fn sample_point<R: Rng + ?Sized>(&self, rng: &mut R) -> TreePoint {
        if rng.gen_bool(0.15) {
            return self.vertex(rng.gen_range(0..self.names.len()));
        }
        let mut pick = rng.gen_range(0.0..self.total_length);
        let mut e = 0;
        while e + 1 < self.edges.len() && pick >= self.edges[e].2 {
            pick -= self.edges[e].2;
            e += 1;
        }
        let c = self.child[e];
        self.normalize(c, rng.gen_range(0.0..self.edges[e].2))
    }

    fn ray_point<R: Rng + ?Sized>(&self, a: &TreePoint, radius: f64, rng: &mut R) -> TreePoint {
        let leaf = *self.leaves.choose(rng).expect("trees have leaves");
        let target = self.vertex(leaf);
        let d = self.dist(a, &target);
        if d < COINCIDENT {
            return *a;
        }
        self.combine(a, &target, (radius / d).min(1.0))
    }

    fn is_finite(&self, p: &TreePoint) -> bool {
        p.offset.is_finite()
    }

    fn point_from_json(&self, value: &Value) -> Result<TreePoint> {
        let obj = value
            .as_object()
            .ok_or_else(|| Error::config(format!("tree point {value} must be an object")))?;
        let vref = |v: &Value| -> Result<usize> {
            let r: VertexRef = serde_json::from_value(v.clone())
                .map_err(|e| Error::config(format!("vertex reference {v}: {e}")))?;
            self.vertex_index(&r)
        };
        if let Some(v) = obj.get("vertex") {
            return Ok(self.vertex(vref(v)?));
        }
        let edge = obj
            .get("edge")
            .ok_or_else(|| Error::config(format!("tree point {value} needs `vertex` or `edge`")))?;
        let offset = obj
            .get("offset")
            .and_then(Value::as_f64)
            .ok_or_else(|| Error::config(format!("tree point {value} needs numeric `offset`")))?;
        let (u, v) = match edge {
            Value::Array(ends) if ends.len() == 2 => (vref(&ends[0])?, vref(&ends[1])?),
            Value::Number(n) => {
                let i = n.as_u64().ok_or_else(|| Error::config("edge index must be a u64"))? as usize;
                let &(u, v, _) = self
                    .edges
                    .get(i)
                    .ok_or_else(|| Error::config(format!("edge index {i} out of range")))?;
                (u, v)
            }
            other => return Err(Error::config(format!("bad edge reference {other}"))),
        };
        self.point_on_edge(u, v, offset)
    }

    fn point_to_json(&self, p: &TreePoint) -> Value {
        let c = self.child[p.edge];
        let up = self.parent[c];
        json!({
            "edge": [self.names[c], self.names[up]],
            "offset": p.offset,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::seeded_sampler;

    fn path_abc() -> MetricTree {
        MetricTree::new(
            vec!["A".into(), "B".into(), "C".into()],
            vec![(0, 1, 1.0), (1, 2, 2.0)],
        )
        .unwrap()
    }

    #[test]
    fn path_length_metric() {
        let t = path_abc();
        assert_eq!(t.dist(&t.vertex(0), &t.vertex(2)), 3.0);
        assert_eq!(t.dist(&t.vertex(2), &t.vertex(0)), 3.0);
        assert_eq!(t.dist(&t.vertex(1), &t.vertex(1)), 0.0);
    }

    #[test]
    fn third_of_the_way_is_the_middle_vertex() {
        let t = path_abc();
        let p = t.combine(&t.vertex(0), &t.vertex(2), 1.0 / 3.0);
        assert_eq!(t.as_vertex(&p), Some(1));
        assert_eq!(p, t.vertex(1));
    }

    #[test]
    fn construction_errors_name_the_defect() {
        let names = || vec!["A".to_string(), "B".into(), "C".into()];
        let zero = MetricTree::new(names(), vec![(0, 1, 0.0), (1, 2, 1.0)]).unwrap_err();
        assert!(zero.to_string().contains("nonpositive weight"), "{zero}");
        let cycle =
            MetricTree::new(names(), vec![(0, 1, 1.0), (1, 2, 1.0), (2, 0, 1.0)]).unwrap_err();
        assert!(cycle.to_string().contains("cycle"), "{cycle}");
        let split = MetricTree::new(names(), vec![(0, 1, 1.0)]).unwrap_err();
        assert!(split.to_string().contains("disconnected"), "{split}");
        let dup = MetricTree::new(vec!["A".into(), "A".into()], vec![(0, 1, 1.0)]).unwrap_err();
        assert!(dup.to_string().contains("duplicate"));
    }

    #[test]
    fn vertex_points_are_canonical() {
        let t = path_abc();
        // B approached along either incident edge gives the same representation
        let from_ab = t.point_on_edge(0, 1, 1.0).unwrap();
        let from_bc = t.point_on_edge(1, 2, 0.0).unwrap();
        assert_eq!(from_ab, from_bc);
        assert_eq!(from_ab.offset, 0.0);
    }

    fn star() -> MetricTree {
        // center 0 with three arms of two edges each
        let names = (0..7).map(|i| format!("v{i}")).collect();
        MetricTree::new(
            names,
            vec![
                (0, 1, 1.0),
                (1, 2, 0.5),
                (0, 3, 1.0),
                (3, 4, 0.5),
                (0, 5, 1.0),
                (5, 6, 0.5),
            ],
        )
        .unwrap()
    }

    #[test]
    fn branches_meet_at_the_lca() {
        let t = star();
        let p = t.point_on_edge(1, 2, 0.25).unwrap();
        let q = t.point_on_edge(3, 4, 0.5).unwrap();
        assert!((t.dist(&p, &q) - 2.75).abs() < 1e-15);
        let m = t.combine(&p, &q, 1.25 / 2.75);
        assert!(t.dist(&m, &t.vertex(0)) < 1e-15);
    }

    #[test]
    fn automorphism_rotates_arms() {
        let t = star();
        let perm = [0, 3, 4, 5, 6, 1, 2];
        t.check_automorphism(&perm).unwrap();
        let p = t.point_on_edge(1, 2, 0.1).unwrap();
        let q = t.permute(&perm, &p);
        assert_eq!(q, t.point_on_edge(3, 4, 0.1).unwrap());
        assert!(t.check_automorphism(&[1, 0, 2, 3, 4, 5, 6]).is_err());
    }

    #[test]
    fn json_round_trip() {
        let t = star();
        let mut rng = seeded_sampler(9);
        for _ in 0..50 {
            let p = t.sample_point(&mut rng);
            let back = t.point_from_json(&t.point_to_json(&p)).unwrap();
            assert!(t.dist(&p, &back) < 1e-15);
        }
        let v = t.point_from_json(&json!({"vertex": "v4"})).unwrap();
        assert_eq!(t.as_vertex(&v), Some(4));
    }

    #[test]
    fn offsets_outside_edge_rejected() {
        let t = path_abc();
        assert!(t.point_on_edge(0, 1, 1.5).is_err());
        assert!(t.validate(&TreePoint { edge: 0, offset: -0.1 }).is_err());
        assert!(t.validate(&TreePoint { edge: 7, offset: 0.0 }).is_err());
    }
}
