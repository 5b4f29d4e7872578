//! Disjoint-set forest used by the single-linkage clusterers.

#[derive(Debug, Clone)]
pub(crate) struct DisjointSet {
    parent: Vec<usize>,
    rank: Vec<u8>,
}

impl DisjointSet {
    pub(crate) fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
            rank: vec![0; n],
        }
    }

    pub(crate) fn find(&mut self, mut node: usize) -> usize {
        let mut root = node;
        while self.parent[root] != root {
            root = self.parent[root];
        }
        while self.parent[node] != root {
            let next = self.parent[node];
            self.parent[node] = root;
            node = next;
        }
        root
    }

    pub(crate) fn union(&mut self, a: usize, b: usize) {
        let (mut a, mut b) = (self.find(a), self.find(b));
        if a == b {
            return;
        }
        if self.rank[a] < self.rank[b] {
            std::mem::swap(&mut a, &mut b);
        }
        self.parent[b] = a;
        if self.rank[a] == self.rank[b] {
            self.rank[a] = self.rank[a].saturating_add(1);
        }
    }

    /// Components as sorted member lists, ordered by their smallest member.
    pub(crate) fn components(&mut self) -> Vec<Vec<usize>> {
        let n = self.parent.len();
        let mut slot = vec![usize::MAX; n];
        let mut out: Vec<Vec<usize>> = Vec::new();
        for i in 0..n {
            let root = self.find(i);
            if slot[root] == usize::MAX {
                slot[root] = out.len();
                out.push(Vec::new());
            }
            out[slot[root]].push(i);
        }
        out
    }
}

/// Single-linkage components of `points`: `i` and `j` share a component
/// when a chain of pairs each within `radius` (inclusive) connects them.
pub(crate) fn single_linkage(points: &[crate::geo::LonLat], radius: f64) -> Vec<Vec<usize>> {
    let hash = crate::spatial::SpatialHash::build(points, radius, |i| i);
    let mut sets = DisjointSet::new(points.len());
    for (i, &p) in points.iter().enumerate() {
        hash.for_each_candidate(p, radius, |j| {
            if j > i && p.distance(points[j]) <= radius {
                sets.union(i, j);
            }
        });
    }
    sets.components()
}
