//! Splits a model into independent blocks: variables linked by shared rows.

use crate::ilp::IlpModel;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Component {
    /// Model variable indexes, ascending.
    pub vars: Vec<usize>,
    /// Model constraint indexes, ascending.
    pub rows: Vec<usize>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Decomposition {
    pub components: Vec<Component>,
    /// Variables in no row.
    pub free: Vec<usize>,
    /// Rows without variables.
    pub constant_rows: Vec<usize>,
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            // smaller root wins, keeps results independent of row order
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi] = lo;
        }
    }
}

/// Components ordered by their smallest variable index.
pub fn decompose(model: &IlpModel) -> Decomposition {
    let n = model.num_vars();
    let mut uf = UnionFind { parent: (0..n).collect() };
    let mut used = vec![false; n];
    let mut out = Decomposition::default();
    for (i, c) in model.constraints.iter().enumerate() {
        let Some(&(first, _)) = c.terms.first() else {
            out.constant_rows.push(i);
            continue;
        };
        for &(j, _) in &c.terms {
            used[j] = true;
            uf.union(first, j);
        }
    }
    let mut slot = vec![usize::MAX; n];
    for j in 0..n {
        if !used[j] {
            out.free.push(j);
            continue;
        }
        let r = uf.find(j);
        if slot[r] == usize::MAX {
            slot[r] = out.components.len();
            out.components.push(Component { vars: Vec::new(), rows: Vec::new() });
        }
        out.components[slot[r]].vars.push(j);
    }
    for (i, c) in model.constraints.iter().enumerate() {
        if let Some(&(first, _)) = c.terms.first() {
            let r = uf.find(first);
            out.components[slot[r]].rows.push(i);
        }
    }
    out
}
