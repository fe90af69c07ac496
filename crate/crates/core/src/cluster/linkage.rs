use super::{dist, FeatureSet};

/// Single-linkage agglomerative clustering cut at `k` clusters.
///
/// Built from the minimum spanning tree (Prim, O(n²)): removing its `k - 1`
/// heaviest edges leaves exactly the single-linkage clusters. Labels are
/// numbered by first appearance in row order.
pub fn single_linkage(features: &FeatureSet, k: usize) -> Vec<usize> {
    let rows = features.rows();
    let n = rows.len();
    if n == 0 {
        return Vec::new();
    }
    let k = k.clamp(1, n);
    let mut in_tree = vec![false; n];
    let mut best = vec![(f64::INFINITY, usize::MAX); n];
    let mut edges: Vec<(f64, usize, usize)> = Vec::with_capacity(n - 1);
    let mut current = 0;
    in_tree[0] = true;
    for _ in 1..n {
        for j in 0..n {
            if !in_tree[j] {
                let d = dist(&rows[current], &rows[j]);
                if d < best[j].0 {
                    best[j] = (d, current);
                }
            }
        }
        let next = (0..n)
            .filter(|&j| !in_tree[j])
            .min_by(|&a, &b| best[a].0.total_cmp(&best[b].0).then(a.cmp(&b)))
            .expect("a vertex outside the tree");
        in_tree[next] = true;
        let (w, from) = best[next];
        edges.push((w, from.min(next), from.max(next)));
        current = next;
    }
    edges.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));

    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for &(_, a, b) in &edges[k - 1..] {
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        if ra != rb {
            parent[ra.max(rb)] = ra.min(rb);
        }
    }
    let mut label_of_root = vec![usize::MAX; n];
    let mut next_label = 0;
    (0..n)
        .map(|i| {
            let r = find(&mut parent, i);
            if label_of_root[r] == usize::MAX {
                label_of_root[r] = next_label;
                next_label += 1;
            }
            label_of_root[r]
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fs(xs: &[f64]) -> FeatureSet {
        FeatureSet::from_rows(xs.iter().map(|&x| vec![x]).collect()).unwrap()
    }

    #[test]
    fn cuts_largest_gaps() {
        let f = fs(&[0.0, 1.0, 2.0, 10.0, 11.0, 30.0]);
        assert_eq!(single_linkage(&f, 3), vec![0, 0, 0, 1, 1, 2]);
        assert_eq!(single_linkage(&f, 1), vec![0; 6]);
        assert_eq!(single_linkage(&f, 6), vec![0, 1, 2, 3, 4, 5]);
    }

    #[test]
    fn chaining() {
        // Single linkage chains evenly spaced points together.
        let f = fs(&[0.0, 1.0, 2.0, 3.0, 4.0, 4.5 + 5.0]);
        assert_eq!(single_linkage(&f, 2), vec![0, 0, 0, 0, 0, 1]);
    }
}
