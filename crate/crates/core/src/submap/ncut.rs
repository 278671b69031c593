use nalgebra::{DMatrix, SymmetricEigen};

use super::{CovisibilityGraph, Partition};
use crate::error::{Error, Result};

/// `Σ_c cut(c, V∖c) / vol(c)` over the clusters of `labels`; clusters with
/// zero volume contribute nothing.
pub fn ncut_value(graph: &CovisibilityGraph, labels: &[usize]) -> f64 {
    let k = labels.iter().max().map_or(0, |m| m + 1);
    let mut cut = vec![0.0; k];
    let mut vol = vec![0.0; k];
    for i in 0..graph.n {
        for j in 0..graph.n {
            let w = graph.weight(i, j);
            vol[labels[i]] += w;
            if labels[i] != labels[j] {
                cut[labels[i]] += w;
            }
        }
    }
    (0..k).filter(|&c| vol[c] > 0.0).map(|c| cut[c] / vol[c]).sum()
}

fn components(graph: &CovisibilityGraph, nodes: &[usize]) -> Vec<Vec<usize>> {
    let mut seen = vec![false; nodes.len()];
    let mut out = Vec::new();
    for s in 0..nodes.len() {
        if seen[s] {
            continue;
        }
        seen[s] = true;
        let mut stack = vec![s];
        let mut comp = Vec::new();
        while let Some(a) = stack.pop() {
            comp.push(nodes[a]);
            for b in 0..nodes.len() {
                if !seen[b] && graph.weight(nodes[a], nodes[b]) > 0.0 {
                    seen[b] = true;
                    stack.push(b);
                }
            }
        }
        comp.sort_unstable();
        out.push(comp);
    }
    out
}

/// Two-way Ncut of `a ∪ b` within its induced subgraph.
fn two_way(graph: &CovisibilityGraph, a: &[usize], b: &[usize]) -> f64 {
    let all: Vec<usize> = a.iter().chain(b).copied().collect();
    let vol = |s: &[usize]| s.iter().map(|&i| all.iter().map(|&j| graph.weight(i, j)).sum::<f64>()).sum::<f64>();
    let cut: f64 = a.iter().map(|&i| b.iter().map(|&j| graph.weight(i, j)).sum::<f64>()).sum();
    let term = |v: f64| if v > 0.0 { cut / v } else { 0.0 };
    term(vol(a)) + term(vol(b))
}

/// Best two-way split of the induced subgraph on `nodes` (sorted):
/// `(A, B, Ncut)` with `A` holding the lowest-index node.
///
/// Disconnected subgraphs split along components (Ncut 0, most balanced
/// choice). Connected ones use the second-smallest eigenvector of the
/// normalised Laplacian mapped back by `D^{-1/2}`, swept over every
/// threshold between distinct values; ties go to the most balanced split,
/// then the earlier threshold.
pub fn bipartition(graph: &CovisibilityGraph, nodes: &[usize]) -> Option<(Vec<usize>, Vec<usize>, f64)> {
    let n = nodes.len();
    if n < 2 {
        return None;
    }
    let comps = components(graph, nodes);
    if comps.len() > 1 {
        let best = comps
            .iter()
            .enumerate()
            .max_by(|(ia, a), (ib, b)| {
                let ba = a.len().min(n - a.len());
                let bb = b.len().min(n - b.len());
                ba.cmp(&bb).then(ib.cmp(ia))
            })
            .map(|(i, _)| i)
            .unwrap();
        let mut a = comps[best].clone();
        let mut b: Vec<usize> = nodes.iter().copied().filter(|x| !a.contains(x)).collect();
        if b[0] < a[0] {
            std::mem::swap(&mut a, &mut b);
        }
        return Some((a, b, 0.0));
    }

    // Induced-subgraph degrees.
    let w = |a: usize, b: usize| graph.weight(nodes[a], nodes[b]);
    let d: Vec<f64> = (0..n).map(|a| (0..n).map(|b| w(a, b)).sum()).collect();
    let inv_sqrt: Vec<f64> = d.iter().map(|x| 1.0 / x.sqrt()).collect();
    let lap = DMatrix::from_fn(n, n, |a, b| {
        let off = -w(a, b) * inv_sqrt[a] * inv_sqrt[b];
        if a == b {
            1.0 + off
        } else {
            off
        }
    });
    let eig = SymmetricEigen::new(lap);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]).then(a.cmp(&b)));
    let z = eig.eigenvectors.column(order[1]);
    let mut y: Vec<f64> = (0..n).map(|a| z[a] * inv_sqrt[a]).collect();
    if y[0] > 0.0 {
        y.iter_mut().for_each(|v| *v = -*v);
    }
    let mut sorted: Vec<usize> = (0..n).collect();
    sorted.sort_by(|&a, &b| y[a].total_cmp(&y[b]).then(a.cmp(&b)));

    let total: f64 = d.iter().sum();
    let mut in_a = vec![false; n];
    let mut vol_a = 0.0;
    let mut cut = 0.0;
    let mut best: Option<(f64, usize, usize)> = None;
    for m in 1..n {
        let v = sorted[m - 1];
        // Moving v into A: edges to A stop being cut, edges to B start.
        for u in 0..n {
            if u != v {
                if in_a[u] {
                    cut -= w(v, u);
                } else {
                    cut += w(v, u);
                }
            }
        }
        in_a[v] = true;
        vol_a += d[v];
        if y[sorted[m - 1]] == y[sorted[m]] {
            continue;
        }
        let vol_b = total - vol_a;
        let value = cut.max(0.0) / vol_a + cut.max(0.0) / vol_b;
        let balance = m.min(n - m);
        let better = match best {
            None => true,
            Some((bv, bb, _)) => {
                let tol = 1e-12 * bv.abs().max(1e-300);
                value < bv - tol || ((value - bv).abs() <= tol && balance > bb)
            }
        };
        if better {
            best = Some((value, balance, m));
        }
    }
    let (_, _, m) = best?;
    let mut a: Vec<usize> = sorted[..m].iter().map(|&i| nodes[i]).collect();
    let mut b: Vec<usize> = sorted[m..].iter().map(|&i| nodes[i]).collect();
    a.sort_unstable();
    b.sort_unstable();
    if b[0] < a[0] {
        std::mem::swap(&mut a, &mut b);
    }
    let value = two_way(graph, &a, &b);
    Some((a, b, value))
}

/// Recursive two-way Normalized Cuts until `k` clusters: at each step the
/// cluster whose best bipartition has the lowest Ncut is split (ties: the
/// cluster containing the lowest node index).
pub fn normalized_cuts(graph: &CovisibilityGraph, k: usize) -> Result<Partition> {
    if k == 0 {
        return Err(Error::InvalidArgument("k must be ≥ 1".into()));
    }
    if k > graph.n {
        return Err(Error::KTooLarge { k, n: graph.n });
    }
    let mut clusters: Vec<Vec<usize>> = vec![(0..graph.n).collect()];
    let mut splits: Vec<Option<(Vec<usize>, Vec<usize>, f64)>> = vec![bipartition(graph, &clusters[0])];
    while clusters.len() < k {
        let pick = (0..clusters.len())
            .filter(|&c| splits[c].is_some())
            .min_by(|&a, &b| {
                let va = splits[a].as_ref().unwrap().2;
                let vb = splits[b].as_ref().unwrap().2;
                va.total_cmp(&vb).then(clusters[a][0].cmp(&clusters[b][0]))
            })
            .expect("k ≤ n guarantees a splittable cluster");
        let (a, b, _) = splits[pick].take().unwrap();
        splits[pick] = bipartition(graph, &a);
        clusters[pick] = a;
        splits.push(bipartition(graph, &b));
        clusters.push(b);
    }
    let mut labels = vec![0; graph.n];
    for (c, members) in clusters.iter().enumerate() {
        for &i in members {
            labels[i] = c;
        }
    }
    Ok(Partition::canonical(&labels))
}
