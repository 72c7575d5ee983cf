//! Pareto dominance, non-dominated sorting and crowding distance.

use crate::eval::ObjectiveVector;

/// `a` dominates `b`: no worse in every objective and better in at least one
/// (all objectives minimised).
pub fn dominates(a: &ObjectiveVector, b: &ObjectiveVector) -> bool {
    let (a, b) = (a.as_array(), b.as_array());
    let mut better = false;
    for k in 0..ObjectiveVector::LEN {
        if a[k] > b[k] {
            return false;
        }
        if a[k] < b[k] {
            better = true;
        }
    }
    better
}

/// Partitions `points` into fronts of indices. Front 0 is non-dominated; each
/// later front is dominated only by members of earlier ones. Members of a
/// front keep input order.
pub fn fast_non_dominated_sort(points: &[ObjectiveVector]) -> Vec<Vec<usize>> {
    let n = points.len();
    let mut dominated_by_me: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut domination_count = vec![0usize; n];
    for p in 0..n {
        for q in p + 1..n {
            if dominates(&points[p], &points[q]) {
                dominated_by_me[p].push(q);
                domination_count[q] += 1;
            } else if dominates(&points[q], &points[p]) {
                dominated_by_me[q].push(p);
                domination_count[p] += 1;
            }
        }
    }
    let mut fronts = Vec::new();
    let mut current: Vec<usize> = (0..n).filter(|&p| domination_count[p] == 0).collect();
    while !current.is_empty() {
        let mut next = Vec::new();
        for &p in &current {
            for &q in &dominated_by_me[p] {
                domination_count[q] -= 1;
                if domination_count[q] == 0 {
                    next.push(q);
                }
            }
        }
        next.sort_unstable();
        fronts.push(current);
        current = next;
    }
    fronts
}

/// Crowding distance of each member of `front` (aligned with `front`).
///
/// Per objective the front is sorted (stable); the two boundary members get
/// infinity and interior members add the normalised gap between their
/// neighbours. An objective that is constant over the front adds nothing.
/// Fronts of one or two members are all infinite.
pub fn crowding_distance(points: &[ObjectiveVector], front: &[usize]) -> Vec<f64> {
    let n = front.len();
    if n <= 2 {
        return vec![f64::INFINITY; n];
    }
    let mut distance = vec![0.0; n];
    let mut order: Vec<usize> = (0..n).collect();
    for k in 0..ObjectiveVector::LEN {
        let value = |i: usize| points[front[i]].get(k);
        order.sort_by(|&a, &b| value(a).total_cmp(&value(b)));
        let (lo, hi) = (value(order[0]), value(order[n - 1]));
        let span = hi - lo;
        if !(span > 0.0) {
            continue;
        }
        distance[order[0]] = f64::INFINITY;
        distance[order[n - 1]] = f64::INFINITY;
        for w in 1..n - 1 {
            let i = order[w];
            distance[i] += (value(order[w + 1]) - value(order[w - 1])) / span;
        }
    }
    distance
}

/// Index of the point closest to the origin after dividing each objective by
/// its reference value. Ties go to the earliest point.
pub fn trade_off_index(points: &[ObjectiveVector], reference: &ObjectiveVector) -> Option<usize> {
    let refs = reference.as_array();
    let norm = |p: &ObjectiveVector| {
        p.as_array()
            .iter()
            .zip(refs)
            .map(|(v, r)| (v / r) * (v / r))
            .sum::<f64>()
            .sqrt()
    };
    let mut best: Option<(usize, f64)> = None;
    for (i, p) in points.iter().enumerate() {
        let d = norm(p);
        if best.is_none_or(|(_, bd)| d < bd) {
            best = Some((i, d));
        }
    }
    best.map(|(i, _)| i)
}
