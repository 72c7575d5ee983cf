use crate::error::{Error, Result};
use crate::eval::ObjectiveVector;
use crate::moea::dominates;

/// Volume dominated by `front` and bounded by `reference`. Every member must
/// dominate the reference point.
pub fn hypervolume(front: &[ObjectiveVector], reference: &ObjectiveVector) -> Result<f64> {
    if let Some(p) = front.iter().find(|p| !dominates(p, reference)) {
        return Err(Error::InvalidReference(format!(
            "point {:?} does not dominate reference {:?}",
            p.as_array(),
            reference.as_array()
        )));
    }
    Ok(volume(front, reference))
}

/// [`hypervolume`] over the members that dominate `reference`; the rest are
/// ignored.
pub fn hypervolume_dominating(front: &[ObjectiveVector], reference: &ObjectiveVector) -> f64 {
    let kept: Vec<ObjectiveVector> = front
        .iter()
        .copied()
        .filter(|p| dominates(p, reference))
        .collect();
    volume(&kept, reference)
}

/// Slices along the third objective; each slab is a 2-D staircase area.
fn volume(front: &[ObjectiveVector], reference: &ObjectiveVector) -> f64 {
    let r = reference.as_array();
    let mut pts: Vec<[f64; 3]> = front.iter().map(|p| p.as_array()).collect();
    pts.sort_by(|a, b| a[2].total_cmp(&b[2]));
    let mut total = 0.0;
    let mut i = 0;
    while i < pts.len() {
        let z = pts[i][2];
        while i < pts.len() && pts[i][2] == z {
            i += 1;
        }
        let top = if i < pts.len() { pts[i][2] } else { r[2] };
        total += area(&pts[..i], r[0], r[1]) * (top - z);
    }
    total
}

fn area(pts: &[[f64; 3]], rx: f64, ry: f64) -> f64 {
    let mut xy: Vec<(f64, f64)> = pts.iter().map(|p| (p[0], p[1])).collect();
    xy.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let mut sum = 0.0;
    let mut best_y = ry;
    for (k, &(x, y)) in xy.iter().enumerate() {
        if y < best_y {
            best_y = y;
        }
        let next_x = xy.get(k + 1).map_or(rx, |n| n.0);
        sum += (next_x - x) * (ry - best_y);
    }
    sum
}
