use alloc::vec::Vec;

use crate::error::{invalid, Error, Result};

/// Exact Lebesgue measure of the union of boxes `[p, reference]` for up to
/// three objectives. Dominated and duplicate points are allowed.
pub fn hypervolume<V: AsRef<[f64]>>(front: &[V], reference: &[f64]) -> Result<f64> {
    let k = reference.len();
    if !(1..=3).contains(&k) {
        return Err(invalid!("hypervolume supports 1 to 3 objectives, got {k}"));
    }
    if reference.iter().any(|r| !r.is_finite()) {
        return Err(invalid!("reference point must be finite"));
    }
    for p in front {
        let p = p.as_ref();
        if p.len() != k {
            return Err(Error::DimensionMismatch {
                expected: k,
                actual: p.len(),
            });
        }
        if !p.iter().zip(reference).all(|(x, r)| x < r) {
            return Err(invalid!("point {p:?} does not dominate the reference point {reference:?}"));
        }
    }
    if front.is_empty() {
        return Ok(0.0);
    }
    let pts: Vec<&[f64]> = front.iter().map(|p| p.as_ref()).collect();
    Ok(match k {
        1 => reference[0] - pts.iter().map(|p| p[0]).fold(f64::INFINITY, f64::min),
        2 => {
            let mut xy: Vec<(f64, f64)> = pts.iter().map(|p| (p[0], p[1])).collect();
            area_2d(&mut xy, reference[0], reference[1])
        }
        _ => volume_3d(&pts, reference),
    })
}

/// Staircase area of 2-D points, sorted in place.
fn area_2d(pts: &mut [(f64, f64)], ref_x: f64, ref_y: f64) -> f64 {
    pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let mut area = 0.0;
    let mut best_y = ref_y;
    for (i, &(x, y)) in pts.iter().enumerate() {
        best_y = best_y.min(y);
        let next_x = pts.get(i + 1).map_or(ref_x, |p| p.0);
        area += (next_x - x) * (ref_y - best_y);
    }
    area
}

/// Slice along the third objective and sum slab areas.
fn volume_3d(pts: &[&[f64]], reference: &[f64]) -> f64 {
    let mut by_z: Vec<&[f64]> = pts.to_vec();
    by_z.sort_by(|a, b| a[2].total_cmp(&b[2]));
    let mut volume = 0.0;
    let mut slab: Vec<(f64, f64)> = Vec::with_capacity(by_z.len());
    for (i, p) in by_z.iter().enumerate() {
        slab.push((p[0], p[1]));
        let next_z = by_z.get(i + 1).map_or(reference[2], |q| q[2]);
        let depth = next_z - p[2];
        if depth > 0.0 {
            volume += depth * area_2d(&mut slab, reference[0], reference[1]);
        }
    }
    volume
}

/// Componentwise maximum over every point of every set, plus `margin`.
pub fn reference_point<V: AsRef<[f64]>>(sets: &[&[V]], margin: f64) -> Result<Vec<f64>> {
    let mut worst: Option<Vec<f64>> = None;
    for p in sets.iter().flat_map(|s| s.iter()) {
        let p = p.as_ref();
        match &mut worst {
            None => worst = Some(p.to_vec()),
            Some(w) => {
                if w.len() != p.len() {
                    return Err(Error::DimensionMismatch {
                        expected: w.len(),
                        actual: p.len(),
                    });
                }
                w.iter_mut().zip(p).for_each(|(a, b)| *a = a.max(*b));
            }
        }
    }
    let mut w = worst.ok_or_else(|| invalid!("no points to derive a reference point from"))?;
    w.iter_mut().for_each(|v| *v += margin);
    Ok(w)
}
