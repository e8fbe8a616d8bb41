//! Exact Euclidean distance transform.
//!
//! Direct search over site pixels with integer squared distances, so results
//! carry no floating-point approximation. Ties between equidistant sites
//! resolve to the site that comes first in row-major order; downstream
//! consumers (error propagation in the weighted F-measure, morphology
//! helpers) depend on that pinned order.

/// Squared distance to the nearest site and that site's linear index, for
/// every pixel. Pixels with no site anywhere get `u64::MAX` and their own
/// index; callers must handle the no-site case explicitly.
pub(crate) struct DistanceField {
    pub d2: Vec<u64>,
    pub nearest: Vec<usize>,
}

pub(crate) fn distance_to_set(sites: &[bool], width: usize, height: usize) -> DistanceField {
    debug_assert_eq!(sites.len(), width * height);
    let n = width * height;
    let mut d2 = vec![u64::MAX; n];
    let mut nearest: Vec<usize> = (0..n).collect();
    let site_px: Vec<(i64, i64, usize)> = sites
        .iter()
        .enumerate()
        .filter(|(_, s)| **s)
        .map(|(i, _)| ((i % width) as i64, (i / width) as i64, i))
        .collect();
    if site_px.is_empty() {
        return DistanceField { d2, nearest };
    }
    for y in 0..height {
        for x in 0..width {
            let idx = y * width + x;
            if sites[idx] {
                d2[idx] = 0;
                continue;
            }
            let (qx, qy) = (x as i64, y as i64);
            let mut best = u64::MAX;
            let mut best_idx = idx;
            for &(sx, sy, si) in &site_px {
                let dx = sx - qx;
                let dy = sy - qy;
                let dist = (dx * dx + dy * dy) as u64;
                if dist < best {
                    best = dist;
                    best_idx = si;
                }
            }
            d2[idx] = best;
            nearest[idx] = best_idx;
        }
    }
    DistanceField { d2, nearest }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn distances_from_a_single_site() {
        // Site at (1, 1) in a 3x3 grid.
        let mut sites = vec![false; 9];
        sites[4] = true;
        let f = distance_to_set(&sites, 3, 3);
        assert_eq!(f.d2[4], 0);
        assert_eq!(f.d2[0], 2);
        assert_eq!(f.d2[1], 1);
        assert_eq!(f.d2[3], 1);
        assert!(f.nearest.iter().enumerate().all(|(i, &s)| s == 4 || i == 4));
    }

    #[test]
    fn ties_resolve_to_the_row_major_first_site() {
        // Sites at (0, 0) and (2, 0); pixel (1, 0) is equidistant.
        let sites = vec![true, false, true];
        let f = distance_to_set(&sites, 3, 1);
        assert_eq!(f.d2[1], 1);
        assert_eq!(f.nearest[1], 0);
    }

    #[test]
    fn empty_site_set_yields_max_distances() {
        let f = distance_to_set(&[false; 4], 2, 2);
        assert!(f.d2.iter().all(|&d| d == u64::MAX));
    }
}
