/// Coordinates at or below this value count as being on the boundary.
pub const BOUNDARY_TOL: f64 = 1e-12;

/// Projects a payoff gradient onto the tangent cone of the unit simplex at
/// `s_i`. In the interior this is the centering `g − mean(g)·1`; at the
/// boundary, coordinates that would leave the simplex are pinned to zero and
/// the rest re-centered until no pinned direction remains.
pub fn tangent_cone_project(gradient: &[f64], s_i: &[f64]) -> Vec<f64> {
    let m = gradient.len();
    let at_boundary: Vec<bool> = s_i.iter().map(|&v| v <= BOUNDARY_TOL).collect();
    let mut pinned = vec![false; m];
    let mut velocity = vec![0.0; m];
    for _ in 0..=m {
        let free = pinned.iter().filter(|p| !**p).count();
        if free == 0 {
            velocity.iter_mut().for_each(|v| *v = 0.0);
            break;
        }
        let mean = (0..m)
            .filter(|&x| !pinned[x])
            .map(|x| gradient[x])
            .sum::<f64>()
            / free as f64;
        for x in 0..m {
            velocity[x] = if pinned[x] { 0.0 } else { gradient[x] - mean };
        }
        let mut changed = false;
        for x in 0..m {
            if at_boundary[x] && !pinned[x] && velocity[x] < 0.0 {
                pinned[x] = true;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    velocity
}
