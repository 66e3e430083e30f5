//! Travel distance measured directly on the district shape.

/// Mean L1 distance from the centre of the diamond |x| + |y| <= a of area
/// 1/rho_c, by midpoint quadrature over one quadrant: n strips in x, each
/// cut into n cells in y up to the edge.
pub fn diamond_mean_distance(rho_c: f64, n: usize) -> f64 {
    let a = (1.0 / (2.0 * rho_c)).sqrt();
    let h = a / n as f64;
    let (mut moment, mut area) = (0.0, 0.0);
    for i in 0..n {
        let x = (i as f64 + 0.5) * h;
        let top = a - x;
        let k = top / n as f64;
        for j in 0..n {
            let y = (j as f64 + 0.5) * k;
            moment += (x + y) * h * k;
            area += h * k;
        }
    }
    moment / area
}
