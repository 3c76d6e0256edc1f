//! Gauss-Kronrod 7/15 rules on real meshes and complex segments.

use num_complex::Complex64;

use crate::coefficients::Problem;

/// Kronrod abscissae on `[-1, 1]`, non-negative half, descending.
const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];

const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];

/// Gauss weights for the odd-indexed Kronrod nodes `XGK[1], XGK[3], XGK[5], XGK[7]`.
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

/// The 15 nodes of one panel with Kronrod and Gauss weights (the latter
/// zero at Kronrod-only nodes), already scaled to the panel.
pub fn panel_rule(x0: f64, x1: f64) -> [(f64, f64, f64); 15] {
    let c = 0.5 * (x0 + x1);
    let r = 0.5 * (x1 - x0);
    let mut out = [(0.0, 0.0, 0.0); 15];
    let mut k = 0;
    for j in 0..7 {
        let wg = if j % 2 == 1 { WG[j / 2] } else { 0.0 };
        out[k] = (c - r * XGK[j], r * WGK[j], r * wg);
        out[k + 1] = (c + r * XGK[j], r * WGK[j], r * wg);
        k += 2;
    }
    out[14] = (c, r * WGK[7], r * WG[3]);
    out
}

/// Kronrod value and `|K15 - G7|` for a complex integrand along the segment
/// `z0 -> z1`.
pub fn gk15_segment<F>(f: F, z0: Complex64, z1: Complex64) -> (Complex64, f64)
where
    F: Fn(Complex64) -> Complex64,
{
    let dz = z1 - z0;
    let mut k = Complex64::new(0.0, 0.0);
    let mut g = Complex64::new(0.0, 0.0);
    for (t, wk, wg) in panel_rule(0.0, 1.0) {
        let v = f(z0 + dz * t);
        k += v * wk;
        g += v * wg;
    }
    (k * dz, ((k - g) * dz).norm())
}

/// Composite GK15 mesh over `[a, b]`, aligned with every breakpoint of the
/// problem. Shared by all eigenpairs of an inventory.
#[derive(Clone, Debug)]
pub struct QuadMesh {
    pub panels: Vec<(f64, f64)>,
}

impl QuadMesh {
    /// Panel length at most `1 / rate` (and at least `min_panels` per smooth
    /// piece), where `rate` bounds the local oscillation frequency.
    pub fn for_problem(prob: &Problem, lambda_max: f64, min_panels: usize) -> Self {
        let mut panels = Vec::new();
        for piece in prob.pieces() {
            let omega = piece.stiffness(lambda_max).sqrt().max(1.0);
            let len = piece.x1 - piece.x0;
            let n = ((len * omega).ceil() as usize).max(min_panels);
            for k in 0..n {
                let x0 = piece.x0 + len * k as f64 / n as f64;
                let x1 = if k + 1 == n { piece.x1 } else { piece.x0 + len * (k + 1) as f64 / n as f64 };
                panels.push((x0, x1));
            }
        }
        Self { panels }
    }

    /// All nodes with Kronrod and Gauss weights.
    pub fn nodes(&self) -> Vec<(f64, f64, f64)> {
        self.panels.iter().flat_map(|&(a, b)| panel_rule(a, b)).collect()
    }

    /// Integral of complex samples laid out as in `nodes`, with error estimate.
    pub fn integrate(&self, values: &[Complex64]) -> (Complex64, f64) {
        let nodes = self.nodes();
        assert_eq!(values.len(), nodes.len());
        let mut total = Complex64::new(0.0, 0.0);
        let mut err = 0.0;
        for (chunk_v, chunk_n) in values.chunks(15).zip(nodes.chunks(15)) {
            let mut k = Complex64::new(0.0, 0.0);
            let mut g = Complex64::new(0.0, 0.0);
            for (v, &(_, wk, wg)) in chunk_v.iter().zip(chunk_n) {
                k += v * wk;
                g += v * wg;
            }
            total += k;
            err += (k - g).norm();
        }
        (total, err)
    }

    pub fn integrate_fn<F: Fn(f64) -> Complex64>(&self, f: F) -> (Complex64, f64) {
        let values: Vec<Complex64> = self.nodes().iter().map(|&(x, _, _)| f(x)).collect();
        self.integrate(&values)
    }
}
