
/// Adds two complex numbers given in polar form `(modulus, angle)` and returns
/// the sum in polar form.
///
/// The modulus follows the law of cosines and the angle is the two-argument
/// arctangent of the summed components, so the result lands in `(-pi, pi]`.
/// A zero-modulus sum reports angle 0. Equal phases reduce to plain addition
/// of the moduli.
pub fn complex_add_polar(z1: (f64, f64), z2: (f64, f64)) -> (f64, f64) {
    let (r1, t1) = z1;
    let (r2, t2) = z2;
    if t1 == t2 {
        // aligned phases: moduli add exactly
        let r = r1 + r2;
        return if r == 0.0 { (0.0, 0.0) } else { (r, t1.sin().atan2(t1.cos())) };
    }
    let r_sq = r1 * r1 + r2 * r2 + 2.0 * r1 * r2 * (t2 - t1).cos();
    let y = r1 * t1.sin() + r2 * t2.sin();
    let x = r1 * t1.cos() + r2 * t2.cos();
    // cancellation can leave a tiny negative under the root
    let r = r_sq.max(0.0).sqrt();
    if r == 0.0 || (x == 0.0 && y == 0.0) {
        return (r, 0.0);
    }
    (r, y.atan2(x))
}
