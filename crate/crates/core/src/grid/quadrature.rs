/// Adaptive Simpson quadrature of `f` over `[a, b]` to absolute tolerance
/// `tol` (Richardson-corrected).
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_step(f, a, b, fa, fm, fb, whole, tol, 48)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

/// Average of `|x|^{-b}` over the cube `[-h/2, h/2]^d`.
///
/// Splitting the cube into the `d` pyramids on which one coordinate
/// dominates and substituting `x_i = x_1 s_i` gives
/// `∫_{[0,a]^d} |x|^{-b} = d a^{d-b}/(d-b) ∫_{[0,1]^{d-1}} (1+|s|²)^{-b/2} ds`,
/// leaving a smooth integrand.
pub fn origin_cell_average(d: usize, b: f64, h: f64) -> f64 {
    let a = 0.5 * h;
    let df = d as f64;
    let tol = 1e-14;
    let shape = match d {
        1 => 1.0,
        2 => adaptive_simpson(&|s: f64| (1.0 + s * s).powf(-0.5 * b), 0.0, 1.0, tol),
        3 => adaptive_simpson(
            &|s: f64| adaptive_simpson(&|t: f64| (1.0 + s * s + t * t).powf(-0.5 * b), 0.0, 1.0, tol),
            0.0,
            1.0,
            tol,
        ),
        _ => panic!("origin cell average supports d = 1, 2, 3"),
    };
    let orthant = df * a.powf(df - b) / (df - b) * shape;
    2f64.powi(d as i32) * orthant / h.powi(d as i32)
}
