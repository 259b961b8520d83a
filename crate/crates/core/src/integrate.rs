//! Classical fixed-step fourth-order Runge-Kutta on flat state arrays.

pub fn rk4_step<const N: usize, F>(y: &[f64; N], t: f64, h: f64, mut f: F) -> [f64; N]
where
    F: FnMut(f64, &[f64; N]) -> [f64; N],
{
    let axpy = |a: f64, x: &[f64; N], y: &[f64; N]| -> [f64; N] {
        let mut out = *y;
        for (o, xi) in out.iter_mut().zip(x) {
            *o += a * xi;
        }
        out
    };
    let k1 = f(t, y);
    let k2 = f(t + 0.5 * h, &axpy(0.5 * h, &k1, y));
    let k3 = f(t + 0.5 * h, &axpy(0.5 * h, &k2, y));
    let k4 = f(t + h, &axpy(h, &k3, y));
    let mut out = *y;
    for i in 0..N {
        out[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    out
}
