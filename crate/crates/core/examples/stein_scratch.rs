use heisenberg_mf::quad;
use heisenberg_mf::stein::*;

fn main() {
    let c = 0.9203884727313848;
    let d = CriticalDensity::new(c).unwrap();
    let h = |s: f64| s.sin();
    let h_mean = quad::integrate_to_inf(|t| h(t) * d.pdf(t), 0.0, 1e-13).unwrap();
    println!("h_mean = {h_mean}");
    for &t in &[1e-3, 0.01, 0.1, 0.5, 1.0, 1.3, 1.45, 2.0, 3.0, 4.0, 5.0, 7.0, 9.9] {
        let f = stein_solution_at(&h, &d, h_mean, t).unwrap();
        let delta: f64 = (0.01f64).min(t / 4.0).max(1e-4);
        let fm2 = stein_solution_at(&h, &d, h_mean, t - 2.0 * delta).unwrap();
        let fm1 = stein_solution_at(&h, &d, h_mean, t - delta).unwrap();
        let fp1 = stein_solution_at(&h, &d, h_mean, t + delta).unwrap();
        let fp2 = stein_solution_at(&h, &d, h_mean, t + 2.0 * delta).unwrap();
        let fd = (-fp2 + 8.0 * fp1 - 8.0 * fm1 + fm2) / (12.0 * delta);
        let resid = t * fd + 6.0 * (1.0 - c * t * t) * f - (h(t) - h_mean);
        println!("t = {t:8.4}  cdf = {:.6}  f = {f:12.6e}  f' = {fd:12.6e}  resid = {resid:10.3e}", d.cdf(t));
    }
}
