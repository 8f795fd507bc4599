use crate::error::{Error, Ratio, Result};
use crate::measures::Measure;
use crate::numerics::QuadratureGrid;
use crate::operators::MeasureSamples;
use crate::spaces::{fock_quasi_norm, EntireFunction, FockParams};
use crate::weights::Weight;

/// `∫ Π|f_j|^{q_j} e^{−q_jα_j|z|²/2} dμ  /  Π ‖f_j‖^{q_j}_{F^{p_j}_{α_j,w}}`
/// for `k ≤ 2` factors `(p_j, q_j, α_j)` with `λ = Σ q_j/p_j`.
pub fn product_carleson_check(
    mu: &Measure,
    w: &Weight,
    lambda: f64,
    factors: &[(f64, f64, f64)],
    functions: &[EntireFunction],
    grid: &QuadratureGrid,
) -> Result<Ratio> {
    if factors.is_empty() || factors.len() > 2 {
        return Err(Error::invalid(format!(
            "product characterization supports 1 or 2 factors, got {}",
            factors.len()
        )));
    }
    if functions.len() != factors.len() {
        return Err(Error::invalid(format!(
            "{} factors but {} functions",
            factors.len(),
            functions.len()
        )));
    }
    let sum: f64 = factors.iter().map(|(p, q, _)| q / p).sum();
    if (sum - lambda).abs() > 1e-12 * lambda.abs().max(1.0) {
        return Err(Error::invalid(format!(
            "λ = {lambda} but Σ q_j/p_j = {sum}"
        )));
    }
    let samples = MeasureSamples::new(mu, grid);
    let mut num = 0.0;
    for (u, wt) in samples.points.iter().zip(&samples.weights) {
        let mut prod = *wt;
        for ((_, q, alpha), f) in factors.iter().zip(functions) {
            prod *= f.eval_damped(u, *alpha)?.norm().powf(*q);
        }
        num += prod;
    }
    let mut den = 1.0;
    for ((p, q, alpha), f) in factors.iter().zip(functions) {
        let fp = FockParams::new(*p, *alpha, w.clone())?;
        den *= fock_quasi_norm(f, &fp, grid)?.powf(*q);
    }
    Ok(Ratio::from_parts(num, den))
}
