use rustfft::{num_complex::Complex, FftPlanner};

use crate::error::{Error, Result};

/// Autocorrelations ρ̂_0..ρ̂_{n-1} via zero-padded FFT.
pub fn autocorrelation(series: &[f64]) -> Result<Vec<f64>> {
    let n = series.len();
    if n == 0 {
        return Err(Error::Empty("series"));
    }
    if series.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("chain summary series".into()));
    }
    let mean = series.iter().sum::<f64>() / n as f64;
    let padded = (2 * n).next_power_of_two();
    let mut buf: Vec<Complex<f64>> = series
        .iter()
        .map(|&x| Complex::new(x - mean, 0.0))
        .chain(std::iter::repeat(Complex::new(0.0, 0.0)))
        .take(padded)
        .collect();
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(padded).process(&mut buf);
    for c in buf.iter_mut() {
        *c = Complex::new(c.norm_sqr(), 0.0);
    }
    planner.plan_fft_inverse(padded).process(&mut buf);
    let c0 = buf[0].re;
    let scale = series.iter().map(|x| (x - mean).powi(2)).sum::<f64>();
    if scale == 0.0 || c0 <= 0.0 {
        return Err(Error::DegenerateChain);
    }
    Ok(buf[..n].iter().map(|c| c.re / c0).collect())
}

/// `N / (1 + 2 Σ_k ρ̂_k)`, summing lags until the first nonpositive autocorrelation.
pub fn effective_sample_size(series: &[f64]) -> Result<f64> {
    let n = series.len();
    if n < 10 {
        return Err(Error::InvalidParameter(format!(
            "effective sample size needs at least 10 values, got {n}"
        )));
    }
    let first = series[0];
    if series.iter().all(|&x| x == first) {
        return Err(Error::DegenerateChain);
    }
    let rho = autocorrelation(series)?;
    let tail: f64 = rho[1..].iter().take_while(|&&r| r > 0.0).sum();
    let ess = n as f64 / (1.0 + 2.0 * tail);
    Ok(ess.min(n as f64))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;
    use rand_distr::{Distribution, StandardNormal};

    #[test]
    fn iid_normal_series_is_nearly_fully_effective() {
        let mut rng = stream_rng(10, 0);
        let xs: Vec<f64> = (0..10_000).map(|_| StandardNormal.sample(&mut rng)).collect();
        let ess = effective_sample_size(&xs).unwrap();
        assert!((8_000.0..=10_000.0).contains(&ess), "{ess}");
    }

    #[test]
    fn alternating_series_truncates_at_lag_one() {
        let xs: Vec<f64> = (0..1_000).map(|t| if t % 2 == 0 { 1.0 } else { -1.0 }).collect();
        let rho = autocorrelation(&xs).unwrap();
        assert!(rho[1] < 0.0);
        assert_eq!(effective_sample_size(&xs).unwrap(), 1_000.0);
    }

    #[test]
    fn ar1_matches_closed_form() {
        let phi: f64 = 0.9;
        let n = 100_000;
        let mut rng = stream_rng(11, 0);
        let mut x = 0.0;
        let xs: Vec<f64> = (0..n)
            .map(|_| {
                let e: f64 = StandardNormal.sample(&mut rng);
                x = phi * x + e;
                x
            })
            .collect();
        let ratio = effective_sample_size(&xs).unwrap() / n as f64;
        let theory = (1.0 - phi) / (1.0 + phi);
        assert!((0.04..=0.07).contains(&ratio), "{ratio} vs {theory}");
    }

    #[test]
    fn fft_autocorrelation_matches_direct_sum() {
        let mut rng = stream_rng(12, 0);
        let xs: Vec<f64> = (0..200).map(|_| StandardNormal.sample(&mut rng)).collect();
        let rho = autocorrelation(&xs).unwrap();
        let m = xs.iter().sum::<f64>() / 200.0;
        let c0: f64 = xs.iter().map(|x| (x - m).powi(2)).sum();
        for lag in [1, 3, 17] {
            let ck: f64 = (0..200 - lag).map(|t| (xs[t] - m) * (xs[t + lag] - m)).sum();
            assert!((rho[lag] - ck / c0).abs() < 1e-10);
        }
    }

    #[test]
    fn degenerate_and_short_series_are_rejected() {
        assert!(matches!(effective_sample_size(&[3.0; 50]), Err(Error::DegenerateChain)));
        assert!(effective_sample_size(&[1.0, 2.0, 3.0]).is_err());
        let mut xs = vec![0.0; 20];
        xs[4] = f64::NAN;
        assert!(effective_sample_size(&xs).is_err());
    }
}
