//! Bias, correlation, Gowers norms, and the derivative-bias survey.
//!
//! Exhaustive sums run on integer value histograms: every partial result is
//! an exact integer count, merged in a fixed order, and a single complex
//! combination happens at the end. Results are therefore bitwise stable
//! under any worker partitioning.

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::gf::chi;
use crate::poly::{AffineMap, Poly};
use crate::table::{domain_size, encode_point, FnTable};

/// Exhaustive bias enumerates q^n points up to this cap.
pub const EXACT_BIAS_CAP: u128 = 1 << 24;
/// Exhaustive Gowers sums enumerate q^{n(d+1)} tuples up to this cap.
pub const EXACT_GOWERS_CAP: u128 = 1 << 34;
/// Monte Carlo halfwidth reported as 3/sqrt(samples); no distributional claim.
pub const MC_HALFWIDTH_FACTOR: f64 = 3.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Exact,
    MonteCarlo,
}

/// |E_x chi(f(x))| together with how it was obtained.
#[derive(Clone, Debug, Serialize)]
pub struct BiasReport {
    pub value: f64,
    pub method: Method,
    pub samples: u64,
    #[serde(rename = "halfwidth")]
    pub confidence_halfwidth: f64,
    pub seed: Option<u64>,
}

/// Gowers norm of order `order` of chi(f).
#[derive(Clone, Debug, Serialize)]
pub struct GowersEstimate {
    pub order: u32,
    pub value: f64,
    /// Mean of the d-fold multiplicative derivative before the 2^d-th
    /// root; `value` is raw^(1/2^d).
    pub raw: f64,
    pub method: Method,
    pub samples: u64,
    #[serde(rename = "halfwidth")]
    pub confidence_halfwidth: f64,
    pub seed: Option<u64>,
    /// Set when a negative sampled raw mean was clamped to zero before the
    /// 2^d-th root.
    pub clamped: bool,
}

/// Combine a value histogram into |sum chi| / total.
fn histogram_bias(hist: &[u64], q: u8) -> f64 {
    let total: u64 = hist.iter().sum();
    if total == 0 {
        return 0.0;
    }
    if q == 2 {
        // exact integer difference
        let diff = hist[0] as i64 - hist[1] as i64;
        return diff.unsigned_abs() as f64 / total as f64;
    }
    let sum: Complex64 = hist
        .iter()
        .enumerate()
        .map(|(v, &c)| chi(v as u8, q) * c as f64)
        .sum();
    sum.norm() / total as f64
}

pub(crate) fn bias_of_table(table: &FnTable) -> f64 {
    histogram_bias(&table.histogram(), table.q())
}

/// Exact bias by full enumeration.
pub fn bias(f: &Poly) -> Result<BiasReport> {
    let size = domain_size(f.q(), f.n());
    if size > EXACT_BIAS_CAP {
        return Err(Error::CapExceeded {
            size,
            cap: EXACT_BIAS_CAP,
        });
    }
    let table = f.table()?;
    Ok(BiasReport {
        value: bias_of_table(&table),
        method: Method::Exact,
        samples: size as u64,
        confidence_halfwidth: 0.0,
        seed: None,
    })
}

/// Monte Carlo bias over uniform points. Deterministic in the seed.
pub fn bias_mc(f: &Poly, samples: u64, seed: u64) -> Result<BiasReport> {
    if samples < 100 {
        return Err(Error::Invalid("need at least 100 samples".into()));
    }
    let q = f.q();
    let table = if domain_size(q, f.n()) <= EXACT_BIAS_CAP {
        Some(f.table()?)
    } else {
        None
    };
    let mut rng = crate::rng::seeded(seed);
    let mut hist = vec![0u64; q as usize];
    let mut point = vec![0u8; f.n()];
    for _ in 0..samples {
        for d in point.iter_mut() {
            *d = rng.gen_range(0..q);
        }
        let v = match &table {
            Some(t) => t.value(encode_point(&point, q)),
            None => f.evaluate(&point)?,
        };
        hist[v as usize] += 1;
    }
    Ok(BiasReport {
        value: histogram_bias(&hist, q),
        method: Method::MonteCarlo,
        samples,
        confidence_halfwidth: MC_HALFWIDTH_FACTOR / (samples as f64).sqrt(),
        seed: Some(seed),
    })
}

/// Additive derivative D_y f = f(x + y) - f(x), exactly, as a polynomial.
pub fn derivative(f: &Poly, y: &[u8]) -> Result<Poly> {
    let shifted = f.substitute(&AffineMap::translation(f.q(), y)?)?;
    shifted.sub(f)
}

/// Exact Gowers norm of order d of chi(f), by full enumeration of
/// (y_1..y_d, x). The order-1 value coincides with the bias.
pub fn gowers_norm(f: &Poly, d: u32) -> Result<GowersEstimate> {
    if d == 0 || d > 24 {
        return Err(Error::Invalid("Gowers order must be in 1..=24".into()));
    }
    let size = domain_size(f.q(), f.n());
    let total = size.pow(d + 1);
    if total > EXACT_GOWERS_CAP {
        return Err(Error::CapExceeded {
            size: total,
            cap: EXACT_GOWERS_CAP,
        });
    }
    let table = f.table()?;
    let hist = gowers_histogram(&table, d);
    let q = f.q();
    let raw = histogram_bias(&hist, q); // |mean| over all tuples
    Ok(GowersEstimate {
        order: d,
        value: raw.powf(1.0 / (1u64 << d) as f64),
        raw,
        method: Method::Exact,
        samples: total as u64,
        confidence_halfwidth: 0.0,
        seed: None,
        clamped: false,
    })
}

/// Histogram of iterated-derivative values over all (y_1..y_d, x) tuples.
/// The top level fans out over y in fixed-size chunks; counts merge by
/// addition, so the reduction order cannot affect the result.
fn gowers_histogram(table: &FnTable, d: u32) -> Vec<u64> {
    let q = table.q() as usize;
    if d == 0 {
        return table.histogram();
    }
    let len = table.len();
    if d >= 2 && len >= 64 {
        let chunk = 16u64;
        let chunks: Vec<u64> = (0..len.div_ceil(chunk)).collect();
        return chunks
            .par_iter()
            .map(|&ci| {
                let mut acc = vec![0u64; q];
                let lo = ci * chunk;
                let hi = (lo + chunk).min(len);
                for y in lo..hi {
                    let sub = gowers_histogram_serial(&table.derivative(y), d - 1, q);
                    for (a, b) in acc.iter_mut().zip(sub) {
                        *a += b;
                    }
                }
                acc
            })
            .reduce(
                || vec![0u64; q],
                |mut a, b| {
                    for (x, y) in a.iter_mut().zip(b) {
                        *x += y;
                    }
                    a
                },
            );
    }
    gowers_histogram_serial(table, d, q)
}

fn gowers_histogram_serial(table: &FnTable, d: u32, q: usize) -> Vec<u64> {
    if d == 0 {
        return table.histogram();
    }
    let mut acc = vec![0u64; q];
    for y in 0..table.len() {
        let sub = gowers_histogram_serial(&table.derivative(y), d - 1, q);
        for (a, b) in acc.iter_mut().zip(sub) {
            *a += b;
        }
    }
    acc
}

/// Monte Carlo Gowers norm over sampled (x, y_1..y_d) tuples.
pub fn gowers_mc(f: &Poly, d: u32, samples: u64, seed: u64) -> Result<GowersEstimate> {
    if d == 0 || d > 24 {
        return Err(Error::Invalid("Gowers order must be in 1..=24".into()));
    }
    if samples < 100 {
        return Err(Error::Invalid("need at least 100 samples".into()));
    }
    let q = f.q();
    let n = f.n();
    let table = if domain_size(q, n) <= EXACT_BIAS_CAP {
        Some(f.table()?)
    } else {
        None
    };
    let field = f.field();
    let mut rng = crate::rng::seeded(seed);
    // histogram over the signed subset sums; kept integer until the end
    let mut hist = vec![0u64; q as usize];
    let mut ys: Vec<Vec<u8>> = vec![vec![0u8; n]; d as usize];
    let mut x = vec![0u8; n];
    let mut point = vec![0u8; n];
    for _ in 0..samples {
        for y in ys.iter_mut() {
            for v in y.iter_mut() {
                *v = rng.gen_range(0..q);
            }
        }
        for v in x.iter_mut() {
            *v = rng.gen_range(0..q);
        }
        let mut val = 0u8;
        for mask in 0u64..(1 << d) {
            point.copy_from_slice(&x);
            for (i, y) in ys.iter().enumerate() {
                if mask >> i & 1 == 1 {
                    for (pj, &yj) in point.iter_mut().zip(y) {
                        *pj = field.add(*pj, yj);
                    }
                }
            }
            let fv = match &table {
                Some(t) => t.value(encode_point(&point, q)),
                None => f.evaluate(&point)?,
            };
            // sign (-1)^(d - |mask|)
            if (d - mask.count_ones()).is_multiple_of(2) {
                val = field.add(val, fv);
            } else {
                val = field.sub(val, fv);
            }
        }
        hist[val as usize] += 1;
    }
    // the true mean is real and nonnegative; the sampled real part may dip
    // below zero, in which case it clamps to zero and flags it
    let mean: Complex64 = hist
        .iter()
        .enumerate()
        .map(|(v, &c)| chi(v as u8, q) * c as f64)
        .sum::<Complex64>()
        / samples as f64;
    let raw = mean.re;
    let (clamped, raw) = if raw < 0.0 { (true, 0.0) } else { (false, raw) };
    Ok(GowersEstimate {
        order: d,
        value: raw.powf(1.0 / (1u64 << d) as f64),
        raw,
        method: Method::MonteCarlo,
        samples,
        confidence_halfwidth: MC_HALFWIDTH_FACTOR / (samples as f64).sqrt(),
        seed: Some(seed),
        clamped,
    })
}

/// |<chi(f), chi(p)>| = bias(f - p), exactly.
pub fn correlation(f: &Poly, p: &Poly) -> Result<f64> {
    Ok(bias(&f.sub(p)?)?.value)
}

/// Survey of bias(D_y f) over every direction y.
#[derive(Clone, Debug, Serialize)]
pub struct DerivativeSurvey {
    pub threshold: f64,
    /// bias(f), for reference.
    pub bias: f64,
    /// Fraction of directions with bias(D_y f) >= threshold.
    pub density: f64,
    /// Mean of bias(D_y f) over all directions.
    pub mean: f64,
    /// Whether mean >= bias(f)^2 (up to 1e-12).
    pub mean_ge_bias_squared: bool,
    pub method: Method,
    pub samples: u64,
    pub seed: Option<u64>,
    /// The biased directions themselves, when the domain is small enough to
    /// list (at most 4096 directions).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub biased_directions: Option<Vec<u64>>,
}

/// Exact derivative survey: enumerates every direction and computes each
/// derivative bias by full enumeration.
pub fn derivative_survey(f: &Poly, threshold: f64) -> Result<DerivativeSurvey> {
    let size = domain_size(f.q(), f.n());
    if size > EXACT_BIAS_CAP {
        return Err(Error::CapExceeded {
            size,
            cap: EXACT_BIAS_CAP,
        });
    }
    let table = f.table()?;
    let len = table.len();
    let q = f.q();
    let biases: Vec<f64> = (0..len)
        .into_par_iter()
        .map(|y| histogram_bias(&table.derivative(y).histogram(), q))
        .collect();
    let mean = biases.iter().sum::<f64>() / len as f64;
    let hits: Vec<u64> = (0..len).filter(|&y| biases[y as usize] >= threshold).collect();
    let density = hits.len() as f64 / len as f64;
    let b = bias_of_table(&table);
    Ok(DerivativeSurvey {
        threshold,
        bias: b,
        density,
        mean,
        mean_ge_bias_squared: mean >= b * b - 1e-12,
        method: Method::Exact,
        samples: len,
        seed: None,
        biased_directions: (len <= 4096).then_some(hits),
    })
}

/// Sampled derivative survey for domains past the exact cap: draws
/// directions at random and estimates each derivative bias from sampled
/// points. Both sample counts are the square root of the requested total.
pub fn derivative_survey_mc(
    f: &Poly,
    threshold: f64,
    samples: u64,
    seed: u64,
) -> Result<DerivativeSurvey> {
    if samples < 100 {
        return Err(Error::Invalid("need at least 100 samples".into()));
    }
    let per_axis = (samples as f64).sqrt().ceil() as u64;
    let q = f.q();
    let field = f.field();
    let mut rng = crate::rng::seeded(seed);
    let mut hit = 0u64;
    let mut total_bias = 0.0;
    let bias_est = bias_mc(f, per_axis.max(100), seed ^ 0x5eed)?.value;
    for _ in 0..per_axis {
        let y = crate::rng::random_point(&mut rng, q, f.n());
        let mut hist = vec![0u64; q as usize];
        for _ in 0..per_axis {
            let x = crate::rng::random_point(&mut rng, q, f.n());
            let xs: Vec<u8> = x.iter().zip(&y).map(|(&a, &b)| field.add(a, b)).collect();
            let d = field.sub(f.evaluate(&xs)?, f.evaluate(&x)?);
            hist[d as usize] += 1;
        }
        let b = histogram_bias(&hist, q);
        total_bias += b;
        if b >= threshold {
            hit += 1;
        }
    }
    let mean = total_bias / per_axis as f64;
    Ok(DerivativeSurvey {
        threshold,
        bias: bias_est,
        density: hit as f64 / per_axis as f64,
        mean,
        mean_ge_bias_squared: mean >= bias_est * bias_est - 1e-12,
        method: Method::MonteCarlo,
        samples: per_axis * per_axis,
        seed: Some(seed),
        biased_directions: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::parse;

    fn p(text: &str, q: u8, n: usize) -> Poly {
        parse(text, q, n, false).unwrap()
    }

    /// Brute-force complex-sum bias, independent of the table machinery.
    fn bias_oracle(f: &Poly) -> f64 {
        let size = domain_size(f.q(), f.n()) as u64;
        let sum: Complex64 = (0..size)
            .map(|idx| {
                let x = crate::table::decode_point(idx, f.q(), f.n());
                chi(f.evaluate(&x).unwrap(), f.q())
            })
            .sum();
        sum.norm() / size as f64
    }

    #[test]
    fn bias_small_cases() {
        let one = Poly::constant(2, 2, 1);
        assert_eq!(bias(&one).unwrap().value, 1.0);

        let x1 = p("x1", 2, 2);
        assert_eq!(bias(&x1).unwrap().value, 0.0);

        let and = p("x1*x2", 2, 2);
        assert!((bias(&and).unwrap().value - 0.5).abs() < 1e-12);

        let two_pairs = p("x1*x2 + x3*x4", 2, 4);
        assert!((bias(&two_pairs).unwrap().value - 0.25).abs() < 1e-12);

        // |1 + 2 exp(2 pi i / 3)| / 3 = 1/sqrt(3)
        let sq = p("x1^2", 3, 1);
        assert!((bias(&sq).unwrap().value - 0.5773502691896258).abs() < 1e-9);
    }

    #[test]
    fn bias_matches_oracle_on_random_instances() {
        for seed in 0..20u64 {
            let f = crate::poly::random_poly(2, 5, 3, seed).unwrap();
            assert!((bias(&f).unwrap().value - bias_oracle(&f)).abs() < 1e-12);
        }
        for seed in 0..10u64 {
            let f = crate::poly::random_poly(3, 3, 3, seed).unwrap();
            assert!((bias(&f).unwrap().value - bias_oracle(&f)).abs() < 1e-12);
        }
    }

    #[test]
    fn bias_mc_behaviour() {
        let c = Poly::constant(2, 4, 1);
        assert_eq!(bias_mc(&c, 500, 3).unwrap().value, 1.0);

        // exact bias is 0; the estimate must sit inside the halfwidth
        let x1 = p("x1", 2, 10);
        let r = bias_mc(&x1, 100_000, 12).unwrap();
        assert!(r.value <= 0.02, "estimate {} drifted", r.value);

        let a = bias_mc(&x1, 1000, 5).unwrap();
        let b = bias_mc(&x1, 1000, 5).unwrap();
        assert_eq!(a.value, b.value);
        assert!(bias_mc(&x1, 50, 1).is_err());
    }

    #[test]
    fn derivative_examples() {
        let f = p("x1*x2*x3", 2, 3);
        let d = derivative(&f, &[1, 0, 0]).unwrap();
        assert_eq!(d, p("x2*x3", 2, 3));
        // checked on all 8 points
        for idx in 0..8u64 {
            let x = crate::table::decode_point(idx, 2, 3);
            let xs = [x[0] ^ 1, x[1], x[2]];
            assert_eq!(
                d.evaluate(&x).unwrap(),
                f.evaluate(&xs).unwrap() ^ f.evaluate(&x).unwrap()
            );
        }

        assert!(derivative(&f, &[0, 0, 0]).unwrap().is_zero());

        let lin = p("x1", 3, 1);
        assert_eq!(derivative(&lin, &[2]).unwrap(), Poly::constant(3, 1, 2));
    }

    #[test]
    fn derivative_drops_degree() {
        for seed in 0..10u64 {
            let f = crate::poly::random_poly(3, 3, 4, seed).unwrap();
            let Some(deg) = f.degree() else { continue };
            for y in [[1, 0, 2], [1, 1, 1], [0, 2, 0]] {
                let d = derivative(&f, &y).unwrap();
                assert!(d.degree() < Some(deg + 1) && d.degree() <= Some(deg.saturating_sub(1)) || d.is_zero());
            }
        }
    }

    /// Direct tuple-sum Gowers oracle for tiny instances.
    fn gowers_oracle(f: &Poly, d: u32) -> f64 {
        let q = f.q();
        let n = f.n();
        let size = domain_size(q, n) as u64;
        let field = f.field();
        let mut tuples = vec![0u64; d as usize + 1];
        let mut sum = Complex64::new(0.0, 0.0);
        let total = size.pow(d + 1);
        for t in 0..total {
            let mut rest = t;
            for slot in tuples.iter_mut() {
                *slot = rest % size;
                rest /= size;
            }
            let x = crate::table::decode_point(tuples[d as usize], q, n);
            let mut val = 0u8;
            for mask in 0u64..(1 << d) {
                let mut point = x.clone();
                for (i, &yidx) in tuples[..d as usize].iter().enumerate() {
                    if mask >> i & 1 == 1 {
                        let y = crate::table::decode_point(yidx, q, n);
                        for (pj, &yj) in point.iter_mut().zip(&y) {
                            *pj = field.add(*pj, yj);
                        }
                    }
                }
                let fv = f.evaluate(&point).unwrap();
                if (d - mask.count_ones()).is_multiple_of(2) {
                    val = field.add(val, fv);
                } else {
                    val = field.sub(val, fv);
                }
            }
            sum += chi(val, q);
        }
        (sum.norm() / total as f64).powf(1.0 / (1u64 << d) as f64)
    }

    #[test]
    fn gowers_u2_of_and_gate() {
        let f = p("x1*x2", 2, 2);
        let got = gowers_norm(&f, 2).unwrap().value;
        // equals (1/4)^(1/4) = 1/sqrt(2), frozen from the direct tuple sum
        assert!((got - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-9);
        assert!((got - gowers_oracle(&f, 2)).abs() < 1e-9);
    }

    #[test]
    fn gowers_matches_oracle_small() {
        // the float-summing oracle carries ~1e-16 dust that the 2^d-th root
        // amplifies near zero, hence the looser tolerance
        for seed in 0..5u64 {
            let f = crate::poly::random_poly(2, 3, 2, seed).unwrap();
            for d in 1..=3u32 {
                let got = gowers_norm(&f, d).unwrap().value;
                assert!((got - gowers_oracle(&f, d)).abs() < 1e-7, "seed {seed} d {d}");
            }
        }
        let f = crate::poly::random_poly(3, 2, 2, 1).unwrap();
        for d in 1..=2u32 {
            let got = gowers_norm(&f, d).unwrap().value;
            assert!((got - gowers_oracle(&f, d)).abs() < 1e-7);
        }
    }

    #[test]
    fn gowers_order_one_is_bias() {
        for seed in 0..10u64 {
            let f = crate::poly::random_poly(2, 4, 3, seed).unwrap();
            let b = bias(&f).unwrap().value;
            let u1 = gowers_norm(&f, 1).unwrap().value;
            assert!((b - u1).abs() < 1e-12);
        }
        let x1 = p("x1", 2, 1);
        assert_eq!(gowers_norm(&x1, 1).unwrap().value, 0.0);
    }

    #[test]
    fn gowers_saturates_above_degree() {
        for seed in 0..5u64 {
            let f = crate::poly::random_poly(2, 4, 2, seed).unwrap();
            let d = match f.degree() {
                Some(d) if d >= 1 => d,
                _ => continue,
            };
            let v = gowers_norm(&f, d + 1).unwrap().value;
            assert!((v - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn gowers_monotone_in_order() {
        for seed in 0..5u64 {
            let f = crate::poly::random_poly(2, 4, 3, seed).unwrap();
            let mut prev = 0.0;
            for d in 1..=4u32 {
                let v = gowers_norm(&f, d).unwrap().value;
                assert!(v + 1e-9 >= prev, "monotonicity broke at order {d}");
                prev = v;
            }
        }
    }

    #[test]
    fn gowers_exact_cap_enforced() {
        let f = crate::poly::random_poly(2, 12, 3, 0).unwrap();
        assert!(matches!(
            gowers_norm(&f, 2),
            Err(Error::CapExceeded { .. })
        ));
    }

    #[test]
    fn gowers_mc_agrees_roughly_and_repeats() {
        let f = p("x1*x2", 2, 2);
        let a = gowers_mc(&f, 2, 20_000, 11).unwrap();
        let b = gowers_mc(&f, 2, 20_000, 11).unwrap();
        assert_eq!(a.value, b.value);
        assert!((a.value - std::f64::consts::FRAC_1_SQRT_2).abs() < 0.05);
    }

    #[test]
    fn correlation_examples() {
        let f = p("x1*x2", 2, 2);
        assert!((correlation(&f, &f).unwrap() - 1.0).abs() < 1e-12);
        let x1 = p("x1", 2, 2);
        let x2 = p("x2", 2, 2);
        assert_eq!(correlation(&x1, &x2).unwrap(), 0.0);
        let zero = Poly::zero(2, 2);
        assert!((correlation(&f, &zero).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn survey_of_and_gate_hits_equality() {
        let f = p("x1*x2", 2, 2);
        let s = derivative_survey(&f, 0.5).unwrap();
        // derivatives: direction 0 gives bias 1, the rest bias 0
        assert_eq!(s.biased_directions.as_deref(), Some(&[0u64][..]));
        assert!((s.density - 0.25).abs() < 1e-12);
        assert!((s.mean - 0.25).abs() < 1e-12);
        assert!(s.mean_ge_bias_squared);
        assert!((s.mean - s.bias * s.bias).abs() < 1e-12, "equality case");
    }

    #[test]
    fn survey_of_constants_and_linears() {
        let c = Poly::constant(2, 3, 1);
        let s = derivative_survey(&c, 0.9).unwrap();
        assert_eq!(s.density, 1.0);
        assert_eq!(s.mean, 1.0);

        let x1 = p("x1", 2, 3);
        let s = derivative_survey(&x1, 0.5).unwrap();
        // every derivative of a linear map is constant
        assert_eq!(s.density, 1.0);
        assert_eq!(s.mean, 1.0);
        assert!(s.mean_ge_bias_squared);
    }

    #[test]
    fn cocycle_identity_exhaustive_small() {
        // D_{a+b} f(x) = D_b f(x+a) + D_a f(x) for all f, a, b, x
        for seed in 0..6u64 {
            let f = crate::poly::random_poly(2, 3, 3, seed).unwrap();
            let field = f.field();
            for aidx in 0..8u64 {
                for bidx in 0..8u64 {
                    let a = crate::table::decode_point(aidx, 2, 3);
                    let b = crate::table::decode_point(bidx, 2, 3);
                    let ab: Vec<u8> =
                        a.iter().zip(&b).map(|(&x, &y)| field.add(x, y)).collect();
                    let lhs = derivative(&f, &ab).unwrap();
                    let shifted =
                        derivative(&f, &b).unwrap().substitute(&AffineMap::translation(2, &a).unwrap()).unwrap();
                    let rhs = shifted.add(&derivative(&f, &a).unwrap()).unwrap();
                    assert_eq!(lhs, rhs);
                }
            }
        }
    }
}
