//! Wavelet filters and single-level 1D analysis/synthesis.
//!
//! Convolution convention (shared with the common reference libraries):
//! for a filter of length `L = 2k`, output `o` of the reflect-padded analysis
//! is `Σ_j f[j] · x̃[2o + 1 − j]`, where `x̃` is the whole-sample symmetric
//! extension `… x₂ x₁ | x₀ x₁ … x_{s−1} | x_{s−2} …`. This produces
//! `⌊(s + L − 1)/2⌋` outputs per band, and every original sample is
//! recovered exactly by the transposed filter bank.

mod boundary;
mod filters;

pub use boundary::{boundary_matrix, BoundaryTransform};
pub(crate) use boundary::cached_boundary_matrix;
pub use filters::{get_filter, WaveletFilter, WAVELET_NAMES};

use crate::error::{Error, Result};
use crate::spec::Boundary;

/// `(approx_len, detail_len)` produced by one analysis step on a length-`s` signal.
pub fn output_lengths(s: usize, filter: &WaveletFilter, mode: Boundary) -> (usize, usize) {
    match effective_mode(filter, mode) {
        Boundary::BoundaryFilter => (s.div_ceil(2), s / 2),
        _ => {
            let m = (s + filter.len() - 1) / 2;
            (m, m)
        }
    }
}

/// Haar needs no boundary treatment, so `None` behaves like reflect (whose
/// extension Haar never touches for even lengths).
fn effective_mode(filter: &WaveletFilter, mode: Boundary) -> Boundary {
    match mode {
        Boundary::None if filter.is_haar() => Boundary::Reflect,
        m => m,
    }
}

fn check_mode(filter: &WaveletFilter, mode: Boundary) -> Result<Boundary> {
    match effective_mode(filter, mode) {
        Boundary::None => Err(Error::Argument(format!(
            "{} needs reflect or boundary-filter handling",
            filter.name
        ))),
        m => Ok(m),
    }
}

#[inline]
fn reflect_index(i: isize, s: usize) -> usize {
    if s == 1 {
        return 0;
    }
    let period = 2 * (s as isize - 1);
    let m = i.rem_euclid(period);
    if m < s as isize {
        m as usize
    } else {
        (period - m) as usize
    }
}

/// One analysis step. Returns `(approx, detail)`.
pub fn analysis_1d(
    signal: &[f64],
    filter: &WaveletFilter,
    mode: Boundary,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let s = signal.len();
    if s < 2 {
        return Err(Error::Size(format!("signal of length {s} is too short")));
    }
    match check_mode(filter, mode)? {
        Boundary::BoundaryFilter => {
            if s < filter.len() {
                return Err(Error::Size(format!(
                    "signal of length {s} is shorter than the {} filter",
                    filter.name
                )));
            }
            Ok(cached_boundary_matrix(s, filter)?.analyze(signal))
        }
        _ => Ok(reflect_analysis(signal, filter)),
    }
}

fn reflect_analysis(signal: &[f64], filter: &WaveletFilter) -> (Vec<f64>, Vec<f64>) {
    let s = signal.len();
    let len = filter.len();
    let m = (s + len - 1) / 2;
    // Extended positions 2 − L ..= 2m − 1.
    let first = 2 - len as isize;
    let ext: Vec<f64> = (first..2 * m as isize)
        .map(|i| signal[reflect_index(i, s)])
        .collect();
    let mut approx = vec![0.0; m];
    let mut detail = vec![0.0; m];
    for o in 0..m {
        // Position 2o + 1 − j maps to ext index 2o + L − 1 − j.
        let base = 2 * o + len - 1;
        let (mut a, mut d) = (0.0, 0.0);
        for j in 0..len {
            let x = ext[base - j];
            a += filter.dec_lo[j] * x;
            d += filter.dec_hi[j] * x;
        }
        approx[o] = a;
        detail[o] = d;
    }
    (approx, detail)
}

/// Inverts [`analysis_1d`] for a signal of `original_length` samples.
pub fn synthesis_1d(
    approx: &[f64],
    detail: &[f64],
    filter: &WaveletFilter,
    mode: Boundary,
    original_length: usize,
) -> Result<Vec<f64>> {
    let mode = check_mode(filter, mode)?;
    let (na, nd) = output_lengths(original_length, filter, mode);
    if approx.len() != na || detail.len() != nd {
        return Err(Error::Size(format!(
            "expected {na}/{nd} coefficients for length {original_length}, got {}/{}",
            approx.len(),
            detail.len()
        )));
    }
    match mode {
        Boundary::BoundaryFilter => {
            Ok(cached_boundary_matrix(original_length, filter)?.synthesize(approx, detail))
        }
        _ => {
            let len = filter.len() as isize;
            let s = original_length as isize;
            let mut x = vec![0.0; original_length];
            for (o, (&a, &d)) in approx.iter().zip(detail).enumerate() {
                let top = 2 * o as isize + 1;
                let j_lo = (top - s + 1).max(0);
                let j_hi = top.min(len - 1);
                for j in j_lo..=j_hi {
                    let ju = j as usize;
                    x[(top - j) as usize] += filter.dec_lo[ju] * a + filter.dec_hi[ju] * d;
                }
            }
            Ok(x)
        }
    }
}

/// Lengths `s_0 = s, s_1, …, s_l` of the approximation chain.
pub fn approx_chain(s: usize, filter: &WaveletFilter, mode: Boundary, level: usize) -> Vec<usize> {
    let mut out = vec![s];
    for _ in 0..level {
        let last = *out.last().unwrap();
        out.push(output_lengths(last, filter, mode).0);
    }
    out
}

/// Multilevel 1D transform; returns `[a_l, d_l, …, d_1]` concatenated.
pub fn wavedec(
    signal: &[f64],
    filter: &WaveletFilter,
    mode: Boundary,
    level: usize,
) -> Result<Vec<f64>> {
    let mut details = Vec::with_capacity(level);
    let mut approx = signal.to_vec();
    for _ in 0..level {
        let (a, d) = analysis_1d(&approx, filter, mode)?;
        details.push(d);
        approx = a;
    }
    let mut out = approx;
    for d in details.into_iter().rev() {
        out.extend(d);
    }
    Ok(out)
}

/// Part lengths `[a_l, d_l, …, d_1]` for [`wavedec`] on a length-`s` signal.
pub fn wavedec_lengths(
    s: usize,
    filter: &WaveletFilter,
    mode: Boundary,
    level: usize,
) -> Vec<usize> {
    let chain = approx_chain(s, filter, mode, level);
    let mut parts = vec![chain[level]];
    for j in (1..=level).rev() {
        parts.push(output_lengths(chain[j - 1], filter, mode).1);
    }
    parts
}

/// Inverse of [`wavedec`].
pub fn waverec(
    coeffs: &[f64],
    filter: &WaveletFilter,
    mode: Boundary,
    level: usize,
    original_length: usize,
) -> Result<Vec<f64>> {
    let chain = approx_chain(original_length, filter, mode, level);
    let parts = wavedec_lengths(original_length, filter, mode, level);
    let total: usize = parts.iter().sum();
    if coeffs.len() != total {
        return Err(Error::Size(format!(
            "expected {total} coefficients, got {}",
            coeffs.len()
        )));
    }
    let mut approx = coeffs[..parts[0]].to_vec();
    let mut offset = parts[0];
    for (i, j) in (1..=level).rev().enumerate() {
        let d = &coeffs[offset..offset + parts[i + 1]];
        offset += parts[i + 1];
        approx = synthesis_1d(&approx, d, filter, mode, chain[j - 1])?;
    }
    Ok(approx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn lcg(seed: u64, n: usize) -> Vec<f64> {
        let mut x = seed.wrapping_add(0x9e3779b97f4a7c15);
        (0..n)
            .map(|_| {
                x = x.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                ((x >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
            })
            .collect()
    }

    // Frozen output of an external reference implementation (reflect mode).
    // Its high-pass filter has the opposite sign convention, so details are
    // compared up to sign.
    const SIGNAL: [f64; 13] = [
        -3.5, 3.5, -0.5, 6.5, 2.5, -1.5, 5.5, 1.5, -2.5, 4.5, 0.5, -3.5, 3.5,
    ];
    const DB3_APPROX: [f64; 9] = [
        5.796330351989249, 0.8473667128612966, 0.2858203436040032, 6.013582250836088,
        2.320270348235649, 1.1167693013087223, 3.07947625043277, -0.45987750211849165,
        -1.770941563716804,
    ];
    const DB3_DETAIL: [f64; 9] = [
        -4.887098955376259, -3.4214057235656736, -0.22971121407510225, 4.828941309228305,
        -4.986719305896006, 0.15777799666770267, 5.826952968078552, -0.23797035888523468,
        -4.828941309228305,
    ];
    const DB2_APPROX: [f64; 8] = [
        1.4488887394336025, 0.2842030364722592, 5.950348471655409, 0.9913098176588064,
        2.7683679563159442, 3.121921346909218, -1.4488887394336025, -1.7077077845361237,
    ];

    #[test]
    fn matches_reference_reflect_outputs() {
        let (a, d) = analysis_1d(&SIGNAL, get_filter("db3").unwrap(), Boundary::Reflect).unwrap();
        for (x, y) in a.iter().zip(DB3_APPROX) {
            assert!((x - y).abs() < 1e-12);
        }
        for (x, y) in d.iter().zip(DB3_DETAIL) {
            assert!((x + y).abs() < 1e-12);
        }
        let (a, _) = analysis_1d(&SIGNAL, get_filter("db2").unwrap(), Boundary::Reflect).unwrap();
        for (x, y) in a.iter().zip(DB2_APPROX) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn constant_signal_has_zero_detail() {
        for name in WAVELET_NAMES {
            let f = get_filter(name).unwrap();
            let (a, d) = analysis_1d(&[3.25; 40], f, Boundary::Reflect).unwrap();
            assert!(d.iter().all(|v| v.abs() < 1e-10), "{name}");
            assert!(a.iter().all(|v| (v - 3.25 * 2f64.sqrt()).abs() < 1e-10), "{name}");
        }
    }

    #[test]
    fn reflect_output_lengths() {
        let db3 = get_filter("db3").unwrap();
        assert_eq!(output_lengths(128, db3, Boundary::Reflect), (66, 66));
        assert_eq!(approx_chain(128, db3, Boundary::Reflect, 3), vec![128, 66, 35, 20]);
        assert_eq!(wavedec_lengths(128, db3, Boundary::Reflect, 3), vec![20, 20, 35, 66]);
        let db4 = get_filter("db4").unwrap();
        assert_eq!(wavedec_lengths(128, db4, Boundary::Reflect, 3), vec![22, 22, 37, 67]);
    }

    #[test]
    fn haar_boundary_mode_halves_and_preserves_energy() {
        let haar = get_filter("haar").unwrap();
        let x = lcg(1, 128);
        let (a, d) = analysis_1d(&x, haar, Boundary::BoundaryFilter).unwrap();
        assert_eq!((a.len(), d.len()), (64, 64));
        let e_in: f64 = x.iter().map(|v| v * v).sum();
        let e_out: f64 = a.iter().chain(&d).map(|v| v * v).sum();
        assert!((e_in - e_out).abs() < 1e-12 * e_in);
    }

    #[test]
    fn round_trips() {
        let db4 = get_filter("db4").unwrap();
        let x = lcg(2, 128);
        let (a, d) = analysis_1d(&x, db4, Boundary::Reflect).unwrap();
        let y = synthesis_1d(&a, &d, db4, Boundary::Reflect, 128).unwrap();
        assert!(x.iter().zip(&y).all(|(p, q)| (p - q).abs() < 1e-8));

        let db3 = get_filter("db3").unwrap();
        let x = lcg(3, 100);
        let (a, d) = analysis_1d(&x, db3, Boundary::BoundaryFilter).unwrap();
        assert_eq!((a.len(), d.len()), (50, 50));
        let y = synthesis_1d(&a, &d, db3, Boundary::BoundaryFilter, 100).unwrap();
        assert!(x.iter().zip(&y).all(|(p, q)| (p - q).abs() < 1e-8));

        // Oracle inverse: the transpose of the dense matrix.
        let m = boundary_matrix(100, db3).unwrap().matrix();
        let mut z = vec![0.0; 100];
        for (i, row) in m.iter().enumerate() {
            let c = if i % 2 == 0 { a[i / 2] } else { d[i / 2] };
            for (zj, rj) in z.iter_mut().zip(row) {
                *zj += c * rj;
            }
        }
        assert!(z.iter().zip(&y).all(|(p, q)| (p - q).abs() < 1e-12));
    }

    #[test]
    fn zero_coefficients_give_zero_signal() {
        let f = get_filter("db5").unwrap();
        let y = synthesis_1d(&[0.0; 39], &[0.0; 39], f, Boundary::Reflect, 69).unwrap();
        assert!(y.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn inconsistent_lengths_are_size_errors() {
        let f = get_filter("db2").unwrap();
        assert!(matches!(
            synthesis_1d(&[0.0; 5], &[0.0; 4], f, Boundary::Reflect, 8),
            Err(Error::Size(_))
        ));
        assert!(matches!(
            analysis_1d(&[1.0; 5], get_filter("db3").unwrap(), Boundary::BoundaryFilter),
            Err(Error::Size(_))
        ));
    }

    #[test]
    fn polynomial_details_vanish_in_the_interior() {
        for name in WAVELET_NAMES {
            let f = get_filter(name).unwrap();
            let k = f.vanishing_moments();
            let s = 96;
            let x: Vec<f64> = (0..s)
                .map(|i| {
                    let t = i as f64 / s as f64;
                    (0..k).map(|p| (p as f64 + 1.0) * t.powi(p as i32)).sum()
                })
                .collect();
            let (_, d) = analysis_1d(&x, f, Boundary::Reflect).unwrap();
            // Outputs whose support stays inside the signal: 2o+1-(L-1) >= 0, 2o+1 <= s-1.
            let len = f.len();
            for (o, v) in d.iter().enumerate() {
                if 2 * o + 2 >= len && 2 * o + 1 < s {
                    assert!(v.abs() < 1e-7, "{name} o={o}: {v:e}");
                }
            }
            let t = boundary_matrix(s, f).unwrap();
            let (_, d) = t.analyze(&x);
            for (o, v) in d.iter().enumerate() {
                if !t.boundary_rows().contains(&(2 * o + 1)) {
                    assert!(v.abs() < 1e-7, "{name} boundary-mode o={o}: {v:e}");
                }
            }
        }
    }

    proptest! {
        #[test]
        fn boundary_mode_preserves_energy(
            fi in 0usize..7, s in 32usize..200, seed in any::<u64>()
        ) {
            let f = get_filter(WAVELET_NAMES[fi]).unwrap();
            let x = lcg(seed, s);
            let (a, d) = analysis_1d(&x, f, Boundary::BoundaryFilter).unwrap();
            let e_in: f64 = x.iter().map(|v| v * v).sum();
            let e_out: f64 = a.iter().chain(&d).map(|v| v * v).sum();
            prop_assert!((e_in.sqrt() - e_out.sqrt()).abs() < 1e-10 * e_in.sqrt().max(1.0));
        }

        #[test]
        fn analysis_is_linear(
            fi in 0usize..7, s in 16usize..90, seed in any::<u64>(),
            alpha in -3.0f64..3.0, beta in -3.0f64..3.0, boundary in any::<bool>()
        ) {
            let f = get_filter(WAVELET_NAMES[fi]).unwrap();
            let mode = if boundary && s >= 2 * f.len() { Boundary::BoundaryFilter } else { Boundary::Reflect };
            let x = lcg(seed, s);
            let y = lcg(seed ^ 0xabcdef, s);
            let z: Vec<f64> = x.iter().zip(&y).map(|(p, q)| alpha * p + beta * q).collect();
            let (ax, dx) = analysis_1d(&x, f, mode).unwrap();
            let (ay, dy) = analysis_1d(&y, f, mode).unwrap();
            let (az, dz) = analysis_1d(&z, f, mode).unwrap();
            for i in 0..az.len() {
                prop_assert!((az[i] - alpha * ax[i] - beta * ay[i]).abs() < 1e-10);
            }
            for i in 0..dz.len() {
                prop_assert!((dz[i] - alpha * dx[i] - beta * dy[i]).abs() < 1e-10);
            }
        }

        #[test]
        fn multilevel_round_trip(
            fi in 0usize..7, s in 2usize..160, level in 1usize..4, seed in any::<u64>()
        ) {
            let f = get_filter(WAVELET_NAMES[fi]).unwrap();
            let x = lcg(seed, s);
            // Every level needs an input of at least two samples.
            let mut n = s;
            for _ in 0..level {
                if n < 2 {
                    prop_assert!(matches!(wavedec(&x, f, Boundary::Reflect, level), Err(Error::Size(_))));
                    return Ok(());
                }
                n = output_lengths(n, f, Boundary::Reflect).0;
            }
            let c = wavedec(&x, f, Boundary::Reflect, level).unwrap();
            prop_assert_eq!(c.len(), wavedec_lengths(s, f, Boundary::Reflect, level).iter().sum::<usize>());
            let y = waverec(&c, f, Boundary::Reflect, level, s).unwrap();
            for (p, q) in x.iter().zip(&y) {
                prop_assert!((p - q).abs() < 1e-8);
            }
        }
    }
}
