use std::sync::OnceLock;

use crate::error::{Error, Result};

/// Daubechies scaling filters (decomposition low-pass, convolution order),
/// db2..db7, evaluated by spectral factorization at 60 digits.
const DAUBECHIES: [&[f64]; 6] = [
    &[
        -0.12940952255126038117,
        0.22414386804201338103,
        0.83651630373780790558,
        0.48296291314453414337,
    ],
    &[
        0.035226291885709536603,
        -0.085441273882026661693,
        -0.1350110200102545887,
        0.4598775021184915701,
        0.80689150931109257649,
        0.332670552950082616,
    ],
    &[
        -0.010597401785069032105,
        0.032883011666885199735,
        0.030841381835560763627,
        -0.18703481171909308408,
        -0.027983769416859854211,
        0.63088076792985890788,
        0.71484657055291564709,
        0.23037781330889650086,
    ],
    &[
        0.003335725285473771278,
        -0.012580751999081999469,
        -0.0062414902127982742742,
        0.077571493840045713523,
        -0.032244869584638374648,
        -0.24229488706638203186,
        0.13842814590132073151,
        0.72430852843777292773,
        0.60382926979718967054,
        0.16010239797419291448,
    ],
    &[
        -0.0010773010853084795649,
        0.0047772575109455106396,
        0.00055384220116149613925,
        -0.031582039317486029565,
        0.027522865530305728626,
        0.097501605587323049102,
        -0.12976686756726193556,
        -0.22626469396543982008,
        0.31525035170919762909,
        0.75113390802109535068,
        0.49462389039845308568,
        0.11154074335010946362,
    ],
    &[
        0.00035371379997452024845,
        -0.0018016407040474909153,
        0.00042957797292136652113,
        0.012550998556099840613,
        -0.016574541630666880654,
        -0.03802993693501441358,
        0.080612609151083071913,
        0.071309219266830264751,
        -0.22403618499387498264,
        -0.14390600392856497541,
        0.46978228740519312247,
        0.72913209084623511992,
        0.39653931948191730654,
        0.07785205408500917902,
    ],
];

pub const WAVELET_NAMES: [&str; 7] = ["haar", "db2", "db3", "db4", "db5", "db6", "db7"];

/// An orthonormal two-channel filter bank.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveletFilter {
    pub name: &'static str,
    pub dec_lo: Vec<f64>,
    pub dec_hi: Vec<f64>,
    pub rec_lo: Vec<f64>,
    pub rec_hi: Vec<f64>,
}

impl WaveletFilter {
    fn from_lowpass(name: &'static str, dec_lo: &[f64]) -> Self {
        let len = dec_lo.len();
        let dec_hi: Vec<f64> = (0..len)
            .map(|i| {
                let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
                sign * dec_lo[len - 1 - i]
            })
            .collect();
        WaveletFilter {
            name,
            rec_lo: dec_lo.iter().rev().copied().collect(),
            rec_hi: dec_hi.iter().rev().copied().collect(),
            dec_lo: dec_lo.to_vec(),
            dec_hi,
        }
    }

    /// Filter length `2k`.
    pub fn len(&self) -> usize {
        self.dec_lo.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dec_lo.is_empty()
    }

    /// Number of vanishing moments `k` of the high-pass filter.
    pub fn vanishing_moments(&self) -> usize {
        self.len() / 2
    }

    pub fn is_haar(&self) -> bool {
        self.len() == 2
    }

    /// Verifies orthonormality, the QMF relation and the vanishing moments.
    pub fn check_invariants(&self) -> Result<()> {
        let len = self.len();
        let fail = |what: String| Err(Error::Construction(format!("{}: {what}", self.name)));
        if len < 2 || len % 2 != 0 {
            return fail(format!("odd or empty filter length {len}"));
        }
        for shift in (0..len).step_by(2) {
            let dot: f64 = (0..len - shift)
                .map(|i| self.dec_lo[i] * self.dec_lo[i + shift])
                .sum();
            let expected = if shift == 0 { 1.0 } else { 0.0 };
            if (dot - expected).abs() > 1e-12 {
                return fail(format!("double-shift orthonormality violated at shift {shift}"));
            }
        }
        for i in 0..len {
            let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
            if self.dec_hi[i] != sign * self.dec_lo[len - 1 - i] {
                return fail(format!("QMF relation violated at tap {i}"));
            }
        }
        for p in 0..self.vanishing_moments() {
            let moment: f64 = self
                .dec_hi
                .iter()
                .enumerate()
                .map(|(i, &h)| (i as f64).powi(p as i32) * h)
                .sum();
            if moment.abs() > 1e-8 {
                return fail(format!("moment {p} of the high-pass is {moment:e}"));
            }
        }
        Ok(())
    }
}

fn table() -> &'static [WaveletFilter] {
    static FILTERS: OnceLock<Vec<WaveletFilter>> = OnceLock::new();
    FILTERS.get_or_init(|| {
        let mut v = vec![WaveletFilter::from_lowpass(
            "haar",
            &[std::f64::consts::FRAC_1_SQRT_2, std::f64::consts::FRAC_1_SQRT_2],
        )];
        for (i, taps) in DAUBECHIES.iter().enumerate() {
            v.push(WaveletFilter::from_lowpass(WAVELET_NAMES[i + 1], taps));
        }
        for f in &v {
            if let Err(e) = f.check_invariants() {
                panic!("built-in filter table is inconsistent: {e}");
            }
        }
        v
    })
}

/// Looks up a filter by name (`haar`, `db2`..`db7`; `db1` is an alias of Haar).
pub fn get_filter(name: &str) -> Result<&'static WaveletFilter> {
    let name = if name.eq_ignore_ascii_case("db1") {
        "haar"
    } else {
        name
    };
    table()
        .iter()
        .find(|f| f.name.eq_ignore_ascii_case(name))
        .ok_or_else(|| Error::UnknownWavelet(name.to_string()))
}
