//! Transform specifications and their two textual forms.
//!
//! A spec can be written either as a key/value list
//! (`kind=fswt,wavelet=db3,level=3,boundary=reflect`) or as a method name
//! (`FSWT-BN-db3-3-reflect`, `Samplets-BN-3-3`, `Pixels`, `DCT`). Both forms
//! parse to the same [`TransformSpec`].

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filterbank;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TransformKind {
    /// Identity transform; features are the (normalized) pixels.
    Pixels,
    Dwt,
    Dwpt,
    Fswt,
    Dct,
    Samplet,
}

impl TransformKind {
    pub fn as_str(self) -> &'static str {
        match self {
            TransformKind::Pixels => "pixels",
            TransformKind::Dwt => "dwt",
            TransformKind::Dwpt => "dwpt",
            TransformKind::Fswt => "fswt",
            TransformKind::Dct => "dct",
            TransformKind::Samplet => "samplet",
        }
    }

    pub fn is_wavelet(self) -> bool {
        matches!(
            self,
            TransformKind::Dwt | TransformKind::Dwpt | TransformKind::Fswt
        )
    }
}

impl fmt::Display for TransformKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Boundary handling for the 1D filter bank.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    /// Whole-sample symmetric extension; outputs grow by about half a filter.
    Reflect,
    /// Orthonormalized boundary rows; outputs keep the input size.
    BoundaryFilter,
    /// No boundary treatment. Only valid where none is needed (Haar).
    None,
}

impl Boundary {
    pub fn as_str(self) -> &'static str {
        match self {
            Boundary::Reflect => "reflect",
            Boundary::BoundaryFilter => "boundary",
            Boundary::None => "none",
        }
    }
}

impl fmt::Display for Boundary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Decomposition depth.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Level {
    Fixed(usize),
    /// As deep as the input allows.
    Full,
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Level::Fixed(l) => write!(f, "{l}"),
            Level::Full => f.write_str("full"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TransformSpec {
    pub kind: TransformKind,
    pub wavelet: String,
    pub level: Level,
    pub boundary: Boundary,
    /// Samplet vanishing-moment order `m`.
    pub moments: usize,
    /// Whether features are block-wise normalized.
    pub bn: bool,
}

/// Grammar summary shown by `--help`.
pub const SPEC_HELP: &str = "\
Transform specs are comma-separated key=value lists:
  kind=pixels|dwt|dwpt|fswt|dct|samplet
  wavelet=haar|db2|db3|db4|db5|db6|db7   (dwt, dwpt, fswt; default haar)
  level=<n>|full                         (default 1)
  boundary=reflect|boundary|none         (dwt, dwpt, fswt; default reflect)
  m=<n>                                  (samplet vanishing moments, >= 1; default 1)
  bn=true|false                          (block-wise normalization; default true)
Method names are accepted as well:
  Pixels, DCT, Samplets-BN-<m>-<l>, FSWT-BN-<wavelet>-<l>-<reflect|boundary>,
  DWT-BN-<wavelet>-<l>-<boundary>, Packet-BN-<wavelet>-<l>-<boundary>
  (drop `-BN` to disable normalization).";

impl TransformSpec {
    pub fn new(kind: TransformKind) -> Self {
        TransformSpec {
            kind,
            wavelet: "haar".to_string(),
            level: Level::Fixed(1),
            boundary: Boundary::Reflect,
            moments: 1,
            bn: true,
        }
    }

    pub fn pixels() -> Self {
        Self::new(TransformKind::Pixels)
    }

    pub fn dct() -> Self {
        Self::new(TransformKind::Dct)
    }

    pub fn wavelet(kind: TransformKind, wavelet: &str, level: usize, boundary: Boundary) -> Self {
        TransformSpec {
            wavelet: wavelet.to_string(),
            level: Level::Fixed(level),
            boundary,
            ..Self::new(kind)
        }
    }

    pub fn dwt(wavelet: &str, level: usize, boundary: Boundary) -> Self {
        Self::wavelet(TransformKind::Dwt, wavelet, level, boundary)
    }

    pub fn dwpt(wavelet: &str, level: usize, boundary: Boundary) -> Self {
        Self::wavelet(TransformKind::Dwpt, wavelet, level, boundary)
    }

    pub fn fswt(wavelet: &str, level: usize, boundary: Boundary) -> Self {
        Self::wavelet(TransformKind::Fswt, wavelet, level, boundary)
    }

    pub fn samplet(moments: usize, level: usize) -> Self {
        TransformSpec {
            moments,
            level: Level::Fixed(level),
            ..Self::new(TransformKind::Samplet)
        }
    }

    pub fn with_level(mut self, level: Level) -> Self {
        self.level = level;
        self
    }

    pub fn with_bn(mut self, bn: bool) -> Self {
        self.bn = bn;
        self
    }

    /// Checks the cross-field invariants.
    pub fn validate(&self) -> Result<()> {
        if self.kind.is_wavelet() {
            filterbank::get_filter(&self.wavelet)?;
            if self.boundary == Boundary::None && self.wavelet != "haar" {
                return Err(Error::spec(
                    "boundary=none",
                    format!("{} needs reflect or boundary handling", self.wavelet),
                ));
            }
        }
        if self.kind == TransformKind::Samplet && self.moments == 0 {
            return Err(Error::spec("m=0", "samplets need m >= 1"));
        }
        if self.level == Level::Fixed(0) && self.kind != TransformKind::Pixels
            && self.kind != TransformKind::Dct
        {
            return Err(Error::spec("level=0", "level must be >= 1"));
        }
        Ok(())
    }

    /// Method name in the style of the result tables, e.g. `FSWT-BN-db3-3-reflect`.
    pub fn method_name(&self) -> String {
        let bn = if self.bn { "-BN" } else { "" };
        match self.kind {
            TransformKind::Pixels => "Pixels".to_string(),
            TransformKind::Dct => "DCT".to_string(),
            TransformKind::Samplet => format!("Samplets{bn}-{}-{}", self.moments, self.level),
            TransformKind::Dwt | TransformKind::Dwpt | TransformKind::Fswt => {
                let prefix = match self.kind {
                    TransformKind::Dwt => "DWT",
                    TransformKind::Dwpt => "Packet",
                    _ => "FSWT",
                };
                format!(
                    "{prefix}{bn}-{}-{}-{}",
                    self.wavelet, self.level, self.boundary
                )
            }
        }
    }

    fn parse_key_values(s: &str) -> Result<Self> {
        let mut kind = None;
        let mut pairs = Vec::new();
        for token in s.split(',').map(str::trim).filter(|t| !t.is_empty()) {
            let (key, value) = token
                .split_once('=')
                .ok_or_else(|| Error::spec(token, "expected key=value"))?;
            let (key, value) = (key.trim(), value.trim());
            if key == "kind" {
                kind = Some(parse_kind(value).ok_or_else(|| {
                    Error::spec(token, "kind must be one of pixels, dwt, dwpt, fswt, dct, samplet")
                })?);
            } else {
                pairs.push((token, key, value));
            }
        }
        let kind = kind.ok_or_else(|| Error::spec(s, "missing kind=..."))?;
        let mut spec = TransformSpec::new(kind);
        for (token, key, value) in pairs {
            match key {
                "wavelet" => {
                    let name = normalize_wavelet_name(value);
                    filterbank::get_filter(&name).map_err(|_| {
                        Error::spec(token, "unknown wavelet (expected haar, db2..db7)")
                    })?;
                    spec.wavelet = name;
                }
                "level" | "l" => spec.level = parse_level(value).ok_or_else(|| {
                    Error::spec(token, "level must be a positive integer or `full`")
                })?,
                "boundary" | "mode" | "padding" => {
                    spec.boundary = parse_boundary(value).ok_or_else(|| {
                        Error::spec(token, "boundary must be reflect, boundary or none")
                    })?
                }
                "m" | "moments" => {
                    spec.moments = value
                        .parse()
                        .map_err(|_| Error::spec(token, "m must be a positive integer"))?
                }
                "bn" => {
                    spec.bn = match value {
                        "true" | "1" | "yes" => true,
                        "false" | "0" | "no" => false,
                        _ => return Err(Error::spec(token, "bn must be true or false")),
                    }
                }
                _ => return Err(Error::spec(token, "unknown key")),
            }
        }
        Ok(spec)
    }

    fn parse_method_name(s: &str) -> Result<Self> {
        let mut parts: Vec<&str> = s.split('-').collect();
        let head = parts.remove(0).to_ascii_lowercase();
        let bn = parts.first().is_some_and(|p| p.eq_ignore_ascii_case("bn"));
        if bn {
            parts.remove(0);
        }
        let bad = |reason: &str| Error::spec(s, reason.to_string());
        let spec = match head.as_str() {
            "pixels" | "pixel" if parts.is_empty() => TransformSpec::pixels(),
            "dct" if parts.is_empty() => TransformSpec::dct(),
            "samplets" | "samplet" => {
                let [m, l] = parts[..] else {
                    return Err(bad("expected Samplets-BN-<m>-<level>"));
                };
                let moments = m.parse().map_err(|_| bad("bad samplet order"))?;
                let level = parse_level(l).ok_or_else(|| bad("bad level"))?;
                TransformSpec::samplet(moments, 1).with_level(level)
            }
            "fswt" | "dwt" | "packet" | "dwpt" => {
                let kind = match head.as_str() {
                    "fswt" => TransformKind::Fswt,
                    "dwt" => TransformKind::Dwt,
                    _ => TransformKind::Dwpt,
                };
                let (wavelet, level, boundary) = match parts[..] {
                    [w, l] => (w, l, "reflect"),
                    [w, l, b] => (w, l, b),
                    _ => return Err(bad("expected <KIND>-BN-<wavelet>-<level>-<boundary>")),
                };
                let wavelet = normalize_wavelet_name(wavelet);
                filterbank::get_filter(&wavelet).map_err(|_| bad("unknown wavelet"))?;
                let level = parse_level(level).ok_or_else(|| bad("bad level"))?;
                let boundary = parse_boundary(boundary).ok_or_else(|| bad("bad boundary"))?;
                TransformSpec::wavelet(kind, &wavelet, 1, boundary).with_level(level)
            }
            _ => return Err(bad("unrecognized method name")),
        };
        Ok(spec.with_bn(bn || matches!(head.as_str(), "pixels" | "pixel" | "dct")))
    }
}

fn parse_kind(value: &str) -> Option<TransformKind> {
    Some(match value.to_ascii_lowercase().as_str() {
        "pixels" | "pixel" | "identity" => TransformKind::Pixels,
        "dwt" => TransformKind::Dwt,
        "dwpt" | "packet" | "wpt" => TransformKind::Dwpt,
        "fswt" => TransformKind::Fswt,
        "dct" => TransformKind::Dct,
        "samplet" | "samplets" => TransformKind::Samplet,
        _ => return None,
    })
}

fn parse_level(value: &str) -> Option<Level> {
    if value.eq_ignore_ascii_case("full") {
        return Some(Level::Full);
    }
    value.parse().ok().filter(|&l| l >= 1).map(Level::Fixed)
}

fn parse_boundary(value: &str) -> Option<Boundary> {
    Some(match value.to_ascii_lowercase().as_str() {
        "reflect" => Boundary::Reflect,
        "boundary" | "boundary_filter" | "boundary-filter" | "qr" => Boundary::BoundaryFilter,
        "none" => Boundary::None,
        _ => return None,
    })
}

fn normalize_wavelet_name(value: &str) -> String {
    let lower = value.to_ascii_lowercase();
    if lower == "db1" {
        "haar".to_string()
    } else {
        lower
    }
}

impl FromStr for TransformSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let spec = if s.contains('=') {
            Self::parse_key_values(s)?
        } else {
            Self::parse_method_name(s)?
        };
        spec.validate()?;
        Ok(spec)
    }
}

impl fmt::Display for TransformSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "kind={}", self.kind)?;
        match self.kind {
            TransformKind::Dwt | TransformKind::Dwpt | TransformKind::Fswt => write!(
                f,
                ",wavelet={},level={},boundary={}",
                self.wavelet, self.level, self.boundary
            )?,
            TransformKind::Samplet => write!(f, ",m={},level={}", self.moments, self.level)?,
            TransformKind::Pixels | TransformKind::Dct => {}
        }
        write!(f, ",bn={}", self.bn)
    }
}
