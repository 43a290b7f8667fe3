//! Preset-name parsing for `bounds-higher-rank`.
//!
//! Accepted spellings (case-insensitive):
//! - `sl5`, `sl7` ...           SL(N, R)
//! - `h4` ...                   real hyperbolic H^n
//! - `h3xh3`, `h2xh4` ...       products of real hyperbolic spaces
//! - `a3`, `b5`, `d6`, `e7`,
//!   `f4`, `g2`, `bc3` ...      split groups by restricted root type

use critflow_core::rootsys::{RootType, SymmetricSpacePreset};
use critflow_core::{Error, Result};

pub fn parse_preset(name: &str) -> Result<SymmetricSpacePreset<f64>> {
    let s = name.trim().to_ascii_lowercase();
    if s.is_empty() {
        return Err(Error::Input("empty preset name".into()));
    }
    if let Some((left, right)) = s.split_once('x') {
        let n1 = hyperbolic_rank(left)?;
        let n2 = hyperbolic_rank(right)?;
        return SymmetricSpacePreset::hyperbolic_product(n1, n2);
    }
    if let Some(rest) = s.strip_prefix("sl") {
        let n: usize = rest
            .parse()
            .map_err(|_| Error::Input(format!("cannot parse matrix size in preset {name:?}")))?;
        return SymmetricSpacePreset::special_linear(n);
    }
    if s.starts_with('h') {
        return SymmetricSpacePreset::real_hyperbolic(hyperbolic_rank(&s)?);
    }
    let split_at = s
        .find(|c: char| c.is_ascii_digit())
        .ok_or_else(|| Error::Input(format!("preset {name:?} lacks a rank")))?;
    let (letters, digits) = s.split_at(split_at);
    let upper = letters.to_ascii_uppercase();
    // E6/E7/E8 carry their rank in the type label; try that form first.
    let ty = RootType::parse(&format!("{upper}{digits}"))
        .or_else(|| RootType::parse(&upper))
        .ok_or_else(|| Error::Input(format!("unknown root type in preset {name:?}")))?;
    let rank: usize = digits
        .parse()
        .map_err(|_| Error::Input(format!("cannot parse rank in preset {name:?}")))?;
    SymmetricSpacePreset::split(ty, rank)
}

fn hyperbolic_rank(s: &str) -> Result<usize> {
    s.strip_prefix('h')
        .and_then(|rest| rest.parse().ok())
        .ok_or_else(|| Error::Input(format!("cannot parse hyperbolic factor {s:?}")))
}
