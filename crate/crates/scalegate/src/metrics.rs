//! Pixel-level similarity oracles: exact match, PSNR, and normalized
//! cross-correlation.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::image::Image;

/// PSNR is infinite for identical images; JSON has no infinity, so it is
/// encoded as null.
pub(crate) mod psnr_serde {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_some(v)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
    }
}

/// How similar two same-shaped images are.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimilarityReport {
    /// Bit-identical samples.
    pub exact: bool,
    /// Largest per-sample intensity difference.
    pub max_abs_diff: u8,
    /// 10 * log10(255^2 / MSE), infinite when exact.
    #[serde(with = "psnr_serde")]
    pub psnr: f64,
    /// Normalized cross-correlation of mean-subtracted samples, in [-1, 1].
    pub ncc: f64,
}

/// Compares two images of identical geometry.
pub fn compare(a: &Image, b: &Image) -> Result<SimilarityReport> {
    if !a.same_shape(b) {
        return Err(a.shape_mismatch(b));
    }
    let xs = a.samples();
    let ys = b.samples();
    let n = xs.len() as f64;

    let mut sq_err = 0u64;
    let mut max_abs_diff = 0u8;
    for (&x, &y) in xs.iter().zip(ys) {
        let d = x.abs_diff(y);
        max_abs_diff = max_abs_diff.max(d);
        sq_err += (d as u64) * (d as u64);
    }
    let exact = max_abs_diff == 0;
    let psnr = if exact {
        f64::INFINITY
    } else {
        let mse = sq_err as f64 / n;
        10.0 * (255.0f64 * 255.0 / mse).log10()
    };

    let mean_a = xs.iter().map(|&v| v as f64).sum::<f64>() / n;
    let mean_b = ys.iter().map(|&v| v as f64).sum::<f64>() / n;
    let mut cov = 0.0;
    let mut var_a = 0.0;
    let mut var_b = 0.0;
    for (&x, &y) in xs.iter().zip(ys) {
        let da = x as f64 - mean_a;
        let db = y as f64 - mean_b;
        cov += da * db;
        var_a += da * da;
        var_b += db * db;
    }
    let ncc = if var_a == 0.0 && var_b == 0.0 {
        // both constant: correlated iff they are the same constant
        if exact {
            1.0
        } else {
            0.0
        }
    } else if var_a == 0.0 || var_b == 0.0 {
        0.0
    } else {
        (cov / (var_a * var_b).sqrt()).clamp(-1.0, 1.0)
    };

    Ok(SimilarityReport { exact, max_abs_diff, psnr, ncc })
}
