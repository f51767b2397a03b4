//! Seeded synthetic images with natural-looking statistics (smooth
//! gradients, soft blobs, mild texture noise), for experiments and tests
//! that need a corpus without shipping one.

use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::image::Image;
use crate::io::save_image;

struct Blob {
    cx: f64,
    cy: f64,
    inv_r2: f64,
    amp: [f64; 3],
}

enum ShapeKind {
    /// Rotated rectangle. Rotation matters: hundreds of axis-aligned edges
    /// would pile spectral energy onto the frequency axes, which real
    /// photographs do not do.
    Rect { rot_cos: f64, rot_sin: f64 },
    Ellipse,
}

struct Shape {
    kind: ShapeKind,
    cx: f64,
    cy: f64,
    rx: f64,
    ry: f64,
    color: [f64; 3],
}

/// x-interval satisfying |a*(x - cx) + offset| <= r, or None when empty.
fn slab_interval(a: f64, offset: f64, r: f64, cx: f64) -> Option<(f64, f64)> {
    if a.abs() < 1e-9 {
        return if offset.abs() <= r { Some((f64::NEG_INFINITY, f64::INFINITY)) } else { None };
    }
    let lo = (-r - offset) / a + cx;
    let hi = (r - offset) / a + cx;
    Some((lo.min(hi), lo.max(hi)))
}

impl Shape {
    /// Farthest the shape reaches from its center on the y axis.
    fn y_reach(&self) -> f64 {
        match self.kind {
            ShapeKind::Rect { rot_cos, rot_sin } => {
                (rot_sin * self.rx).abs() + (rot_cos * self.ry).abs()
            }
            ShapeKind::Ellipse => self.ry,
        }
    }

    /// Covered column span on row `y`, as a half-open range.
    fn row_span(&self, y: f64, width: usize) -> Option<(usize, usize)> {
        let dy = y - self.cy;
        let (lo, hi) = match self.kind {
            ShapeKind::Rect { rot_cos, rot_sin } => {
                let (lo1, hi1) = slab_interval(rot_cos, rot_sin * dy, self.rx, self.cx)?;
                let (lo2, hi2) = slab_interval(-rot_sin, rot_cos * dy, self.ry, self.cx)?;
                (lo1.max(lo2), hi1.min(hi2))
            }
            ShapeKind::Ellipse => {
                let ny = dy / self.ry;
                if ny.abs() > 1.0 {
                    return None;
                }
                let half = self.rx * (1.0 - ny * ny).sqrt();
                (self.cx - half, self.cx + half)
            }
        };
        let lo = (lo.ceil().max(0.0)) as usize;
        let hi = hi.floor().min(width as f64 - 1.0);
        if hi < 0.0 || lo as f64 > hi {
            None
        } else {
            Some((lo, hi as usize + 1))
        }
    }
}

/// Index of the topmost shape covering each pixel; u16::MAX means none.
fn paint_owners(shapes: &[Shape], width: usize, height: usize) -> Vec<u16> {
    let mut owner = vec![u16::MAX; width * height];
    for (idx, shape) in shapes.iter().enumerate() {
        let reach = shape.y_reach();
        let y_lo = ((shape.cy - reach).ceil().max(0.0)) as usize;
        let y_hi = (shape.cy + reach).floor().min(height as f64 - 1.0);
        if y_hi < 0.0 {
            continue;
        }
        for y in y_lo..=y_hi as usize {
            if let Some((lo, hi)) = shape.row_span(y as f64, width) {
                owner[y * width + lo..y * width + hi].fill(idx as u16);
            }
        }
    }
    owner
}

/// Deterministically generates one image from `seed`.
pub fn synth_image(seed: u64, width: u32, height: u32, channels: u8) -> Image {
    assert!(channels == 1 || channels == 3);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w = width as usize;
    let h = height as usize;
    let ch = channels as usize;

    let base: [f64; 3] = std::array::from_fn(|_| rng.gen_range(80.0..180.0));
    let grad_x: [f64; 3] = std::array::from_fn(|_| rng.gen_range(-80.0..80.0));
    let grad_y: [f64; 3] = std::array::from_fn(|_| rng.gen_range(-80.0..80.0));

    let min_extent = width.min(height) as f64;
    let blob_count = rng.gen_range(3..=7);
    let blobs: Vec<Blob> = (0..blob_count)
        .map(|_| {
            let r = rng.gen_range(min_extent / 8.0..min_extent / 2.5);
            Blob {
                cx: rng.gen_range(0.0..width as f64),
                cy: rng.gen_range(0.0..height as f64),
                inv_r2: 1.0 / (r * r),
                amp: std::array::from_fn(|_| rng.gen_range(-60.0..60.0)),
            }
        })
        .collect();

    // hard-edged shapes on top of the smooth fields. Photographs are full
    // of sharp object boundaries, and those edges are what alias under
    // sparse resampling; a corpus without them behaves nothing like one.
    let shape_count = rng.gen_range(450..=900);
    let shapes: Vec<Shape> = (0..shape_count)
        .map(|_| Shape {
            kind: if rng.gen_bool(0.5) {
                let angle = rng.gen_range(0.0..std::f64::consts::PI);
                ShapeKind::Rect { rot_cos: angle.cos(), rot_sin: angle.sin() }
            } else {
                ShapeKind::Ellipse
            },
            cx: rng.gen_range(0.0..width as f64),
            cy: rng.gen_range(0.0..height as f64),
            rx: rng.gen_range(min_extent / 70.0..min_extent / 16.0),
            ry: rng.gen_range(min_extent / 70.0..min_extent / 16.0),
            color: std::array::from_fn(|_| rng.gen_range(55.0..200.0)),
        })
        .collect();
    let owners = paint_owners(&shapes, w, h);

    // per-pixel texture noise (sensor grain); also dithers away the contour
    // banding that quantized smooth gradients would otherwise show
    let texture_amp = rng.gen_range(8.0..20.0);

    let mut samples = Vec::with_capacity(w * h * ch);
    for y in 0..h {
        let fy = y as f64 / height as f64;
        for x in 0..w {
            let fx = x as f64 / width as f64;
            let covering = owners[y * w + x];
            for c in 0..ch {
                let mut v = if covering != u16::MAX {
                    shapes[covering as usize].color[c]
                } else {
                    let mut v = base[c] + grad_x[c] * fx + grad_y[c] * fy;
                    for blob in &blobs {
                        let dx = x as f64 - blob.cx;
                        let dy = y as f64 - blob.cy;
                        v += blob.amp[c] * (-(dx * dx + dy * dy) * blob.inv_r2).exp();
                    }
                    v
                };
                v += rng.gen_range(-texture_amp..texture_amp);
                samples.push(v.round().clamp(0.0, 255.0) as u8);
            }
        }
    }
    Image::from_samples(width, height, channels, samples)
        .expect("synthesized geometry is valid by construction")
}

/// Writes `count` RGB images of varied size into `dir` as PNG files named
/// `img_0000.png` onward, and returns their paths in that order.
pub fn write_corpus(dir: impl AsRef<Path>, count: usize, seed: u64) -> Result<Vec<PathBuf>> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir).map_err(|source| Error::Io { path: dir.into(), source })?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    let mut paths = Vec::with_capacity(count);
    for idx in 0..count {
        let width = rng.gen_range(600..=900);
        let height = rng.gen_range(600..=900);
        let img = synth_image(seed.wrapping_add(idx as u64), width, height, 3);
        let path = dir.join(format!("img_{idx:04}.png"));
        save_image(&img, &path)?;
        paths.push(path);
    }
    Ok(paths)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generation_is_deterministic() {
        assert_eq!(synth_image(5, 40, 30, 3), synth_image(5, 40, 30, 3));
        assert_ne!(synth_image(5, 40, 30, 3), synth_image(6, 40, 30, 3));
    }

    #[test]
    fn images_are_not_degenerate() {
        let img = synth_image(1, 64, 64, 1);
        let min = img.samples().iter().min().unwrap();
        let max = img.samples().iter().max().unwrap();
        assert!(max > min, "image must not be constant");
    }

    #[test]
    fn corpus_writes_loadable_files() {
        let dir = tempfile::tempdir().unwrap();
        let paths = write_corpus(dir.path(), 3, 9).unwrap();
        assert_eq!(paths.len(), 3);
        for p in &paths {
            let img = crate::io::load_image(p).unwrap();
            assert_eq!(img.channels(), 3);
            assert!(img.width() >= 600 && img.height() >= 600);
        }
    }
}
