//! The three resize paths and the coordinate math they share.
//!
//! `VulnerableBilinear` is plain single-step bilinear interpolation: every
//! output pixel is a convex combination of at most four source pixels, which
//! is exactly the channel the attack module exploits. `AntialiasedBilinear`
//! widens the triangle kernel in proportion to the shrink factor so that many
//! source pixels contribute small weights. `MultiStep` reaches the target
//! through repeated moderate bilinear shrinks.
//!
//! Coordinates are 0-based with pixel centers at `index + 0.5`. The target
//! pixel `i` of an `I`-wide output maps into an `N`-wide source at
//! `x = (i + 0.5) * N / I`, and its bilinear neighbors are
//! `floor(x - 0.5)` / `ceil(x - 0.5)`, clamped to the raster.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::image::{Image, PixelCoord};

/// A target (width, height) pair identifying one machine scale.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ScaleSpec {
    out_width: u32,
    out_height: u32,
}

impl ScaleSpec {
    pub fn new(out_width: u32, out_height: u32) -> Result<Self> {
        if out_width == 0 || out_height == 0 {
            return Err(Error::BadConfig(format!(
                "scale must be at least 1x1, got {out_width}x{out_height}"
            )));
        }
        Ok(Self { out_width, out_height })
    }

    pub fn width(&self) -> u32 {
        self.out_width
    }

    pub fn height(&self) -> u32 {
        self.out_height
    }

    /// The scale an image already has.
    pub fn of(img: &Image) -> Self {
        Self { out_width: img.width(), out_height: img.height() }
    }

    pub fn matches(&self, img: &Image) -> bool {
        img.width() == self.out_width && img.height() == self.out_height
    }
}

impl fmt::Display for ScaleSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}", self.out_width, self.out_height)
    }
}

impl FromStr for ScaleSpec {
    type Err = Error;

    /// Parses the `WxH` grammar used everywhere, e.g. `299x299`.
    fn from_str(s: &str) -> Result<Self> {
        let err = || Error::BadConfig(format!("expected WxH (e.g. 299x299), got {s:?}"));
        let (w, h) = s.split_once(['x', 'X']).ok_or_else(err)?;
        let w: u32 = w.trim().parse().map_err(|_| err())?;
        let h: u32 = h.trim().parse().map_err(|_| err())?;
        ScaleSpec::new(w, h)
    }
}

impl Serialize for ScaleSpec {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for ScaleSpec {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Which resize path to take.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ResizePolicy {
    /// Single-step bilinear, no antialiasing. The attack surface.
    VulnerableBilinear,
    /// Bilinear with the triangle kernel widened by the shrink factor.
    AntialiasedBilinear,
    /// Repeated vulnerable shrinks, at most `step_shrink_limit` per pass.
    MultiStep { step_shrink_limit: f64 },
}

impl ResizePolicy {
    pub const DEFAULT_STEP_SHRINK_LIMIT: f64 = 2.0;

    pub fn multi_step(step_shrink_limit: f64) -> Result<Self> {
        if !(step_shrink_limit > 1.0) {
            return Err(Error::BadConfig(format!(
                "step shrink limit must exceed 1, got {step_shrink_limit}"
            )));
        }
        Ok(Self::MultiStep { step_shrink_limit })
    }
}

impl fmt::Display for ResizePolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::VulnerableBilinear => write!(f, "vulnerable"),
            Self::AntialiasedBilinear => write!(f, "antialias"),
            Self::MultiStep { .. } => write!(f, "multistep"),
        }
    }
}

impl FromStr for ResizePolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "vulnerable" | "bilinear" => Ok(Self::VulnerableBilinear),
            "antialias" | "antialiased" => Ok(Self::AntialiasedBilinear),
            "multistep" | "multi-step" => {
                Ok(Self::MultiStep { step_shrink_limit: Self::DEFAULT_STEP_SHRINK_LIMIT })
            }
            other => Err(Error::BadConfig(format!(
                "unknown policy {other:?}; expected vulnerable, antialias or multistep"
            ))),
        }
    }
}

/// The four diagonal source neighbors of one continuous location.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NeighborSet {
    pub n_l: u32,
    pub n_u: u32,
    pub m_l: u32,
    pub m_u: u32,
    pub x: f64,
    pub y: f64,
}

/// Maps target index `i` of an `out_extent`-wide axis into the continuous
/// coordinate `(i + 0.5) * src_extent / out_extent` of the source axis.
pub fn map_coordinate(index: u32, out_extent: u32, src_extent: u32) -> f64 {
    debug_assert!(index < out_extent, "index {index} outside target extent {out_extent}");
    debug_assert!(out_extent >= 1 && src_extent >= 1);
    // The product is exact in f64 for any realistic extent, so the division
    // is the only rounding step.
    (index as f64 + 0.5) * src_extent as f64 / out_extent as f64
}

/// Lower/upper neighbor indices on one axis, clamped into the raster.
/// When `coord - 0.5` is integral the pair degenerates to a single index.
fn axis_neighbors(coord: f64, extent: u32) -> (u32, u32) {
    let t = coord - 0.5;
    let max = (extent - 1) as f64;
    let clamp = |v: f64| v.clamp(0.0, max) as u32;
    (clamp(t.floor()), clamp(t.ceil()))
}

/// The four neighboring diagonal pixels of continuous location `(x, y)`.
pub fn neighbors(x: f64, y: f64, src_width: u32, src_height: u32) -> NeighborSet {
    debug_assert!(x > 0.0 && x < src_width as f64, "x={x} outside (0, {src_width})");
    debug_assert!(y > 0.0 && y < src_height as f64, "y={y} outside (0, {src_height})");
    let (n_l, n_u) = axis_neighbors(x, src_width);
    let (m_l, m_u) = axis_neighbors(y, src_height);
    NeighborSet { n_l, n_u, m_l, m_u, x, y }
}

/// Up to two (index, weight) taps for one axis at a continuous coordinate.
///
/// Weights sum to exactly 1: the degenerate single-neighbor case and the
/// clamped border case both collapse to a single tap of weight 1.0 rather
/// than a rounded `(1-frac) + frac` sum.
fn vulnerable_axis_taps(coord: f64, extent: u32) -> ([(u32, f64); 2], usize) {
    let t = coord - 0.5;
    let lo = t.floor();
    let frac = t - lo;
    let max = (extent - 1) as f64;
    let clamp = |v: f64| v.clamp(0.0, max) as u32;
    if frac == 0.0 {
        ([(clamp(lo), 1.0), (0, 0.0)], 1)
    } else {
        let a = clamp(lo);
        let b = clamp(lo + 1.0);
        if a == b {
            ([(a, 1.0), (0, 0.0)], 1)
        } else {
            ([(a, 1.0 - frac), (b, frac)], 2)
        }
    }
}

/// Interpolates `img` at continuous `(x, y)`, one value per channel.
///
/// The result is a convex combination of the `neighbors` pixels; when the
/// neighbor pair degenerates on an axis the weight collapses onto the single
/// row or column.
pub fn bilinear_sample(img: &Image, x: f64, y: f64) -> Vec<f64> {
    let (col_taps, cols) = vulnerable_axis_taps(x, img.width());
    let (row_taps, rows) = vulnerable_axis_taps(y, img.height());
    let ch = img.channels() as usize;
    let mut acc = vec![0.0f64; ch];
    for &(m, wy) in &row_taps[..rows] {
        for &(n, wx) in &col_taps[..cols] {
            let w = wy * wx;
            let base = img.offset(n, m);
            for (c, a) in acc.iter_mut().enumerate() {
                *a += w * img.samples()[base + c] as f64;
            }
        }
    }
    acc
}

/// Per-output-index tap table for one axis: parallel arrays of source
/// indices and weights, grouped by `span`.
struct AxisTaps {
    span: Vec<(usize, usize)>, // (first, len) per output index
    index: Vec<u32>,
    weight: Vec<f64>,
}

impl AxisTaps {
    fn taps(&self, out_index: usize) -> impl Iterator<Item = (u32, f64)> + '_ {
        let (first, len) = self.span[out_index];
        self.index[first..first + len]
            .iter()
            .copied()
            .zip(self.weight[first..first + len].iter().copied())
    }
}

fn vulnerable_taps(src_extent: u32, out_extent: u32) -> AxisTaps {
    let mut taps = AxisTaps {
        span: Vec::with_capacity(out_extent as usize),
        index: Vec::with_capacity(2 * out_extent as usize),
        weight: Vec::with_capacity(2 * out_extent as usize),
    };
    for i in 0..out_extent {
        let (pairs, n) = vulnerable_axis_taps(map_coordinate(i, out_extent, src_extent), src_extent);
        let first = taps.index.len();
        for &(idx, w) in &pairs[..n] {
            taps.index.push(idx);
            taps.weight.push(w);
        }
        taps.span.push((first, n));
    }
    taps
}

fn antialiased_taps(src_extent: u32, out_extent: u32) -> AxisTaps {
    let scale = src_extent as f64 / out_extent as f64;
    if scale <= 1.0 {
        // Upscaling leaves the kernel at the 2-pixel baseline, which is the
        // vulnerable path exactly.
        return vulnerable_taps(src_extent, out_extent);
    }
    let mut taps = AxisTaps { span: Vec::new(), index: Vec::new(), weight: Vec::new() };
    for i in 0..out_extent {
        let x = map_coordinate(i, out_extent, src_extent);
        // Triangle kernel with support radius `scale`: centers n + 0.5 with
        // |n + 0.5 - x| < scale contribute weight 1 - |d| / scale.
        let lo = (x - scale - 0.5).ceil().max(0.0) as u32;
        let hi = (x + scale - 0.5).floor().min((src_extent - 1) as f64) as u32;
        let first = taps.index.len();
        let mut sum = 0.0;
        for n in lo..=hi {
            let w = 1.0 - ((n as f64 + 0.5) - x).abs() / scale;
            if w > 0.0 {
                taps.index.push(n);
                taps.weight.push(w);
                sum += w;
            }
        }
        for w in &mut taps.weight[first..] {
            *w /= sum;
        }
        taps.span.push((first, taps.index.len() - first));
    }
    taps
}

#[derive(Clone, Copy)]
enum SingleStepMode {
    Vulnerable,
    Antialiased,
}

fn build_taps(src_extent: u32, out_extent: u32, mode: SingleStepMode) -> AxisTaps {
    match mode {
        SingleStepMode::Vulnerable => vulnerable_taps(src_extent, out_extent),
        SingleStepMode::Antialiased => antialiased_taps(src_extent, out_extent),
    }
}

fn resize_single(img: &Image, spec: ScaleSpec, mode: SingleStepMode) -> Image {
    let col_taps = build_taps(img.width(), spec.width(), mode);
    let row_taps = build_taps(img.height(), spec.height(), mode);
    let ch = img.channels() as usize;
    let src = img.samples();
    let src_width = img.width() as usize;

    let mut out = Vec::with_capacity(spec.width() as usize * spec.height() as usize * ch);
    let mut acc = [0.0f64; 3];
    for j in 0..spec.height() as usize {
        for i in 0..spec.width() as usize {
            acc[..ch].fill(0.0);
            for (m, wy) in row_taps.taps(j) {
                let row_base = m as usize * src_width * ch;
                for (n, wx) in col_taps.taps(i) {
                    let w = wy * wx;
                    let base = row_base + n as usize * ch;
                    for (c, a) in acc[..ch].iter_mut().enumerate() {
                        *a += w * src[base + c] as f64;
                    }
                }
            }
            for &a in &acc[..ch] {
                // Nearest integer, ties away from zero.
                out.push(a.round().clamp(0.0, 255.0) as u8);
            }
        }
    }
    Image::from_samples(spec.width(), spec.height(), img.channels(), out)
        .expect("resize output geometry is valid by construction")
}

/// The sequence of intermediate scales a multi-step resize passes through,
/// ending with `spec` itself. Its length is the pass count.
pub fn multi_step_plan(
    src_width: u32,
    src_height: u32,
    spec: ScaleSpec,
    step_shrink_limit: f64,
) -> Vec<ScaleSpec> {
    assert!(step_shrink_limit > 1.0, "step shrink limit must exceed 1");
    let next = |cur: u32, target: u32| -> u32 {
        if (cur as f64) > target as f64 * step_shrink_limit {
            // Shrink by at most the limit, and always by at least one pixel
            // so tiny limits cannot stall.
            ((cur as f64 / step_shrink_limit).ceil() as u32).min(cur - 1).max(target)
        } else {
            target
        }
    };
    let (mut w, mut h) = (src_width, src_height);
    let mut plan = Vec::new();
    while (w, h) != (spec.width(), spec.height()) {
        w = next(w, spec.width());
        h = next(h, spec.height());
        plan.push(ScaleSpec { out_width: w, out_height: h });
    }
    if plan.is_empty() {
        plan.push(spec); // identity still performs one pass
    }
    plan
}

/// Resizes `img` to `spec` under `policy`.
pub fn resize(img: &Image, spec: ScaleSpec, policy: ResizePolicy) -> Image {
    match policy {
        ResizePolicy::VulnerableBilinear => resize_single(img, spec, SingleStepMode::Vulnerable),
        ResizePolicy::AntialiasedBilinear => resize_single(img, spec, SingleStepMode::Antialiased),
        ResizePolicy::MultiStep { step_shrink_limit } => {
            let plan = multi_step_plan(img.width(), img.height(), spec, step_shrink_limit);
            let mut cur = None;
            for step in plan {
                let source = cur.as_ref().unwrap_or(img);
                cur = Some(resize_single(source, step, SingleStepMode::Vulnerable));
            }
            cur.expect("plan always holds at least one pass")
        }
    }
}

/// Clamped (lower, upper) vulnerable neighbor indices for every output index
/// of one axis. This is the write lattice Algorithm-style embedding targets
/// and the read lattice the vulnerable resize samples; both must agree.
pub(crate) fn vulnerable_axis_pairs(src_extent: u32, out_extent: u32) -> Vec<(u32, u32)> {
    (0..out_extent)
        .map(|i| axis_neighbors(map_coordinate(i, out_extent, src_extent), src_extent))
        .collect()
}

/// Per-source-pixel weight field for one output pixel.
#[derive(Debug, Clone)]
pub struct ContributionMap {
    src_width: u32,
    src_height: u32,
    weights: Vec<f64>,
}

impl ContributionMap {
    pub fn src_width(&self) -> u32 {
        self.src_width
    }

    pub fn src_height(&self) -> u32 {
        self.src_height
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weight(&self, col: u32, row: u32) -> f64 {
        self.weights[row as usize * self.src_width as usize + col as usize]
    }

    /// Number of source pixels with nonzero contribution.
    pub fn support(&self) -> usize {
        self.weights.iter().filter(|&&w| w != 0.0).count()
    }

    pub fn max_weight(&self) -> f64 {
        self.weights.iter().copied().fold(0.0, f64::max)
    }

    /// Sum of all weights; 1.0 up to floating-point accumulation error.
    pub fn total(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Renders the weight field to an 8-bit grayscale image, normalized so
    /// the strongest contributor maps to 255.
    pub fn to_image(&self) -> Image {
        let max = self.max_weight();
        let samples = self
            .weights
            .iter()
            .map(|&w| if max > 0.0 { (255.0 * w / max).round() as u8 } else { 0 })
            .collect();
        Image::from_samples(self.src_width, self.src_height, 1, samples)
            .expect("contribution map geometry is valid by construction")
    }
}

/// Measures how much each source pixel contributes to the `probe` output
/// pixel by turning source pixels on one at a time and observing the probe
/// through the floating-point resize pipeline (no 8-bit quantization).
pub fn contribution_map(
    src_width: u32,
    src_height: u32,
    spec: ScaleSpec,
    probe: PixelCoord,
    policy: ResizePolicy,
) -> ContributionMap {
    assert!(
        probe.col() < spec.width() && probe.row() < spec.height(),
        "probe pixel outside the target scale"
    );
    let w = src_width as usize;
    let h = src_height as usize;
    let mut plane = vec![0.0f64; w * h];
    let mut weights = vec![0.0f64; w * h];

    match policy {
        ResizePolicy::VulnerableBilinear | ResizePolicy::AntialiasedBilinear => {
            let mode = match policy {
                ResizePolicy::VulnerableBilinear => SingleStepMode::Vulnerable,
                _ => SingleStepMode::Antialiased,
            };
            let col_taps = build_taps(src_width, spec.width(), mode);
            let row_taps = build_taps(src_height, spec.height(), mode);
            for idx in 0..w * h {
                plane[idx] = 1.0;
                weights[idx] = eval_plane_pixel(
                    &plane,
                    w,
                    &col_taps,
                    &row_taps,
                    probe.col() as usize,
                    probe.row() as usize,
                );
                plane[idx] = 0.0;
            }
        }
        ResizePolicy::MultiStep { step_shrink_limit } => {
            let plan = multi_step_plan(src_width, src_height, spec, step_shrink_limit);
            for idx in 0..w * h {
                plane[idx] = 1.0;
                let (mut cur, mut cw, mut chh) = (plane.clone(), src_width, src_height);
                for step in &plan {
                    cur = resize_plane(&cur, cw, chh, *step);
                    cw = step.width();
                    chh = step.height();
                }
                weights[idx] = cur[probe.row() as usize * cw as usize + probe.col() as usize];
                plane[idx] = 0.0;
            }
        }
    }
    ContributionMap { src_width, src_height, weights }
}

/// One output pixel of a single-step resize over an f64 plane.
fn eval_plane_pixel(
    plane: &[f64],
    plane_width: usize,
    col_taps: &AxisTaps,
    row_taps: &AxisTaps,
    i: usize,
    j: usize,
) -> f64 {
    let mut acc = 0.0;
    for (m, wy) in row_taps.taps(j) {
        let row_base = m as usize * plane_width;
        for (n, wx) in col_taps.taps(i) {
            acc += wy * wx * plane[row_base + n as usize];
        }
    }
    acc
}

/// Full vulnerable resize of an f64 plane, used by multi-step probing.
fn resize_plane(plane: &[f64], width: u32, height: u32, spec: ScaleSpec) -> Vec<f64> {
    let col_taps = vulnerable_taps(width, spec.width());
    let row_taps = vulnerable_taps(height, spec.height());
    let mut out = Vec::with_capacity(spec.width() as usize * spec.height() as usize);
    for j in 0..spec.height() as usize {
        for i in 0..spec.width() as usize {
            out.push(eval_plane_pixel(plane, width as usize, &col_taps, &row_taps, i, j));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn gray(width: u32, height: u32, value: u8) -> Image {
        Image::filled(width, height, 1, value).unwrap()
    }

    #[test]
    fn map_coordinate_examples() {
        assert_eq!(map_coordinate(1, 5, 100), 30.0);
        assert_eq!(map_coordinate(0, 77, 77), 0.5);
        // Single rounding step, so the literal division is the exact oracle.
        assert_eq!(map_coordinate(298, 299, 6660), 1988010.0 / 299.0);
        assert!((map_coordinate(298, 299, 6660) - 6648.8628).abs() < 1e-3);
    }

    #[test]
    fn neighbors_examples() {
        let n = neighbors(30.0, 30.0, 100, 100);
        assert_eq!((n.n_l, n.n_u, n.m_l, n.m_u), (29, 30, 29, 30));

        let edge = neighbors(0.3, 50.0, 100, 100);
        assert_eq!((edge.n_l, edge.n_u), (0, 0));

        let degenerate = neighbors(2.5, 2.5, 100, 100);
        assert_eq!((degenerate.n_l, degenerate.n_u), (2, 2));
    }

    #[test]
    fn neighbors_clamp_at_far_edge() {
        let n = neighbors(99.8, 99.8, 100, 100);
        assert_eq!((n.n_l, n.n_u), (99, 99));
    }

    #[test]
    fn bilinear_sample_equal_neighbors_reproduce_value() {
        let img = gray(100, 100, 77);
        for &(x, y) in &[(30.25, 41.9), (0.2, 0.2), (99.9, 50.0), (13.5, 2.5)] {
            assert_eq!(bilinear_sample(&img, x, y)[0], 77.0);
        }
    }

    #[test]
    fn bilinear_sample_midpoint_example() {
        let mut samples = vec![0u8; 100 * 100];
        // columns 30 hold 255, columns 29 hold 0 in the probed rows
        samples[29 * 100 + 30] = 255;
        samples[30 * 100 + 30] = 255;
        let img = Image::from_samples(100, 100, 1, samples).unwrap();
        assert_eq!(bilinear_sample(&img, 30.0, 30.0)[0], 127.5);
    }

    #[test]
    fn bilinear_sample_degenerate_hits_single_pixel() {
        let mut samples = vec![9u8; 16];
        samples[2 * 4 + 2] = 200;
        let img = Image::from_samples(4, 4, 1, samples).unwrap();
        assert_eq!(bilinear_sample(&img, 2.5, 2.5)[0], 200.0);
    }

    #[test]
    fn identity_resize_is_bit_identical() {
        let samples: Vec<u8> = (0..30 * 20 * 3).map(|i| (i * 37 % 256) as u8).collect();
        let img = Image::from_samples(30, 20, 3, samples).unwrap();
        let spec = ScaleSpec::of(&img);
        for policy in [
            ResizePolicy::VulnerableBilinear,
            ResizePolicy::AntialiasedBilinear,
            ResizePolicy::multi_step(2.0).unwrap(),
        ] {
            assert_eq!(resize(&img, spec, policy), img, "policy {policy}");
        }
    }

    #[test]
    fn vulnerable_probe_pixel_gets_quarter_intensity_from_four_positions() {
        let spec = ScaleSpec::new(5, 5).unwrap();
        let mut contributors = 0;
        for row in 0..100u32 {
            for col in 0..100u32 {
                let mut samples = vec![0u8; 100 * 100];
                samples[(row * 100 + col) as usize] = 200;
                let img = Image::from_samples(100, 100, 1, samples).unwrap();
                let out = resize(&img, spec, ResizePolicy::VulnerableBilinear);
                let v = out.sample(2, 2, 0);
                if v != 0 {
                    contributors += 1;
                    assert_eq!(v, 50, "source ({col},{row}) must contribute a quarter");
                    assert!((49..=50).contains(&col) && (49..=50).contains(&row));
                }
            }
        }
        assert_eq!(contributors, 4);
    }

    #[test]
    fn antialiased_probe_has_wide_support_with_small_weights() {
        let spec = ScaleSpec::new(5, 5).unwrap();
        let probe = PixelCoord::new(2, 2, 5, 5).unwrap();
        let vulnerable =
            contribution_map(100, 100, spec, probe, ResizePolicy::VulnerableBilinear);
        let antialiased =
            contribution_map(100, 100, spec, probe, ResizePolicy::AntialiasedBilinear);

        assert_eq!(vulnerable.support(), 4);
        assert_eq!(vulnerable.max_weight(), 0.25);
        assert!(antialiased.support() > 4);
        assert!(antialiased.max_weight() < 0.25);
        // the four vulnerable positions remain inside the antialiased support
        for (col, row) in [(49, 49), (50, 49), (49, 50), (50, 50)] {
            assert!(vulnerable.weight(col, row) == 0.25);
            assert!(antialiased.weight(col, row) > 0.0);
        }
        assert!((antialiased.total() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn contribution_map_identity_is_a_single_unit_weight() {
        let spec = ScaleSpec::new(9, 9).unwrap();
        let probe = PixelCoord::new(4, 4, 9, 9).unwrap();
        let map = contribution_map(9, 9, spec, probe, ResizePolicy::VulnerableBilinear);
        assert_eq!(map.support(), 1);
        assert_eq!(map.weight(4, 4), 1.0);
    }

    #[test]
    fn contribution_map_multi_step_covers_every_source_pixel() {
        // halving passes let every source pixel influence the output
        let spec = ScaleSpec::new(5, 5).unwrap();
        let probe = PixelCoord::new(2, 2, 5, 5).unwrap();
        let map = contribution_map(40, 40, spec, probe, ResizePolicy::multi_step(2.0).unwrap());
        assert!((map.total() - 1.0).abs() < 1e-6);
        assert!(map.support() > 4);
    }

    #[test]
    fn multi_step_plan_pass_counts() {
        let spec = ScaleSpec::new(100, 100).unwrap();
        let plan = multi_step_plan(1000, 100, spec, 2.0);
        assert_eq!(plan.len(), 4); // 1000 -> 500 -> 250 -> 125 -> 100
        assert_eq!(plan.last().unwrap(), &spec);

        // shrink factor above the limit forces at least two passes
        let plan = multi_step_plan(300, 300, spec, 2.0);
        assert!(plan.len() >= 2);

        // within the limit a single pass suffices
        let plan = multi_step_plan(150, 150, spec, 2.0);
        assert_eq!(plan.len(), 1);

        // tiny limits still terminate
        let plan = multi_step_plan(64, 64, ScaleSpec::new(32, 32).unwrap(), 1.0001);
        assert_eq!(plan.last().unwrap(), &ScaleSpec::new(32, 32).unwrap());
        assert!(plan.len() >= 31);
    }

    #[test]
    fn upscaling_antialias_matches_vulnerable_exactly() {
        let samples: Vec<u8> = (0..40 * 30).map(|i| (i * 13 % 256) as u8).collect();
        let img = Image::from_samples(40, 30, 1, samples).unwrap();
        let spec = ScaleSpec::new(90, 70).unwrap();
        assert_eq!(
            resize(&img, spec, ResizePolicy::AntialiasedBilinear),
            resize(&img, spec, ResizePolicy::VulnerableBilinear)
        );
    }

    fn arb_image() -> impl Strategy<Value = Image> {
        (1u32..24, 1u32..24, prop_oneof![Just(1u8), Just(3u8)]).prop_flat_map(|(w, h, ch)| {
            proptest::collection::vec(any::<u8>(), (w * h * ch as u32) as usize)
                .prop_map(move |samples| Image::from_samples(w, h, ch, samples).unwrap())
        })
    }

    fn arb_policy() -> impl Strategy<Value = ResizePolicy> {
        prop_oneof![
            Just(ResizePolicy::VulnerableBilinear),
            Just(ResizePolicy::AntialiasedBilinear),
            (1.2f64..4.0).prop_map(|limit| ResizePolicy::MultiStep { step_shrink_limit: limit }),
        ]
    }

    proptest! {
        // The floating-point neighbor math must agree with exact integer
        // arithmetic on t = ((2i+1)N - I) / (2I): the product (i+0.5)*N is
        // exact in f64 for realistic extents, so the single division cannot
        // push floor/ceil across an integer boundary.
        #[test]
        fn neighbor_selection_matches_exact_arithmetic(
            src in 1u32..4096,
            out in 1u32..4096,
            pick in any::<u32>(),
        ) {
            let i = pick % out;
            let x = map_coordinate(i, out, src);
            let (lo, hi) = axis_neighbors(x, src);
            let num = (2 * i as i64 + 1) * src as i64 - out as i64;
            let den = 2 * out as i64;
            let clamp = |v: i64| v.clamp(0, src as i64 - 1) as u32;
            let exact_lo = clamp(num.div_euclid(den));
            let exact_hi = if num.rem_euclid(den) == 0 {
                exact_lo
            } else {
                clamp(num.div_euclid(den) + 1)
            };
            prop_assert_eq!((lo, hi), (exact_lo, exact_hi), "i={} out={} src={}", i, out, src);
        }

        #[test]
        fn constant_images_stay_constant(
            value in any::<u8>(),
            src in (1u32..40, 1u32..40),
            out in (1u32..40, 1u32..40),
            policy in arb_policy(),
        ) {
            let img = gray(src.0, src.1, value);
            let resized = resize(&img, ScaleSpec::new(out.0, out.1).unwrap(), policy);
            for &s in resized.samples() {
                prop_assert!((s as i16 - value as i16).abs() <= 1);
            }
        }

        #[test]
        fn weights_sum_to_one(
            src in (1u32..30, 1u32..30),
            out in (1u32..16, 1u32..16),
            policy in arb_policy(),
        ) {
            let spec = ScaleSpec::new(out.0, out.1).unwrap();
            let probe = PixelCoord::new(out.0 / 2, out.1 / 2, out.0, out.1).unwrap();
            let map = contribution_map(src.0, src.1, spec, probe, policy);
            prop_assert!((map.total() - 1.0).abs() < 1e-6, "total {}", map.total());
        }

        #[test]
        fn vulnerable_output_depends_on_at_most_four_sources(
            src in (1u32..40, 1u32..40),
            out in (1u32..16, 1u32..16),
        ) {
            let spec = ScaleSpec::new(out.0, out.1).unwrap();
            let probe = PixelCoord::new(out.0 - 1, out.1 / 2, out.0, out.1).unwrap();
            let map = contribution_map(src.0, src.1, spec, probe, ResizePolicy::VulnerableBilinear);
            prop_assert!(map.support() <= 4);
        }

        #[test]
        fn outputs_stay_within_input_range(
            img in arb_image(),
            out in (1u32..24, 1u32..24),
            policy in arb_policy(),
        ) {
            let resized = resize(&img, ScaleSpec::new(out.0, out.1).unwrap(), policy);
            for c in 0..img.channels() {
                let channel = |im: &Image| -> Vec<u8> {
                    im.samples().iter().skip(c as usize).step_by(im.channels() as usize).copied().collect()
                };
                let src = channel(&img);
                let dst = channel(&resized);
                let (lo, hi) = (src.iter().min().unwrap(), src.iter().max().unwrap());
                prop_assert!(dst.iter().all(|v| v >= lo && v <= hi));
            }
        }
    }
}
