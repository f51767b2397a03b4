//! Downscaling-attack generation: embed small images into a carrier so each
//! is revealed exactly when the carrier is bilinearly resized to its target
//! scale.
//!
//! For every target pixel the embedder writes the small image's intensity to
//! all four bilinear neighbor positions in the carrier. The vulnerable
//! resizer later reads exactly those positions with weights summing to one,
//! so the reveal is bit-exact. Writer and reader clamp indices identically,
//! which keeps the round trip exact at the raster corners too.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::Image;
use crate::resize::{vulnerable_axis_pairs, ScaleSpec};

/// An ordered list of (small image, target scale) embeds for one carrier.
///
/// Order matters: later embeds overwrite earlier ones where their write
/// lattices collide.
#[derive(Debug, Clone)]
pub struct EmbedPlan {
    carrier: Image,
    embeds: Vec<(Image, ScaleSpec)>,
}

impl EmbedPlan {
    pub fn new(carrier: Image, embeds: Vec<(Image, ScaleSpec)>) -> Result<Self> {
        for (idx, (small, at)) in embeds.iter().enumerate() {
            if !at.matches(small) {
                return Err(Error::PlanInvariant(format!(
                    "embed {idx}: small image is {}x{} but target scale is {at}",
                    small.width(),
                    small.height()
                )));
            }
            if at.width() >= carrier.width() || at.height() >= carrier.height() {
                return Err(Error::PlanInvariant(format!(
                    "embed {idx}: target scale {at} must be strictly smaller than the \
                     {}x{} carrier on both axes",
                    carrier.width(),
                    carrier.height()
                )));
            }
            if small.channels() != carrier.channels() {
                return Err(Error::PlanInvariant(format!(
                    "embed {idx}: {} channels do not match the carrier's {}",
                    small.channels(),
                    carrier.channels()
                )));
            }
        }
        Ok(Self { carrier, embeds })
    }

    pub fn carrier(&self) -> &Image {
        &self.carrier
    }

    pub fn embeds(&self) -> &[(Image, ScaleSpec)] {
        &self.embeds
    }
}

/// What the embedding touched.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbedReport {
    /// Distinct carrier positions written, per embed in plan order.
    pub pixels_written: Vec<u64>,
    /// Carrier positions written by two or more embeds.
    pub collisions: u64,
    /// Share of carrier pixels modified by any embed.
    pub fraction_perturbed: f64,
}

/// Visits every (embed, target pixel, carrier position) write in Algorithm
/// order: embeds outermost, then target rows, columns, then the up-to-four
/// neighbor positions with degenerate duplicates removed.
fn for_each_write(plan: &EmbedPlan, mut visit: impl FnMut(usize, u32, u32, u32, u32)) {
    let carrier = &plan.carrier;
    for (embed_idx, (small, at)) in plan.embeds.iter().enumerate() {
        let col_pairs = vulnerable_axis_pairs(carrier.width(), at.width());
        let row_pairs = vulnerable_axis_pairs(carrier.height(), at.height());
        for j in 0..small.height() {
            let (m_l, m_u) = row_pairs[j as usize];
            let row_set = [m_l, m_u];
            let rows = if m_l == m_u { &row_set[..1] } else { &row_set[..] };
            for i in 0..small.width() {
                let (n_l, n_u) = col_pairs[i as usize];
                let col_set = [n_l, n_u];
                let cols = if n_l == n_u { &col_set[..1] } else { &col_set[..] };
                for &m in rows {
                    for &n in cols {
                        visit(embed_idx, n, m, i, j);
                    }
                }
            }
        }
    }
}

/// Produces the combined image plus a report of what was written.
///
/// Vulnerably resizing the result at an embed's target scale reproduces that
/// small image exactly, except where a later embed overwrote its lattice.
pub fn generate_attack(plan: &EmbedPlan) -> (Image, EmbedReport) {
    let carrier = &plan.carrier;
    let ch = carrier.channels() as usize;
    let width = carrier.width() as usize;
    let mut samples = carrier.samples().to_vec();

    // 0 = untouched, otherwise embed index + 1 of the last writer.
    let mut writer = vec![0u16; width * carrier.height() as usize];
    let mut collided = vec![false; writer.len()];
    let mut pixels_written = vec![0u64; plan.embeds.len()];
    let mut collisions = 0u64;

    for_each_write(plan, |embed_idx, n, m, i, j| {
        let (small, _) = &plan.embeds[embed_idx];
        let pos = m as usize * width + n as usize;
        let mark = embed_idx as u16 + 1;
        if writer[pos] != mark {
            if writer[pos] != 0 && !collided[pos] {
                collided[pos] = true;
                collisions += 1;
            }
            pixels_written[embed_idx] += 1;
            writer[pos] = mark;
        }
        let dst = pos * ch;
        let src = small.offset(i, j);
        samples[dst..dst + ch].copy_from_slice(&small.samples()[src..src + ch]);
    });

    let written = writer.iter().filter(|&&w| w != 0).count();
    let report = EmbedReport {
        pixels_written,
        collisions,
        fraction_perturbed: written as f64 / writer.len() as f64,
    };
    let combined = Image::from_samples(carrier.width(), carrier.height(), carrier.channels(), samples)
        .expect("combined image keeps the carrier geometry");
    (combined, report)
}

/// Binary mask at carrier dimensions: 255 where `generate_attack` writes.
pub fn perturbation_mask(plan: &EmbedPlan) -> Image {
    let carrier = &plan.carrier;
    let width = carrier.width() as usize;
    let mut mask = vec![0u8; width * carrier.height() as usize];
    for_each_write(plan, |_, n, m, _, _| {
        mask[m as usize * width + n as usize] = 255;
    });
    Image::from_samples(carrier.width(), carrier.height(), 1, mask)
        .expect("mask keeps the carrier geometry")
}
