//! Per-slot Rayleigh channels with distance-based pathloss.
//!
//! Every (slot, transmitting ScBS, receiving UE) triple draws from its own
//! ChaCha stream keyed by `(seed, slot, j, u)`, so a realization can be
//! regenerated from its indices alone and independent runs never share
//! generator state.

use std::io::Write;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::model::{Layout, SystemConfig};

/// Channel vectors from every ScBS to every UE for one slot.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    pub slot_index: u64,
    num_scbs: usize,
    num_ues: usize,
    n_t: usize,
    h: Vec<Complex64>,
}

impl ChannelRealization {
    /// Build from explicit link vectors, `links[j][u]` being the length-`n_t`
    /// channel from ScBS `j` to UE `u`.
    pub fn from_links(slot_index: u64, links: &[Vec<Vec<Complex64>>]) -> Self {
        let num_scbs = links.len();
        let num_ues = links.first().map_or(0, Vec::len);
        let n_t = links
            .first()
            .and_then(|row| row.first())
            .map_or(0, Vec::len);
        let mut h = Vec::with_capacity(num_scbs * num_ues * n_t);
        for row in links {
            assert_eq!(row.len(), num_ues, "ragged link matrix");
            for link in row {
                assert_eq!(link.len(), n_t, "inconsistent antenna count");
                h.extend_from_slice(link);
            }
        }
        Self {
            slot_index,
            num_scbs,
            num_ues,
            n_t,
            h,
        }
    }

    /// Channel from ScBS `j` to UE `u`.
    pub fn link(&self, j: usize, u: usize) -> &[Complex64] {
        let start = (j * self.num_ues + u) * self.n_t;
        &self.h[start..start + self.n_t]
    }

    pub fn num_scbs(&self) -> usize {
        self.num_scbs
    }

    pub fn num_ues(&self) -> usize {
        self.num_ues
    }

    pub fn num_antennas(&self) -> usize {
        self.n_t
    }

    pub fn is_finite(&self) -> bool {
        self.h.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }
}

fn link_rng(seed: u64, slot: u64, j: usize, u: usize) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    for (chunk, word) in key
        .chunks_exact_mut(8)
        .zip([seed, slot, j as u64, u as u64])
    {
        chunk.copy_from_slice(&word.to_le_bytes());
    }
    ChaCha8Rng::from_seed(key)
}

/// Draw a circularly symmetric complex Gaussian vector with per-component
/// variance `variance` (split equally between real and imaginary parts).
pub fn sample_link(seed: u64, slot: u64, j: usize, u: usize, n_t: usize, variance: f64) -> Vec<Complex64> {
    let mut rng = link_rng(seed, slot, j, u);
    let scale = (0.5 * variance).sqrt();
    (0..n_t)
        .map(|_| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            Complex64::new(scale * re, scale * im)
        })
        .collect()
}

pub fn sample_channels(seed: u64, cfg: &SystemConfig, slot_index: u64) -> ChannelRealization {
    let m = cfg.num_scbs;
    let u = cfg.num_ues();
    let n_t = cfg.num_tx_antennas;
    let mut h = Vec::with_capacity(m * u * n_t);
    for j in 0..m {
        for ue in 0..u {
            h.extend(sample_link(seed, slot_index, j, ue, n_t, cfg.pathloss_gain(j, ue)));
        }
    }
    ChannelRealization {
        slot_index,
        num_scbs: m,
        num_ues: u,
        n_t,
        h,
    }
}

pub const CHANNEL_CSV_HEADER: &str = "slot,j,m,n,antenna,re,im";

/// Append one realization as CSV rows (`slot,j,m,n,antenna,re,im`).
pub fn write_channel_rows<W: Write>(
    out: &mut W,
    layout: &Layout,
    channels: &ChannelRealization,
) -> std::io::Result<()> {
    for j in 0..channels.num_scbs() {
        for u in 0..channels.num_ues() {
            for (a, z) in channels.link(j, u).iter().enumerate() {
                writeln!(
                    out,
                    "{},{},{},{},{},{},{}",
                    channels.slot_index,
                    j,
                    layout.owner(u),
                    layout.local_index(u),
                    a,
                    z.re,
                    z.im
                )?;
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mean_power(n: usize, variance: f64) -> f64 {
        (0..n as u64)
            .map(|slot| sample_link(7, slot, 0, 0, 1, variance)[0].norm_sqr())
            .sum::<f64>()
            / n as f64
    }

    #[test]
    fn unit_distance_has_unit_variance() {
        let p = mean_power(100_000, 1.0f64.powf(-3.7));
        assert!((p - 1.0).abs() < 0.02, "{p}");
    }

    #[test]
    fn pathloss_scales_variance() {
        let p = mean_power(100_000, 2.0f64.powf(-4.0));
        assert!((p / (1.0 / 16.0) - 1.0).abs() < 0.02, "{p}");
        let p = mean_power(100_000, 2.0f64.powf(-2.0));
        assert!((p / 0.25 - 1.0).abs() < 0.02, "{p}");
    }

    #[test]
    fn real_and_imaginary_parts_split_variance() {
        let n = 100_000;
        let (mut re2, mut im2, mut cross) = (0.0, 0.0, 0.0);
        for slot in 0..n as u64 {
            let z = sample_link(11, slot, 1, 3, 1, 1.0)[0];
            re2 += z.re * z.re;
            im2 += z.im * z.im;
            cross += z.re * z.im;
        }
        let nf = n as f64;
        assert!((re2 / nf - 0.5).abs() < 0.01);
        assert!((im2 / nf - 0.5).abs() < 0.01);
        assert!((cross / nf).abs() < 0.01);
    }

    #[test]
    fn antenna_components_uncorrelated() {
        let n = 100_000;
        let mut acc = Complex64::new(0.0, 0.0);
        let (mut p0, mut p1) = (0.0, 0.0);
        for slot in 0..n as u64 {
            let h = sample_link(3, slot, 0, 1, 2, 1.0);
            acc += h[0] * h[1].conj();
            p0 += h[0].norm_sqr();
            p1 += h[1].norm_sqr();
        }
        let rho = acc.norm() / (p0 * p1).sqrt();
        assert!(rho < 0.02, "{rho}");
    }

    #[test]
    fn keyed_streams_are_deterministic_and_distinct() {
        let a = sample_link(5, 10, 0, 1, 4, 1.0);
        assert_eq!(a, sample_link(5, 10, 0, 1, 4, 1.0));
        assert_ne!(a, sample_link(5, 11, 0, 1, 4, 1.0));
        assert_ne!(a, sample_link(5, 10, 1, 1, 4, 1.0));
        assert_ne!(a, sample_link(5, 10, 0, 2, 4, 1.0));
        assert_ne!(a, sample_link(6, 10, 0, 1, 4, 1.0));
    }

    #[test]
    fn from_links_indexing() {
        let z = |x: f64| Complex64::new(x, -x);
        let links = vec![
            vec![vec![z(1.0), z(2.0)], vec![z(3.0), z(4.0)]],
            vec![vec![z(5.0), z(6.0)], vec![z(7.0), z(8.0)]],
        ];
        let ch = ChannelRealization::from_links(3, &links);
        assert_eq!(ch.link(1, 0), &[z(5.0), z(6.0)]);
        assert_eq!(ch.link(0, 1), &[z(3.0), z(4.0)]);
        assert!(ch.is_finite());
    }
}
