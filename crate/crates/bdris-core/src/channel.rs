//! Seeded stochastic channel generation: Rayleigh/Rician small-scale fading
//! with 3GPP-style distance path loss.
//!
//! Every random draw comes from a counter-based stream keyed by
//! `(master_seed, trial, link)`, so trials can run in parallel in any order
//! and still reproduce bit-identical channels.

use crate::{C64, CMat, CRowVec, CVec, Error, Result};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use sha2::{Digest, Sha256};

/// 2-D scene: transmitter, RIS, and receiver positions in meters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Geometry {
    pub tx: [f64; 2],
    pub ris: [f64; 2],
    pub rx: [f64; 2],
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

impl Geometry {
    pub fn new(tx: [f64; 2], ris: [f64; 2], rx: [f64; 2]) -> Result<Self> {
        let g = Self { tx, ris, rx };
        if g.d_tx_rx() <= 0.0 || g.d_ris_rx() <= 0.0 || g.d_tx_ris() <= 0.0 {
            return Err(Error::InvalidParameter {
                name: "geometry",
                message: "pairwise distances must be strictly positive".into(),
            });
        }
        Ok(g)
    }

    pub fn d_tx_rx(&self) -> f64 {
        dist(self.tx, self.rx)
    }

    pub fn d_ris_rx(&self) -> f64 {
        dist(self.ris, self.rx)
    }

    pub fn d_tx_ris(&self) -> f64 {
        dist(self.tx, self.ris)
    }
}

/// Distance path loss in dB: `PL = 41.2 + 28.7 log10(d)`.
pub fn pathloss_db(d: f64) -> Result<f64> {
    if !(d > 0.0) {
        return Err(Error::InvalidParameter {
            name: "distance",
            message: format!("distance must be positive, got {d}"),
        });
    }
    Ok(41.2 + 28.7 * d.log10())
}

/// Linear mean power gain `10^(-PL(d)/10)`.
pub fn pathloss_linear_gain(d: f64) -> Result<f64> {
    Ok(10f64.powf(-pathloss_db(d)? / 10.0))
}

/// Small-scale fading description of one link.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FadingSpec {
    /// Rician factor κ ≥ 0 (κ = 0 is Rayleigh).
    pub kappa: f64,
    /// Mean power gain ζ² ≥ 0 applied per entry.
    pub pathloss_linear: f64,
    pub rows: usize,
    pub cols: usize,
}

impl FadingSpec {
    pub fn new(kappa: f64, pathloss_linear: f64, rows: usize, cols: usize) -> Result<Self> {
        if !(kappa >= 0.0) {
            return Err(Error::InvalidParameter { name: "kappa", message: format!("must be >= 0, got {kappa}") });
        }
        if !(pathloss_linear >= 0.0) {
            return Err(Error::InvalidParameter { name: "pathloss_linear", message: format!("must be >= 0, got {pathloss_linear}") });
        }
        Ok(Self { kappa, pathloss_linear, rows, cols })
    }
}

/// The three links of the scenario; the discriminant keys the random stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LinkId {
    /// Transmitter → receiver (direct).
    RxTx = 0,
    /// RIS → receiver.
    RxRis = 1,
    /// Transmitter → RIS.
    RisTx = 2,
}

/// Deterministic per-(seed, trial, link) random stream.
pub fn link_rng(master_seed: u64, trial: u64, link: LinkId) -> ChaCha8Rng {
    let mut hasher = Sha256::new();
    hasher.update(b"bdris/link-stream/v1");
    hasher.update(master_seed.to_le_bytes());
    hasher.update(trial.to_le_bytes());
    hasher.update([link as u8]);
    ChaCha8Rng::from_seed(hasher.finalize().into())
}

/// One CN(0, 1) sample.
pub fn complex_gaussian(rng: &mut ChaCha8Rng) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Matrix of i.i.d. CN(0, 1) entries, filled column-major.
fn gaussian_matrix(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> CMat {
    let mut m = CMat::zeros(rows, cols);
    for j in 0..cols {
        for i in 0..rows {
            m[(i, j)] = complex_gaussian(rng);
        }
    }
    m
}

/// Deterministic unit-modulus LOS matrix for a link: a rank-one outer
/// product of steering-like vectors whose phases derive from a hash of the
/// geometry, so reruns and parallel trials see the same LOS.
pub fn los_matrix(geometry: &Geometry, link: LinkId, rows: usize, cols: usize) -> CMat {
    let mut hasher = Sha256::new();
    hasher.update(b"bdris/los/v1");
    for p in [geometry.tx, geometry.ris, geometry.rx] {
        hasher.update(p[0].to_le_bytes());
        hasher.update(p[1].to_le_bytes());
    }
    hasher.update([link as u8]);
    let mut rng = ChaCha8Rng::from_seed(hasher.finalize().into());
    let row_phases: Vec<f64> = (0..rows).map(|_| rng.random::<f64>() * std::f64::consts::TAU).collect();
    let col_phases: Vec<f64> = (0..cols).map(|_| rng.random::<f64>() * std::f64::consts::TAU).collect();
    CMat::from_fn(rows, cols, |i, j| C64::from_polar(1.0, row_phases[i] + col_phases[j]))
}

/// Draws one Rician-faded matrix:
///
/// ```text
/// H = sqrt(ζ²) ( sqrt(κ/(κ+1)) H_LOS + sqrt(1/(κ+1)) H_NLOS )
/// ```
///
/// with `H_NLOS` i.i.d. CN(0,1), so `E{|h|²} = ζ²` entrywise. `los` may be
/// omitted only for κ = 0.
pub fn draw_rician(spec: &FadingSpec, rng: &mut ChaCha8Rng, los: Option<&CMat>) -> Result<CMat> {
    let nlos_scale = (spec.pathloss_linear / (spec.kappa + 1.0)).sqrt();
    let mut h = gaussian_matrix(spec.rows, spec.cols, rng).scale(nlos_scale);
    if spec.kappa > 0.0 {
        let los = los.ok_or(Error::InvalidParameter {
            name: "los",
            message: "LOS matrix required for kappa > 0".into(),
        })?;
        if los.nrows() != spec.rows || los.ncols() != spec.cols {
            return Err(Error::dims("draw_rician", format!("{}x{}", spec.rows, spec.cols), format!("{}x{}", los.nrows(), los.ncols())));
        }
        let los_scale = (spec.pathloss_linear * spec.kappa / (spec.kappa + 1.0)).sqrt();
        h += los.scale(los_scale);
    }
    Ok(h)
}

/// Antenna/element counts of the scenario.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ScenarioDims {
    pub n_t: usize,
    pub n_i: usize,
    pub n_r: usize,
}

/// Where a realization's randomness came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SeedProvenance {
    pub master_seed: u64,
    pub trial: u64,
}

/// One draw of the three link matrices.
#[derive(Debug, Clone)]
pub struct ChannelRealization {
    pub h_rt: CMat,
    pub h_ri: CMat,
    pub h_it: CMat,
    pub provenance: SeedProvenance,
}

/// Draws the three links from disjoint sub-streams of
/// `(master_seed, trial)`; identical inputs reproduce identical outputs
/// bit for bit.
pub fn generate_realization(
    geometry: &Geometry,
    dims: ScenarioDims,
    kappa: f64,
    master_seed: u64,
    trial: u64,
) -> Result<ChannelRealization> {
    let links = [
        (LinkId::RxTx, geometry.d_tx_rx(), dims.n_r, dims.n_t),
        (LinkId::RxRis, geometry.d_ris_rx(), dims.n_r, dims.n_i),
        (LinkId::RisTx, geometry.d_tx_ris(), dims.n_i, dims.n_t),
    ];
    let mut out: Vec<CMat> = Vec::with_capacity(3);
    for (link, d, rows, cols) in links {
        let gain = pathloss_linear_gain(d)?;
        let spec = FadingSpec::new(kappa, gain, rows, cols)?;
        let los = los_matrix(geometry, link, rows, cols);
        let mut rng = link_rng(master_seed, trial, link);
        out.push(draw_rician(&spec, &mut rng, Some(&los))?);
    }
    let h_it = out.pop().expect("three links");
    let h_ri = out.pop().expect("three links");
    let h_rt = out.pop().expect("three links");
    Ok(ChannelRealization {
        h_rt,
        h_ri,
        h_it,
        provenance: SeedProvenance { master_seed, trial },
    })
}

/// Rayleigh SISO cascade links with explicit mean power gains, used by the
/// SNR scaling sweeps (direct link blocked).
pub fn siso_realization(
    zeta_ri_sq: f64,
    zeta_it_sq: f64,
    n_i: usize,
    master_seed: u64,
    trial: u64,
) -> Result<(CRowVec, CVec)> {
    let ri_spec = FadingSpec::new(0.0, zeta_ri_sq, 1, n_i)?;
    let it_spec = FadingSpec::new(0.0, zeta_it_sq, n_i, 1)?;
    let h_ri = draw_rician(&ri_spec, &mut link_rng(master_seed, trial, LinkId::RxRis), None)?;
    let h_it = draw_rician(&it_spec, &mut link_rng(master_seed, trial, LinkId::RisTx), None)?;
    Ok((h_ri.row(0).into_owned(), h_it.column(0).into_owned()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pathloss_reference_values() {
        assert!((pathloss_db(1.0).unwrap() - 41.2).abs() < 1e-12);
        assert!((pathloss_db(10.0).unwrap() - 69.9).abs() < 1e-12);
        let expect = 41.2 + 28.7 * 300f64.log10();
        assert!((pathloss_db(300.0).unwrap() - expect).abs() < 1e-12);
        assert!(pathloss_db(0.0).is_err());
        assert!(pathloss_db(-3.0).is_err());
    }

    #[test]
    fn rayleigh_moment_calibration() {
        let spec = FadingSpec::new(0.0, 2.5, 10, 10).unwrap();
        let mut rng = link_rng(99, 0, LinkId::RxRis);
        let mut acc = 0.0;
        let mut count = 0usize;
        for _ in 0..1000 {
            let h = draw_rician(&spec, &mut rng, None).unwrap();
            acc += h.norm_squared();
            count += h.len();
        }
        let mean = acc / count as f64;
        assert!((mean - 2.5).abs() < 0.02 * 2.5, "mean |h|^2 = {mean}");
    }

    #[test]
    fn large_kappa_collapses_to_los() {
        let geo = Geometry::new([0.0, -60.0], [300.0, 10.0], [300.0, 0.0]).unwrap();
        let los = los_matrix(&geo, LinkId::RxTx, 3, 2);
        let spec = FadingSpec::new(1e9, 1.0, 3, 2).unwrap();
        let mut rng = link_rng(1, 0, LinkId::RxTx);
        let h = draw_rician(&spec, &mut rng, Some(&los)).unwrap();
        for (a, b) in h.iter().zip(los.iter()) {
            assert!((a - b).norm() < 1e-4 * b.norm());
        }
    }

    #[test]
    fn rician_moment_calibration() {
        let zeta_sq = 1e-7;
        let geo = Geometry::new([0.0, -60.0], [300.0, 10.0], [300.0, 0.0]).unwrap();
        let los = los_matrix(&geo, LinkId::RxRis, 8, 8);
        let spec = FadingSpec::new(1.0, zeta_sq, 8, 8).unwrap();
        let mut rng = link_rng(5, 1, LinkId::RxRis);
        let mut acc = 0.0;
        let mut count = 0usize;
        for _ in 0..1600 {
            let h = draw_rician(&spec, &mut rng, Some(&los)).unwrap();
            acc += h.norm_squared();
            count += h.len();
        }
        let mean = acc / count as f64;
        assert!((mean - zeta_sq).abs() < 0.02 * zeta_sq, "mean |h|^2 = {mean:e}");
    }

    #[test]
    fn realization_is_deterministic() {
        let geo = Geometry::new([0.0, -60.0], [300.0, 10.0], [300.0, 0.0]).unwrap();
        let dims = ScenarioDims { n_t: 2, n_i: 4, n_r: 2 };
        let a = generate_realization(&geo, dims, 1.0, 42, 7).unwrap();
        let b = generate_realization(&geo, dims, 1.0, 42, 7).unwrap();
        assert_eq!(a.h_rt.as_slice(), b.h_rt.as_slice());
        assert_eq!(a.h_ri.as_slice(), b.h_ri.as_slice());
        assert_eq!(a.h_it.as_slice(), b.h_it.as_slice());

        let c = generate_realization(&geo, dims, 1.0, 42, 8).unwrap();
        assert!((a.h_rt.clone() - c.h_rt).norm() > 1e-9);
    }

    #[test]
    fn los_entries_are_unit_modulus_rank_one() {
        let geo = Geometry::new([0.0, -60.0], [300.0, 10.0], [300.0, 0.0]).unwrap();
        let los = los_matrix(&geo, LinkId::RisTx, 5, 3);
        for e in los.iter() {
            assert!((e.norm() - 1.0).abs() < 1e-12);
        }
        let sv = los.clone().singular_values();
        assert!(sv[0] > 1e-6);
        for k in 1..sv.len().min(3) {
            assert!(sv[k] < 1e-10 * sv[0], "LOS must be rank one");
        }
    }

    #[test]
    fn geometry_rejects_coincident_nodes() {
        assert!(Geometry::new([0.0, 0.0], [0.0, 0.0], [1.0, 1.0]).is_err());
    }
}
