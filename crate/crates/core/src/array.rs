//! Array geometry, steering vectors and channel construction.

use std::f64::consts::{FRAC_PI_2, PI};

use faer::{c64, Mat};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{invalid, Result};

/// Physical arrival/departure angles of a path, in radians.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AngleTriple {
    pub azimuth: f64,
    pub elevation: f64,
    pub departure: f64,
}

impl AngleTriple {
    pub fn new(azimuth: f64, elevation: f64, departure: f64) -> Result<Self> {
        let a = Self { azimuth, elevation, departure };
        a.validate()?;
        Ok(a)
    }

    /// Source in the broadside azimuth plane (azimuth = π/2) at the given elevation.
    pub fn in_plane(elevation: f64) -> Self {
        Self { azimuth: FRAC_PI_2, elevation, departure: 0.0 }
    }

    pub fn validate(&self) -> Result<()> {
        let tol = 1e-12;
        if !(-tol..=PI + tol).contains(&self.azimuth) {
            return Err(invalid(format!("azimuth {} outside [0, pi]", self.azimuth)));
        }
        for (name, v) in [("elevation", self.elevation), ("departure", self.departure)] {
            if !(-FRAC_PI_2 - tol..=FRAC_PI_2 + tol).contains(&v) {
                return Err(invalid(format!("{name} {v} outside [-pi/2, pi/2]")));
            }
        }
        Ok(())
    }
}

/// Per-element phase increments along the array axes for half-wavelength spacing.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpatialFrequencies {
    pub phi: f64,
    pub vartheta: f64,
    pub varpi: f64,
}

pub fn spatial_frequencies(angles: &AngleTriple) -> SpatialFrequencies {
    SpatialFrequencies {
        phi: PI * angles.azimuth.cos(),
        vartheta: PI * angles.azimuth.sin() * angles.elevation.sin(),
        varpi: PI * angles.departure.sin(),
    }
}

/// Uniform planar array with `n_x × n_y` elements at half-wavelength spacing.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct UpaGeometry {
    pub n_x: usize,
    pub n_y: usize,
}

impl UpaGeometry {
    pub fn new(n_x: usize, n_y: usize) -> Result<Self> {
        if n_x == 0 || n_y == 0 {
            return Err(invalid("array dimensions must be positive"));
        }
        Ok(Self { n_x, n_y })
    }

    pub fn square(side: usize) -> Result<Self> {
        Self::new(side, side)
    }

    pub fn n(&self) -> usize {
        self.n_x * self.n_y
    }

    pub const SPACING_OVER_LAMBDA: f64 = 0.5;
}

fn cis(x: f64) -> c64 {
    c64::new(x.cos(), x.sin())
}

/// UPA response `α_x(phi) ⊗ α_y(vartheta)`; the x index is slow, y fast.
pub fn steer_upa(geom: &UpaGeometry, vartheta: f64, phi: f64) -> Vec<c64> {
    let mut out = Vec::with_capacity(geom.n());
    for p in 0..geom.n_x {
        for q in 0..geom.n_y {
            out.push(cis(p as f64 * phi + q as f64 * vartheta));
        }
    }
    out
}

/// UPA response towards a physical direction.
pub fn steer_upa_angles(geom: &UpaGeometry, angles: &AngleTriple) -> Vec<c64> {
    let f = spatial_frequencies(angles);
    steer_upa(geom, f.vartheta, f.phi)
}

pub fn steer_ula(m: usize, varpi: f64) -> Vec<c64> {
    (0..m).map(|p| cis(p as f64 * varpi)).collect()
}

/// HAP↔surface matrix plus surface↔source vectors. Index 0 of `h` is the target.
#[derive(Clone, Debug)]
pub struct ChannelSet {
    pub g: Mat<c64>,
    pub h: Vec<Vec<c64>>,
    pub pathloss_h2r: f64,
    pub pathloss_r2u: Vec<f64>,
}

impl ChannelSet {
    pub fn n(&self) -> usize {
        self.g.nrows()
    }

    pub fn hap_antennas(&self) -> usize {
        self.g.ncols()
    }

    pub fn with_pathloss(mut self, h2r: f64, r2u: Vec<f64>) -> Result<Self> {
        if r2u.len() != self.h.len() {
            return Err(crate::Error::Dimension(format!(
                "{} path losses for {} source channels",
                r2u.len(),
                self.h.len()
            )));
        }
        self.pathloss_h2r = h2r;
        self.pathloss_r2u = r2u;
        Ok(self)
    }

    /// Independent Rician draw of every channel around the current (LoS) values.
    pub fn rician<R: Rng + ?Sized>(&self, kappa: f64, rng: &mut R) -> Result<Self> {
        let (n, m) = (self.g.nrows(), self.g.ncols());
        let flat: Vec<c64> = (0..n * m).map(|k| self.g[(k / m, k % m)]).collect();
        let mixed = rician_mix(&flat, kappa, rng)?;
        let g = Mat::from_fn(n, m, |i, j| mixed[i * m + j]);
        let h = self
            .h
            .iter()
            .map(|hk| rician_mix(hk, kappa, rng))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { g, h, pathloss_h2r: self.pathloss_h2r, pathloss_r2u: self.pathloss_r2u.clone() })
    }
}

/// Rank-one LoS channels with unit path losses.
pub fn los_channels(
    geom: &UpaGeometry,
    hap_antennas: usize,
    angles_g: &AngleTriple,
    angles_h: &[AngleTriple],
) -> Result<ChannelSet> {
    if angles_h.is_empty() {
        return Err(invalid("at least one source channel is required"));
    }
    if hap_antennas == 0 {
        return Err(invalid("HAP needs at least one antenna"));
    }
    let fg = spatial_frequencies(angles_g);
    let a = steer_upa(geom, fg.vartheta, fg.phi);
    let b = steer_ula(hap_antennas, fg.varpi);
    let g = Mat::from_fn(a.len(), b.len(), |i, j| a[i] * b[j]);
    let h = angles_h.iter().map(|x| steer_upa_angles(geom, x)).collect();
    Ok(ChannelSet { g, h, pathloss_h2r: 1.0, pathloss_r2u: vec![1.0; angles_h.len()] })
}

/// Rician factor at or above which the scattered part is dropped entirely.
pub const KAPPA_LOS: f64 = 1e12;

/// `sqrt(κ/(1+κ))·channel + sqrt(1/(1+κ))·w` with `w` i.i.d. CN(0, 1).
pub fn rician_mix<R: Rng + ?Sized>(channel: &[c64], kappa: f64, rng: &mut R) -> Result<Vec<c64>> {
    if !(kappa >= 0.0) {
        return Err(invalid(format!("rician factor {kappa} must be non-negative")));
    }
    if kappa >= KAPPA_LOS {
        return Ok(channel.to_vec());
    }
    let los = (kappa / (1.0 + kappa)).sqrt();
    let nlos = (1.0 / (1.0 + kappa)).sqrt() * std::f64::consts::FRAC_1_SQRT_2;
    Ok(channel
        .iter()
        .map(|&x| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            x * los + c64::new(re * nlos, im * nlos)
        })
        .collect())
}

/// Log-distance path loss referenced to 1 m.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PathLossModel {
    /// Linear gain at the 1 m reference distance.
    pub ref_gain: f64,
    pub exponent: f64,
}

impl Default for PathLossModel {
    fn default() -> Self {
        Self { ref_gain: 1e-3, exponent: 2.2 }
    }
}

impl PathLossModel {
    pub fn gain(&self, distance: f64) -> Result<f64> {
        if !(distance >= 1.0) {
            return Err(invalid(format!("distance {distance} m is below the 1 m reference")));
        }
        Ok(self.ref_gain * distance.powf(-self.exponent))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn broadside_has_zero_phases() {
        let f = spatial_frequencies(&AngleTriple::new(FRAC_PI_2, 0.0, 0.0).unwrap());
        assert!(f.phi.abs() < 1e-15 && f.vartheta == 0.0 && f.varpi == 0.0);
    }

    #[test]
    fn generic_angles_match_formulas() {
        let (az, el, dep) = (PI / 3.0, PI / 6.0, PI / 4.0);
        let f = spatial_frequencies(&AngleTriple::new(az, el, dep).unwrap());
        // cos(60°)=1/2, sin(60°)sin(30°)=√3/4, sin(45°)=√2/2
        assert!((f.phi - PI / 2.0).abs() < 1e-12);
        assert!((f.vartheta - PI * 3f64.sqrt() / 4.0).abs() < 1e-12);
        assert!((f.varpi - PI * 2f64.sqrt() / 2.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_out_of_range_angles() {
        assert!(AngleTriple::new(-0.1, 0.0, 0.0).is_err());
        assert!(AngleTriple::new(1.0, 2.0, 0.0).is_err());
        assert!(AngleTriple::new(1.0, 0.0, -1.6).is_err());
    }

    #[test]
    fn upa_y_index_is_fast() {
        let g = UpaGeometry::new(2, 2).unwrap();
        let v = steer_upa(&g, PI, 0.0);
        let expect = [1.0, -1.0, 1.0, -1.0];
        for (x, e) in v.iter().zip(expect) {
            assert!((x - c64::new(e, 0.0)).norm() < 1e-12);
        }
        assert!(steer_upa(&UpaGeometry::square(4).unwrap(), 0.0, 0.0)
            .iter()
            .all(|x| (x - c64::new(1.0, 0.0)).norm() == 0.0));
    }

    #[test]
    fn ula_quarter_turn() {
        let v = steer_ula(2, FRAC_PI_2);
        assert!((v[0] - c64::new(1.0, 0.0)).norm() < 1e-15);
        assert!((v[1] - c64::new(0.0, 1.0)).norm() < 1e-15);
    }

    #[test]
    fn los_entries_are_products() {
        let geom = UpaGeometry::square(4).unwrap();
        let ag = AngleTriple::new(1.1, 0.3, -0.4).unwrap();
        let ch = los_channels(&geom, 4, &ag, &[AngleTriple::in_plane(0.2)]).unwrap();
        let f = spatial_frequencies(&ag);
        let a = steer_upa(&geom, f.vartheta, f.phi);
        let b = steer_ula(4, f.varpi);
        assert_eq!((ch.g.nrows(), ch.g.ncols()), (16, 4));
        for i in 0..16 {
            for j in 0..4 {
                assert!((ch.g[(i, j)] - a[i] * b[j]).norm() < 1e-14);
                assert!((ch.g[(i, j)].norm() - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn path_loss_reference_points() {
        let pl = PathLossModel::default();
        assert!((pl.gain(1.0).unwrap() - 1e-3).abs() < 1e-18);
        assert!((pl.gain(10.0).unwrap() - 1e-3 * 10f64.powf(-2.2)).abs() < 1e-18);
        assert!(pl.gain(0.5).is_err());
        assert!(pl.gain(20.0).unwrap() < pl.gain(10.0).unwrap());
    }

    #[test]
    fn rician_limits() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = vec![c64::new(0.3, -0.7); 8];
        assert_eq!(rician_mix(&x, 1e12, &mut rng).unwrap(), x);
        assert!(rician_mix(&x, -1.0, &mut rng).is_err());
        let a = rician_mix(&x, 2.0, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        let b = rician_mix(&x, 2.0, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        assert_eq!(a, b);
    }
}
