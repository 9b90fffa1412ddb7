//! Scenario generation and unit conversions.
//!
//! Large-scale gain follows `128 + 35 log10(d)` dB with `d` in kilometres;
//! small-scale fading is CN(0, 1), drawn independently for every (user, RB)
//! pair.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Users closer to the base station than this are pushed out to it.
pub const MIN_DISTANCE_M: f64 = 1.0;

pub fn pathloss_db(distance_km: f64) -> Result<f64> {
    if !(distance_km > 0.0) || !distance_km.is_finite() {
        return Err(Error::Domain(format!(
            "distance must be positive, got {distance_km} km"
        )));
    }
    Ok(128.0 + 35.0 * distance_km.log10())
}

/// Thermal noise power in watts over `bandwidth_hz` for a PSD in dBm/Hz.
pub fn noise_power(psd_dbm_hz: f64, bandwidth_hz: f64) -> Result<f64> {
    if !(bandwidth_hz > 0.0) {
        return Err(Error::Domain(format!(
            "bandwidth must be positive, got {bandwidth_hz} Hz"
        )));
    }
    Ok(dbm_to_watt(psd_dbm_hz + 10.0 * bandwidth_hz.log10()))
}

pub fn dbm_to_watt(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

pub fn watt_to_dbm(watt: f64) -> Result<f64> {
    if !(watt > 0.0) {
        return Err(Error::Domain(format!(
            "power must be positive to express in dBm, got {watt} W"
        )));
    }
    Ok(10.0 * watt.log10() + 30.0)
}

/// Mean channel power gain at `distance_m` metres (path loss only).
pub fn large_scale_gain(distance_m: f64) -> Result<f64> {
    let pl = pathloss_db(distance_m / 1000.0)?;
    Ok(10f64.powf(-pl / 10.0))
}

/// `|g|^2` for `g ~ CN(0, 1)`; exponentially distributed with unit mean.
pub fn rayleigh_power<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    0.5 * (re * re + im * im)
}

/// Mixes a base seed with a stream index (SplitMix64 finalizer), so trial
/// `i` of an ensemble gets its own independent generator.
pub fn derive_seed(base: u64, index: u64) -> u64 {
    let mut z = base
        .wrapping_add(0x9E37_79B9_7F4A_7C15)
        .wrapping_add(index.wrapping_mul(0xD1B5_4A32_D192_ED03));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Cluster sizes `L_m`: the first `U mod M` RBs take `ceil(U/M)` users, the
/// rest one fewer.
pub fn cluster_sizes(num_users: usize, num_rbs: usize) -> Result<Vec<usize>> {
    if num_rbs == 0 || num_users < num_rbs {
        return Err(Error::InvalidConfig(format!(
            "need U >= M >= 1, got U = {num_users}, M = {num_rbs}"
        )));
    }
    let base = num_users / num_rbs;
    let extra = num_users % num_rbs;
    Ok((0..num_rbs).map(|m| base + usize::from(m < extra)).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Placement {
    /// Area-uniform inside a disk of `radius` metres around the base station.
    UniformDisk { radius: f64 },
    /// Users spread round-robin over circles of the given radii (metres).
    Ringed { radii: Vec<f64> },
}

impl Placement {
    fn validate(&self) -> Result<()> {
        let ok = match self {
            Placement::UniformDisk { radius } => *radius > 0.0,
            Placement::Ringed { radii } => !radii.is_empty() && radii.iter().all(|r| *r > 0.0),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!("invalid placement {self:?}")))
        }
    }

    /// Distances (metres) of `num_users` users from the base station.
    pub fn draw_distances<R: Rng + ?Sized>(&self, num_users: usize, rng: &mut R) -> Vec<f64> {
        match self {
            Placement::UniformDisk { radius } => {
                let r_min = MIN_DISTANCE_M.min(*radius);
                (0..num_users)
                    .map(|_| {
                        let u: f64 = rng.random();
                        (r_min * r_min + u * (radius * radius - r_min * r_min)).sqrt()
                    })
                    .collect()
            }
            Placement::Ringed { radii } => (0..num_users)
                .map(|u| radii[u % radii.len()].max(MIN_DISTANCE_M))
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub num_users: usize,
    pub num_rbs: usize,
    pub placement: Placement,
    /// bit/s/Hz, applied to every user.
    pub min_rate: f64,
    /// Watts, applied to every user.
    pub max_power: f64,
    /// Watts per user; a cluster of `L` users burns `L` times this.
    pub circuit_power_per_user: f64,
    /// dBm/Hz.
    pub noise_psd: f64,
    /// Hz.
    pub rb_bandwidth: f64,
    pub seed: u64,
}

impl ScenarioConfig {
    /// Defaults for the remaining parameters: 1.5 bit/s/Hz QoS, 0 dBm circuit
    /// power per user, -174 dBm/Hz noise, 180 kHz RBs.
    pub fn with_defaults(num_users: usize, num_rbs: usize, placement: Placement) -> Self {
        Self {
            num_users,
            num_rbs,
            placement,
            min_rate: 1.5,
            max_power: dbm_to_watt(20.0),
            circuit_power_per_user: dbm_to_watt(0.0),
            noise_psd: -174.0,
            rb_bandwidth: 180e3,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        cluster_sizes(self.num_users, self.num_rbs)?;
        self.placement.validate()?;
        if !(self.rb_bandwidth > 0.0) {
            return Err(Error::InvalidConfig("rb_bandwidth must be positive".into()));
        }
        if !(self.max_power > 0.0) || !(self.min_rate >= 0.0) || !(self.circuit_power_per_user >= 0.0)
        {
            return Err(Error::InvalidConfig(
                "need max_power > 0, min_rate >= 0, circuit_power_per_user >= 0".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawScenario")]
pub struct Scenario {
    /// `gains[u][m]` is the linear power gain of user `u` on RB `m`.
    pub gains: Vec<Vec<f64>>,
    pub cluster_sizes: Vec<usize>,
    pub min_rates: Vec<f64>,
    pub max_powers: Vec<f64>,
    pub circuit_power_per_user: f64,
    pub noise_power: f64,
}

#[derive(Deserialize)]
struct RawScenario {
    gains: Vec<Vec<f64>>,
    cluster_sizes: Vec<usize>,
    min_rates: Vec<f64>,
    max_powers: Vec<f64>,
    circuit_power_per_user: f64,
    noise_power: f64,
}

impl TryFrom<RawScenario> for Scenario {
    type Error = Error;

    fn try_from(raw: RawScenario) -> Result<Self> {
        let s = Scenario {
            gains: raw.gains,
            cluster_sizes: raw.cluster_sizes,
            min_rates: raw.min_rates,
            max_powers: raw.max_powers,
            circuit_power_per_user: raw.circuit_power_per_user,
            noise_power: raw.noise_power,
        };
        s.validate()?;
        Ok(s)
    }
}

impl Scenario {
    /// Builds a scenario with uniform per-user constraints and balanced
    /// cluster sizes.
    pub fn from_gains(
        gains: Vec<Vec<f64>>,
        min_rate: f64,
        max_power: f64,
        circuit_power_per_user: f64,
        noise_power: f64,
    ) -> Result<Self> {
        let num_users = gains.len();
        let num_rbs = gains.first().map_or(0, Vec::len);
        let s = Scenario {
            cluster_sizes: cluster_sizes(num_users, num_rbs)?,
            gains,
            min_rates: vec![min_rate; num_users],
            max_powers: vec![max_power; num_users],
            circuit_power_per_user,
            noise_power,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn num_users(&self) -> usize {
        self.gains.len()
    }

    pub fn num_rbs(&self) -> usize {
        self.cluster_sizes.len()
    }

    pub fn gain(&self, user: usize, rb: usize) -> f64 {
        self.gains[user][rb]
    }

    /// Same channels, every user capped at `max_power` watts.
    pub fn with_max_power(&self, max_power: f64) -> Self {
        Self {
            max_powers: vec![max_power; self.num_users()],
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let u = self.num_users();
        let m = self.num_rbs();
        if m == 0 || u < m {
            return Err(Error::InvalidInstance(format!(
                "need U >= M >= 1, got U = {u}, M = {m}"
            )));
        }
        if let Some(row) = self.gains.iter().find(|row| row.len() != m) {
            return Err(Error::LengthMismatch {
                expected: m,
                got: row.len(),
            });
        }
        if self.gains.iter().flatten().any(|g| !(*g > 0.0) || !g.is_finite()) {
            return Err(Error::InvalidInstance("all gains must be positive".into()));
        }
        if self.cluster_sizes.iter().sum::<usize>() != u {
            return Err(Error::InvalidInstance("cluster sizes must sum to U".into()));
        }
        let ceil = u.div_ceil(m);
        if self.cluster_sizes.iter().any(|&l| l + 1 < ceil || l > ceil) {
            return Err(Error::InvalidInstance(format!(
                "cluster sizes {:?} must lie in {{{}, {ceil}}}",
                self.cluster_sizes,
                ceil - 1
            )));
        }
        for v in [&self.min_rates, &self.max_powers] {
            if v.len() != u {
                return Err(Error::LengthMismatch {
                    expected: u,
                    got: v.len(),
                });
            }
        }
        if self.min_rates.iter().any(|r| !(*r >= 0.0))
            || self.max_powers.iter().any(|p| !(*p > 0.0))
            || !(self.noise_power > 0.0)
            || !(self.circuit_power_per_user >= 0.0)
        {
            return Err(Error::InvalidInstance(
                "need min rates >= 0, max powers > 0, noise > 0, circuit power >= 0".into(),
            ));
        }
        Ok(())
    }
}

/// Draws a scenario; the same config (seed included) always yields the same
/// scenario.
pub fn draw_scenario(config: &ScenarioConfig) -> Result<Scenario> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let distances = config.placement.draw_distances(config.num_users, &mut rng);
    let gains = distances
        .iter()
        .map(|&d| {
            let mean = large_scale_gain(d)?;
            Ok((0..config.num_rbs)
                .map(|_| mean * rayleigh_power(&mut rng))
                .collect())
        })
        .collect::<Result<Vec<Vec<f64>>>>()?;
    // An exact zero fading draw has probability zero but would break the
    // positivity invariant.
    let gains = gains
        .into_iter()
        .map(|row| row.into_iter().map(|g| g.max(f64::MIN_POSITIVE)).collect())
        .collect();
    Scenario::from_gains(
        gains,
        config.min_rate,
        config.max_power,
        config.circuit_power_per_user,
        noise_power(config.noise_psd, config.rb_bandwidth)?,
    )
}
