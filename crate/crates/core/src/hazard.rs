//! Scenario ground-motion random fields: joint lognormal intensity measures
//! across sites with a perfectly correlated between-event term and an
//! exponentially decaying within-event correlation.

use std::io::Write;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::inventory::{Inventory, Site};
use crate::rng::{substream, Purpose, StreamKey};

pub const EARTH_RADIUS_KM: f64 = 6371.0;

/// Great-circle distance on a spherical Earth.
pub fn haversine_km(a: Site, b: Site) -> f64 {
    let (lat1, lat2) = (a.lat.to_radians(), b.lat.to_radians());
    let dlat = lat2 - lat1;
    let dlon = (b.lon - a.lon).to_radians();
    let h = (dlat / 2.0).sin().powi(2) + lat1.cos() * lat2.cos() * (dlon / 2.0).sin().powi(2);
    2.0 * EARTH_RADIUS_KM * h.sqrt().min(1.0).asin()
}

/// How the between-event variance couples sites.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BetweenEventCoupling {
    /// One event term shared by all sites: `τ²` in every entry.
    #[default]
    AllOnes,
    /// `τ²` on the diagonal only.
    Identity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HazardSite {
    pub asset_id: String,
    pub lat: f64,
    pub lon: f64,
}

impl HazardSite {
    pub fn site(&self) -> Site {
        Site {
            lat: self.lat,
            lon: self.lon,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioHazardInput {
    pub sites: Vec<HazardSite>,
    /// Mean of ln IM (IM in g) per site.
    pub median_ln_im: Vec<f64>,
    pub tau: f64,
    pub phi: Vec<f64>,
    pub correlation_range_km: f64,
    #[serde(default)]
    pub between_event: BetweenEventCoupling,
}

impl ScenarioHazardInput {
    pub fn validate(&self) -> Result<()> {
        let n = self.sites.len();
        if n == 0 {
            return Err(Error::invalid("hazard input has no sites"));
        }
        if self.median_ln_im.len() != n || self.phi.len() != n {
            return Err(Error::invalid(format!(
                "hazard input: {n} sites but {} medians and {} within-event stds",
                self.median_ln_im.len(),
                self.phi.len()
            )));
        }
        if !(self.tau >= 0.0 && self.tau.is_finite()) {
            return Err(Error::invalid("between-event std must be finite and non-negative"));
        }
        if self.phi.iter().any(|p| !(*p >= 0.0 && p.is_finite())) {
            return Err(Error::invalid("within-event stds must be finite and non-negative"));
        }
        if self.median_ln_im.iter().any(|m| !m.is_finite()) {
            return Err(Error::invalid("median ln IM must be finite"));
        }
        if !(self.correlation_range_km > 0.0 && self.correlation_range_km.is_finite()) {
            return Err(Error::invalid("correlation range must be positive"));
        }
        for s in &self.sites {
            Site::new(s.lat, s.lon)?;
        }
        Ok(())
    }

    pub fn site_index(&self, asset_id: &str) -> Option<usize> {
        self.sites.iter().position(|s| s.asset_id == asset_id)
    }
}

/// `ln IM = a0 + a1·M + a2·ln(r + c)` with `r` the epicentral distance in km.
/// Meant for synthetic studies only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParametricAttenuation {
    pub magnitude: f64,
    pub source_lat: f64,
    pub source_lon: f64,
    pub a0: f64,
    pub a1: f64,
    pub a2: f64,
    pub c: f64,
}

impl ParametricAttenuation {
    pub fn median_ln_im(&self, site: Site) -> f64 {
        let r = haversine_km(
            Site {
                lat: self.source_lat,
                lon: self.source_lon,
            },
            site,
        );
        self.a0 + self.a1 * self.magnitude + self.a2 * (r + self.c).ln()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PhiInput {
    Constant(f64),
    PerSite(Vec<f64>),
}

/// On-disk hazard description. `sites` may be omitted when an attenuation
/// block supplies the medians; inventory coordinates are used then.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HazardFile {
    #[serde(default)]
    pub scenario: String,
    #[serde(default)]
    pub sites: Option<Vec<HazardSite>>,
    #[serde(default)]
    pub median_ln_im: Option<Vec<f64>>,
    #[serde(default)]
    pub attenuation: Option<ParametricAttenuation>,
    pub tau: f64,
    pub phi: PhiInput,
    pub correlation_range_km: f64,
    #[serde(default)]
    pub between_event: BetweenEventCoupling,
}

impl HazardFile {
    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::invalid(format!("hazard {}: {e}", path.display())))
    }

    pub fn resolve(&self, inventory: &Inventory) -> Result<ScenarioHazardInput> {
        let sites = match &self.sites {
            Some(s) => s.clone(),
            None => inventory
                .assets()
                .iter()
                .map(|a| HazardSite {
                    asset_id: a.asset_id.clone(),
                    lat: a.site.lat,
                    lon: a.site.lon,
                })
                .collect(),
        };
        let median_ln_im = match (&self.median_ln_im, &self.attenuation) {
            (Some(m), _) => m.clone(),
            (None, Some(att)) => sites.iter().map(|s| att.median_ln_im(s.site())).collect(),
            (None, None) => return Err(Error::invalid("hazard file needs `median_ln_im` or `attenuation`")),
        };
        let phi = match &self.phi {
            PhiInput::Constant(p) => vec![*p; sites.len()],
            PhiInput::PerSite(v) => v.clone(),
        };
        let input = ScenarioHazardInput {
            sites,
            median_ln_im,
            tau: self.tau,
            phi,
            correlation_range_km: self.correlation_range_km,
            between_event: self.between_event,
        };
        input.validate()?;
        Ok(input)
    }
}

/// `Σ = τ²·C + diag(φ)·R·diag(φ)` with `R_jk = exp(-3 h_jk / b)`.
pub fn build_covariance(input: &ScenarioHazardInput) -> Result<DMatrix<f64>> {
    input.validate()?;
    let n = input.sites.len();
    let tau2 = input.tau * input.tau;
    let mut sigma = DMatrix::zeros(n, n);
    for j in 0..n {
        for k in 0..=j {
            let h = haversine_km(input.sites[j].site(), input.sites[k].site());
            if !h.is_finite() {
                return Err(Error::Numeric(format!("non-finite distance between sites {j} and {k}")));
            }
            let rho = if j == k {
                1.0
            } else {
                (-3.0 * h / input.correlation_range_km).exp()
            };
            let between = match input.between_event {
                BetweenEventCoupling::AllOnes => tau2,
                BetweenEventCoupling::Identity if j == k => tau2,
                BetweenEventCoupling::Identity => 0.0,
            };
            let v = between + input.phi[j] * rho * input.phi[k];
            sigma[(j, k)] = v;
            sigma[(k, j)] = v;
        }
    }
    Ok(sigma)
}

/// Lower-triangular factor of a covariance matrix plus the diagonal jitter
/// that was needed to obtain it.
#[derive(Debug, Clone)]
pub struct CovarianceFactor {
    pub lower: DMatrix<f64>,
    pub jitter: f64,
}

/// Cholesky with escalating diagonal jitter `δ = 1e-12·d, 1e-11·d, …, 1e-8·d`
/// where `d` is the largest diagonal entry.
pub fn factorize(sigma: &DMatrix<f64>) -> Result<CovarianceFactor> {
    let n = sigma.nrows();
    let max_diag = (0..n).map(|i| sigma[(i, i)]).fold(0.0, f64::max);
    if max_diag == 0.0 {
        return Ok(CovarianceFactor {
            lower: DMatrix::zeros(n, n),
            jitter: 0.0,
        });
    }
    if let Some(ch) = sigma.clone().cholesky() {
        return Ok(CovarianceFactor {
            lower: ch.l(),
            jitter: 0.0,
        });
    }
    let mut rel = 1e-12;
    while rel <= 1e-8 * (1.0 + 1e-9) {
        let delta = rel * max_diag;
        let mut jittered = sigma.clone();
        for i in 0..n {
            jittered[(i, i)] += delta;
        }
        if let Some(ch) = jittered.cholesky() {
            return Ok(CovarianceFactor {
                lower: ch.l(),
                jitter: delta,
            });
        }
        rel *= 10.0;
    }
    Err(Error::Numeric(
        "covariance is not positive semidefinite within 1e-8 relative jitter".into(),
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundMotionFieldSet {
    pub site_ids: Vec<String>,
    pub n_maps: usize,
    /// Row-major `[n_maps × n_sites]` intensity measures in g.
    pub values: Vec<f64>,
    pub seed: u64,
    pub jitter: f64,
    pub scenario: String,
}

impl GroundMotionFieldSet {
    pub fn n_sites(&self) -> usize {
        self.site_ids.len()
    }

    pub fn im(&self, map: usize, site: usize) -> f64 {
        self.values[map * self.n_sites() + site]
    }

    pub fn map(&self, map: usize) -> &[f64] {
        let n = self.n_sites();
        &self.values[map * n..(map + 1) * n]
    }

    /// `map_id,asset_id,im` rows.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let err = |e: csv::Error| Error::invalid(format!("writing fields: {e}"));
        w.write_record(["map_id", "asset_id", "im"]).map_err(err)?;
        for m in 0..self.n_maps {
            for (s, id) in self.site_ids.iter().enumerate() {
                w.write_record([m.to_string(), id.clone(), self.im(m, s).to_string()])
                    .map_err(err)?;
            }
        }
        w.flush().map_err(|e| Error::invalid(format!("writing fields: {e}")))
    }
}

/// Draw `n_maps` correlated maps `exp(μ + L z)`. Map `m` uses its own
/// substream, so the output does not depend on the worker count.
pub fn sample_fields(input: &ScenarioHazardInput, n_maps: usize, seed: u64) -> Result<GroundMotionFieldSet> {
    if n_maps == 0 {
        return Err(Error::invalid("need at least one ground-motion map"));
    }
    let sigma = build_covariance(input)?;
    let factor = factorize(&sigma)?;
    let n = input.sites.len();
    let mu = DVector::from_column_slice(&input.median_ln_im);
    let maps: Vec<Vec<f64>> = (0..n_maps)
        .into_par_iter()
        .map(|m| {
            let mut rng = substream(seed, Purpose::GroundMotion, StreamKey::map(m));
            let z = DVector::from_iterator(n, (0..n).map(|_| StandardNormal.sample(&mut rng)));
            let ln_im = &mu + &factor.lower * z;
            ln_im.iter().map(|v| v.exp()).collect()
        })
        .collect();
    Ok(GroundMotionFieldSet {
        site_ids: input.sites.iter().map(|s| s.asset_id.clone()).collect(),
        n_maps,
        values: maps.concat(),
        seed,
        jitter: factor.jitter,
        scenario: String::new(),
    })
}

/// Single map at the per-site median `exp(μ)`.
pub fn median_field(input: &ScenarioHazardInput) -> GroundMotionFieldSet {
    GroundMotionFieldSet {
        site_ids: input.sites.iter().map(|s| s.asset_id.clone()).collect(),
        n_maps: 1,
        values: input.median_ln_im.iter().map(|m| m.exp()).collect(),
        seed: 0,
        jitter: 0.0,
        scenario: String::new(),
    }
}
