use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::Raster;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BandRole {
    Blue,
    Green,
    Red,
    Nir,
    Swir,
}

impl BandRole {
    pub const ALL: [BandRole; 5] = [BandRole::Blue, BandRole::Green, BandRole::Red, BandRole::Nir, BandRole::Swir];

    pub fn as_str(self) -> &'static str {
        match self {
            BandRole::Blue => "blue",
            BandRole::Green => "green",
            BandRole::Red => "red",
            BandRole::Nir => "nir",
            BandRole::Swir => "swir",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|r| r.as_str().eq_ignore_ascii_case(s))
    }
}

impl fmt::Display for BandRole {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Co-registered 10 m bands of one acquisition.
#[derive(Debug, Clone)]
pub struct BandStack {
    pub acquisition_id: String,
    bands: Vec<(String, Raster)>,
    roles: BTreeMap<BandRole, String>,
}

impl BandStack {
    pub fn new(
        acquisition_id: impl Into<String>,
        bands: Vec<(String, Raster)>,
        roles: BTreeMap<BandRole, String>,
    ) -> Result<Self> {
        let first = bands.first().ok_or_else(|| Error::InvalidParameter("band stack without bands".into()))?;
        for (name, band) in &bands {
            first.1.ensure_same_dims(band)?;
            if band.pixel_size() != first.1.pixel_size() {
                return Err(Error::InvalidParameter(alloc::format!("band {name} has a different pixel size")));
            }
        }
        for role in [BandRole::Green, BandRole::Red, BandRole::Nir] {
            if !roles.contains_key(&role) {
                return Err(Error::MissingBandRole(role.to_string()));
            }
        }
        for (role, name) in &roles {
            if !bands.iter().any(|(n, _)| n == name) {
                return Err(Error::MissingBandRole(alloc::format!("{role} -> {name}")));
            }
        }
        Ok(BandStack { acquisition_id: acquisition_id.into(), bands, roles })
    }

    pub fn bands(&self) -> &[(String, Raster)] {
        &self.bands
    }

    pub fn bands_mut(&mut self) -> &mut [(String, Raster)] {
        &mut self.bands
    }

    pub fn roles(&self) -> &BTreeMap<BandRole, String> {
        &self.roles
    }

    pub fn first(&self) -> &Raster {
        &self.bands[0].1
    }

    pub fn band(&self, name: &str) -> Option<&Raster> {
        self.bands.iter().find(|(n, _)| n == name).map(|(_, r)| r)
    }

    pub fn role(&self, role: BandRole) -> Result<&Raster> {
        self.roles
            .get(&role)
            .and_then(|name| self.band(name))
            .ok_or_else(|| Error::MissingBandRole(role.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpectralIndex {
    Ndvi,
    Ndwi,
    Bsi,
}

impl SpectralIndex {
    pub const ALL: [SpectralIndex; 3] = [SpectralIndex::Ndvi, SpectralIndex::Ndwi, SpectralIndex::Bsi];

    pub fn name(self) -> &'static str {
        match self {
            SpectralIndex::Ndvi => "ndvi",
            SpectralIndex::Ndwi => "ndwi",
            SpectralIndex::Bsi => "bsi",
        }
    }
}

fn normalized_difference(a: f64, b: f64) -> f32 {
    let den = a + b;
    if den == 0.0 || !den.is_finite() {
        return f32::NAN;
    }
    ((a - b) / den).clamp(-1.0, 1.0) as f32
}

/// NDVI, NDWI or BSI per pixel. Zero denominators and nodata inputs give NaN.
pub fn spectral_index(stack: &BandStack, index: SpectralIndex) -> Result<Raster> {
    let get = |role| stack.role(role);
    let (inputs, f): (Vec<&Raster>, fn(&[f64]) -> f32) = match index {
        SpectralIndex::Ndvi => (alloc::vec![get(BandRole::Nir)?, get(BandRole::Red)?], |v| normalized_difference(v[0], v[1])),
        SpectralIndex::Ndwi => {
            (alloc::vec![get(BandRole::Green)?, get(BandRole::Nir)?], |v| normalized_difference(v[0], v[1]))
        }
        SpectralIndex::Bsi => (
            alloc::vec![get(BandRole::Swir)?, get(BandRole::Red)?, get(BandRole::Nir)?, get(BandRole::Blue)?],
            |v| normalized_difference(v[0] + v[1], v[2] + v[3]),
        ),
    };
    let first = inputs[0];
    let mut values = Vec::with_capacity(first.values().len());
    let mut px = [0.0f64; 4];
    for i in 0..first.values().len() {
        let mut ok = true;
        for (slot, r) in px.iter_mut().zip(&inputs) {
            let v = r.values()[i];
            if r.is_nodata(v) {
                ok = false;
                break;
            }
            *slot = v as f64;
        }
        values.push(if ok { f(&px[..inputs.len()]) } else { f32::NAN });
    }
    first.with_values(values, f32::NAN)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stack(blue: f32, green: f32, red: f32, nir: f32, swir: f32) -> BandStack {
        let mk = |v| Raster::filled(2, 2, 10.0, v, f32::NAN).unwrap();
        let names = ["b", "g", "r", "n", "s"];
        let bands = names.iter().zip([blue, green, red, nir, swir]).map(|(n, v)| (n.to_string(), mk(v))).collect();
        let roles = BandRole::ALL.iter().zip(names).map(|(r, n)| (*r, n.to_string())).collect();
        BandStack::new("t", bands, roles).unwrap()
    }

    #[test]
    fn formulas() {
        let s = stack(0.2, 0.3, 0.2, 0.6, 0.4);
        assert!((spectral_index(&s, SpectralIndex::Ndvi).unwrap().get(0, 0) - 0.5).abs() < 1e-7);
        let s = stack(0.2, 0.5, 0.3, 0.5, 0.4);
        assert_eq!(spectral_index(&s, SpectralIndex::Ndwi).unwrap().get(0, 0), 0.0);
        assert!(spectral_index(&s, SpectralIndex::Bsi).unwrap().get(1, 1).abs() < 1e-7);
    }

    #[test]
    fn zero_denominator_is_nodata() {
        let s = stack(0.0, 0.0, 0.0, 0.0, 0.0);
        assert!(spectral_index(&s, SpectralIndex::Ndvi).unwrap().get(0, 0).is_nan());
    }

    #[test]
    fn missing_role() {
        let mk = || Raster::filled(2, 2, 10.0, 1.0, f32::NAN).unwrap();
        let bands = alloc::vec![("g".to_string(), mk()), ("r".to_string(), mk()), ("n".to_string(), mk())];
        let roles = [(BandRole::Green, "g"), (BandRole::Red, "r"), (BandRole::Nir, "n")]
            .into_iter()
            .map(|(r, n)| (r, n.to_string()))
            .collect();
        let s = BandStack::new("t", bands, roles).unwrap();
        assert_eq!(spectral_index(&s, SpectralIndex::Bsi).unwrap_err(), Error::MissingBandRole("swir".into()));
        assert!(spectral_index(&s, SpectralIndex::Ndvi).is_ok());
    }
}
