//! The 17 local climate zone labels.

use core::fmt;

#[allow(unused_imports)] // inherent float methods shadow it under std
use num_traits::Float;

pub const NUM_LABELS: usize = 17;

/// Nodata value of label rasters.
pub const LABEL_NODATA: u8 = 255;

/// An LCZ label in `1..=17`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Label(u8);

impl Label {
    pub fn new(value: u8) -> Option<Self> {
        (1..=NUM_LABELS as u8).contains(&value).then_some(Label(value))
    }

    /// Label from a raster value, `None` for nodata or anything out of range.
    pub fn from_value(value: f32) -> Option<Self> {
        if !value.is_finite() || value.fract() != 0.0 {
            return None;
        }
        if (1.0..=NUM_LABELS as f32).contains(&value) {
            Some(Label(value as u8))
        } else {
            None
        }
    }

    pub fn from_index(index: usize) -> Self {
        assert!(index < NUM_LABELS, "label index {index} out of range");
        Label(index as u8 + 1)
    }

    pub fn get(self) -> u8 {
        self.0
    }

    /// Zero-based index used by vote vectors and matrices.
    pub fn index(self) -> usize {
        self.0 as usize - 1
    }

    pub fn name(self) -> &'static str {
        NAMES[self.index()]
    }

    /// Building surface fraction band in percent from the LCZ definitions.
    pub fn surface_fraction_band(self) -> (f64, f64) {
        SURFACE_FRACTION[self.index()]
    }

    pub fn is_built(self) -> bool {
        self.0 <= 10
    }

    pub fn all() -> impl Iterator<Item = Label> {
        (1..=NUM_LABELS as u8).map(Label)
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

const NAMES: [&str; NUM_LABELS] = [
    "compact high-rise",
    "compact mid-rise",
    "compact low-rise",
    "open high-rise",
    "open mid-rise",
    "open low-rise",
    "lightweight low-rise",
    "large low-rise",
    "sparsely built",
    "heavy industry",
    "dense trees",
    "scattered trees",
    "bush, scrub",
    "low plants",
    "bare rock or paved",
    "bare soil or sand",
    "water",
];

const SURFACE_FRACTION: [(f64, f64); NUM_LABELS] = [
    (40.0, 60.0),
    (40.0, 70.0),
    (40.0, 70.0),
    (20.0, 40.0),
    (20.0, 40.0),
    (20.0, 40.0),
    (60.0, 90.0),
    (30.0, 50.0),
    (10.0, 20.0),
    (20.0, 30.0),
    (0.0, 10.0),
    (0.0, 10.0),
    (0.0, 10.0),
    (0.0, 10.0),
    (0.0, 10.0),
    (0.0, 10.0),
    (0.0, 10.0),
];

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn label_range() {
        assert!(Label::new(0).is_none());
        assert!(Label::new(18).is_none());
        assert_eq!(Label::new(17).unwrap().index(), 16);
        assert_eq!(Label::from_value(255.0), None);
        assert_eq!(Label::from_value(3.0), Label::new(3));
        assert_eq!(Label::from_value(f32::NAN), None);
    }

    #[test]
    fn sparsely_built_is_lowest_built_band() {
        let lowest = Label::all()
            .filter(|l| l.is_built())
            .map(|l| l.surface_fraction_band().0)
            .fold(f64::INFINITY, f64::min);
        assert_eq!(lowest, 10.0);
        assert_eq!(Label::new(9).unwrap().surface_fraction_band(), (10.0, 20.0));
    }
}
