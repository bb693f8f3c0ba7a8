//! Grayscale morphology with discrete disk structuring elements.
//!
//! Pixels outside the raster and nodata pixels are ignored by every
//! operator, which keeps opening anti-extensive and closing extensive up to
//! the image border.

use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)] // inherent float methods shadow it under std
use num_traits::Float;

use crate::error::{Error, Result};
use crate::raster::Raster;

/// Disk of integer radius: offsets `(dy, dx)` with `dy² + dx² ≤ r²`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Disk {
    radius: usize,
}

impl Disk {
    pub fn new(radius: usize) -> Result<Self> {
        if radius < 1 {
            return Err(Error::InvalidParameter("structuring element radius must be >= 1".into()));
        }
        Ok(Disk { radius })
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    /// Horizontal half-width of the disk at vertical offset `dy`.
    pub fn half_width(&self, dy: isize) -> usize {
        let r2 = (self.radius * self.radius) as f64;
        let rest = r2 - (dy * dy) as f64;
        if rest < 0.0 {
            0
        } else {
            rest.sqrt().floor() as usize
        }
    }
}

#[derive(Clone, Copy)]
enum Op {
    Min,
    Max,
}

impl Op {
    fn better(self, a: f32, b: f32) -> bool {
        match self {
            Op::Min => a <= b,
            Op::Max => a >= b,
        }
    }

    fn identity(self) -> f32 {
        match self {
            Op::Min => f32::INFINITY,
            Op::Max => f32::NEG_INFINITY,
        }
    }
}

/// Sliding min/max over horizontal windows `[c - w, c + w]` for every row.
fn horizontal(values: &[f32], width: usize, w: usize, op: Op) -> Vec<f32> {
    let mut out = vec![op.identity(); values.len()];
    let mut deque: VecDeque<usize> = VecDeque::new();
    for (row_out, row) in out.chunks_mut(width).zip(values.chunks(width)) {
        deque.clear();
        // `next` is the next column to push; window for column c is [c-w, c+w].
        let mut next = 0usize;
        for c in 0..width {
            let hi = (c + w).min(width - 1);
            while next <= hi {
                let v = row[next];
                while let Some(&back) = deque.back() {
                    if op.better(v, row[back]) {
                        deque.pop_back();
                    } else {
                        break;
                    }
                }
                deque.push_back(next);
                next += 1;
            }
            while let Some(&front) = deque.front() {
                if front + w < c {
                    deque.pop_front();
                } else {
                    break;
                }
            }
            row_out[c] = row[*deque.front().expect("window is never empty")];
        }
    }
    out
}

fn apply(raster: &Raster, disk: Disk, op: Op) -> Raster {
    let (h, w) = raster.dims();
    let ident = op.identity();
    let src: Vec<f32> = raster.values().iter().map(|&v| if raster.is_nodata(v) { ident } else { v }).collect();
    let r = disk.radius() as isize;
    let mut lines: Vec<Option<Vec<f32>>> = vec![None; disk.radius() + 1];
    for dy in -r..=r {
        let hw = disk.half_width(dy);
        if lines[hw].is_none() {
            lines[hw] = Some(horizontal(&src, w, hw, op));
        }
    }
    let mut out = vec![ident; h * w];
    for row in 0..h {
        for dy in -r..=r {
            let sr = row as isize + dy;
            if sr < 0 || sr >= h as isize {
                continue;
            }
            let line = lines[disk.half_width(dy)].as_ref().expect("computed above");
            let src_row = &line[sr as usize * w..(sr as usize + 1) * w];
            let dst = &mut out[row * w..(row + 1) * w];
            for (d, &s) in dst.iter_mut().zip(src_row) {
                if op.better(s, *d) {
                    *d = s;
                }
            }
        }
    }
    for (o, &v) in out.iter_mut().zip(raster.values()) {
        if raster.is_nodata(v) || o.is_infinite() {
            *o = f32::NAN;
        }
    }
    raster.clone_header(out, f32::NAN)
}

pub fn erode(raster: &Raster, disk: Disk) -> Raster {
    apply(raster, disk, Op::Min)
}

pub fn dilate(raster: &Raster, disk: Disk) -> Raster {
    apply(raster, disk, Op::Max)
}

/// Erosion followed by dilation.
pub fn opening(raster: &Raster, disk: Disk) -> Raster {
    dilate(&erode(raster, disk), disk)
}

/// Dilation followed by erosion.
pub fn closing(raster: &Raster, disk: Disk) -> Raster {
    erode(&dilate(raster, disk), disk)
}

/// Opening and closing for each radius, in the order
/// `[open(r0), close(r0), open(r1), close(r1), ...]`.
pub fn morphological_profile(ndvi: &Raster, radii: &[usize]) -> Result<Vec<Raster>> {
    let mut out = Vec::with_capacity(radii.len() * 2);
    for &r in radii {
        let disk = Disk::new(r)?;
        out.push(opening(ndvi, disk));
        out.push(closing(ndvi, disk));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Direct min/max over disk offsets.
    fn brute(r: &Raster, radius: usize, min: bool) -> Raster {
        let (h, w) = r.dims();
        let rad = radius as isize;
        let mut out = vec![0.0f32; h * w];
        for row in 0..h as isize {
            for col in 0..w as isize {
                let mut acc = if min { f32::INFINITY } else { f32::NEG_INFINITY };
                for dy in -rad..=rad {
                    for dx in -rad..=rad {
                        if dy * dy + dx * dx > rad * rad {
                            continue;
                        }
                        let (y, x) = (row + dy, col + dx);
                        if y < 0 || x < 0 || y >= h as isize || x >= w as isize {
                            continue;
                        }
                        let v = r.get(y as usize, x as usize);
                        acc = if min { acc.min(v) } else { acc.max(v) };
                    }
                }
                out[row as usize * w + col as usize] = acc;
            }
        }
        r.with_values(out, f32::NAN).unwrap()
    }

    fn spike(value: f32, background: f32) -> Raster {
        let mut r = Raster::filled(15, 15, 10.0, background, f32::NAN).unwrap();
        r.set(7, 7, value);
        r
    }

    #[test]
    fn opening_erases_bright_spike() {
        let r = spike(1.0, 0.0);
        let open = opening(&r, Disk::new(4).unwrap());
        let oracle = brute(&brute(&r, 4, true), 4, false);
        assert_eq!(open, oracle);
        assert_eq!(open.get(7, 7), 0.0);
    }

    #[test]
    fn closing_fills_dark_spike() {
        let r = spike(0.0, 1.0);
        let close = closing(&r, Disk::new(4).unwrap());
        let oracle = brute(&brute(&r, 4, false), 4, true);
        assert_eq!(close, oracle);
        assert_eq!(close.get(7, 7), 1.0);
    }

    #[test]
    fn flat_invariance_and_profile_len() {
        let r = Raster::filled(12, 9, 10.0, 0.3, f32::NAN).unwrap();
        let mp = morphological_profile(&r, &[4, 7, 10]).unwrap();
        assert_eq!(mp.len(), 6);
        for m in mp {
            assert_eq!(m, r);
        }
        assert!(morphological_profile(&r, &[0]).is_err());
    }

    #[test]
    fn disk_shape() {
        let d = Disk::new(4).unwrap();
        assert_eq!(d.half_width(0), 4);
        assert_eq!(d.half_width(3), 2);
        assert_eq!(d.half_width(4), 0);
    }

    proptest! {
        #[test]
        fn matches_brute_force_and_orders(
            vals in prop::collection::vec(-1.0f32..1.0, 11 * 13),
            radius in 1usize..6,
        ) {
            let r = Raster::new(13, 11, 10.0, vals, f32::NAN).unwrap();
            let disk = Disk::new(radius).unwrap();
            prop_assert_eq!(erode(&r, disk), brute(&r, radius, true));
            prop_assert_eq!(dilate(&r, disk), brute(&r, radius, false));
            let open = opening(&r, disk);
            let close = closing(&r, disk);
            for i in 0..r.values().len() {
                let v = r.values()[i];
                prop_assert!(open.values()[i] <= v && v <= close.values()[i]);
            }
            // digital disks are not nested-open, so only idempotence is checked across applications
            prop_assert_eq!(opening(&open, disk), open);
            prop_assert_eq!(closing(&close, disk), close);
        }
    }
}
