//! `<name>.hdr` + `<name>.bin` raster container.
//!
//! The header holds `key=value` lines (`format_version`, `width`, `height`,
//! `pixel_size_m`, `dtype`, `nodata`); the payload is row-major, either
//! little-endian f32 or one byte per pixel.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use lczfuse_core::Raster;

use crate::error::{CliError, Result};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dtype {
    F32,
    U8,
}

impl Dtype {
    fn as_str(self) -> &'static str {
        match self {
            Dtype::F32 => "f32",
            Dtype::U8 => "u8",
        }
    }

    fn bytes(self) -> usize {
        match self {
            Dtype::F32 => 4,
            Dtype::U8 => 1,
        }
    }
}

/// Paths of the header and payload for `path`, with or without extension.
pub fn raster_paths(path: &Path) -> (PathBuf, PathBuf) {
    let stem = match path.extension().and_then(|e| e.to_str()) {
        Some("hdr") | Some("bin") => path.with_extension(""),
        _ => path.to_path_buf(),
    };
    (add_ext(&stem, "hdr"), add_ext(&stem, "bin"))
}

fn add_ext(stem: &Path, ext: &str) -> PathBuf {
    let mut s = stem.as_os_str().to_owned();
    s.push(".");
    s.push(ext);
    PathBuf::from(s)
}

pub fn raster_exists(path: &Path) -> bool {
    let (h, b) = raster_paths(path);
    h.is_file() && b.is_file()
}

#[derive(Debug)]
struct Header {
    width: usize,
    height: usize,
    pixel_size: f64,
    dtype: Dtype,
    nodata: f32,
}

fn parse_header(text: &str, path: &Path) -> Result<Header> {
    let malformed = |msg: String| CliError::data(path, format!("malformed header: {msg}"));
    let mut kv = BTreeMap::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| malformed(format!("line {} is not key=value", n + 1)))?;
        kv.insert(k.trim().to_string(), v.trim().to_string());
    }
    let get = |k: &str| kv.get(k).map(String::as_str).ok_or_else(|| malformed(format!("missing key {k}")));
    let version: u32 = get("format_version")?.parse().map_err(|_| malformed("bad format_version".into()))?;
    if version != FORMAT_VERSION {
        return Err(CliError::data(path, format!("unsupported version {version}")));
    }
    let width: usize = get("width")?.parse().map_err(|_| malformed("bad width".into()))?;
    let height: usize = get("height")?.parse().map_err(|_| malformed("bad height".into()))?;
    let pixel_size: f64 = get("pixel_size_m")?.parse().map_err(|_| malformed("bad pixel_size_m".into()))?;
    let dtype = match get("dtype")? {
        "f32" => Dtype::F32,
        "u8" => Dtype::U8,
        other => return Err(malformed(format!("unknown dtype {other}"))),
    };
    let nodata: f32 = get("nodata")?.parse().map_err(|_| malformed("bad nodata".into()))?;
    if width == 0 || height == 0 {
        return Err(CliError::data(path, "empty raster"));
    }
    if !(pixel_size.is_finite() && pixel_size > 0.0) {
        return Err(malformed("pixel_size_m must be positive".into()));
    }
    if dtype == Dtype::U8 && !(nodata.is_finite() && nodata.fract() == 0.0 && (0.0..=255.0).contains(&nodata)) {
        return Err(malformed("u8 nodata must be an integer in 0..=255".into()));
    }
    Ok(Header { width, height, pixel_size, dtype, nodata })
}

pub fn read_raster(path: &Path) -> Result<Raster> {
    let (hdr, bin) = raster_paths(path);
    let text = fs::read_to_string(&hdr).map_err(|e| CliError::io(&hdr, e))?;
    let h = parse_header(&text, &hdr)?;
    let payload = fs::read(&bin).map_err(|e| CliError::io(&bin, e))?;
    let expected = h.width * h.height * h.dtype.bytes();
    if payload.len() < expected {
        return Err(CliError::data(&bin, format!("truncated payload: {} bytes, expected {expected}", payload.len())));
    }
    if payload.len() > expected {
        return Err(CliError::data(&bin, format!("payload has {} bytes, expected {expected}", payload.len())));
    }
    let values: Vec<f32> = match h.dtype {
        Dtype::F32 => payload.chunks_exact(4).map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]])).collect(),
        Dtype::U8 => payload.iter().map(|&b| b as f32).collect(),
    };
    Raster::new(h.width, h.height, h.pixel_size, values, h.nodata).map_err(|e| CliError::data(&hdr, e.to_string()))
}

/// Write `raster` as `<path>.hdr`/`<path>.bin`. For `u8`, values are rounded
/// and must fit a byte; nodata pixels take the raster's nodata value, which
/// must itself be a byte.
pub fn write_raster(path: &Path, raster: &Raster, dtype: Dtype) -> Result<()> {
    let (hdr, bin) = raster_paths(path);
    if let Some(dir) = hdr.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        }
    }
    let payload: Vec<u8> = match dtype {
        Dtype::F32 => raster.values().iter().flat_map(|v| v.to_le_bytes()).collect(),
        Dtype::U8 => {
            let nd = raster.nodata();
            if !(nd.is_finite() && nd.fract() == 0.0 && (0.0..=255.0).contains(&nd)) {
                return Err(CliError::data(&hdr, "u8 rasters need an integer nodata in 0..=255"));
            }
            let mut out = Vec::with_capacity(raster.values().len());
            for &v in raster.values() {
                let b = if raster.is_nodata(v) { nd } else { v.round() };
                if !(0.0..=255.0).contains(&b) {
                    return Err(CliError::data(&hdr, format!("value {v} does not fit in u8")));
                }
                out.push(b as u8);
            }
            out
        }
    };
    let nodata = if dtype == Dtype::U8 { format!("{}", raster.nodata() as u8) } else { format!("{}", raster.nodata()) };
    let header = format!(
        "format_version={FORMAT_VERSION}\nwidth={}\nheight={}\npixel_size_m={}\ndtype={}\nnodata={nodata}\n",
        raster.width(),
        raster.height(),
        raster.pixel_size(),
        dtype.as_str(),
    );
    fs::write(&hdr, header).map_err(|e| CliError::io(&hdr, e))?;
    fs::write(&bin, payload).map_err(|e| CliError::io(&bin, e))?;
    Ok(())
}
