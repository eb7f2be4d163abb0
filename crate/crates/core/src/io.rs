//! Frame-sequence and sidecar file I/O.
//!
//! Sequences are directories of numerically ordered files (`frame_00000.png`,
//! `frame_00001.png`, ...). RGB frames are stored sRGB-encoded and converted to
//! linear light on load. Disparity is stored either as float PFM (any positive
//! scale) or as 16/8-bit gray PNG normalized to (0, 1].

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufReader, BufWriter, Cursor, Read, Write};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::model::{DisparityMap, Frame, RgbaImage, VideoClip, DEFAULT_FRAME_RATE};
use crate::optics::{MpiMask, VdMap};

pub const SIDECAR_NAME: &str = "clip.meta";

/// Sample depth used when writing PNG frames.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BitDepth {
    #[default]
    Eight,
    Sixteen,
}

impl BitDepth {
    fn max_code(self) -> f32 {
        match self {
            BitDepth::Eight => 255.0,
            BitDepth::Sixteen => 65535.0,
        }
    }
}

/// On-disk encoding of disparity sequences.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DisparityFormat {
    /// Little-endian single-channel PFM; lossless for any positive scale.
    #[default]
    Pfm,
    /// 16-bit gray PNG, `value = round(d * 65535)`; only meaningful for d in (0, 1].
    Png16,
}

#[inline]
pub fn srgb_to_linear(v: f32) -> f32 {
    if v <= 0.04045 {
        v / 12.92
    } else {
        ((v + 0.055) / 1.055).powf(2.4)
    }
}

#[inline]
pub fn linear_to_srgb(v: f32) -> f32 {
    let v = v.clamp(0.0, 1.0);
    if v <= 0.003_130_8 {
        v * 12.92
    } else {
        1.055 * v.powf(1.0 / 2.4) - 0.055
    }
}

/// Quantizes a linear value to an sRGB code of the given depth.
#[inline]
pub fn encode_srgb_code(v: f32, depth: BitDepth) -> u16 {
    (linear_to_srgb(v) * depth.max_code()).round() as u16
}

/// Raw decoded PNG samples, expanded to 8 or 16 bits.
#[derive(Debug, Clone)]
pub struct DecodedPng {
    pub width: usize,
    pub height: usize,
    pub channels: usize,
    pub sixteen_bit: bool,
    pub samples: Vec<u16>,
}

impl DecodedPng {
    fn max_code(&self) -> f32 {
        if self.sixteen_bit {
            65535.0
        } else {
            255.0
        }
    }
}

pub fn decode_png(bytes: &[u8], path: &Path) -> Result<DecodedPng> {
    decode_png_reader(Cursor::new(bytes), path)
}

pub fn read_png(path: &Path) -> Result<DecodedPng> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    decode_png_reader(BufReader::new(file), path)
}

fn decode_png_reader<R: std::io::BufRead + std::io::Seek>(
    reader: R,
    path: &Path,
) -> Result<DecodedPng> {
    let decode_err = |e: png::DecodingError| Error::Decode {
        path: path.to_path_buf(),
        message: e.to_string(),
    };
    let mut decoder = png::Decoder::new(reader);
    decoder.set_transformations(png::Transformations::EXPAND);
    let mut reader = decoder.read_info().map_err(decode_err)?;
    let size = reader.output_buffer_size().ok_or_else(|| Error::Decode {
        path: path.to_path_buf(),
        message: "image too large".into(),
    })?;
    let mut buf = vec![0u8; size];
    let info = reader.next_frame(&mut buf).map_err(decode_err)?;
    buf.truncate(info.buffer_size());
    let channels = info.color_type.samples();
    let sixteen_bit = info.bit_depth == png::BitDepth::Sixteen;
    let samples = if sixteen_bit {
        buf.chunks_exact(2)
            .map(|b| u16::from_be_bytes([b[0], b[1]]))
            .collect()
    } else {
        buf.iter().map(|&b| b as u16).collect()
    };
    Ok(DecodedPng {
        width: info.width as usize,
        height: info.height as usize,
        channels,
        sixteen_bit,
        samples,
    })
}

/// Reads image dimensions from the PNG header without decoding pixels.
pub fn png_dimensions(path: &Path) -> Result<(usize, usize)> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let decoder = png::Decoder::new(BufReader::new(file));
    let reader = decoder.read_info().map_err(|e| Error::Decode {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    let info = reader.info();
    Ok((info.width as usize, info.height as usize))
}

pub fn encode_png(
    width: usize,
    height: usize,
    color: png::ColorType,
    depth: png::BitDepth,
    data: &[u8],
) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    {
        let mut enc = png::Encoder::new(&mut out, width as u32, height as u32);
        enc.set_color(color);
        enc.set_depth(depth);
        enc.set_compression(png::Compression::Fast);
        let mut writer = enc
            .write_header()
            .map_err(|e| Error::Encode(e.to_string()))?;
        writer
            .write_image_data(data)
            .map_err(|e| Error::Encode(e.to_string()))?;
        writer.finish().map_err(|e| Error::Encode(e.to_string()))?;
    }
    Ok(out)
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    w.write_all(bytes).map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}

fn push_code(out: &mut Vec<u8>, code: u16, depth: BitDepth) {
    match depth {
        BitDepth::Eight => out.push(code as u8),
        BitDepth::Sixteen => out.extend_from_slice(&code.to_be_bytes()),
    }
}

fn png_depth(depth: BitDepth) -> png::BitDepth {
    match depth {
        BitDepth::Eight => png::BitDepth::Eight,
        BitDepth::Sixteen => png::BitDepth::Sixteen,
    }
}

/// sRGB-encodes a linear frame as an RGB PNG.
pub fn encode_frame_png(frame: &Frame, depth: BitDepth) -> Result<Vec<u8>> {
    let bytes_per = if depth == BitDepth::Eight { 1 } else { 2 };
    let mut data = Vec::with_capacity(frame.data().len() * bytes_per);
    for &v in frame.data() {
        push_code(&mut data, encode_srgb_code(v, depth), depth);
    }
    encode_png(
        frame.width(),
        frame.height(),
        png::ColorType::Rgb,
        png_depth(depth),
        &data,
    )
}

/// Encodes values in [0, 1] as a 16-bit gray PNG.
pub fn encode_gray16_png(width: usize, height: usize, values: &[f64]) -> Result<Vec<u8>> {
    let mut data = Vec::with_capacity(values.len() * 2);
    for &v in values {
        let code = (v.clamp(0.0, 1.0) * 65535.0).round() as u16;
        data.extend_from_slice(&code.to_be_bytes());
    }
    encode_png(
        width,
        height,
        png::ColorType::Grayscale,
        png::BitDepth::Sixteen,
        &data,
    )
}

/// Encodes a boolean raster as a 1-bit gray PNG (true = white).
pub fn encode_mask_png(width: usize, height: usize, bits: &[bool]) -> Result<Vec<u8>> {
    let stride = width.div_ceil(8);
    let mut data = vec![0u8; stride * height];
    for y in 0..height {
        for x in 0..width {
            if bits[y * width + x] {
                data[y * stride + x / 8] |= 0x80 >> (x % 8);
            }
        }
    }
    encode_png(
        width,
        height,
        png::ColorType::Grayscale,
        png::BitDepth::One,
        &data,
    )
}

pub fn decode_frame_png(bytes: &[u8], path: &Path) -> Result<Frame> {
    frame_from_decoded(decode_png(bytes, path)?, path)
}

pub fn read_frame(path: &Path) -> Result<Frame> {
    frame_from_decoded(read_png(path)?, path)
}

fn frame_from_decoded(png: DecodedPng, _path: &Path) -> Result<Frame> {
    let max = png.max_code();
    let lut: Option<Vec<f32>> = (!png.sixteen_bit)
        .then(|| (0..256).map(|c| srgb_to_linear(c as f32 / 255.0)).collect());
    let decode = |code: u16| match &lut {
        Some(lut) => lut[code as usize],
        None => srgb_to_linear(code as f32 / max),
    };
    let mut data = Vec::with_capacity(png.width * png.height * 3);
    for px in png.samples.chunks_exact(png.channels) {
        match png.channels {
            1 | 2 => {
                let v = decode(px[0]);
                data.extend_from_slice(&[v, v, v]);
            }
            _ => data.extend_from_slice(&[decode(px[0]), decode(px[1]), decode(px[2])]),
        }
    }
    Frame::new(png.width, png.height, data)
}

/// Reads an RGBA PNG (straight alpha, sRGB color) as a premultiplied linear layer.
pub fn read_rgba(path: &Path) -> Result<RgbaImage> {
    let png = read_png(path)?;
    let max = png.max_code();
    let straight: Vec<[f32; 4]> = png
        .samples
        .chunks_exact(png.channels)
        .map(|px| {
            let c = |i: usize| srgb_to_linear(px[i] as f32 / max);
            match png.channels {
                1 => [c(0), c(0), c(0), 1.0],
                2 => [c(0), c(0), c(0), px[1] as f32 / max],
                3 => [c(0), c(1), c(2), 1.0],
                _ => [c(0), c(1), c(2), px[3] as f32 / max],
            }
        })
        .collect();
    RgbaImage::from_straight(png.width, png.height, &straight)
}

/// Writes straight-alpha sRGB RGBA (8-bit).
pub fn write_rgba(image: &RgbaImage, path: &Path) -> Result<()> {
    let mut data = Vec::with_capacity(image.data().len() * 4);
    for &[r, g, b, a] in image.data() {
        let un = |c: f32| if a > 0.0 { c / a } else { 0.0 };
        data.push(encode_srgb_code(un(r), BitDepth::Eight) as u8);
        data.push(encode_srgb_code(un(g), BitDepth::Eight) as u8);
        data.push(encode_srgb_code(un(b), BitDepth::Eight) as u8);
        data.push((a.clamp(0.0, 1.0) * 255.0).round() as u8);
    }
    let bytes = encode_png(
        image.width(),
        image.height(),
        png::ColorType::Rgba,
        png::BitDepth::Eight,
        &data,
    )?;
    write_bytes(path, &bytes)
}

pub fn write_frame(frame: &Frame, path: &Path, depth: BitDepth) -> Result<()> {
    write_bytes(path, &encode_frame_png(frame, depth)?)
}

/// Reads a disparity raster from PFM or gray PNG.
pub fn read_disparity(path: &Path) -> Result<DisparityMap> {
    let ext = extension(path);
    let (width, height, values) = if ext == "pfm" {
        read_pfm(path)?
    } else {
        let png = read_png(path)?;
        if png.channels > 2 {
            return Err(Error::Decode {
                path: path.to_path_buf(),
                message: "disparity PNG must be grayscale".into(),
            });
        }
        let max = png.max_code();
        let values = png
            .samples
            .chunks_exact(png.channels)
            .map(|px| px[0] as f32 / max)
            .collect();
        (png.width, png.height, values)
    };
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Decode {
            path: path.to_path_buf(),
            message: "non-finite disparity".into(),
        });
    }
    if values.iter().any(|&v| v <= 0.0) {
        return Err(Error::NonPositiveDisparity(path.to_path_buf()));
    }
    DisparityMap::new(width, height, values)
}

pub fn write_disparity(map: &DisparityMap, path: &Path, format: DisparityFormat) -> Result<()> {
    match format {
        DisparityFormat::Pfm => write_pfm(map, path),
        DisparityFormat::Png16 => {
            let vals: Vec<f64> = map.values().iter().map(|&v| v as f64).collect();
            let mut data = Vec::with_capacity(vals.len() * 2);
            for v in vals {
                let code = (v.clamp(0.0, 1.0) * 65535.0).round().max(1.0) as u16;
                data.extend_from_slice(&code.to_be_bytes());
            }
            let bytes = encode_png(
                map.width(),
                map.height(),
                png::ColorType::Grayscale,
                png::BitDepth::Sixteen,
                &data,
            )?;
            write_bytes(path, &bytes)
        }
    }
}

fn write_pfm(map: &DisparityMap, path: &Path) -> Result<()> {
    let (w, h) = map.dims();
    let mut out = format!("Pf\n{w} {h}\n-1.0\n").into_bytes();
    out.reserve(w * h * 4);
    // PFM rows run bottom to top.
    for y in (0..h).rev() {
        for &v in &map.values()[y * w..(y + 1) * w] {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    write_bytes(path, &out)
}

fn read_pfm(path: &Path) -> Result<(usize, usize, Vec<f32>)> {
    let mut bytes = Vec::new();
    fs::File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|e| Error::io(path, e))?;
    let bad = |msg: &str| Error::Decode {
        path: path.to_path_buf(),
        message: msg.to_string(),
    };
    // Header: three whitespace-terminated tokens lines.
    let mut fields = Vec::new();
    let mut pos = 0;
    while fields.len() < 4 {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(bad("truncated PFM header"));
        }
        fields.push(String::from_utf8_lossy(&bytes[start..pos]).into_owned());
    }
    pos += 1; // single whitespace byte after the scale
    let channels = match fields[0].as_str() {
        "Pf" => 1,
        "PF" => 3,
        _ => return Err(bad("not a PFM file")),
    };
    let w: usize = fields[1].parse().map_err(|_| bad("bad PFM width"))?;
    let h: usize = fields[2].parse().map_err(|_| bad("bad PFM height"))?;
    let scale: f32 = fields[3].parse().map_err(|_| bad("bad PFM scale"))?;
    let little = scale < 0.0;
    let need = w * h * channels * 4;
    if bytes.len() < pos + need {
        return Err(bad("truncated PFM data"));
    }
    let mut values = vec![0.0f32; w * h];
    for row in 0..h {
        let y = h - 1 - row;
        for x in 0..w {
            let off = pos + ((row * w + x) * channels) * 4;
            let b = [bytes[off], bytes[off + 1], bytes[off + 2], bytes[off + 3]];
            values[y * w + x] = if little {
                f32::from_le_bytes(b)
            } else {
                f32::from_be_bytes(b)
            };
        }
    }
    Ok((w, h, values))
}

fn extension(path: &Path) -> String {
    path.extension()
        .and_then(|e| e.to_str())
        .map(|e| e.to_ascii_lowercase())
        .unwrap_or_default()
}

fn trailing_number(path: &Path) -> Option<u64> {
    let stem = path.file_stem()?.to_str()?;
    let digits: String = stem
        .chars()
        .rev()
        .take_while(|c| c.is_ascii_digit())
        .collect::<Vec<_>>()
        .into_iter()
        .rev()
        .collect();
    digits.parse().ok()
}

/// Lists the image files of a sequence directory in numeric order.
pub fn list_sequence(dir: &Path) -> Result<Vec<PathBuf>> {
    if !dir.is_dir() {
        return Err(Error::io(
            dir,
            std::io::Error::new(std::io::ErrorKind::NotFound, "sequence directory not found"),
        ));
    }
    let mut files = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        let ext = extension(&path);
        if path.is_file() && (ext == "png" || ext == "pfm") {
            let n = trailing_number(&path).ok_or_else(|| Error::Decode {
                path: path.clone(),
                message: "sequence file name has no frame number".into(),
            })?;
            files.push((n, path));
        }
    }
    if files.is_empty() {
        return Err(Error::Empty("sequence directory contains no frames"));
    }
    let first_ext = extension(&files[0].1);
    if let Some((_, odd)) = files.iter().find(|(_, p)| extension(p) != first_ext) {
        return Err(Error::Decode {
            path: odd.clone(),
            message: "sequence mixes file formats".into(),
        });
    }
    files.sort();
    Ok(files.into_iter().map(|(_, p)| p).collect())
}

/// Loads an RGB sequence, converting sRGB to linear light.
pub fn load_frame_sequence(dir: &Path) -> Result<VideoClip> {
    let files = list_sequence(dir)?;
    let mut frames = Vec::with_capacity(files.len());
    for path in &files {
        let frame = read_frame(path)?;
        check_dims(frames.first().map(Frame::dims), frame.dims(), path)?;
        frames.push(frame);
    }
    let meta = Sidecar::read_optional(&dir.join(SIDECAR_NAME))?;
    let rate = meta.frame_rate().unwrap_or(DEFAULT_FRAME_RATE);
    VideoClip::new(frames, rate)
}

/// Loads a disparity sequence from PFM or gray PNG files.
pub fn load_disparity_sequence(dir: &Path) -> Result<Vec<DisparityMap>> {
    let files = list_sequence(dir)?;
    let mut maps: Vec<DisparityMap> = Vec::with_capacity(files.len());
    for path in &files {
        let map = read_disparity(path)?;
        check_dims(maps.first().map(DisparityMap::dims), map.dims(), path)?;
        maps.push(map);
    }
    Ok(maps)
}

fn check_dims(first: Option<(usize, usize)>, dims: (usize, usize), path: &Path) -> Result<()> {
    match first {
        Some(expected) if expected != dims => Err(Error::DimensionMismatch {
            expected_w: expected.0,
            expected_h: expected.1,
            found_w: dims.0,
            found_h: dims.1,
            context: Some(path.to_path_buf()),
        }),
        _ => Ok(()),
    }
}

pub fn frame_file_name(index: usize, ext: &str) -> String {
    format!("frame_{index:05}.{ext}")
}

/// Writes `frame_%05d.png` files plus a sidecar carrying the frame rate.
pub fn save_frame_sequence(clip: &VideoClip, dir: &Path, depth: BitDepth) -> Result<Vec<PathBuf>> {
    if clip.is_empty() {
        return Err(Error::Empty("cannot save an empty clip"));
    }
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut paths = Vec::with_capacity(clip.len());
    for (i, frame) in clip.frames().iter().enumerate() {
        let path = dir.join(frame_file_name(i, "png"));
        write_frame(frame, &path, depth)?;
        paths.push(path);
    }
    let mut meta = Sidecar::default();
    meta.set("frame_rate", clip.frame_rate());
    meta.write(&dir.join(SIDECAR_NAME))?;
    Ok(paths)
}

pub fn save_disparity_sequence(
    maps: &[DisparityMap],
    dir: &Path,
    format: DisparityFormat,
) -> Result<Vec<PathBuf>> {
    if maps.is_empty() {
        return Err(Error::Empty("cannot save an empty disparity sequence"));
    }
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let ext = match format {
        DisparityFormat::Pfm => "pfm",
        DisparityFormat::Png16 => "png",
    };
    maps.iter()
        .enumerate()
        .map(|(i, m)| {
            let path = dir.join(frame_file_name(i, ext));
            write_disparity(m, &path, format).map(|_| path)
        })
        .collect()
}

/// Writes one 1-bit PNG per mask layer (`mask_layer_01.png` .. `mask_layer_NN.png`).
pub fn save_mask_stack(mask: &MpiMask, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let (w, h) = mask.dims();
    (1..=mask.layer_count())
        .map(|i| {
            let path = dir.join(format!("mask_layer_{i:02}.png"));
            let bytes = encode_mask_png(w, h, &mask.layer(i))?;
            write_bytes(&path, &bytes).map(|_| path)
        })
        .collect()
}

pub fn save_vd_png(vd: &VdMap, path: &Path) -> Result<()> {
    let (w, h) = vd.dims();
    write_bytes(path, &encode_gray16_png(w, h, vd.values())?)
}

/// Plain-text `key=value` metadata file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Sidecar {
    entries: BTreeMap<String, String>,
}

impl Sidecar {
    pub fn parse(text: &str) -> Self {
        let entries = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .filter_map(|l| l.split_once('='))
            .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
            .collect();
        Sidecar { entries }
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(Sidecar::parse(&text))
    }

    /// Missing file reads as empty metadata.
    pub fn read_optional(path: &Path) -> Result<Self> {
        if path.exists() {
            Sidecar::read(path)
        } else {
            Ok(Sidecar::default())
        }
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_bytes(path, self.to_string().as_bytes())
    }

    pub fn set(&mut self, key: &str, value: impl ToString) {
        self.entries.insert(key.to_string(), value.to_string());
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    pub fn get_f64(&self, key: &str) -> Option<f64> {
        self.get(key)?.parse().ok()
    }

    pub fn frame_rate(&self) -> Option<f64> {
        self.get_f64("frame_rate")
    }

    /// Caller-defined scale of stored disparity values; never applied implicitly.
    pub fn disparity_scale(&self) -> Option<f64> {
        self.get_f64("disparity_scale")
    }
}

impl std::fmt::Display for Sidecar {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for (k, v) in &self.entries {
            writeln!(f, "{k}={v}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn srgb_transfer_inverts() {
        for i in 0..=1000 {
            let v = i as f32 / 1000.0;
            assert!((srgb_to_linear(linear_to_srgb(v)) - v).abs() < 1e-5);
        }
    }

    #[test]
    fn trailing_numbers_sort_numerically() {
        assert_eq!(trailing_number(Path::new("frame_00012.png")), Some(12));
        assert_eq!(trailing_number(Path::new("img9.png")), Some(9));
        assert_eq!(trailing_number(Path::new("abc.png")), None);
    }

    #[test]
    fn sidecar_parses_key_values() {
        let s = Sidecar::parse("frame_rate = 30\n# comment\ndisparity_scale=0.5\n");
        assert_eq!(s.frame_rate(), Some(30.0));
        assert_eq!(s.disparity_scale(), Some(0.5));
        assert_eq!(Sidecar::parse(&s.to_string()), s);
    }

    #[test]
    fn gray16_disparity_normalization() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.png");
        let data: Vec<u8> = [65535u16, 1].iter().flat_map(|v| v.to_be_bytes()).collect();
        let bytes = encode_png(2, 1, png::ColorType::Grayscale, png::BitDepth::Sixteen, &data)
            .unwrap();
        fs::write(&path, bytes).unwrap();
        let d = read_disparity(&path).unwrap();
        assert_eq!(d.values()[0], 1.0);
        assert_eq!(d.values()[1], 1.0 / 65535.0);
    }

    #[test]
    fn zero_gray_disparity_is_rejected_with_path() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.png");
        let bytes = encode_png(1, 1, png::ColorType::Grayscale, png::BitDepth::Eight, &[0])
            .unwrap();
        fs::write(&path, bytes).unwrap();
        let err = read_disparity(&path).unwrap_err();
        assert!(err.to_string().contains("d.png"), "{err}");
    }

    #[test]
    fn pfm_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.pfm");
        let map = DisparityMap::from_fn(3, 2, |x, y| 0.1 + x as f32 * 1.7 + y as f32 * 13.0)
            .unwrap();
        write_disparity(&map, &path, DisparityFormat::Pfm).unwrap();
        assert_eq!(read_disparity(&path).unwrap(), map);
    }

    #[test]
    fn mask_png_is_one_bit() {
        let bytes = encode_mask_png(3, 1, &[true, false, true]).unwrap();
        let png = decode_png(&bytes, Path::new("m")).unwrap();
        assert_eq!(png.samples, vec![255, 0, 255]);
    }
}
