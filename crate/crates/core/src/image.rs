//! 8-bit raster images and PNG export.

use std::fs;
use std::io::Cursor;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How the axes of a recording were fused into a plot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RpVariant {
    /// One plot of the per-timestep vector norm.
    Gray,
    /// Per-axis plots tiled left to right (x, y, z).
    GrayConcat,
    /// Per-axis plots as the R, G, B channels.
    Rgb,
}

impl RpVariant {
    pub fn name(self) -> &'static str {
        match self {
            RpVariant::Gray => "gray",
            RpVariant::GrayConcat => "gray_concat",
            RpVariant::Rgb => "rgb",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "gray" | "grey" => Some(RpVariant::Gray),
            "gray_concat" | "grey_concat" => Some(RpVariant::GrayConcat),
            "rgb" => Some(RpVariant::Rgb),
            _ => None,
        }
    }
}

/// A rendered plot. Pixels are stored channel-planar, each plane row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RpImage {
    channels: usize,
    width: usize,
    height: usize,
    pixels: Vec<u8>,
    variant: RpVariant,
}

impl RpImage {
    pub fn from_planes(
        width: usize,
        height: usize,
        planes: Vec<Vec<u8>>,
        variant: RpVariant,
    ) -> Result<Self> {
        let channels = planes.len();
        let expected_channels = if variant == RpVariant::Rgb { 3 } else { 1 };
        if channels != expected_channels {
            return Err(Error::Dimension {
                expected: expected_channels,
                actual: channels,
            });
        }
        if width == 0 || height == 0 {
            return Err(Error::Empty("image has no pixels".into()));
        }
        let square_ok = match variant {
            RpVariant::Gray | RpVariant::Rgb => width == height,
            RpVariant::GrayConcat => width == 3 * height,
        };
        if !square_ok {
            return Err(Error::InvalidParameter(format!(
                "{width}x{height} is not a valid {} layout",
                variant.name()
            )));
        }
        let mut pixels = Vec::with_capacity(width * height * channels);
        for plane in planes {
            if plane.len() != width * height {
                return Err(Error::Dimension {
                    expected: width * height,
                    actual: plane.len(),
                });
            }
            pixels.extend(plane);
        }
        Ok(Self {
            channels,
            width,
            height,
            pixels,
            variant,
        })
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn variant(&self) -> RpVariant {
        self.variant
    }

    pub fn plane(&self, channel: usize) -> &[u8] {
        let n = self.width * self.height;
        &self.pixels[channel * n..(channel + 1) * n]
    }

    #[inline]
    pub fn get(&self, channel: usize, x: usize, y: usize) -> u8 {
        self.pixels[channel * self.width * self.height + y * self.width + x]
    }

    /// Interleaved samples as PNG expects them.
    pub fn interleaved(&self) -> Vec<u8> {
        if self.channels == 1 {
            return self.pixels.clone();
        }
        let n = self.width * self.height;
        let mut out = Vec::with_capacity(n * self.channels);
        for i in 0..n {
            for c in 0..self.channels {
                out.push(self.pixels[c * n + i]);
            }
        }
        out
    }

    pub fn to_png(&self) -> Result<Vec<u8>> {
        let color = if self.channels == 1 {
            PngColor::Gray
        } else {
            PngColor::Rgb
        };
        encode_png(self.width, self.height, color, &self.interleaved())
    }

    pub fn write_png(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let bytes = self.to_png()?;
        fs::write(path, bytes).map_err(|e| Error::io(path, e))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PngColor {
    Gray,
    Rgb,
}

/// Encodes an 8-bit image whose samples are interleaved row-major.
pub fn encode_png(width: usize, height: usize, color: PngColor, data: &[u8]) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    {
        let mut enc = png::Encoder::new(&mut out, width as u32, height as u32);
        enc.set_color(match color {
            PngColor::Gray => png::ColorType::Grayscale,
            PngColor::Rgb => png::ColorType::Rgb,
        });
        enc.set_depth(png::BitDepth::Eight);
        let mut writer = enc
            .write_header()
            .map_err(|e| Error::format("png", e.to_string()))?;
        writer
            .write_image_data(data)
            .map_err(|e| Error::format("png", e.to_string()))?;
    }
    Ok(out)
}

/// Decodes an 8-bit gray or RGB PNG into `(width, height, color, interleaved samples)`.
pub fn decode_png(bytes: &[u8]) -> Result<(usize, usize, PngColor, Vec<u8>)> {
    let decoder = png::Decoder::new(Cursor::new(bytes));
    let mut reader = decoder
        .read_info()
        .map_err(|e| Error::format("png", e.to_string()))?;
    let mut buf = vec![0; reader.output_buffer_size().unwrap_or(0)];
    let info = reader
        .next_frame(&mut buf)
        .map_err(|e| Error::format("png", e.to_string()))?;
    if info.bit_depth != png::BitDepth::Eight {
        return Err(Error::format("png", "only 8-bit images are supported"));
    }
    let color = match info.color_type {
        png::ColorType::Grayscale => PngColor::Gray,
        png::ColorType::Rgb => PngColor::Rgb,
        other => return Err(Error::format("png", format!("unsupported color type {other:?}"))),
    };
    buf.truncate(info.buffer_size());
    Ok((info.width as usize, info.height as usize, color, buf))
}
