//! Grayscale PGM images and their conversion to joint signals.

use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::graph::{grid_graph, ring_graph, Connectivity, Graph};
use crate::joint::JointSignal;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PgmFormat {
    /// `P2`, ASCII samples.
    Ascii,
    /// `P5`, one byte per sample.
    Binary,
}

/// Row-major grayscale image with samples on the `[0, 255]` scale.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    pixels: Vec<f64>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, pixels: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 || pixels.len() != width * height {
            return Err(Error::DimensionMismatch(format!(
                "{} pixels for a {width}x{height} image",
                pixels.len()
            )));
        }
        Ok(GrayImage { width, height, pixels })
    }

    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        let pixels = (0..height)
            .flat_map(|r| (0..width).map(move |c| (r, c)))
            .map(|(r, c)| f(r, c))
            .collect();
        GrayImage { width, height, pixels }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.pixels[row * self.width + col]
    }

    pub fn parse_pgm(bytes: &[u8]) -> std::result::Result<Self, String> {
        let mut pos = 0;
        let mut token = || -> std::result::Result<String, String> {
            loop {
                while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
                    pos += 1;
                }
                if pos < bytes.len() && bytes[pos] == b'#' {
                    while pos < bytes.len() && bytes[pos] != b'\n' {
                        pos += 1;
                    }
                    continue;
                }
                break;
            }
            let start = pos;
            while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if start == pos {
                return Err("unexpected end of header".into());
            }
            Ok(String::from_utf8_lossy(&bytes[start..pos]).into_owned())
        };
        let magic = token()?;
        let format = match magic.as_str() {
            "P2" => PgmFormat::Ascii,
            "P5" => PgmFormat::Binary,
            other => return Err(format!("unsupported magic '{other}'")),
        };
        let mut num = |what: &str| -> std::result::Result<usize, String> {
            token()?.parse().map_err(|_| format!("bad {what}"))
        };
        let width = num("width")?;
        let height = num("height")?;
        let maxval = num("maxval")?;
        if width == 0 || height == 0 {
            return Err("empty image".into());
        }
        if !(1..=255).contains(&maxval) {
            return Err(format!("maxval {maxval} outside 1..=255"));
        }
        let count = width * height;
        let scale = 255.0 / maxval as f64;
        let raw: Vec<usize> = match format {
            PgmFormat::Ascii => (0..count)
                .map(|_| num("sample"))
                .collect::<std::result::Result<_, _>>()?,
            PgmFormat::Binary => {
                let start = pos + 1;
                let body = bytes.get(start..start + count).ok_or("truncated pixel data")?;
                body.iter().map(|&b| b as usize).collect()
            }
        };
        if let Some(&bad) = raw.iter().find(|&&v| v > maxval) {
            return Err(format!("sample {bad} exceeds maxval {maxval}"));
        }
        Ok(GrayImage {
            width,
            height,
            pixels: raw.into_iter().map(|v| v as f64 * scale).collect(),
        })
    }

    pub fn read_pgm(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::parse_pgm(&bytes).map_err(|reason| Error::UnreadableImage {
            path: path.display().to_string(),
            reason,
        })
    }

    /// Samples rounded and clamped to `0..=255`.
    pub fn to_pgm_bytes(&self, format: PgmFormat) -> Vec<u8> {
        let q: Vec<u8> = self.pixels.iter().map(|v| v.round().clamp(0.0, 255.0) as u8).collect();
        match format {
            PgmFormat::Binary => {
                let mut out = format!("P5\n{} {}\n255\n", self.width, self.height).into_bytes();
                out.extend_from_slice(&q);
                out
            }
            PgmFormat::Ascii => {
                let mut out = format!("P2\n{} {}\n255\n", self.width, self.height);
                for row in q.chunks(self.width) {
                    let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
                    out.push_str(&line.join(" "));
                    out.push('\n');
                }
                out.into_bytes()
            }
        }
    }

    pub fn write_pgm(&self, path: impl AsRef<Path>, format: PgmFormat) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_pgm_bytes(format)).map_err(|e| Error::io(path, e))
    }
}

/// Bilinear resampling with pixel centers aligned (`src = (dst + 0.5) s - 0.5`).
pub fn resize_bilinear(img: &GrayImage, width: usize, height: usize) -> GrayImage {
    let sx = img.width as f64 / width as f64;
    let sy = img.height as f64 / height as f64;
    let coord = |d: usize, s: f64, len: usize| {
        let x = ((d as f64 + 0.5) * s - 0.5).clamp(0.0, (len - 1) as f64);
        let i0 = x.floor() as usize;
        let i1 = (i0 + 1).min(len - 1);
        (i0, i1, x - i0 as f64)
    };
    GrayImage::from_fn(width, height, |r, c| {
        let (y0, y1, fy) = coord(r, sy, img.height);
        let (x0, x1, fx) = coord(c, sx, img.width);
        let top = img.get(y0, x0) * (1.0 - fx) + img.get(y0, x1) * fx;
        let bottom = img.get(y1, x0) * (1.0 - fx) + img.get(y1, x1) * fx;
        top * (1.0 - fy) + bottom * fy
    })
}

/// `t` frames blending linearly from `a` to `b`, each resized to `n x n`,
/// over a 4-connected `n x n` grid.
pub fn image_to_joint(a: &GrayImage, b: &GrayImage, t: usize, n: usize) -> Result<(JointSignal, Graph)> {
    if t < 2 {
        return Err(Error::TooSmall { what: "frame count", got: t, min: 2 });
    }
    let ra = resize_bilinear(a, n, n);
    let rb = resize_bilinear(b, n, n);
    let data = DMatrix::from_fn(n * n, t, |p, j| {
        let w = j as f64 / (t - 1) as f64;
        if j == 0 {
            ra.pixels[p]
        } else if j == t - 1 {
            rb.pixels[p]
        } else {
            (1.0 - w) * ra.pixels[p] + w * rb.pixels[p]
        }
    });
    Ok((JointSignal::new(data)?, grid_graph(n, n, Connectivity::Four)?))
}

/// Frames resized to `n x n` as columns, with a grid vertex graph and a ring
/// time graph.
pub fn video_to_joint(frames: &[GrayImage], n: usize) -> Result<(JointSignal, Graph, Graph)> {
    if frames.len() < 3 {
        return Err(Error::TooFewFrames(frames.len()));
    }
    let mut data = DMatrix::zeros(n * n, frames.len());
    for (j, f) in frames.iter().enumerate() {
        data.column_mut(j).copy_from_slice(&resize_bilinear(f, n, n).pixels);
    }
    Ok((
        JointSignal::new(data)?,
        grid_graph(n, n, Connectivity::Four)?,
        ring_graph(frames.len())?,
    ))
}

/// Columns of an `n² x T` signal as `n x n` images.
pub fn joint_to_frames(x: &JointSignal, n: usize) -> Result<Vec<GrayImage>> {
    if x.data().nrows() != n * n {
        return Err(Error::DimensionMismatch(format!(
            "{} rows cannot form {n}x{n} frames",
            x.data().nrows()
        )));
    }
    Ok(x.data()
        .column_iter()
        .map(|c| GrayImage { width: n, height: n, pixels: c.iter().copied().collect() })
        .collect())
}

/// All `*.pgm` files of `dir`, in lexicographic file-name order.
pub fn read_frame_dir(dir: impl AsRef<Path>) -> Result<Vec<GrayImage>> {
    let dir = dir.as_ref();
    let mut paths: Vec<_> = std::fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x.eq_ignore_ascii_case("pgm")))
        .collect();
    paths.sort();
    paths.iter().map(GrayImage::read_pgm).collect()
}
