//! Minimal deterministic raster canvas with a PNG writer, for report
//! images. Fixed palette, no text rendering.

use crate::error::{Error, Result};
use std::path::Path;

pub const BG: [u8; 3] = [252, 252, 250];
pub const AXIS: [u8; 3] = [70, 70, 80];
pub const PALETTE: [[u8; 3]; 6] = [
    [31, 119, 180],
    [214, 89, 39],
    [44, 160, 44],
    [148, 103, 189],
    [227, 150, 14],
    [23, 140, 160],
];

pub struct Canvas {
    w: usize,
    h: usize,
    px: Vec<u8>,
}

impl Canvas {
    pub fn new(w: usize, h: usize) -> Self {
        let mut px = Vec::with_capacity(w * h * 3);
        for _ in 0..w * h {
            px.extend_from_slice(&BG);
        }
        Canvas { w, h, px }
    }

    pub fn set(&mut self, x: i64, y: i64, c: [u8; 3]) {
        if x >= 0 && y >= 0 && (x as usize) < self.w && (y as usize) < self.h {
            let i = (y as usize * self.w + x as usize) * 3;
            self.px[i..i + 3].copy_from_slice(&c);
        }
    }

    /// 3x3 dot centered at (x, y).
    pub fn dot(&mut self, x: i64, y: i64, c: [u8; 3]) {
        for dx in -1..=1 {
            for dy in -1..=1 {
                self.set(x + dx, y + dy, c);
            }
        }
    }

    /// Vertical bar between two pixel rows inclusive.
    pub fn vbar(&mut self, x: i64, y_from: i64, y_to: i64, c: [u8; 3]) {
        let (lo, hi) = (y_from.min(y_to), y_from.max(y_to));
        for y in lo..=hi {
            self.set(x, y, c);
        }
    }

    pub fn line(&mut self, x0: i64, y0: i64, x1: i64, y1: i64, c: [u8; 3]) {
        let (dx, dy) = ((x1 - x0).abs(), -(y1 - y0).abs());
        let (sx, sy) = (if x0 < x1 { 1 } else { -1 }, if y0 < y1 { 1 } else { -1 });
        let (mut x, mut y, mut err) = (x0, y0, dx + dy);
        loop {
            self.set(x, y, c);
            if x == x1 && y == y1 {
                break;
            }
            let e2 = 2 * err;
            if e2 >= dy {
                err += dy;
                x += sx;
            }
            if e2 <= dx {
                err += dx;
                y += sy;
            }
        }
    }

    pub fn save_png(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut enc = png::Encoder::new(std::io::BufWriter::new(file), self.w as u32, self.h as u32);
        enc.set_color(png::ColorType::Rgb);
        enc.set_depth(png::BitDepth::Eight);
        let mut writer = enc.write_header().map_err(|e| match e {
            png::EncodingError::IoError(io) => Error::io(path, io),
            other => Error::io(path, std::io::Error::other(other.to_string())),
        })?;
        writer.write_image_data(&self.px).map_err(|e| match e {
            png::EncodingError::IoError(io) => Error::io(path, io),
            other => Error::io(path, std::io::Error::other(other.to_string())),
        })?;
        Ok(())
    }
}

/// Affine data-to-pixel frame with fixed margins and an axis box.
pub struct Frame {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
    pub margin: usize,
    pub w: usize,
    pub h: usize,
}

impl Frame {
    pub fn new(x0: f64, x1: f64, y0: f64, y1: f64, w: usize, h: usize) -> Self {
        Frame { x0, x1, y0, y1, margin: 20, w, h }
    }

    pub fn px(&self, x: f64, y: f64) -> (i64, i64) {
        let iw = (self.w - 2 * self.margin) as f64;
        let ih = (self.h - 2 * self.margin) as f64;
        let fx = (x - self.x0) / (self.x1 - self.x0);
        let fy = (y - self.y0) / (self.y1 - self.y0);
        (
            self.margin as i64 + (fx * iw).round() as i64,
            (self.h - self.margin) as i64 - (fy * ih).round() as i64,
        )
    }

    pub fn draw_box(&self, canvas: &mut Canvas) {
        let (l, t) = (self.margin as i64, self.margin as i64);
        let (r, b) = ((self.w - self.margin) as i64, (self.h - self.margin) as i64);
        canvas.line(l, t, r, t, AXIS);
        canvas.line(l, b, r, b, AXIS);
        canvas.line(l, t, l, b, AXIS);
        canvas.line(r, t, r, b, AXIS);
    }
}
