//! Minimal grayscale raster plots written as binary PGM.

use std::io::{self, Write};

use echoflow_core::geometry::Vec2;

#[derive(Debug, Clone, PartialEq)]
pub struct Canvas {
    pub width: usize,
    pub height: usize,
    /// Row-major, top row first.
    pub pixels: Vec<u8>,
}

impl Canvas {
    pub fn new(width: usize, height: usize, background: u8) -> Self {
        Self {
            width,
            height,
            pixels: vec![background; width * height],
        }
    }

    pub fn set(&mut self, x: i64, y: i64, v: u8) {
        if x >= 0 && y >= 0 && (x as usize) < self.width && (y as usize) < self.height {
            self.pixels[y as usize * self.width + x as usize] = v;
        }
    }

    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.pixels[y * self.width + x]
    }

    /// Bresenham line between pixel coordinates.
    pub fn line(&mut self, (mut x0, mut y0): (i64, i64), (x1, y1): (i64, i64), v: u8) {
        let dx = (x1 - x0).abs();
        let dy = -(y1 - y0).abs();
        let sx = if x0 < x1 { 1 } else { -1 };
        let sy = if y0 < y1 { 1 } else { -1 };
        let mut err = dx + dy;
        loop {
            self.set(x0, y0, v);
            if x0 == x1 && y0 == y1 {
                break;
            }
            let e2 = 2 * err;
            if e2 >= dy {
                err += dy;
                x0 += sx;
            }
            if e2 <= dx {
                err += dx;
                y0 += sy;
            }
        }
    }

    pub fn write_pgm<W: Write>(&self, mut w: W) -> io::Result<()> {
        write!(w, "P5\n{} {}\n255\n", self.width, self.height)?;
        w.write_all(&self.pixels)
    }
}

/// World rectangle mapped onto a canvas at a fixed scale, y pointing up.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WorldView {
    pub min: Vec2,
    pub px_per_m: f64,
    pub height: usize,
}

impl WorldView {
    /// Fits `[lo, hi]` plus `margin` meters; the canvas is sized accordingly.
    pub fn fit(lo: Vec2, hi: Vec2, margin: f64, px_per_m: f64) -> (Self, Canvas) {
        let min = Vec2::new(lo.x - margin, lo.y - margin);
        let w = ((hi.x - lo.x + 2.0 * margin) * px_per_m).ceil().max(1.0) as usize;
        let h = ((hi.y - lo.y + 2.0 * margin) * px_per_m).ceil().max(1.0) as usize;
        (
            Self {
                min,
                px_per_m,
                height: h,
            },
            Canvas::new(w, h, 255),
        )
    }

    pub fn to_px(&self, p: Vec2) -> (i64, i64) {
        let x = ((p.x - self.min.x) * self.px_per_m).floor() as i64;
        let y = self.height as i64 - 1 - ((p.y - self.min.y) * self.px_per_m).floor() as i64;
        (x, y)
    }

    pub fn line(&self, c: &mut Canvas, a: Vec2, b: Vec2, v: u8) {
        c.line(self.to_px(a), self.to_px(b), v);
    }

    pub fn circle(&self, c: &mut Canvas, center: Vec2, radius: f64, v: u8) {
        let n = ((radius * self.px_per_m * 8.0).ceil() as usize).max(12);
        for k in 0..n {
            let a0 = k as f64 / n as f64 * std::f64::consts::TAU;
            let a1 = (k + 1) as f64 / n as f64 * std::f64::consts::TAU;
            self.line(c, center + Vec2::from_angle(a0) * radius, center + Vec2::from_angle(a1) * radius, v);
        }
    }
}
