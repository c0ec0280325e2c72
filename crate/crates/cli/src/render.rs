//! PNG heatmaps of phase-space grids with an optional curve overlay.

use std::path::Path;

use anyhow::{bail, Context, Result};
use font8x8::UnicodeFonts;
use image::{Rgb, RgbImage};
use ptcs_core::io::GridData;

const LEFT: u32 = 80;
const RIGHT: u32 = 110;
const TOP: u32 = 36;
const BOTTOM: u32 = 56;
const STOPS: [[f64; 3]; 4] = [
    [0.0, 0.0, 255.0],
    [0.0, 255.0, 255.0],
    [255.0, 255.0, 0.0],
    [255.0, 0.0, 0.0],
];
const INK: Rgb<u8> = Rgb([0, 0, 0]);
const OVERLAY: Rgb<u8> = Rgb([255, 255, 255]);

/// Blue to red through cyan and yellow; `s` outside `[0, 1]` is clamped.
pub fn ramp(s: f64) -> Rgb<u8> {
    let s = if s.is_finite() { s.clamp(0.0, 1.0) } else { 0.5 };
    let x = s * (STOPS.len() - 1) as f64;
    let k = (x.floor() as usize).min(STOPS.len() - 2);
    let f = x - k as f64;
    let c = |i: usize| (STOPS[k][i] + f * (STOPS[k + 1][i] - STOPS[k][i])).round() as u8;
    Rgb([c(0), c(1), c(2)])
}

/// Maps values to `[0, 1]`; a degenerate range maps everything to 0.5.
pub fn normalizer(min: f64, max: f64) -> impl Fn(f64) -> f64 {
    let span = max - min;
    move |v| {
        if span > 0.0 && span.is_finite() {
            (v - min) / span
        } else {
            0.5
        }
    }
}

pub struct RenderOptions {
    pub width: u32,
    pub height: u32,
    pub title: String,
}

struct Frame {
    x0: f64,
    y0: f64,
    w: f64,
    h: f64,
    q_range: (f64, f64),
    p_range: (f64, f64),
}

impl Frame {
    fn to_pixel(&self, q: f64, p: f64) -> (f64, f64) {
        let u = (q - self.q_range.0) / (self.q_range.1 - self.q_range.0);
        let v = (p - self.p_range.0) / (self.p_range.1 - self.p_range.0);
        (self.x0 + u * self.w, self.y0 + (1.0 - v) * self.h)
    }
}

/// Axis extent covering whole cells around the first and last centres.
fn extent(axis: &[f64]) -> (f64, f64) {
    if axis.len() < 2 {
        let c = axis.first().copied().unwrap_or(0.0);
        return (c - 0.5, c + 0.5);
    }
    let half = 0.5 * (axis[axis.len() - 1] - axis[0]) / (axis.len() - 1) as f64;
    (axis[0] - half, axis[axis.len() - 1] + half)
}

pub fn render(data: &GridData, overlay: Option<&[(f64, f64)]>, opts: &RenderOptions, out: &Path) -> Result<()> {
    let img = draw(data, overlay, opts)?;
    img.save(out).with_context(|| format!("cannot write {}", out.display()))
}

pub fn draw(data: &GridData, overlay: Option<&[(f64, f64)]>, opts: &RenderOptions) -> Result<RgbImage> {
    let (nq, np) = data.values.dim();
    if nq == 0 || np == 0 {
        bail!("grid is empty");
    }
    if opts.width < LEFT + RIGHT + 16 || opts.height < TOP + BOTTOM + 16 {
        bail!("image {}x{} is too small", opts.width, opts.height);
    }
    let mut img = RgbImage::from_pixel(opts.width, opts.height, Rgb([255, 255, 255]));
    let frame = Frame {
        x0: LEFT as f64,
        y0: TOP as f64,
        w: (opts.width - LEFT - RIGHT) as f64,
        h: (opts.height - TOP - BOTTOM) as f64,
        q_range: extent(&data.q),
        p_range: extent(&data.p),
    };
    let finite = data.values.iter().copied().filter(|v| v.is_finite());
    let (min, max) = finite.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    let norm = normalizer(min, max);

    for py in 0..frame.h as u32 {
        let j = np - 1 - ((py as f64 / frame.h * np as f64) as usize).min(np - 1);
        for px in 0..frame.w as u32 {
            let i = ((px as f64 / frame.w * nq as f64) as usize).min(nq - 1);
            img.put_pixel(LEFT + px, TOP + py, ramp(norm(data.values[[i, j]])));
        }
    }
    rectangle(&mut img, LEFT - 1, TOP - 1, frame.w as u32 + 2, frame.h as u32 + 2, INK);

    if let Some(curve) = overlay {
        for pair in curve.windows(2) {
            let a = frame.to_pixel(pair[0].0, pair[0].1);
            let b = frame.to_pixel(pair[1].0, pair[1].1);
            thick_segment(&mut img, &frame, a, b, 1.6, OVERLAY);
        }
    }

    let bar_x = opts.width - RIGHT + 24;
    for py in 0..frame.h as u32 {
        let c = ramp(1.0 - py as f64 / frame.h);
        for dx in 0..16 {
            img.put_pixel(bar_x + dx, TOP + py, c);
        }
    }
    rectangle(&mut img, bar_x - 1, TOP - 1, 18, frame.h as u32 + 2, INK);
    text(&mut img, bar_x + 20, TOP, &short(max), INK);
    text(&mut img, bar_x + 20, TOP + frame.h as u32 - 8, &short(min), INK);

    let below = TOP + frame.h as u32 + 8;
    text(&mut img, LEFT, below, &short(frame.q_range.0), INK);
    let q_hi = short(frame.q_range.1);
    text(
        &mut img,
        LEFT + frame.w as u32 - 8 * q_hi.len() as u32,
        below,
        &q_hi,
        INK,
    );
    text(&mut img, LEFT + frame.w as u32 / 2 - 4, below + 20, "q", INK);
    let p_hi = short(frame.p_range.1);
    let p_lo = short(frame.p_range.0);
    text(
        &mut img,
        (LEFT - 6).saturating_sub(8 * p_hi.len() as u32),
        TOP,
        &p_hi,
        INK,
    );
    text(
        &mut img,
        (LEFT - 6).saturating_sub(8 * p_lo.len() as u32),
        TOP + frame.h as u32 - 8,
        &p_lo,
        INK,
    );
    text(&mut img, 12, TOP + frame.h as u32 / 2 - 4, "p", INK);
    text(&mut img, LEFT, 12, &opts.title, INK);
    Ok(img)
}

fn short(v: f64) -> String {
    if v == 0.0 || (1e-2..1e4).contains(&v.abs()) {
        format!("{v:.3}")
    } else {
        format!("{v:.2e}")
    }
}

fn rectangle(img: &mut RgbImage, x: u32, y: u32, w: u32, h: u32, c: Rgb<u8>) {
    for dx in 0..w {
        put(img, (x + dx) as i64, y as i64, c);
        put(img, (x + dx) as i64, (y + h - 1) as i64, c);
    }
    for dy in 0..h {
        put(img, x as i64, (y + dy) as i64, c);
        put(img, (x + w - 1) as i64, (y + dy) as i64, c);
    }
}

fn put(img: &mut RgbImage, x: i64, y: i64, c: Rgb<u8>) {
    if x >= 0 && y >= 0 && (x as u32) < img.width() && (y as u32) < img.height() {
        img.put_pixel(x as u32, y as u32, c);
    }
}

fn thick_segment(img: &mut RgbImage, frame: &Frame, a: (f64, f64), b: (f64, f64), radius: f64, c: Rgb<u8>) {
    let len = ((b.0 - a.0).powi(2) + (b.1 - a.1).powi(2)).sqrt();
    let steps = (2.0 * len).ceil().max(1.0) as usize;
    let r = radius.ceil() as i64;
    for k in 0..=steps {
        let t = k as f64 / steps as f64;
        let (x, y) = (a.0 + t * (b.0 - a.0), a.1 + t * (b.1 - a.1));
        for dy in -r..=r {
            for dx in -r..=r {
                let (px, py) = (x + dx as f64, y + dy as f64);
                let inside = px >= frame.x0 && px < frame.x0 + frame.w && py >= frame.y0 && py < frame.y0 + frame.h;
                if inside && ((dx * dx + dy * dy) as f64) <= radius * radius {
                    put(img, px as i64, py as i64, c);
                }
            }
        }
    }
}

fn text(img: &mut RgbImage, x: u32, y: u32, s: &str, c: Rgb<u8>) {
    for (k, ch) in s.chars().enumerate() {
        let Some(glyph) = font8x8::BASIC_FONTS.get(ch) else {
            continue;
        };
        for (row, bits) in glyph.iter().enumerate() {
            for col in 0..8 {
                if bits & (1 << col) != 0 {
                    put(img, (x + 8 * k as u32 + col) as i64, (y + row as u32) as i64, c);
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;

    #[test]
    fn ramp_endpoints() {
        assert_eq!(ramp(0.0), Rgb([0, 0, 255]));
        assert_eq!(ramp(1.0), Rgb([255, 0, 0]));
        assert_eq!(ramp(f64::NAN), ramp(0.5));
    }

    #[test]
    fn degenerate_range_is_mid_ramp() {
        let n = normalizer(2.0, 2.0);
        assert_eq!(n(2.0), 0.5);
        let data = GridData {
            q: vec![0.0, 1.0],
            p: vec![0.0, 1.0],
            values: Array2::from_elem((2, 2), 3.0),
            metadata: vec![],
        };
        let opts = RenderOptions {
            width: 300,
            height: 200,
            title: "flat".into(),
        };
        let img = draw(&data, None, &opts).unwrap();
        assert_eq!(*img.get_pixel(LEFT + 10, TOP + 10), ramp(0.5));
    }

    #[test]
    fn overlay_is_drawn() {
        let data = GridData {
            q: vec![0.0, 1.0, 2.0],
            p: vec![-1.0, 0.0, 1.0],
            values: Array2::from_shape_fn((3, 3), |(i, j)| (i + j) as f64),
            metadata: vec![],
        };
        let opts = RenderOptions {
            width: 400,
            height: 300,
            title: String::new(),
        };
        let img = draw(&data, Some(&[(0.0, 0.0), (2.0, 0.0)]), &opts).unwrap();
        let frame_mid_y = TOP + (300 - TOP - BOTTOM) / 2;
        let hits = (LEFT..400 - RIGHT)
            .filter(|&x| *img.get_pixel(x, frame_mid_y) == OVERLAY)
            .count();
        assert!(hits > 100);
    }
}
