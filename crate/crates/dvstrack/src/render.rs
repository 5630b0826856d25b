//! Binary pixmap (P6) rendering of count frames with a box overlay.

use dvstrack_core::{BoundingBox, SpikeCountFrame};

const RED: [u8; 3] = [255, 0, 0];

/// Gray count image, scaled so the busiest pixel is 255, with a 1 px red
/// outline of `bbox` (clipped to the frame).
pub fn render_ppm(frame: &SpikeCountFrame, bbox: Option<BoundingBox>) -> Vec<u8> {
    let (w, h) = (frame.geometry.width as usize, frame.geometry.height as usize);
    let gray = frame.to_gray8();
    let mut rgb: Vec<u8> = gray.iter().flat_map(|&g| [g, g, g]).collect();
    if let Some(b) = bbox {
        let (x0, y0) = (b.x as usize, b.y as usize);
        let (x1, y1) = (x0 + b.w.max(1) as usize - 1, y0 + b.h.max(1) as usize - 1);
        let mut put = |x: usize, y: usize| {
            if x < w && y < h {
                let i = 3 * (y * w + x);
                rgb[i..i + 3].copy_from_slice(&RED);
            }
        };
        for x in x0..=x1 {
            put(x, y0);
            put(x, y1);
        }
        for y in y0..=y1 {
            put(x0, y);
            put(x1, y);
        }
    }
    let mut out = format!("P6\n{w} {h}\n255\n").into_bytes();
    out.extend_from_slice(&rgb);
    out
}

pub fn frame_file_name(bin_index: u64) -> String {
    format!("bin_{bin_index:06}.ppm")
}
