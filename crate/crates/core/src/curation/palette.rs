use std::collections::HashMap;

use image::RgbaImage;

pub const PALETTE_SIZE: usize = 6;

/// The most frequent colors after quantizing each channel to 4 bits.
///
/// Each bin is reported as its nibble repeated (`0xa` -> `0xaa`). Ties go to
/// the smaller bin value. Alpha is ignored.
pub fn palette_of(image: &RgbaImage) -> Vec<String> {
    let mut counts: HashMap<u16, u64> = HashMap::new();
    for p in image.pixels() {
        let bin = ((p[0] as u16 >> 4) << 8) | ((p[1] as u16 >> 4) << 4) | (p[2] as u16 >> 4);
        *counts.entry(bin).or_default() += 1;
    }
    let mut bins: Vec<(u16, u64)> = counts.into_iter().collect();
    bins.sort_unstable_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    bins.into_iter()
        .take(PALETTE_SIZE)
        .map(|(bin, _)| {
            let r = ((bin >> 8) & 0xf) as u8 * 17;
            let g = ((bin >> 4) & 0xf) as u8 * 17;
            let b = (bin & 0xf) as u8 * 17;
            format!("#{r:02x}{g:02x}{b:02x}")
        })
        .collect()
}
