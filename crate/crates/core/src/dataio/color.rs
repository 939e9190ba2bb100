//! Color-space conversions for diversity-type members.
//!
//! YCbCr follows ITU-R BT.601 full range (offset 128 on the 8-bit scale).
//! CIELAB goes through linearized sRGB and XYZ under D65. Converted channels
//! are stored on a unit scale: Y, Cb, Cr divided by 255; L* by 100; a*, b*
//! as `(v + 128) / 255`.

use ndarray::{Array4, Axis, Zip};

use super::{ColorTag, ImageSet};
use crate::{FfError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ColorSpace {
    YCbCr,
    Lab,
}

/// BT.601 full-range forward transform on the 0–255 scale.
pub fn ycbcr_from_rgb(r: f64, g: f64, b: f64) -> [f64; 3] {
    [
        0.299 * r + 0.587 * g + 0.114 * b,
        128.0 - 0.168_736 * r - 0.331_264 * g + 0.5 * b,
        128.0 + 0.5 * r - 0.418_688 * g - 0.081_312 * b,
    ]
}

pub fn rgb_from_ycbcr(y: f64, cb: f64, cr: f64) -> [f64; 3] {
    let (cb, cr) = (cb - 128.0, cr - 128.0);
    [
        y + 1.402 * cr,
        y - 0.344_136 * cb - 0.714_136 * cr,
        y + 1.772 * cb,
    ]
}

// Linear sRGB -> XYZ, D65.
const SRGB_TO_XYZ: [[f64; 3]; 3] = [
    [0.412_456_4, 0.357_576_1, 0.180_437_5],
    [0.212_672_9, 0.715_152_2, 0.072_175_0],
    [0.019_333_9, 0.119_192_0, 0.950_304_1],
];

fn srgb_linear(c: f64) -> f64 {
    if c <= 0.040_45 {
        c / 12.92
    } else {
        ((c + 0.055) / 1.055).powf(2.4)
    }
}

fn lab_f(t: f64) -> f64 {
    const DELTA: f64 = 6.0 / 29.0;
    if t > DELTA * DELTA * DELTA {
        t.cbrt()
    } else {
        t / (3.0 * DELTA * DELTA) + 4.0 / 29.0
    }
}

/// CIELAB `(L*, a*, b*)` of an 8-bit-scale sRGB triple.
pub fn lab_from_rgb(r: f64, g: f64, b: f64) -> [f64; 3] {
    let lin = [r, g, b].map(|c| srgb_linear(c / 255.0));
    let mut xyz = [0.0; 3];
    let mut white = [0.0; 3];
    for (i, row) in SRGB_TO_XYZ.iter().enumerate() {
        xyz[i] = row.iter().zip(&lin).map(|(m, c)| m * c).sum();
        // Reference white is the image of RGB (1,1,1), so white maps to a*=b*=0 exactly.
        white[i] = row.iter().sum();
    }
    let [fx, fy, fz] = [0, 1, 2].map(|i| lab_f(xyz[i] / white[i]));
    [116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)]
}

fn require_rgb(set: &ImageSet) -> Result<()> {
    if set.channels() != 3 {
        return Err(FfError::Color(format!(
            "expected 3-channel RGB input, got {} channel(s)",
            set.channels()
        )));
    }
    Ok(())
}

/// Splits an RGB set into the three channels of `target`.
pub fn convert_color_space(set: &ImageSet, target: ColorSpace) -> Result<Vec<ImageSet>> {
    require_rgb(set)?;
    let (n, h, w, _) = set.pixels().dim();
    let mut planes = [
        Array4::<f32>::zeros((n, h, w, 1)),
        Array4::<f32>::zeros((n, h, w, 1)),
        Array4::<f32>::zeros((n, h, w, 1)),
    ];
    let [p0, p1, p2] = &mut planes;
    Zip::from(p0.lanes_mut(Axis(3)))
        .and(p1.lanes_mut(Axis(3)))
        .and(p2.lanes_mut(Axis(3)))
        .and(set.pixels().lanes(Axis(3)))
        .par_for_each(|mut a, mut b, mut c, rgb| {
            let (r, g, bl) = (
                f64::from(rgb[0]) * 255.0,
                f64::from(rgb[1]) * 255.0,
                f64::from(rgb[2]) * 255.0,
            );
            let out = match target {
                ColorSpace::YCbCr => ycbcr_from_rgb(r, g, bl).map(|v| v / 255.0),
                ColorSpace::Lab => {
                    let [l, aa, bb] = lab_from_rgb(r, g, bl);
                    [l / 100.0, (aa + 128.0) / 255.0, (bb + 128.0) / 255.0]
                }
            };
            a[0] = out[0] as f32;
            b[0] = out[1] as f32;
            c[0] = out[2] as f32;
        });
    let tags = match target {
        ColorSpace::YCbCr => [ColorTag::Y, ColorTag::Cb, ColorTag::Cr],
        ColorSpace::Lab => [ColorTag::LStar, ColorTag::AStar, ColorTag::BStar],
    };
    let labels = set.labels().map(<[usize]>::to_vec);
    planes
        .into_iter()
        .zip(tags)
        .map(|(p, tag)| ImageSet::new(p, labels.clone(), set.num_classes(), tag))
        .collect()
}

/// BT.601 luma of an RGB set; single-channel input passes through unchanged.
pub fn to_luma(set: &ImageSet) -> Result<ImageSet> {
    match set.channels() {
        1 => Ok(set.clone()),
        3 => {
            let luma = set
                .pixels()
                .map_axis(Axis(3), |rgb| {
                    0.299 * rgb[0] + 0.587 * rgb[1] + 0.114 * rgb[2]
                })
                .insert_axis(Axis(3));
            ImageSet::new(
                luma,
                set.labels().map(<[usize]>::to_vec),
                set.num_classes(),
                ColorTag::Gray,
            )
        }
        c => Err(FfError::Color(format!("cannot take luma of {c} channels"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rgb_set(r: u8, g: u8, b: u8) -> ImageSet {
        let mut px = Array4::zeros((1, 2, 2, 3));
        for ((_, _, _, c), v) in px.indexed_iter_mut() {
            *v = f32::from([r, g, b][c]) / 255.0;
        }
        ImageSet::new(px, Some(vec![0]), 1, ColorTag::Rgb).unwrap()
    }

    #[test]
    fn gray_is_ycbcr_fixed_point() {
        let [y, cb, cr] = ycbcr_from_rgb(128.0, 128.0, 128.0);
        assert!((y - 128.0).abs() < 1e-9);
        assert!((cb - 128.0).abs() < 1e-9);
        assert!((cr - 128.0).abs() < 1e-9);
    }

    #[test]
    fn red_has_high_cr_low_cb() {
        let [_, cb, cr] = ycbcr_from_rgb(255.0, 0.0, 0.0);
        // 128 - 0.168736·255 and 128 + 0.5·255
        assert!((cb - 84.972_32).abs() < 1e-6 && cb < 128.0);
        assert!((cr - 255.5).abs() < 1e-9 && cr > 128.0);
    }

    #[test]
    fn white_is_lab_reference() {
        let [l, a, b] = lab_from_rgb(255.0, 255.0, 255.0);
        assert!((l - 100.0).abs() < 1e-9);
        assert!(a.abs() < 1e-9 && b.abs() < 1e-9);
        let [l, _, _] = lab_from_rgb(0.0, 0.0, 0.0);
        assert!(l.abs() < 1e-9);
    }

    #[test]
    fn set_conversion_tags_and_values() {
        let chans = convert_color_space(&rgb_set(128, 128, 128), ColorSpace::YCbCr).unwrap();
        assert_eq!(
            chans.iter().map(ImageSet::tag).collect::<Vec<_>>(),
            vec![ColorTag::Y, ColorTag::Cb, ColorTag::Cr]
        );
        for c in &chans {
            assert_eq!(c.channels(), 1);
            assert!(c.pixels().iter().all(|&v| (v - 128.0 / 255.0).abs() < 1e-6));
            assert_eq!(c.labels().unwrap(), &[0]);
        }
        let lab = convert_color_space(&rgb_set(255, 255, 255), ColorSpace::Lab).unwrap();
        assert!(lab[0].pixels().iter().all(|&v| (v - 1.0).abs() < 1e-6));
        assert!(lab[1].pixels().iter().all(|&v| (v - 128.0 / 255.0).abs() < 1e-6));
    }

    #[test]
    fn non_rgb_is_color_error() {
        let set = ImageSet::unlabeled(Array4::zeros((1, 2, 2, 1)), ColorTag::Gray).unwrap();
        assert!(matches!(
            convert_color_space(&set, ColorSpace::Lab),
            Err(FfError::Color(_))
        ));
    }

    #[test]
    fn luma_of_rgb() {
        let luma = to_luma(&rgb_set(255, 0, 0)).unwrap();
        assert_eq!(luma.channels(), 1);
        assert!((luma.pixels()[[0, 0, 0, 0]] - 0.299).abs() < 1e-6);
    }

    proptest! {
        #[test]
        fn ycbcr_round_trip_within_one_step(r in 0u8..=255, g in 0u8..=255, b in 0u8..=255) {
            let q = |v: f64| v.round().clamp(0.0, 255.0);
            let [y, cb, cr] = ycbcr_from_rgb(r.into(), g.into(), b.into()).map(q);
            let back = rgb_from_ycbcr(y, cb, cr).map(q);
            for (orig, rec) in [r, g, b].iter().zip(back) {
                prop_assert!((f64::from(*orig) - rec).abs() <= 1.0);
            }
        }
    }
}
