use std::fmt;
use std::str::FromStr;

use crate::dataio::{apply_laws_kernel, convert_color_space, ColorSpace, ColorTag, ImageSet};
use crate::saab::{ArchPreset, InputKind};
use crate::{FfError, Result};

/// Source of diversity among ensemble members.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum DiversityKind {
    /// Conv architecture FF-1..FF-4.
    T1,
    /// Color space channel.
    T2,
    /// Laws-filtered input.
    T3,
}

impl fmt::Display for DiversityKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DiversityKind::T1 => "T1",
            DiversityKind::T2 => "T2",
            DiversityKind::T3 => "T3",
        })
    }
}

impl FromStr for DiversityKind {
    type Err = FfError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "T1" => Ok(DiversityKind::T1),
            "T2" => Ok(DiversityKind::T2),
            "T3" => Ok(DiversityKind::T3),
            _ => Err(FfError::config(format!("unknown diversity type `{s}`"))),
        }
    }
}

/// One member's recipe.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct DiversityConfig {
    pub kind: DiversityKind,
    pub arch: ArchPreset,
    /// Channel or transform fed to the member.
    pub input_tag: ColorTag,
    /// Architecture table column.
    pub input_kind: InputKind,
}

impl DiversityConfig {
    /// A single full-input network, as used for non-ensemble runs.
    pub fn single(arch: ArchPreset, dataset: ColorTag) -> Result<Self> {
        Ok(DiversityConfig {
            kind: DiversityKind::T1,
            arch,
            input_tag: dataset,
            input_kind: full_input_kind(dataset)?,
        })
    }
}

impl fmt::Display for DiversityConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let col = match self.input_kind {
            InputKind::Grayscale => "gray",
            InputKind::Rgb => "rgb",
            InputKind::SingleChannel => "single",
        };
        write!(f, "{}:{}:{}:{}", self.kind, self.arch, self.input_tag.name(), col)
    }
}

impl FromStr for DiversityConfig {
    type Err = FfError;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.trim().split(':').collect();
        let [kind, arch, tag, col] = parts[..] else {
            return Err(FfError::config(format!("member spec `{s}` is not kind:arch:input:column")));
        };
        let input_kind = match col {
            "gray" => InputKind::Grayscale,
            "rgb" => InputKind::Rgb,
            "single" => InputKind::SingleChannel,
            _ => return Err(FfError::config(format!("unknown architecture column `{col}`"))),
        };
        let input_tag = ColorTag::parse(tag)?;
        if input_tag.channels() != input_kind.channels() {
            return Err(FfError::config(format!("input `{tag}` does not fit column `{col}`")));
        }
        Ok(DiversityConfig {
            kind: kind.parse()?,
            arch: arch.parse()?,
            input_tag,
            input_kind,
        })
    }
}

fn full_input_kind(dataset: ColorTag) -> Result<InputKind> {
    match dataset {
        ColorTag::Gray => Ok(InputKind::Grayscale),
        ColorTag::Rgb => Ok(InputKind::Rgb),
        other => Err(FfError::config(format!(
            "dataset images must be gray or rgb, got {}",
            other.name()
        ))),
    }
}

/// Member list for the requested diversity types, in the order given
/// (repeats are ignored). `dataset` is the tag of the raw images.
pub fn build_diversity_configs(types: &[DiversityKind], dataset: ColorTag) -> Result<Vec<DiversityConfig>> {
    let full = full_input_kind(dataset)?;
    let mut seen = Vec::new();
    let mut out = Vec::new();
    for &kind in types {
        if seen.contains(&kind) {
            continue;
        }
        seen.push(kind);
        match kind {
            DiversityKind::T1 => out.extend(ArchPreset::ALL.iter().map(|&arch| DiversityConfig {
                kind,
                arch,
                input_tag: dataset,
                input_kind: full,
            })),
            DiversityKind::T2 => {
                if dataset != ColorTag::Rgb {
                    return Err(FfError::config("color-space diversity needs an rgb dataset"));
                }
                out.push(DiversityConfig {
                    kind,
                    arch: ArchPreset::Ff1,
                    input_tag: ColorTag::Rgb,
                    input_kind: InputKind::Rgb,
                });
                let channels = [
                    ColorTag::Y,
                    ColorTag::Cb,
                    ColorTag::Cr,
                    ColorTag::LStar,
                    ColorTag::AStar,
                    ColorTag::BStar,
                ];
                out.extend(channels.iter().map(|&input_tag| DiversityConfig {
                    kind,
                    arch: ArchPreset::Ff1,
                    input_tag,
                    input_kind: InputKind::SingleChannel,
                }));
            }
            DiversityKind::T3 => {
                // Gray digits keep their own column; color datasets filter luma.
                let input_kind = match full {
                    InputKind::Grayscale => InputKind::Grayscale,
                    _ => InputKind::SingleChannel,
                };
                out.extend((0..9).map(|k| DiversityConfig {
                    kind,
                    arch: ArchPreset::Ff1,
                    input_tag: ColorTag::Laws(k),
                    input_kind,
                }));
            }
        }
    }
    Ok(out)
}

/// Converts raw dataset images into the input a member expects.
pub fn prepare_input(set: &ImageSet, tag: ColorTag) -> Result<ImageSet> {
    let pick = |space: ColorSpace, i: usize| -> Result<ImageSet> {
        Ok(convert_color_space(set, space)?.swap_remove(i))
    };
    match tag {
        ColorTag::Gray | ColorTag::Rgb => {
            if set.channels() != tag.channels() {
                return Err(FfError::Color(format!(
                    "{}-channel images cannot feed a {} member",
                    set.channels(),
                    tag.name()
                )));
            }
            Ok(set.clone())
        }
        ColorTag::Y => pick(ColorSpace::YCbCr, 0),
        ColorTag::Cb => pick(ColorSpace::YCbCr, 1),
        ColorTag::Cr => pick(ColorSpace::YCbCr, 2),
        ColorTag::LStar => pick(ColorSpace::Lab, 0),
        ColorTag::AStar => pick(ColorSpace::Lab, 1),
        ColorTag::BStar => pick(ColorSpace::Lab, 2),
        ColorTag::Laws(k) => apply_laws_kernel(set, usize::from(k)),
    }
}
