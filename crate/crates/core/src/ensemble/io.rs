//! Ensemble persistence.
//!
//! The manifest is UTF-8 text listing members in concatenation order:
//!
//! ```text
//! ffcnn-ensemble 1
//! member T1:FF-1:gray:gray member-00.ffm
//! fusion fusion.bin
//! ```
//!
//! Paths are relative to the manifest. Member files hold a `SAAB` blob
//! followed by an `SSL1` blob. The fusion blob is little-endian:
//!
//! ```text
//! b"FUS1" | u32 version | u32 d | u32 k | PCA (d mean, k·d components, k eigenvalues)
//! | u32 classes | classes × u32 label | u32 sv | sv·k f64 | classes·sv f64 | classes f64 bias
//! | f64 gamma | f64 C
//! ```

use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};

use super::diversity::DiversityConfig;
use super::fusion::{EnsembleModel, FusionModel};
use super::member::EnsembleMember;
use crate::numerics::RbfSvmModel;
use crate::saab::io::{expect_magic, read_matrix, read_pca, read_u32, read_vector, write_f64s, write_pca, write_u32};
use crate::ssl::{read_model, write_model};
use crate::{FfError, Result};

pub const MANIFEST_HEADER: &str = "ffcnn-ensemble 1";
pub const FUSION_MAGIC: &[u8; 4] = b"FUS1";
const FUSION_VERSION: u32 = 1;

pub fn write_fusion(w: &mut impl Write, f: &FusionModel) -> Result<()> {
    w.write_all(FUSION_MAGIC)?;
    w.write_u32::<LittleEndian>(FUSION_VERSION)?;
    write_u32(w, f.pca.dim_in())?;
    write_u32(w, f.pca.dim_out())?;
    write_pca(w, &f.pca)?;
    let svm = &f.svm;
    write_u32(w, svm.classes.len())?;
    for &c in &svm.classes {
        write_u32(w, c)?;
    }
    write_u32(w, svm.support_vectors.nrows())?;
    write_f64s(w, svm.support_vectors.iter())?;
    write_f64s(w, svm.dual_coef.iter())?;
    write_f64s(w, svm.bias.iter())?;
    w.write_f64::<LittleEndian>(svm.gamma)?;
    w.write_f64::<LittleEndian>(svm.c)?;
    Ok(())
}

pub fn read_fusion(r: &mut impl Read) -> Result<FusionModel> {
    expect_magic(r, FUSION_MAGIC)?;
    let version = r.read_u32::<LittleEndian>()?;
    if version != FUSION_VERSION {
        return Err(FfError::format(format!("unsupported FUS1 version {version}")));
    }
    let (d, k) = (read_u32(r)?, read_u32(r)?);
    if k == 0 || k > d {
        return Err(FfError::format(format!("fusion PCA keeps {k} of {d} dimensions")));
    }
    let pca = read_pca(r, d, k)?;
    let n_classes = read_u32(r)?;
    let classes = (0..n_classes).map(|_| read_u32(r)).collect::<Result<Vec<_>>>()?;
    let nsv = read_u32(r)?;
    let support_vectors = read_matrix(r, nsv, k)?;
    let dual_coef = read_matrix(r, n_classes, nsv)?;
    let bias = read_vector(r, n_classes)?;
    let gamma = r.read_f64::<LittleEndian>()?;
    let c = r.read_f64::<LittleEndian>()?;
    Ok(FusionModel {
        pca,
        svm: RbfSvmModel {
            classes,
            support_vectors,
            dual_coef,
            bias,
            gamma,
            c,
        },
    })
}

/// Parsed manifest: member recipes with their model paths, then the fusion
/// blob path, all as written (relative paths are not resolved).
#[derive(Clone, Debug, PartialEq)]
pub struct Manifest {
    pub members: Vec<(DiversityConfig, PathBuf)>,
    pub fusion: PathBuf,
}

pub fn write_manifest(w: &mut impl Write, m: &Manifest) -> Result<()> {
    writeln!(w, "{MANIFEST_HEADER}")?;
    for (cfg, path) in &m.members {
        writeln!(w, "member {cfg} {}", path.display())?;
    }
    writeln!(w, "fusion {}", m.fusion.display())?;
    Ok(())
}

pub fn read_manifest(r: impl BufRead) -> Result<Manifest> {
    let mut lines = r.lines();
    match lines.next().transpose()? {
        Some(h) if h.trim() == MANIFEST_HEADER => {}
        other => {
            return Err(FfError::format(format!(
                "expected `{MANIFEST_HEADER}`, found {other:?}"
            )))
        }
    }
    let mut members = Vec::new();
    let mut fusion = None;
    for line in lines {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        match line.split_once(' ') {
            Some(("member", rest)) => {
                let (spec, path) = rest
                    .trim()
                    .split_once(' ')
                    .ok_or_else(|| FfError::format(format!("member line without path: {line}")))?;
                members.push((spec.parse()?, PathBuf::from(path.trim())));
            }
            Some(("fusion", path)) if fusion.is_none() => fusion = Some(PathBuf::from(path.trim())),
            _ => return Err(FfError::format(format!("unexpected manifest line: {line}"))),
        }
    }
    let fusion = fusion.ok_or_else(|| FfError::format("manifest has no fusion line"))?;
    if members.is_empty() {
        return Err(FfError::format("manifest lists no members"));
    }
    Ok(Manifest { members, fusion })
}

/// Writes member models, the fusion blob and `ensemble.txt` into `dir`;
/// returns the manifest path.
pub fn save_ensemble(model: &EnsembleModel, dir: impl AsRef<Path>) -> Result<PathBuf> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;
    let mut members = Vec::with_capacity(model.members.len());
    for (i, m) in model.members.iter().enumerate() {
        let name = PathBuf::from(format!("member-{i:02}.ffm"));
        let mut w = BufWriter::new(File::create(dir.join(&name))?);
        write_model(&mut w, &m.model)?;
        w.flush()?;
        members.push((m.config, name));
    }
    let fusion = PathBuf::from("fusion.bin");
    let mut w = BufWriter::new(File::create(dir.join(&fusion))?);
    write_fusion(&mut w, &model.fusion)?;
    w.flush()?;
    let path = dir.join("ensemble.txt");
    let mut w = BufWriter::new(File::create(&path)?);
    write_manifest(&mut w, &Manifest { members, fusion })?;
    w.flush()?;
    Ok(path)
}

pub fn load_ensemble(manifest: impl AsRef<Path>) -> Result<EnsembleModel> {
    let manifest = manifest.as_ref();
    let base = manifest.parent().unwrap_or(Path::new("."));
    let m = read_manifest(BufReader::new(File::open(manifest)?))?;
    let mut members = Vec::with_capacity(m.members.len());
    for (config, path) in m.members {
        let model = read_model(&mut BufReader::new(File::open(base.join(path))?))?;
        members.push(EnsembleMember { config, model });
    }
    let fusion = read_fusion(&mut BufReader::new(File::open(base.join(m.fusion))?))?;
    let width: usize = members.iter().map(|m| m.model.num_classes()).sum();
    if fusion.pca.dim_in() != width {
        return Err(FfError::format(format!(
            "fusion expects {} decision columns, members provide {width}",
            fusion.pca.dim_in()
        )));
    }
    Ok(EnsembleModel { members, fusion })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataio::ColorTag;
    use crate::ensemble::{build_diversity_configs, DiversityKind};
    use crate::numerics::SvmParams;
    use ndarray::Array2;

    #[test]
    fn fusion_round_trip() {
        let y: Vec<usize> = (0..30).map(|i| i % 3).collect();
        let d = Array2::from_shape_fn((30, 6), |(i, j)| ((i * 5 + j * 3) % 7) as f64 + (y[i] * j) as f64);
        let f = FusionModel::fit(d.view(), &y, 0.99, &SvmParams::default()).unwrap();
        let mut buf = Vec::new();
        write_fusion(&mut buf, &f).unwrap();
        let back = read_fusion(&mut buf.as_slice()).unwrap();
        assert_eq!(back, f);
        assert!(read_fusion(&mut &buf[..buf.len() - 1]).is_err());
    }

    #[test]
    fn manifest_round_trip() {
        let cfgs = build_diversity_configs(&[DiversityKind::T1, DiversityKind::T3], ColorTag::Gray).unwrap();
        let m = Manifest {
            members: cfgs
                .iter()
                .enumerate()
                .map(|(i, c)| (*c, PathBuf::from(format!("member-{i:02}.ffm"))))
                .collect(),
            fusion: "fusion.bin".into(),
        };
        let mut buf = Vec::new();
        write_manifest(&mut buf, &m).unwrap();
        assert!(String::from_utf8_lossy(&buf).starts_with("ffcnn-ensemble 1\nmember T1:FF-1:gray:gray"));
        assert_eq!(read_manifest(buf.as_slice()).unwrap(), m);
        assert!(read_manifest(&b"ffcnn-ensemble 2\n"[..]).is_err());
        assert!(read_manifest(&b"ffcnn-ensemble 1\nfusion f\n"[..]).is_err());
    }
}
