//! `SSL1` container, little-endian, written right after a `SAAB` blob in a
//! model file:
//!
//! ```text
//! b"SSL1" | u32 version | u32 classes | u32 stages
//! per stage: u32 rows (d + 1) | u32 cols | u8 relu | rows·cols f64 (row-major)
//! per intermediate stage: u32 selected unlabeled count
//! ```

use std::io::{Read, Write};

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};

use super::model::{SslClassifier, SslFfcnnModel};
use super::stage::LsrStage;
use crate::saab::io::{expect_magic, read_matrix, read_u32, write_f64s, write_u32};
use crate::saab::{read_pipeline, write_pipeline};
use crate::{FfError, Result};

pub const SSL_MAGIC: &[u8; 4] = b"SSL1";
pub const SSL_VERSION: u32 = 1;

pub fn write_classifier(w: &mut impl Write, c: &SslClassifier) -> Result<()> {
    w.write_all(SSL_MAGIC)?;
    w.write_u32::<LittleEndian>(SSL_VERSION)?;
    write_u32(w, c.num_classes)?;
    write_u32(w, c.stages.len())?;
    for st in &c.stages {
        write_u32(w, st.weights.nrows())?;
        write_u32(w, st.weights.ncols())?;
        w.write_u8(u8::from(st.apply_relu))?;
        write_f64s(w, st.weights.iter())?;
    }
    for &n in &c.selected_counts {
        write_u32(w, n)?;
    }
    Ok(())
}

pub fn read_classifier(r: &mut impl Read) -> Result<SslClassifier> {
    expect_magic(r, SSL_MAGIC)?;
    let version = r.read_u32::<LittleEndian>()?;
    if version != SSL_VERSION {
        return Err(FfError::format(format!("unsupported SSL1 version {version}")));
    }
    let num_classes = read_u32(r)?;
    let n = read_u32(r)?;
    if n == 0 {
        return Err(FfError::format("classifier without stages"));
    }
    let mut stages = Vec::with_capacity(n);
    for i in 0..n {
        let (rows, cols) = (read_u32(r)?, read_u32(r)?);
        if rows < 2 || cols == 0 {
            return Err(FfError::format(format!("stage {i} has shape {rows}x{cols}")));
        }
        if let Some(prev) = stages.last().map(LsrStage::output_dim) {
            if prev + 1 != rows {
                return Err(FfError::format(format!(
                    "stage {i} expects {} inputs but the previous stage emits {prev}",
                    rows - 1
                )));
            }
        }
        let apply_relu = r.read_u8()? != 0;
        stages.push(LsrStage {
            weights: read_matrix(r, rows, cols)?,
            apply_relu,
        });
    }
    if stages.last().map(LsrStage::output_dim) != Some(num_classes) {
        return Err(FfError::format("last stage width differs from the class count"));
    }
    let selected_counts = (0..n - 1).map(|_| read_u32(r)).collect::<Result<_>>()?;
    Ok(SslClassifier {
        stages,
        num_classes,
        selected_counts,
    })
}

pub fn write_model(w: &mut impl Write, m: &SslFfcnnModel) -> Result<()> {
    write_pipeline(w, &m.pipeline)?;
    write_classifier(w, &m.classifier)
}

pub fn read_model(r: &mut impl Read) -> Result<SslFfcnnModel> {
    let pipeline = read_pipeline(r)?;
    let classifier = read_classifier(r)?;
    SslFfcnnModel::new(pipeline, classifier).map_err(|e| FfError::format(e.to_string()))
}
