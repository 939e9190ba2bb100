//! `SAAB` container, little-endian:
//!
//! ```text
//! b"SAAB" | u32 version | u32 H | u32 W | u32 C | u32 stages
//! per stage: u32 kh | u32 kw | u32 stride | u32 in_ch | u32 k | u8 pool
//!            | f64 bias | k·n f64 kernels (row-major, DC first)
//! u32 channels | u32 s | u32 s'
//! per channel: s f64 mean | s'·s f64 components | s' f64 eigenvalues
//! ```

use std::io::{Read, Write};

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use ndarray::{Array1, Array2};

use super::cpca::CpcaModel;
use super::layer::SaabLayer;
use super::patches::Window;
use super::pipeline::{SaabPipeline, SaabStage};
use crate::numerics::PcaModel;
use crate::{FfError, Result};

pub const SAAB_MAGIC: &[u8; 4] = b"SAAB";
pub const SAAB_VERSION: u32 = 1;

pub(crate) fn write_u32(w: &mut impl Write, v: usize) -> Result<()> {
    let v = u32::try_from(v).map_err(|_| FfError::dim("value exceeds u32"))?;
    w.write_u32::<LittleEndian>(v)?;
    Ok(())
}

pub(crate) fn read_u32(r: &mut impl Read) -> Result<usize> {
    Ok(r.read_u32::<LittleEndian>()? as usize)
}

pub(crate) fn write_f64s<'a>(w: &mut impl Write, values: impl IntoIterator<Item = &'a f64>) -> Result<()> {
    for &v in values {
        w.write_f64::<LittleEndian>(v)?;
    }
    Ok(())
}

pub(crate) fn read_matrix(r: &mut impl Read, rows: usize, cols: usize) -> Result<Array2<f64>> {
    let mut v = vec![0.0; rows * cols];
    r.read_f64_into::<LittleEndian>(&mut v)?;
    Array2::from_shape_vec((rows, cols), v).map_err(|e| FfError::format(e.to_string()))
}

pub(crate) fn read_vector(r: &mut impl Read, len: usize) -> Result<Array1<f64>> {
    let mut v = vec![0.0; len];
    r.read_f64_into::<LittleEndian>(&mut v)?;
    Ok(Array1::from(v))
}

pub(crate) fn expect_magic(r: &mut impl Read, magic: &[u8; 4]) -> Result<()> {
    let mut got = [0u8; 4];
    r.read_exact(&mut got)?;
    if &got != magic {
        return Err(FfError::format(format!(
            "expected magic {:?}, found {:?}",
            String::from_utf8_lossy(magic),
            String::from_utf8_lossy(&got)
        )));
    }
    Ok(())
}

pub(crate) fn write_pca(w: &mut impl Write, m: &PcaModel) -> Result<()> {
    write_f64s(w, m.mean.iter())?;
    write_f64s(w, m.components.iter())?;
    write_f64s(w, m.eigenvalues.iter())
}

pub(crate) fn read_pca(r: &mut impl Read, d: usize, k: usize) -> Result<PcaModel> {
    Ok(PcaModel {
        mean: read_vector(r, d)?,
        components: read_matrix(r, k, d)?,
        eigenvalues: read_vector(r, k)?,
    })
}

pub fn write_pipeline(w: &mut impl Write, p: &SaabPipeline) -> Result<()> {
    w.write_all(SAAB_MAGIC)?;
    w.write_u32::<LittleEndian>(SAAB_VERSION)?;
    let (h, wd, c) = p.input_shape;
    for v in [h, wd, c, p.stages.len()] {
        write_u32(w, v)?;
    }
    for st in &p.stages {
        let win = st.layer.window;
        for v in [win.height, win.width, win.stride, win.in_channels, st.layer.num_kernels()] {
            write_u32(w, v)?;
        }
        w.write_u8(u8::from(st.pool))?;
        w.write_f64::<LittleEndian>(st.layer.bias)?;
        write_f64s(w, st.layer.kernels.iter())?;
    }
    let cp = &p.cpca;
    for v in [cp.channels.len(), cp.spatial_dim, cp.reduced_dim] {
        write_u32(w, v)?;
    }
    for m in &cp.channels {
        write_pca(w, m)?;
    }
    Ok(())
}

pub fn read_pipeline(r: &mut impl Read) -> Result<SaabPipeline> {
    expect_magic(r, SAAB_MAGIC)?;
    let version = r.read_u32::<LittleEndian>()?;
    if version != SAAB_VERSION {
        return Err(FfError::format(format!("unsupported SAAB version {version}")));
    }
    let input_shape = (read_u32(r)?, read_u32(r)?, read_u32(r)?);
    let n_stages = read_u32(r)?;
    let mut stages = Vec::with_capacity(n_stages);
    for _ in 0..n_stages {
        let window = Window {
            height: read_u32(r)?,
            width: read_u32(r)?,
            stride: read_u32(r)?,
            in_channels: read_u32(r)?,
        };
        let k = read_u32(r)?;
        let pool = r.read_u8()? != 0;
        let bias = r.read_f64::<LittleEndian>()?;
        let kernels = read_matrix(r, k, window.patch_len())?;
        stages.push(SaabStage {
            layer: SaabLayer {
                window,
                kernels,
                bias,
                ac_energy: Array1::zeros(k.saturating_sub(1)),
            },
            pool,
        });
    }
    let (channels, spatial_dim, reduced_dim) = (read_u32(r)?, read_u32(r)?, read_u32(r)?);
    let models = (0..channels)
        .map(|_| read_pca(r, spatial_dim, reduced_dim))
        .collect::<Result<Vec<_>>>()?;
    Ok(SaabPipeline {
        input_shape,
        stages,
        cpca: CpcaModel {
            channels: models,
            spatial_dim,
            reduced_dim,
        },
    })
}
