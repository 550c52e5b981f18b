//! File I/O: the native `.ctv` container and a minimal NIfTI-1 reader.
//!
//! A `.ctv` file is a single UTF-8 JSON header line (terminated by `\n`)
//! followed by raw little-endian `float32` voxels in C order. The header
//! carries `shape`, `spacing_mm`, `orientation`, `units`, `dtype`,
//! `byte_order`, and an optional free-form `meta` object.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use ndarray::{Array2, ArrayD, IxDyn};
use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::volume::{validate_orientation, Units, VolumeGrid};

#[derive(Debug, Clone, Serialize, Deserialize)]
struct CtvHeader {
    shape: Vec<usize>,
    spacing_mm: Vec<f64>,
    orientation: String,
    units: Units,
    dtype: String,
    byte_order: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    meta: Option<serde_json::Map<String, serde_json::Value>>,
}

/// An image of arbitrary rank (2 for slices, 3 for volumes) as stored in `.ctv`.
#[derive(Debug, Clone)]
pub struct CtvImage {
    pub data: ArrayD<f32>,
    pub spacing_mm: Vec<f64>,
    pub orientation: String,
    pub units: Units,
    pub meta: Option<serde_json::Map<String, serde_json::Value>>,
}

fn io_err(path: &Path, source: std::io::Error) -> CoreError {
    CoreError::Io {
        path: path.display().to_string(),
        source,
    }
}

pub fn write_ctv(path: impl AsRef<Path>, img: &CtvImage) -> Result<()> {
    let path = path.as_ref();
    let header = CtvHeader {
        shape: img.data.shape().to_vec(),
        spacing_mm: img.spacing_mm.clone(),
        orientation: img.orientation.clone(),
        units: img.units,
        dtype: "float32".to_string(),
        byte_order: "little".to_string(),
        meta: img.meta.clone(),
    };
    let mut w = BufWriter::new(File::create(path).map_err(|e| io_err(path, e))?);
    let json = serde_json::to_string(&header).expect("header serializes");
    w.write_all(json.as_bytes()).map_err(|e| io_err(path, e))?;
    w.write_all(b"\n").map_err(|e| io_err(path, e))?;
    let data = img
        .data
        .as_standard_layout();
    let mut buf = Vec::with_capacity(data.len() * 4);
    for &v in data.iter() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    w.write_all(&buf).map_err(|e| io_err(path, e))?;
    Ok(())
}

pub fn read_ctv(path: impl AsRef<Path>) -> Result<CtvImage> {
    let path = path.as_ref();
    let mut r = BufReader::new(File::open(path).map_err(|e| io_err(path, e))?);
    let mut header_bytes = Vec::new();
    let mut byte = [0u8; 1];
    loop {
        let n = r.read(&mut byte).map_err(|e| io_err(path, e))?;
        if n == 0 {
            return Err(CoreError::MalformedHeader {
                path: path.display().to_string(),
                reason: "missing newline after JSON header".into(),
            });
        }
        if byte[0] == b'\n' {
            break;
        }
        header_bytes.push(byte[0]);
        if header_bytes.len() > (1 << 20) {
            return Err(CoreError::MalformedHeader {
                path: path.display().to_string(),
                reason: "header exceeds 1 MiB".into(),
            });
        }
    }
    let header: CtvHeader =
        serde_json::from_slice(&header_bytes).map_err(|e| CoreError::MalformedHeader {
            path: path.display().to_string(),
            reason: e.to_string(),
        })?;
    if header.dtype != "float32" || header.byte_order != "little" {
        return Err(CoreError::MalformedHeader {
            path: path.display().to_string(),
            reason: format!(
                "unsupported dtype/byte_order: {}/{}",
                header.dtype, header.byte_order
            ),
        });
    }
    if header.shape.is_empty() || header.shape.len() > 3 {
        return Err(CoreError::MalformedHeader {
            path: path.display().to_string(),
            reason: format!("unsupported rank {}", header.shape.len()),
        });
    }
    if header.shape.len() != header.spacing_mm.len() {
        return Err(CoreError::MalformedHeader {
            path: path.display().to_string(),
            reason: "shape and spacing_mm rank mismatch".into(),
        });
    }
    let n: usize = header.shape.iter().product();
    let mut raw = vec![0u8; n * 4];
    r.read_exact(&mut raw).map_err(|e| io_err(path, e))?;
    let values: Vec<f32> = raw
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect();
    let data = ArrayD::from_shape_vec(IxDyn(&header.shape), values).map_err(|e| {
        CoreError::MalformedHeader {
            path: path.display().to_string(),
            reason: e.to_string(),
        }
    })?;
    Ok(CtvImage {
        data,
        spacing_mm: header.spacing_mm,
        orientation: header.orientation,
        units: header.units,
        meta: header.meta,
    })
}

impl VolumeGrid {
    pub fn to_ctv(&self) -> CtvImage {
        CtvImage {
            data: self.voxels.clone().into_dyn(),
            spacing_mm: self.spacing_mm.to_vec(),
            orientation: self.orientation.clone(),
            units: self.units,
            meta: None,
        }
    }

    pub fn from_ctv(img: CtvImage) -> Result<Self> {
        if img.data.ndim() != 3 {
            return Err(CoreError::Invalid(format!(
                "volume must be rank 3, got rank {}",
                img.data.ndim()
            )));
        }
        let shape = [img.data.shape()[0], img.data.shape()[1], img.data.shape()[2]];
        let voxels = img
            .data
            .into_shape_with_order(IxDyn(&shape))
            .unwrap()
            .into_dimensionality()
            .unwrap();
        VolumeGrid::new(
            voxels,
            [img.spacing_mm[0], img.spacing_mm[1], img.spacing_mm[2]],
            img.orientation,
            img.units,
        )
    }

    pub fn save_ctv(&self, path: impl AsRef<Path>) -> Result<()> {
        write_ctv(path, &self.to_ctv())
    }

    pub fn load_ctv(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_ctv(read_ctv(path)?)
    }
}

/// Loads a volume by extension: `.ctv`, `.nii`, or `.nii.gz`.
pub fn load_volume(path: impl AsRef<Path>) -> Result<VolumeGrid> {
    let path = path.as_ref();
    let name = path.file_name().and_then(|s| s.to_str()).unwrap_or("");
    if name.ends_with(".ctv") {
        VolumeGrid::load_ctv(path)
    } else if name.ends_with(".nii") || name.ends_with(".nii.gz") {
        read_nifti(path)
    } else {
        Err(CoreError::UnsupportedFormat(path.display().to_string()))
    }
}

// ---------------------------------------------------------------------------
// Minimal NIfTI-1 reader
// ---------------------------------------------------------------------------

fn f32_at(buf: &[u8], off: usize) -> f32 {
    f32::from_le_bytes([buf[off], buf[off + 1], buf[off + 2], buf[off + 3]])
}
fn i16_at(buf: &[u8], off: usize) -> i16 {
    i16::from_le_bytes([buf[off], buf[off + 1]])
}
fn i32_at(buf: &[u8], off: usize) -> i32 {
    i32::from_le_bytes([buf[off], buf[off + 1], buf[off + 2], buf[off + 3]])
}

/// Derives the orientation letter of one voxel axis from an affine column.
/// NIfTI world coordinates are RAS+: +x Right, +y Anterior, +z Superior.
fn axis_letter(col: [f64; 3]) -> char {
    let (mut best, mut best_abs) = (0usize, 0.0f64);
    for (r, &v) in col.iter().enumerate() {
        if v.abs() > best_abs {
            best_abs = v.abs();
            best = r;
        }
    }
    let pos = col[best] > 0.0;
    match (best, pos) {
        (0, true) => 'R',
        (0, false) => 'L',
        (1, true) => 'A',
        (1, false) => 'P',
        (2, true) => 'S',
        (2, false) => 'I',
        _ => unreachable!(),
    }
}

/// Reads a NIfTI-1 volume (`.nii` or `.nii.gz`), applying the scale slope and
/// intercept. Orientation is taken from the sform when present, the qform
/// otherwise; files without either are assumed to be LPS (CT convention).
pub fn read_nifti(path: impl AsRef<Path>) -> Result<VolumeGrid> {
    let path = path.as_ref();
    let mut file = File::open(path).map_err(|e| io_err(path, e))?;
    let mut bytes = Vec::new();
    let name = path.file_name().and_then(|s| s.to_str()).unwrap_or("");
    if name.ends_with(".gz") {
        let mut gz = flate2::read::GzDecoder::new(file);
        gz.read_to_end(&mut bytes).map_err(|e| io_err(path, e))?;
    } else {
        file.read_to_end(&mut bytes).map_err(|e| io_err(path, e))?;
    }

    let malformed = |reason: &str| CoreError::MalformedHeader {
        path: path.display().to_string(),
        reason: reason.to_string(),
    };
    if bytes.len() < 352 {
        return Err(malformed("file shorter than a NIfTI-1 header"));
    }
    let sizeof_hdr = i32_at(&bytes, 0);
    if sizeof_hdr != 348 {
        if sizeof_hdr.swap_bytes() == 348 {
            return Err(malformed("big-endian NIfTI files are not supported"));
        }
        return Err(malformed("sizeof_hdr != 348"));
    }
    let magic = &bytes[344..348];
    if magic != b"n+1\0" {
        return Err(malformed("only single-file NIfTI-1 (magic n+1) is supported"));
    }

    let ndim = i16_at(&bytes, 40) as usize;
    if ndim < 3 {
        return Err(malformed("fewer than 3 dimensions"));
    }
    let dims: Vec<usize> = (1..=ndim).map(|k| i16_at(&bytes, 40 + 2 * k) as usize).collect();
    if dims.iter().skip(3).any(|&d| d > 1) {
        return Err(malformed("4-D or higher volumes are not supported"));
    }
    let (nx, ny, nz) = (dims[0], dims[1], dims[2]);
    let datatype = i16_at(&bytes, 70);
    let pixdim: Vec<f64> = (1..=3).map(|k| f32_at(&bytes, 76 + 4 * k) as f64).collect();
    let vox_offset = f32_at(&bytes, 108) as usize;
    let scl_slope = f32_at(&bytes, 112);
    let scl_inter = f32_at(&bytes, 116);
    let slope = if scl_slope == 0.0 { 1.0 } else { scl_slope as f64 };
    let inter = scl_inter as f64;

    let n = nx * ny * nz;
    let data_bytes = &bytes[vox_offset..];
    let read_as = |elem: usize| -> Result<()> {
        if data_bytes.len() < n * elem {
            Err(malformed("data section truncated"))
        } else {
            Ok(())
        }
    };
    let values: Vec<f32> = match datatype {
        2 => {
            read_as(1)?;
            data_bytes[..n].iter().map(|&b| (b as f64 * slope + inter) as f32).collect()
        }
        4 => {
            read_as(2)?;
            data_bytes[..n * 2]
                .chunks_exact(2)
                .map(|c| (i16::from_le_bytes([c[0], c[1]]) as f64 * slope + inter) as f32)
                .collect()
        }
        8 => {
            read_as(4)?;
            data_bytes[..n * 4]
                .chunks_exact(4)
                .map(|c| (i32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64 * slope + inter) as f32)
                .collect()
        }
        16 => {
            read_as(4)?;
            data_bytes[..n * 4]
                .chunks_exact(4)
                .map(|c| (f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64 * slope + inter) as f32)
                .collect()
        }
        64 => {
            read_as(8)?;
            data_bytes[..n * 8]
                .chunks_exact(8)
                .map(|c| {
                    let v = f64::from_le_bytes([c[0], c[1], c[2], c[3], c[4], c[5], c[6], c[7]]);
                    (v * slope + inter) as f32
                })
                .collect()
        }
        512 => {
            read_as(2)?;
            data_bytes[..n * 2]
                .chunks_exact(2)
                .map(|c| (u16::from_le_bytes([c[0], c[1]]) as f64 * slope + inter) as f32)
                .collect()
        }
        other => return Err(malformed(&format!("unsupported datatype {other}"))),
    };

    let sform_code = i16_at(&bytes, 254);
    let orientation = if sform_code > 0 {
        // srow_x at 280, srow_y at 296, srow_z at 312 (each 4 floats).
        let mut cols = [[0.0f64; 3]; 3];
        for r in 0..3 {
            for c in 0..3 {
                cols[c][r] = f32_at(&bytes, 280 + r * 16 + 4 * c) as f64;
            }
        }
        (0..3).map(|c| axis_letter(cols[c])).collect()
    } else {
        "LPS".to_string()
    };
    validate_orientation(&orientation)
        .map_err(|_| malformed("could not derive a valid orientation"))?;

    // NIfTI stores x fastest; our (axial, coronal, sagittal) C-order array has
    // the same memory layout with shape (nz, ny, nx).
    let voxels = ndarray::Array3::from_shape_vec((nz, ny, nx), values)
        .map_err(|e| malformed(&e.to_string()))?;
    VolumeGrid::new(voxels, [pixdim[2], pixdim[1], pixdim[0]], orientation, Units::Hu)
}

/// Saves a 2-D slice as a rank-2 `.ctv` with slice metadata.
pub fn write_slice_ctv(
    path: impl AsRef<Path>,
    pixels: &Array2<f32>,
    source_volume_id: &str,
    slice_index: usize,
    crop_box: [usize; 4],
    units: Units,
) -> Result<()> {
    let mut meta = serde_json::Map::new();
    meta.insert("source_volume_id".into(), source_volume_id.into());
    meta.insert("slice_index".into(), slice_index.into());
    meta.insert(
        "crop_box".into(),
        serde_json::json!([crop_box[0], crop_box[1], crop_box[2], crop_box[3]]),
    );
    write_ctv(
        path,
        &CtvImage {
            data: pixels.clone().into_dyn(),
            spacing_mm: vec![1.5, 1.5],
            orientation: "LPS".into(),
            units,
            meta: Some(meta),
        },
    )
}
