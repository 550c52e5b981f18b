//! The in-memory volume container and its orientation conventions.
//!
//! A [`VolumeGrid`] stores voxels in a rank-3 array ordered
//! `(axial, coronal, sagittal)`, i.e. axis 0 indexes axial slices. The
//! orientation code is a 3-letter string in radiological `(x, y, z)` order:
//! position 0 names the direction of increasing sagittal index (`L`/`R`),
//! position 1 the coronal index (`P`/`A`), position 2 the axial index
//! (`S`/`I`). The canonical orientation is [`CANONICAL_ORIENTATION`] (`LPS`).

use ndarray::{Array3, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};

/// Canonical anatomical orientation: x increases to the patient's Left,
/// y to Posterior, z to Superior.
pub const CANONICAL_ORIENTATION: &str = "LPS";

/// Intensity unit flag for a volume.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Units {
    #[serde(rename = "HU")]
    Hu,
    #[serde(rename = "normalized")]
    Normalized,
}

/// A 3D voxel grid with spacing, orientation, and unit metadata.
#[derive(Debug, Clone)]
pub struct VolumeGrid {
    /// Voxels in `(axial, coronal, sagittal)` axis order.
    pub voxels: Array3<f32>,
    /// Per-axis spacing in millimetres, in array-axis order (axial, coronal, sagittal).
    pub spacing_mm: [f64; 3],
    /// 3-letter orientation code in `(x, y, z)` order; see module docs.
    pub orientation: String,
    pub units: Units,
}

impl VolumeGrid {
    pub fn new(
        voxels: Array3<f32>,
        spacing_mm: [f64; 3],
        orientation: impl Into<String>,
        units: Units,
    ) -> Result<Self> {
        let orientation = orientation.into();
        validate_orientation(&orientation)?;
        if spacing_mm.iter().any(|&s| !(s > 0.0) || !s.is_finite()) {
            return Err(CoreError::InvalidSpacing(spacing_mm.to_vec()));
        }
        Ok(Self {
            voxels,
            spacing_mm,
            orientation,
            units,
        })
    }

    pub fn shape(&self) -> [usize; 3] {
        let s = self.voxels.shape();
        [s[0], s[1], s[2]]
    }

    /// Physical extent per array axis in millimetres, measured between the
    /// first and last sample point (endpoint-inclusive grid).
    pub fn extent_mm(&self) -> [f64; 3] {
        let s = self.shape();
        [
            (s[0].saturating_sub(1)) as f64 * self.spacing_mm[0],
            (s[1].saturating_sub(1)) as f64 * self.spacing_mm[1],
            (s[2].saturating_sub(1)) as f64 * self.spacing_mm[2],
        ]
    }

    /// Number of axial slices (array axis 0).
    pub fn axial_slices(&self) -> usize {
        self.voxels.shape()[0]
    }

    /// Reorients voxels, spacing, and code to [`CANONICAL_ORIENTATION`].
    pub fn reorient_to_canonical(&self) -> Result<VolumeGrid> {
        reorient(self, CANONICAL_ORIENTATION)
    }
}

/// Anatomical axis family of one orientation letter.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Family {
    LeftRight,
    PostAnt,
    SupInf,
}

fn letter_family(c: char) -> Option<(Family, bool)> {
    // bool: true when the letter matches the canonical positive direction
    // of its family (L, P, S).
    match c {
        'L' => Some((Family::LeftRight, true)),
        'R' => Some((Family::LeftRight, false)),
        'P' => Some((Family::PostAnt, true)),
        'A' => Some((Family::PostAnt, false)),
        'S' => Some((Family::SupInf, true)),
        'I' => Some((Family::SupInf, false)),
        _ => None,
    }
}

pub(crate) fn validate_orientation(code: &str) -> Result<()> {
    let chars: Vec<char> = code.chars().collect();
    if chars.len() != 3 {
        return Err(CoreError::InvalidOrientation(code.to_string()));
    }
    let mut seen = [false; 3];
    for &c in &chars {
        let (fam, _) = letter_family(c).ok_or_else(|| CoreError::InvalidOrientation(code.to_string()))?;
        let idx = fam as usize;
        if seen[idx] {
            return Err(CoreError::InvalidOrientation(code.to_string()));
        }
        seen[idx] = true;
    }
    Ok(())
}

/// Code position `p` (x=0, y=1, z=2) maps to array axis `2 - p`.
fn code_pos_to_axis(p: usize) -> usize {
    2 - p
}

/// Permutes and flips array axes so the orientation code becomes `target`.
pub fn reorient(vol: &VolumeGrid, target: &str) -> Result<VolumeGrid> {
    validate_orientation(&vol.orientation)?;
    validate_orientation(target)?;
    if vol.orientation == target {
        return Ok(vol.clone());
    }
    let src: Vec<char> = vol.orientation.chars().collect();
    let dst: Vec<char> = target.chars().collect();

    // For each target code position, locate the source position carrying the
    // same anatomical family and whether the direction must be flipped.
    let mut perm = [0usize; 3]; // target array axis -> source array axis
    let mut flip = [false; 3];
    for (pt, &dc) in dst.iter().enumerate() {
        let (dfam, dsign) = letter_family(dc).unwrap();
        let (ps, ssign) = src
            .iter()
            .enumerate()
            .find_map(|(ps, &sc)| {
                let (sfam, ssign) = letter_family(sc).unwrap();
                (sfam == dfam).then_some((ps, ssign))
            })
            .expect("validated codes cover all families");
        let ta = code_pos_to_axis(pt);
        let sa = code_pos_to_axis(ps);
        perm[ta] = sa;
        flip[ta] = dsign != ssign;
    }

    let mut voxels = vol.voxels.clone().permuted_axes(perm);
    for (axis, &f) in flip.iter().enumerate() {
        if f {
            voxels.invert_axis(Axis(axis));
        }
    }
    let voxels = voxels.as_standard_layout().to_owned();
    let spacing_mm = [
        vol.spacing_mm[perm[0]],
        vol.spacing_mm[perm[1]],
        vol.spacing_mm[perm[2]],
    ];
    Ok(VolumeGrid {
        voxels,
        spacing_mm,
        orientation: target.to_string(),
        units: vol.units,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array3;

    fn seq_volume(shape: (usize, usize, usize)) -> Array3<f32> {
        let n = shape.0 * shape.1 * shape.2;
        Array3::from_shape_vec(shape, (0..n).map(|v| v as f32).collect()).unwrap()
    }

    #[test]
    fn reorient_identity_is_noop() {
        let v = VolumeGrid::new(seq_volume((2, 3, 4)), [1.0, 2.0, 3.0], "LPS", Units::Hu).unwrap();
        let r = v.reorient_to_canonical().unwrap();
        assert_eq!(r.voxels, v.voxels);
        assert_eq!(r.spacing_mm, v.spacing_mm);
    }

    #[test]
    fn reorient_flips_single_axis() {
        // RPS differs from LPS only in the x (sagittal) direction: axis 2 reverses.
        let v = VolumeGrid::new(seq_volume((2, 3, 4)), [1.0, 1.0, 1.0], "RPS", Units::Hu).unwrap();
        let r = v.reorient_to_canonical().unwrap();
        assert_eq!(r.orientation, "LPS");
        for z in 0..2 {
            for y in 0..3 {
                for x in 0..4 {
                    assert_eq!(r.voxels[[z, y, x]], v.voxels[[z, y, 3 - x]]);
                }
            }
        }
    }

    #[test]
    fn reorient_permutes_axes_and_spacing() {
        // SPL: x-position carries S (axial family), z-position carries L (sagittal).
        // Array axes swap 0 <-> 2.
        let v = VolumeGrid::new(seq_volume((2, 3, 4)), [1.0, 2.0, 3.0], "SPL", Units::Hu).unwrap();
        let r = v.reorient_to_canonical().unwrap();
        assert_eq!(r.shape(), [4, 3, 2]);
        assert_eq!(r.spacing_mm, [3.0, 2.0, 1.0]);
        assert_eq!(r.voxels[[1, 2, 0]], v.voxels[[0, 2, 1]]);
    }

    #[test]
    fn reorient_round_trip_restores_volume() {
        let v = VolumeGrid::new(seq_volume((3, 4, 5)), [1.0, 2.0, 3.0], "RAI", Units::Hu).unwrap();
        let canon = v.reorient_to_canonical().unwrap();
        let back = reorient(&canon, "RAI").unwrap();
        assert_eq!(back.voxels, v.voxels);
        assert_eq!(back.spacing_mm, v.spacing_mm);
    }

    #[test]
    fn invalid_codes_rejected() {
        assert!(validate_orientation("LLS").is_err());
        assert!(validate_orientation("LP").is_err());
        assert!(validate_orientation("XYZ").is_err());
        assert!(validate_orientation("LPSS").is_err());
    }
}
