//! Automated quality-control screening for raw volumes.
//!
//! Rules are deterministic functions of the volume and are all evaluated
//! regardless of order; a reject lists every rule that fired.

use serde::{Deserialize, Serialize};

use crate::volume::{Units, VolumeGrid};

/// Minimum number of axial slices.
pub const MIN_AXIAL_SLICES: usize = 8;
/// Maximum in-plane spacing in millimetres.
pub const MAX_IN_PLANE_SPACING_MM: f64 = 10.0;
/// Minimum axial-to-coronal physical extent ratio (scout/localizer guard).
pub const MIN_EXTENT_RATIO: f64 = 1.0 / 3.0;
/// Pre-normalized heuristic: |max| bound and sample-std window while units=HU.
pub const PRENORM_MAX_ABS: f64 = 5.0;
pub const PRENORM_STD_RANGE: (f64, f64) = (0.5, 2.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QcVerdict {
    Accept,
    Reject,
}

/// One fired rule with the measured value that triggered it.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QcReason {
    pub rule: String,
    pub measured: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QcReport {
    pub verdict: QcVerdict,
    pub reasons: Vec<QcReason>,
}

impl QcReport {
    pub fn accepted(&self) -> bool {
        self.verdict == QcVerdict::Accept
    }
}

fn mean_std(vox: &ndarray::Array3<f32>) -> (f64, f64) {
    let n = vox.len() as f64;
    let mean = vox.iter().map(|&v| v as f64).sum::<f64>() / n;
    let var = vox.iter().map(|&v| (v as f64 - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Screens a loaded volume against the degenerate-geometry and
/// intensity-audit rules. Malformed headers are load errors upstream,
/// never a QC reject.
pub fn qc_screen(vol: &VolumeGrid) -> QcReport {
    let mut reasons = Vec::new();
    let shape = vol.shape();

    if shape[0] < MIN_AXIAL_SLICES {
        reasons.push(QcReason {
            rule: "min_slices".into(),
            measured: shape[0] as f64,
        });
    }

    let in_plane = vol.spacing_mm[1].max(vol.spacing_mm[2]);
    if in_plane > MAX_IN_PLANE_SPACING_MM {
        reasons.push(QcReason {
            rule: "in_plane_spacing".into(),
            measured: in_plane,
        });
    }

    let ext = vol.extent_mm();
    if ext[1] > 0.0 {
        let ratio = ext[0] / ext[1];
        if ratio < MIN_EXTENT_RATIO {
            reasons.push(QcReason {
                rule: "extent_ratio".into(),
                measured: ratio,
            });
        }
    }

    let mut min = f32::INFINITY;
    let mut max = f32::NEG_INFINITY;
    let mut binary = true;
    for &v in vol.voxels.iter() {
        min = min.min(v);
        max = max.max(v);
        if v != 0.0 && v != 1.0 {
            binary = false;
        }
    }
    if !vol.voxels.is_empty() && binary {
        reasons.push(QcReason {
            rule: "binary_mask".into(),
            measured: max as f64,
        });
    }
    if !vol.voxels.is_empty() && min == max {
        reasons.push(QcReason {
            rule: "constant_array".into(),
            measured: min as f64,
        });
    }

    if vol.units == Units::Hu && !vol.voxels.is_empty() {
        let abs_max = (min.abs().max(max.abs())) as f64;
        let (_, std) = mean_std(&vol.voxels);
        if abs_max <= PRENORM_MAX_ABS && std >= PRENORM_STD_RANGE.0 && std <= PRENORM_STD_RANGE.1 {
            reasons.push(QcReason {
                rule: "pre_normalized".into(),
                measured: std,
            });
        }
    }

    QcReport {
        verdict: if reasons.is_empty() {
            QcVerdict::Accept
        } else {
            QcVerdict::Reject
        },
        reasons,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array3;
    use rand::Rng;
    use rand::SeedableRng;

    fn plausible_ct(shape: (usize, usize, usize)) -> VolumeGrid {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let voxels = Array3::from_shape_simple_fn(shape, || rng.gen_range(-1000.0f32..400.0));
        VolumeGrid::new(voxels, [1.0, 1.0, 1.0], "LPS", Units::Hu).unwrap()
    }

    #[test]
    fn plausible_volume_is_accepted() {
        let report = qc_screen(&plausible_ct((100, 100, 100)));
        assert!(report.accepted(), "reasons: {:?}", report.reasons);
    }

    #[test]
    fn seven_slices_reject_min_slices() {
        let report = qc_screen(&plausible_ct((7, 100, 100)));
        assert!(!report.accepted());
        assert!(report.reasons.iter().any(|r| r.rule == "min_slices"));
    }

    #[test]
    fn binary_mask_rejected() {
        let mut vol = plausible_ct((20, 20, 20));
        vol.voxels.mapv_inplace(|v| if v > -300.0 { 1.0 } else { 0.0 });
        let report = qc_screen(&vol);
        assert!(report.reasons.iter().any(|r| r.rule == "binary_mask"));
    }

    #[test]
    fn constant_volume_rejected() {
        let mut vol = plausible_ct((20, 20, 20));
        vol.voxels.fill(37.0);
        let report = qc_screen(&vol);
        assert!(report.reasons.iter().any(|r| r.rule == "constant_array"));
    }

    #[test]
    fn coarse_in_plane_spacing_rejected() {
        let mut vol = plausible_ct((20, 20, 20));
        vol.spacing_mm = [1.0, 12.0, 1.0];
        let report = qc_screen(&vol);
        assert!(report.reasons.iter().any(|r| r.rule == "in_plane_spacing"));
    }

    #[test]
    fn scout_extent_ratio_rejected() {
        // 8 thin slices over a wide field of view: axial extent 7 mm vs 99 mm.
        let mut vol = plausible_ct((8, 100, 100));
        vol.spacing_mm = [1.0, 1.0, 1.0];
        let report = qc_screen(&vol);
        assert!(report.reasons.iter().any(|r| r.rule == "extent_ratio"));
    }

    #[test]
    fn prenormalized_heuristic_fires_on_unit_scale_hu() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let voxels = Array3::from_shape_simple_fn((20, 20, 20), || rng.gen_range(-2.0f32..2.0));
        let vol = VolumeGrid::new(voxels, [1.0, 1.0, 1.0], "LPS", Units::Hu).unwrap();
        let report = qc_screen(&vol);
        assert!(report.reasons.iter().any(|r| r.rule == "pre_normalized"));

        // The same values flagged as already normalized pass.
        let mut vol2 = vol.clone();
        vol2.units = Units::Normalized;
        assert!(qc_screen(&vol2).accepted());
    }

    #[test]
    fn reject_always_carries_a_reason() {
        let report = qc_screen(&plausible_ct((7, 100, 100)));
        assert!(!report.accepted());
        assert!(!report.reasons.is_empty());
    }
}
