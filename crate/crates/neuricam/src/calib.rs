//! Calibration files.
//!
//! A calibration maps the low-resolution sensor's pixel coordinates into
//! the key sensor's (high-resolution) plane, as either an explicit 3x3
//! matrix or four matched point pairs to estimate one from. The warp the
//! pipeline actually applies stays in low-resolution coordinates, so the
//! file's homography is conjugated down by the sensor scale:
//! `warp = S^-1 * H` with `S = diag(scale, scale, 1)`.

use std::fs;
use std::path::Path;

use neuricam_core::geometry::Homography;
use serde::Deserialize;

use crate::error::{CliError, CliResult};

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum CalibFile {
    Matrix { matrix: [[f64; 3]; 3] },
    Points { src: [[f64; 2]; 4], dst: [[f64; 2]; 4] },
}

/// Load the calibration homography (low-res plane to key plane).
pub fn load_calibration(path: &Path) -> CliResult<Homography> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let file: CalibFile = serde_json::from_str(&text)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let h = match file {
        CalibFile::Matrix { matrix } => Homography::new(matrix)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?,
        CalibFile::Points { src, dst } => {
            let to_pairs =
                |p: [[f64; 2]; 4]| [(p[0][0], p[0][1]), (p[1][0], p[1][1]), (p[2][0], p[2][1]), (p[3][0], p[3][1])];
            Homography::from_points(&to_pairs(src), &to_pairs(dst))
                .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?
        }
    };
    Ok(h)
}

/// The warp applied to low-resolution frames for a calibration `h` at the
/// given sensor scale.
pub fn warp_for_scale(h: &Homography, scale: usize) -> CliResult<Homography> {
    let s_inv = Homography::scaling(1.0 / scale as f64);
    Ok(s_inv.compose(h)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(dir: &Path, name: &str, text: &str) -> std::path::PathBuf {
        let p = dir.join(name);
        fs::write(&p, text).unwrap();
        p
    }

    #[test]
    fn matrix_form_loads() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(
            dir.path(),
            "m.json",
            r#"{"matrix": [[1.0, 0.0, 2.0], [0.0, 1.0, -1.0], [0.0, 0.0, 1.0]]}"#,
        );
        let h = load_calibration(&p).unwrap();
        assert_eq!(h.apply(3.0, 4.0).unwrap(), (5.0, 3.0));
    }

    #[test]
    fn point_form_estimates() {
        let dir = tempfile::tempdir().unwrap();
        // Pure upscale by 4: the identity cross-sensor mapping.
        let p = write(
            dir.path(),
            "p.json",
            r#"{"src": [[0,0],[100,0],[100,80],[0,80]],
                "dst": [[0,0],[400,0],[400,320],[0,320]]}"#,
        );
        let h = load_calibration(&p).unwrap();
        let diff = h.max_abs_diff(&Homography::scaling(4.0));
        assert!(diff < 1e-9, "{diff}");
    }

    #[test]
    fn scale_conjugation_turns_pure_upscale_into_identity() {
        let h = Homography::scaling(4.0);
        let warp = warp_for_scale(&h, 4).unwrap();
        assert!(warp.max_abs_diff(&Homography::identity()) < 1e-12);
        // A 4-pixel shift in the key plane is a 1-pixel shift at low res.
        let shifted = Homography::translation(4.0, 0.0)
            .compose(&Homography::scaling(4.0))
            .unwrap();
        let warp = warp_for_scale(&shifted, 4).unwrap();
        assert!(warp.max_abs_diff(&Homography::translation(1.0, 0.0)) < 1e-12);
    }

    #[test]
    fn malformed_file_is_config_error() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), "bad.json", r#"{"matrix": [[1, 2], [3, 4]]}"#);
        let err = load_calibration(&p).unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }
}
