use nalgebra::{Matrix3, Vector3};

use crate::error::{Error, Result};

/// Similarity transform mapping row-vector points `x` onto `y` as
/// `s * x * R + t`.
#[derive(Debug, Clone, PartialEq)]
pub struct Procrustes {
    pub scale: f64,
    /// Proper rotation acting on row vectors.
    pub rotation: Matrix3<f64>,
    pub translation: Vector3<f64>,
    pub aligned: Vec<Vector3<f64>>,
    /// Mean Euclidean distance between `aligned` and the target points.
    pub residual: f64,
}

/// Relative size of the second singular value below which a centred point
/// set counts as collinear.
const COLLINEAR_TOL: f64 = 1e-10;

/// Least-squares similarity alignment of `x` onto `y` with a proper rotation.
///
/// Rejects mismatched or too-small sets and collinear `x`.
pub fn procrustes_align(x: &[Vector3<f64>], y: &[Vector3<f64>]) -> Result<Procrustes> {
    if x.len() != y.len() {
        return Err(Error::shape("procrustes point sets", x.len(), y.len()));
    }
    if x.len() < 3 {
        return Err(Error::Degenerate(format!("need at least 3 points, got {}", x.len())));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<Vector3<f64>>() / n;
    let my = y.iter().sum::<Vector3<f64>>() / n;

    let mut m = Matrix3::zeros();
    let mut cov_x = Matrix3::zeros();
    let mut norm_x = 0.0;
    for (a, b) in x.iter().zip(y) {
        let (a0, b0) = (a - mx, b - my);
        m += a0 * b0.transpose();
        cov_x += a0 * a0.transpose();
        norm_x += a0.norm_squared();
    }
    let sx = cov_x.symmetric_eigenvalues();
    let mut ev: Vec<f64> = sx.iter().map(|v| v.max(0.0).sqrt()).collect();
    ev.sort_by(|a, b| b.total_cmp(a));
    if !(ev[0] > 0.0) || ev[1] <= COLLINEAR_TOL * ev[0] {
        return Err(Error::Degenerate(format!(
            "points are collinear or coincident (singular values {:.3e}, {:.3e}, {:.3e})",
            ev[0], ev[1], ev[2]
        )));
    }

    if x == y {
        // Exact, without SVD roundoff.
        return Ok(Procrustes {
            scale: 1.0,
            rotation: Matrix3::identity(),
            translation: Vector3::zeros(),
            aligned: x.to_vec(),
            residual: 0.0,
        });
    }

    let svd = m.svd(true, true);
    let u = svd.u.expect("svd computes u");
    let v_t = svd.v_t.expect("svd computes v_t");
    let d = if (u * v_t).determinant() < 0.0 { -1.0 } else { 1.0 };
    // the correction goes on the smallest singular value
    let sv = svd.singular_values;
    let smallest = (0..3).min_by(|&a, &b| sv[a].total_cmp(&sv[b])).unwrap();
    let mut diag = Vector3::new(1.0, 1.0, 1.0);
    diag[smallest] = d;
    let rotation = u * Matrix3::from_diagonal(&diag) * v_t;
    let trace: f64 = (0..3).map(|i| sv[i] * diag[i]).sum();
    let scale = trace / norm_x;
    let translation = my - scale * (rotation.transpose() * mx);

    let aligned: Vec<Vector3<f64>> = x
        .iter()
        .map(|p| scale * (rotation.transpose() * p) + translation)
        .collect();
    let residual = aligned.iter().zip(y).map(|(a, b)| (a - b).norm()).sum::<f64>() / n;
    Ok(Procrustes {
        scale,
        rotation,
        translation,
        aligned,
        residual,
    })
}
