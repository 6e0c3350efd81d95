//! Euler/quaternion conversions and gravity projection.
//!
//! Euler angles are intrinsic Z-Y-X radians: yaw about z (`euler[2]`), then
//! pitch about the new y (`euler[1]`), then roll about the new x (`euler[0]`).
//! Quaternions are stored as `[x, y, z, w]`.

use thiserror::Error;

pub type Vec3 = [f64; 3];
pub type Quaternion = [f64; 4];

pub const IDENTITY_QUATERNION: Quaternion = [0.0, 0.0, 0.0, 1.0];

/// Standard gravity in m/s².
pub const STANDARD_GRAVITY: f64 = 9.80665;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OrientationError {
    #[error("non-finite {0} component")]
    NonFinite(&'static str),
    #[error("zero quaternion has no inverse")]
    ZeroQuaternion,
    #[error("gravity magnitude must be positive, got {0}")]
    NonPositiveGravity(f64),
}

fn check_finite(values: &[f64], what: &'static str) -> Result<(), OrientationError> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(OrientationError::NonFinite(what))
    }
}

/// Unit quaternion for an intrinsic Z-Y-X Euler triple, with `w >= 0`.
pub fn euler_to_quaternion(euler: Vec3) -> Result<Quaternion, OrientationError> {
    check_finite(&euler, "euler")?;
    let [roll, pitch, yaw] = euler;
    let (sr, cr) = (roll * 0.5).sin_cos();
    let (sp, cp) = (pitch * 0.5).sin_cos();
    let (sy, cy) = (yaw * 0.5).sin_cos();

    let mut q = [
        sr * cp * cy - cr * sp * sy,
        cr * sp * cy + sr * cp * sy,
        cr * cp * sy - sr * sp * cy,
        cr * cp * cy + sr * sp * sy,
    ];
    let norm = q.iter().map(|v| v * v).sum::<f64>().sqrt();
    let sign = if q[3] < 0.0 { -1.0 } else { 1.0 };
    for v in &mut q {
        *v *= sign / norm;
    }
    Ok(q)
}

/// Hamilton product `a ⊗ b`.
pub fn hamilton_product(a: Quaternion, b: Quaternion) -> Quaternion {
    let [ax, ay, az, aw] = a;
    let [bx, by, bz, bw] = b;
    [
        aw * bx + ax * bw + ay * bz - az * by,
        aw * by - ax * bz + ay * bw + az * bx,
        aw * bz + ax * by - ay * bx + az * bw,
        aw * bw - ax * bx - ay * by - az * bz,
    ]
}

/// Multiplicative inverse: conjugate divided by the squared norm.
pub fn quaternion_inverse(q: Quaternion) -> Result<Quaternion, OrientationError> {
    check_finite(&q, "quaternion")?;
    let norm_sq: f64 = q.iter().map(|v| v * v).sum();
    if norm_sq == 0.0 {
        return Err(OrientationError::ZeroQuaternion);
    }
    Ok([-q[0] / norm_sq, -q[1] / norm_sq, -q[2] / norm_sq, q[3] / norm_sq])
}

/// World gravity `(0, 0, -g)` expressed in the device frame for the given
/// orientation.
pub fn gravity_from_euler(euler: Vec3, g: f64) -> Result<Vec3, OrientationError> {
    check_finite(&euler, "euler")?;
    if !(g > 0.0 && g.is_finite()) {
        return Err(OrientationError::NonPositiveGravity(g));
    }
    let [roll, pitch, _] = euler;
    let (sr, cr) = roll.sin_cos();
    let (sp, cp) = pitch.sin_cos();
    // Third row of R = Rz·Ry·Rx, scaled by -g. Yaw does not affect it.
    Ok([g * sp, -g * cp * sr, -g * cp * cr])
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, PI, SQRT_2};

    fn assert_close(a: &[f64], b: &[f64], tol: f64) {
        for (x, y) in a.iter().zip(b) {
            assert!((x - y).abs() <= tol, "{a:?} vs {b:?}");
        }
    }

    #[test]
    fn identity_euler() {
        assert_eq!(euler_to_quaternion([0.0; 3]).unwrap(), IDENTITY_QUATERNION);
    }

    #[test]
    fn half_turn_roll_and_quarter_yaw() {
        assert_close(&euler_to_quaternion([PI, 0.0, 0.0]).unwrap(), &[1.0, 0.0, 0.0, 0.0], 1e-12);
        let h = SQRT_2 / 2.0;
        assert_close(&euler_to_quaternion([0.0, 0.0, FRAC_PI_2]).unwrap(), &[0.0, 0.0, h, h], 1e-12);
    }

    #[test]
    fn canonical_sign() {
        // yaw of 5π/2 produces a negative w before canonicalization
        let q = euler_to_quaternion([0.0, 0.0, 2.5 * PI]).unwrap();
        assert!(q[3] >= 0.0);
    }

    #[test]
    fn inverse_examples() {
        assert_eq!(quaternion_inverse(IDENTITY_QUATERNION).unwrap(), IDENTITY_QUATERNION);
        assert_eq!(quaternion_inverse([0.0, 0.0, 0.0, 2.0]).unwrap(), [0.0, 0.0, 0.0, 0.5]);
        assert_eq!(quaternion_inverse([1.0, 0.0, 0.0, 0.0]).unwrap(), [-1.0, 0.0, 0.0, 0.0]);
        assert_eq!(quaternion_inverse([0.0; 4]), Err(OrientationError::ZeroQuaternion));
    }

    #[test]
    fn gravity_examples() {
        assert_eq!(gravity_from_euler([0.0; 3], STANDARD_GRAVITY).unwrap(), [0.0, 0.0, -STANDARD_GRAVITY]);
        assert_close(&gravity_from_euler([PI, 0.0, 0.0], STANDARD_GRAVITY).unwrap(), &[0.0, 0.0, STANDARD_GRAVITY], 1e-12);
        assert!(gravity_from_euler([0.0; 3], 0.0).is_err());
    }

    #[test]
    fn non_finite_inputs_rejected() {
        assert_eq!(euler_to_quaternion([f64::NAN, 0.0, 0.0]), Err(OrientationError::NonFinite("euler")));
        assert!(gravity_from_euler([0.0, f64::INFINITY, 0.0], 9.8).is_err());
        assert!(quaternion_inverse([0.0, 0.0, f64::NAN, 1.0]).is_err());
    }
}
