//! Response normalization of pooled rows.
//!
//! Each pooled location `z` is rescaled to `z * (1 + |z|^2)^(-1/2)`. Unlike
//! plain unit normalization this is smooth at zero (the zero vector stays
//! zero) and keeps the output norm strictly below one.

/// Normalizes one pooled row in place.
pub fn response_normalize(row: &mut [f64]) {
    let sq: f64 = row.iter().map(|x| x * x).sum();
    let s = 1.0 / (1.0 + sq).sqrt();
    for x in row {
        *x *= s;
    }
}

/// Gradient through the normalization: given the raw row `z` and the
/// gradient `dy` at the normalized output, writes the gradient at `z`.
///
/// With `s = (1 + |z|^2)^(-1/2)`, the Jacobian is `s I - s^3 z z^T`, so
/// `dz = s dy - s^3 (z . dy) z`.
pub fn response_normalize_backward(z: &[f64], dy: &[f64], dz: &mut [f64]) {
    debug_assert_eq!(z.len(), dy.len());
    debug_assert_eq!(z.len(), dz.len());
    let sq: f64 = z.iter().map(|x| x * x).sum();
    let s = 1.0 / (1.0 + sq).sqrt();
    let s3 = s * s * s;
    let zdy: f64 = z.iter().zip(dy).map(|(a, b)| a * b).sum();
    for i in 0..z.len() {
        dz[i] = s * dy[i] - s3 * zdy * z[i];
    }
}
