//! Integer trigonometry for the renderer.

/// One in Q16.
pub const ONE_Q16: u32 = 1 << 16;
/// 2*pi in Q16, rounded; orientations are strictly below this.
pub const TWO_PI_Q16: u32 = 411_775;

const PI_Q30: i64 = 3_373_259_426;
const HALF_PI_Q30: i64 = PI_Q30 / 2;
/// CORDIC gain after 31 iterations, Q30.
const CORDIC_GAIN_Q30: i64 = 652_032_874;
/// atan(2^-i) in Q30.
const ATAN_Q30: [i64; 31] = [
    843314857, 497837829, 263043837, 133525159, 67021687, 33543516, 16775851, 8388437, 4194283, 2097149, 1048576,
    524288, 262144, 131072, 65536, 32768, 16384, 8192, 4096, 2048, 1024, 512, 256, 128, 64, 32, 16, 8, 4, 2, 1,
];

/// `(cos, sin)` of a Q16 angle in radians, as Q30 integers.
pub fn cos_sin_q30(angle_q16: u32) -> (i64, i64) {
    let mut theta = (angle_q16 as i64) << 14;
    theta %= 2 * PI_Q30;
    if theta > PI_Q30 {
        theta -= 2 * PI_Q30;
    }
    let mut flip = false;
    if theta > HALF_PI_Q30 {
        theta -= PI_Q30;
        flip = true;
    } else if theta < -HALF_PI_Q30 {
        theta += PI_Q30;
        flip = true;
    }
    let (mut x, mut y, mut z) = (CORDIC_GAIN_Q30, 0i64, theta);
    for (i, &a) in ATAN_Q30.iter().enumerate() {
        let (dx, dy) = (y >> i, x >> i);
        if z >= 0 {
            x -= dx;
            y += dy;
            z -= a;
        } else {
            x += dx;
            y -= dy;
            z += a;
        }
    }
    if flip {
        (-x, -y)
    } else {
        (x, y)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_float_trig() {
        for k in 0..400u32 {
            let q = k * (TWO_PI_Q16 / 400);
            let theta = q as f64 / ONE_Q16 as f64;
            let (c, s) = cos_sin_q30(q);
            let scale = (1u64 << 30) as f64;
            assert!((c as f64 / scale - theta.cos()).abs() < 1e-8, "cos at {theta}");
            assert!((s as f64 / scale - theta.sin()).abs() < 1e-8, "sin at {theta}");
        }
    }
}
