//! Integer-pixel translation estimation by phase correlation.

use rustfft::num_complex::Complex;
use rustfft::{FftNum, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frame::{Frame, Plane};
use crate::scalar::Real;

/// Peak-to-second-peak ratio below which a shift is not trusted.
pub const MIN_CONFIDENCE: f64 = 1.5;

/// Translation of `moving` relative to `reference`: `moving(x) = reference(x - d)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Shift {
    pub dx: i32,
    pub dy: i32,
    pub confidence: f64,
}

impl Shift {
    pub const ZERO: Shift = Shift {
        dx: 0,
        dy: 0,
        confidence: f64::INFINITY,
    };

    pub fn is_reliable(&self) -> bool {
        self.confidence >= MIN_CONFIDENCE
    }

    /// The shift itself when reliable, otherwise no motion.
    pub fn or_zero(self) -> Shift {
        if self.is_reliable() {
            self
        } else {
            Shift {
                dx: 0,
                dy: 0,
                confidence: self.confidence,
            }
        }
    }

    pub fn inverse(self) -> Shift {
        Shift {
            dx: -self.dx,
            dy: -self.dy,
            confidence: self.confidence,
        }
    }
}

fn fft2d<T: Real + FftNum>(
    planner: &mut FftPlanner<T>,
    data: &mut [Complex<T>],
    width: usize,
    height: usize,
    inverse: bool,
) {
    let row_fft = if inverse {
        planner.plan_fft_inverse(width)
    } else {
        planner.plan_fft_forward(width)
    };
    row_fft.process(data);
    let col_fft = if inverse {
        planner.plan_fft_inverse(height)
    } else {
        planner.plan_fft_forward(height)
    };
    let mut column = vec![Complex::new(T::zero(), T::zero()); height];
    for x in 0..width {
        for y in 0..height {
            column[y] = data[y * width + x];
        }
        col_fft.process(&mut column);
        for y in 0..height {
            data[y * width + x] = column[y];
        }
    }
}

/// Mean-removed, Hann-windowed copy padded to power-of-two sizes by edge replication.
fn prepare<T: Real>(plane: &Plane<T>, pw: usize, ph: usize) -> Vec<Complex<T>> {
    let n = T::from_usize_lossy(plane.data.len());
    let mean = plane.data.iter().copied().sum::<T>() / n;
    let tau = T::lit(std::f64::consts::TAU);
    let hann = |i: usize, len: usize| {
        T::lit(0.5) * (T::one() - (tau * T::from_usize_lossy(i) / T::from_usize_lossy(len)).cos())
    };
    let wx: Vec<T> = (0..pw).map(|i| hann(i, pw)).collect();
    let wy: Vec<T> = (0..ph).map(|i| hann(i, ph)).collect();
    let mut out = Vec::with_capacity(pw * ph);
    for y in 0..ph {
        for x in 0..pw {
            let v = plane.at_clamped(x as isize, y as isize) - mean;
            out.push(Complex::new(v * wx[x] * wy[y], T::zero()));
        }
    }
    out
}

/// Normalized cross-power correlation surface of the padded frames. The
/// peak of the surface sits at the displacement of `moving` relative to
/// `reference`, wrapped modulo the padded size.
pub fn phase_correlation_surface<T: Real + FftNum>(reference: &Plane<T>, moving: &Plane<T>) -> Plane<T> {
    let pw = reference.width.next_power_of_two();
    let ph = reference.height.next_power_of_two();
    let mut planner = FftPlanner::new();
    let mut fa = prepare(reference, pw, ph);
    let mut fb = prepare(moving, pw, ph);
    fft2d(&mut planner, &mut fa, pw, ph, false);
    fft2d(&mut planner, &mut fb, pw, ph, false);
    let eps = T::lit(1e-12);
    for (a, b) in fa.iter_mut().zip(&fb) {
        let cross = a.conj() * b;
        let mag = cross.norm();
        *a = if mag > eps {
            cross / mag
        } else {
            Complex::new(T::zero(), T::zero())
        };
    }
    fft2d(&mut planner, &mut fa, pw, ph, true);
    Plane {
        width: pw,
        height: ph,
        data: fa.into_iter().map(|c| c.re).collect(),
    }
}

/// Estimates the integer translation of `moving` relative to `reference`,
/// searching `[-max_shift, max_shift]` on both axes.
pub fn estimate_shift(reference: &Frame, moving: &Frame, max_shift: usize) -> Result<Shift> {
    reference.ensure_same_dims(moving)?;
    let (w, h) = reference.dims();
    if 4 * max_shift >= w.min(h) {
        return Err(Error::param(
            "max_shift",
            format!("{max_shift} must be below a quarter of the smaller frame side ({})", w.min(h)),
        ));
    }
    let surface = phase_correlation_surface(&reference.to_plane::<f64>(), &moving.to_plane::<f64>());
    let m = max_shift as isize;
    let value = |dx: isize, dy: isize| {
        let x = dx.rem_euclid(surface.width as isize) as usize;
        let y = dy.rem_euclid(surface.height as isize) as usize;
        surface.at(x, y)
    };
    let mut best = (0isize, 0isize, f64::NEG_INFINITY);
    for dy in -m..=m {
        for dx in -m..=m {
            let v = value(dx, dy);
            if v > best.2 {
                best = (dx, dy, v);
            }
        }
    }
    let mut second = f64::NEG_INFINITY;
    for dy in -m..=m {
        for dx in -m..=m {
            if (dx - best.0).abs() <= 1 && (dy - best.1).abs() <= 1 {
                continue;
            }
            second = second.max(value(dx, dy));
        }
    }
    let confidence = if second > 0.0 {
        (best.2 / second).max(1.0)
    } else {
        f64::INFINITY
    };
    Ok(Shift {
        dx: best.0 as i32,
        dy: best.1 as i32,
        confidence,
    })
}

/// Translates `frame` by `(-dx, -dy)`, replicating edge pixels into the
/// exposed border. Undoes the motion measured by [`estimate_shift`].
pub fn apply_shift(frame: &Frame, shift: Shift) -> Frame {
    if shift.dx == 0 && shift.dy == 0 {
        return frame.clone();
    }
    let (w, h) = frame.dims();
    let src = frame.pixels();
    let mut out = Vec::with_capacity(w * h);
    for y in 0..h {
        let sy = (y as i64 + shift.dy as i64).clamp(0, h as i64 - 1) as usize;
        for x in 0..w {
            let sx = (x as i64 + shift.dx as i64).clamp(0, w as i64 - 1) as usize;
            out.push(src[sy * w + sx]);
        }
    }
    Frame::from_parts(w, h, frame.depth(), out)
}
