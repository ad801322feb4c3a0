//! Adaptive Gauss–Kronrod (7/15) quadrature on finite and half-infinite
//! intervals.

use crate::error::{Error, Result};
use crate::scalar::{compensated_sum, Scalar};

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.0,
];

const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];

// Gauss weights for the nodes XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

#[derive(Debug, Clone, Copy)]
pub struct Tolerance<T> {
    pub abs: T,
    pub rel: T,
    pub max_subdivisions: usize,
}

impl<T: Scalar> Default for Tolerance<T> {
    fn default() -> Self {
        Self {
            abs: T::c(1e-9),
            rel: T::c(1e-10),
            max_subdivisions: 4000,
        }
    }
}

impl<T: Scalar> Tolerance<T> {
    pub fn absolute(abs: T) -> Self {
        Self {
            abs,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Estimate<T> {
    pub value: T,
    pub error: T,
    pub evaluations: usize,
}

#[derive(Clone, Copy)]
struct Segment<T> {
    lo: T,
    hi: T,
    value: T,
    error: T,
}

fn kronrod<T: Scalar, F: FnMut(T) -> T>(f: &mut F, lo: T, hi: T) -> Segment<T> {
    let half = (hi - lo) * T::c(0.5);
    let center = lo + half;
    let fc = f(center);
    let mut k = fc * T::c(WGK[7]);
    let mut g = fc * T::c(WG[3]);
    for j in 0..7 {
        let dx = half * T::c(XGK[j]);
        let pair = f(center - dx) + f(center + dx);
        k = k + pair * T::c(WGK[j]);
        if j % 2 == 1 {
            g = g + pair * T::c(WG[j / 2]);
        }
    }
    let value = k * half;
    let error = ((k - g) * half).abs();
    Segment {
        lo,
        hi,
        value,
        error,
    }
}

/// Integrates `f` over `[lo, hi]` by globally adaptive bisection of the
/// segment with the largest error estimate.
pub fn integrate<T, F>(mut f: F, lo: T, hi: T, tol: Tolerance<T>) -> Result<Estimate<T>>
where
    T: Scalar,
    F: FnMut(T) -> T,
{
    if hi == lo {
        return Ok(Estimate {
            value: T::zero(),
            error: T::zero(),
            evaluations: 0,
        });
    }
    let mut segments = vec![kronrod(&mut f, lo, hi)];
    let mut evaluations = 15;
    loop {
        let value = compensated_sum(segments.iter().map(|s| s.value));
        let error = compensated_sum(segments.iter().map(|s| s.error));
        if !value.is_finite() {
            return Err(Error::Quadrature {
                lo: lo.to_f64_lossy(),
                hi: hi.to_f64_lossy(),
                error: f64::NAN,
                evaluations,
            });
        }
        if error <= tol.abs.max(tol.rel * value.abs()) {
            return Ok(Estimate {
                value,
                error,
                evaluations,
            });
        }
        if segments.len() >= tol.max_subdivisions {
            return Err(Error::Quadrature {
                lo: lo.to_f64_lossy(),
                hi: hi.to_f64_lossy(),
                error: error.to_f64_lossy(),
                evaluations,
            });
        }
        let (worst, _) = segments
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.error.partial_cmp(&b.1.error).unwrap())
            .unwrap();
        let seg = segments.swap_remove(worst);
        let mid = seg.lo + (seg.hi - seg.lo) * T::c(0.5);
        if mid <= seg.lo || mid >= seg.hi {
            // Segment is at machine resolution; keep it and stop refining.
            segments.push(seg);
            let error = compensated_sum(segments.iter().map(|s| s.error));
            return Err(Error::Quadrature {
                lo: lo.to_f64_lossy(),
                hi: hi.to_f64_lossy(),
                error: error.to_f64_lossy(),
                evaluations,
            });
        }
        segments.push(kronrod(&mut f, seg.lo, mid));
        segments.push(kronrod(&mut f, mid, seg.hi));
        evaluations += 30;
    }
}

/// Integrates `f` over `[lo, ∞)` through the map `x = lo + scale·t/(1−t)`.
/// `scale` should be of the order of the integrand's decay length.
pub fn integrate_to_infinity<T, F>(mut f: F, lo: T, scale: T, tol: Tolerance<T>) -> Result<Estimate<T>>
where
    T: Scalar,
    F: FnMut(T) -> T,
{
    let one = T::one();
    let g = |t: T| {
        if t >= one {
            return T::zero();
        }
        let u = one - t;
        let x = lo + scale * t / u;
        let v = f(x) * scale / (u * u);
        if v.is_finite() {
            v
        } else {
            T::zero()
        }
    };
    integrate(g, T::zero(), one, tol)
}
