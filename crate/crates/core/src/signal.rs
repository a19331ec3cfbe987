//! The unknown 1-periodic target `S`.

use std::fmt;
use std::io::{BufRead, Write};
use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::basis::{phi, phi_derivative, BasisIndex};
use crate::error::{Error, Result};
use crate::Scalar;

/// Default number of midpoint nodes for signal quadratures.
pub const DEFAULT_QUAD_POINTS: usize = 1 << 16;

pub type ScalarFn<T> = Arc<dyn Fn(T) -> T + Send + Sync>;

#[derive(Clone)]
pub enum SignalForm<T> {
    /// Closed form on `[0, 1)`, with optional closed-form derivative.
    Analytic { value: ScalarFn<T>, derivative: Option<ScalarFn<T>> },
    /// `theta_1, ..., theta_J`.
    Coefficients(Vec<T>),
}

#[derive(Clone)]
pub struct SignalSpec<T> {
    name: String,
    form: SignalForm<T>,
    sdot_l1: Option<T>,
}

impl<T: fmt::Debug> fmt::Debug for SignalSpec<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let form = match &self.form {
            SignalForm::Analytic { derivative, .. } => {
                format!("analytic(derivative: {})", derivative.is_some())
            }
            SignalForm::Coefficients(c) => format!("coefficients(J = {})", c.len()),
        };
        f.debug_struct("SignalSpec")
            .field("name", &self.name)
            .field("form", &form)
            .field("sdot_l1", &self.sdot_l1)
            .finish()
    }
}

impl<T: Scalar> SignalSpec<T> {
    pub fn analytic<F>(name: impl Into<String>, value: F) -> Self
    where
        F: Fn(T) -> T + Send + Sync + 'static,
    {
        Self {
            name: name.into(),
            form: SignalForm::Analytic { value: Arc::new(value), derivative: None },
            sdot_l1: None,
        }
    }

    pub fn analytic_with_derivative<F, D>(name: impl Into<String>, value: F, derivative: D) -> Self
    where
        F: Fn(T) -> T + Send + Sync + 'static,
        D: Fn(T) -> T + Send + Sync + 'static,
    {
        Self {
            name: name.into(),
            form: SignalForm::Analytic { value: Arc::new(value), derivative: Some(Arc::new(derivative)) },
            sdot_l1: None,
        }
    }

    /// Coefficient-form signal; `theta[0]` is `theta_1`.
    pub fn from_coefficients(name: impl Into<String>, theta: Vec<T>) -> Result<Self> {
        if theta.is_empty() {
            return Err(Error::InvalidArgument("coefficient signal needs J >= 1".into()));
        }
        if let Some(pos) = theta.iter().position(|x| !x.is_finite()) {
            return Err(Error::InvalidArgument(format!("theta_{} is not finite", pos + 1)));
        }
        Ok(Self { name: name.into(), form: SignalForm::Coefficients(theta), sdot_l1: None })
    }

    /// Overrides the derivative L1 mass with a supplied value.
    pub fn with_sdot_l1(mut self, value: T) -> Result<Self> {
        if !(value >= T::zero()) {
            return Err(Error::InvalidArgument("sdot_l1 must be >= 0".into()));
        }
        self.sdot_l1 = Some(value);
        Ok(self)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn form(&self) -> &SignalForm<T> {
        &self.form
    }

    /// Coefficient slice for coefficient-form signals.
    pub fn coefficients(&self) -> Option<&[T]> {
        match &self.form {
            SignalForm::Coefficients(c) => Some(c),
            SignalForm::Analytic { .. } => None,
        }
    }

    pub fn has_derivative(&self) -> bool {
        match &self.form {
            SignalForm::Analytic { derivative, .. } => derivative.is_some(),
            SignalForm::Coefficients(_) => true,
        }
    }

    /// `S({t})`.
    pub fn eval(&self, t: T) -> T {
        let u = t.fract_part();
        match &self.form {
            SignalForm::Analytic { value, .. } => value(u),
            SignalForm::Coefficients(c) => {
                c.iter().enumerate().fold(T::zero(), |acc, (k, &th)| acc + th * phi(BasisIndex::new(k + 1).unwrap(), u))
            }
        }
    }

    /// `dS/dt` at `{t}`.
    pub fn derivative(&self, t: T) -> Result<T> {
        let u = t.fract_part();
        match &self.form {
            SignalForm::Analytic { derivative: Some(d), .. } => Ok(d(u)),
            SignalForm::Analytic { derivative: None, .. } => {
                Err(Error::Capability(format!("signal '{}' has no derivative", self.name)))
            }
            SignalForm::Coefficients(c) => Ok(c
                .iter()
                .enumerate()
                .fold(T::zero(), |acc, (k, &th)| acc + th * phi_derivative(BasisIndex::new(k + 1).unwrap(), u))),
        }
    }

    /// `theta_j = int_0^1 S phi_j` for `j = 1..=j_max`.
    ///
    /// Coefficient-form signals pass through (zero-padded past `J`). Analytic
    /// signals use the composite midpoint rule evaluated with one FFT; the node
    /// count is raised to `2 * j_max + 2` if needed to avoid aliasing.
    pub fn fourier_coefficients(&self, j_max: usize, quad_points: usize) -> Vec<T> {
        match &self.form {
            SignalForm::Coefficients(c) => {
                let mut out = vec![T::zero(); j_max];
                let k = c.len().min(j_max);
                out[..k].copy_from_slice(&c[..k]);
                out
            }
            SignalForm::Analytic { value, .. } => midpoint_coefficients(value.as_ref(), j_max, quad_points),
        }
    }

    /// `int_0^1 |S'(t)| dt`, or the supplied override.
    pub fn sdot_l1(&self, quad_points: usize) -> Result<T> {
        if let Some(v) = self.sdot_l1 {
            return Ok(v);
        }
        if !self.has_derivative() {
            return Err(Error::Capability(format!("signal '{}' has no derivative", self.name)));
        }
        let q = quad_points.max(1);
        let qt = T::of_usize(q);
        let half = T::of(0.5);
        let total = match &self.form {
            SignalForm::Coefficients(c) => {
                derivative_on_midpoints(c, q).into_iter().fold(T::zero(), |acc, d| acc + d.abs())
            }
            SignalForm::Analytic { .. } => {
                let mut acc = T::zero();
                for k in 0..q {
                    let t = (T::of_usize(k) + half) / qt;
                    acc = acc + self.derivative(t)?.abs();
                }
                acc
            }
        };
        Ok(total / qt)
    }

    /// `int_0^1 S^2` (midpoint rule) for analytic signals, `sum theta_j^2`
    /// for coefficient signals.
    pub fn squared_norm(&self, quad_points: usize) -> T {
        match &self.form {
            SignalForm::Coefficients(c) => c.iter().fold(T::zero(), |a, &x| a + x * x),
            SignalForm::Analytic { value, .. } => {
                let q = quad_points.max(1);
                let qt = T::of_usize(q);
                let half = T::of(0.5);
                (0..q).fold(T::zero(), |a, k| {
                    let v = value((T::of_usize(k) + half) / qt);
                    a + v * v
                }) / qt
            }
        }
    }

    /// Parses `j value` lines (1-based `j`, ASCII decimal). Blank lines and
    /// lines starting with `#` are skipped; unlisted indices are zero.
    pub fn read_coefficient_file<R: BufRead>(name: impl Into<String>, reader: R) -> Result<Self> {
        let mut pairs = Vec::new();
        for (lineno, line) in reader.lines().enumerate() {
            let line = line?;
            let s = line.trim();
            if s.is_empty() || s.starts_with('#') {
                continue;
            }
            let mut it = s.split_whitespace();
            let (Some(j), Some(v), None) = (it.next(), it.next(), it.next()) else {
                return Err(Error::Format(format!("line {}: expected `j value`", lineno + 1)));
            };
            let j: usize = j.parse().map_err(|_| Error::Format(format!("line {}: bad index '{j}'", lineno + 1)))?;
            if j == 0 {
                return Err(Error::Format(format!("line {}: index must be >= 1", lineno + 1)));
            }
            let v: f64 = v.parse().map_err(|_| Error::Format(format!("line {}: bad value '{v}'", lineno + 1)))?;
            pairs.push((j, v));
        }
        let j_max = pairs
            .iter()
            .map(|&(j, _)| j)
            .max()
            .ok_or_else(|| Error::Format("coefficient file has no entries".into()))?;
        let mut theta = vec![T::zero(); j_max];
        for (j, v) in pairs {
            theta[j - 1] = T::of(v);
        }
        Self::from_coefficients(name, theta)
    }

    pub fn write_coefficient_file<W: Write>(&self, mut w: W) -> Result<()> {
        let c =
            self.coefficients().ok_or_else(|| Error::Capability("only coefficient signals can be written".into()))?;
        for (k, v) in c.iter().enumerate() {
            writeln!(w, "{} {:.16e}", k + 1, v.as_f64())?;
        }
        Ok(())
    }
}

fn midpoint_coefficients<T: Scalar>(f: &(dyn Fn(T) -> T + Send + Sync), j_max: usize, quad_points: usize) -> Vec<T> {
    let q = quad_points.max(2 * j_max + 2);
    let qt = T::of_usize(q);
    let half = T::of(0.5);
    let mut buf: Vec<Complex<T>> = (0..q).map(|k| Complex::new(f((T::of_usize(k) + half) / qt), T::zero())).collect();
    FftPlanner::new().plan_fft_forward(q).process(&mut buf);

    let mut out = vec![T::zero(); j_max];
    if j_max == 0 {
        return out;
    }
    out[0] = buf[0].re / qt;
    let sqrt2 = T::SQRT_2();
    for p in 1..=j_max / 2 {
        // midpoint nodes sit half a cell off the FFT grid
        let shift = -T::PI() * T::of_usize(p) / qt;
        let z = buf[p] * Complex::new(shift.cos(), shift.sin());
        out[2 * p - 1] = sqrt2 * z.re / qt;
        if 2 * p < j_max {
            out[2 * p] = -sqrt2 * z.im / qt;
        }
    }
    out
}

/// `S'` of a coefficient signal at the `q` midpoints `(k + 1/2) / q`, by one
/// inverse FFT. `q` is raised above the top frequency if needed, in which
/// case the output is for the raised node count.
fn derivative_on_midpoints<T: Scalar>(theta: &[T], q: usize) -> Vec<T> {
    let p_max = theta.len() / 2;
    let q = q.max(2 * p_max + 2);
    let qt = T::of_usize(q);
    let mut buf = vec![Complex::new(T::zero(), T::zero()); q];
    let scale = T::SQRT_2() * T::TAU();
    for p in 1..=p_max {
        let pt = T::of_usize(p);
        let cos_amp = theta.get(2 * p).copied().unwrap_or_else(T::zero) * scale * pt;
        let sin_amp = -theta[2 * p - 1] * scale * pt;
        // a cos x + b sin x = Re((a - i b) e^{i x}); nodes sit half a cell in
        let shift = T::PI() * pt / qt;
        buf[p] = Complex::new(cos_amp, -sin_amp) * Complex::new(shift.cos(), shift.sin());
    }
    FftPlanner::new().plan_fft_inverse(q).process(&mut buf);
    buf.into_iter().map(|z| z.re).collect()
}

/// Built-in test signals.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Catalogue {
    Zero,
    /// `theta_2 = 1`.
    SingleMode,
    /// `theta_2 = 1, theta_5 = 0.3`.
    TwoMode,
    /// `sin(2 pi t)`.
    Sine,
    /// `t (1 - t)`.
    Parabola,
    /// `sin(2 pi t) + 0.3 t (1 - t)`.
    SinePlusParabola,
    /// `theta_j = c j^-2` for `j <= 512`, normalised to unit L2 norm.
    Decay,
}

pub const DECAY_TERMS: usize = 512;

impl Catalogue {
    pub const ALL: [Catalogue; 7] = [
        Catalogue::Zero,
        Catalogue::SingleMode,
        Catalogue::TwoMode,
        Catalogue::Sine,
        Catalogue::Parabola,
        Catalogue::SinePlusParabola,
        Catalogue::Decay,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Catalogue::Zero => "zero",
            Catalogue::SingleMode => "single-mode",
            Catalogue::TwoMode => "two-mode",
            Catalogue::Sine => "sine",
            Catalogue::Parabola => "parabola",
            Catalogue::SinePlusParabola => "sine-plus-parabola",
            Catalogue::Decay => "decay",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.name() == name)
    }

    pub fn build<T: Scalar>(self) -> SignalSpec<T> {
        let name = self.name();
        match self {
            Catalogue::Zero => SignalSpec::from_coefficients(name, vec![T::zero()]).unwrap(),
            Catalogue::SingleMode => SignalSpec::from_coefficients(name, vec![T::zero(), T::one()]).unwrap(),
            Catalogue::TwoMode => {
                let mut c = vec![T::zero(); 5];
                c[1] = T::one();
                c[4] = T::of(0.3);
                SignalSpec::from_coefficients(name, c).unwrap()
            }
            Catalogue::Sine => SignalSpec::analytic_with_derivative(
                name,
                |t: T| (T::TAU() * t).sin(),
                |t: T| T::TAU() * (T::TAU() * t).cos(),
            ),
            Catalogue::Parabola => {
                SignalSpec::analytic_with_derivative(name, |t: T| t * (T::one() - t), |t: T| T::one() - T::of(2.0) * t)
            }
            Catalogue::SinePlusParabola => SignalSpec::analytic_with_derivative(
                name,
                |t: T| (T::TAU() * t).sin() + T::of(0.3) * t * (T::one() - t),
                |t: T| T::TAU() * (T::TAU() * t).cos() + T::of(0.3) * (T::one() - T::of(2.0) * t),
            ),
            Catalogue::Decay => {
                let raw: Vec<f64> = (1..=DECAY_TERMS).map(|j| 1.0 / (j as f64).powi(2)).collect();
                let norm = raw.iter().map(|x| x * x).sum::<f64>().sqrt();
                SignalSpec::from_coefficients(name, raw.into_iter().map(|x| T::of(x / norm)).collect()).unwrap()
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sig(c: Catalogue) -> SignalSpec<f64> {
        c.build()
    }

    #[test]
    fn eval_examples() {
        assert!((sig(Catalogue::SingleMode).eval(0.0) - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(sig(Catalogue::Zero).eval(0.731), 0.0);
        assert_eq!(sig(Catalogue::Parabola).eval(0.5), 0.25);
        // evaluation uses the fractional part
        assert!((sig(Catalogue::Parabola).eval(7.25) - 0.1875).abs() < 1e-12);
    }

    #[test]
    fn coefficient_passthrough() {
        let th = sig(Catalogue::TwoMode).fourier_coefficients(6, 64);
        assert_eq!(th, vec![0.0, 1.0, 0.0, 0.0, 0.3, 0.0]);
    }

    // Independent oracle: closed-form integrals. int_0^1 t(1-t) dt = 1/6 and
    // int_0^1 t(1-t) cos(2 pi p t) dt = -1/(2 pi^2 p^2); the sine parts vanish.
    #[test]
    fn parabola_coefficients_match_closed_form() {
        let th = sig(Catalogue::Parabola).fourier_coefficients(41, DEFAULT_QUAD_POINTS);
        assert!((th[0] - 1.0 / 6.0).abs() < 1e-8);
        for p in 1..=20usize {
            let exact = -2f64.sqrt() / (2.0 * std::f64::consts::PI.powi(2) * (p * p) as f64);
            assert!((th[2 * p - 1] - exact).abs() < 1e-9, "p = {p}");
            assert!(th[2 * p].abs() < 1e-9);
        }
    }

    #[test]
    fn sine_coefficients() {
        let th = sig(Catalogue::Sine).fourier_coefficients(4, DEFAULT_QUAD_POINTS);
        let expect = [0.0, 0.0, 1.0 / 2f64.sqrt(), 0.0];
        for (a, b) in th.iter().zip(expect) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn sdot_l1_examples() {
        let q = DEFAULT_QUAD_POINTS;
        assert!((sig(Catalogue::Sine).sdot_l1(q).unwrap() - 4.0).abs() < 1e-6);
        assert!((sig(Catalogue::Parabola).sdot_l1(q).unwrap() - 0.5).abs() < 1e-8);
        let constant = SignalSpec::<f64>::from_coefficients("c", vec![3.0]).unwrap();
        assert_eq!(constant.sdot_l1(q).unwrap(), 0.0);
        let no_deriv = SignalSpec::<f64>::analytic("f", |t| t * t);
        assert!(matches!(no_deriv.sdot_l1(q), Err(Error::Capability(_))));
    }

    #[test]
    fn fft_derivative_matches_direct_sum() {
        let s = sig(Catalogue::TwoMode);
        let q = 256;
        let fast = derivative_on_midpoints(s.coefficients().unwrap(), q);
        for (k, d) in fast.iter().enumerate() {
            let t = (k as f64 + 0.5) / q as f64;
            assert!((d - s.derivative(t).unwrap()).abs() < 1e-11);
        }
        // |S'|_1 of sqrt(2) cos(2 pi t) is 4 sqrt(2)
        let one = sig(Catalogue::SingleMode).sdot_l1(DEFAULT_QUAD_POINTS).unwrap();
        assert!((one - 4.0 * 2f64.sqrt()).abs() < 1e-6);
    }

    #[test]
    fn supplied_sdot_overrides_quadrature() {
        let s = SignalSpec::<f64>::analytic("f", |t| t).with_sdot_l1(2.5).unwrap();
        assert_eq!(s.sdot_l1(16).unwrap(), 2.5);
    }

    #[test]
    fn parseval_at_truncation() {
        let q = DEFAULT_QUAD_POINTS;
        for c in Catalogue::ALL {
            let s = sig(c);
            let th = s.fourier_coefficients(512, q);
            let energy: f64 = th.iter().map(|x| x * x).sum();
            assert!(energy <= s.squared_norm(q) + 1e-6, "{}", c.name());
        }
    }

    #[test]
    fn coefficient_reconstruction() {
        let s = sig(Catalogue::Decay);
        let th = s.coefficients().unwrap().to_vec();
        for k in 0..1024 {
            let t = k as f64 / 1024.0;
            let direct: f64 = th.iter().enumerate().map(|(i, &c)| c * phi(BasisIndex::new(i + 1).unwrap(), t)).sum();
            assert!((s.eval(t) - direct).abs() < 1e-12);
        }
    }

    #[test]
    fn coefficient_file_roundtrip() {
        let text = "# header\n2 1.0\n\n5 0.3\n";
        let s = SignalSpec::<f64>::read_coefficient_file("f", text.as_bytes()).unwrap();
        assert_eq!(s.coefficients().unwrap(), &[0.0, 1.0, 0.0, 0.0, 0.3]);
        let mut buf = Vec::new();
        s.write_coefficient_file(&mut buf).unwrap();
        let back = SignalSpec::<f64>::read_coefficient_file("f", buf.as_slice()).unwrap();
        assert_eq!(back.coefficients(), s.coefficients());
        assert!(SignalSpec::<f64>::read_coefficient_file("f", "0 1.0".as_bytes()).is_err());
        assert!(SignalSpec::<f64>::read_coefficient_file("f", "".as_bytes()).is_err());
    }
}
