//! Frequency-domain image deblurring with a time-varying blur.
//!
//! Blur is circular convolution with a Gaussian PSF, so the 2-D DFT turns it
//! into an element-wise product with the PSF spectrum. Each frequency is an
//! independent scalar regression `y = φθ` over the complex numbers.
//!
//! DFT convention: the forward transform is unnormalized and the inverse
//! carries `1/(rows·cols)`, so a PSF summing to one has DC coefficient one.

use std::fs;
use std::io::Write as _;
use std::path::Path;
use std::str::FromStr;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::objective::{ensure, Objective};
use crate::rng::SplitMix64;
use crate::streams::{Schedule, Stream, Trig};
use crate::vector::ParamVector;

/// Normalized Gaussian point spread function on an odd square grid.
#[derive(Clone, Debug, PartialEq)]
pub struct PsfKernel {
    pub size: usize,
    pub sigma: f64,
    /// Row-major, sums to one.
    pub values: Vec<f64>,
}

impl PsfKernel {
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.size + j]
    }

    pub fn center(&self) -> usize {
        (self.size - 1) / 2
    }
}

/// `p_ij ∝ exp(−(i−c)²/(2σ²) − (j−c)²/(2σ²))`, normalized to sum one.
pub fn psf_gauss(size: usize, sigma: f64) -> Result<PsfKernel> {
    ensure(size % 2 == 1, || format!("kernel size must be odd, got {size}"))?;
    ensure(sigma > 0.0 && sigma.is_finite(), || format!("sigma must be positive, got {sigma}"))?;
    let c = ((size - 1) / 2) as f64;
    let two_var = 2.0 * sigma * sigma;
    let mut values: Vec<f64> = (0..size * size)
        .map(|idx| {
            let (i, j) = ((idx / size) as f64, (idx % size) as f64);
            (-(i - c).powi(2) / two_var - (j - c).powi(2) / two_var).exp()
        })
        .collect();
    let total: f64 = values.iter().sum();
    values.iter_mut().for_each(|v| *v /= total);
    Ok(PsfKernel { size, sigma, values })
}

/// Real grayscale image, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Image {
    pub rows: usize,
    pub cols: usize,
    pub pixels: Vec<f64>,
}

impl Image {
    pub fn new(rows: usize, cols: usize, pixels: Vec<f64>) -> Result<Self> {
        ensure(rows > 0 && cols > 0, || "image dimensions must be positive".into())?;
        if pixels.len() != rows * cols {
            return Err(Error::DimensionMismatch { expected: rows * cols, found: pixels.len() });
        }
        Ok(Self { rows, cols, pixels })
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        let pixels = (0..rows * cols).map(|idx| f(idx / cols, idx % cols)).collect();
        Self { rows, cols, pixels }
    }

    pub fn at(&self, r: usize, c: usize) -> f64 {
        self.pixels[r * self.cols + c]
    }

    /// Unnormalized 2-D DFT.
    pub fn spectrum(&self) -> ParamVector<Complex64> {
        let data = self.pixels.iter().map(|&p| Complex64::new(p, 0.0)).collect();
        ParamVector::new(fft2(data, self.rows, self.cols))
    }

    /// Real part of the inverse DFT, without clamping.
    pub fn from_spectrum(spectrum: &ParamVector<Complex64>, rows: usize, cols: usize) -> Result<Self> {
        if spectrum.dim() != rows * cols {
            return Err(Error::DimensionMismatch { expected: rows * cols, found: spectrum.dim() });
        }
        let spatial = ifft2(spectrum.as_slice().to_vec(), rows, cols);
        Image::new(rows, cols, spatial.into_iter().map(|z| z.re).collect())
    }

    /// Pixels clamped to `[0, 255]` and rounded.
    pub fn to_bytes(&self) -> Vec<u8> {
        self.pixels.iter().map(|&p| p.clamp(0.0, 255.0).round() as u8).collect()
    }
}

fn transform(mut data: Vec<Complex64>, rows: usize, cols: usize, inverse: bool) -> Vec<Complex64> {
    let mut planner = FftPlanner::<f64>::new();
    let (row_fft, col_fft) = if inverse {
        (planner.plan_fft_inverse(cols), planner.plan_fft_inverse(rows))
    } else {
        (planner.plan_fft_forward(cols), planner.plan_fft_forward(rows))
    };
    row_fft.process(&mut data);
    let mut column = vec![Complex64::new(0.0, 0.0); rows];
    for c in 0..cols {
        for r in 0..rows {
            column[r] = data[r * cols + c];
        }
        col_fft.process(&mut column);
        for r in 0..rows {
            data[r * cols + c] = column[r];
        }
    }
    data
}

/// Unnormalized forward 2-D DFT of a row-major grid.
pub fn fft2(data: Vec<Complex64>, rows: usize, cols: usize) -> Vec<Complex64> {
    assert_eq!(data.len(), rows * cols, "grid size");
    transform(data, rows, cols, false)
}

/// Inverse 2-D DFT including the `1/(rows·cols)` factor.
pub fn ifft2(data: Vec<Complex64>, rows: usize, cols: usize) -> Vec<Complex64> {
    assert_eq!(data.len(), rows * cols, "grid size");
    let scale = 1.0 / (rows * cols) as f64;
    transform(data, rows, cols, true).into_iter().map(|z| z * scale).collect()
}

/// Diagonal blur operator in the frequency domain, already multiplied by `δ`.
#[derive(Clone, Debug, PartialEq)]
pub struct BlurSpectrum {
    pub rows: usize,
    pub cols: usize,
    pub coefficients: ParamVector<Complex64>,
    pub delta: f64,
}

impl BlurSpectrum {
    /// Multiplies the coefficients by `δ` (composing with any earlier factor).
    pub fn corrupted(&self, delta: f64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            coefficients: self.coefficients.scale(delta),
            delta: self.delta * delta,
        }
    }

    /// Squared spectral norm `max |φᵢ|²`.
    pub fn op_norm_sq(&self) -> f64 {
        self.coefficients.max_abs_sq()
    }

    /// Element-wise product with a spectrum.
    pub fn apply(&self, x: &ParamVector<Complex64>) -> Result<ParamVector<Complex64>> {
        self.coefficients.check_dim(x)?;
        Ok(self.coefficients.iter().zip(x.iter()).map(|(&p, &t)| p * t).collect())
    }
}

/// Pads the PSF to `rows × cols`, rolls its center to `(0, 0)` and takes the DFT.
pub fn blur_operator(psf: &PsfKernel, rows: usize, cols: usize) -> Result<BlurSpectrum> {
    ensure(psf.size <= rows.min(cols), || format!("{0}×{0} kernel does not fit a {rows}×{cols} image", psf.size))?;
    let c = psf.center();
    let mut padded = vec![Complex64::new(0.0, 0.0); rows * cols];
    for i in 0..psf.size {
        for j in 0..psf.size {
            let r = (i + rows - c) % rows;
            let s = (j + cols - c) % cols;
            padded[r * cols + s] = Complex64::new(psf.at(i, j), 0.0);
        }
    }
    Ok(BlurSpectrum { rows, cols, coefficients: ParamVector::new(fft2(padded, rows, cols)), delta: 1.0 })
}

/// Circular convolution of an image with a PSF centered on each pixel,
/// computed directly in the spatial domain.
pub fn spatial_blur(psf: &PsfKernel, image: &Image) -> Image {
    let (rows, cols) = (image.rows, image.cols);
    let c = psf.center() as isize;
    Image::from_fn(rows, cols, |r, s| {
        let mut acc = 0.0;
        for i in 0..psf.size {
            for j in 0..psf.size {
                let rr = (r as isize - (i as isize - c)).rem_euclid(rows as isize) as usize;
                let ss = (s as isize - (j as isize - c)).rem_euclid(cols as isize) as usize;
                acc += psf.at(i, j) * image.at(rr, ss);
            }
        }
        acc
    })
}

/// Named `δ_k` profiles.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeltaKind {
    /// 1 until `k = 500`, linear to 200 at `k = 700`, then 200.
    Ramp,
    Constant,
}

impl FromStr for DeltaKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ramp" => Ok(DeltaKind::Ramp),
            "constant" => Ok(DeltaKind::Constant),
            other => Err(Error::invalid(format!("unknown delta schedule `{other}`"))),
        }
    }
}

impl DeltaKind {
    pub fn schedule(self) -> Schedule {
        match self {
            DeltaKind::Ramp => Schedule::Ramp { start: 500, end: 700, from: 1.0, to: 200.0 },
            DeltaKind::Constant => Schedule::constant(1.0),
        }
    }
}

pub fn delta_schedule(kind: DeltaKind, k: usize) -> f64 {
    kind.schedule().value(k)
}

/// `σ_k = 7 − 4.1 sin(0.01k)`.
pub fn sigma_schedule() -> Schedule {
    Schedule::Sinusoid { offset: 7.0, amplitude: -4.1, omega: 0.01, phase: 0.0, trig: Trig::Sin }
}

pub fn sigma_schedule_sinusoidal(k: usize) -> f64 {
    sigma_schedule().value(k)
}

/// `½Σ|φᵢθᵢ − yᵢ|²` over all frequencies.
#[derive(Clone, Debug, PartialEq)]
pub struct DeblurSample {
    pub k: usize,
    pub phi: ParamVector<Complex64>,
    pub y: ParamVector<Complex64>,
    pub theta_star: Option<ParamVector<Complex64>>,
    op_norm_sq: f64,
}

impl DeblurSample {
    fn residual(&self, theta: &ParamVector<Complex64>) -> Result<Vec<Complex64>> {
        self.phi.check_dim(theta)?;
        Ok(self.phi.iter().zip(theta.iter()).zip(self.y.iter()).map(|((&p, &t), &y)| p * t - y).collect())
    }
}

pub fn deblur_sample(spectrum: &BlurSpectrum, y: ParamVector<Complex64>, k: usize) -> Result<DeblurSample> {
    spectrum.coefficients.check_dim(&y)?;
    Ok(DeblurSample { k, phi: spectrum.coefficients.clone(), y, theta_star: None, op_norm_sq: spectrum.op_norm_sq() })
}

impl Objective<Complex64> for DeblurSample {
    fn iteration(&self) -> usize {
        self.k
    }

    fn dim(&self) -> usize {
        self.phi.dim()
    }

    fn loss(&self, theta: &ParamVector<Complex64>) -> Result<f64> {
        Ok(0.5 * self.residual(theta)?.iter().map(|r| r.norm_sqr()).sum::<f64>())
    }

    fn gradient(&self, theta: &ParamVector<Complex64>) -> Result<ParamVector<Complex64>> {
        let r = self.residual(theta)?;
        Ok(self.phi.iter().zip(r).map(|(p, r)| p.conj() * r).collect())
    }

    fn normalization(&self) -> f64 {
        1.0 + self.op_norm_sq
    }

    fn smoothness(&self) -> f64 {
        self.op_norm_sq
    }

    fn theta_star(&self) -> Option<&ParamVector<Complex64>> {
        self.theta_star.as_ref()
    }

    fn optimal_value(&self) -> Option<f64> {
        self.theta_star.as_ref().map(|_| 0.0)
    }
}

/// How the PSF evolves.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", deny_unknown_fields)]
pub enum PsfSchedule {
    Fixed { size: usize, sigma: f64 },
    /// Width follows a schedule; the spectrum is rebuilt every iteration.
    Varying { size: usize, sigma: Schedule },
}

/// Noise-free blurred observations of a known image.
#[derive(Clone, Debug)]
pub struct DeblurStream {
    pub rows: usize,
    pub cols: usize,
    pub truth: ParamVector<Complex64>,
    pub psf: PsfSchedule,
    pub delta: Schedule,
    fixed: Option<BlurSpectrum>,
}

impl DeblurStream {
    pub fn new(image: &Image, psf: PsfSchedule, delta: Schedule) -> Result<Self> {
        let fixed = match &psf {
            PsfSchedule::Fixed { size, sigma } => Some(blur_operator(&psf_gauss(*size, *sigma)?, image.rows, image.cols)?),
            PsfSchedule::Varying { size, .. } => {
                psf_gauss(*size, 1.0)?;
                ensure(*size <= image.rows.min(image.cols), || "kernel does not fit the image".into())?;
                None
            }
        };
        Ok(Self { rows: image.rows, cols: image.cols, truth: image.spectrum(), psf, delta, fixed })
    }

    /// Uncorrupted blur spectrum at `k`.
    pub fn base_spectrum(&self, k: usize) -> Result<BlurSpectrum> {
        match (&self.fixed, &self.psf) {
            (Some(s), _) => Ok(s.clone()),
            (None, PsfSchedule::Varying { size, sigma }) => {
                blur_operator(&psf_gauss(*size, sigma.value(k))?, self.rows, self.cols)
            }
            (None, PsfSchedule::Fixed { .. }) => unreachable!("fixed spectrum built at construction"),
        }
    }

    pub fn spectrum(&self, k: usize) -> Result<BlurSpectrum> {
        Ok(self.base_spectrum(k)?.corrupted(self.delta.value(k)))
    }
}

impl Stream<Complex64> for DeblurStream {
    type Sample = DeblurSample;

    fn dim(&self) -> usize {
        self.rows * self.cols
    }

    fn sample(&self, k: usize) -> Result<DeblurSample> {
        let spectrum = self.spectrum(k)?;
        let y = spectrum.apply(&self.truth)?;
        let mut s = deblur_sample(&spectrum, y, k)?;
        s.theta_star = Some(self.truth.clone());
        Ok(s)
    }
}

/// Deterministic test images.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SyntheticImage {
    Checkerboard,
    Gradient,
    Noise,
    /// Low-frequency sinusoidal pattern.
    Smooth,
    /// Seeded random-phase field with a `1/f` amplitude spectrum, the usual
    /// statistical stand-in for a photograph.
    Natural,
}

impl FromStr for SyntheticImage {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "checkerboard" => Ok(Self::Checkerboard),
            "gradient" => Ok(Self::Gradient),
            "noise" => Ok(Self::Noise),
            "smooth" => Ok(Self::Smooth),
            "natural" => Ok(Self::Natural),
            other => Err(Error::invalid(format!("unknown synthetic image `{other}`"))),
        }
    }
}

/// Renders a synthetic image with pixel values in `[0, 255]`.
pub fn synthetic_image(kind: SyntheticImage, rows: usize, cols: usize, seed: u64) -> Image {
    match kind {
        SyntheticImage::Checkerboard => {
            let cell = (rows.min(cols) / 8).max(1);
            Image::from_fn(rows, cols, |r, c| if (r / cell + c / cell) % 2 == 0 { 255.0 } else { 0.0 })
        }
        SyntheticImage::Gradient => {
            let span = (rows + cols).saturating_sub(2).max(1) as f64;
            Image::from_fn(rows, cols, |r, c| (255.0 * (r + c) as f64 / span).round())
        }
        SyntheticImage::Noise => {
            let mut rng = SplitMix64::new(seed);
            let pixels = (0..rows * cols).map(|_| (rng.next_f64() * 256.0).floor().min(255.0)).collect();
            Image { rows, cols, pixels }
        }
        SyntheticImage::Smooth => {
            let tau = std::f64::consts::TAU;
            Image::from_fn(rows, cols, |r, c| {
                let x = tau * r as f64 / rows as f64;
                let y = tau * c as f64 / cols as f64;
                (127.5 + 127.5 * x.sin() * y.cos()).round()
            })
        }
        SyntheticImage::Natural => natural_image(rows, cols, seed),
    }
}

/// Real part of the inverse DFT of `e^{iφ}/|f|` with uniform random phases
/// (DC set to zero), affinely mapped onto `[0, 255]`.
fn natural_image(rows: usize, cols: usize, seed: u64) -> Image {
    let mut rng = SplitMix64::new(seed);
    let wrap = |i: usize, n: usize| if 2 * i <= n { i as f64 } else { i as f64 - n as f64 };
    let mut spectrum = Vec::with_capacity(rows * cols);
    for r in 0..rows {
        for c in 0..cols {
            let f = (wrap(r, rows).powi(2) + wrap(c, cols).powi(2)).sqrt();
            let phase = std::f64::consts::TAU * rng.next_f64();
            spectrum.push(if f == 0.0 { Complex64::new(0.0, 0.0) } else { Complex64::from_polar(1.0 / f, phase) });
        }
    }
    let field: Vec<f64> = ifft2(spectrum, rows, cols).into_iter().map(|z| z.re).collect();
    let lo = field.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = field.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = if hi > lo { hi - lo } else { 1.0 };
    Image { rows, cols, pixels: field.into_iter().map(|v| (255.0 * (v - lo) / span).round()).collect() }
}

/// Parses an 8-bit binary PGM (`P5`).
pub fn parse_pgm(bytes: &[u8]) -> Result<Image> {
    let bad = |msg: &str| Error::ImageFormat(msg.to_string());
    let mut pos = 0;
    let mut token = || -> Result<String> {
        loop {
            while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if pos < bytes.len() && bytes[pos] == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
                continue;
            }
            break;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(bad("truncated header"));
        }
        Ok(String::from_utf8_lossy(&bytes[start..pos]).into_owned())
    };
    if token()? != "P5" {
        return Err(bad("only binary PGM (P5) is supported"));
    }
    let mut number = |what: &str| -> Result<usize> {
        token()?.parse::<usize>().map_err(|_| Error::ImageFormat(format!("invalid {what}")))
    };
    let cols = number("width")?;
    let rows = number("height")?;
    let maxval = number("maxval")?;
    if cols == 0 || rows == 0 {
        return Err(bad("empty image"));
    }
    if maxval == 0 || maxval > 255 {
        return Err(bad("only 8-bit PGM is supported"));
    }
    // exactly one whitespace byte separates the header from the raster
    let data = bytes.get(pos + 1..).ok_or_else(|| bad("missing raster"))?;
    if data.len() < rows * cols {
        return Err(bad("raster shorter than header dimensions"));
    }
    Image::new(rows, cols, data[..rows * cols].iter().map(|&b| b as f64).collect())
}

pub fn encode_pgm(image: &Image) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", image.cols, image.rows).into_bytes();
    out.extend(image.to_bytes());
    out
}

pub fn read_pgm(path: impl AsRef<Path>) -> Result<Image> {
    parse_pgm(&fs::read(path)?)
}

pub fn write_pgm(path: impl AsRef<Path>, image: &Image) -> Result<()> {
    let mut f = fs::File::create(path)?;
    f.write_all(&encode_pgm(image))?;
    Ok(())
}
