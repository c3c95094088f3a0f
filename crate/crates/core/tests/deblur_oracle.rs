//! Spectral blur against a direct spatial circular convolution, and the
//! Parseval relation between frequency- and spatial-domain losses.

use hotune::deblur::{blur_operator, deblur_sample, psf_gauss, Image};
use hotune::rng::SplitMix64;
use hotune::{Complex64, Objective, ParamVector};

fn random_image(rng: &mut SplitMix64, rows: usize, cols: usize) -> Image {
    let pixels = (0..rows * cols).map(|_| rng.uniform(0.0, 255.0)).collect();
    Image::new(rows, cols, pixels).unwrap()
}

/// `out[r][c] = Σ_{i,j} p[i][j] · img[r − (i−h)][c − (j−h)]` with wraparound.
fn circular_convolution(p: &[f64], size: usize, img: &Image) -> Vec<f64> {
    let h = (size / 2) as i64;
    let (rows, cols) = (img.rows as i64, img.cols as i64);
    let mut out = vec![0.0; img.pixels.len()];
    for r in 0..rows {
        for c in 0..cols {
            let mut acc = 0.0;
            for i in 0..size as i64 {
                for j in 0..size as i64 {
                    let rr = (r - (i - h)).rem_euclid(rows);
                    let cc = (c - (j - h)).rem_euclid(cols);
                    acc += p[(i * size as i64 + j) as usize] * img.pixels[(rr * cols + cc) as usize];
                }
            }
            out[(r * cols + c) as usize] = acc;
        }
    }
    out
}

#[test]
fn spectrum_multiply_equals_spatial_convolution() {
    let mut rng = SplitMix64::new(2024);
    for &size in &[1usize, 3, 9, 11] {
        for &sigma in &[0.5, 1.5, 7.0] {
            let img = random_image(&mut rng, 32, 32);
            let psf = psf_gauss(size, sigma).unwrap();
            let spec = blur_operator(&psf, 32, 32).unwrap();
            let blurred = spec.apply(&img.spectrum()).unwrap();
            let direct = Image::new(32, 32, circular_convolution(&psf.values, size, &img)).unwrap().spectrum();
            let max_diff = blurred.iter().zip(direct.iter()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
            assert!(max_diff <= 1e-8, "size {size}, sigma {sigma}: {max_diff}");
        }
    }
}

#[test]
fn library_spatial_blur_agrees_with_oracle() {
    let mut rng = SplitMix64::new(5);
    let img = random_image(&mut rng, 16, 24);
    let psf = psf_gauss(5, 1.1).unwrap();
    let lib = hotune::deblur::spatial_blur(&psf, &img);
    let oracle = circular_convolution(&psf.values, 5, &img);
    for (a, b) in lib.pixels.iter().zip(&oracle) {
        assert!((a - b).abs() < 1e-10);
    }
}

#[test]
fn frequency_loss_is_scaled_spatial_loss() {
    let mut rng = SplitMix64::new(6);
    let (rows, cols) = (16, 16);
    let psf = psf_gauss(5, 1.5).unwrap();
    let spec = blur_operator(&psf, rows, cols).unwrap();
    for _ in 0..10 {
        let truth = random_image(&mut rng, rows, cols);
        let guess = random_image(&mut rng, rows, cols);
        let y = spec.apply(&truth.spectrum()).unwrap();
        let sample = deblur_sample(&spec, y, 0).unwrap();
        let freq_loss = sample.loss(&guess.spectrum()).unwrap();
        let a = circular_convolution(&psf.values, 5, &guess);
        let b = circular_convolution(&psf.values, 5, &truth);
        let spatial_loss = 0.5 * a.iter().zip(&b).map(|(x, y)| (x - y).powi(2)).sum::<f64>();
        let expect = (rows * cols) as f64 * spatial_loss;
        assert!((freq_loss - expect).abs() <= 1e-8 * expect);
    }
}

#[test]
fn uncorrupted_spectra_have_unit_norm() {
    for &size in &[1usize, 3, 9, 11] {
        for &sigma in &[0.5, 1.5, 7.0] {
            let spec = blur_operator(&psf_gauss(size, sigma).unwrap(), 32, 32).unwrap();
            assert!((spec.coefficients[0] - Complex64::new(1.0, 0.0)).norm() < 1e-12);
            assert!((spec.op_norm_sq() - 1.0).abs() < 1e-12);
        }
    }
}

#[test]
fn inverse_transform_round_trip() {
    let mut rng = SplitMix64::new(8);
    let img = random_image(&mut rng, 32, 16);
    let back = Image::from_spectrum(&img.spectrum(), 32, 16).unwrap();
    let worst = img.pixels.iter().zip(&back.pixels).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    assert!(worst <= 1e-9);
    assert!(Image::from_spectrum(&ParamVector::zeros(3), 32, 16).is_err());
}
