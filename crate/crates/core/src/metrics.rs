//! Image comparison metrics.

use crate::image::ImageF;
use crate::math::log10;
use crate::{Error, Result};

/// Mean absolute difference over all pixels and channels.
pub fn mean_l1(a: &ImageF, b: &ImageF) -> Result<f64> {
    check(a, b)?;
    let n = a.data.len().max(1) as f64;
    Ok(a.data
        .iter()
        .zip(&b.data)
        .map(|(x, y)| (*x as f64 - *y as f64).abs())
        .sum::<f64>()
        / n)
}

/// Peak signal-to-noise ratio in dB for unit peak; infinite for identical
/// images.
pub fn psnr(a: &ImageF, b: &ImageF) -> Result<f64> {
    check(a, b)?;
    let n = a.data.len().max(1) as f64;
    let mse = a
        .data
        .iter()
        .zip(&b.data)
        .map(|(x, y)| {
            let d = *x as f64 - *y as f64;
            d * d
        })
        .sum::<f64>()
        / n;
    Ok(if mse == 0.0 {
        f64::INFINITY
    } else {
        -10.0 * log10(mse)
    })
}

/// Largest absolute channel difference.
pub fn max_abs_diff(a: &ImageF, b: &ImageF) -> Result<f64> {
    check(a, b)?;
    Ok(a.data
        .iter()
        .zip(&b.data)
        .map(|(x, y)| (*x as f64 - *y as f64).abs())
        .fold(0.0, f64::max))
}

fn check(a: &ImageF, b: &ImageF) -> Result<()> {
    if a.same_shape(b) {
        Ok(())
    } else {
        Err(Error::Config(alloc::format!(
            "image shapes differ: {}x{}x{} vs {}x{}x{}",
            a.width, a.height, a.channels, b.width, b.height, b.channels
        )))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_images() {
        let a = ImageF::from_data(2, 1, 1, alloc::vec![0.2, 0.4]).unwrap();
        assert_eq!(mean_l1(&a, &a).unwrap(), 0.0);
        assert!(psnr(&a, &a).unwrap().is_infinite());
    }

    #[test]
    fn known_values() {
        let a = ImageF::from_data(2, 1, 1, alloc::vec![0.0, 0.0]).unwrap();
        let b = ImageF::from_data(2, 1, 1, alloc::vec![0.1, 0.1]).unwrap();
        assert!((mean_l1(&a, &b).unwrap() - 0.1).abs() < 1e-7);
        assert!((psnr(&a, &b).unwrap() - 20.0).abs() < 1e-4);
    }
}
