use ndarray::Array2;

/// Maps one value to grey: `[z_min, eps]` onto 0..=127 and `(eps, z_max]`
/// onto 127..=255, rounding half away from zero.
///
/// A branch with a zero-width interval yields its lower bound. A flat range
/// (`z_min == z_max`) yields 255, since every entry then equals the
/// self-similarity on the diagonal.
pub fn project_value(z: f64, z_min: f64, eps: f64, z_max: f64) -> u8 {
    if z_max <= z_min {
        return 255;
    }
    let g = if z <= eps {
        let span = eps - z_min;
        if span <= 0.0 {
            0.0
        } else {
            (z - z_min) / span * 127.0
        }
    } else {
        let span = z_max - eps;
        if span <= 0.0 {
            127.0
        } else {
            127.0 + (z - eps) / span * 128.0
        }
    };
    g.round().clamp(0.0, 255.0) as u8
}

/// Projects every entry of `z` with its own min and max.
pub fn project_grey(z: &Array2<f64>, eps: f64) -> Array2<u8> {
    let (lo, hi) = z
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)));
    z.mapv(|x| project_value(x, lo, eps, hi))
}

/// Bilinear resize with half-pixel centres and edge clamping. A matrix
/// already `side` wide is returned unchanged.
pub fn resize_bilinear(src: &Array2<u8>, side: usize) -> Array2<u8> {
    let (h, w) = src.dim();
    if h == side && w == side {
        return src.clone();
    }
    let axis = |len: usize, out: usize| -> Vec<(usize, usize, f64)> {
        let scale = len as f64 / out as f64;
        (0..out)
            .map(|d| {
                let s = ((d as f64 + 0.5) * scale - 0.5).clamp(0.0, (len - 1) as f64);
                let lo = s.floor() as usize;
                let hi = (lo + 1).min(len - 1);
                (lo, hi, s - lo as f64)
            })
            .collect()
    };
    let rows = axis(h, side);
    let cols = axis(w, side);
    Array2::from_shape_fn((side, side), |(r, c)| {
        let (r0, r1, fr) = rows[r];
        let (c0, c1, fc) = cols[c];
        let p = |y: usize, x: usize| src[[y, x]] as f64;
        let top = p(r0, c0) * (1.0 - fc) + p(r0, c1) * fc;
        let bottom = p(r1, c0) * (1.0 - fc) + p(r1, c1) * fc;
        (top * (1.0 - fr) + bottom * fr).round().clamp(0.0, 255.0) as u8
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn boundary_values() {
        assert_eq!(project_value(0.0, 0.0, 0.8, 1.0), 0);
        assert_eq!(project_value(0.8, 0.0, 0.8, 1.0), 127);
        assert_eq!(project_value(1.0, 0.0, 0.8, 1.0), 255);
        assert_eq!(project_value(0.9, 0.0, 0.8, 1.0), 191);
        assert_eq!(project_value(0.4, 0.0, 0.8, 1.0), 64);
    }

    #[test]
    fn degenerate_ranges() {
        assert_eq!(project_value(0.5, 0.5, 0.5, 1.0), 0);
        assert_eq!(project_value(1.0, 0.0, 1.0, 1.0), 127);
        assert_eq!(project_value(0.3, 0.3, 0.3, 0.3), 255);
    }

    #[test]
    fn upscale_interpolates_and_keeps_corners() {
        let src = ndarray::arr2(&[[0u8, 255], [255, 0]]);
        let out = resize_bilinear(&src, 4);
        assert_eq!(out[[0, 0]], 0);
        assert_eq!(out[[0, 3]], 255);
        // half-pixel centres: column 1 samples source x = 0.25
        assert_eq!(out[[0, 1]], 64);
        assert_eq!(out, out.t().to_owned());
    }

    #[test]
    fn downscale_of_constant_is_constant() {
        let src = Array2::from_elem((45, 45), 77u8);
        assert!(resize_bilinear(&src, 32).iter().all(|&g| g == 77));
    }

    proptest! {
        #[test]
        fn monotone_in_range_and_continuous(
            z_min in -1.0f64..1.0, a in 0.0f64..1.0, b in 0.0f64..1.0, t1 in 0.0f64..1.0, t2 in 0.0f64..1.0,
        ) {
            let eps = z_min + a;
            let z_max = eps + b + 1e-9;
            let (lo, hi) = if t1 <= t2 { (t1, t2) } else { (t2, t1) };
            let za = z_min + lo * (z_max - z_min);
            let zb = z_min + hi * (z_max - z_min);
            prop_assert!(project_value(za, z_min, eps, z_max) <= project_value(zb, z_min, eps, z_max));
            let g = project_value(eps, z_min, eps, z_max);
            prop_assert!(g == 127 || (a == 0.0 && g == 0));
            let above = project_value(eps + 1e-12, z_min, eps, z_max);
            prop_assert!((127..=128).contains(&above));
        }
    }
}
