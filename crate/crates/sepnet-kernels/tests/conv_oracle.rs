//! The im2col convolution and the direct depthwise kernel are checked
//! against naive definition-following loops over a broad sweep of shapes,
//! strides, and padding modes.

use sepnet_kernels::reference;
use sepnet_kernels::{conv2d, depthwise_conv2d, Padding, Rng, Tensor};

fn random_tensor(rng: &mut Rng, shape: &[usize]) -> Tensor {
    let n: usize = shape.iter().product();
    let data = (0..n).map(|_| rng.normal()).collect();
    Tensor::new(shape.to_vec(), data).unwrap()
}

fn assert_close(got: &Tensor, want: &Tensor, tol: f32, what: &str) {
    assert_eq!(got.shape(), want.shape(), "{what}: shape");
    for (i, (g, w)) in got.data().iter().zip(want.data()).enumerate() {
        assert!(
            (g - w).abs() <= tol * w.abs().max(1.0),
            "{what}: element {i}: {g} vs {w}"
        );
    }
}

#[test]
fn conv2d_matches_naive_loops_across_shapes() {
    let mut rng = Rng::new(2024);
    let mut cases = 0usize;
    for &padding in &[Padding::Same, Padding::Valid] {
        for &(h, w) in &[(1, 1), (3, 3), (4, 6), (5, 5), (7, 4), (8, 8)] {
            for &(kh, kw) in &[(1, 1), (2, 2), (3, 3), (1, 3), (5, 5)] {
                for &stride in &[1, 2, 3] {
                    if padding == Padding::Valid && (h < kh || w < kw) {
                        continue;
                    }
                    for &(n, cin, cout) in &[(1, 1, 1), (2, 3, 4)] {
                        let input = random_tensor(&mut rng, &[n, h, w, cin]);
                        let weights = random_tensor(&mut rng, &[kh, kw, cin, cout]);
                        let bias = random_tensor(&mut rng, &[cout]);
                        let got = conv2d(&input, &weights, &bias, stride, padding).unwrap();
                        let want =
                            reference::conv2d_naive(&input, &weights, &bias, stride, padding)
                                .unwrap();
                        assert_close(
                            &got,
                            &want,
                            1e-5,
                            &format!("conv {h}x{w} k{kh}x{kw} s{stride} {padding:?}"),
                        );
                        cases += 1;
                    }
                }
            }
        }
    }
    assert!(cases >= 50, "only {cases} shape cases were exercised");
}

#[test]
fn depthwise_matches_naive_loops_across_shapes() {
    let mut rng = Rng::new(2025);
    let mut cases = 0usize;
    for &padding in &[Padding::Same, Padding::Valid] {
        for &(h, w) in &[(1, 1), (3, 3), (5, 7), (8, 8)] {
            for &k in &[1, 2, 3, 5] {
                for &stride in &[1, 2, 3] {
                    if padding == Padding::Valid && (h < k || w < k) {
                        continue;
                    }
                    for &(n, c) in &[(1, 1), (2, 5)] {
                        let input = random_tensor(&mut rng, &[n, h, w, c]);
                        let weights = random_tensor(&mut rng, &[k, k, c]);
                        let bias = random_tensor(&mut rng, &[c]);
                        let got = depthwise_conv2d(&input, &weights, &bias, stride, padding).unwrap();
                        let want =
                            reference::depthwise_naive(&input, &weights, &bias, stride, padding)
                                .unwrap();
                        assert_close(
                            &got,
                            &want,
                            1e-5,
                            &format!("depthwise {h}x{w} k{k} s{stride} {padding:?}"),
                        );
                        cases += 1;
                    }
                }
            }
        }
    }
    assert!(cases >= 50, "only {cases} shape cases were exercised");
}

#[test]
fn same_padding_follows_ceil_rule() {
    // 224 -> 112 under stride 2 with a 3x3 kernel; odd input pads more on
    // the high side.
    let mut rng = Rng::new(3);
    let input = random_tensor(&mut rng, &[1, 224, 224, 1]);
    let weights = random_tensor(&mut rng, &[3, 3, 1, 1]);
    let bias = Tensor::zeros(&[1]);
    let out = conv2d(&input, &weights, &bias, 2, Padding::Same).unwrap();
    assert_eq!(out.shape(), &[1, 112, 112, 1]);

    let input = random_tensor(&mut rng, &[1, 7, 7, 1]);
    let out = conv2d(&input, &weights, &bias, 2, Padding::Same).unwrap();
    assert_eq!(out.shape(), &[1, 4, 4, 1]);

    let out = conv2d(&input, &weights, &bias, 1, Padding::Valid).unwrap();
    assert_eq!(out.shape(), &[1, 5, 5, 1]);
}

#[test]
fn pointwise_conv_equals_per_pixel_dense() {
    // A 1x1 convolution is a dense map applied at every spatial position.
    let mut rng = Rng::new(4);
    let input = random_tensor(&mut rng, &[2, 3, 3, 4]);
    let weights = random_tensor(&mut rng, &[1, 1, 4, 6]);
    let bias = random_tensor(&mut rng, &[6]);
    let out = conv2d(&input, &weights, &bias, 1, Padding::Same).unwrap();

    let flat_in = input.reshape(&[2 * 3 * 3, 4]).unwrap();
    let flat_w = weights.reshape(&[4, 6]).unwrap();
    let dense_out = sepnet_kernels::dense(&flat_in, &flat_w, &bias).unwrap();
    assert_eq!(out.data(), dense_out.data());
}
