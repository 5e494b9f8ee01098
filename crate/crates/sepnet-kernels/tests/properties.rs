use proptest::collection::vec;
use proptest::prelude::*;
use sepnet_kernels::reference;
use sepnet_kernels::{
    conv2d, dense, depthwise_conv2d, global_avg_pool, relu, softmax, Padding, Tensor,
};

fn tensor_strategy(shape: Vec<usize>) -> impl Strategy<Value = Tensor> {
    let n: usize = shape.iter().product();
    vec(-10.0f32..10.0, n).prop_map(move |data| Tensor::new(shape.clone(), data).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn softmax_rows_are_distributions(t in tensor_strategy(vec![3, 5])) {
        let p = softmax(&t).unwrap();
        for row in p.data().chunks_exact(5) {
            let sum: f32 = row.iter().sum();
            prop_assert!((sum - 1.0).abs() < 1e-5);
            prop_assert!(row.iter().all(|&v| (0.0..=1.0).contains(&v)));
        }
    }

    #[test]
    fn relu_is_idempotent(t in tensor_strategy(vec![2, 9])) {
        let once = relu(&t);
        let twice = relu(&once);
        prop_assert_eq!(once.data(), twice.data());
    }

    #[test]
    fn dense_with_identity_weights_is_passthrough(t in tensor_strategy(vec![4, 3])) {
        let mut eye = vec![0.0f32; 9];
        for i in 0..3 {
            eye[i * 3 + i] = 1.0;
        }
        let w = Tensor::new(vec![3, 3], eye).unwrap();
        let b = Tensor::zeros(&[3]);
        let out = dense(&t, &w, &b).unwrap();
        prop_assert_eq!(out.data(), t.data());
    }

    #[test]
    fn conv_matches_reference_on_random_inputs(
        input in tensor_strategy(vec![1, 6, 6, 2]),
        weights in tensor_strategy(vec![3, 3, 2, 3]),
        bias in tensor_strategy(vec![3]),
        stride in 1usize..3,
    ) {
        let got = conv2d(&input, &weights, &bias, stride, Padding::Same).unwrap();
        let want = reference::conv2d_naive(&input, &weights, &bias, stride, Padding::Same).unwrap();
        prop_assert_eq!(got.shape(), want.shape());
        for (g, w) in got.data().iter().zip(want.data()) {
            prop_assert!((g - w).abs() <= 1e-4 * w.abs().max(1.0));
        }
    }

    #[test]
    fn depthwise_channels_do_not_mix(
        input in tensor_strategy(vec![1, 5, 5, 3]),
        weights in tensor_strategy(vec![3, 3, 3]),
        delta in -5.0f32..5.0,
    ) {
        let bias = Tensor::zeros(&[3]);
        let base = depthwise_conv2d(&input, &weights, &bias, 1, Padding::Same).unwrap();

        // Perturb only channel 0 of the input.
        let mut bumped = input.clone();
        for i in (0..bumped.numel()).step_by(3) {
            bumped.data_mut()[i] += delta;
        }
        let out = depthwise_conv2d(&bumped, &weights, &bias, 1, Padding::Same).unwrap();
        for (i, (b, o)) in base.data().iter().zip(out.data()).enumerate() {
            if i % 3 != 0 {
                prop_assert_eq!(b, o, "channel {} changed", i % 3);
            }
        }
    }

    #[test]
    fn depthwise_then_identity_pointwise_is_depthwise(
        input in tensor_strategy(vec![1, 4, 4, 3]),
        weights in tensor_strategy(vec![3, 3, 3]),
    ) {
        let bias = Tensor::zeros(&[3]);
        let dw = depthwise_conv2d(&input, &weights, &bias, 1, Padding::Same).unwrap();

        let mut eye = vec![0.0f32; 9];
        for i in 0..3 {
            eye[i * 3 + i] = 1.0;
        }
        let pw_weights = Tensor::new(vec![1, 1, 3, 3], eye).unwrap();
        let composed = conv2d(&dw, &pw_weights, &bias, 1, Padding::Same).unwrap();
        prop_assert_eq!(dw.data(), composed.data());
    }

    #[test]
    fn global_avg_pool_of_constant_is_constant(value in -10.0f32..10.0) {
        let t = Tensor::full(&[2, 3, 4, 2], value);
        let out = global_avg_pool(&t).unwrap();
        for &v in out.data() {
            prop_assert!((v - value).abs() < 1e-4);
        }
    }

    #[test]
    fn pool_then_spread_preserves_total(t in tensor_strategy(vec![1, 2, 2, 1])) {
        let pooled = global_avg_pool(&t).unwrap();
        let spread = sepnet_kernels::global_avg_pool_backward(&pooled, 2, 2).unwrap();
        let total_in: f32 = pooled.data().iter().sum();
        let total_out: f32 = spread.data().iter().sum();
        prop_assert!((total_in - total_out).abs() < 1e-4);
    }
}
