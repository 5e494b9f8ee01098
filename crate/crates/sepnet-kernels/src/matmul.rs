use rayon::prelude::*;

/// `out[n x m] = a[n x k] * b[k x m]`, all row-major.
///
/// Rows of the output are computed in parallel, but each output element is
/// accumulated in a fixed k-order, so the result is bitwise identical
/// regardless of thread count.
pub fn matmul(a: &[f32], b: &[f32], n: usize, k: usize, m: usize) -> Vec<f32> {
    debug_assert_eq!(a.len(), n * k);
    debug_assert_eq!(b.len(), k * m);
    let mut out = vec![0.0f32; n * m];
    out.par_chunks_mut(m).enumerate().for_each(|(i, row)| {
        let a_row = &a[i * k..(i + 1) * k];
        for (p, &av) in a_row.iter().enumerate() {
            if av == 0.0 {
                continue;
            }
            let b_row = &b[p * m..(p + 1) * m];
            for (o, &bv) in row.iter_mut().zip(b_row) {
                *o += av * bv;
            }
        }
    });
    out
}

/// `out[k x m] = a^T[k x n] * b[n x m]` where `a` is `n x k` row-major.
///
/// Used by backward passes to form weight gradients without materializing
/// the transpose.
pub fn matmul_at_b(a: &[f32], b: &[f32], n: usize, k: usize, m: usize) -> Vec<f32> {
    debug_assert_eq!(a.len(), n * k);
    debug_assert_eq!(b.len(), n * m);
    let mut out = vec![0.0f32; k * m];
    out.par_chunks_mut(m).enumerate().for_each(|(p, row)| {
        for i in 0..n {
            let av = a[i * k + p];
            if av == 0.0 {
                continue;
            }
            let b_row = &b[i * m..(i + 1) * m];
            for (o, &bv) in row.iter_mut().zip(b_row) {
                *o += av * bv;
            }
        }
    });
    out
}

/// `out[n x k] = a[n x m] * b^T[m x k]` where `b` is `k x m` row-major.
///
/// Used by backward passes to push gradients through a matmul's left
/// operand.
pub fn matmul_a_bt(a: &[f32], b: &[f32], n: usize, m: usize, k: usize) -> Vec<f32> {
    debug_assert_eq!(a.len(), n * m);
    debug_assert_eq!(b.len(), k * m);
    let mut out = vec![0.0f32; n * k];
    out.par_chunks_mut(k).enumerate().for_each(|(i, row)| {
        let a_row = &a[i * m..(i + 1) * m];
        for (p, o) in row.iter_mut().enumerate() {
            let b_row = &b[p * m..(p + 1) * m];
            let mut acc = 0.0f32;
            for (&av, &bv) in a_row.iter().zip(b_row) {
                acc += av * bv;
            }
            *o = acc;
        }
    });
    out
}
