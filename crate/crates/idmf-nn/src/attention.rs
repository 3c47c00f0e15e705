//! Scaled dot-product attention.

use crate::tape::{Tape, Tensor};

/// Attend over `keys`/`values` (T x h) with `query` rows (B x h).
///
/// Weights are softmax(query . key^T / sqrt(h)) along the key axis; the
/// context is the weight-averaged value rows. Returns (context B x h,
/// weights B x T).
pub fn scaled_dot_attention(
    tape: &mut Tape,
    query: Tensor,
    keys: Tensor,
    values: Tensor,
) -> (Tensor, Tensor) {
    assert_eq!(
        query.cols, keys.cols,
        "attention width mismatch: query {}x{}, keys {}x{}",
        query.rows, query.cols, keys.rows, keys.cols
    );
    assert_eq!(
        keys.rows, values.rows,
        "attention length mismatch: keys {}x{}, values {}x{}",
        keys.rows, keys.cols, values.rows, values.cols
    );
    let logits = tape.matmul_nt(query, keys);
    let scaled = tape.scale(logits, 1.0 / (query.cols as f64).sqrt());
    let weights = tape.softmax(scaled);
    let context = tape.matmul(weights, values);
    (context, weights)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_key_gets_full_weight() {
        let mut tape = Tape::new();
        let q = tape.leaf(1, 3, &[0.3, -0.7, 1.1]);
        let k = tape.leaf(1, 3, &[0.9, 0.2, -0.4]);
        let v = tape.leaf(1, 3, &[5.0, 6.0, 7.0]);
        let (context, weights) = scaled_dot_attention(&mut tape, q, k, v);
        assert_eq!(tape.value(weights), &[1.0]);
        assert_eq!(tape.value(context), &[5.0, 6.0, 7.0]);
    }

    #[test]
    fn identical_keys_average_the_values() {
        let mut tape = Tape::new();
        let q = tape.leaf(1, 2, &[0.4, -1.2]);
        let k = tape.leaf(3, 2, &[0.5, 0.5, 0.5, 0.5, 0.5, 0.5]);
        let v = tape.leaf(3, 2, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let (context, weights) = scaled_dot_attention(&mut tape, q, k, v);
        for w in tape.value(weights) {
            assert!((w - 1.0 / 3.0).abs() < 1e-12);
        }
        let c = tape.value(context);
        assert!((c[0] - 3.0).abs() < 1e-12);
        assert!((c[1] - 4.0).abs() < 1e-12);
    }

    #[test]
    fn hand_computed_two_by_two() {
        // h = 2, T = 2, checked to 1e-12 against scalar arithmetic.
        let q = [0.6, -0.2];
        let k = [0.3, 0.8, -0.5, 0.1];
        let v = [1.0, -1.0, 2.0, 0.5];
        let mut tape = Tape::new();
        let qt = tape.leaf(1, 2, &q);
        let kt = tape.leaf(2, 2, &k);
        let vt = tape.leaf(2, 2, &v);
        let (context, weights) = scaled_dot_attention(&mut tape, qt, kt, vt);

        let scale = 1.0 / 2f64.sqrt();
        let l0 = (q[0] * k[0] + q[1] * k[1]) * scale;
        let l1 = (q[0] * k[2] + q[1] * k[3]) * scale;
        let m = l0.max(l1);
        let (e0, e1) = ((l0 - m).exp(), (l1 - m).exp());
        let z = e0 + e1;
        let (w0, w1) = (e0 / z, e1 / z);
        let c = [w0 * v[0] + w1 * v[2], w0 * v[1] + w1 * v[3]];

        let got_w = tape.value(weights);
        assert!((got_w[0] - w0).abs() < 1e-12);
        assert!((got_w[1] - w1).abs() < 1e-12);
        let got_c = tape.value(context);
        assert!((got_c[0] - c[0]).abs() < 1e-12);
        assert!((got_c[1] - c[1]).abs() < 1e-12);
    }

    #[test]
    fn weights_are_a_distribution_per_row() {
        let mut tape = Tape::new();
        let q = tape.leaf(3, 4, &[0.1; 12]);
        let data: Vec<f64> = (0..20).map(|i| (i as f64 * 0.37).sin()).collect();
        let k = tape.leaf(5, 4, &data);
        let v = tape.leaf(5, 4, &data);
        let (_, weights) = scaled_dot_attention(&mut tape, q, k, v);
        for row in tape.value(weights).chunks(5) {
            let sum: f64 = row.iter().sum();
            assert!((sum - 1.0).abs() < 1e-12);
            assert!(row.iter().all(|&w| w >= 0.0));
        }
    }
}
