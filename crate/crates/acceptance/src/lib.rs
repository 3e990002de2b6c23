//! Reference implementations written independently of the main crate, used
//! as oracles by the acceptance suite. They favour plain loops over speed.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sarcasm::metrics::ConfusionMatrix;
use sarcasm::network::MlpModel;

/// Counts the four outcomes by scanning each pair once per cell.
pub fn brute_force_confusion(predicted: &[bool], actual: &[bool]) -> ConfusionMatrix {
    let count = |p: bool, a: bool| {
        predicted
            .iter()
            .zip(actual)
            .filter(|&(&x, &y)| x == p && y == a)
            .count() as u64
    };
    ConfusionMatrix {
        tp: count(true, true),
        fp: count(true, false),
        fn_: count(false, true),
        tn: count(false, false),
    }
}

/// Precision, recall, F1 and accuracy from raw counts, 0 for an empty denominator.
pub fn reference_metrics(cm: &ConfusionMatrix) -> (f64, f64, f64, f64) {
    let div = |a: u64, b: u64| if b == 0 { 0.0 } else { a as f64 / b as f64 };
    let p = div(cm.tp, cm.tp + cm.fp);
    let r = div(cm.tp, cm.tp + cm.fn_);
    let f = if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    };
    let acc = div(cm.tp + cm.tn, cm.tp + cm.fp + cm.fn_ + cm.tn);
    (p, r, f, acc)
}

/// Dropout-free loss `-ln softmax(f(x))[class]` computed with its own
/// matrix-vector products and a log-sum-exp.
pub fn reference_loss(model: &MlpModel, x: &[f64], class: usize) -> f64 {
    let mut a = x.to_vec();
    let last = model.layers.len() - 1;
    for (l, layer) in model.layers.iter().enumerate() {
        let mut z = vec![0.0; layer.fan_out];
        for (i, zi) in z.iter_mut().enumerate() {
            let mut s = layer.bias[i];
            for (j, aj) in a.iter().enumerate() {
                s += layer.weights[i * layer.fan_in + j] * aj;
            }
            *zi = s;
        }
        a = if l == last {
            z
        } else {
            z.into_iter()
                .map(|v| if v > 0.0 { v } else { 0.0 })
                .collect()
        };
    }
    let m = a.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lse = m + a.iter().map(|v| (v - m).exp()).sum::<f64>().ln();
    lse - a[class]
}

/// Central differences of [`reference_loss`] for every parameter, in layer
/// order with each layer's weights before its biases.
pub fn finite_difference_gradient(model: &MlpModel, x: &[f64], class: usize, h: f64) -> Vec<f64> {
    let mut probe = model.clone();
    let mut out = Vec::new();
    for l in 0..model.layers.len() {
        for k in 0..model.layers[l].weights.len() {
            let w = model.layers[l].weights[k];
            probe.layers[l].weights[k] = w + h;
            let up = reference_loss(&probe, x, class);
            probe.layers[l].weights[k] = w - h;
            let down = reference_loss(&probe, x, class);
            probe.layers[l].weights[k] = w;
            out.push((up - down) / (2.0 * h));
        }
        for k in 0..model.layers[l].bias.len() {
            let b = model.layers[l].bias[k];
            probe.layers[l].bias[k] = b + h;
            let up = reference_loss(&probe, x, class);
            probe.layers[l].bias[k] = b - h;
            let down = reference_loss(&probe, x, class);
            probe.layers[l].bias[k] = b;
            out.push((up - down) / (2.0 * h));
        }
    }
    out
}

/// `‖a − b‖ / max(‖a‖ + ‖b‖, tiny)`.
pub fn relative_error(a: &[f64], b: &[f64]) -> f64 {
    let norm = |v: &mut dyn Iterator<Item = f64>| v.map(|x| x * x).sum::<f64>().sqrt();
    let diff = norm(&mut a.iter().zip(b).map(|(x, y)| x - y));
    let scale = norm(&mut a.iter().copied()) + norm(&mut b.iter().copied());
    diff / scale.max(1e-300)
}

/// Scalar Adam with bias correction, returning the parameter after each step.
pub fn reference_adam(mut w: f64, grads: &[f64], lr: f64) -> Vec<f64> {
    let (b1, b2, eps) = (0.9f64, 0.999f64, 1e-8);
    let (mut m, mut v) = (0.0, 0.0);
    let mut out = Vec::with_capacity(grads.len());
    for (i, &g) in grads.iter().enumerate() {
        let t = (i + 1) as i32;
        m = b1 * m + (1.0 - b1) * g;
        v = b2 * v + (1.0 - b2) * g * g;
        let mh = m / (1.0 - b1.powi(t));
        let vh = v / (1.0 - b2.powi(t));
        w -= lr * mh / (vh.sqrt() + eps);
        out.push(w);
    }
    out
}

/// `n` points in the unit cube labelled by a random hyperplane through its
/// centre, alternating classes, none closer than 0.1 (in `w·x` units) to the plane.
pub fn separable_set(n: usize, seed: u64) -> (Vec<Vec<f64>>, Vec<bool>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal: Vec<f64> = (0..15).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    while xs.len() < n {
        let x: Vec<f64> = (0..15).map(|_| rng.gen_range(0.0..1.0)).collect();
        let s: f64 = normal.iter().zip(&x).map(|(a, b)| a * (b - 0.5)).sum();
        if s.abs() < 0.1 {
            continue;
        }
        let want = xs.len() % 2 == 0;
        if (s > 0.0) == want {
            xs.push(x);
            ys.push(want);
        }
    }
    (xs, ys)
}

/// A separating hyperplane `(w, b)` with `sign(w·x + b)` matching every
/// label, found by the perceptron rule, or `None` if none was found within
/// `max_epochs` passes.
pub fn separating_hyperplane(
    points: &[Vec<f64>],
    labels: &[bool],
    max_epochs: usize,
) -> Option<(Vec<f64>, f64)> {
    let dim = points.first()?.len();
    let mut w = vec![0.0; dim];
    let mut b = 0.0;
    for _ in 0..max_epochs {
        let mut mistakes = 0;
        for (x, &y) in points.iter().zip(labels) {
            let s = if y { 1.0 } else { -1.0 };
            let margin: f64 = w.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + b;
            if s * margin <= 0.0 {
                w.iter_mut().zip(x).for_each(|(wi, xi)| *wi += s * xi);
                b += s;
                mistakes += 1;
            }
        }
        if mistakes == 0 {
            return Some((w, b));
        }
    }
    None
}

/// Checks a hyperplane certificate against every point.
pub fn certifies(points: &[Vec<f64>], labels: &[bool], w: &[f64], b: f64) -> bool {
    points.iter().zip(labels).all(|(x, &y)| {
        let m: f64 = w.iter().zip(x).map(|(a, c)| a * c).sum::<f64>() + b;
        if y {
            m > 0.0
        } else {
            m < 0.0
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn brute_force_counts() {
        let cm = brute_force_confusion(&[true, true, false, false], &[true, false, true, false]);
        assert_eq!((cm.tp, cm.fp, cm.fn_, cm.tn), (1, 1, 1, 1));
    }

    #[test]
    fn adam_reference_first_step() {
        assert!((reference_adam(0.0, &[1.0], 0.01)[0] + 0.01).abs() < 1e-9);
    }

    #[test]
    fn xor_is_not_separable_and_and_is() {
        let pts = vec![
            vec![0.0, 0.0],
            vec![0.0, 1.0],
            vec![1.0, 0.0],
            vec![1.0, 1.0],
        ];
        assert!(separating_hyperplane(&pts, &[false, true, true, false], 1000).is_none());
        let (w, b) = separating_hyperplane(&pts, &[false, false, false, true], 1000).unwrap();
        assert!(certifies(&pts, &[false, false, false, true], &w, b));
    }
}
