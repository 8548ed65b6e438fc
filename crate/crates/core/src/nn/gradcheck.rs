use super::Params;

/// Central-difference step.
pub const FD_STEP: f64 = 1e-5;

/// Magnitudes below this are compared absolutely, so coordinates whose true
/// gradient is zero do not divide by rounding noise.
pub const REL_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct Coordinate {
    pub tensor: usize,
    pub index: usize,
    pub analytic: f64,
    pub numeric: f64,
    pub rel_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    pub checked: usize,
    pub worst: Option<Coordinate>,
    /// Every coordinate above the tolerance.
    pub flagged: Vec<Coordinate>,
    pub tolerance: f64,
}

impl GradCheckReport {
    pub fn passed(&self) -> bool {
        self.flagged.is_empty()
    }
}

pub fn rel_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(REL_FLOOR)
}

/// Compares `analytic` (same shape as `model`) against central differences
/// of `loss` for every parameter. `model` is perturbed and restored.
pub fn grad_check<P: Params>(
    model: &mut P,
    loss: impl Fn(&P) -> f64,
    analytic: &P,
    tolerance: f64,
) -> GradCheckReport {
    assert!(model.same_shape(analytic), "gradient shape differs from model");
    let analytic_flat = analytic.to_flat();
    let shapes: Vec<usize> = model.tensors().iter().map(|t| t.len()).collect();
    let mut report = GradCheckReport {
        max_rel_error: 0.0,
        checked: 0,
        worst: None,
        flagged: Vec::new(),
        tolerance,
    };
    let mut flat = 0;
    for (tensor, len) in shapes.into_iter().enumerate() {
        for index in 0..len {
            let original = nth(model, tensor, index);
            set(model, tensor, index, original + FD_STEP);
            let up = loss(model);
            set(model, tensor, index, original - FD_STEP);
            let down = loss(model);
            set(model, tensor, index, original);
            let numeric = (up - down) / (2.0 * FD_STEP);
            let a = analytic_flat[flat];
            flat += 1;
            let rel = rel_error(a, numeric);
            let coord = Coordinate {
                tensor,
                index,
                analytic: a,
                numeric,
                rel_error: rel,
            };
            report.checked += 1;
            if rel > report.max_rel_error || report.worst.is_none() {
                report.max_rel_error = rel.max(report.max_rel_error);
                report.worst = Some(coord.clone());
            }
            if rel > tolerance {
                report.flagged.push(coord);
            }
        }
    }
    report
}

fn nth<P: Params>(model: &P, tensor: usize, index: usize) -> f64 {
    let t = model.tensors()[tensor];
    t[[index / t.ncols(), index % t.ncols()]]
}

fn set<P: Params>(model: &mut P, tensor: usize, index: usize, value: f64) {
    let mut ts = model.tensors_mut();
    let t = &mut ts[tensor];
    let cols = t.ncols();
    t[[index / cols, index % cols]] = value;
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{Activation, DenseNet};
    use ndarray::array;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn linear_case() -> (DenseNet, ndarray::Array2<f64>, DenseNet) {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let net = DenseNet::mlp(&[3, 2], Activation::Linear, &mut rng);
        let x = array![[1.0, -2.0, 0.5], [0.3, 0.1, -1.0]];
        let tape = net.forward_tape(&x).unwrap();
        let mut grad = net.zeros_like();
        net.backward(&tape, &ndarray::Array2::ones((2, 2)), &mut grad).unwrap();
        (net, x, grad)
    }

    #[test]
    fn linear_function_is_machine_exact() {
        let (mut net, x, grad) = linear_case();
        let report = grad_check(&mut net, |n| n.forward(&x).unwrap().sum(), &grad, 1e-4);
        assert!(report.max_rel_error < 1e-9, "{report:?}");
        assert!(report.passed());
        assert_eq!(report.checked, 8);
    }

    #[test]
    fn corrupted_gradient_is_flagged() {
        let (mut net, x, mut grad) = linear_case();
        grad.layers_mut()[0].dense.w[[1, 2]] += 0.5;
        let report = grad_check(&mut net, |n| n.forward(&x).unwrap().sum(), &grad, 1e-4);
        assert!(!report.passed());
        assert_eq!(report.flagged.len(), 1);
        assert_eq!((report.flagged[0].tensor, report.flagged[0].index), (0, 5));
    }
}
