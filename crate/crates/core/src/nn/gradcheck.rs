use super::{Parameter, Rng};

/// Anything that exposes its trainable parameters in a fixed order.
pub trait ParameterSet {
    fn parameters(&self) -> Vec<&Parameter>;
    fn parameters_mut(&mut self) -> Vec<&mut Parameter>;
}

impl ParameterSet for Vec<Parameter> {
    fn parameters(&self) -> Vec<&Parameter> {
        self.iter().collect()
    }

    fn parameters_mut(&mut self) -> Vec<&mut Parameter> {
        self.iter_mut().collect()
    }
}

#[derive(Debug, Clone, Copy)]
pub enum CoordinateSample {
    All,
    /// Up to `per_parameter` distinct coordinates from each parameter.
    Random {
        per_parameter: usize,
        seed: u64,
    },
}

#[derive(Debug, Clone)]
pub struct GradCheckReport {
    pub max_relative_error: f64,
    /// Parameter name and flat coordinate of the worst disagreement.
    pub worst: Option<(String, usize)>,
    pub coordinates_checked: usize,
}

/// Compares the analytic gradients currently stored in `model` against
/// central differences `(f(θ+ε) − f(θ−ε)) / 2ε` of `loss`.
///
/// The relative error per coordinate is
/// `|analytic − numeric| / max(1e-8, |analytic| + |numeric|)`.
pub fn finite_diff_check<M, F>(
    model: &mut M,
    mut loss: F,
    epsilon: f64,
    sample: CoordinateSample,
) -> GradCheckReport
where
    M: ParameterSet,
    F: FnMut(&M) -> f64,
{
    assert!(
        (1e-7..=1e-4).contains(&epsilon),
        "epsilon {epsilon} outside [1e-7, 1e-4]"
    );
    let plan: Vec<(String, Vec<usize>, Vec<f64>)> = {
        let mut rng = match sample {
            CoordinateSample::Random { seed, .. } => Some(Rng::new(seed)),
            CoordinateSample::All => None,
        };
        model
            .parameters()
            .into_iter()
            .map(|p| {
                let n = p.len();
                let mut coords: Vec<usize> = (0..n).collect();
                if let (Some(rng), CoordinateSample::Random { per_parameter, .. }) =
                    (rng.as_mut(), sample)
                {
                    rng.shuffle(&mut coords);
                    coords.truncate(per_parameter.min(n));
                    coords.sort_unstable();
                }
                let analytic = coords.iter().map(|&c| p.grad.as_slice()[c]).collect();
                (p.name.clone(), coords, analytic)
            })
            .collect()
    };

    let mut report = GradCheckReport {
        max_relative_error: 0.0,
        worst: None,
        coordinates_checked: 0,
    };
    for (pi, (name, coords, analytic)) in plan.iter().enumerate() {
        for (&c, &a) in coords.iter().zip(analytic) {
            let original = model.parameters_mut()[pi].value.as_slice()[c];
            model.parameters_mut()[pi].value.as_mut_slice()[c] = original + epsilon;
            let up = loss(model);
            model.parameters_mut()[pi].value.as_mut_slice()[c] = original - epsilon;
            let down = loss(model);
            model.parameters_mut()[pi].value.as_mut_slice()[c] = original;

            let numeric = (up - down) / (2.0 * epsilon);
            let rel = (a - numeric).abs() / (a.abs() + numeric.abs()).max(1e-8);
            report.coordinates_checked += 1;
            if rel > report.max_relative_error || report.worst.is_none() {
                report.max_relative_error = rel;
                report.worst = Some((name.clone(), c));
            }
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{tanh, Tensor2};

    fn params(rng: &mut Rng) -> Vec<Parameter> {
        vec![
            Parameter::new("a", Tensor2::uniform(3, 2, 1.0, rng)),
            Parameter::new("b", Tensor2::uniform(1, 4, 1.0, rng)),
        ]
    }

    #[test]
    fn quadratic_is_exact() {
        let mut rng = Rng::new(11);
        let mut ps = params(&mut rng);
        for p in ps.iter_mut() {
            p.grad = p.value.clone();
        }
        let loss = |ps: &Vec<Parameter>| {
            0.5 * ps
                .iter()
                .flat_map(|p| p.value.as_slice())
                .map(|x| x * x)
                .sum::<f64>()
        };
        let r = finite_diff_check(&mut ps, loss, 1e-5, CoordinateSample::All);
        assert_eq!(r.coordinates_checked, 10);
        assert!(r.max_relative_error < 1e-8, "{r:?}");
    }

    #[test]
    fn tanh_sum() {
        let mut rng = Rng::new(12);
        let mut ps = params(&mut rng);
        for p in ps.iter_mut() {
            let g: Vec<f64> = p
                .value
                .as_slice()
                .iter()
                .map(|x| 1.0 - x.tanh().powi(2))
                .collect();
            p.grad = Tensor2::from_vec(p.value.rows(), p.value.cols(), g).unwrap();
        }
        let before = ps.clone();
        let loss = |ps: &Vec<Parameter>| {
            ps.iter()
                .flat_map(|p| p.value.as_slice())
                .map(|&x| tanh(x))
                .sum::<f64>()
        };
        let r = finite_diff_check(
            &mut ps,
            loss,
            1e-6,
            CoordinateSample::Random {
                per_parameter: 3,
                seed: 1,
            },
        );
        assert_eq!(r.coordinates_checked, 6);
        assert!(r.max_relative_error < 1e-6, "{r:?}");
        assert_eq!(before, ps, "parameters restored");
    }

    #[test]
    fn detects_wrong_gradient() {
        let mut ps = vec![Parameter::new(
            "x",
            Tensor2::from_vec(1, 1, vec![1.0]).unwrap(),
        )];
        ps[0].grad.set(0, 0, 3.0);
        let r = finite_diff_check(
            &mut ps,
            |ps| ps[0].value.get(0, 0).powi(2),
            1e-5,
            CoordinateSample::All,
        );
        assert!(r.max_relative_error > 0.1);
        assert_eq!(r.worst, Some(("x".to_string(), 0)));
    }
}
