//! Relativistic average adversarial losses over critic scores.
//!
//! With `C(x)` the raw critic output, the relativistic average discriminator
//! is `D_Ra(a, b) = σ(C(a) − mean C(b))`. The losses are
//!
//! ```text
//! L_D = −mean_r log D_Ra(x_r, x_f) − mean_f log(1 − D_Ra(x_f, x_r))
//! L_G = −mean_r log(1 − D_Ra(x_r, x_f)) − mean_f log D_Ra(x_f, x_r)
//! ```
//!
//! Both are evaluated through `log σ(z)` directly, which stays finite for any
//! finite score, and returned together with their exact gradients with
//! respect to every score.

use super::SrError;

#[derive(Debug, Clone, PartialEq)]
pub struct CriticBatch {
    c_real: Vec<f64>,
    c_fake: Vec<f64>,
}

impl CriticBatch {
    pub fn new(c_real: Vec<f64>, c_fake: Vec<f64>) -> Result<Self, SrError> {
        if c_real.is_empty() || c_fake.is_empty() {
            return Err(SrError::EmptyBatch);
        }
        if c_real.iter().chain(&c_fake).any(|v| !v.is_finite()) {
            return Err(SrError::NonFinite);
        }
        Ok(Self { c_real, c_fake })
    }

    pub fn real(&self) -> &[f64] {
        &self.c_real
    }

    pub fn fake(&self) -> &[f64] {
        &self.c_fake
    }

    /// The same batch with real and fake roles exchanged.
    pub fn swapped(&self) -> Self {
        Self {
            c_real: self.c_fake.clone(),
            c_fake: self.c_real.clone(),
        }
    }

    /// Every score shifted by `delta`.
    pub fn shifted(&self, delta: f64) -> Self {
        Self {
            c_real: self.c_real.iter().map(|v| v + delta).collect(),
            c_fake: self.c_fake.iter().map(|v| v + delta).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LossGrad {
    pub loss: f64,
    pub grad_real: Vec<f64>,
    pub grad_fake: Vec<f64>,
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `ln σ(z)` without forming σ(z).
pub fn log_sigmoid(z: f64) -> f64 {
    z.min(0.0) - (-z.abs()).exp().ln_1p()
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// `σ(subject_i − mean(other))` for every subject score.
pub fn d_ra(c_subject: &[f64], c_other: &[f64]) -> Result<Vec<f64>, SrError> {
    if c_subject.is_empty() || c_other.is_empty() {
        return Err(SrError::EmptyBatch);
    }
    let m = mean(c_other);
    Ok(c_subject.iter().map(|&s| sigmoid(s - m)).collect())
}

/// Both margins: `z_i = r_i − mean f` and `w_j = f_j − mean r`.
fn margins(b: &CriticBatch) -> (Vec<f64>, Vec<f64>) {
    let mr = mean(&b.c_real);
    let mf = mean(&b.c_fake);
    (
        b.c_real.iter().map(|r| r - mf).collect(),
        b.c_fake.iter().map(|f| f - mr).collect(),
    )
}

/// `L_D^Ra` and its gradient.
///
/// `∂L/∂r_k = −σ(−z_k)/n_r − Σ_j σ(w_j)/(n_r n_f)`,
/// `∂L/∂f_k = σ(w_k)/n_f + Σ_i σ(−z_i)/(n_r n_f)`.
pub fn discriminator_loss(batch: &CriticBatch) -> Result<LossGrad, SrError> {
    let (z, w) = margins(batch);
    let (nr, nf) = (z.len() as f64, w.len() as f64);
    let loss = -z.iter().map(|&v| log_sigmoid(v)).sum::<f64>() / nr
        - w.iter().map(|&v| log_sigmoid(-v)).sum::<f64>() / nf;
    let sum_sig_w: f64 = w.iter().map(|&v| sigmoid(v)).sum();
    let sum_sig_neg_z: f64 = z.iter().map(|&v| sigmoid(-v)).sum();
    let grad_real = z
        .iter()
        .map(|&v| -sigmoid(-v) / nr - sum_sig_w / (nr * nf))
        .collect();
    let grad_fake = w
        .iter()
        .map(|&v| sigmoid(v) / nf + sum_sig_neg_z / (nr * nf))
        .collect();
    finish(loss, grad_real, grad_fake)
}

/// `L_G^Ra` and its gradient.
///
/// `∂L/∂r_k = σ(z_k)/n_r + Σ_j σ(−w_j)/(n_r n_f)`,
/// `∂L/∂f_k = −σ(−w_k)/n_f − Σ_i σ(z_i)/(n_r n_f)`.
pub fn generator_adversarial_loss(batch: &CriticBatch) -> Result<LossGrad, SrError> {
    let (z, w) = margins(batch);
    let (nr, nf) = (z.len() as f64, w.len() as f64);
    let loss = -z.iter().map(|&v| log_sigmoid(-v)).sum::<f64>() / nr
        - w.iter().map(|&v| log_sigmoid(v)).sum::<f64>() / nf;
    let sum_sig_neg_w: f64 = w.iter().map(|&v| sigmoid(-v)).sum();
    let sum_sig_z: f64 = z.iter().map(|&v| sigmoid(v)).sum();
    let grad_real = z
        .iter()
        .map(|&v| sigmoid(v) / nr + sum_sig_neg_w / (nr * nf))
        .collect();
    let grad_fake = w
        .iter()
        .map(|&v| -sigmoid(-v) / nf - sum_sig_z / (nr * nf))
        .collect();
    finish(loss, grad_real, grad_fake)
}

fn finish(loss: f64, grad_real: Vec<f64>, grad_fake: Vec<f64>) -> Result<LossGrad, SrError> {
    if !loss.is_finite() || grad_real.iter().chain(&grad_fake).any(|g| !g.is_finite()) {
        return Err(SrError::NonFinite);
    }
    Ok(LossGrad {
        loss: loss.max(0.0),
        grad_real,
        grad_fake,
    })
}

/// Largest relative gap between analytic gradients and central differences
/// `(f(s+ε) − f(s−ε)) / 2ε`, taken over every score. The denominator is
/// `max(|analytic|, 1e-8)`.
pub fn finite_difference_check<F>(loss: F, batch: &CriticBatch, eps: f64) -> Result<f64, SrError>
where
    F: Fn(&CriticBatch) -> Result<LossGrad, SrError>,
{
    if eps.is_nan() || eps <= 0.0 {
        return Err(SrError::Config(format!("step {eps} must be positive")));
    }
    let analytic = loss(batch)?;
    let mut worst: f64 = 0.0;
    let n_real = batch.c_real.len();
    for k in 0..n_real + batch.c_fake.len() {
        let nudge = |delta: f64| -> Result<f64, SrError> {
            let mut b = batch.clone();
            if k < n_real {
                b.c_real[k] += delta;
            } else {
                b.c_fake[k - n_real] += delta;
            }
            Ok(loss(&b)?.loss)
        };
        let numeric = (nudge(eps)? - nudge(-eps)?) / (2.0 * eps);
        let exact = if k < n_real {
            analytic.grad_real[k]
        } else {
            analytic.grad_fake[k - n_real]
        };
        worst = worst.max((numeric - exact).abs() / exact.abs().max(1e-8));
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::LN_2;

    fn batch(r: &[f64], f: &[f64]) -> CriticBatch {
        CriticBatch::new(r.to_vec(), f.to_vec()).unwrap()
    }

    #[test]
    fn d_ra_examples() {
        assert_eq!(d_ra(&[2.0], &[1.0, 3.0]).unwrap(), vec![0.5]);
        assert!((d_ra(&[20.0], &[0.0]).unwrap()[0] - 1.0).abs() < 1e-8);
        assert!((d_ra(&[1.0], &[0.0]).unwrap()[0] - 0.731_058_6).abs() < 1e-7);
        assert_eq!(d_ra(&[], &[1.0]), Err(SrError::EmptyBatch));
        assert_eq!(d_ra(&[1.0], &[]), Err(SrError::EmptyBatch));
    }

    #[test]
    fn log_sigmoid_is_stable() {
        assert_eq!(log_sigmoid(0.0), -LN_2);
        assert!((log_sigmoid(-800.0) + 800.0).abs() < 1e-12);
        assert!(log_sigmoid(800.0) <= 0.0 && log_sigmoid(800.0) > -1e-300);
        for z in [-3.0, -0.5, 0.25, 4.0] {
            assert!((log_sigmoid(z) - sigmoid(z).ln()).abs() < 1e-15);
        }
    }

    #[test]
    fn symmetric_point() {
        let b = batch(&[0.7], &[0.7]);
        assert!((discriminator_loss(&b).unwrap().loss - 2.0 * LN_2).abs() < 1e-12);
        assert!((generator_adversarial_loss(&b).unwrap().loss - 2.0 * LN_2).abs() < 1e-12);
    }

    #[test]
    fn separated_limits() {
        let b = batch(&[30.0], &[0.0]);
        assert!(discriminator_loss(&b).unwrap().loss < 1e-8);
        let g = batch(&[0.0], &[30.0]);
        assert!(generator_adversarial_loss(&g).unwrap().loss < 1e-8);
        // extreme scores stay finite
        let far = batch(&[-1e4], &[1e4]);
        assert!(discriminator_loss(&far).unwrap().loss.is_finite());
    }

    #[test]
    fn small_batch_matches_scalar_formula() {
        let b = batch(&[0.3, -0.1], &[0.2]);
        // mean real = 0.1, mean fake = 0.2
        let s = |z: f64| 1.0 / (1.0 + (-z).exp());
        let ld = -((s(0.3 - 0.2)).ln() + (s(-0.1 - 0.2)).ln()) / 2.0 - (1.0 - s(0.2 - 0.1)).ln();
        let lg =
            -((1.0 - s(0.3 - 0.2)).ln() + (1.0 - s(-0.1 - 0.2)).ln()) / 2.0 - (s(0.2 - 0.1)).ln();
        assert!((discriminator_loss(&b).unwrap().loss - ld).abs() < 1e-14);
        assert!((generator_adversarial_loss(&b).unwrap().loss - lg).abs() < 1e-14);
    }

    #[test]
    fn zero_scores_gradient_by_hand() {
        // n scores per side, all zero: ∂L_D/∂r = −1/n, ∂L_D/∂f = +1/n
        for n in 1..5 {
            let b = batch(&vec![0.0; n], &vec![0.0; n]);
            let g = discriminator_loss(&b).unwrap();
            let inv = 1.0 / n as f64;
            assert!(g.grad_real.iter().all(|v| (v + inv).abs() < 1e-15));
            assert!(g.grad_fake.iter().all(|v| (v - inv).abs() < 1e-15));
            let g = generator_adversarial_loss(&b).unwrap();
            assert!(g.grad_real.iter().all(|v| (v - inv).abs() < 1e-15));
            assert!(g.grad_fake.iter().all(|v| (v + inv).abs() < 1e-15));
        }
    }

    #[test]
    fn batch_validation() {
        assert_eq!(
            CriticBatch::new(vec![], vec![1.0]),
            Err(SrError::EmptyBatch)
        );
        assert_eq!(
            CriticBatch::new(vec![f64::INFINITY], vec![1.0]),
            Err(SrError::NonFinite)
        );
        let b = batch(&[0.0], &[0.0]);
        assert!(finite_difference_check(discriminator_loss, &b, 0.0).is_err());
    }

    fn arb_batch() -> impl Strategy<Value = CriticBatch> {
        (
            proptest::collection::vec(-5.0..5.0f64, 1..=8),
            proptest::collection::vec(-5.0..5.0f64, 1..=8),
        )
            .prop_map(|(r, f)| CriticBatch::new(r, f).unwrap())
    }

    proptest! {
        #[test]
        fn gradients_match_central_differences(b in arb_batch()) {
            prop_assert!(finite_difference_check(discriminator_loss, &b, 1e-5).unwrap() < 1e-4);
            prop_assert!(finite_difference_check(generator_adversarial_loss, &b, 1e-5).unwrap() < 1e-4);
        }

        #[test]
        fn shift_invariance(b in arb_batch(), c in -50.0..50.0f64) {
            let s = b.shifted(c);
            for f in [discriminator_loss, generator_adversarial_loss] {
                let (l0, l1) = (f(&b).unwrap(), f(&s).unwrap());
                prop_assert!((l0.loss - l1.loss).abs() < 1e-10);
                let sum_r: f64 = l0.grad_real.iter().sum();
                let sum_f: f64 = l0.grad_fake.iter().sum();
                prop_assert!((sum_r + sum_f).abs() < 1e-12);
            }
        }

        #[test]
        fn losses_non_negative(b in arb_batch()) {
            prop_assert!(discriminator_loss(&b).unwrap().loss >= 0.0);
            prop_assert!(generator_adversarial_loss(&b).unwrap().loss >= 0.0);
        }

        #[test]
        fn swap_identity(r in -5.0..5.0f64, f in -5.0..5.0f64) {
            let b = batch(&[r], &[f]);
            let ld = discriminator_loss(&b).unwrap().loss;
            let lg = generator_adversarial_loss(&b.swapped()).unwrap().loss;
            prop_assert!((ld - lg).abs() < 1e-14);
        }
    }
}
