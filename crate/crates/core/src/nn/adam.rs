use super::Parameterized;

/// Adam with bias-corrected moments.
#[derive(Debug, Clone)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    step: u64,
    m: Vec<f64>,
    v: Vec<f64>,
}

impl Adam {
    pub fn new(lr: f64, beta1: f64, beta2: f64) -> Self {
        Adam {
            lr,
            beta1,
            beta2,
            eps: 1e-8,
            step: 0,
            m: Vec::new(),
            v: Vec::new(),
        }
    }

    pub fn steps(&self) -> u64 {
        self.step
    }

    /// One update of `params` along `grads`, which must share its layout.
    pub fn step<P: Parameterized>(&mut self, params: &mut P, grads: &P) {
        let g = grads.flatten();
        if self.m.is_empty() {
            self.m = vec![0.0; g.len()];
            self.v = vec![0.0; g.len()];
        }
        assert_eq!(self.m.len(), g.len(), "optimizer state does not match parameters");
        self.step += 1;
        let bc1 = 1.0 - self.beta1.powi(self.step as i32);
        let bc2 = 1.0 - self.beta2.powi(self.step as i32);
        let (b1, b2, lr, eps) = (self.beta1, self.beta2, self.lr, self.eps);
        let (m, v) = (&mut self.m, &mut self.v);
        let mut off = 0;
        params.visit_mut(&mut |_, p| {
            for (i, w) in p.iter_mut().enumerate() {
                let k = off + i;
                m[k] = b1 * m[k] + (1.0 - b1) * g[k];
                v[k] = b2 * v[k] + (1.0 - b2) * g[k] * g[k];
                let mhat = m[k] / bc1;
                let vhat = v[k] / bc2;
                *w -= lr * mhat / (vhat.sqrt() + eps);
            }
            off += p.len();
        });
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Quad(Vec<f64>);
    impl Parameterized for Quad {
        fn visit(&self, f: &mut dyn FnMut(&str, &[f64])) {
            f("x", &self.0)
        }
        fn visit_mut(&mut self, f: &mut dyn FnMut(&str, &mut [f64])) {
            f("x", &mut self.0)
        }
    }

    #[test]
    fn first_step_moves_by_lr() {
        let mut p = Quad(vec![1.0, -2.0]);
        let g = Quad(vec![0.5, -3.0]);
        let mut opt = Adam::new(0.1, 0.9, 0.999);
        opt.step(&mut p, &g);
        assert!((p.0[0] - 0.9).abs() < 1e-6);
        assert!((p.0[1] + 1.9).abs() < 1e-6);
    }

    #[test]
    fn minimizes_quadratic() {
        let mut p = Quad(vec![3.0, -4.0]);
        let mut opt = Adam::new(0.05, 0.9, 0.999);
        for _ in 0..2000 {
            let g = Quad(p.0.iter().map(|x| 2.0 * x).collect());
            opt.step(&mut p, &g);
        }
        assert!(p.0.iter().all(|x| x.abs() < 1e-2));
    }
}
