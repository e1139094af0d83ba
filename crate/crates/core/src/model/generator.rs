use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::GeneratorConfig;
use crate::data::NormalizationStats;
use crate::error::{Error, Result};
use crate::kinematics::{canonicalize_slice, BODY_DIM, HAND_DIM};
use crate::nn::{leaky_relu, leaky_relu_backward, upsample2, upsample2_backward, Conv1d, Parameterized, Seq};

/// Trainable tensors of the generator.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorParams {
    pub body1: Conv1d,
    pub body2: Conv1d,
    pub image: Option<Conv1d>,
    pub unet_in: Conv1d,
    /// `down[i]` maps level `i` to level `i + 1` (stride 2).
    pub down: Vec<Conv1d>,
    pub bottleneck: Conv1d,
    /// `up[i]` maps upsampled level `i + 1` back to level `i`.
    pub up: Vec<Conv1d>,
    pub dec1: Conv1d,
    pub dec2: Conv1d,
    pub head: Conv1d,
}

impl GeneratorParams {
    fn new(cfg: &GeneratorConfig, rng: &mut ChaCha8Rng) -> Self {
        let (p, d, k) = (cfg.body_embed, cfg.dynamics_embed, cfg.kernel);
        let same = |i, o, rng: &mut ChaCha8Rng| Conv1d::new(i, o, k, 1, k / 2, rng);
        let body1 = same(BODY_DIM, p, rng);
        let body2 = same(p, p, rng);
        let image = cfg
            .has_image()
            .then(|| Conv1d::linear(cfg.image_feat_dim, cfg.image_embed, rng));
        let unet_in = Conv1d::linear(cfg.unet_in_channels(), d, rng);
        let down = (0..cfg.unet_depth)
            .map(|_| Conv1d::new(d, d, k, 2, k / 2, rng))
            .collect();
        // Wide enough that every bottleneck step sees every other one.
        let tb = cfg.bottleneck_len();
        let bottleneck = Conv1d::new(d, d, 2 * tb - 1, 1, tb - 1, rng);
        // Up blocks and the head start at zero: each up level begins as an
        // identity over its skip and the initial prediction is the mean pose.
        let up = (0..cfg.unet_depth)
            .map(|_| {
                let mut c = same(d, d, rng);
                c.weight.fill(0.0);
                c
            })
            .collect();
        let dec1 = same(d, d, rng);
        let dec2 = same(d, d, rng);
        let mut head = Conv1d::linear(d, HAND_DIM, rng);
        head.weight.fill(0.0);
        GeneratorParams {
            body1,
            body2,
            image,
            unet_in,
            down,
            bottleneck,
            up,
            dec1,
            dec2,
            head,
        }
    }

    pub fn zeros_like(&self) -> Self {
        GeneratorParams {
            body1: self.body1.zeros_like(),
            body2: self.body2.zeros_like(),
            image: self.image.as_ref().map(Conv1d::zeros_like),
            unet_in: self.unet_in.zeros_like(),
            down: self.down.iter().map(Conv1d::zeros_like).collect(),
            bottleneck: self.bottleneck.zeros_like(),
            up: self.up.iter().map(Conv1d::zeros_like).collect(),
            dec1: self.dec1.zeros_like(),
            dec2: self.dec2.zeros_like(),
            head: self.head.zeros_like(),
        }
    }
}

impl Parameterized for GeneratorParams {
    fn visit(&self, f: &mut dyn FnMut(&str, &[f64])) {
        self.body1.visit("body_encoder.0", f);
        self.body2.visit("body_encoder.1", f);
        if let Some(img) = &self.image {
            img.visit("image_proj", f);
        }
        self.unet_in.visit("unet.in", f);
        for (i, c) in self.down.iter().enumerate() {
            c.visit(&format!("unet.down.{i}"), f);
        }
        self.bottleneck.visit("unet.bottleneck", f);
        for (i, c) in self.up.iter().enumerate() {
            c.visit(&format!("unet.up.{i}"), f);
        }
        self.dec1.visit("hand_decoder.0", f);
        self.dec2.visit("hand_decoder.1", f);
        self.head.visit("hand_decoder.head", f);
    }

    fn visit_mut(&mut self, f: &mut dyn FnMut(&str, &mut [f64])) {
        self.body1.visit_mut("body_encoder.0", f);
        self.body2.visit_mut("body_encoder.1", f);
        if let Some(img) = &mut self.image {
            img.visit_mut("image_proj", f);
        }
        self.unet_in.visit_mut("unet.in", f);
        for (i, c) in self.down.iter_mut().enumerate() {
            c.visit_mut(&format!("unet.down.{i}"), f);
        }
        self.bottleneck.visit_mut("unet.bottleneck", f);
        for (i, c) in self.up.iter_mut().enumerate() {
            c.visit_mut(&format!("unet.up.{i}"), f);
        }
        self.dec1.visit_mut("hand_decoder.0", f);
        self.dec2.visit_mut("hand_decoder.1", f);
        self.head.visit_mut("hand_decoder.head", f);
    }
}

/// Output and im2col buffer of one layer.
#[derive(Debug, Clone)]
struct Act {
    in_len: usize,
    cols: Vec<f64>,
    out: Seq,
}

fn run(conv: &Conv1d, x: &Seq, activate: bool) -> Act {
    let (mut out, cols) = conv.forward(x);
    if activate {
        leaky_relu(&mut out);
    }
    Act {
        in_len: x.len,
        cols,
        out,
    }
}

fn back(conv: &Conv1d, act: &Act, dy: &Seq, activated: bool, grad: &mut Conv1d) -> Seq {
    let mut dy = dy.clone();
    if activated {
        leaky_relu_backward(&act.out, &mut dy);
    }
    conv.backward(act.in_len, &act.cols, &dy, grad)
}

/// Intermediate values of a training forward pass.
#[derive(Debug, Clone)]
pub struct GeneratorTrace {
    body1: Act,
    body2: Act,
    image: Option<Act>,
    unet_in: Act,
    down: Vec<Act>,
    bottleneck: Act,
    up: Vec<Act>,
    dec1: Act,
    dec2: Act,
    head: Act,
}

impl GeneratorTrace {
    /// Standardized hand prediction, `batch x T x 126`.
    pub fn output(&self) -> &Seq {
        &self.head.out
    }

    /// Bottleneck activations, `batch x T' x D`.
    pub fn bottleneck(&self) -> &Seq {
        &self.bottleneck.out
    }
}

/// Body-to-hand generator. Operates on standardized values internally;
/// [`Generator::generate`] works in physical axis-angle units.
#[derive(Debug, Clone, PartialEq)]
pub struct Generator {
    pub config: GeneratorConfig,
    pub params: GeneratorParams,
    pub norm: NormalizationStats,
}

impl Parameterized for Generator {
    fn visit(&self, f: &mut dyn FnMut(&str, &[f64])) {
        self.params.visit(f)
    }
    fn visit_mut(&mut self, f: &mut dyn FnMut(&str, &mut [f64])) {
        self.params.visit_mut(f)
    }
}

impl Generator {
    pub fn new(config: GeneratorConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let params = GeneratorParams::new(&config, &mut rng);
        let norm = NormalizationStats::identity(config.image_feat_dim);
        Ok(Generator {
            config,
            params,
            norm,
        })
    }

    fn check_body(&self, body: &Seq) -> Result<()> {
        if body.ch != BODY_DIM {
            return Err(Error::shape("body channels", BODY_DIM, body.ch));
        }
        Ok(())
    }

    fn check_len(&self, len: usize) -> Result<()> {
        let div = 1usize << self.config.unet_depth;
        if len == 0 || !len.is_multiple_of(div) {
            return Err(Error::shape(
                "sequence length",
                format!("a positive multiple of {div}"),
                len,
            ));
        }
        Ok(())
    }

    fn check_feats(&self, body: &Seq, feats: Option<&Seq>) -> Result<()> {
        match (self.config.has_image(), feats) {
            (true, None) => Err(Error::MissingImageFeatures),
            (false, Some(_)) => Err(Error::NoImagePathway),
            (true, Some(f)) => {
                if f.ch != self.config.image_feat_dim {
                    return Err(Error::shape("image feature width", self.config.image_feat_dim, f.ch));
                }
                if (f.batch, f.len) != (body.batch, body.len) {
                    return Err(Error::shape(
                        "image feature frames",
                        format!("{}x{}", body.batch, body.len),
                        format!("{}x{}", f.batch, f.len),
                    ));
                }
                Ok(())
            }
            (false, None) => Ok(()),
        }
    }

    /// Body encoder: `T x 18 -> T x P`.
    pub fn encode_body(&self, body: &Seq) -> Result<Seq> {
        self.check_body(body)?;
        let h = run(&self.params.body1, body, true);
        Ok(run(&self.params.body2, &h.out, true).out)
    }

    /// Linear image projection: `T x F -> T x Q`.
    pub fn project_image(&self, feats: &Seq) -> Result<Seq> {
        let proj = self.params.image.as_ref().ok_or(Error::NoImagePathway)?;
        if feats.ch != proj.in_ch {
            return Err(Error::shape("image feature width", proj.in_ch, feats.ch));
        }
        Ok(proj.apply(feats))
    }

    fn unet(&self, phi: &Seq) -> (Seq, Act, Vec<Act>, Act, Vec<Act>) {
        let p = &self.params;
        let unet_in = run(&p.unet_in, phi, true);
        let mut down: Vec<Act> = Vec::with_capacity(p.down.len());
        for conv in &p.down {
            let prev = down.last().map_or(&unet_in.out, |a| &a.out);
            down.push(run(conv, prev, true));
        }
        let bottleneck = run(&p.bottleneck, &down.last().unwrap().out, true);
        let mut up: Vec<Option<Act>> = vec![None; p.up.len()];
        let mut u = bottleneck.out.clone();
        for i in (0..p.up.len()).rev() {
            let a = run(&p.up[i], &upsample2(&u), true);
            let skip = if i == 0 { &unet_in.out } else { &down[i - 1].out };
            u = a.out.clone();
            u.add_assign(skip);
            up[i] = Some(a);
        }
        (u, unet_in, down, bottleneck, up.into_iter().map(Option::unwrap).collect())
    }

    /// UNet over `T x C` embeddings, returning `T x D` dynamics and the
    /// bottleneck activations (`T' x D`).
    pub fn unet_forward(&self, phi: &Seq) -> Result<(Seq, Seq)> {
        if phi.ch != self.config.unet_in_channels() {
            return Err(Error::shape("UNet input channels", self.config.unet_in_channels(), phi.ch));
        }
        self.check_len(phi.len)?;
        let (out, _, _, bottleneck, _) = self.unet(phi);
        Ok((out, bottleneck.out))
    }

    /// Hand decoder: `T x D -> T x 126`.
    pub fn decode_hands(&self, d: &Seq) -> Result<Seq> {
        if d.ch != self.config.dynamics_embed {
            return Err(Error::shape("decoder input channels", self.config.dynamics_embed, d.ch));
        }
        let p = &self.params;
        let h1 = run(&p.dec1, d, true);
        let h2 = run(&p.dec2, &h1.out, true);
        Ok(p.head.apply(&h2.out))
    }

    /// Forward pass in standardized space, keeping what `backward` needs.
    pub fn forward_trace(&self, body: &Seq, feats: Option<&Seq>) -> Result<GeneratorTrace> {
        self.check_body(body)?;
        self.check_len(body.len)?;
        self.check_feats(body, feats)?;
        let p = &self.params;
        let body1 = run(&p.body1, body, true);
        let body2 = run(&p.body2, &body1.out, true);
        let image = match (&p.image, feats) {
            (Some(conv), Some(f)) => Some(run(conv, f, false)),
            _ => None,
        };
        let phi = match &image {
            Some(img) => body2.out.concat_channels(&img.out),
            None => body2.out.clone(),
        };
        let (u, unet_in, down, bottleneck, up) = self.unet(&phi);
        let dec1 = run(&p.dec1, &u, true);
        let dec2 = run(&p.dec2, &dec1.out, true);
        let head = run(&p.head, &dec2.out, false);
        Ok(GeneratorTrace {
            body1,
            body2,
            image,
            unet_in,
            down,
            bottleneck,
            up,
            dec1,
            dec2,
            head,
        })
    }

    /// Standardized prediction for a batch of standardized inputs.
    pub fn forward(&self, body: &Seq, feats: Option<&Seq>) -> Result<Seq> {
        self.forward_trace(body, feats).map(|t| t.head.out)
    }

    /// Gradients of a scalar loss with respect to every parameter, given the
    /// loss gradient with respect to the output.
    pub fn backward(&self, trace: &GeneratorTrace, d_out: &Seq) -> GeneratorParams {
        let p = &self.params;
        let mut g = p.zeros_like();
        let d = back(&p.head, &trace.head, d_out, false, &mut g.head);
        let d = back(&p.dec2, &trace.dec2, &d, true, &mut g.dec2);
        let du0 = back(&p.dec1, &trace.dec1, &d, true, &mut g.dec1);

        // UNet, levels 0..=depth
        let depth = p.down.len();
        let mut dx: Vec<Seq> = std::iter::once(&trace.unet_in.out)
            .chain(trace.down.iter().map(|a| &a.out))
            .map(|s| Seq::zeros(s.batch, s.len, s.ch))
            .collect();
        let mut du = du0;
        for i in 0..depth {
            dx[i].add_assign(&du);
            let d_up = back(&p.up[i], &trace.up[i], &du, true, &mut g.up[i]);
            du = upsample2_backward(&d_up);
        }
        let d = back(&p.bottleneck, &trace.bottleneck, &du, true, &mut g.bottleneck);
        dx[depth].add_assign(&d);
        for i in (1..=depth).rev() {
            let d = back(&p.down[i - 1], &trace.down[i - 1], &dx[i], true, &mut g.down[i - 1]);
            dx[i - 1].add_assign(&d);
        }
        let dphi = back(&p.unet_in, &trace.unet_in, &dx[0], true, &mut g.unet_in);

        let d_body = match (&p.image, &trace.image, &mut g.image) {
            (Some(conv), Some(act), Some(gi)) => {
                let (db, di) = dphi.split_channels(self.config.body_embed);
                back(conv, act, &di, false, gi);
                db
            }
            _ => dphi,
        };
        let d = back(&p.body2, &trace.body2, &d_body, true, &mut g.body2);
        back(&p.body1, &trace.body1, &d, true, &mut g.body1);
        g
    }

    /// Predicts `T x 126` hand angles from `T x 18` body angles (and
    /// `T x F` image features when the model has an image pathway).
    /// Inputs and outputs are physical axis-angle values; outputs are
    /// canonical.
    pub fn generate(&self, body: &[f64], feats: Option<&[f64]>) -> Result<Vec<f64>> {
        if !body.len().is_multiple_of(BODY_DIM) {
            return Err(Error::shape("body values", "multiple of 18", body.len()));
        }
        let t = body.len() / BODY_DIM;
        let mut b = body.to_vec();
        self.norm.body.apply(&mut b);
        let b = Seq::from_vec(1, t, BODY_DIM, b);
        let f = match (feats, self.config.has_image()) {
            (Some(f), true) => {
                let fd = self.config.image_feat_dim;
                if f.len() != t * fd {
                    return Err(Error::shape("image features", format!("{t} x {fd}"), f.len()));
                }
                let mut f = f.to_vec();
                if let Some(s) = &self.norm.feats {
                    s.apply(&mut f);
                }
                Some(Seq::from_vec(1, t, fd, f))
            }
            (None, true) => return Err(Error::MissingImageFeatures),
            (Some(_), false) => return Err(Error::NoImagePathway),
            (None, false) => None,
        };
        let out = self.forward(&b, f.as_ref())?;
        let mut hands = out.data;
        self.norm.hands.invert(&mut hands);
        canonicalize_slice(&mut hands);
        Ok(hands)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::GeneratorConfig;

    fn small(feat: usize) -> Generator {
        Generator::new(
            GeneratorConfig {
                window: 16,
                body_embed: 8,
                dynamics_embed: 6,
                image_embed: 5,
                image_feat_dim: feat,
                unet_depth: 2,
                kernel: 3,
            },
            7,
        )
        .unwrap()
    }

    fn input(len: usize, ch: usize, phase: f64) -> Seq {
        Seq::from_fn(1, len, ch, |_, t, c| ((t as f64 * 0.3 + c as f64 * 0.7 + phase).sin()) * 0.8)
    }

    #[test]
    fn shapes() {
        let g = small(0);
        let b = input(16, BODY_DIM, 0.0);
        assert_eq!(g.encode_body(&b).unwrap().ch, 8);
        let (u, bott) = g.unet_forward(&g.encode_body(&b).unwrap()).unwrap();
        assert_eq!((u.len, u.ch), (16, 6));
        assert_eq!(bott.len, 4);
        assert_eq!(g.decode_hands(&u).unwrap().ch, HAND_DIM);
        assert_eq!(g.generate(&b.data, None).unwrap().len(), 16 * HAND_DIM);
    }

    #[test]
    fn rejects_bad_inputs() {
        let g = small(0);
        assert!(matches!(g.project_image(&input(16, 3, 0.0)), Err(Error::NoImagePathway)));
        assert!(g.encode_body(&input(16, 17, 0.0)).is_err());
        assert!(g.forward(&input(14, BODY_DIM, 0.0), None).is_err());
        assert!(g.decode_hands(&input(16, 5, 0.0)).is_err());
        let gi = small(3);
        assert!(matches!(gi.generate(&input(16, BODY_DIM, 0.0).data, None), Err(Error::MissingImageFeatures)));
        assert!(gi.generate(&input(16, BODY_DIM, 0.0).data, Some(&input(16, 3, 1.0).data)).is_ok());
    }

    #[test]
    fn invalid_config() {
        let cfg = GeneratorConfig { window: 20, unet_depth: 3, ..GeneratorConfig::with_width(4) };
        assert!(matches!(Generator::new(cfg, 0), Err(Error::Config(_))));
    }

    #[test]
    fn zero_parameters() {
        let mut g = small(3);
        g.params.fill(0.0);
        let b = input(16, BODY_DIM, 0.0);
        assert!(g.encode_body(&b).unwrap().data.iter().all(|&v| v == 0.0));
        assert!(g.project_image(&input(16, 3, 0.0)).unwrap().data.iter().all(|&v| v == 0.0));
        for (k, v) in g.params.head.bias.iter_mut().enumerate() {
            *v = k as f64 * 0.01;
        }
        let out = g.decode_hands(&input(16, 6, 0.2)).unwrap();
        for t in 0..16 {
            assert_eq!(out.row(0, t), g.params.head.bias.as_slice());
        }
    }

    #[test]
    fn image_projection_is_linear_without_bias() {
        let mut g = small(3);
        g.params.image.as_mut().unwrap().bias.fill(0.0);
        let x = input(16, 3, 0.4);
        let mut x2 = x.clone();
        x2.data.iter_mut().for_each(|v| *v *= -2.5);
        let a = g.project_image(&x).unwrap();
        let b = g.project_image(&x2).unwrap();
        for (u, v) in a.data.iter().zip(&b.data) {
            assert!((v + 2.5 * u).abs() < 1e-12);
        }
    }

    #[test]
    fn starts_at_the_mean_pose() {
        let g = small(0);
        let out = g.forward(&input(16, BODY_DIM, 0.1), None).unwrap();
        assert!(out.data.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn deterministic() {
        let g = small(0);
        let b = input(16, BODY_DIM, 0.3);
        assert_eq!(g.generate(&b.data, None).unwrap(), g.generate(&b.data, None).unwrap());
        assert_eq!(g, small(0));
    }
}
