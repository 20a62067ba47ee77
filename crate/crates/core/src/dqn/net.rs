//! The Q-network: a GRU cell over the feature window, two ReLU
//! fully-connected layers, and a linear 28-way head.
//!
//! GRU convention (documented because several exist):
//!
//! ```text
//! z = sigmoid(Wz x + Uz h + bz)        update gate
//! r = sigmoid(Wr x + Ur h + br)        reset gate
//! n = tanh(Wn x + Un (r .* h) + bn)    candidate
//! h' = (1 - z) .* h + z .* n
//! ```
//!
//! The FC stack uses ReLU (not tanh) so Q-values can reach the scale of the
//! TB-sized rewards without saturating.
//!
//! Everything is generic over [`Scalar`]; the runtime uses `f32`, the
//! gradient oracles `f64`.

use rand_chacha::ChaCha8Rng;

use crate::scalar::{s, Scalar};

use super::feature::StateWindow;

/// Number of MCS actions the head scores.
pub const N_ACTIONS: usize = 28;
/// Feature dimension of one frame.
pub const INPUT_DIM: usize = 4;

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Mat<S> {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<S>,
}

impl<S: Scalar> Mat<S> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat {
            rows,
            cols,
            data: vec![S::zero(); rows * cols],
        }
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[S] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    /// out = A x
    pub fn matvec_into(&self, x: &[S], out: &mut [S]) {
        debug_assert_eq!(x.len(), self.cols);
        debug_assert_eq!(out.len(), self.rows);
        for r in 0..self.rows {
            out[r] = dot(self.row(r), x);
        }
    }

    /// out += Aᵀ v
    pub fn matvec_t_add(&self, v: &[S], out: &mut [S]) {
        debug_assert_eq!(v.len(), self.rows);
        debug_assert_eq!(out.len(), self.cols);
        for r in 0..self.rows {
            let vr = v[r];
            if vr == S::zero() {
                continue;
            }
            let row = r * self.cols;
            for c in 0..self.cols {
                out[c] += self.data[row + c] * vr;
            }
        }
    }

    /// A += v xᵀ
    pub fn outer_add(&mut self, v: &[S], x: &[S]) {
        debug_assert_eq!(v.len(), self.rows);
        debug_assert_eq!(x.len(), self.cols);
        for r in 0..self.rows {
            let vr = v[r];
            if vr == S::zero() {
                continue;
            }
            let row = r * self.cols;
            for c in 0..self.cols {
                self.data[row + c] += vr * x[c];
            }
        }
    }
}

/// Four-lane unrolled dot product: fast and with a fixed summation order, so
/// runs are bit-reproducible.
#[inline]
fn dot<S: Scalar>(a: &[S], b: &[S]) -> S {
    let mut acc = [S::zero(); 4];
    let chunks = a.len() / 4;
    for i in 0..chunks {
        let j = i * 4;
        acc[0] += a[j] * b[j];
        acc[1] += a[j + 1] * b[j + 1];
        acc[2] += a[j + 2] * b[j + 2];
        acc[3] += a[j + 3] * b[j + 3];
    }
    let mut rest = S::zero();
    for j in chunks * 4..a.len() {
        rest += a[j] * b[j];
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + rest
}

/// GRU cell parameters (input 4 -> hidden H).
#[derive(Debug, Clone, PartialEq)]
pub struct GruParams<S> {
    pub w_z: Mat<S>,
    pub u_z: Mat<S>,
    pub b_z: Vec<S>,
    pub w_r: Mat<S>,
    pub u_r: Mat<S>,
    pub b_r: Vec<S>,
    pub w_n: Mat<S>,
    pub u_n: Mat<S>,
    pub b_n: Vec<S>,
}

/// Full parameter set; also reused as the gradient accumulator (same shape).
#[derive(Debug, Clone, PartialEq)]
pub struct QNet<S> {
    pub hidden: usize,
    pub gru: GruParams<S>,
    pub fc1_w: Mat<S>,
    pub fc1_b: Vec<S>,
    pub fc2_w: Mat<S>,
    pub fc2_b: Vec<S>,
    pub head_w: Mat<S>,
    pub head_b: Vec<S>,
}

/// Intermediate activations of one forward pass, kept for backprop.
pub struct ForwardCache<S> {
    /// Input frames oldest-first.
    pub xs: Vec<[S; INPUT_DIM]>,
    /// h_0 .. h_{T-1} (pre-step hidden states; h_0 = 0).
    pub h_prev: Vec<Vec<S>>,
    pub zs: Vec<Vec<S>>,
    pub rs: Vec<Vec<S>>,
    pub ns: Vec<Vec<S>>,
    /// r .* h_prev per step (input to Un).
    pub rhs: Vec<Vec<S>>,
    /// Final hidden state.
    pub h_last: Vec<S>,
    /// Post-ReLU FC activations.
    pub f1: Vec<S>,
    pub f2: Vec<S>,
}

impl<S: Scalar> QNet<S> {
    pub fn zeros(hidden: usize) -> Self {
        QNet {
            hidden,
            gru: GruParams {
                w_z: Mat::zeros(hidden, INPUT_DIM),
                u_z: Mat::zeros(hidden, hidden),
                b_z: vec![S::zero(); hidden],
                w_r: Mat::zeros(hidden, INPUT_DIM),
                u_r: Mat::zeros(hidden, hidden),
                b_r: vec![S::zero(); hidden],
                w_n: Mat::zeros(hidden, INPUT_DIM),
                u_n: Mat::zeros(hidden, hidden),
                b_n: vec![S::zero(); hidden],
            },
            fc1_w: Mat::zeros(hidden, hidden),
            fc1_b: vec![S::zero(); hidden],
            fc2_w: Mat::zeros(hidden, hidden),
            fc2_b: vec![S::zero(); hidden],
            head_w: Mat::zeros(N_ACTIONS, hidden),
            head_b: vec![S::zero(); N_ACTIONS],
        }
    }

    /// Seeded uniform initialization, bound 1/sqrt(fan_in) per layer.
    /// Draws happen in f64 so f32 and f64 nets with the same seed hold the
    /// same values (up to rounding of the final conversion).
    pub fn init(hidden: usize, seed: u64) -> Self {
        use rand::SeedableRng;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut net = QNet::zeros(hidden);
        let fill = |data: &mut [S], fan_in: usize, rng: &mut ChaCha8Rng| {
            let bound = 1.0 / (fan_in as f64).sqrt();
            for v in data.iter_mut() {
                let u: f64 = rand::Rng::gen::<f64>(rng);
                *v = s(bound * (2.0 * u - 1.0));
            }
        };
        let h = hidden;
        fill(&mut net.gru.w_z.data, h, &mut rng);
        fill(&mut net.gru.u_z.data, h, &mut rng);
        fill(&mut net.gru.b_z, h, &mut rng);
        fill(&mut net.gru.w_r.data, h, &mut rng);
        fill(&mut net.gru.u_r.data, h, &mut rng);
        fill(&mut net.gru.b_r, h, &mut rng);
        fill(&mut net.gru.w_n.data, h, &mut rng);
        fill(&mut net.gru.u_n.data, h, &mut rng);
        fill(&mut net.gru.b_n, h, &mut rng);
        fill(&mut net.fc1_w.data, h, &mut rng);
        fill(&mut net.fc1_b, h, &mut rng);
        fill(&mut net.fc2_w.data, h, &mut rng);
        fill(&mut net.fc2_b, h, &mut rng);
        fill(&mut net.head_w.data, h, &mut rng);
        fill(&mut net.head_b, h, &mut rng);
        net
    }

    /// Layer views in the canonical serialization order.
    pub fn layer_views(&self) -> Vec<(&'static str, usize, usize, &[S])> {
        let h = self.hidden;
        vec![
            ("gru.w_z", h, INPUT_DIM, self.gru.w_z.data.as_slice()),
            ("gru.u_z", h, h, self.gru.u_z.data.as_slice()),
            ("gru.b_z", h, 1, self.gru.b_z.as_slice()),
            ("gru.w_r", h, INPUT_DIM, self.gru.w_r.data.as_slice()),
            ("gru.u_r", h, h, self.gru.u_r.data.as_slice()),
            ("gru.b_r", h, 1, self.gru.b_r.as_slice()),
            ("gru.w_n", h, INPUT_DIM, self.gru.w_n.data.as_slice()),
            ("gru.u_n", h, h, self.gru.u_n.data.as_slice()),
            ("gru.b_n", h, 1, self.gru.b_n.as_slice()),
            ("fc1.w", h, h, self.fc1_w.data.as_slice()),
            ("fc1.b", h, 1, self.fc1_b.as_slice()),
            ("fc2.w", h, h, self.fc2_w.data.as_slice()),
            ("fc2.b", h, 1, self.fc2_b.as_slice()),
            ("head.w", N_ACTIONS, h, self.head_w.data.as_slice()),
            ("head.b", N_ACTIONS, 1, self.head_b.as_slice()),
        ]
    }

    /// Mutable parameter slices in the same order as [`Self::layer_views`].
    pub fn param_slices_mut(&mut self) -> Vec<&mut [S]> {
        vec![
            self.gru.w_z.data.as_mut_slice(),
            self.gru.u_z.data.as_mut_slice(),
            self.gru.b_z.as_mut_slice(),
            self.gru.w_r.data.as_mut_slice(),
            self.gru.u_r.data.as_mut_slice(),
            self.gru.b_r.as_mut_slice(),
            self.gru.w_n.data.as_mut_slice(),
            self.gru.u_n.data.as_mut_slice(),
            self.gru.b_n.as_mut_slice(),
            self.fc1_w.data.as_mut_slice(),
            self.fc1_b.as_mut_slice(),
            self.fc2_w.data.as_mut_slice(),
            self.fc2_b.as_mut_slice(),
            self.head_w.data.as_mut_slice(),
            self.head_b.as_mut_slice(),
        ]
    }

    pub fn param_count(&self) -> usize {
        self.layer_views().iter().map(|(_, _, _, d)| d.len()).sum()
    }

    /// Q-values for all actions.
    pub fn forward(&self, window: &StateWindow) -> Vec<S> {
        let h = self.hidden;
        let mut hid = vec![S::zero(); h];
        let mut scratch = GruScratch::new(h);
        for frame in window.iter_oldest_first() {
            let x = frame.to_array::<S>();
            self.gru_step(&x, &mut hid, &mut scratch);
        }
        let (q, _, _) = self.head_from_hidden(&hid);
        q
    }

    /// Forward pass retaining every intermediate needed by backprop.
    pub fn forward_cached(&self, window: &StateWindow) -> (Vec<S>, ForwardCache<S>) {
        let h = self.hidden;
        let steps = window.frames.len();
        let mut cache = ForwardCache {
            xs: Vec::with_capacity(steps),
            h_prev: Vec::with_capacity(steps),
            zs: Vec::with_capacity(steps),
            rs: Vec::with_capacity(steps),
            ns: Vec::with_capacity(steps),
            rhs: Vec::with_capacity(steps),
            h_last: Vec::new(),
            f1: Vec::new(),
            f2: Vec::new(),
        };
        let mut hid = vec![S::zero(); h];
        let mut scratch = GruScratch::new(h);
        for frame in window.iter_oldest_first() {
            let x = frame.to_array::<S>();
            cache.xs.push(x);
            cache.h_prev.push(hid.clone());
            self.gru_step(&x, &mut hid, &mut scratch);
            cache.zs.push(scratch.z.clone());
            cache.rs.push(scratch.r.clone());
            cache.ns.push(scratch.n.clone());
            cache.rhs.push(scratch.rh.clone());
        }
        cache.h_last = hid.clone();
        let (q, f1, f2) = self.head_from_hidden(&hid);
        cache.f1 = f1;
        cache.f2 = f2;
        (q, cache)
    }

    /// One GRU step in place: hid <- h'.
    fn gru_step(&self, x: &[S; INPUT_DIM], hid: &mut [S], sc: &mut GruScratch<S>) {
        let h = self.hidden;
        // z gate
        self.gru.w_z.matvec_into(x, &mut sc.tmp_a);
        self.gru.u_z.matvec_into(hid, &mut sc.tmp_b);
        for i in 0..h {
            sc.z[i] = sigmoid(sc.tmp_a[i] + sc.tmp_b[i] + self.gru.b_z[i]);
        }
        // r gate
        self.gru.w_r.matvec_into(x, &mut sc.tmp_a);
        self.gru.u_r.matvec_into(hid, &mut sc.tmp_b);
        for i in 0..h {
            sc.r[i] = sigmoid(sc.tmp_a[i] + sc.tmp_b[i] + self.gru.b_r[i]);
        }
        // candidate on the reset-gated state
        for i in 0..h {
            sc.rh[i] = sc.r[i] * hid[i];
        }
        self.gru.w_n.matvec_into(x, &mut sc.tmp_a);
        self.gru.u_n.matvec_into(&sc.rh, &mut sc.tmp_b);
        for i in 0..h {
            sc.n[i] = (sc.tmp_a[i] + sc.tmp_b[i] + self.gru.b_n[i]).tanh();
        }
        // blend
        for i in 0..h {
            hid[i] = (S::one() - sc.z[i]) * hid[i] + sc.z[i] * sc.n[i];
        }
    }

    /// FC1 -> ReLU -> FC2 -> ReLU -> linear head.
    fn head_from_hidden(&self, hid: &[S]) -> (Vec<S>, Vec<S>, Vec<S>) {
        let h = self.hidden;
        let mut f1 = vec![S::zero(); h];
        self.fc1_w.matvec_into(hid, &mut f1);
        for i in 0..h {
            f1[i] = relu(f1[i] + self.fc1_b[i]);
        }
        let mut f2 = vec![S::zero(); h];
        self.fc2_w.matvec_into(&f1, &mut f2);
        for i in 0..h {
            f2[i] = relu(f2[i] + self.fc2_b[i]);
        }
        let mut q = vec![S::zero(); N_ACTIONS];
        self.head_w.matvec_into(&f2, &mut q);
        for (i, qi) in q.iter_mut().enumerate() {
            *qi += self.head_b[i];
        }
        (q, f1, f2)
    }
}

struct GruScratch<S> {
    z: Vec<S>,
    r: Vec<S>,
    n: Vec<S>,
    rh: Vec<S>,
    tmp_a: Vec<S>,
    tmp_b: Vec<S>,
}

impl<S: Scalar> GruScratch<S> {
    fn new(h: usize) -> Self {
        GruScratch {
            z: vec![S::zero(); h],
            r: vec![S::zero(); h],
            n: vec![S::zero(); h],
            rh: vec![S::zero(); h],
            tmp_a: vec![S::zero(); h],
            tmp_b: vec![S::zero(); h],
        }
    }
}

#[inline]
fn sigmoid<S: Scalar>(x: S) -> S {
    S::one() / (S::one() + (-x).exp())
}

#[inline]
fn relu<S: Scalar>(x: S) -> S {
    if x > S::zero() {
        x
    } else {
        S::zero()
    }
}
