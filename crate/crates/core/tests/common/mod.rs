#![allow(dead_code)]

use std::ops::{Add, Mul, Sub};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use uav_swarm::rl::mlp::LEAKY_SLOPE;
use uav_swarm::rl::{QNetwork, Sample, N_ACTIONS, STATE_DIM};

/// Double-double number: unevaluated sum `hi + lo` with about 32 significant
/// digits, enough to keep central differences free of rounding noise.
#[derive(Debug, Clone, Copy)]
pub struct Dd {
    hi: f64,
    lo: f64,
}

fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

impl Dd {
    pub const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };

    pub fn from(v: f64) -> Self {
        Dd { hi: v, lo: 0.0 }
    }

    fn norm(hi: f64, lo: f64) -> Self {
        let (hi, lo) = two_sum(hi, lo);
        Dd { hi, lo }
    }

    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    fn negative(self) -> bool {
        self.hi < 0.0 || (self.hi == 0.0 && self.lo < 0.0)
    }
}

impl Add for Dd {
    type Output = Dd;
    fn add(self, o: Dd) -> Dd {
        let (s, e) = two_sum(self.hi, o.hi);
        Dd::norm(s, e + self.lo + o.lo)
    }
}

impl Sub for Dd {
    type Output = Dd;
    fn sub(self, o: Dd) -> Dd {
        self + Dd { hi: -o.hi, lo: -o.lo }
    }
}

impl Mul for Dd {
    type Output = Dd;
    fn mul(self, o: Dd) -> Dd {
        let p = self.hi * o.hi;
        let e = self.hi.mul_add(o.hi, -p);
        Dd::norm(p, e + self.hi * o.lo + self.lo * o.hi)
    }
}

/// Minibatch sum of squared errors evaluated in double-double arithmetic,
/// independently of the network's own forward pass. Parameters are laid out
/// per layer as a row-major weight matrix followed by the bias vector.
pub fn dd_sse(sizes: &[usize], params: &[f64], batch: &[Sample<'_>]) -> Dd {
    let mut total = Dd::ZERO;
    for s in batch {
        let mut x: Vec<Dd> = s.state.iter().map(|&v| Dd::from(v)).collect();
        let mut off = 0;
        for l in 0..sizes.len() - 1 {
            let (n_in, n_out) = (sizes[l], sizes[l + 1]);
            let bias = off + n_in * n_out;
            let mut z = Vec::with_capacity(n_out);
            for o in 0..n_out {
                let mut acc = Dd::from(params[bias + o]);
                for i in 0..n_in {
                    acc = acc + Dd::from(params[off + o * n_in + i]) * x[i];
                }
                let last = l + 2 == sizes.len();
                z.push(if !last && acc.negative() { acc * Dd::from(LEAKY_SLOPE) } else { acc });
            }
            off = bias + n_out;
            x = z;
        }
        let r = Dd::from(s.target) - x[s.action];
        total = total + r * r;
    }
    total
}

/// Largest relative error between the analytic gradient and central
/// differences with step `h`, over every parameter.
pub fn gradient_check(batch_size: usize, seed: u64, h: f64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let net = QNetwork::standard(&mut rng);
    let states: Vec<Vec<f64>> = (0..batch_size)
        .map(|_| (0..STATE_DIM).map(|_| rng.gen_range(0.0..1.0)).collect())
        .collect();
    let batch: Vec<Sample<'_>> = states
        .iter()
        .map(|s| Sample {
            state: s,
            action: rng.gen_range(0..N_ACTIONS),
            target: rng.gen_range(-5.0..5.0),
        })
        .collect();
    let (_, grad) = net.loss_and_gradient(&batch).unwrap();
    let mut worst: f64 = 0.0;
    for (i, &g) in grad.iter().enumerate() {
        let mut plus = net.params().to_vec();
        let mut minus = plus.clone();
        plus[i] += h;
        minus[i] -= h;
        let step = Dd::from(plus[i]) - Dd::from(minus[i]);
        let diff = dd_sse(net.sizes(), &plus, &batch) - dd_sse(net.sizes(), &minus, &batch);
        let fd = diff.to_f64() / step.to_f64() / batch.len() as f64;
        let scale = g.abs().max(fd.abs()).max(1e-12);
        worst = worst.max((g - fd).abs() / scale);
    }
    worst
}

/// Component count and largest size from a boolean transitive closure.
pub fn closure_oracle(n: usize, edges: &[(usize, usize)]) -> (usize, usize) {
    let mut reach = vec![vec![false; n]; n];
    for (i, row) in reach.iter_mut().enumerate() {
        row[i] = true;
    }
    for &(u, v) in edges {
        reach[u][v] = true;
        reach[v][u] = true;
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if reach[i][k] && reach[k][j] {
                    reach[i][j] = true;
                }
            }
        }
    }
    let mut seen = vec![false; n];
    let (mut count, mut giant) = (0, 0);
    for i in 0..n {
        if seen[i] {
            continue;
        }
        count += 1;
        let members: Vec<usize> = (0..n).filter(|&j| reach[i][j]).collect();
        giant = giant.max(members.len());
        for j in members {
            seen[j] = true;
        }
    }
    (count, giant)
}
