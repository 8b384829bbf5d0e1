use crate::error::{Assumption, Error, Result};
use crate::physics::stopping::StoppingPower;
use crate::quadrature::gauss_legendre;

const GAUSS_POINTS: usize = 8;
const PIECES_PER_INTERVAL: usize = 2;
const A4_SAMPLES: usize = 4096;

/// Energy grid and the remapping `r(eps) = int_0^eps 1/S`.
///
/// Nodes `eps_0 = 0 < ... < eps_K = eps_max` are uniform. The remapped
/// nodes `tau_k = r(eps_k)` are where the transport march takes its steps.
#[derive(Debug, Clone)]
pub struct EnergyMap {
    stopping: StoppingPower,
    eps_max: f64,
    nodes: Vec<f64>,
    s_nodes: Vec<f64>,
    r_nodes: Vec<f64>,
    weights: Vec<f64>,
    rule: (Vec<f64>, Vec<f64>),
}

impl EnergyMap {
    /// Tabulate `r` on `intervals + 1` uniform nodes over `[0, eps_max]`.
    ///
    /// Fails with an A4 error if the stopping power is non-positive,
    /// non-finite or undefined anywhere on the sampled range.
    pub fn build(stopping: StoppingPower, eps_max: f64, intervals: usize) -> Result<Self> {
        if intervals < 2 {
            return Err(Error::Config(format!("energy grid needs at least 2 intervals, got {intervals}")));
        }
        if !(eps_max.is_finite() && eps_max > 0.0) {
            return Err(Error::Config(format!("eps_max must be positive, got {eps_max}")));
        }
        check_positive(&stopping, 0.0, eps_max, A4_SAMPLES)?;

        let de = eps_max / intervals as f64;
        let mut nodes: Vec<f64> = (0..=intervals).map(|k| k as f64 * de).collect();
        nodes[intervals] = eps_max;
        let s_nodes = nodes.iter().map(|&e| stopping.eval(e)).collect::<Result<Vec<_>>>()?;
        let mut weights = vec![de; intervals + 1];
        weights[0] = 0.5 * de;
        weights[intervals] = 0.5 * de;

        let mut map = Self {
            stopping,
            eps_max,
            nodes,
            s_nodes,
            r_nodes: Vec::new(),
            weights,
            rule: gauss_legendre(GAUSS_POINTS),
        };
        // the Gauss points themselves must see a positive S as well
        let mut r = Vec::with_capacity(intervals + 1);
        r.push(0.0);
        for k in 0..intervals {
            let piece = map.integrate_inverse(map.nodes[k], map.nodes[k + 1])?;
            r.push(r[k] + piece);
        }
        map.r_nodes = r;
        Ok(map)
    }

    pub fn stopping_power(&self) -> &StoppingPower {
        &self.stopping
    }

    pub fn eps_max(&self) -> f64 {
        self.eps_max
    }

    pub fn intervals(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn step(&self) -> f64 {
        self.eps_max / self.intervals() as f64
    }

    /// `S(eps_k)` at the nodes.
    pub fn s_nodes(&self) -> &[f64] {
        &self.s_nodes
    }

    /// Remapped nodes `tau_k = r(eps_k)`.
    pub fn tau_nodes(&self) -> &[f64] {
        &self.r_nodes
    }

    /// `tau_{k+1} - tau_k`.
    pub fn tau_step(&self, k: usize) -> f64 {
        self.r_nodes[k + 1] - self.r_nodes[k]
    }

    /// `T_R = r(eps_max)`.
    pub fn t_r(&self) -> f64 {
        self.r_nodes[self.intervals()]
    }

    /// Trapezoid weights of the energy quadrature; they sum to `eps_max`.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn s(&self, eps: f64) -> f64 {
        self.stopping
            .eval(eps.clamp(0.0, self.eps_max))
            .expect("stopping power validated on [0, eps_max] at construction")
    }

    /// `r(eps)` for any `eps` in `[0, eps_max]`.
    pub fn r(&self, eps: f64) -> f64 {
        let eps = eps.clamp(0.0, self.eps_max);
        let k = ((eps / self.step()) as usize).min(self.intervals() - 1);
        self.r_nodes[k] + self.integrate_inverse(self.nodes[k], eps).expect("validated range")
    }

    /// `r^{-1}(tau)`: cubic Hermite guess on the node table (slopes `S`),
    /// polished by safeguarded Newton steps.
    pub fn r_inv(&self, tau: f64) -> f64 {
        let tau = tau.clamp(0.0, self.t_r());
        let n = self.intervals();
        let k = match self.r_nodes.partition_point(|&r| r <= tau) {
            0 => 0,
            p => (p - 1).min(n - 1),
        };
        let (t0, t1) = (self.r_nodes[k], self.r_nodes[k + 1]);
        let (mut lo, mut hi) = (self.nodes[k], self.nodes[k + 1]);
        let h = t1 - t0;
        let t = (tau - t0) / h;
        let (h00, h10, h01, h11) = (
            2.0 * t.powi(3) - 3.0 * t * t + 1.0,
            t.powi(3) - 2.0 * t * t + t,
            -2.0 * t.powi(3) + 3.0 * t * t,
            t.powi(3) - t * t,
        );
        let mut e = h00 * lo + h10 * h * self.s_nodes[k] + h01 * hi + h11 * h * self.s_nodes[k + 1];
        e = e.clamp(lo, hi);
        let scale = self.eps_max.max(1.0);
        for _ in 0..60 {
            let f = self.r_nodes[k] + self.integrate_inverse(self.nodes[k], e).expect("validated range") - tau;
            if f == 0.0 {
                break;
            }
            if f > 0.0 {
                hi = e;
            } else {
                lo = e;
            }
            let mut next = e - f * self.s(e);
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            if (next - e).abs() <= 1e-16 * scale {
                e = next;
                break;
            }
            e = next;
        }
        e
    }

    /// `int_a^b 1/S`, split at the model's breakpoints.
    fn integrate_inverse(&self, a: f64, b: f64) -> Result<f64> {
        if b <= a {
            return Ok(0.0);
        }
        let mut cuts = vec![a];
        cuts.extend(self.stopping.breakpoints(a, b));
        cuts.push(b);
        let (x, w) = &self.rule;
        let mut total = 0.0;
        for seg in cuts.windows(2) {
            let len = (seg[1] - seg[0]) / PIECES_PER_INTERVAL as f64;
            for p in 0..PIECES_PER_INTERVAL {
                let mid = seg[0] + (p as f64 + 0.5) * len;
                let mut s = 0.0;
                for (xi, wi) in x.iter().zip(w) {
                    let e = mid + 0.5 * len * xi;
                    let sv = self.stopping.eval(e)?;
                    if !(sv > 0.0 && sv.is_finite()) {
                        return Err(a4_error(e, sv));
                    }
                    s += wi / sv;
                }
                total += 0.5 * len * s;
            }
        }
        Ok(total)
    }
}

fn a4_error(eps: f64, value: f64) -> Error {
    Error::Assumption {
        assumption: Assumption::A4,
        detail: format!("stopping power S({eps}) = {value} is not strictly positive"),
    }
}

/// Sample `S` on `samples + 1` uniform points of `[lo, hi]`; report the first
/// energy where it is undefined, non-finite or non-positive.
pub(crate) fn check_positive(stopping: &StoppingPower, lo: f64, hi: f64, samples: usize) -> Result<()> {
    for i in 0..=samples {
        let e = lo + (hi - lo) * i as f64 / samples as f64;
        match stopping.eval(e) {
            Ok(s) if s > 0.0 && s.is_finite() => {}
            Ok(s) => return Err(a4_error(e, s)),
            Err(err) => {
                return Err(Error::Assumption {
                    assumption: Assumption::A4,
                    detail: format!("stopping power undefined at eps = {e}: {err}"),
                })
            }
        }
    }
    Ok(())
}
