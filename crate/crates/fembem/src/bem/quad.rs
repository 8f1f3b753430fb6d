//! Tensor rules for pairs of boundary panels, with the logarithmic
//! singularity of the kernel treated by log-weighted rules.
//!
//! Each node carries a log weight `wl` and a smooth weight `ws`. A kernel
//! split as A ln r + B contributes wl A + ws (A (ln r - ln rho) + B), where
//! rho is the local distance variable of the rule (rho = 1 on far pairs).

use crate::discretization::quadrature::{gauss_unchecked, log_unchecked};

#[derive(Debug, Clone, Copy)]
pub struct PairNode {
    pub s: f64,
    pub t: f64,
    pub wl: f64,
    pub ws: f64,
    pub ln_rho: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairKind {
    Same,
    /// The test panel ends where the trial panel starts.
    TestEndTrialStart,
    /// The test panel starts where the trial panel ends.
    TestStartTrialEnd,
    Far(usize),
}

pub fn far_order(p: usize, dist: f64, len: f64) -> usize {
    let q = 2.0 * dist / len;
    let rho = q + (q * q + 1.0).sqrt();
    let extra = if rho > 1.0 { (12.0 / rho.ln()).ceil() as usize } else { 40 };
    (p + 3 + extra).min(40)
}

pub fn pair_nodes(kind: PairKind, n: usize) -> Vec<PairNode> {
    match kind {
        PairKind::Far(m) => {
            let g = gauss_unchecked(m).to_unit();
            let mut out = Vec::with_capacity(m * m);
            for (&s, &ws) in g.points.iter().zip(&g.weights) {
                for (&t, &wt) in g.points.iter().zip(&g.weights) {
                    out.push(PairNode { s, t, wl: 0.0, ws: ws * wt, ln_rho: 0.0 });
                }
            }
            out
        }
        PairKind::Same => {
            let g = gauss_unchecked(n).to_unit();
            let l = log_unchecked(n);
            let mut out = Vec::with_capacity(4 * n * n);
            // s - t = +-u, t = tau (1 - u)
            for (&tau, &wt) in g.points.iter().zip(&g.weights) {
                for (log, (us, ws)) in [(true, (&l.points, &l.weights)), (false, (&g.points, &g.weights))] {
                    for (&u, &wu) in us.iter().zip(ws) {
                        let base = tau * (1.0 - u);
                        let w = wu * wt * (1.0 - u);
                        for (s, t) in [(base + u, base), (base, base + u)] {
                            let (wl, wsm) = if log { (w, 0.0) } else { (0.0, w) };
                            out.push(PairNode { s, t, wl, ws: wsm, ln_rho: u.ln() });
                        }
                    }
                }
            }
            out
        }
        PairKind::TestEndTrialStart | PairKind::TestStartTrialEnd => {
            let g = gauss_unchecked(n).to_unit();
            let l = log_unchecked(n);
            let mut out = Vec::with_capacity(4 * n * n);
            // distances from the shared corner: a on the test, b on the trial panel
            for (&eta, &we) in g.points.iter().zip(&g.weights) {
                for (log, (xs, wx)) in [(true, (&l.points, &l.weights)), (false, (&g.points, &g.weights))] {
                    for (&xi, &wxi) in xs.iter().zip(wx) {
                        let w = wxi * we * xi;
                        for (a, b) in [(xi, xi * eta), (xi * eta, xi)] {
                            let (s, t) = if kind == PairKind::TestEndTrialStart { (1.0 - a, b) } else { (a, 1.0 - b) };
                            let (wl, wsm) = if log { (w, 0.0) } else { (0.0, w) };
                            out.push(PairNode { s, t, wl, ws: wsm, ln_rho: xi.ln() });
                        }
                    }
                }
            }
            out
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    // int_0^1 int_0^1 ln|s - t| ds dt = -3/2
    #[test]
    fn self_rule_log_integral() {
        let nodes = pair_nodes(PairKind::Same, 8);
        let v: f64 = nodes
            .iter()
            .map(|q| {
                let r = (q.s - q.t).abs();
                q.wl + q.ws * (r.ln() - q.ln_rho)
            })
            .sum();
        assert!((v + 1.5).abs() < 1e-13, "{v}");
    }

    // int_0^1 int_0^1 ln(s + t) ds dt = 2 ln 2 - 3/2 (corner at the origin)
    #[test]
    fn adjacent_rule_log_integral() {
        for kind in [PairKind::TestEndTrialStart, PairKind::TestStartTrialEnd] {
            let nodes = pair_nodes(kind, 10);
            let v: f64 = nodes
                .iter()
                .map(|q| {
                    let (a, b) = if kind == PairKind::TestEndTrialStart { (1.0 - q.s, q.t) } else { (q.s, 1.0 - q.t) };
                    let r = a + b;
                    q.wl + q.ws * (r.ln() - q.ln_rho)
                })
                .sum();
            assert!((v - (2.0 * 2f64.ln() - 1.5)).abs() < 1e-13, "{v}");
        }
    }

    #[test]
    fn far_order_capped() {
        assert_eq!(far_order(2, 0.0, 1.0), 40);
        assert!(far_order(2, 10.0, 1.0) < 12);
    }
}
