//! Multi-domain radial collocation mesh on (0, R].
//!
//! The innermost domain [0, b1] uses the even or odd extension to [-b1, b1]
//! (parity (-1)^l of the regular radial solution), so no node sits at r = 0.
//! Outer shells use Lobatto grids sharing their end nodes.

use super::cheb::{barycentric_row, diff_matrix, lobatto_points, lobatto_weights, RMat};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeRole {
    /// Collocation of the radial equation.
    Ode { domain: usize, local: usize },
    /// Continuity of u' between two domains.
    Interface { left: usize, left_local: usize, right: usize, right_local: usize },
    /// u(R) = boundary datum.
    Boundary { domain: usize, local: usize },
}

#[derive(Debug, Clone)]
pub struct Domain {
    pub a: f64,
    pub b: f64,
    pub inner: bool,
    /// Local node radii; local 0 is the right end r = b.
    pub local_r: Vec<f64>,
    pub global: Vec<usize>,
    /// First and second derivative in r, indexed [parity][local row][local col];
    /// parity 0 = even, 1 = odd (identical for shells).
    d1: [RMat; 2],
    d2: [RMat; 2],
    /// Chebyshev degree of the (full, for the inner domain) grid.
    degree: usize,
}

impl Domain {
    fn inner(b: f64, n0: usize) -> Self {
        let n = 2 * n0 - 1;
        let x = lobatto_points(n);
        let d = diff_matrix(n);
        let dd = d.matmul(&d);
        let fold = |m: &RMat, s: f64, scale: f64| {
            let mut out = RMat::zeros(n0, n0);
            for i in 0..n0 {
                for c in 0..n0 {
                    out.set(i, c, (m.get(i, c) + s * m.get(i, n - c)) * scale);
                }
            }
            out
        };
        Domain {
            a: 0.0,
            b,
            inner: true,
            local_r: x[..n0].iter().map(|t| b * t).collect(),
            global: Vec::new(),
            d1: [fold(&d, 1.0, 1.0 / b), fold(&d, -1.0, 1.0 / b)],
            d2: [fold(&dd, 1.0, 1.0 / (b * b)), fold(&dd, -1.0, 1.0 / (b * b))],
            degree: n,
        }
    }

    fn shell(a: f64, b: f64, m: usize) -> Self {
        let y = lobatto_points(m);
        let h = 0.5 * (b - a);
        let d = diff_matrix(m).scaled(1.0 / h);
        let dd = d.matmul(&d);
        Domain {
            a,
            b,
            inner: false,
            local_r: y.iter().map(|t| 0.5 * (a + b) + h * t).collect(),
            global: Vec::new(),
            d1: [d.clone(), d],
            d2: [dd.clone(), dd],
            degree: m,
        }
    }

    pub fn len(&self) -> usize {
        self.local_r.len()
    }

    pub fn is_empty(&self) -> bool {
        self.local_r.is_empty()
    }

    pub fn d1(&self, parity: usize) -> &RMat {
        &self.d1[parity]
    }

    pub fn d2(&self, parity: usize) -> &RMat {
        &self.d2[parity]
    }

    /// Interpolation coefficients (over local nodes) for r in [a, b].
    pub fn interpolation_row(&self, r: f64, parity: usize) -> Vec<f64> {
        let x = lobatto_points(self.degree);
        let w = lobatto_weights(self.degree);
        if self.inner {
            let n0 = self.len();
            let full = barycentric_row(&x, &w, r / self.b);
            let s = if parity == 0 { 1.0 } else { -1.0 };
            (0..n0).map(|c| full[c] + s * full[self.degree - c]).collect()
        } else {
            let t = (2.0 * r - self.a - self.b) / (self.b - self.a);
            barycentric_row(&x, &w, t)
        }
    }
}

#[derive(Debug, Clone)]
pub struct RadialMesh {
    pub radius: f64,
    pub nodes: Vec<f64>,
    pub roles: Vec<NodeRole>,
    pub domains: Vec<Domain>,
}

impl RadialMesh {
    /// Domains split at `breaks` (strictly inside (0, R)); `counts[d]` new
    /// nodes per domain (the inner domain counts its positive nodes).
    pub fn new(radius: f64, breaks: &[f64], counts: &[usize]) -> Self {
        assert_eq!(counts.len(), breaks.len() + 1, "one node count per domain");
        let mut ends: Vec<f64> = breaks.to_vec();
        ends.push(radius);
        let mut domains = Vec::with_capacity(ends.len());
        domains.push(Domain::inner(ends[0], counts[0].max(2)));
        for d in 1..ends.len() {
            domains.push(Domain::shell(ends[d - 1], ends[d], counts[d].max(2)));
        }
        // global numbering, ascending in r
        let mut nodes = Vec::new();
        {
            let inner = &mut domains[0];
            let n0 = inner.len();
            inner.global = (0..n0).map(|i| n0 - 1 - i).collect();
            nodes.extend(inner.local_r.iter().rev());
        }
        for d in 1..domains.len() {
            let left_end = domains[d - 1].global[0];
            let m = domains[d].len() - 1;
            let start = nodes.len();
            let mut global = vec![0; m + 1];
            global[m] = left_end;
            for (k, i) in (0..m).rev().enumerate() {
                global[i] = start + k;
                nodes.push(domains[d].local_r[i]);
            }
            domains[d].global = global;
        }
        let mut roles = vec![NodeRole::Boundary { domain: 0, local: 0 }; nodes.len()];
        for (d, dom) in domains.iter().enumerate() {
            let last = dom.len() - 1;
            for (i, &g) in dom.global.iter().enumerate() {
                let is_left_end = !dom.inner && i == last;
                if i != 0 && !is_left_end {
                    roles[g] = NodeRole::Ode { domain: d, local: i };
                }
            }
            if d + 1 < domains.len() {
                let right = &domains[d + 1];
                roles[dom.global[0]] =
                    NodeRole::Interface { left: d, left_local: 0, right: d + 1, right_local: right.len() - 1 };
            } else {
                roles[dom.global[0]] = NodeRole::Boundary { domain: d, local: 0 };
            }
        }
        Self { radius, nodes, roles, domains }
    }

    /// Split at `breaks`, with `n_r` nodes shared evenly (remainder to the outermost shell).
    pub fn balanced(radius: f64, breaks: &[f64], n_r: usize) -> Self {
        let dcount = breaks.len() + 1;
        let base = (n_r / dcount).max(4);
        let mut counts = vec![base; dcount];
        let used = base * dcount;
        if n_r > used {
            counts[dcount - 1] += n_r - used;
        }
        Self::new(radius, breaks, &counts)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn boundary_node(&self) -> usize {
        self.len() - 1
    }

    /// Global coefficients of d/dr at r = R.
    pub fn boundary_derivative(&self, parity: usize) -> Vec<(usize, f64)> {
        let dom = self.domains.last().expect("mesh has a domain");
        let d1 = dom.d1(parity);
        (0..dom.len()).map(|c| (dom.global[c], d1.get(0, c))).collect()
    }

    /// Global interpolation coefficients at radius r in [0, R].
    pub fn interpolation(&self, r: f64, parity: usize) -> Vec<(usize, f64)> {
        let d = self.domains.iter().position(|dom| r <= dom.b + 1e-14).unwrap_or(self.domains.len() - 1);
        let dom = &self.domains[d];
        dom.interpolation_row(r, parity).into_iter().enumerate().map(|(c, v)| (dom.global[c], v)).collect()
    }

    /// Global coefficients of d/dr at radius r in [0, R], from the containing domain.
    pub fn derivative_at(&self, r: f64, parity: usize) -> Vec<(usize, f64)> {
        let d = self.domains.iter().position(|dom| r <= dom.b + 1e-14).unwrap_or(self.domains.len() - 1);
        let dom = &self.domains[d];
        // the derivative of a parity-s function has parity -s
        let row = dom.interpolation_row(r, if dom.inner { 1 - parity } else { parity });
        let d1 = dom.d1(parity);
        (0..dom.len())
            .map(|c| (dom.global[c], (0..dom.len()).map(|i| row[i] * d1.get(i, c)).sum::<f64>()))
            .collect()
    }

    /// Largest first/second derivative entries, used to equilibrate constraint rows.
    pub fn scales(&self) -> (f64, f64) {
        let d1 = self.domains.iter().map(|d| d.d1(0).max_abs().max(d.d1(1).max_abs())).fold(0.0, f64::max);
        let d2 = self.domains.iter().map(|d| d.d2(0).max_abs().max(d.d2(1).max_abs())).fold(0.0, f64::max);
        (d1, d2)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn node_layout() {
        let mesh = RadialMesh::new(1.5, &[1.0], &[6, 5]);
        assert_eq!(mesh.len(), 11);
        assert!(mesh.nodes.windows(2).all(|w| w[0] < w[1]));
        assert!(mesh.nodes[0] > 0.0);
        assert!((mesh.nodes[5] - 1.0).abs() < 1e-15);
        assert!((mesh.nodes[10] - 1.5).abs() < 1e-15);
        assert!(matches!(mesh.roles[5], NodeRole::Interface { .. }));
        assert!(matches!(mesh.roles[10], NodeRole::Boundary { .. }));
        let odes = mesh.roles.iter().filter(|r| matches!(r, NodeRole::Ode { .. })).count();
        assert_eq!(odes, 9);
    }

    #[test]
    fn parity_derivatives() {
        let mesh = RadialMesh::new(2.0, &[1.0], &[12, 20]);
        for (parity, f, df) in [
            (0usize, (|r: f64| (r * r).cos()) as fn(f64) -> f64, (|r: f64| -2.0 * r * (r * r).sin()) as fn(f64) -> f64),
            (1usize, |r: f64| r * (0.5 * r * r).exp(), |r: f64| (1.0 + r * r) * (0.5 * r * r).exp()),
        ] {
            let vals: Vec<f64> = mesh.nodes.iter().map(|&r| f(r)).collect();
            for r in [0.05, 0.5, 1.0, 1.3, 2.0] {
                let v: f64 = mesh.interpolation(r, parity).iter().map(|(g, c)| c * vals[*g]).sum();
                let d: f64 = mesh.derivative_at(r, parity).iter().map(|(g, c)| c * vals[*g]).sum();
                assert!((v - f(r)).abs() < 1e-10, "value parity {parity} r {r}");
                assert!((d - df(r)).abs() < 1e-8, "derivative parity {parity} r {r}");
            }
        }
    }
}
