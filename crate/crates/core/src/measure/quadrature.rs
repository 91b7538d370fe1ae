use std::sync::OnceLock;

/// Gauss-Legendre nodes and weights on `[0, 1]` for 3 or 5 points.
pub fn gauss_legendre(order: usize) -> (Vec<f64>, Vec<f64>) {
    let (x, w): (Vec<f64>, Vec<f64>) = match order {
        3 => (
            vec![-(0.6f64).sqrt(), 0.0, (0.6f64).sqrt()],
            vec![5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0],
        ),
        5 => {
            let a = (5.0 - 2.0 * (10.0f64 / 7.0).sqrt()).sqrt() / 3.0;
            let b = (5.0 + 2.0 * (10.0f64 / 7.0).sqrt()).sqrt() / 3.0;
            let wa = (322.0 + 13.0 * 70.0f64.sqrt()) / 900.0;
            let wb = (322.0 - 13.0 * 70.0f64.sqrt()) / 900.0;
            (vec![-b, -a, 0.0, a, b], vec![wb, wa, 128.0 / 225.0, wa, wb])
        }
        _ => panic!("unsupported Gauss-Legendre order {order}"),
    };
    (
        x.iter().map(|v| 0.5 * (v + 1.0)).collect(),
        w.iter().map(|v| 0.5 * v).collect(),
    )
}

/// Tensor-product rule on `[0,1]^d` for `d <= 4`; weights sum to 1. Cached.
pub fn tensor_rule(order: usize, d: usize) -> &'static [(Vec<f64>, f64)] {
    static RULES: OnceLock<Vec<Vec<(Vec<f64>, f64)>>> = OnceLock::new();
    let rules = RULES.get_or_init(|| {
        let mut all = Vec::new();
        for order in [3, 5] {
            for d in 0..=4 {
                all.push(build_tensor_rule(order, d));
            }
        }
        all
    });
    let base = match order {
        3 => 0,
        5 => 5,
        _ => panic!("unsupported Gauss-Legendre order {order}"),
    };
    &rules[base + d]
}

fn build_tensor_rule(order: usize, d: usize) -> Vec<(Vec<f64>, f64)> {
    let (x, w) = gauss_legendre(order);
    let total = order.pow(d as u32);
    let mut out = Vec::with_capacity(total);
    for mut k in 0..total {
        let mut node = Vec::with_capacity(d);
        let mut weight = 1.0;
        for _ in 0..d {
            let j = k % order;
            k /= order;
            node.push(x[j]);
            weight *= w[j];
        }
        out.push((node, weight));
    }
    out
}
