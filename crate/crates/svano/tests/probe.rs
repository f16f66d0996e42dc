// Temporary probe: replay captured dual-subproblem instances.

use nalgebra::{DMatrix, DVector};
use svano::metric::SymmetricMatrix;
use svano::subproblem::{solve_dual, BundleSet, DualSolution, TrustRegion};

fn load(path: &str) -> (BundleSet, SymmetricMatrix, TrustRegion, Option<DualSolution>) {
    let text = std::fs::read_to_string(path).unwrap();
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    let n = v["n"].as_u64().unwrap() as usize;
    let m = v["m"].as_u64().unwrap() as usize;
    let vecf = |node: &serde_json::Value| -> Vec<f64> {
        node.as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect()
    };
    let points: Vec<DVector<f64>> = v["points"]
        .as_array()
        .unwrap()
        .iter()
        .map(|p| DVector::from_vec(vecf(p)))
        .collect();
    let grads: Vec<DVector<f64>> = v["subgradients"]
        .as_array()
        .unwrap()
        .iter()
        .map(|p| DVector::from_vec(vecf(p)))
        .collect();
    let offsets = vecf(&v["offsets"]);
    let mut bundle = BundleSet::new(points[0].clone(), 0.0, grads[0].clone());
    for j in 1..m {
        bundle.push(points[j].clone(), 0.0, grads[j].clone());
    }
    bundle.set_offsets(offsets);
    let mut wmat = DMatrix::<f64>::zeros(n, n);
    for (i, row) in v["w"].as_array().unwrap().iter().enumerate() {
        for (j, x) in row.as_array().unwrap().iter().enumerate() {
            wmat[(i, j)] = x.as_f64().unwrap();
        }
    }
    let w = SymmetricMatrix::from_matrix(wmat).unwrap();
    let tr = match v["delta"].as_f64() {
        Some(d) => TrustRegion::new(d).unwrap(),
        None => TrustRegion::unbounded(),
    };
    let start = v["start"].as_object().map(|s| {
        let omega = DVector::from_vec(vecf(&s["omega"]));
        let gamma = DVector::from_vec(vecf(&s["gamma"]));
        let z = 0.0;
        let t = DVector::zeros(n);
        DualSolution { omega, gamma, z, t, objective: 0.0, pivots: 0 }
    });
    (bundle, w, tr, start)
}

fn replay(path: &str) {
    let (bundle, w, tr, start) = load(path);
    println!("instance {path}: m = {}, n = {}", bundle.len(), bundle.dim());
    let wm = w.as_matrix();
    let mut wmin = f64::INFINITY;
    let mut wmax: f64 = 0.0;
    for i in 0..bundle.dim() {
        wmin = wmin.min(wm[(i, i)]);
        wmax = wmax.max(wm[(i, i)]);
    }
    println!("  W diag range [{wmin:.3e}, {wmax:.3e}]");
    match solve_dual(&bundle, &w, &tr, start.as_ref()) {
        Ok(sol) => println!("  OK: {} pivots, objective {:.6e}", sol.pivots, sol.objective),
        Err(e) => println!("  FAILED: {e}"),
    }
    match solve_dual(&bundle, &w, &tr, None) {
        Ok(sol) => println!("  cold OK: {} pivots, objective {:.6e}", sol.pivots, sol.objective),
        Err(e) => println!("  cold FAILED: {e}"),
    }
}

#[test]
fn replay_captured_instances() {
    let defaults = [
        "/tmp/qpdump/mxhilb/qp_pivotlimit_101x50.json",
        "/tmp/qpdump/qp_pivotlimit_101x50.json",
        "/tmp/qpdump/qp_nonfinite_27x50.json",
    ];
    match std::env::var("SVANO_QP_REPLAY") {
        Ok(path) => replay(&path),
        Err(_) => {
            for path in defaults {
                if std::path::Path::new(path).exists() {
                    replay(path);
                }
            }
        }
    }
    panic!("diagnostics only");
}
