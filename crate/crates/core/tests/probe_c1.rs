use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use tvk_core::linalg;
use tvk_core::norm::*;

fn accept_cfg() -> VariationalConfig {
    VariationalConfig { restarts: 6, max_iters: 300, tol: 1e-10, seed: 0x7601, structured_starts: true, polish_iters: 400 }
}

#[test]
fn probe() {
    let oct = VectorBallSpec::regular_polygon(8).unwrap();
    let specs = vec![
        MatrixNormSpec::frobenius(2, 2),
        MatrixNormSpec::schatten(2, 2, PExp::Finite(1.0)),
        MatrixNormSpec::schatten(2, 2, PExp::Finite(2.0)),
        MatrixNormSpec::schatten(2, 2, PExp::Inf),
        MatrixNormSpec::mixed_rows(VectorBallSpec::l1(2), VectorBallSpec::l2(2)),
        MatrixNormSpec::mixed_rows(VectorBallSpec::l2(2), VectorBallSpec::l1(2)),
        MatrixNormSpec::mixed_rows(VectorBallSpec::linf(2), VectorBallSpec::l1(2)),
        MatrixNormSpec::mixed_rows(VectorBallSpec::l1(2), VectorBallSpec::linf(2)),
        MatrixNormSpec::mixed_cols(VectorBallSpec::l2(2), VectorBallSpec::l1(2)),
        MatrixNormSpec::mixed_cols(VectorBallSpec::linf(2), VectorBallSpec::l2(2)),
        MatrixNormSpec::mixed_cols(oct, VectorBallSpec::l2(2)),
    ];
    for (si, spec) in specs.iter().enumerate() {
        let dual = spec.dual_spec().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0xACCE ^ spec.n as u64);
        let mut worst = (0.0f64, 0usize);
        for i in 0..200 {
            let a = linalg::gaussian_mat(spec.n, spec.d, &mut rng);
            let closed = dual.gauge(&a).unwrap();
            let var = spec.dual_gauge_variational(&a, &accept_cfg()).unwrap();
            let err = (var.value - closed).abs() / (1.0 + closed);
            if err > worst.0 { worst = (err, i); }
        }
        eprintln!("spec {si}: worst {:.3e} at sample {}", worst.0, worst.1);
    }
}
