use streamsvm::baselines::{train_sgd_hinge, SgdConfig};
use streamsvm::data::{gen_gaussian_clusters, permute_stream, Label, SynthSpec};

fn main() {
    for &dim in &[5usize, 10, 20] {
        for &n in &[4000usize, 20000] {
            for &lambda in &[1e-3, 1e-4, 1e-5] {
                let spec = SynthSpec { n_train: n, n_test: 400, dim, separability_target: 0.85, seed: 40 };
                let (train, test) = gen_gaussian_clusters(&spec).unwrap();
                let mut means = vec![];
                let mut mins = vec![];
                for &k in &[1usize, 20] {
                    let mut accs = vec![];
                    for seed in 0..20u64 {
                        let perm = permute_stream(&train, seed);
                        let cfg = SgdConfig { lambda, block_k: k, seed, project: true };
                        let out = train_sgd_hinge(perm.examples.iter(), &cfg).unwrap();
                        let correct = test.examples.iter().filter(|e| {
                            Label::from_score(e.features.dot_dense(&out.weights)) == e.label
                        }).count();
                        accs.push(correct as f64 / test.len() as f64);
                    }
                    means.push(accs.iter().sum::<f64>() / 20.0);
                    mins.push(accs.iter().cloned().fold(f64::INFINITY, f64::min));
                }
                println!("dim={dim:2} n={n:6} lambda={lambda:8.0e}  k1={:.4}(min {:.3})  k20={:.4}(min {:.3})  diff={:+.4}",
                         means[0], mins[0], means[1], mins[1], means[1]-means[0]);
            }
        }
    }
}
