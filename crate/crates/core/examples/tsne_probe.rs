use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sreldiag::analysis::{tsne_embed, TsneConfig};

fn main() {
    for (perp, lr, seed) in [(5.0, 50.0, 5u64), (5.0, 200.0, 5), (8.0, 50.0, 5), (5.0, 50.0, 9), (5.0, 50.0, 13)] {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut xs: Vec<Vec<f64>> = (0..40)
            .map(|_| (0..3).map(|_| rng.gen_range(-5.0..5.0)).collect())
            .collect();
        xs.push(xs[0].clone());
        let cfg = TsneConfig { perplexity: perp, learning_rate: lr, ..TsneConfig::with_seed(seed) };
        let r = tsne_embed(&xs, &cfg).unwrap();
        let last = r.coords.len() - 1;
        let d = ((r.coords[0][0] - r.coords[last][0]).powi(2) + (r.coords[0][1] - r.coords[last][1]).powi(2)).sqrt();
        let diam = r.coords.iter().flat_map(|a| r.coords.iter().map(move |b| ((a[0]-b[0]).powi(2)+(a[1]-b[1]).powi(2)).sqrt())).fold(0.0f64, f64::max);
        println!("perp {perp} lr {lr} seed {seed}: kl {:.4} dup/diam {:.5}", r.kl_final, d / diam);
    }
}
