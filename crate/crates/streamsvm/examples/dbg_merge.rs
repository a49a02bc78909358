// temporary debug: reproduce the stalled merge instance
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use streamsvm::geometry::{enclose_ball_and_points, Ball, MebSolverConfig, Point};

fn main() {
    let mut rng = ChaCha20Rng::seed_from_u64(57);
    for case in 0..60 {
        let dim = rng.gen_range(2..=8usize);
        let center: Vec<f64> = (0..dim).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let b = Ball { center: Point { coords: center }, radius: rng.gen_range(0.0..2.0) };
        let npts = rng.gen_range(1..=12usize);
        let points: Vec<Point> = (0..npts)
            .map(|_| Point { coords: (0..dim).map(|_| rng.gen_range(-6.0..6.0)).collect() })
            .collect();
        match enclose_ball_and_points(&b, &points, &MebSolverConfig::default()) {
            Ok(_) => {}
            Err(e) => {
                println!("case {case} dim {dim} npts {npts} r {} FAILED: {e}", b.radius);
                println!("ball center {:?}", b.center.coords);
                for p in &points { println!("  p {:?}", p.coords); }
                return;
            }
        }
    }
    println!("all passed");
}
