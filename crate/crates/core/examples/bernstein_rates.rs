//! Time-dependent rates as degree-2 Bernstein polynomials.

use lindblad_learn::bernstein::{basis_eval, sample_rate, BernsteinRate};
use lindblad_learn::quantum::seeded_rng;

fn main() -> lindblad_learn::Result<()> {
    let rate = BernsteinRate::new(vec![0.5, 1.5, 0.3], [0.0, 10.0])?;
    println!("{:>5} {:>8} {:>8} {:>8} {:>8}", "t", "b0", "b1", "b2", "gamma");
    for k in 0..=10 {
        let t = k as f64;
        let u = t / 10.0;
        let b: Vec<f64> = (0..3).map(|j| basis_eval(j, 2, u)).collect::<Result<_, _>>()?;
        println!("{t:5.1} {:8.4} {:8.4} {:8.4} {:8.4}", b[0], b[1], b[2], rate.eval(t)?);
    }

    let mut rng = seeded_rng(11);
    for _ in 0..3 {
        let r = sample_rate(2, 0.1, 2.0, [0.0, 10.0], &mut rng)?;
        println!("sampled coefficients {:?}", r.coeffs());
    }
    Ok(())
}
