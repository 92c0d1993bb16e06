use meanfield::params::{InitialLaw, ModelParams, PopMatrix};
use meanfield::sigmoid::SigmoidSpec;
use meanfield::stationary::stationary_mean_roots;
fn main() {
    let theta = (2.0 * std::f64::consts::PI).sqrt();
    let g = 1.0;
    let gamma = 0.0;
    for j in [1.0, 1.01, 1.05, 1.1, 1.5, 2.0, 2.5, 2.6] {
        let params = ModelParams {
            m: 1,
            theta: vec![theta],
            lambda: vec![0.0],
            jbar: PopMatrix::new(1, vec![j]).unwrap(),
            sigma: PopMatrix::filled(1, 0.0),
            tau: PopMatrix::filled(1, 0.0),
            sigmoids: PopMatrix::filled(1, SigmoidSpec::centered_erf(g).unwrap()),
            init: InitialLaw::DeterministicConstant { values: vec![0.0] },
        };
        let roots = stationary_mean_roots(&params, &[gamma]).unwrap();
        println!("J={j}: {} roots {:?}", roots.len(), roots);
    }
}
