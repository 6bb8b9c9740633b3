use std::time::Instant;

use fracspec_core::quad_oracle::{oracle_eigenpairs, AssemblyOptions};
use fracspec_core::{HurstParam, KernelSpec};

fn main() {
    let n: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(2000);
    let k = KernelSpec::fbm(HurstParam::new(0.75).unwrap());
    let t = Instant::now();
    let p = oracle_eigenpairs(&k, n, 30, AssemblyOptions::default()).unwrap();
    println!("n={n} {:?} lam1={} lam30={}", t.elapsed(), p[0].lam, p[29].lam);
}
