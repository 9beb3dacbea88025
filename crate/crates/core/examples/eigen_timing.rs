use std::time::Instant;

use semicircle_core::eigen::symmetric_eigenvalues;
use semicircle_core::ensemble::{assemble, sample_entries, EntryLaw, WignerSpec};

fn main() {
    for &n in &[256usize, 512, 1024] {
        let t = Instant::now();
        let x = sample_entries(&WignerSpec::new(n, EntryLaw::Gaussian, 1).unwrap()).unwrap();
        let ts = t.elapsed();
        let w = assemble(&x);
        let t = Instant::now();
        let l = symmetric_eigenvalues(&w).unwrap();
        println!("n={n} sample {:?} eig {:?} range [{:.3}, {:.3}]", ts, t.elapsed(), l[0], l[n - 1]);
    }
}
