//! Partition priors induced by the N-IG, Dirichlet and Pitman-Yor measures.
//!
//! cargo run --release --example mixing_priors

use survstrat::mixing::{dp_expected_clusters, dp_mass_matching, prior_expected_clusters};
use survstrat::rng::derive_rng;
use survstrat::MixingMeasure;

fn main() -> survstrat::Result<()> {
    let nig = MixingMeasure::Nig { alpha: 1.0, tau: 1.0 };
    let measures = [nig, MixingMeasure::Dp { mass: 1.0 }, MixingMeasure::Py { theta: 1.0, sigma: 0.25 }];

    println!("allocation weights with clusters of size 5, 2, 1 (u = 2, three auxiliary slots):");
    for m in &measures {
        let w = m.predictive_weights(&[5, 2, 1], 2.0, 3)?;
        println!("  {:>3}: existing {:?}, each new slot {:.4}", m.name(), w.existing, w.new_per_aux);
    }

    println!("prior probability of one labelled partition of 4 items:");
    for comp in [vec![4], vec![3, 1], vec![2, 2], vec![2, 1, 1], vec![1, 1, 1, 1]] {
        let row: Vec<String> =
            measures.iter().map(|m| format!("{}={:.5}", m.name(), m.eppf(&comp).unwrap())).collect();
        println!("  {comp:?}: {}", row.join("  "));
    }

    let n = 150;
    let mut rng = derive_rng(11, 0);
    let est = prior_expected_clusters(&nig, n, 20_000, &mut rng)?;
    let mass = dp_mass_matching(est.mean, n)?;
    println!(
        "N-IG(1, 1) at n = {n}: E[k] = {:.3} (se {:.3}); DP mass {mass:.4} gives {:.3}",
        est.mean,
        est.std_error,
        dp_expected_clusters(mass, n)
    );
    Ok(())
}
