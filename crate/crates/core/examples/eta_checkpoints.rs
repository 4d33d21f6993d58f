//! Effect sizes from reported Kruskal-Wallis statistics.

use resadapt::presets::eta_checkpoints;
use resadapt::stats::chi2_sf;

fn main() -> resadapt::Result<()> {
    println!(
        "{:<16} {:>8} {:>3} {:>4} {:>8} {:>10}",
        "test", "H", "k", "n", "eta2", "p"
    );
    for c in eta_checkpoints()? {
        let p = chi2_sf(c.h, (c.k - 1) as f64)?;
        println!(
            "{:<16} {:>8.3} {:>3} {:>4} {:>8.4} {:>10.3e}",
            c.label, c.h, c.k, c.n, c.eta_squared, p
        );
    }
    Ok(())
}
