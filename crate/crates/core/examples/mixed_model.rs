//! OLS and random-intercept mixed models on a synthetic study.

use resadapt::dataset::Study;
use resadapt::presets::{lmm_icc, table4, table6};
use resadapt::synth::{synthetic_dataset, SynthConfig};

fn main() -> resadapt::Result<()> {
    let ds = synthetic_dataset(&SynthConfig::default())?;

    let ols = table4(&ds, Study::One)?;
    println!(
        "OLS, study 1 (R2 {:.3}, adj {:.3}, se {:.1})",
        ols.r_squared, ols.adj_r_squared, ols.residual_se
    );
    for c in &ols.coefficients {
        println!(
            "  {:<22} {:>9.2} p={:.3}{}",
            c.name,
            c.estimate,
            c.p_value,
            c.stars()
        );
    }

    let icc = lmm_icc(&ds)?;
    println!("\nintercept-only ICC by dominant trait: {:.3}", icc.icc);

    let fit = table6(&ds)?;
    println!(
        "mixed model: var_group {:.1} var_resid {:.1} R2m {:.3} R2c {:.3} AIC {:.1} BIC {:.1}{}",
        fit.var_group,
        fit.var_residual,
        fit.r2_marginal,
        fit.r2_conditional,
        fit.aic,
        fit.bic,
        if fit.boundary { " (boundary)" } else { "" }
    );
    for c in &fit.coefficients {
        println!(
            "  {:<22} {:>9.2} p={:.3}{}",
            c.name,
            c.estimate,
            c.p_value,
            c.stars()
        );
    }
    Ok(())
}
