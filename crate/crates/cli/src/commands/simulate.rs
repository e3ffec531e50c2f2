use latent_hazard::data::write_lifetimes_csv;
use latent_hazard::simulator::{simulate_bian, simulate_dataset, simulate_hmm};
use latent_hazard::{BianConfig, Dataset, HmmConfig, SimConfig};

use crate::args::{Generator, Preset, SimulateArgs};
use crate::error::{required, CliError};

pub fn run(a: &SimulateArgs) -> Result<(), CliError> {
    let out = required(&a.out, "out")?;
    let (lifetimes, names) = match a.model {
        Generator::Latent => {
            let mut cfg = match a.preset {
                Preset::Sec61 => SimConfig::sec61(a.n, a.seed),
            };
            cfg.horizon = a.horizon;
            (simulate_dataset(&cfg)?, vec!["x1"])
        }
        Generator::Hmm => {
            let mut cfg = HmmConfig {
                seed: a.seed,
                ..HmmConfig::default()
            };
            if let Some(h) = a.horizon {
                cfg.horizon = h;
            }
            let samples = simulate_hmm(&cfg, a.n)?;
            (
                samples.into_iter().map(|s| s.lifetime).collect(),
                vec!["log_t", "y"],
            )
        }
        Generator::Bian => {
            let mut cfg = BianConfig {
                seed: a.seed,
                ..BianConfig::default()
            };
            if let Some(h) = a.horizon {
                cfg.horizon = h;
            }
            if let Some(c) = a.noise_scale {
                cfg.noise_scale = c;
            }
            if let Some(t) = a.failure_threshold {
                cfg.failure_threshold = t;
            }
            let lifetimes = simulate_bian(&cfg, a.n)?
                .iter()
                .enumerate()
                .map(|(i, s)| s.to_lifetime((i + 1).to_string(), format!("U{}", i + 1)))
                .collect::<Result<_, _>>()?;
            (lifetimes, vec!["s", "omega"])
        }
    };
    let names = names.into_iter().map(String::from).collect();
    let ds = Dataset::new(lifetimes, names)?;
    write_lifetimes_csv(out, &ds)?;
    let failed = ds.lifetimes.iter().filter(|l| l.event().is_failure()).count();
    println!(
        "wrote {} lifetimes ({failed} failed) to {}",
        ds.len(),
        out.display()
    );
    Ok(())
}
