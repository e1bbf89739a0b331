//! Regenerates the shipped workload profiles from `profiles/specs.json`, the
//! device cards and the hierarchy in `config/imc.json`.
//!
//!     cargo run -p afmtj-lab --example fit_profiles -- data

use std::path::PathBuf;

use afmtj_core::config::{load_json, to_json};
use afmtj_core::device::DeviceKind;
use afmtj_core::imc::{fig4_targets, fit_profile, ProfileSpec};
use afmtj_core::io::write_string_atomic;
use afmtj_lab::files::{load, load_cards, ImcConfig};
use anyhow::{bail, Context, Result};

fn main() -> Result<()> {
    let data = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "data".into()));
    let imc = load::<ImcConfig>(&data.join("config/imc.json"))?;
    let cards = load_cards(&imc.resolve(&imc.value.cards))?;
    let card = |k: DeviceKind| cards.iter().find(|c| c.label == k).copied().with_context(|| format!("no {k} card"));
    let (afmtj, mtj) = (card(DeviceKind::Afmtj)?, card(DeviceKind::Mtj)?);
    let hier = imc.value.hierarchy.as_ref().map(|h| h.to_config()).transpose()?.unwrap_or_default();
    let cpu = imc.value.cpu.map(|c| c.to_baseline()).transpose()?.unwrap_or_default();

    let specs: Vec<ProfileSpec> = load_json(&data.join("profiles/specs.json"))?;
    for spec in &specs {
        let Some(targets) = fig4_targets(&spec.name) else {
            bail!("no bar targets for `{}`", spec.name);
        };
        let fit = fit_profile(spec, &targets, &afmtj, &mtj, &hier, &cpu)?;
        let path = data.join("profiles").join(format!("{}.json", spec.name));
        write_string_atomic(&path, &to_json(&fit.profile))?;
        println!("{}: {} ({})", spec.name, path.display(), if fit.exact { "exact" } else { "least squares" });
    }
    Ok(())
}
