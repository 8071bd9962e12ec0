use std::collections::BTreeSet;
use std::path::PathBuf;

use anyhow::{Context, Result};
use qnet_core::attack::{audit, write_audit_csv, DeviationRegistry};
use qnet_core::characterizer::{derive_unique_mechanism, min_cost_search};
use qnet_core::checker::{write_reports, PropertyRegistry, PropertyReport};
use qnet_core::sim::{simulate_batch, write_episodes_csv};
use qnet_core::Mechanism;
use serde_json::json;

use crate::config::RunConfig;
use crate::output::{OutputDir, Provenance};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Check,
    Derive,
    Simulate,
    Attack,
    MinCost,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Check => "check",
            Command::Derive => "derive",
            Command::Simulate => "simulate",
            Command::Attack => "attack",
            Command::MinCost => "mincost",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    /// False when a `check.expect` property failed.
    pub expectations_met: bool,
    pub files: Vec<PathBuf>,
}

pub fn run(cmd: Command, cfg: &RunConfig) -> Result<Outcome> {
    let seed = match cmd {
        Command::Simulate | Command::Attack => Some(cfg.sim.seed.with_context(|| {
            format!("`{}` needs an explicit sim.seed", cmd.name())
        })?),
        _ => None,
    };
    let provenance = Provenance { command: cmd.name(), config_hash: cfg.hash(), seed };
    let dir = cfg.output_dir.clone().unwrap_or_else(|| PathBuf::from("."));
    let mut out = OutputDir::create(&dir, provenance)?;
    let expectations_met = match cmd {
        Command::Check => check(cfg, &mut out)?,
        Command::Derive => derive(cfg, &mut out)?,
        Command::Simulate => simulate(cfg, &mut out)?,
        Command::Attack => attack(cfg, &mut out)?,
        Command::MinCost => mincost(cfg, &mut out)?,
    };
    Ok(Outcome { expectations_met, files: out.written().to_vec() })
}

fn describe(r: &PropertyReport) -> String {
    let mut s = format!("{:<20} {}", r.property, if r.holds { "holds" } else { "FAILS" });
    if let (false, Some(w)) = (r.holds, r.witness) {
        let parts: Vec<String> = [("lambda", w.lambda), ("j", w.j), ("n", w.n), ("m", w.m)]
            .iter()
            .filter_map(|(k, v)| v.map(|v| format!("{k}={v}")))
            .collect();
        s.push_str(&format!(" at {}", parts.join(" ")));
    }
    s.push_str(&format!(" (margin {:e})", r.margin));
    s
}

fn check(cfg: &RunConfig, out: &mut OutputDir) -> Result<bool> {
    let mech = cfg.mechanism("check")?;
    let registry = PropertyRegistry::builtin();
    let params = cfg.check.params();
    let mut props = registry.standard_suite(&params)?;
    let mut seen: BTreeSet<String> = props.iter().map(|p| p.name()).collect();
    let mut expected = Vec::new();
    for name in &cfg.check.expect {
        let p = registry.parse(name, &params)?;
        expected.push(p.name());
        if seen.insert(p.name()) {
            props.push(p);
        }
    }
    let reports: Vec<PropertyReport> = props
        .iter()
        .map(|p| p.check(&mech, &cfg.checker))
        .collect::<qnet_core::Result<_>>()?;
    let mut body = Vec::new();
    write_reports(&mut body, &reports)?;
    out.csv("property_report.csv", &body)?;

    println!("mechanism {}", mech.label());
    for r in &reports {
        println!("  {}", describe(r));
    }
    let mut ok = true;
    for name in expected {
        let r = reports.iter().find(|r| r.property == name).expect("expected properties were run");
        if !r.holds {
            eprintln!("expectation failed: {}", describe(r));
            ok = false;
        }
    }
    Ok(ok)
}

fn derive(cfg: &RunConfig, out: &mut OutputDir) -> Result<bool> {
    let d = &cfg.derive;
    let rho = d.rho.context("`derive` needs derive.rho")?;
    let res = derive_unique_mechanism(rho, d.delta, d.n_max)?;
    let table = Mechanism::table(res.table.rows().to_vec())?;
    out.json(
        "derived_table.json",
        json!({
            "mechanism": table.spec(),
            "implied_alpha": res.implied_alpha,
            "matches_dgm": res.matches_dgm,
            "max_abs_deviation": res.max_abs_deviation,
        }),
    )?;
    let body = format!(
        "rho,delta,n_max,implied_alpha,matches_dgm,max_abs_deviation\n{rho:?},{:?},{},{:?},{},{:?}\n",
        d.delta, d.n_max, res.implied_alpha, res.matches_dgm, res.max_abs_deviation
    );
    out.csv("derive_summary.csv", body.as_bytes())?;
    println!(
        "implied alpha {:?}; matches dgm: {} (max |deviation| {:e})",
        res.implied_alpha, res.matches_dgm, res.max_abs_deviation
    );
    Ok(true)
}

fn simulate(cfg: &RunConfig, out: &mut OutputDir) -> Result<bool> {
    let mech = cfg.mechanism("simulate")?;
    let gen = cfg.sim.gen_config("simulate")?;
    let rows = simulate_batch(&mech, &gen, cfg.sim.episodes)?;
    let mut body = Vec::new();
    write_episodes_csv(&mut body, &rows)?;
    out.csv("episodes.csv", &body)?;
    let paid: f64 = rows.iter().map(|r| r.total_paid).sum();
    println!("{} episodes; mean total paid {:?}", rows.len(), paid / rows.len() as f64);
    Ok(true)
}

fn attack(cfg: &RunConfig, out: &mut OutputDir) -> Result<bool> {
    let mech = cfg.mechanism("attack")?;
    let gen = cfg.sim.gen_config("attack")?;
    let registry = DeviationRegistry::builtin();
    let classes = if cfg.attack.classes.is_empty() {
        registry.all()
    } else {
        cfg.attack.classes.iter().map(|c| registry.build(c)).collect::<qnet_core::Result<_>>()?
    };
    let report = audit(&mech, &gen, cfg.sim.episodes, &classes, &cfg.attack.limits())?;
    let mut body = Vec::new();
    for note in &report.notes {
        body.extend_from_slice(format!("# note: {note}\n").as_bytes());
    }
    write_audit_csv(&mut body, &report.records)?;
    out.csv("audit.csv", &body)?;
    out.json("audit_summary.json", report.summary_json())?;
    println!("{} episodes, {} deviations tested", report.episodes, report.deviations_tested);
    for c in &report.classes {
        let max = c.max_gain.map_or_else(|| "n/a".to_string(), |g| format!("{g:e}"));
        println!("  {:<22} tested {:>7}  profitable {:>6}  max gain {max}", c.class, c.deviations_tested, c.profitable);
    }
    Ok(true)
}

fn mincost(cfg: &RunConfig, out: &mut OutputDir) -> Result<bool> {
    let m = &cfg.mincost;
    let rho = m.rho.context("`mincost` needs mincost.rho")?;
    let res = min_cost_search(rho, m.delta, m.n_max, m.grid_step)?;
    let mut body = Vec::new();
    res.curve.write_csv(&mut body, m.delta)?;
    out.csv("cost_curve.csv", &body)?;
    let table = Mechanism::table(res.table.rows().to_vec())?;
    out.json(
        "mincost_table.json",
        json!({"mechanism": table.spec(), "gammas": res.gammas, "visited": res.visited}),
    )?;
    for (i, r) in res.curve.totals().iter().enumerate() {
        println!("  n={} R_n={r:?}", i + 1);
    }
    Ok(true)
}
