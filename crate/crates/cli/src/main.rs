//! Command-line driver: sample generation, geodesic evaluation,
//! verification campaigns, convergence studies.
//!
//! Exit codes: 0 all hard criteria pass, 1 hard-criterion failure,
//! 2 runtime/domain error, 64 usage error.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use gricci_core::error::Error as CoreError;
use gricci_core::experiments::campaigns::{
    convergence_study, run_f_conservation_study, run_geodesic_dump, run_identity_suite_ladder,
    run_ricci_invariance, run_variation_suite, IDENTITY_IDS,
};
use gricci_core::experiments::{default_corpus, find_sample, CampaignReport, SampleSpec, Tier};
use gricci_core::fields::io::write_field;
use gricci_core::fields::Scheme;
use gricci_core::geodesic::{geodesic_init, GGeodesic};
use gricci_core::gspace::seed::build_seed;
use gricci_core::tol;

const EXIT_OK: u8 = 0;
const EXIT_HARD_FAILURE: u8 = 1;
const EXIT_RUNTIME: u8 = 2;
const EXIT_USAGE: u8 = 64;

#[derive(Parser)]
#[command(
    name = "gricci",
    about = "Geodesics of the metric-volume pairing and Chern-Ricci verification on flat tori",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct CommonOpts {
    /// Grid resolution override (even, >= 8)
    #[arg(long = "grid")]
    grid: Option<usize>,
    /// Restrict to samples of this dimension (2 or 4)
    #[arg(long = "dim")]
    dim: Option<usize>,
    /// Differentiation scheme override
    #[arg(long = "scheme", value_parser = parse_scheme)]
    scheme: Option<Scheme>,
    /// Output directory for reports and field dumps
    #[arg(long = "out", default_value = "out")]
    out: PathBuf,
    /// RNG seed override for random seeds
    #[arg(long = "seed")]
    seed: Option<u64>,
    /// Tolerance overrides, KEY=VAL with KEY an identity id
    #[arg(long = "tol-override", value_parser = parse_override)]
    tol_override: Vec<(String, f64)>,
    /// Config file: KEY=VAL lines, or a JSON object as fallback
    #[arg(long = "config")]
    config: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate a geodesic: trajectory CSV plus per-time field dumps
    Geodesic {
        #[command(flatten)]
        common: CommonOpts,
        /// Sample name from the corpus
        #[arg(long = "sample", default_value = "flat-fourier")]
        sample: String,
        /// Comma-separated evaluation times (defaults to the sample grid)
        #[arg(long = "times")]
        times: Option<String>,
        /// Skip the .gfld field dumps
        #[arg(long = "no-fields")]
        no_fields: bool,
    },
    /// Run verification campaigns; exit 0 iff all hard criteria pass
    Verify {
        #[command(flatten)]
        common: CommonOpts,
        /// Campaigns: f-conservation | ricci-invariance | variation | identities
        campaigns: Vec<String>,
        /// Restrict to specific samples
        #[arg(long = "samples")]
        samples: Option<String>,
    },
    /// Residual-vs-resolution slopes for one identity
    Convergence {
        #[command(flatten)]
        common: CommonOpts,
        /// Identity id (see `verify identities` report for the list)
        #[arg(long = "identity")]
        identity: String,
        /// Sample name
        #[arg(long = "sample", default_value = "curved-010")]
        sample: String,
    },
    /// Write a sample's base fields and seed description
    DumpSample {
        #[command(flatten)]
        common: CommonOpts,
        #[arg(long = "sample")]
        sample: String,
    },
}

fn parse_scheme(s: &str) -> Result<Scheme, String> {
    s.parse::<Scheme>().map_err(|e| e.to_string())
}

fn parse_override(s: &str) -> Result<(String, f64), String> {
    let (k, v) = s.split_once('=').ok_or("expected KEY=VAL")?;
    let val: f64 = v.parse().map_err(|_| format!("bad tolerance value `{v}`"))?;
    if !(val > 0.0) {
        return Err("tolerances must be positive".into());
    }
    Ok((k.to_string(), val))
}

/// KEY=VAL config text with a JSON-object fallback.
fn load_config(path: &Path) -> Result<BTreeMap<String, String>, CoreError> {
    let text = std::fs::read_to_string(path)?;
    let mut map = BTreeMap::new();
    let mut plain_ok = true;
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        match line.split_once('=') {
            Some((k, v)) => {
                map.insert(k.trim().to_string(), v.trim().to_string());
            }
            None => {
                plain_ok = false;
                break;
            }
        }
    }
    if plain_ok {
        return Ok(map);
    }
    let value: serde_json::Value = serde_json::from_str(&text)
        .map_err(|e| CoreError::InvalidConfig(format!("config is neither KEY=VAL nor JSON: {e}")))?;
    let obj = value
        .as_object()
        .ok_or_else(|| CoreError::InvalidConfig("JSON config must be an object".into()))?;
    Ok(obj
        .iter()
        .map(|(k, v)| {
            let s = match v {
                serde_json::Value::String(s) => s.clone(),
                other => other.to_string(),
            };
            (k.clone(), s)
        })
        .collect())
}

/// Resolved settings, echoed into every report.
struct Resolved {
    grid: Option<usize>,
    dim: Option<usize>,
    scheme: Option<Scheme>,
    out: PathBuf,
    seed: Option<u64>,
    tol_override: BTreeMap<String, f64>,
    echo: String,
}

fn resolve(common: &CommonOpts) -> Result<Resolved, CoreError> {
    let mut grid = common.grid;
    let dim = common.dim;
    if let Some(d) = dim {
        if d != 2 && d != 4 {
            return Err(CoreError::InvalidConfig(format!("dim must be 2 or 4, got {d}")));
        }
    }
    let mut scheme = common.scheme;
    let mut seed = common.seed;
    let mut overrides: BTreeMap<String, f64> =
        common.tol_override.iter().cloned().collect();
    if let Some(path) = &common.config {
        for (k, v) in load_config(path)? {
            match k.as_str() {
                "grid" => {
                    if grid.is_none() {
                        grid = Some(v.parse().map_err(|_| {
                            CoreError::InvalidConfig(format!("bad grid `{v}`"))
                        })?);
                    }
                }
                "scheme" => {
                    if scheme.is_none() {
                        scheme = Some(v.parse()?);
                    }
                }
                "seed" => {
                    if seed.is_none() {
                        seed = Some(v.parse().map_err(|_| {
                            CoreError::InvalidConfig(format!("bad seed `{v}`"))
                        })?);
                    }
                }
                other if other.starts_with("tol.") => {
                    let tol: f64 = v.parse().map_err(|_| {
                        CoreError::InvalidConfig(format!("bad tolerance `{v}`"))
                    })?;
                    if !(tol > 0.0) {
                        return Err(CoreError::InvalidConfig(
                            "tolerances must be positive".into(),
                        ));
                    }
                    overrides.entry(other[4..].to_string()).or_insert(tol);
                }
                other => {
                    return Err(CoreError::InvalidConfig(format!("unknown config key `{other}`")))
                }
            }
        }
    }
    let mut echo = String::new();
    if let Some(n) = grid {
        echo.push_str(&format!("grid={n} "));
    }
    if let Some(d) = dim {
        echo.push_str(&format!("dim={d} "));
    }
    if let Some(s) = scheme {
        echo.push_str(&format!("scheme={s} "));
    }
    if let Some(s) = seed {
        echo.push_str(&format!("seed={s} "));
    }
    for (k, v) in &overrides {
        echo.push_str(&format!("tol.{k}={v:e} "));
    }
    Ok(Resolved {
        grid,
        dim,
        scheme,
        out: common.out.clone(),
        seed,
        tol_override: overrides,
        echo: echo.trim().to_string(),
    })
}

fn apply_to_sample(spec: &SampleSpec, resolved: &Resolved) -> Result<SampleSpec, CoreError> {
    if let Some(d) = resolved.dim {
        if spec.grid.dim != d {
            return Err(CoreError::InvalidConfig(format!(
                "sample `{}` has dimension {}, not {d}",
                spec.name, spec.grid.dim
            )));
        }
    }
    let mut out = spec.clone();
    if let Some(n) = resolved.grid {
        out = out.with_resolution(n)?;
    }
    if let Some(s) = resolved.scheme {
        out = out.with_scheme(s);
    }
    if let Some(rng) = resolved.seed {
        if let gricci_core::gspace::seed::SeedSpec::Random { rng_seed, .. } = &mut out.seed {
            *rng_seed = rng;
        }
    }
    Ok(out)
}

/// Re-evaluates hard entries against tolerance overrides.
fn apply_overrides(report: &mut CampaignReport, overrides: &BTreeMap<String, f64>) {
    for entry in &mut report.entries {
        if let Some(&tol) = overrides.get(&entry.identity_id) {
            if entry.tier == Tier::Hard {
                entry.tol = Some(tol);
                entry.passed = Some(if entry.lower_bound {
                    entry.residual_sup >= tol
                } else {
                    entry.residual_sup <= tol
                });
            }
        }
    }
}

fn write_report(dir: &Path, report: &CampaignReport) -> Result<(), CoreError> {
    std::fs::create_dir_all(dir)?;
    let stem = format!("{}_{}", report.campaign, report.sample);
    std::fs::write(dir.join(format!("{stem}.json")), report.to_json())?;
    if !report.series.is_empty() {
        std::fs::write(dir.join(format!("{stem}.csv")), report.series_csv())?;
    }
    Ok(())
}

fn print_summary(report: &CampaignReport) {
    for entry in &report.entries {
        let status = match (entry.tier, entry.passed) {
            (Tier::Hard, Some(true)) => "PASS",
            (Tier::Hard, Some(false)) => "FAIL",
            _ => "info",
        };
        let slope = entry
            .convergence_slope
            .map(|s| format!("  slope {s:+.2}"))
            .unwrap_or_default();
        println!(
            "[{status}] {}/{} {} N={} sup={:.3e}{}",
            report.campaign, report.sample, entry.identity_id, entry.n, entry.residual_sup, slope
        );
    }
}

fn geodesic_cmd(
    common: &CommonOpts,
    sample: &str,
    times: Option<&str>,
    no_fields: bool,
) -> Result<u8, CoreError> {
    let resolved = resolve(common)?;
    let mut spec = apply_to_sample(&find_sample(sample)?, &resolved)?;
    if let Some(list) = times {
        let parsed: Result<Vec<f64>, _> =
            list.split(',').map(|s| s.trim().parse::<f64>()).collect();
        spec.time_grid = parsed
            .map_err(|_| CoreError::InvalidConfig(format!("bad time list `{list}`")))?;
    }
    println!("config: sample={} {}", spec.name, resolved.echo);

    // window first, so a degenerate request reports the boundary
    let built = spec.build()?;
    let seed = build_seed(&built.point, &spec.seed, Some(&built.acs))?;
    let geo: GGeodesic = geodesic_init(&built.point, &seed)?;
    let (lo, hi) = geo.existence_window(tol::U_FLOOR);
    println!("existence window: ({lo:.6}, {hi:.6})");

    let mut report = run_geodesic_dump(&spec)?;
    report.config_echo = format!("sample={} {}", spec.name, resolved.echo);
    apply_overrides(&mut report, &resolved.tol_override);
    write_report(&resolved.out, &report)?;

    if !no_fields {
        let field_dir = resolved.out.join(format!("fields_{}", spec.name));
        std::fs::create_dir_all(&field_dir)?;
        for (k, row) in report.series.iter().enumerate() {
            let gs = geo.evaluate(row.t)?;
            write_field(
                &field_dir.join(format!("g_{k:03}.gfld")),
                gs.point.metric().field(),
            )?;
            write_field(
                &field_dir.join(format!("vol_{k:03}.gfld")),
                gs.point.volume().density(),
            )?;
        }
        println!("fields: {}", field_dir.display());
    }
    print_summary(&report);
    println!(
        "trajectory: {}",
        resolved.out.join(format!("geodesic_{}.csv", spec.name)).display()
    );
    Ok(if report.hard_failures() == 0 { EXIT_OK } else { EXIT_HARD_FAILURE })
}

fn verify_cmd(
    common: &CommonOpts,
    campaigns: &[String],
    samples: Option<&str>,
) -> Result<u8, CoreError> {
    if campaigns.is_empty() {
        eprintln!("usage: gricci verify <CAMPAIGNS>... (f-conservation | ricci-invariance | variation | identities)");
        return Ok(EXIT_USAGE);
    }
    let resolved = resolve(common)?;
    let corpus = default_corpus();
    let wanted: Option<Vec<&str>> = samples.map(|s| s.split(',').map(str::trim).collect());
    let mut failures = 0usize;
    for campaign in campaigns {
        for base in &corpus {
            if let Some(list) = &wanted {
                if !list.contains(&base.name.as_str()) {
                    continue;
                }
            }
            if let Some(d) = resolved.dim {
                if base.grid.dim != d {
                    continue;
                }
            }
            let spec = apply_to_sample(base, &resolved)?;
            let d2 = spec.grid.dim == 2;
            let mut report = match campaign.as_str() {
                "f-conservation" => {
                    if !d2 {
                        continue;
                    }
                    run_f_conservation_study(&spec)?
                }
                "ricci-invariance" => {
                    if !d2 || !spec.seed.anti_invariant() {
                        continue;
                    }
                    run_ricci_invariance(&spec)?
                }
                "variation" => {
                    if !d2 {
                        continue;
                    }
                    run_variation_suite(&spec)?
                }
                "identities" => {
                    let ladder: &[usize] = if d2 { &[16, 32, 64] } else { &[8, 12, 16] };
                    let ladder: Vec<usize> =
                        ladder.iter().cloned().filter(|&n| n <= spec.grid.n).collect();
                    run_identity_suite_ladder(&spec, &ladder)?
                }
                other => {
                    eprintln!("unknown campaign `{other}`");
                    return Ok(EXIT_USAGE);
                }
            };
            report.config_echo = format!("sample={} {}", spec.name, resolved.echo);
            apply_overrides(&mut report, &resolved.tol_override);
            print_summary(&report);
            failures += report.hard_failures();
            write_report(&resolved.out, &report)?;
        }
    }
    println!(
        "verify: {} hard failure(s); reports in {}",
        failures,
        resolved.out.display()
    );
    Ok(if failures == 0 { EXIT_OK } else { EXIT_HARD_FAILURE })
}

fn convergence_cmd(common: &CommonOpts, identity: &str, sample: &str) -> Result<u8, CoreError> {
    let known = IDENTITY_IDS.contains(&identity)
        || identity == "ricci-invariance"
        || identity == "divergence-conservation";
    if !known {
        return Err(CoreError::UnknownIdentity(identity.to_string()));
    }
    let resolved = resolve(common)?;
    let spec = apply_to_sample(&find_sample(sample)?, &resolved)?;
    let ladder: Vec<usize> = if spec.grid.dim == 2 { vec![16, 32, 64] } else { vec![8, 12, 16] };
    let (pairs, rate) = convergence_study(&spec, identity, &ladder)?;
    std::fs::create_dir_all(&resolved.out)?;
    let mut csv = String::from("N,residual_sup\n");
    for (n, r) in &pairs {
        println!("N = {n:3}  residual = {r:.6e}");
        csv.push_str(&format!("{n},{r:.17e}\n"));
    }
    println!("decay rate (positive = converging): {rate:.2}");
    let path = resolved.out.join(format!("convergence_{identity}_{sample}.csv"));
    std::fs::write(&path, csv)?;
    println!("table: {}", path.display());
    Ok(EXIT_OK)
}

fn dump_sample_cmd(common: &CommonOpts, sample: &str) -> Result<u8, CoreError> {
    let resolved = resolve(common)?;
    let spec = apply_to_sample(&find_sample(sample)?, &resolved)?;
    let built = spec.build()?;
    let dir = resolved.out.join(format!("sample_{}", spec.name));
    std::fs::create_dir_all(&dir)?;
    write_field(&dir.join("metric.gfld"), built.point.metric().field())?;
    write_field(&dir.join("volume.gfld"), built.point.volume().density())?;
    write_field(&dir.join("structure.gfld"), built.acs.j())?;
    std::fs::write(dir.join("seed.json"), spec.seed.to_json())?;
    std::fs::write(
        dir.join("sample.json"),
        serde_json::to_string_pretty(&spec).map_err(|e| CoreError::Format(e.to_string()))?,
    )?;
    let raw = build_seed(&built.point, &spec.seed, Some(&built.acs))?;
    write_field(&dir.join("seed_v.gfld"), raw.v())?;
    write_field(&dir.join("seed_vol.gfld"), raw.vol())?;
    println!("sample written to {}", dir.display());
    Ok(EXIT_OK)
}

fn dispatch(cli: Cli) -> Result<u8, CoreError> {
    match &cli.command {
        Command::Geodesic { common, sample, times, no_fields } => {
            geodesic_cmd(common, sample, times.as_deref(), *no_fields)
        }
        Command::Verify { common, campaigns, samples } => {
            verify_cmd(common, campaigns, samples.as_deref())
        }
        Command::Convergence { common, identity, sample } => {
            convergence_cmd(common, identity, sample)
        }
        Command::DumpSample { common, sample } => dump_sample_cmd(common, sample),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            // help/version requests are not usage errors
            use clap::error::ErrorKind;
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
            let _ = err.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli) {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            match &err {
                CoreError::DegenerateVolume { t_bad } => {
                    eprintln!("error: {err}");
                    eprintln!("requested time lies outside the existence window (boundary near t = {t_bad:.6})");
                }
                CoreError::InvalidConfig(_) | CoreError::UnknownIdentity(_) => {
                    eprintln!("error: {err}");
                }
                other => eprintln!("error: {other}"),
            }
            match err {
                CoreError::InvalidConfig(_) => ExitCode::from(EXIT_USAGE),
                _ => ExitCode::from(EXIT_RUNTIME),
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use gricci_core::fields::GridSpec;

    #[test]
    fn override_parser() {
        assert!(parse_override("ricci-invariance=1e-5").is_ok());
        assert!(parse_override("bad").is_err());
        assert!(parse_override("x=-1.0").is_err());
    }

    #[test]
    fn config_parser_handles_both_formats() {
        let dir = tempfile::tempdir().unwrap();
        let plain = dir.path().join("c.cfg");
        std::fs::write(&plain, "# comment\ngrid = 32\nscheme= central4\n").unwrap();
        let map = load_config(&plain).unwrap();
        assert_eq!(map["grid"], "32");
        assert_eq!(map["scheme"], "central4");

        let json = dir.path().join("c.json");
        std::fs::write(&json, "{\"grid\": 16, \"seed\": \"7\"}").unwrap();
        let map = load_config(&json).unwrap();
        assert_eq!(map["grid"], "16");
        assert_eq!(map["seed"], "7");
    }

    #[test]
    fn grid_spec_roundtrip_through_resolution_override() {
        let spec = find_sample("flat-fourier").unwrap();
        let resolved = Resolved {
            grid: Some(16),
            dim: None,
            scheme: Some(Scheme::Central4),
            out: PathBuf::from("out"),
            seed: None,
            tol_override: BTreeMap::new(),
            echo: String::new(),
        };
        let adapted = apply_to_sample(&spec, &resolved).unwrap();
        assert_eq!(adapted.grid, GridSpec::new(2, 16, Scheme::Central4).unwrap());
    }
}
