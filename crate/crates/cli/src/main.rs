use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use chrono::NaiveDate;
use clap::{Args, Parser, Subcommand};

use newsnet::config::RunConfig;
use newsnet::identify::{identify_articles, load_linkages, save_linkages, Linkage};
use newsnet::network::{build_network, decompose, save_networks, Decomposition, NodeAttributes, Window};
use newsnet::pipeline::{
    build_variables, ident_config, load_dataset, named_panel, performance_config, regress, response_panel,
    run_report, Dataset,
};
use newsnet::portfolio::{portfolio_report, sort_portfolios, Rebalance, ReturnSource, SortInputs, Timing, Weighting};
use newsnet::report::{cumulative_svg, portfolio_table, write_text};
use newsnet::synth::{generate, SynthConfig};
use newsnet::variables::{load_panel_long, save_panel_long, Breakpoints};
use newsnet::Panel;

#[derive(Parser)]
#[command(name = "newsnet", version, about = "News-implied lead-lag networks and return predictability")]
struct Cli {
    /// Run configuration file; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides `[paths] data_dir`.
    #[arg(long)]
    data_dir: Option<PathBuf>,
    /// Overrides `[paths] out_dir`.
    #[arg(long)]
    out_dir: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Identify lead-follower linkages in the article corpus.
    Identify {
        #[arg(long, default_value = "linkages.csv")]
        out: PathBuf,
    },
    /// Build the news network for one window.
    Network {
        #[arg(long)]
        linkages: PathBuf,
        #[arg(long)]
        window_days: Option<u32>,
        #[arg(long)]
        as_of: NaiveDate,
        /// Also write the six decomposed networks (needs prices).
        #[arg(long)]
        decompose: bool,
        #[arg(long, default_value = "net.csv")]
        out: PathBuf,
    },
    /// Daily lead-return and monthly degree panels.
    Variables {
        #[command(flatten)]
        source: LinkageSource,
        #[arg(long)]
        net_window: Option<u32>,
        #[arg(long)]
        degree_window: Option<u32>,
        #[arg(long, default_value = "panel.csv")]
        out: PathBuf,
    },
    /// Panel regression with firm effects and two-way clustered errors.
    Regress {
        /// ret, exret, resid_ff3 or resid_ff5.
        #[arg(long)]
        y: String,
        /// Comma-separated regressors of interest.
        #[arg(long, value_delimiter = ',', required = true)]
        x: Vec<String>,
        #[arg(long, value_delimiter = ',')]
        controls: Vec<String>,
        /// Horizon in trading days.
        #[arg(long, default_value_t = 0)]
        h: usize,
        #[command(flatten)]
        panel: PanelSource,
        #[arg(long, default_value = "result.json")]
        out: PathBuf,
    },
    /// Quantile portfolio sort on a signal.
    Backtest {
        #[arg(long)]
        signal: String,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        weighting: Option<Weighting>,
        #[arg(long)]
        rebalance: Option<Rebalance>,
        #[arg(long, default_value_t = Timing::Predictive)]
        timing: Timing,
        #[arg(long, conflicts_with = "keep_zero")]
        drop_zero: bool,
        #[arg(long)]
        keep_zero: bool,
        /// Use factor residuals (resid_ff3 or resid_ff5) as member returns.
        #[arg(long)]
        returns: Option<String>,
        #[command(flatten)]
        panel: PanelSource,
        #[arg(long, default_value = "report.csv")]
        out: PathBuf,
        #[arg(long)]
        plot: Option<PathBuf>,
    },
    /// Generate a synthetic dataset with planted ground truth.
    Synth {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Full pipeline: tables, panels and figures under the output directory.
    Report,
}

#[derive(Args)]
struct LinkageSource {
    /// Linkages file; identification runs on the corpus when omitted.
    #[arg(long)]
    linkages: Option<PathBuf>,
}

#[derive(Args)]
struct PanelSource {
    /// Long-format variable panel from `variables`; built on the fly when omitted.
    #[arg(long)]
    panel: Option<PathBuf>,
    #[command(flatten)]
    linkages: LinkageSource,
}

fn run_config(cli: &Cli) -> anyhow::Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(d) = &cli.data_dir {
        cfg.data_dir = d.clone();
    }
    if let Some(d) = &cli.out_dir {
        cfg.out_dir = d.clone();
    }
    Ok(cfg)
}

fn linkages_for(source: &LinkageSource, cfg: &RunConfig, data: &Dataset) -> anyhow::Result<Vec<Linkage>> {
    match &source.linkages {
        Some(p) => Ok(load_linkages(p)?),
        None => Ok(identify_articles(&data.articles, &data.master, &ident_config(cfg)?).linkages),
    }
}

fn variable_panels(src: &PanelSource, cfg: &RunConfig, data: &Dataset) -> anyhow::Result<std::collections::BTreeMap<String, Panel>> {
    match &src.panel {
        Some(p) => Ok(load_panel_long(p)?),
        None => {
            let links = linkages_for(&src.linkages, cfg, data)?;
            let bp = Breakpoints { lower: cfg.lower_quantile, upper: cfg.upper_quantile };
            Ok(build_variables(&links, data, cfg.net_window, &[cfg.degree_window], bp).panels)
        }
    }
}

fn ensure_parent(path: &Path) -> anyhow::Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
    }
    Ok(())
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let mut cfg = run_config(&cli)?;
    match cli.command {
        Command::Identify { out } => {
            let data = load_dataset(&cfg)?;
            let res = identify_articles(&data.articles, &data.master, &ident_config(&cfg)?);
            ensure_parent(&out)?;
            save_linkages(&res.linkages, &out)?;
            for (v, n) in &res.summary.verdicts {
                log::info!("{v}: {n}");
            }
            println!("{} articles, {} linkages -> {}", data.articles.len(), res.linkages.len(), out.display());
        }
        Command::Network { linkages, window_days, as_of, decompose: with_parts, out } => {
            let master = newsnet::corpus::load_firm_master(cfg.data_dir.join("firms.csv"), cfg.data_dir.join("membership.csv"))?;
            let links = load_linkages(&linkages)?;
            let window = Window::ending(as_of, window_days.unwrap_or(cfg.net_window));
            let universe = master.universe_at(as_of);
            if universe.is_empty() {
                bail!("no universe membership for {as_of}");
            }
            let (full, stats) = build_network(&links, window, &universe);
            let mut nets = vec![full];
            if with_parts {
                let prices = newsnet::corpus::load_prices(cfg.data_dir.join("prices.csv"), &master)?;
                let attrs = NodeAttributes::for_network(&nets[0], &master, &prices)
                    .with_breakpoints(cfg.lower_quantile, cfg.upper_quantile);
                for d in Decomposition::ALL {
                    let part = decompose(&nets[0], d, &attrs).0;
                    nets.push(part);
                }
            }
            ensure_parent(&out)?;
            save_networks(&nets, &out)?;
            println!(
                "{} edges over {} firms ({} out-of-universe linkages) -> {}",
                nets[0].edges().len(),
                nets[0].size(),
                stats.out_of_universe,
                out.display()
            );
        }
        Command::Variables { source, net_window, degree_window, out } => {
            if let Some(w) = net_window {
                cfg.net_window = w;
            }
            if let Some(w) = degree_window {
                cfg.degree_window = w;
            }
            let data = load_dataset(&cfg)?;
            let links = linkages_for(&source, &cfg, &data)?;
            let bp = Breakpoints { lower: cfg.lower_quantile, upper: cfg.upper_quantile };
            let vars = build_variables(&links, &data, cfg.net_window, &[cfg.degree_window], bp);
            ensure_parent(&out)?;
            save_panel_long(vars.panels.iter().map(|(n, p)| (n.clone(), p)), &out)?;
            println!("{} variables -> {}", vars.panels.len(), out.display());
        }
        Command::Regress { y, x, controls, h, panel, out } => {
            let data = load_dataset(&cfg)?;
            let yp = response_panel(&y, &data)?;
            let vars = variable_panels(&panel, &cfg, &data)?;
            let mut owned = Vec::new();
            for name in x.iter().chain(&controls) {
                owned.push((name.as_str(), named_panel(name, &vars, &data.prices)?));
            }
            let refs: Vec<(&str, &Panel)> = owned.iter().map(|(n, p)| (*n, p.as_ref())).collect();
            let result = regress(&yp, &refs, &data.calendar, h, cfg.winsorize.0)?;
            ensure_parent(&out)?;
            let json = serde_json::to_string_pretty(&result)?;
            std::fs::write(&out, json + "\n").with_context(|| format!("writing {}", out.display()))?;
            for (n, (b, t)) in result.names.iter().zip(result.coefficients.iter().zip(&result.t)) {
                println!("{n}: {b:.6} ({t:.2})");
            }
        }
        Command::Backtest { signal, k, weighting, rebalance, timing, drop_zero, keep_zero, returns, panel, out, plot } => {
            if let Some(k) = k {
                cfg.k = k;
            }
            if let Some(w) = weighting {
                cfg.weighting = w;
            }
            if let Some(r) = rebalance {
                cfg.rebalance = r;
            }
            if drop_zero {
                cfg.drop_zero = true;
            }
            if keep_zero {
                cfg.drop_zero = false;
            }
            let data = load_dataset(&cfg)?;
            let vars = variable_panels(&panel, &cfg, &data)?;
            let sig = named_panel(&signal, &vars, &data.prices)?;
            let resid = match returns.as_deref() {
                None | Some("raw") => None,
                Some(name @ ("resid_ff3" | "resid_ff5")) => Some(response_panel(name, &data)?),
                Some(other) => bail!("unknown return source `{other}`; expected raw, resid_ff3 or resid_ff5"),
            };
            let source = resid.as_ref().map_or(ReturnSource::Raw, ReturnSource::Panel);
            let spec = cfg.sort_spec(timing);
            let inputs = SortInputs { returns: &data.returns, source, prices: &data.prices, calendar: &data.calendar };
            let result = sort_portfolios(&sig, &spec, &inputs)?;
            let report = portfolio_report(&result, &data.factors, cfg.rebalance, &performance_config(&cfg, cfg.rebalance))?;
            let table = portfolio_table(&report);
            ensure_parent(&out)?;
            write_text(&out, &table.to_csv()?)?;
            write_text(&out.with_extension("md"), &table.to_markdown())?;
            if let Some(p) = plot {
                write_text(&p, &cumulative_svg(&report.cumulative, &format!("Cumulative returns sorted by {signal}")))?;
            }
            print!("{}", table.to_markdown());
        }
        Command::Synth { config, seed, out_dir } => {
            let mut sc = match config {
                Some(p) => SynthConfig::load(p)?,
                None => SynthConfig::default(),
            };
            if let Some(s) = seed {
                sc.seed = s;
            }
            let data = generate(&sc)?;
            data.write(&out_dir)?;
            write_text(&out_dir.join("synth.cfg"), &sc.to_text())?;
            println!(
                "{} firms, {} trading days, {} articles -> {}",
                sc.n_firms,
                data.market.calendar.len(),
                data.articles.len(),
                out_dir.display()
            );
        }
        Command::Report => {
            let summary = run_report(&cfg)?;
            println!("{} articles, {} linkages; effect {}", summary.articles, summary.linkages, summary.effect);
            println!("outputs in {}", cfg.out_dir.display());
        }
    }
    Ok(())
}

fn error_line(e: &anyhow::Error) -> String {
    let kind = e.downcast_ref::<newsnet::Error>().map_or("cli", newsnet::Error::kind);
    let message = format!("{e:#}");
    serde_json::json!({ "error": kind, "message": message }).to_string()
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", error_line(&e));
            ExitCode::FAILURE
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn error_lines_are_single_line_json() {
        let e = anyhow::Error::from(newsnet::Error::Config("bad\nvalue".into()));
        let line = error_line(&e);
        assert!(!line.contains('\n'));
        let v: serde_json::Value = serde_json::from_str(&line).unwrap();
        assert_eq!(v["error"], "config");
    }

    #[test]
    fn control_names_resolve() {
        let prices = newsnet::corpus::PriceTable::default();
        use newsnet::pipeline::control_panel;
        assert!(control_panel("logmv", &prices).is_ok());
        assert!(control_panel("size", &prices).is_err());
    }
}
