use std::net::TcpListener;
use std::path::PathBuf;
use std::time::Duration;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use sharedtf_bench::report::{self, Format};
use sharedtf_bench::workload::{self, Role};
use sharedtf_bench::{BenchConfig, BenchReport, Protocol, Variant};

#[derive(Parser)]
#[command(name = "sharedtf-bench", version, about = "Two-party benchmark runner for sharedtf protocols")]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one party over TCP. The server listens, the client connects.
    Run {
        #[arg(long, value_enum)]
        role: Role,
        #[arg(long, default_value = "127.0.0.1:7878")]
        addr: String,
        /// Seconds the client keeps retrying the connection.
        #[arg(long, default_value_t = 30)]
        connect_timeout: u64,
        #[command(flatten)]
        opts: RunOpts,
    },
    /// Run both parties in this process.
    Local {
        /// Also run the other OPPE variant and report both.
        #[arg(long)]
        both_variants: bool,
        #[command(flatten)]
        opts: RunOpts,
    },
    /// Ratio table (east / baseline) from two report files.
    Compare {
        east: PathBuf,
        baseline: PathBuf,
        /// Write the table as JSON or CSV instead of text.
        #[arg(long, value_enum)]
        format: Option<Format>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct RunOpts {
    /// Versioned TOML config; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, alias = "workload", value_enum)]
    protocol: Option<Protocol>,
    #[arg(long, value_enum)]
    variant: Option<Variant>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    rows: Option<usize>,
    #[arg(long)]
    seq: Option<usize>,
    #[arg(long)]
    pad_to: Option<usize>,
    #[arg(long)]
    model_dim: Option<usize>,
    #[arg(long)]
    heads: Option<usize>,
    #[arg(long)]
    ffn_dim: Option<usize>,
    #[arg(long)]
    ell: Option<u32>,
    #[arg(long = "f")]
    frac: Option<u32>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    report_path: Option<PathBuf>,
    /// Report format; defaults to the report path's extension, else JSON.
    #[arg(long, value_enum)]
    format: Option<Format>,
}

impl RunOpts {
    fn resolve(&self) -> Result<BenchConfig> {
        let mut c = match &self.config {
            Some(p) => BenchConfig::load(p)?,
            None => BenchConfig::default(),
        };
        macro_rules! set {
            ($($f:ident),*) => { $( if let Some(v) = self.$f { c.$f = v; } )* };
        }
        set!(protocol, variant, n, rows, seq, model_dim, heads, ffn_dim, ell, frac, seed);
        if self.pad_to.is_some() {
            c.pad_to = self.pad_to;
        }
        c.validate()?;
        Ok(c)
    }

    fn emit(&self, reports: &[BenchReport]) -> Result<()> {
        let format = self
            .format
            .or_else(|| self.report_path.as_deref().map(Format::from_path))
            .unwrap_or(Format::Json);
        match &self.report_path {
            Some(p) => report::write_reports(p, reports, format),
            None => {
                println!("{}", report::render(reports, format)?);
                Ok(())
            }
        }
    }
}

fn main() -> Result<()> {
    match Cli::parse().cmd {
        Command::Run { role, addr, connect_timeout, opts } => {
            let c = opts.resolve()?;
            let r = match role {
                Role::Server => {
                    let listener = TcpListener::bind(&addr).with_context(|| format!("binding {addr}"))?;
                    workload::serve(&listener, &c)?
                }
                Role::Client => workload::connect(addr.as_str(), &c, Duration::from_secs(connect_timeout))?,
            };
            opts.emit(&[r])
        }
        Command::Local { both_variants, opts } => {
            let c = opts.resolve()?;
            let mut reports = vec![workload::run_local(&c)?];
            if both_variants {
                let other = match c.variant {
                    Variant::East => Variant::Nfgen,
                    Variant::Nfgen => Variant::East,
                };
                reports.push(workload::run_local(&BenchConfig { variant: other, ..c.clone() })?);
            }
            opts.emit(&reports)
        }
        Command::Compare { east, baseline, format, out } => {
            let rows = report::ratio_table(&report::read_reports(&east)?, &report::read_reports(&baseline)?)?;
            let text = match format {
                None => report::ratio_text(&rows),
                Some(Format::Json) => serde_json::to_string_pretty(&rows)?,
                Some(Format::Csv) => {
                    let mut w = csv::Writer::from_writer(Vec::new());
                    for r in &rows {
                        w.serialize(r)?;
                    }
                    String::from_utf8(w.into_inner()?)?
                }
            };
            match out {
                Some(p) => std::fs::write(&p, text).with_context(|| format!("writing {}", p.display()))?,
                None => print!("{text}"),
            }
            Ok(())
        }
    }
}
