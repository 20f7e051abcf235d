//! Flags, the key=value config file, and alpha-spec resolution.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, ValueEnum};
use kout_core::{Alpha, Execution};
use sha2::{Digest, Sha256};

use crate::error::{invalid, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Route {
    Fixed,
    Random,
    Uniform,
}

macro_rules! value_enum_from_str {
    ($t:ty) => {
        impl FromStr for $t {
            type Err = String;
            fn from_str(s: &str) -> Result<Self, String> {
                <$t as ValueEnum>::from_str(s, true)
            }
        }
    };
}
value_enum_from_str!(Format);
value_enum_from_str!(Route);

/// Flags shared by every subcommand. Each may also come from `--config`.
#[derive(Debug, Clone, Default, Args)]
pub struct Flags {
    /// Flat key=value file; flags given on the command line win.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Vertex count, or a comma-separated list.
    #[arg(long)]
    pub n: Option<String>,
    #[arg(long)]
    pub k: Option<usize>,
    /// inf, beta*sqrt(n), n^sigma, a number, or p/q; comma-separated for a sweep.
    #[arg(long)]
    pub alpha: Option<String>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long)]
    pub samples: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// 1 runs serially; 0 uses every core.
    #[arg(long)]
    pub threads: Option<usize>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Largest kn the exact enumeration may take on.
    #[arg(long)]
    pub budget: Option<u64>,
    /// Exit with status 4 when the statistical check fails.
    #[arg(long)]
    pub check: bool,
    #[arg(long)]
    pub tolerance: Option<f64>,
    /// Half-width of the LCLT window, in units of the limit's sd for 2-D.
    #[arg(long)]
    pub window: Option<f64>,
    /// 1 for the scalar LCLT, 2 for the pair.
    #[arg(long)]
    pub dim: Option<u8>,
    /// Highest moment order.
    #[arg(long)]
    pub order: Option<u32>,
    #[arg(long, value_enum)]
    pub route: Option<Route>,
}

const KEYS: [&str; 17] = [
    "n", "k", "alpha", "beta", "sigma", "samples", "seed", "threads", "format", "out", "budget", "check",
    "tolerance", "window", "dim", "order", "route",
];

/// Parses `key = value` lines; `#` starts a comment.
pub fn read_config_file(path: &Path) -> CliResult<BTreeMap<String, String>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| invalid(format!("cannot read config {}: {e}", path.display())))?;
    parse_config(&text)
}

pub fn parse_config(text: &str) -> CliResult<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| invalid(format!("config line {}: expected key=value", i + 1)))?;
        let key = key.trim().trim_start_matches("--").replace('_', "-");
        if !KEYS.contains(&key.as_str()) {
            return Err(invalid(format!("config line {}: unknown key {key:?}", i + 1)));
        }
        out.insert(key, value.trim().to_string());
    }
    Ok(out)
}

fn pick<T: FromStr>(flag: Option<T>, cfg: &BTreeMap<String, String>, key: &str) -> CliResult<Option<T>>
where
    T::Err: fmt::Display,
{
    match flag {
        Some(v) => Ok(Some(v)),
        None => cfg
            .get(key)
            .map(|s| s.parse::<T>().map_err(|e| invalid(format!("config {key} = {s:?}: {e}"))))
            .transpose(),
    }
}

/// How alpha depends on `n`.
#[derive(Debug, Clone, PartialEq)]
pub enum AlphaSpec {
    Infinite,
    Literal(f64),
    Rational(i64, i64),
    /// `beta sqrt(n)`; `None` takes `--beta`.
    BetaSqrtN(Option<f64>),
    /// `n^sigma`; `None` takes `--sigma`.
    Power(Option<f64>),
}

impl FromStr for AlphaSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let t: String = s.chars().filter(|c| !c.is_whitespace()).collect::<String>().to_ascii_lowercase();
        let num = |x: &str| x.parse::<f64>().map_err(|_| format!("bad number {x:?} in alpha spec {s:?}"));
        if t == "inf" || t == "infinity" {
            return Ok(AlphaSpec::Infinite);
        }
        if t == "sqrt(n)" {
            return Ok(AlphaSpec::BetaSqrtN(Some(1.0)));
        }
        if let Some(coef) = t.strip_suffix("*sqrt(n)") {
            return Ok(AlphaSpec::BetaSqrtN(if coef == "beta" { None } else { Some(num(coef)?) }));
        }
        if let Some(exp) = t.strip_prefix("n^") {
            return Ok(AlphaSpec::Power(if exp == "sigma" { None } else { Some(num(exp)?) }));
        }
        if let Some((p, q)) = t.split_once('/') {
            let p: i64 = p.parse().map_err(|_| format!("bad numerator in {s:?}"))?;
            let q: i64 = q.parse().map_err(|_| format!("bad denominator in {s:?}"))?;
            if p <= 0 || q <= 0 {
                return Err(format!("alpha {s:?} must be positive"));
            }
            return Ok(AlphaSpec::Rational(p, q));
        }
        let v = num(&t)?;
        if !(v > 0.0) || !v.is_finite() {
            return Err(format!("alpha {s:?} must be positive and finite (use inf)"));
        }
        Ok(AlphaSpec::Literal(v))
    }
}

impl fmt::Display for AlphaSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AlphaSpec::Infinite => f.write_str("inf"),
            AlphaSpec::Literal(v) => write!(f, "{v}"),
            AlphaSpec::Rational(p, q) => write!(f, "{p}/{q}"),
            AlphaSpec::BetaSqrtN(Some(b)) => write!(f, "{b}*sqrt(n)"),
            AlphaSpec::BetaSqrtN(None) => f.write_str("beta*sqrt(n)"),
            AlphaSpec::Power(Some(s)) => write!(f, "n^{s}"),
            AlphaSpec::Power(None) => f.write_str("n^sigma"),
        }
    }
}

/// An alpha spec evaluated at one `n`.
#[derive(Debug, Clone, PartialEq)]
pub struct ResolvedAlpha {
    pub spec: String,
    pub alpha: Alpha,
    /// Set when alpha is an exact rational `p/q`.
    pub rational: Option<(i64, i64)>,
    /// Set for `beta sqrt(n)`.
    pub beta: Option<f64>,
    /// Set for `n^sigma`.
    pub sigma: Option<f64>,
}

impl ResolvedAlpha {
    /// `true` when the value was rounded from an irrational expression.
    pub fn is_rounded(&self) -> bool {
        self.beta.is_some() || self.sigma.is_some()
    }
}

/// Resolved settings; `None` means the subcommand's default applies.
#[derive(Debug, Clone)]
pub struct Settings {
    pub command: &'static str,
    pub ns: Option<Vec<usize>>,
    pub k: Option<usize>,
    pub alphas: Option<Vec<AlphaSpec>>,
    pub beta: Option<f64>,
    pub sigma: Option<f64>,
    pub samples: Option<u64>,
    pub seed: u64,
    pub threads: usize,
    pub format: Format,
    pub out: Option<PathBuf>,
    pub budget: Option<u64>,
    pub check: bool,
    pub tolerance: Option<f64>,
    pub window: Option<f64>,
    pub dim: Option<u8>,
    pub order: Option<u32>,
    pub route: Option<Route>,
}

fn parse_list<T: FromStr>(s: &str, what: &str) -> CliResult<Vec<T>>
where
    T::Err: fmt::Display,
{
    let items = s
        .split(',')
        .map(str::trim)
        .filter(|x| !x.is_empty())
        .map(|x| x.parse::<T>().map_err(|e| invalid(format!("bad {what} {x:?}: {e}"))))
        .collect::<CliResult<Vec<T>>>()?;
    if items.is_empty() {
        return Err(invalid(format!("empty {what} list")));
    }
    Ok(items)
}

fn positive(name: &str, v: Option<f64>) -> CliResult<Option<f64>> {
    match v {
        Some(x) if !(x > 0.0) || !x.is_finite() => Err(invalid(format!("--{name} must be positive, got {x}"))),
        other => Ok(other),
    }
}

impl Settings {
    pub fn resolve(command: &'static str, flags: &Flags) -> CliResult<Self> {
        let cfg = match &flags.config {
            Some(path) => read_config_file(path)?,
            None => BTreeMap::new(),
        };
        let ns = pick(flags.n.clone(), &cfg, "n")?.map(|s| parse_list::<usize>(&s, "n")).transpose()?;
        if ns.as_ref().is_some_and(|v| v.contains(&0)) {
            return Err(invalid("--n must be at least 1"));
        }
        let k = pick(flags.k, &cfg, "k")?;
        if k == Some(0) {
            return Err(invalid("--k must be at least 1"));
        }
        let alphas = pick(flags.alpha.clone(), &cfg, "alpha")?
            .map(|s| parse_list::<AlphaSpec>(&s, "alpha"))
            .transpose()?;
        let samples = pick(flags.samples, &cfg, "samples")?;
        if samples == Some(0) {
            return Err(invalid("--samples must be at least 1"));
        }
        let sigma = pick(flags.sigma, &cfg, "sigma")?;
        if sigma.is_some_and(|s| !s.is_finite()) {
            return Err(invalid("--sigma must be finite"));
        }
        let dim = pick(flags.dim, &cfg, "dim")?;
        if dim.is_some_and(|d| d != 1 && d != 2) {
            return Err(invalid("--dim must be 1 or 2"));
        }
        let check = flags.check
            || pick(None::<bool>, &cfg, "check")?.unwrap_or(false);
        Ok(Settings {
            command,
            ns,
            k,
            alphas,
            beta: positive("beta", pick(flags.beta, &cfg, "beta")?)?,
            sigma,
            samples,
            seed: pick(flags.seed, &cfg, "seed")?.unwrap_or(0),
            threads: pick(flags.threads, &cfg, "threads")?.unwrap_or(0),
            format: pick(flags.format, &cfg, "format")?.unwrap_or(Format::Csv),
            out: pick(flags.out.clone(), &cfg, "out")?,
            budget: pick(flags.budget, &cfg, "budget")?,
            check,
            tolerance: positive("tolerance", pick(flags.tolerance, &cfg, "tolerance")?)?,
            window: positive("window", pick(flags.window, &cfg, "window")?)?,
            dim,
            order: pick(flags.order, &cfg, "order")?,
            route: pick(flags.route, &cfg, "route")?,
        })
    }

    pub fn execution(&self) -> Execution {
        match self.threads {
            0 => Execution::Auto,
            t => Execution::with_threads(t),
        }
    }

    /// Hash of everything that can change the numbers. Output format, path
    /// and worker count are left out: they never change a value.
    pub fn config_hash(&self) -> String {
        let canonical = format!(
            "cmd={};n={:?};k={:?};alpha={:?};beta={:?};sigma={:?};samples={:?};seed={};budget={:?};check={};tolerance={:?};window={:?};dim={:?};order={:?};route={:?}",
            self.command,
            self.ns,
            self.k,
            self.alphas.as_ref().map(|v| v.iter().map(ToString::to_string).collect::<Vec<_>>()),
            self.beta,
            self.sigma,
            self.samples,
            self.seed,
            self.budget,
            self.check,
            self.tolerance,
            self.window,
            self.dim,
            self.order,
            self.route,
        );
        Sha256::digest(canonical.as_bytes()).iter().take(8).map(|b| format!("{b:02x}")).collect()
    }

    pub fn single_n(&self, default: usize) -> CliResult<usize> {
        match self.ns.as_deref() {
            None => Ok(default),
            Some([n]) => Ok(*n),
            Some(_) => Err(invalid(format!("{} takes a single --n", self.command))),
        }
    }

    pub fn single_alpha(&self, default: AlphaSpec) -> CliResult<AlphaSpec> {
        match self.alphas.as_deref() {
            None => Ok(default),
            Some([a]) => Ok(a.clone()),
            Some(_) => Err(invalid(format!("{} takes a single --alpha", self.command))),
        }
    }

    /// Evaluates `spec` at `n`.
    pub fn resolve_alpha(&self, spec: &AlphaSpec, n: usize) -> CliResult<ResolvedAlpha> {
        let nf = n as f64;
        let mut out = ResolvedAlpha { spec: spec.to_string(), alpha: Alpha::Infinite, rational: None, beta: None, sigma: None };
        match spec {
            AlphaSpec::Infinite => {}
            AlphaSpec::Literal(v) => {
                out.alpha = Alpha::Finite(*v);
                if v.fract() == 0.0 && *v < 9.0e15 {
                    out.rational = Some((*v as i64, 1));
                }
            }
            AlphaSpec::Rational(p, q) => {
                out.alpha = Alpha::Finite(*p as f64 / *q as f64);
                out.rational = Some((*p, *q));
            }
            AlphaSpec::BetaSqrtN(b) => {
                let beta = b.or(self.beta).unwrap_or(1.0);
                out.alpha = Alpha::Finite(beta * nf.sqrt());
                out.beta = Some(beta);
            }
            AlphaSpec::Power(s) => {
                let sigma = s.or(self.sigma).ok_or_else(|| invalid("alpha n^sigma needs --sigma"))?;
                out.alpha = Alpha::Finite(nf.powf(sigma));
                out.sigma = Some(sigma);
            }
        }
        if let Alpha::Finite(a) = out.alpha {
            if !(a > 0.0) || !a.is_finite() {
                return Err(invalid(format!("alpha {spec} resolves to {a} at n = {n}")));
            }
        }
        Ok(out)
    }
}
