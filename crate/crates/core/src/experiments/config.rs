//! Scenario configuration and the flat `key = value` file format.

use std::fmt;
use std::str::FromStr;

use crate::codes::CodeId;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FigureId {
    Fig2,
    Fig3,
    Fig4a,
    Fig4b,
    Fig5,
    Fig6,
    Fig8,
    Fig9,
}

impl FigureId {
    pub const ALL: [FigureId; 8] = [
        FigureId::Fig2,
        FigureId::Fig3,
        FigureId::Fig4a,
        FigureId::Fig4b,
        FigureId::Fig5,
        FigureId::Fig6,
        FigureId::Fig8,
        FigureId::Fig9,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FigureId::Fig2 => "fig2",
            FigureId::Fig3 => "fig3",
            FigureId::Fig4a => "fig4a",
            FigureId::Fig4b => "fig4b",
            FigureId::Fig5 => "fig5",
            FigureId::Fig6 => "fig6",
            FigureId::Fig8 => "fig8",
            FigureId::Fig9 => "fig9",
        }
    }

    /// Whether the figure is a CDF plot rather than an outage-rate plot.
    pub fn is_cdf(self) -> bool {
        matches!(self, FigureId::Fig2 | FigureId::Fig3)
    }
}

impl fmt::Display for FigureId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FigureId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim().to_ascii_lowercase();
        FigureId::ALL
            .into_iter()
            .find(|f| f.name() == t)
            .ok_or_else(|| Error::Config(format!("unknown figure '{s}' (known: {})", figure_names())))
    }
}

fn figure_names() -> String {
    FigureId::ALL.map(FigureId::name).join(", ")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DrmChoice {
    Meng,
    Rand,
    Dft,
}

impl DrmChoice {
    pub fn name(self) -> &'static str {
        match self {
            DrmChoice::Meng => "meng",
            DrmChoice::Rand => "rand",
            DrmChoice::Dft => "dft",
        }
    }
}

impl FromStr for DrmChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "meng" => Ok(DrmChoice::Meng),
            "rand" | "random" => Ok(DrmChoice::Rand),
            "dft" => Ok(DrmChoice::Dft),
            _ => Err(Error::Config(format!("unknown drm '{s}' (known: meng, rand, dft)"))),
        }
    }
}

/// Everything that determines one experiment's output.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub figure: FigureId,
    pub seed: u64,
    /// `None` means the figure's default.
    pub trials: Option<usize>,
    pub antennas: Vec<usize>,
    pub codes: Vec<CodeId>,
    /// `|r|` of the exponential correlation model; 0 is IID.
    pub correlation: f64,
    pub drm: DrmChoice,
    pub epsilon: f64,
    pub coherence: usize,
    pub cell_edge_snr_db: f64,
    pub intervals: Vec<usize>,
    pub message_bits: Vec<f64>,
    pub reuse: Vec<usize>,
    pub optimize_pilots: bool,
    /// Random DRM draws compared in the DRM figure.
    pub drm_realizations: usize,
    /// Worker threads; `None` uses the pool default.
    pub workers: Option<usize>,
}

pub const CDF_TRIALS: usize = 200_000;
pub const OUTAGE_TRIALS: usize = 100_000;

impl ScenarioConfig {
    pub fn defaults(figure: FigureId) -> Self {
        let mut c = ScenarioConfig {
            figure,
            seed: 1,
            trials: None,
            antennas: vec![120],
            codes: CodeId::ALL.to_vec(),
            correlation: 0.0,
            drm: DrmChoice::Meng,
            epsilon: 0.01,
            coherence: 256,
            cell_edge_snr_db: -5.0,
            intervals: vec![1],
            message_bits: Vec::new(),
            reuse: Vec::new(),
            optimize_pilots: true,
            drm_realizations: 10,
            workers: None,
        };
        match figure {
            FigureId::Fig2 => {
                c.antennas = vec![24, 120];
                c.codes = vec![CodeId::C2, CodeId::C8];
                c.correlation = 0.9;
            }
            FigureId::Fig3 => c.codes = vec![CodeId::C2, CodeId::C8],
            FigureId::Fig4a => c.antennas = vec![24, 48, 72, 96, 120],
            FigureId::Fig4b => {
                c.antennas = vec![24, 48, 72, 96, 120];
                c.correlation = 0.9;
            }
            FigureId::Fig5 | FigureId::Fig6 => {
                c.antennas = vec![24];
                c.intervals = (1..=64).collect();
                if figure == FigureId::Fig6 {
                    c.message_bits = (1..=40).map(|k| 50.0 * k as f64).collect();
                }
            }
            FigureId::Fig8 => {
                c.antennas = vec![24];
                c.intervals = (1..=36).collect();
            }
            FigureId::Fig9 => {
                c.codes = vec![CodeId::C1, CodeId::C2, CodeId::C4, CodeId::C8];
                c.correlation = 0.9;
                c.reuse = vec![1, 3, 4];
            }
        }
        c
    }

    /// Parses a config file; `figure` overrides the file's `figure` key.
    pub fn parse(text: &str, figure: Option<FigureId>) -> Result<Self> {
        let pairs = parse_pairs(text)?;
        let from_file = pairs
            .iter()
            .find(|(k, _)| k == "figure")
            .map(|(_, v)| v.parse::<FigureId>())
            .transpose()?;
        let fig = figure
            .or(from_file)
            .ok_or_else(|| Error::Config("no figure given".into()))?;
        let mut c = Self::defaults(fig);
        for (k, v) in &pairs {
            if k != "figure" {
                c.set(k, v)?;
            }
        }
        Ok(c)
    }

    /// Applies one `key = value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let bad = |what: &str| Error::Config(format!("{key}: cannot parse '{value}' as {what}"));
        match key {
            "figure" => self.figure = value.parse()?,
            "seed" => self.seed = value.parse().map_err(|_| bad("an unsigned integer"))?,
            "trials" => self.trials = Some(value.parse().map_err(|_| bad("an unsigned integer"))?),
            "antennas" | "M" => self.antennas = parse_list(value).map_err(|_| bad("a list of integers"))?,
            "codes" => {
                self.codes = split_items(value)
                    .map(|s| s.parse::<CodeId>().map_err(|_| bad("a list of code ids")))
                    .collect::<Result<_>>()?
            }
            "correlation" => self.correlation = value.parse().map_err(|_| bad("a number"))?,
            "drm" => self.drm = value.parse()?,
            "epsilon" => self.epsilon = value.parse().map_err(|_| bad("a number"))?,
            "coherence" => self.coherence = value.parse().map_err(|_| bad("an unsigned integer"))?,
            "cell_edge_snr_db" => self.cell_edge_snr_db = value.parse().map_err(|_| bad("a number"))?,
            "intervals" => self.intervals = parse_list(value).map_err(|_| bad("a list of integers"))?,
            "message_bits" => self.message_bits = parse_list(value).map_err(|_| bad("a list of numbers"))?,
            "reuse" => self.reuse = parse_list(value).map_err(|_| bad("a list of integers"))?,
            "optimize_pilots" => self.optimize_pilots = parse_flag(value).ok_or_else(|| bad("on/off"))?,
            "drm_realizations" => {
                self.drm_realizations = value.parse().map_err(|_| bad("an unsigned integer"))?
            }
            "workers" => self.workers = Some(value.parse().map_err(|_| bad("an unsigned integer"))?),
            _ => return Err(Error::Config(format!("unknown key '{key}'"))),
        }
        Ok(())
    }

    pub fn trial_count(&self) -> usize {
        self.trials.unwrap_or(if self.figure.is_cdf() { CDF_TRIALS } else { OUTAGE_TRIALS })
    }

    /// Checks parameter ranges that do not depend on the figure's internals.
    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        if self.trial_count() == 0 {
            return fail("trial count must be positive".into());
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return fail(format!("epsilon must lie in (0, 1), got {}", self.epsilon));
        }
        let need = (crate::outage::MIN_TAIL_SAMPLES / self.epsilon).ceil() as usize;
        if self.trial_count() < need {
            return fail(format!("epsilon = {} needs at least {need} trials", self.epsilon));
        }
        if !(0.0..1.0).contains(&self.correlation) {
            return fail(format!("correlation magnitude must lie in [0, 1), got {}", self.correlation));
        }
        if !self.cell_edge_snr_db.is_finite() {
            return fail("cell-edge SNR must be finite".into());
        }
        if self.antennas.is_empty() || self.codes.is_empty() {
            return fail("need at least one antenna count and one code".into());
        }
        if self.workers == Some(0) {
            return fail("workers must be positive".into());
        }
        for &m in &self.antennas {
            for code in &self.codes {
                if m <= code.n_t() {
                    return fail(format!("M = {m} must exceed n_t = {} for {code}", code.n_t()));
                }
            }
        }
        if let Some(code) = self.codes.iter().find(|c| c.n_t() >= self.coherence) {
            return fail(format!("coherence {} too short for {code}", self.coherence));
        }
        match self.figure {
            FigureId::Fig2 if self.antennas.len() != self.codes.len() => {
                fail("fig2 pairs antennas[i] with codes[i]; lists must have equal length".into())
            }
            FigureId::Fig2 if self.drm_realizations == 0 => fail("drm_realizations must be positive".into()),
            FigureId::Fig5 | FigureId::Fig6 | FigureId::Fig8 if self.intervals.is_empty() => {
                fail("need at least one interval count".into())
            }
            FigureId::Fig5 | FigureId::Fig6 | FigureId::Fig8 if self.intervals.contains(&0) => {
                fail("interval counts must be positive".into())
            }
            FigureId::Fig6 if self.message_bits.iter().any(|b| !(*b >= 0.0)) => {
                fail("message sizes must be non-negative".into())
            }
            FigureId::Fig9 if self.reuse.iter().any(|p| ![1, 3, 4].contains(p)) => {
                fail("reuse factors must be 1, 3 or 4".into())
            }
            _ => Ok(()),
        }
    }

    /// The configuration as a `key = value` file that parses back to itself.
    pub fn to_text(&self) -> String {
        let join = |v: &[String]| v.join(", ");
        let nums = |v: &[usize]| join(&v.iter().map(usize::to_string).collect::<Vec<_>>());
        let mut lines = vec![
            format!("figure = {}", self.figure),
            format!("seed = {}", self.seed),
            format!("trials = {}", self.trial_count()),
            format!("antennas = {}", nums(&self.antennas)),
            format!("codes = {}", join(&self.codes.iter().map(|c| c.to_string()).collect::<Vec<_>>())),
            format!("correlation = {}", self.correlation),
            format!("drm = {}", self.drm.name()),
            format!("epsilon = {}", self.epsilon),
            format!("coherence = {}", self.coherence),
            format!("cell_edge_snr_db = {}", self.cell_edge_snr_db),
            format!("optimize_pilots = {}", if self.optimize_pilots { "on" } else { "off" }),
            format!("drm_realizations = {}", self.drm_realizations),
        ];
        if !self.intervals.is_empty() {
            lines.push(format!("intervals = {}", nums(&self.intervals)));
        }
        if !self.message_bits.is_empty() {
            lines.push(format!(
                "message_bits = {}",
                join(&self.message_bits.iter().map(|b| b.to_string()).collect::<Vec<_>>())
            ));
        }
        if !self.reuse.is_empty() {
            lines.push(format!("reuse = {}", nums(&self.reuse)));
        }
        lines.join("\n") + "\n"
    }
}

/// Splits config text into `(key, value)` pairs, dropping `#` comments and
/// blank lines. Duplicate keys are rejected.
pub fn parse_pairs(text: &str) -> Result<Vec<(String, String)>> {
    let mut out: Vec<(String, String)> = Vec::new();
    for (no, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("line {}: expected 'key = value'", no + 1)))?;
        let (k, v) = (k.trim(), v.trim());
        if k.is_empty() {
            return Err(Error::Config(format!("line {}: empty key", no + 1)));
        }
        if out.iter().any(|(seen, _)| seen == k) {
            return Err(Error::Config(format!("line {}: duplicate key '{k}'", no + 1)));
        }
        out.push((k.to_string(), v.to_string()));
    }
    Ok(out)
}

fn split_items(value: &str) -> impl Iterator<Item = &str> {
    value.split(',').map(str::trim).filter(|s| !s.is_empty())
}

fn parse_flag(value: &str) -> Option<bool> {
    match value.trim().to_ascii_lowercase().as_str() {
        "on" | "true" | "yes" | "1" => Some(true),
        "off" | "false" | "no" | "0" => Some(false),
        _ => None,
    }
}

/// Comma-separated items, each a number or an inclusive range `a..b` with an
/// optional step `a..b:s`.
pub fn parse_list<T>(value: &str) -> std::result::Result<Vec<T>, ()>
where
    T: FromStr + Copy + PartialOrd + std::ops::Add<Output = T> + Default,
{
    let mut out = Vec::new();
    for item in split_items(value) {
        let Some((a, rest)) = item.split_once("..") else {
            out.push(item.parse().map_err(|_| ())?);
            continue;
        };
        let (b, step) = match rest.split_once(':') {
            Some((b, s)) => (b, Some(s)),
            None => (rest, None),
        };
        let a: T = a.trim().parse().map_err(|_| ())?;
        let b: T = b.trim().parse().map_err(|_| ())?;
        let step: T = match step {
            Some(s) => s.trim().parse().map_err(|_| ())?,
            None => "1".parse().map_err(|_| ())?,
        };
        if !(step > T::default()) || b < a {
            return Err(());
        }
        let mut x = a;
        while x <= b {
            out.push(x);
            x = x + step;
        }
    }
    if out.is_empty() {
        return Err(());
    }
    Ok(out)
}
