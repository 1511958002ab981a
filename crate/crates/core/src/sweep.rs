//! Monte Carlo sweeps over `(n, c)` grids with theory columns.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::path::PathBuf;
use std::str::FromStr;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::collapse::{collapse_to_core, RootedCollapse, ShadowPeeler};
use crate::combinatorics::{binomial, FaceId};
use crate::error::{Error, Result};
use crate::homology::{betti_d, r_shadow, FieldChoice};
use crate::rng::{derive_stream, substream};
use crate::sampling::{sample, SampleConfig};
use crate::stats::MeanAccumulator;
use crate::thresholds::{
    collapsible_probability, gamma_d, r_shadow_density, regime_densities, rooted_degree_rate,
    DEFAULT_TOL,
};

/// Comment line written above the CSV header.
pub const NORMALIZATION_NOTE: &str =
    "# normalization: core_f1, core_f2, betti and delta_k per C(n,d) \
ridges; c_shadow and r_shadow per C(n,d+1) faces";

pub const CSV_HEADER: &str = "d,n,c,stat,mean,stderr,theory,trials";

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Statistic {
    CoreF1,
    CoreF2,
    Betti,
    CShadow,
    RShadow,
    CollapsibleFraction,
    GravelFraction,
    DeltaK,
}

impl Statistic {
    pub const ALL: [Statistic; 8] = [
        Statistic::CoreF1,
        Statistic::CoreF2,
        Statistic::Betti,
        Statistic::CShadow,
        Statistic::RShadow,
        Statistic::CollapsibleFraction,
        Statistic::GravelFraction,
        Statistic::DeltaK,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Statistic::CoreF1 => "core_f1",
            Statistic::CoreF2 => "core_f2",
            Statistic::Betti => "betti",
            Statistic::CShadow => "c_shadow",
            Statistic::RShadow => "r_shadow",
            Statistic::CollapsibleFraction => "collapsible_fraction",
            Statistic::GravelFraction => "gravel_fraction",
            Statistic::DeltaK => "delta_k",
        }
    }

    fn needs_core(self) -> bool {
        matches!(
            self,
            Statistic::CoreF1
                | Statistic::CoreF2
                | Statistic::Betti
                | Statistic::CollapsibleFraction
                | Statistic::GravelFraction
        )
    }
}

impl fmt::Display for Statistic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Statistic {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Statistic::ALL
            .into_iter()
            .find(|st| st.name() == s.trim())
            .ok_or_else(|| Error::Parse(format!("unknown statistic '{s}'")))
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(Error::Parse(format!("unknown format '{other}'"))),
        }
    }
}

/// Parses `rational`, `prime` (the default prime) or `prime:<q>`.
pub fn parse_field(s: &str) -> Result<FieldChoice> {
    let s = s.trim();
    let field = match s {
        "rational" | "rationals" => FieldChoice::Rational,
        "prime" => FieldChoice::default(),
        _ => match s.strip_prefix("prime:") {
            Some(q) => FieldChoice::Prime(
                q.parse()
                    .map_err(|_| Error::Parse(format!("bad modulus '{q}'")))?,
            ),
            None => return Err(Error::Parse(format!("unknown field '{s}'"))),
        },
    };
    field.validate()?;
    Ok(field)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub d: usize,
    pub ns: Vec<u32>,
    pub c_min: f64,
    pub c_max: f64,
    pub c_step: f64,
    pub trials: usize,
    pub seed: u64,
    pub stats: Vec<Statistic>,
    pub field: FieldChoice,
    /// Phases for `delta_k`.
    pub k: usize,
    /// Roots sampled per trial for `delta_k`.
    pub roots_per_trial: usize,
    /// Largest `n` for the R-shadow unless `force` is set.
    pub r_shadow_max_n: u32,
    pub force: bool,
    pub out: Option<PathBuf>,
    pub format: Format,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            d: 2,
            ns: vec![100],
            c_min: 1.0,
            c_max: 1.0,
            c_step: 0.1,
            trials: 1,
            seed: 0,
            stats: vec![Statistic::CoreF1],
            field: FieldChoice::default(),
            k: 1,
            roots_per_trial: 200,
            r_shadow_max_n: 300,
            force: false,
            out: None,
            format: Format::Csv,
        }
    }
}

impl SweepConfig {
    /// Grid values `c_min, c_min + step, ...` up to `c_max`.
    pub fn c_grid(&self) -> Vec<f64> {
        if self.c_max == self.c_min {
            return vec![self.c_min];
        }
        let count = ((self.c_max - self.c_min) / self.c_step + 1e-9).floor() as usize + 1;
        (0..count)
            .map(|i| self.c_min + i as f64 * self.c_step)
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if self.d == 0 {
            return bad("d must be at least 1");
        }
        if self.trials == 0 {
            return bad("trials must be at least 1");
        }
        if self.ns.is_empty() || self.ns.iter().any(|&n| (n as usize) <= self.d) {
            return bad("every n must exceed d");
        }
        if !(self.c_min >= 0.0
            && self.c_max >= self.c_min
            && self.c_min.is_finite()
            && self.c_max.is_finite())
        {
            return bad("need 0 <= c_min <= c_max");
        }
        if self.c_max > self.c_min && !(self.c_step > 0.0) {
            return bad("c_step must be positive");
        }
        if self.stats.is_empty() {
            return bad("no statistics requested");
        }
        if self.stats.contains(&Statistic::DeltaK) && (self.k == 0 || self.roots_per_trial == 0) {
            return bad("delta_k needs k >= 1 and roots_per_trial >= 1");
        }
        self.field.validate()?;
        if self.stats.contains(&Statistic::RShadow) && !self.force {
            if let Some(&n) = self.ns.iter().find(|&&n| n > self.r_shadow_max_n) {
                return Err(Error::CostLimit(format!(
                    "r_shadow at n = {n} exceeds the cap {}; pass --force (or force = true) to run anyway",
                    self.r_shadow_max_n
                )));
            }
        }
        for &n in &self.ns {
            for c in self.c_grid() {
                SampleConfig::binomial_c(n, self.d, c, 0).validate()?;
            }
        }
        Ok(())
    }

    /// Applies `key = value` lines; `#` starts a comment.
    pub fn apply_kv(&mut self, text: &str) -> Result<()> {
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Parse(format!("line {}: expected key = value", lineno + 1))
            })?;
            self.set(key.trim(), value.trim())
                .map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 1)))?;
        }
        Ok(())
    }

    /// Sets one option by name.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn num<T: FromStr>(key: &str, v: &str) -> Result<T> {
            v.parse()
                .map_err(|_| Error::Parse(format!("bad value '{v}' for {key}")))
        }
        match key {
            "d" => self.d = num(key, value)?,
            "n" | "ns" => {
                self.ns = value
                    .split(',')
                    .map(|s| num(key, s.trim()))
                    .collect::<Result<_>>()?
            }
            "c" => {
                self.c_min = num(key, value)?;
                self.c_max = self.c_min;
            }
            "c_min" => self.c_min = num(key, value)?,
            "c_max" => self.c_max = num(key, value)?,
            "c_step" => self.c_step = num(key, value)?,
            "trials" => self.trials = num(key, value)?,
            "seed" => self.seed = num(key, value)?,
            "k" => self.k = num(key, value)?,
            "roots_per_trial" => self.roots_per_trial = num(key, value)?,
            "r_shadow_max_n" => self.r_shadow_max_n = num(key, value)?,
            "force" => self.force = num(key, value)?,
            "stats" => self.stats = value.split(',').map(str::parse).collect::<Result<_>>()?,
            "field" => self.field = parse_field(value)?,
            "out" => self.out = Some(PathBuf::from(value)),
            "format" => self.format = value.parse()?,
            other => return Err(Error::Parse(format!("unknown key '{other}'"))),
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub d: usize,
    pub n: u32,
    pub c: f64,
    pub stat: Statistic,
    pub mean: f64,
    pub stderr: f64,
    pub theory: f64,
    pub trials: usize,
}

/// Limiting value of a statistic at `(c, d)`.
pub fn theory(stat: Statistic, c: f64, d: usize, k: usize) -> f64 {
    let below_collapse = c < gamma_d(d, DEFAULT_TOL);
    match stat {
        Statistic::CoreF1 => regime_densities(c, d).core_dminus1_density,
        Statistic::CoreF2 => regime_densities(c, d).core_d_density,
        Statistic::Betti => regime_densities(c, d).betti_density,
        Statistic::CShadow => regime_densities(c, d).shadow_density,
        Statistic::RShadow => r_shadow_density(c, d),
        Statistic::CollapsibleFraction if below_collapse => collapsible_probability(c, d),
        Statistic::GravelFraction if below_collapse => 1.0,
        Statistic::CollapsibleFraction | Statistic::GravelFraction => 0.0,
        Statistic::DeltaK => rooted_degree_rate(c, d, k),
    }
}

/// Seed of the complex for one trial.
pub fn trial_seed(seed: u64, d: usize, n: u32, c: f64, trial: usize) -> u64 {
    derive_stream(&[seed, d as u64, n as u64, c.to_bits(), trial as u64])
}

/// The requested statistics of one sampled complex, in request order.
pub fn trial_values(cfg: &SweepConfig, n: u32, c: f64, trial: usize) -> Result<Vec<f64>> {
    let d = cfg.d;
    let seed = trial_seed(cfg.seed, d, n, c, trial);
    let y = sample(&SampleConfig::binomial_c(n, d, c, seed), None)?;
    let ridges = binomial(n as u64, d as u64).ok_or(Error::Overflow {
        n: n as u64,
        k: d as u64,
    })? as f64;
    let faces = y.d_face_count() as f64;
    let core = cfg
        .stats
        .iter()
        .any(|s| s.needs_core())
        .then(|| collapse_to_core(&y));
    let mut out = Vec::with_capacity(cfg.stats.len());
    for &stat in &cfg.stats {
        let value = match stat {
            Statistic::CoreF1 => core.as_ref().unwrap().core_dminus1_count as f64 / ridges,
            Statistic::CoreF2 => core.as_ref().unwrap().core.f_d() as f64 / ridges,
            Statistic::Betti => {
                let core = &core.as_ref().unwrap().core;
                let b = if core.f_d() == 0 {
                    0
                } else {
                    betti_d(core, cfg.field)?
                };
                b as f64 / ridges
            }
            Statistic::CShadow => ShadowPeeler::new(&y).shadow_size() as f64 / faces,
            Statistic::RShadow => r_shadow(&y, cfg.field)?.len() as f64 / faces,
            Statistic::CollapsibleFraction => core.as_ref().unwrap().is_collapsible as u8 as f64,
            Statistic::GravelFraction => core.as_ref().unwrap().is_gravel as u8 as f64,
            Statistic::DeltaK => {
                let rooted = RootedCollapse::new(&y);
                let mut rng = substream(seed, &[u64::from(b'k')]);
                let total: u64 = (0..cfg.roots_per_trial)
                    .map(|_| {
                        let root = FaceId(rng.random_range(0..ridges as u64));
                        rooted.degree(root, cfg.k) as u64
                    })
                    .sum();
                total as f64 / cfg.roots_per_trial as f64
            }
        };
        out.push(value);
    }
    Ok(out)
}

/// Runs every grid point; rows are ordered by `n`, then `c`, then statistic
/// in request order.
pub fn run_sweep(cfg: &SweepConfig) -> Result<Vec<SweepRow>> {
    cfg.validate()?;
    let mut rows = Vec::new();
    for &n in &cfg.ns {
        for c in cfg.c_grid() {
            let per_trial: Vec<Vec<f64>> = (0..cfg.trials)
                .into_par_iter()
                .map(|t| trial_values(cfg, n, c, t))
                .collect::<Result<_>>()?;
            for (i, &stat) in cfg.stats.iter().enumerate() {
                let acc: MeanAccumulator = per_trial.iter().map(|v| v[i]).collect();
                rows.push(SweepRow {
                    d: cfg.d,
                    n,
                    c,
                    stat,
                    mean: acc.mean(),
                    stderr: acc.std_err(),
                    theory: theory(stat, c, cfg.d, cfg.k),
                    trials: cfg.trials,
                });
            }
        }
    }
    Ok(rows)
}

/// Writes rows as CSV (comment line, fixed header) or a JSON array.
pub fn emit<W: Write>(rows: &[SweepRow], format: Format, mut w: W) -> Result<()> {
    match format {
        Format::Csv => {
            writeln!(w, "{NORMALIZATION_NOTE}")?;
            let mut wr = csv::WriterBuilder::new().has_headers(false).from_writer(w);
            wr.write_record(CSV_HEADER.split(','))?;
            for r in rows {
                wr.write_record([
                    r.d.to_string(),
                    r.n.to_string(),
                    r.c.to_string(),
                    r.stat.to_string(),
                    r.mean.to_string(),
                    r.stderr.to_string(),
                    r.theory.to_string(),
                    r.trials.to_string(),
                ])?;
            }
            wr.flush()?;
        }
        Format::Json => {
            serde_json::to_writer_pretty(&mut w, rows)?;
            writeln!(w)?;
        }
    }
    Ok(())
}

/// Writes rows to a file.
pub fn emit_to_path(rows: &[SweepRow], format: Format, path: &std::path::Path) -> Result<()> {
    let file = std::fs::File::create(path)?;
    emit(rows, format, std::io::BufWriter::new(file))
}

/// Reads rows written by [`emit`] in CSV form.
pub fn parse_csv(text: &str) -> Result<Vec<SweepRow>> {
    let mut rd = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .has_headers(true)
        .from_reader(text.as_bytes());
    let header: Vec<String> = rd.headers()?.iter().map(str::to_string).collect();
    if header.join(",") != CSV_HEADER {
        return Err(Error::Parse(format!("unexpected header {header:?}")));
    }
    let mut rows = Vec::new();
    for rec in rd.records() {
        let rec = rec?;
        let field = |i: usize| rec.get(i).unwrap_or("");
        let num = |i: usize| -> Result<f64> {
            field(i)
                .parse()
                .map_err(|_| Error::Parse(format!("bad number '{}'", field(i))))
        };
        rows.push(SweepRow {
            d: num(0)? as usize,
            n: num(1)? as u32,
            c: num(2)?,
            stat: field(3).parse()?,
            mean: num(4)?,
            stderr: num(5)?,
            theory: num(6)?,
            trials: num(7)? as usize,
        });
    }
    Ok(rows)
}

/// Groups rows by statistic name.
pub fn by_statistic(rows: &[SweepRow]) -> BTreeMap<Statistic, Vec<&SweepRow>> {
    let mut map: BTreeMap<Statistic, Vec<&SweepRow>> = BTreeMap::new();
    for r in rows {
        map.entry(r.stat).or_default().push(r);
    }
    map
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(stats: Vec<Statistic>) -> SweepConfig {
        SweepConfig {
            ns: vec![30],
            c_min: 0.0,
            c_max: 0.0,
            trials: 1,
            stats,
            ..SweepConfig::default()
        }
    }

    #[test]
    fn zero_density_gives_zero_rows() {
        let cfg = small(Statistic::ALL.to_vec());
        let rows = run_sweep(&cfg).unwrap();
        assert_eq!(rows.len(), Statistic::ALL.len());
        for r in &rows {
            let expect = match r.stat {
                // the empty complex is collapsible and an (empty) gravel
                Statistic::CollapsibleFraction | Statistic::GravelFraction => 1.0,
                _ => 0.0,
            };
            assert_eq!(r.mean, expect, "{}", r.stat);
        }
    }

    #[test]
    fn csv_round_trip_and_stability() {
        let cfg = SweepConfig {
            ns: vec![20, 25],
            c_min: 1.0,
            c_max: 3.0,
            c_step: 1.0,
            trials: 3,
            seed: 11,
            stats: vec![Statistic::CoreF1, Statistic::Betti, Statistic::DeltaK],
            k: 2,
            ..SweepConfig::default()
        };
        let rows = run_sweep(&cfg).unwrap();
        assert_eq!(rows.len(), 2 * 3 * 3);
        let mut a = Vec::new();
        emit(&rows, Format::Csv, &mut a).unwrap();
        let mut b = Vec::new();
        emit(&run_sweep(&cfg).unwrap(), Format::Csv, &mut b).unwrap();
        assert_eq!(a, b);
        let text = String::from_utf8(a).unwrap();
        let mut lines = text.lines();
        assert!(lines.next().unwrap().starts_with("# normalization:"));
        assert_eq!(lines.next().unwrap(), CSV_HEADER);
        assert!(text.lines().skip(1).all(|l| l.split(',').count() == 8));
        assert_eq!(parse_csv(&text).unwrap(), rows);

        let mut empty = Vec::new();
        emit(&[], Format::Csv, &mut empty).unwrap();
        assert_eq!(
            parse_csv(&String::from_utf8(empty).unwrap()).unwrap(),
            vec![]
        );

        let mut json = Vec::new();
        emit(&rows, Format::Json, &mut json).unwrap();
        let back: Vec<SweepRow> = serde_json::from_slice(&json).unwrap();
        assert_eq!(back, rows);
    }

    #[test]
    fn theory_column_matches_thresholds() {
        let cfg = SweepConfig {
            ns: vec![20],
            c_min: 2.5,
            c_max: 3.5,
            c_step: 0.5,
            stats: vec![Statistic::CoreF1, Statistic::CShadow, Statistic::RShadow],
            ..SweepConfig::default()
        };
        for r in run_sweep(&cfg).unwrap() {
            let rd = regime_densities(r.c, 2);
            let expect = match r.stat {
                Statistic::CoreF1 => rd.core_dminus1_density,
                Statistic::CShadow => rd.shadow_density,
                _ => r_shadow_density(r.c, 2),
            };
            assert!((r.theory - expect).abs() < 1e-10);
        }
    }

    #[test]
    fn config_parsing_and_limits() {
        let mut cfg = SweepConfig::default();
        cfg.apply_kv(
            "# a sweep\nd = 2\nn = 100, 200\nc_min = 2\nc_max = 3\nc_step = 0.5\n\
             trials = 4\nstats = core_f1,r_shadow\nfield = rational\nformat = json\n",
        )
        .unwrap();
        assert_eq!(cfg.ns, vec![100, 200]);
        assert_eq!(cfg.c_grid(), vec![2.0, 2.5, 3.0]);
        assert_eq!(cfg.field, FieldChoice::Rational);
        assert_eq!(cfg.format, Format::Json);
        cfg.validate().unwrap();
        cfg.ns = vec![1000];
        assert!(matches!(cfg.validate(), Err(Error::CostLimit(_))));
        cfg.force = true;
        cfg.validate().unwrap();
        assert!(cfg.apply_kv("bogus = 1").is_err());
        assert!(cfg.apply_kv("field = prime:15").is_err());
        cfg.trials = 0;
        assert!(cfg.validate().is_err());
    }
}
