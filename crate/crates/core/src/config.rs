//! Run configuration: flat key=value files, flag overrides, validation, and
//! reproducibility manifests.

use crate::error::{Error, Result};
use crate::field::{gaussian_profile, ContinuumField};
use crate::lattice::Sign;
use crate::mkdv::soliton_exact;
use crate::spectral::h_max_for;
use num_complex::Complex64;
use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, PartialEq)]
pub enum ProfileSpec {
    Gaussian {
        amplitude: f64,
        sigma: f64,
        center: f64,
    },
    Soliton {
        kappa: f64,
        x0: f64,
    },
    CustomSamples {
        path: PathBuf,
    },
}

impl ProfileSpec {
    /// Grammar: `gaussian:amplitude=0.08,sigma=2.0[,center=0]`,
    /// `soliton:kappa=1.0[,x0=0]`, `file:PATH`.
    pub fn parse(spec: &str) -> Result<Self> {
        let (kind, rest) = spec.split_once(':').unwrap_or((spec, ""));
        let mut kv = BTreeMap::new();
        if !rest.is_empty() && kind != "file" {
            for part in rest.split(',') {
                let (k, v) = part.split_once('=').ok_or_else(|| {
                    Error::Config(format!("profile parameter `{part}` is not key=value"))
                })?;
                let val: f64 = v
                    .parse()
                    .map_err(|_| Error::Config(format!("profile parameter `{part}`: bad number")))?;
                kv.insert(k.trim().to_string(), val);
            }
        }
        match kind {
            "gaussian" => Ok(ProfileSpec::Gaussian {
                amplitude: *kv.get("amplitude").or_else(|| kv.get("A")).unwrap_or(&0.08),
                sigma: *kv.get("sigma").unwrap_or(&2.0),
                center: *kv.get("center").unwrap_or(&0.0),
            }),
            "soliton" => Ok(ProfileSpec::Soliton {
                kappa: *kv.get("kappa").unwrap_or(&1.0),
                x0: *kv.get("x0").unwrap_or(&0.0),
            }),
            "file" => Ok(ProfileSpec::CustomSamples {
                path: PathBuf::from(rest),
            }),
            other => Err(Error::Config(format!("unknown profile kind `{other}`"))),
        }
    }

    pub fn describe(&self) -> String {
        match self {
            ProfileSpec::Gaussian {
                amplitude,
                sigma,
                center,
            } => format!("gaussian:amplitude={amplitude},sigma={sigma},center={center}"),
            ProfileSpec::Soliton { kappa, x0 } => format!("soliton:kappa={kappa},x0={x0}"),
            ProfileSpec::CustomSamples { path } => format!("file:{}", path.display()),
        }
    }

    /// Realize the profile on `m` grid points of the given period.
    pub fn build(&self, period: f64, m: usize) -> Result<ContinuumField> {
        match self {
            ProfileSpec::Gaussian {
                amplitude,
                sigma,
                center,
            } => Ok(gaussian_profile(period, m, *amplitude, *sigma, *center)),
            ProfileSpec::Soliton { kappa, x0 } => {
                soliton_exact(*kappa, *x0, 0.0, Sign::Focusing, period, m)
            }
            ProfileSpec::CustomSamples { path } => load_samples(path, period, m),
        }
    }
}

/// Three-column (x, Re, Im) whitespace-separated samples on a uniform grid
/// covering one period; spectrally resampled onto the target grid.
fn load_samples(path: &Path, period: f64, m: usize) -> Result<ContinuumField> {
    let text = std::fs::read_to_string(path)?;
    let mut xs = Vec::new();
    let mut vals = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = line.split_whitespace().collect();
        if cols.len() < 3 {
            return Err(Error::Config(format!(
                "{}:{}: need three columns (x, Re, Im)",
                path.display(),
                lineno + 1
            )));
        }
        let parse = |s: &str| -> Result<f64> {
            s.parse()
                .map_err(|_| Error::Config(format!("{}:{}: bad number `{s}`", path.display(), lineno + 1)))
        };
        xs.push(parse(cols[0])?);
        vals.push(Complex64::new(parse(cols[1])?, parse(cols[2])?));
    }
    let l = xs.len();
    if l < 8 {
        return Err(Error::Config("custom samples: need at least 8 rows".into()));
    }
    let dx = period / l as f64;
    for (j, &x) in xs.iter().enumerate() {
        if (x - j as f64 * dx).abs() > 1e-6 * period {
            return Err(Error::Config(format!(
                "custom samples must sit on the uniform grid j*{dx:.6} covering one period \
                 (row {j} has x = {x})"
            )));
        }
    }
    Ok(ContinuumField::new(period, vals).resample(m))
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub profile: ProfileSpec,
    pub sign: Sign,
    /// Strictly decreasing mesh sizes; N·h stays fixed across the sweep.
    pub h_list: Vec<f64>,
    /// Site count at the coarsest h.
    pub n_coarsest: usize,
    pub t_final: f64,
    pub s_list: Vec<f64>,
    pub tol: f64,
    pub tightness_l: f64,
    pub out_dir: PathBuf,
    pub seed: u64,
    pub mismatch_signs: bool,
}

impl RunConfig {
    pub fn period(&self) -> f64 {
        self.n_coarsest as f64 * self.h_list[0]
    }

    /// Reference-grid size: a power of two comfortably above the finest lattice.
    pub fn reference_grid(&self) -> usize {
        let n_finest = (self.period() / self.h_list.last().unwrap()).round() as usize;
        let mut m = 256;
        while m < 2 * n_finest {
            m *= 2;
        }
        m
    }

    pub fn build_phi0(&self) -> Result<ContinuumField> {
        self.profile.build(self.period(), self.reference_grid())
    }

    /// Validate the invariants that gate every run.  Produces messages that
    /// name the violated condition.
    pub fn validate(&self) -> Result<ContinuumField> {
        if self.h_list.is_empty() {
            return Err(Error::Config("h_list required".into()));
        }
        for w in self.h_list.windows(2) {
            if w[1] >= w[0] {
                return Err(Error::Config(format!(
                    "h_list must be strictly decreasing, got {} before {}",
                    w[0], w[1]
                )));
            }
        }
        let period = self.period();
        for &h in &self.h_list {
            let n_real = period / h;
            let n = n_real.round() as usize;
            if (n_real - n as f64).abs() > 1e-9 {
                return Err(Error::Config(format!(
                    "N*h must stay fixed across the sweep: period {period} is not an \
                     integer number of sites at h = {h}"
                )));
            }
            if n < 8 || n % 2 != 0 {
                return Err(Error::Config(format!(
                    "site count at h = {h} is {n}; need even N >= 8"
                )));
            }
        }
        let phi0 = self.build_phi0()?;
        let h0 = h_max_for(&phi0);
        let mass = phi0.l2_norm().powi(2);
        for &h in &self.h_list {
            if h > h0 {
                return Err(Error::Config(format!(
                    "h = {h} violates the smallness condition \
                     h0 = min{{1, 1/(100*||phi0||_L2^2)}} = {h0:.6} (||phi0||_L2^2 = {mass:.6})"
                )));
            }
        }
        if self.tol <= 0.0 {
            return Err(Error::Config("tol must be positive".into()));
        }
        if self.t_final < 0.0 {
            return Err(Error::Config("T must be nonnegative".into()));
        }
        Ok(phi0)
    }

    /// Normalized key=value manifest; identical configs produce identical
    /// bytes, so a run can be reproduced bit-for-bit.
    pub fn manifest(&self, subcommand: &str) -> String {
        let mut kv: BTreeMap<&str, String> = BTreeMap::new();
        kv.insert("subcommand", subcommand.to_string());
        kv.insert("profile", self.profile.describe());
        kv.insert(
            "sign",
            match self.sign {
                Sign::Defocusing => "+".into(),
                Sign::Focusing => "-".into(),
            },
        );
        kv.insert(
            "h_list",
            self.h_list
                .iter()
                .map(|h| h.to_string())
                .collect::<Vec<_>>()
                .join(","),
        );
        kv.insert("n", self.n_coarsest.to_string());
        kv.insert("T", self.t_final.to_string());
        kv.insert(
            "s_list",
            self.s_list
                .iter()
                .map(|s| s.to_string())
                .collect::<Vec<_>>()
                .join(","),
        );
        kv.insert("tol", format!("{:e}", self.tol));
        kv.insert("L", self.tightness_l.to_string());
        kv.insert("seed", self.seed.to_string());
        kv.insert("mismatch_signs", self.mismatch_signs.to_string());
        kv.insert("version", env!("CARGO_PKG_VERSION").to_string());
        let mut out = String::new();
        for (k, v) in kv {
            out.push_str(&format!("{k} = {v}\n"));
        }
        out
    }

    pub fn write_manifest(&self, subcommand: &str) -> Result<PathBuf> {
        std::fs::create_dir_all(&self.out_dir)?;
        let path = self.out_dir.join("run.manifest");
        let mut f = std::fs::File::create(&path)?;
        f.write_all(self.manifest(subcommand).as_bytes())?;
        Ok(path)
    }
}

/// Parse a flat key=value config file (`#` comments, blank lines allowed).
pub fn load_config_file(path: &Path) -> Result<BTreeMap<String, String>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    let mut kv = BTreeMap::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| {
            Error::Config(format!(
                "{}:{}: expected key = value",
                path.display(),
                lineno + 1
            ))
        })?;
        kv.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(kv)
}

pub fn parse_f64_list(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|p| {
            p.trim()
                .parse::<f64>()
                .map_err(|_| Error::Config(format!("bad number `{p}` in list")))
        })
        .collect()
}

pub fn parse_sign(s: &str) -> Result<Sign> {
    match s.trim() {
        "+" | "defocusing" => Ok(Sign::Defocusing),
        "-" | "focusing" => Ok(Sign::Focusing),
        other => Err(Error::Config(format!("sign must be + or -, got `{other}`"))),
    }
}
