//! Flat `key = value` run configuration.
//!
//! Lines are `section.key = value`; `#` starts a comment. Every known key is
//! consumed while building [`RunConfig`], and anything left over is rejected
//! so that typos fail loudly instead of silently falling back to defaults.

use std::collections::BTreeMap;
use std::path::Path;

use elastic_grating::modes::{Incidence, Lattice, Medium};
use elastic_grating::pml::PmlProfile;
use elastic_grating::solver3d::{Bump, Geometry};
use elastic_grating::C64;

use crate::CliError;

/// Raw key/value pairs in file order.
#[derive(Debug, Clone, Default)]
pub struct RawConfig {
    entries: BTreeMap<String, String>,
}

impl RawConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut entries = BTreeMap::new();
        for (no, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("line {}: expected `key = value`", no + 1)))?;
            let (k, v) = (k.trim(), v.trim());
            if k.is_empty() || k.contains(char::is_whitespace) {
                return Err(CliError::Config(format!("line {}: bad key `{k}`", no + 1)));
            }
            if entries.insert(k.to_string(), v.to_string()).is_some() {
                return Err(CliError::Config(format!("line {}: duplicate key `{k}`", no + 1)));
            }
        }
        Ok(Self { entries })
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }
}

/// Pulls typed values out of a [`RawConfig`] and records the resolved value
/// of every key, defaults included.
struct Reader {
    raw: BTreeMap<String, String>,
    resolved: BTreeMap<String, String>,
}

impl Reader {
    fn take(&mut self, key: &str) -> Option<String> {
        self.raw.remove(key)
    }

    fn parsed<T: std::str::FromStr>(&mut self, key: &str, text: &str) -> Result<T, CliError> {
        let v = text
            .parse()
            .map_err(|_| CliError::Config(format!("{key}: cannot parse `{text}`")))?;
        self.resolved.insert(key.to_string(), text.to_string());
        Ok(v)
    }

    fn required<T: std::str::FromStr>(&mut self, key: &str) -> Result<T, CliError> {
        let text = self
            .take(key)
            .ok_or_else(|| CliError::Config(format!("missing required key `{key}`")))?;
        self.parsed(key, &text)
    }

    fn optional<T: std::str::FromStr>(&mut self, key: &str, default: &str) -> Result<T, CliError> {
        let text = self.take(key).unwrap_or_else(|| default.to_string());
        self.parsed(key, &text)
    }

    fn list<T: std::str::FromStr>(&mut self, key: &str, default: &str) -> Result<Vec<T>, CliError> {
        let text = self.take(key).unwrap_or_else(|| default.to_string());
        let out = text
            .split(',')
            .map(|s| s.trim())
            .filter(|s| !s.is_empty())
            .map(|s| s.parse().map_err(|_| CliError::Config(format!("{key}: cannot parse `{s}`"))))
            .collect::<Result<Vec<T>, _>>()?;
        self.resolved.insert(key.to_string(), text);
        Ok(out)
    }
}

/// Which truncation of the exterior the 3D solver uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverVariant {
    Pml,
    Dtn,
}

/// Validated run parameters.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub medium: Medium,
    pub incidence: Incidence,
    pub lattice: Lattice,
    pub geometry: Geometry,
    pub h: f64,
    pub profile: PmlProfile,
    pub window: usize,
    pub elements: usize,
    pub refinements: Vec<usize>,
    pub resolution: [usize; 3],
    pub variant: SolverVariant,
    pub truncation: usize,
    pub tol: f64,
    pub max_iter: usize,
    pub dump_field: bool,
    pub scalings: Vec<f64>,
    pub magnitudes: Vec<f64>,
    pub surface_max: f64,
    pub gamma1: f64,
    pub samples: usize,
    pub check_tol: f64,
    pub seed: u64,
    /// Every key with the value actually used, for the run summary.
    pub resolved: BTreeMap<String, String>,
}

fn domain(e: elastic_grating::Error) -> CliError {
    CliError::Config(e.to_string())
}

fn parse_bumps(text: &str) -> Result<Geometry, CliError> {
    let mut bumps = Vec::new();
    for part in text.split(';').map(str::trim).filter(|s| !s.is_empty()) {
        let v: Vec<f64> = part
            .split_whitespace()
            .map(|s| s.parse().map_err(|_| CliError::Config(format!("geometry.bumps: cannot parse `{s}`"))))
            .collect::<Result<_, _>>()?;
        if v.len() != 5 {
            return Err(CliError::Config(format!(
                "geometry.bumps: expected `x_lo x_hi y_lo y_hi height`, got `{part}`"
            )));
        }
        bumps.push(Bump {
            lo: [v[0], v[2]],
            hi: [v[1], v[3]],
            height: v[4],
        });
    }
    Ok(Geometry::Bumps(bumps))
}

impl RunConfig {
    /// Validates `raw`. `seed_override` comes from the command line and wins
    /// over the `seed` key.
    pub fn build(raw: RawConfig, seed_override: Option<u64>) -> Result<Self, CliError> {
        let mut r = Reader {
            raw: raw.entries,
            resolved: BTreeMap::new(),
        };
        let lambda: f64 = r.required("medium.lambda")?;
        let mu: f64 = r.required("medium.mu")?;
        let omega: f64 = r.required("medium.omega")?;
        let theta1: f64 = r.required("incidence.theta1")?;
        let theta2: f64 = r.required("incidence.theta2")?;
        let period1: f64 = r.optional("lattice.period1", "1")?;
        let period2: f64 = r.optional("lattice.period2", "1")?;
        let kind: String = r.optional("geometry.kind", "flat")?;
        let geometry = match kind.as_str() {
            "flat" => Geometry::Flat,
            "two_bumps" => Geometry::two_bumps(),
            "bumps" => {
                let text = r
                    .take("geometry.bumps")
                    .ok_or_else(|| CliError::Config("geometry.kind = bumps needs `geometry.bumps`".into()))?;
                r.resolved.insert("geometry.bumps".into(), text.clone());
                parse_bumps(&text)?
            }
            other => return Err(CliError::Config(format!("geometry.kind: unknown `{other}`"))),
        };
        let h: f64 = r.optional("domain.h", "0.3")?;
        let delta: f64 = r.optional("pml.delta", "0.3")?;
        let sigma_re: f64 = r.optional("pml.sigma_re", "25.39")?;
        let sigma_im: f64 = r.optional("pml.sigma_im", "25.39")?;
        let degree: u32 = r.optional("pml.degree", "2")?;
        let window: usize = r.optional("modes.window", "5")?;
        let elements: usize = r.optional("mesh.elements", "384")?;
        let refinements: Vec<usize> = r.list("mesh.refinements", "48,96,192,384")?;
        let res: Vec<usize> = r.list("mesh.resolution", "16,16,24")?;
        let variant = match r.optional::<String>("solver.variant", "pml")?.as_str() {
            "pml" => SolverVariant::Pml,
            "dtn" => SolverVariant::Dtn,
            other => return Err(CliError::Config(format!("solver.variant: unknown `{other}`"))),
        };
        let truncation: usize = r.optional("solver.truncation", "10")?;
        let tol: f64 = r.optional("solver.tol", "1e-8")?;
        let max_iter: usize = r.optional("solver.max_iter", "1000")?;
        let dump_field: bool = r.optional("output.field", "false")?;
        let scalings: Vec<f64> = r.list("sweep.scalings", "0.25,0.5,1,2")?;
        let magnitudes: Vec<f64> = r.list("sweep.magnitudes", "")?;
        let surface_max: f64 = r.optional("bounds.surface_max", "0")?;
        let gamma1: f64 = r.optional("bounds.gamma1", "1")?;
        let samples: usize = r.optional("check.samples", "20")?;
        let check_tol: f64 = r.optional("check.tol", "1e-9")?;
        let mut seed: u64 = r.optional("seed", "0")?;
        if let Some(s) = seed_override {
            seed = s;
            r.resolved.insert("seed".into(), s.to_string());
        }

        if let Some(k) = r.raw.keys().next() {
            return Err(CliError::Config(format!("unknown key `{k}`")));
        }

        let medium = Medium::new(lambda, mu, omega).map_err(domain)?;
        let incidence = Incidence::new(&medium, theta1, theta2).map_err(domain)?;
        let lattice = Lattice::new(period1, period2, &incidence).map_err(domain)?;
        let profile = PmlProfile::new(h, delta, C64::new(sigma_re, sigma_im), degree).map_err(domain)?;
        let resolution: [usize; 3] = res
            .try_into()
            .map_err(|_| CliError::Config("mesh.resolution: expected three integers `n1,n2,n3`".into()))?;
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(CliError::Config(format!("{name} must be positive, got {v}")))
            }
        };
        positive("solver.tol", tol)?;
        positive("check.tol", check_tol)?;
        if surface_max < 0.0 || surface_max >= h {
            return Err(CliError::Config(format!("bounds.surface_max must lie in [0, domain.h), got {surface_max}")));
        }
        positive("bounds.gamma1", gamma1)?;
        if elements == 0 || refinements.contains(&0) {
            return Err(CliError::Config("mesh element counts must be positive".into()));
        }
        if max_iter == 0 || samples == 0 {
            return Err(CliError::Config("solver.max_iter and check.samples must be positive".into()));
        }
        if scalings.iter().any(|s| !(s.is_finite() && *s >= 0.0)) {
            return Err(CliError::Config("sweep.scalings must be non-negative".into()));
        }
        if magnitudes.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
            return Err(CliError::Config("sweep.magnitudes must be positive".into()));
        }

        Ok(Self {
            medium,
            incidence,
            lattice,
            geometry,
            h,
            profile,
            window,
            elements,
            refinements,
            resolution,
            variant,
            truncation,
            tol,
            max_iter,
            dump_field,
            scalings,
            magnitudes,
            surface_max,
            gamma1,
            samples,
            check_tol,
            seed,
            resolved: r.resolved,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = "medium.lambda = 1\nmedium.mu = 2\nmedium.omega = 6.283185307179586\nincidence.theta1 = 0.5235987755982988\nincidence.theta2 = 0.5235987755982988\n";

    #[test]
    fn defaults_fill_in() {
        let c = RunConfig::build(RawConfig::parse(BASE).unwrap(), None).unwrap();
        assert_eq!(c.resolution, [16, 16, 24]);
        assert_eq!(c.refinements, vec![48, 96, 192, 384]);
        assert_eq!(c.resolved["pml.delta"], "0.3");
        assert_eq!(c.seed, 0);
    }

    #[test]
    fn comments_and_seed_override() {
        let text = format!("# header\n{BASE}seed = 4 # trailing\n");
        let c = RunConfig::build(RawConfig::parse(&text).unwrap(), Some(9)).unwrap();
        assert_eq!(c.seed, 9);
        assert_eq!(c.resolved["seed"], "9");
    }

    #[test]
    fn rejects_bad_input() {
        let cases = [
            "medium.lambda = 1\n".to_string(),
            format!("{BASE}pml.dleta = 0.3\n"),
            format!("{BASE}pml.delta = 0.3\npml.delta = 0.4\n"),
            format!("{BASE}pml.delta = abc\n"),
            format!("{BASE}pml.delta = -1\n"),
            format!("{BASE}mesh.resolution = 4,4\n"),
            format!("{BASE}geometry.kind = bumps\n"),
            "medium.lambda 1\n".to_string(),
        ];
        for text in cases {
            let r = RawConfig::parse(&text).and_then(|raw| RunConfig::build(raw, None));
            assert!(matches!(r, Err(CliError::Config(_))), "{text}");
        }
    }

    #[test]
    fn custom_bumps() {
        let text = format!("{BASE}geometry.kind = bumps\ngeometry.bumps = 0.25 0.5 0.25 0.5 0.1; 0 0.25 0 0.25 0.2\n");
        let c = RunConfig::build(RawConfig::parse(&text).unwrap(), None).unwrap();
        assert_eq!(c.geometry.bumps().len(), 2);
        assert_eq!(c.geometry.bumps()[0].hi, [0.5, 0.5]);
    }
}
