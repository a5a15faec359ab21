//! The results file: machine-readable structured text, one record per
//! eigenpair, numbers written with 17 significant digits so parsing them
//! back reproduces the bits exactly.

use std::fmt::Write as _;

use anyhow::{bail, Context, Result};

use cavity_eig_core::analysis::SolveReport;
use cavity_eig_core::Complex64;

const MAGIC: &str = "# cavity-eig results v1";

#[derive(Debug, Clone, PartialEq)]
pub struct ResultsFile {
    pub formulation: String,
    pub h: f64,
    pub beta: f64,
    pub shift: (f64, f64),
    pub m: usize,
    pub n: usize,
    pub assemble_seconds: f64,
    pub solve_seconds: f64,
    pub modes: Vec<ModeRecord>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModeRecord {
    pub lambda: (f64, f64),
    pub omega: (f64, f64),
    pub frequency_hz: (f64, f64),
    pub residual: f64,
    pub divergence_residual: f64,
    pub dummy_stat: f64,
    pub classification: String,
    pub possible_physical_dc: bool,
    /// Edge coefficients, present when the solve saved fields.
    pub xi: Option<Vec<(f64, f64)>>,
    /// Scalar coefficients, present when the solve saved fields.
    pub zeta: Option<Vec<(f64, f64)>>,
}

fn g17(v: f64) -> String {
    format!("{v:.16e}")
}

fn pair(v: (f64, f64)) -> String {
    format!("{} {}", g17(v.0), g17(v.1))
}

impl ResultsFile {
    pub fn from_report(report: &SolveReport, with_fields: bool) -> ResultsFile {
        let tau = std::f64::consts::TAU;
        let modes = report
            .modes
            .iter()
            .map(|m| {
                let omega = m.pair.omega;
                ModeRecord {
                    lambda: (m.pair.lambda.re, m.pair.lambda.im),
                    omega: (omega.re, omega.im),
                    frequency_hz: (omega.re / tau, omega.im / tau),
                    residual: m.pair.residual,
                    divergence_residual: m.class.divergence_residual,
                    dummy_stat: m.class.dummy_stat,
                    classification: m.class.kind.label().to_string(),
                    possible_physical_dc: m.class.possible_physical_dc,
                    xi: with_fields
                        .then(|| m.pair.xi.iter().map(|z| (z.re, z.im)).collect()),
                    zeta: with_fields
                        .then(|| m.pair.zeta.iter().map(|z| (z.re, z.im)).collect()),
                }
            })
            .collect();
        ResultsFile {
            formulation: report.formulation.label().to_string(),
            h: report.h,
            beta: report.beta,
            shift: (report.shift.re, report.shift.im),
            m: report.m,
            n: report.n,
            assemble_seconds: report.assemble_seconds,
            solve_seconds: report.solve_seconds,
            modes,
        }
    }

    pub fn serialize(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{MAGIC}");
        let _ = writeln!(s, "formulation = {}", self.formulation);
        let _ = writeln!(s, "h = {}", g17(self.h));
        let _ = writeln!(s, "beta = {}", g17(self.beta));
        let _ = writeln!(s, "shift = {}", pair(self.shift));
        let _ = writeln!(s, "m = {}", self.m);
        let _ = writeln!(s, "n = {}", self.n);
        let _ = writeln!(s, "assemble_seconds = {}", g17(self.assemble_seconds));
        let _ = writeln!(s, "solve_seconds = {}", g17(self.solve_seconds));
        let _ = writeln!(s, "modes = {}", self.modes.len());
        for (i, m) in self.modes.iter().enumerate() {
            let _ = writeln!(s, "[mode {i}]");
            let _ = writeln!(s, "lambda = {}", pair(m.lambda));
            let _ = writeln!(s, "omega = {}", pair(m.omega));
            let _ = writeln!(s, "frequency_hz = {}", pair(m.frequency_hz));
            let _ = writeln!(s, "residual = {}", g17(m.residual));
            let _ = writeln!(s, "divergence_residual = {}", g17(m.divergence_residual));
            let _ = writeln!(s, "dummy_stat = {}", g17(m.dummy_stat));
            let _ = writeln!(s, "classification = {}", m.classification);
            let _ = writeln!(s, "possible_physical_dc = {}", m.possible_physical_dc);
            if let Some(xi) = &m.xi {
                let _ = write!(s, "xi =");
                for v in xi {
                    let _ = write!(s, " {} {}", g17(v.0), g17(v.1));
                }
                let _ = writeln!(s);
            }
            if let Some(zeta) = &m.zeta {
                let _ = write!(s, "zeta =");
                for v in zeta {
                    let _ = write!(s, " {} {}", g17(v.0), g17(v.1));
                }
                let _ = writeln!(s);
            }
        }
        s
    }

    pub fn parse(text: &str) -> Result<ResultsFile> {
        let mut lines = text.lines().enumerate();
        let (_, first) = lines.next().context("empty results file")?;
        if first.trim() != MAGIC {
            bail!("not a cavity-eig results file (bad header '{first}')");
        }
        let mut out = ResultsFile {
            formulation: String::new(),
            h: 0.0,
            beta: 0.0,
            shift: (0.0, 0.0),
            m: 0,
            n: 0,
            assemble_seconds: 0.0,
            solve_seconds: 0.0,
            modes: Vec::new(),
        };
        let mut expected_modes = 0usize;
        let mut current: Option<ModeRecord> = None;
        for (lineno, raw) in lines {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if line.starts_with("[mode ") {
                if let Some(rec) = current.take() {
                    out.modes.push(rec);
                }
                current = Some(ModeRecord {
                    lambda: (0.0, 0.0),
                    omega: (0.0, 0.0),
                    frequency_hz: (0.0, 0.0),
                    residual: 0.0,
                    divergence_residual: 0.0,
                    dummy_stat: 0.0,
                    classification: String::new(),
                    possible_physical_dc: false,
                    xi: None,
                    zeta: None,
                });
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .with_context(|| format!("line {}: expected 'key = value'", lineno + 1))?;
            let key = key.trim();
            let value = value.trim();
            let ctx = |what: &str| format!("line {}: bad {what} '{value}'", lineno + 1);
            let parse_f = |v: &str, what: &str| -> Result<f64> {
                v.parse::<f64>().with_context(|| ctx(what))
            };
            let parse_pair = |v: &str, what: &str| -> Result<(f64, f64)> {
                let mut it = v.split_whitespace();
                let a = it
                    .next()
                    .map(str::parse::<f64>)
                    .transpose()
                    .ok()
                    .flatten()
                    .with_context(|| ctx(what))?;
                let b = it
                    .next()
                    .map(str::parse::<f64>)
                    .transpose()
                    .ok()
                    .flatten()
                    .with_context(|| ctx(what))?;
                Ok((a, b))
            };
            let parse_vec = |v: &str, what: &str| -> Result<Vec<(f64, f64)>> {
                let nums: Result<Vec<f64>, _> =
                    v.split_whitespace().map(str::parse::<f64>).collect();
                let nums = nums.with_context(|| ctx(what))?;
                if nums.len() % 2 != 0 {
                    bail!("line {}: odd component count in {what}", lineno + 1);
                }
                Ok(nums.chunks(2).map(|c| (c[0], c[1])).collect())
            };
            match (&mut current, key) {
                (None, "formulation") => out.formulation = value.to_string(),
                (None, "h") => out.h = parse_f(value, "h")?,
                (None, "beta") => out.beta = parse_f(value, "beta")?,
                (None, "shift") => out.shift = parse_pair(value, "shift")?,
                (None, "m") => out.m = value.parse().with_context(|| ctx("m"))?,
                (None, "n") => out.n = value.parse().with_context(|| ctx("n"))?,
                (None, "assemble_seconds") => {
                    out.assemble_seconds = parse_f(value, "assemble_seconds")?
                }
                (None, "solve_seconds") => out.solve_seconds = parse_f(value, "solve_seconds")?,
                (None, "modes") => expected_modes = value.parse().with_context(|| ctx("modes"))?,
                (Some(rec), "lambda") => rec.lambda = parse_pair(value, "lambda")?,
                (Some(rec), "omega") => rec.omega = parse_pair(value, "omega")?,
                (Some(rec), "frequency_hz") => {
                    rec.frequency_hz = parse_pair(value, "frequency_hz")?
                }
                (Some(rec), "residual") => rec.residual = parse_f(value, "residual")?,
                (Some(rec), "divergence_residual") => {
                    rec.divergence_residual = parse_f(value, "divergence_residual")?
                }
                (Some(rec), "dummy_stat") => rec.dummy_stat = parse_f(value, "dummy_stat")?,
                (Some(rec), "classification") => rec.classification = value.to_string(),
                (Some(rec), "possible_physical_dc") => {
                    rec.possible_physical_dc =
                        value.parse().with_context(|| ctx("possible_physical_dc"))?
                }
                (Some(rec), "xi") => rec.xi = Some(parse_vec(value, "xi")?),
                (Some(rec), "zeta") => rec.zeta = Some(parse_vec(value, "zeta")?),
                (_, other) => bail!("line {}: unknown key '{other}'", lineno + 1),
            }
        }
        if let Some(rec) = current.take() {
            out.modes.push(rec);
        }
        if out.modes.len() != expected_modes {
            bail!(
                "results file declares {expected_modes} modes but holds {}",
                out.modes.len()
            );
        }
        Ok(out)
    }

    /// Mode eigenvectors as complex vectors, when fields were saved.
    pub fn mode_vectors(&self, index: usize) -> Option<(Vec<Complex64>, Vec<Complex64>)> {
        let rec = self.modes.get(index)?;
        let xi = rec.xi.as_ref()?;
        let zeta = rec.zeta.as_ref()?;
        Some((
            xi.iter().map(|&(re, im)| Complex64::new(re, im)).collect(),
            zeta.iter().map(|&(re, im)| Complex64::new(re, im)).collect(),
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(with_fields: bool) -> ResultsFile {
        ResultsFile {
            formulation: "h".into(),
            h: 0.1 + 1e-17,
            beta: 27.640000000000001,
            shift: (24.25, -7.56),
            m: 19,
            n: 8,
            assemble_seconds: 0.125,
            solve_seconds: 1.5,
            modes: vec![ModeRecord {
                lambda: (24.249912345678901, -7.5594012345678901),
                omega: (1.4e9, -2.2e8),
                frequency_hz: (2.2e8, -3.5e7),
                residual: 3.2e-12,
                divergence_residual: 1.1e-10,
                dummy_stat: 4.4e-17,
                classification: "physical".into(),
                possible_physical_dc: false,
                xi: with_fields.then(|| vec![(0.1, -0.2), (0.3, 0.4)]),
                zeta: with_fields.then(|| vec![(1.0 / 3.0, -2.0 / 7.0)]),
            }],
        }
    }

    #[test]
    fn roundtrip_is_lossless() {
        for with_fields in [false, true] {
            let r = sample(with_fields);
            let text = r.serialize();
            let back = ResultsFile::parse(&text).unwrap();
            assert_eq!(r, back);
        }
    }

    #[test]
    fn rejects_foreign_files() {
        assert!(ResultsFile::parse("hello\n").is_err());
        let r = sample(false);
        let mut text = r.serialize();
        text.push_str("mystery = 1\n");
        assert!(ResultsFile::parse(&text).is_err());
    }

    #[test]
    fn mode_count_mismatch_detected() {
        let r = sample(false);
        let text = r.serialize().replace("modes = 1", "modes = 2");
        assert!(ResultsFile::parse(&text).is_err());
    }
}
