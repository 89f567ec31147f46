//! Reproducible synthetic data generators (scalar and matrix), the
//! time-varying scenarios used in the comparisons, and the average
//! conditional mean path needed to score coverage.
//!
//! All randomness flows through a seeded counter-based generator
//! (ChaCha12), so identical (spec, seed, horizon) triples produce identical
//! streams regardless of thread count or platform.

use std::io::BufRead;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::Distribution;

use crate::error::{CsError, Result};
use crate::matrix::SymMatrix;

#[derive(Debug, Clone, PartialEq)]
pub enum DistKind {
    Bernoulli(f64),
    Beta { a: f64, b: f64 },
    Uniform,
    /// Value 1 with probability eps, else (mu - eps)/(1 - eps); mean mu.
    TwoPoint { mu: f64, eps: f64 },
    /// Point mass.
    Constant(f64),
    /// Bernoulli(p1) for the first frac of the horizon, then Bernoulli(p2).
    Switch { p1: f64, p2: f64, frac: f64 },
    /// Bernoulli(p_t) with p_t = 0.5 + 0.4 sin(2 pi t / P), P = horizon/4,
    /// clipped to [0.1, 0.9].
    Sinusoid,
}

#[derive(Debug, Clone)]
pub struct DistributionSpec {
    pub kind: DistKind,
    pub seed: u64,
}

impl DistributionSpec {
    pub fn new(kind: DistKind, seed: u64) -> Result<Self> {
        let spec = Self { kind, seed };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let prob = |p: f64, name: &str| {
            if (0.0..=1.0).contains(&p) {
                Ok(())
            } else {
                Err(CsError::Config(format!("{name} must lie in [0,1], got {p}")))
            }
        };
        match &self.kind {
            DistKind::Bernoulli(p) => prob(*p, "p"),
            DistKind::Beta { a, b } => {
                if *a > 0.0 && *b > 0.0 {
                    Ok(())
                } else {
                    Err(CsError::Config(format!("beta parameters must be positive, got ({a},{b})")))
                }
            }
            DistKind::Uniform | DistKind::Sinusoid => Ok(()),
            DistKind::TwoPoint { mu, eps } => {
                if !(0.0 < *mu && *mu < 1.0) {
                    return Err(CsError::Config(format!("mu must lie in (0,1), got {mu}")));
                }
                if !(0.0 < *eps && *eps < *mu) {
                    return Err(CsError::Config(format!("eps must lie in (0,mu), got {eps}")));
                }
                Ok(())
            }
            DistKind::Constant(c) => prob(*c, "constant value"),
            DistKind::Switch { p1, p2, frac } => {
                prob(*p1, "p1")?;
                prob(*p2, "p2")?;
                if 0.0 < *frac && *frac < 1.0 {
                    Ok(())
                } else {
                    Err(CsError::Config(format!("switch frac must lie in (0,1), got {frac}")))
                }
            }
        }
    }

    /// The per-step conditional mean at 1-based time t over the horizon.
    pub fn mean_at(&self, t: u64, horizon: u64) -> f64 {
        match &self.kind {
            DistKind::Bernoulli(p) => *p,
            DistKind::Beta { a, b } => a / (a + b),
            DistKind::Uniform => 0.5,
            DistKind::TwoPoint { mu, .. } => *mu,
            DistKind::Constant(c) => *c,
            DistKind::Switch { p1, p2, frac } => {
                if (t as f64) <= frac * horizon as f64 {
                    *p1
                } else {
                    *p2
                }
            }
            DistKind::Sinusoid => sinusoid_p(t, horizon),
        }
    }
}

fn sinusoid_p(t: u64, horizon: u64) -> f64 {
    let period = (horizon as f64 / 4.0).max(1.0);
    let p = 0.5 + 0.4 * (2.0 * std::f64::consts::PI * t as f64 / period).sin();
    p.clamp(0.1, 0.9)
}

/// Per-step conditional means and their running averages
/// mu_t = t^{-1} sum_{j<=t} m_j (the quantity the sequences cover).
#[derive(Debug, Clone)]
pub struct MeanPath {
    pub means: Vec<f64>,
    pub running: Vec<f64>,
}

impl MeanPath {
    fn from_means(means: Vec<f64>) -> Self {
        let mut running = Vec::with_capacity(means.len());
        let mut acc = 0.0;
        for (i, &m) in means.iter().enumerate() {
            acc += m;
            running.push(acc / (i + 1) as f64);
        }
        Self { means, running }
    }

    /// mu_t at 1-based t.
    pub fn mu(&self, t: u64) -> f64 {
        self.running[(t - 1) as usize]
    }
}

/// Draws a full path and the exact mean path it targets.
pub fn sample_path(spec: &DistributionSpec, horizon: u64) -> Result<(Vec<f64>, MeanPath)> {
    spec.validate()?;
    if horizon == 0 {
        return Err(CsError::Config("horizon must be at least 1".into()));
    }
    let mut rng = ChaCha12Rng::seed_from_u64(spec.seed);
    let mut xs = Vec::with_capacity(horizon as usize);
    let mut means = Vec::with_capacity(horizon as usize);

    match &spec.kind {
        DistKind::Beta { a, b } => {
            let beta = rand_distr::Beta::new(*a, *b)
                .map_err(|e| CsError::Config(format!("beta parameters rejected: {e}")))?;
            for t in 1..=horizon {
                xs.push(beta.sample(&mut rng));
                means.push(spec.mean_at(t, horizon));
            }
        }
        _ => {
            for t in 1..=horizon {
                let m = spec.mean_at(t, horizon);
                let x = match &spec.kind {
                    DistKind::Bernoulli(_) | DistKind::Switch { .. } | DistKind::Sinusoid => {
                        f64::from(rng.gen_bool(m) as u8)
                    }
                    DistKind::Uniform => rng.gen::<f64>(),
                    DistKind::TwoPoint { mu, eps } => {
                        if rng.gen_bool(*eps) {
                            1.0
                        } else {
                            (mu - eps) / (1.0 - eps)
                        }
                    }
                    DistKind::Constant(c) => *c,
                    DistKind::Beta { .. } => unreachable!(),
                };
                xs.push(x);
                means.push(m);
            }
        }
    }
    Ok((xs, MeanPath::from_means(means)))
}

/// Matrix stream generators with eigenvalues in [0,1].
#[derive(Debug, Clone, PartialEq)]
pub enum MatrixGenKind {
    /// Independent Bernoulli(p) diagonal entries in the standard basis.
    DiagonalBernoulli { p: f64 },
    /// Iid Beta(a,b) eigenvalues conjugated by a fixed random orthogonal
    /// basis derived from the seed. Mean matrix = (a/(a+b)) I.
    RotatedBeta { a: f64, b: f64 },
}

/// Fixed orthogonal matrix from a derived seed: Gram-Schmidt on standard
/// normal columns.
fn random_orthogonal(d: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha12Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    let normal = rand_distr::StandardNormal;
    let mut cols: Vec<Vec<f64>> = Vec::with_capacity(d);
    for _ in 0..d {
        loop {
            let mut v: Vec<f64> = (0..d).map(|_| normal.sample(&mut rng)).collect();
            for u in &cols {
                let dot: f64 = v.iter().zip(u).map(|(a, b)| a * b).sum();
                for (vi, ui) in v.iter_mut().zip(u) {
                    *vi -= dot * ui;
                }
            }
            let norm: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > 1e-8 {
                for vi in &mut v {
                    *vi /= norm;
                }
                cols.push(v);
                break;
            }
        }
    }
    let mut q = vec![0.0; d * d];
    for (j, col) in cols.iter().enumerate() {
        for i in 0..d {
            q[i * d + j] = col[i];
        }
    }
    q
}

/// Samples a matrix stream and returns it with the (constant) mean matrix.
pub fn matrix_sample_path(
    dim: usize,
    kind: &MatrixGenKind,
    seed: u64,
    horizon: u64,
) -> Result<(Vec<SymMatrix>, SymMatrix)> {
    if dim == 0 {
        return Err(CsError::Config("matrix dimension must be positive".into()));
    }
    if horizon == 0 {
        return Err(CsError::Config("horizon must be at least 1".into()));
    }
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    match kind {
        MatrixGenKind::DiagonalBernoulli { p } => {
            if !(0.0..=1.0).contains(p) {
                return Err(CsError::Config(format!("p must lie in [0,1], got {p}")));
            }
            let mut out = Vec::with_capacity(horizon as usize);
            for _ in 0..horizon {
                let mut e = vec![0.0; dim * dim];
                for i in 0..dim {
                    e[i * dim + i] = f64::from(rng.gen_bool(*p) as u8);
                }
                out.push(SymMatrix::new(dim, e)?);
            }
            Ok((out, SymMatrix::scaled_identity(dim, *p)))
        }
        MatrixGenKind::RotatedBeta { a, b } => {
            let beta = rand_distr::Beta::new(*a, *b)
                .map_err(|e| CsError::Config(format!("beta parameters rejected: {e}")))?;
            let q = random_orthogonal(dim, seed);
            let mut out = Vec::with_capacity(horizon as usize);
            for _ in 0..horizon {
                let lambda: Vec<f64> = (0..dim).map(|_| beta.sample(&mut rng)).collect();
                let mut e = vec![0.0; dim * dim];
                for i in 0..dim {
                    for j in i..dim {
                        let mut acc = 0.0;
                        for k in 0..dim {
                            acc += q[i * dim + k] * lambda[k] * q[j * dim + k];
                        }
                        e[i * dim + j] = acc;
                        e[j * dim + i] = acc;
                    }
                }
                out.push(SymMatrix::new(dim, e)?);
            }
            Ok((out, SymMatrix::scaled_identity(dim, a / (a + b))))
        }
    }
}

/// Reads one scalar observation per line; blank lines and `#` comments are
/// skipped. Values must lie in [0,1].
pub fn ingest_scalar_csv(path: &Path) -> Result<Vec<f64>> {
    let file = std::fs::File::open(path)?;
    let mut out = Vec::new();
    for (idx, line) in std::io::BufReader::new(file).lines().enumerate() {
        let line = line?;
        let lineno = idx + 1;
        let s = line.trim();
        if s.is_empty() || s.starts_with('#') {
            continue;
        }
        let x: f64 = s.parse().map_err(|e| CsError::Parse {
            line: lineno,
            msg: format!("expected a number, got {s:?} ({e})"),
        })?;
        if !(0.0..=1.0).contains(&x) {
            return Err(CsError::Data {
                line: lineno,
                msg: format!("value {x} outside [0,1]"),
            });
        }
        out.push(x);
    }
    Ok(out)
}

/// Reads a matrix stream: a header line `d=<dim>` followed by one row per
/// observation with d*d comma-separated row-major entries. Symmetry and
/// the [0,1] eigenvalue range are validated per row.
pub fn ingest_matrix_csv(path: &Path) -> Result<(usize, Vec<SymMatrix>)> {
    let file = std::fs::File::open(path)?;
    let mut dim: Option<usize> = None;
    let mut out = Vec::new();
    for (idx, line) in std::io::BufReader::new(file).lines().enumerate() {
        let line = line?;
        let lineno = idx + 1;
        let s = line.trim();
        if s.is_empty() || s.starts_with('#') {
            continue;
        }
        let Some(d) = dim else {
            let Some(val) = s.strip_prefix("d=") else {
                return Err(CsError::Parse {
                    line: lineno,
                    msg: format!("expected header `d=<dim>`, got {s:?}"),
                });
            };
            let d: usize = val.trim().parse().map_err(|e| CsError::Parse {
                line: lineno,
                msg: format!("bad dimension {val:?} ({e})"),
            })?;
            if d == 0 {
                return Err(CsError::Data { line: lineno, msg: "dimension must be positive".into() });
            }
            dim = Some(d);
            continue;
        };
        let entries: Vec<f64> = s
            .split(',')
            .map(|tok| {
                tok.trim().parse().map_err(|e| CsError::Parse {
                    line: lineno,
                    msg: format!("expected a number, got {tok:?} ({e})"),
                })
            })
            .collect::<Result<_>>()?;
        if entries.len() != d * d {
            return Err(CsError::Data {
                line: lineno,
                msg: format!("expected {} entries, got {}", d * d, entries.len()),
            });
        }
        let m = SymMatrix::new(d, entries).map_err(|e| CsError::Data {
            line: lineno,
            msg: e.to_string(),
        })?;
        let eig = crate::matrix::sym_eig(&m)?;
        for &l in &eig.eigenvalues {
            if !(-1e-9..=1.0 + 1e-9).contains(&l) {
                return Err(CsError::Data {
                    line: lineno,
                    msg: format!("eigenvalue {l} outside [0,1]"),
                });
            }
        }
        out.push(m);
    }
    match dim {
        Some(d) => Ok((d, out)),
        None => Err(CsError::Parse { line: 0, msg: "missing `d=<dim>` header".into() }),
    }
}
