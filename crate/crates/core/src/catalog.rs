//! Built-in algebra catalog, the structure-constant text format, random
//! metric sampling, and the key-value report format.
//!
//! Text format: first non-comment line `dim <n>`, then one bracket per line
//! as `i j k v` meaning mu(X_i, X_j) = v X_k with 1-based indices, i < j,
//! and v either a decimal or a rational `p/q`. `#` starts a comment.

use std::collections::BTreeMap;
use std::fmt;

use nalgebra::DMatrix;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::algebra::{act, MetricFrame, StructureTensor};
use crate::curvature::ricci;
use crate::error::Error;
use crate::invariants::{attainable_set, profile, signature, Signature, SIGNATURE_REL_TOL};
use crate::linalg;
use crate::Result;

/// One catalog entry: exact brackets plus a short provenance note.
#[derive(Debug, Clone)]
pub struct CatalogEntry {
    pub name: String,
    pub dim: usize,
    /// 1-based (i, j, k, numerator, denominator).
    pub brackets: Vec<(usize, usize, usize, i64, i64)>,
    pub note: String,
}

impl CatalogEntry {
    pub fn tensor(&self) -> Result<StructureTensor> {
        let entries: Vec<(usize, usize, usize, f64)> = self
            .brackets
            .iter()
            .map(|&(i, j, k, p, q)| (i - 1, j - 1, k - 1, p as f64 / q as f64))
            .collect();
        StructureTensor::new(self.dim, &entries)
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("# {}\ndim {}\n", self.note, self.dim);
        for &(i, j, k, p, q) in &self.brackets {
            if q == 1 {
                out.push_str(&format!("{i} {j} {k} {p}\n"));
            } else {
                out.push_str(&format!("{i} {j} {k} {p}/{q}\n"));
            }
        }
        out
    }
}

fn entry(
    name: &str,
    dim: usize,
    brackets: &[(usize, usize, usize, i64)],
    note: &str,
) -> CatalogEntry {
    CatalogEntry {
        name: name.to_string(),
        dim,
        brackets: brackets
            .iter()
            .map(|&(i, j, k, v)| (i, j, k, v, 1))
            .collect(),
        note: note.to_string(),
    }
}

fn fixed_entries() -> Vec<CatalogEntry> {
    vec![
        entry("heisenberg_3", 3, &[(1, 2, 3, 1)], "Heisenberg algebra"),
        entry(
            "heisenberg_5",
            5,
            &[(1, 2, 5, 1), (3, 4, 5, 1)],
            "5-dimensional Heisenberg algebra",
        ),
        entry(
            "L_5_3",
            5,
            &[(1, 2, 3, 1), (1, 3, 4, 1)],
            "dim-4 filiform algebra plus a 1-dimensional abelian factor",
        ),
        entry(
            "filiform_4",
            4,
            &[(1, 2, 3, 1), (1, 3, 4, 1)],
            "filiform algebra of dimension 4",
        ),
        entry(
            "filiform_5",
            5,
            &[(1, 2, 3, 1), (1, 3, 4, 1), (1, 4, 5, 1)],
            "filiform algebra of dimension 5",
        ),
        entry(
            "filiform_6",
            6,
            &[(1, 2, 3, 1), (1, 3, 4, 1), (1, 4, 5, 1), (1, 5, 6, 1)],
            "filiform algebra of dimension 6",
        ),
        entry(
            "free_2step_3gen",
            6,
            &[(1, 2, 4, 1), (1, 3, 5, 1), (2, 3, 6, 1)],
            "free 2-step nilpotent algebra on 3 generators",
        ),
        entry(
            "heisenberg_3_r1",
            4,
            &[(1, 2, 3, 1)],
            "Heisenberg algebra plus a 1-dimensional abelian factor",
        ),
        entry(
            "heisenberg_3_r2",
            5,
            &[(1, 2, 3, 1)],
            "Heisenberg algebra plus a 2-dimensional abelian factor",
        ),
        entry(
            "L_5_3_r1",
            6,
            &[(1, 2, 3, 1), (1, 3, 4, 1)],
            "dim-4 filiform algebra plus a 2-dimensional abelian factor",
        ),
        entry(
            "filiform_5_r1",
            6,
            &[(1, 2, 3, 1), (1, 3, 4, 1), (1, 4, 5, 1)],
            "dim-5 filiform algebra plus a 1-dimensional abelian factor",
        ),
        entry(
            "double_heisenberg_6",
            6,
            &[(1, 2, 3, 1), (4, 5, 6, 1)],
            "direct sum of two Heisenberg algebras",
        ),
    ]
}

/// Names of every built-in algebra, sorted.
pub fn builtin_names() -> Vec<String> {
    let mut names: Vec<String> = fixed_entries().into_iter().map(|e| e.name).collect();
    for n in 1..=9 {
        names.push(format!("abelian_{n}"));
    }
    names.sort();
    names
}

/// Looks up a built-in algebra by name. `abelian_<n>` is parametric for
/// 1 <= n <= 9.
pub fn builtin(name: &str) -> Result<CatalogEntry> {
    if let Some(rest) = name.strip_prefix("abelian_") {
        if let Ok(n) = rest.parse::<usize>() {
            if (1..=9).contains(&n) {
                return Ok(CatalogEntry {
                    name: name.to_string(),
                    dim: n,
                    brackets: vec![],
                    note: format!("abelian algebra of dimension {n}"),
                });
            }
        }
    }
    fixed_entries()
        .into_iter()
        .find(|e| e.name == name)
        .ok_or_else(|| Error::UnknownAlgebra {
            name: name.to_string(),
            available: builtin_names().join(", "),
        })
}

/// Parses the structure-constant text format.
pub fn load(text: &str) -> Result<StructureTensor> {
    let mut dim: Option<usize> = None;
    let mut entries: Vec<(usize, usize, usize, f64)> = Vec::new();
    let mut seen: Vec<(usize, usize, usize)> = Vec::new();
    for (line_no, raw) in text.lines().enumerate() {
        let line_no = line_no + 1;
        let line = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let parse_err = |msg: String| Error::Parse { line: line_no, msg };
        if dim.is_none() {
            let mut parts = line.split_whitespace();
            if parts.next() != Some("dim") {
                return Err(parse_err("expected `dim <n>` as the first entry".into()));
            }
            let n: usize = parts
                .next()
                .ok_or_else(|| parse_err("missing dimension value".into()))?
                .parse()
                .map_err(|_| parse_err("dimension is not a positive integer".into()))?;
            if n == 0 {
                return Err(parse_err("dimension must be positive".into()));
            }
            if parts.next().is_some() {
                return Err(parse_err("trailing tokens after dimension".into()));
            }
            dim = Some(n);
            continue;
        }
        let n = dim.unwrap();
        let tokens: Vec<&str> = line.split_whitespace().collect();
        if tokens.len() != 4 {
            return Err(parse_err(format!(
                "expected `i j k v`, found {} tokens",
                tokens.len()
            )));
        }
        let idx = |t: &str, what: &str| -> Result<usize> {
            let v: usize = t
                .parse()
                .map_err(|_| parse_err(format!("{what} is not an integer")))?;
            if v < 1 || v > n {
                return Err(parse_err(format!("{what} {v} out of range 1..={n}")));
            }
            Ok(v)
        };
        let i = idx(tokens[0], "index i")?;
        let j = idx(tokens[1], "index j")?;
        let k = idx(tokens[2], "index k")?;
        if i >= j {
            return Err(parse_err(format!(
                "indices must satisfy i < j, got {i} {j}"
            )));
        }
        let v = parse_value(tokens[3]).ok_or_else(|| {
            parse_err(format!("value {:?} is neither decimal nor p/q", tokens[3]))
        })?;
        if seen.contains(&(i, j, k)) {
            return Err(parse_err(format!("duplicate entry for ({i}, {j}, {k})")));
        }
        seen.push((i, j, k));
        entries.push((i - 1, j - 1, k - 1, v));
    }
    let dim = dim.ok_or(Error::Parse {
        line: text.lines().count().max(1),
        msg: "missing `dim <n>` line".into(),
    })?;
    StructureTensor::new(dim, &entries)
}

fn parse_value(token: &str) -> Option<f64> {
    if let Some((p, q)) = token.split_once('/') {
        let p: f64 = p.parse().ok()?;
        let q: f64 = q.parse().ok()?;
        if q == 0.0 {
            return None;
        }
        return Some(p / q);
    }
    token.parse().ok()
}

/// Serialises a tensor; `load(save(mu))` reproduces `mu` exactly.
pub fn save(mu: &StructureTensor) -> String {
    let n = mu.dim();
    let mut out = format!("dim {n}\n");
    for i in 0..n {
        for j in (i + 1)..n {
            for k in 0..n {
                let v = mu.tensor().get(i, j, k);
                if v != 0.0 {
                    out.push_str(&format!("{} {} {} {:?}\n", i + 1, j + 1, k + 1, v));
                }
            }
        }
    }
    out
}

/// Observed signature counts for seeded random metrics on one algebra.
#[derive(Debug, Clone)]
pub struct SampleReport {
    pub algebra: String,
    pub n_samples: usize,
    pub seed: u64,
    pub counts: BTreeMap<Signature, usize>,
    /// Sample indices whose signature falls outside the attainable set.
    pub violations: Vec<(usize, Signature)>,
}

/// Random frame `exp(S) (I + N)` with S symmetric standard normal and N
/// strictly upper triangular scaled by 0.5, from a dedicated stream of the
/// seeded generator.
pub fn random_frame(dim: usize, rng: &mut ChaCha8Rng) -> MetricFrame {
    let mut s = DMatrix::zeros(dim, dim);
    for i in 0..dim {
        for j in i..dim {
            let v: f64 = rng.sample(StandardNormal);
            s[(i, j)] = v;
            s[(j, i)] = v;
        }
    }
    let mut unipotent = DMatrix::identity(dim, dim);
    for i in 0..dim {
        for j in (i + 1)..dim {
            unipotent[(i, j)] = 0.5 * rng.sample::<f64, _>(StandardNormal);
        }
    }
    let h = linalg::matrix_exp(&s) * unipotent;
    MetricFrame::new(h).expect("sampled frame is invertible")
}

/// Draws `n` seeded random metrics, recording the signature of each Ricci
/// endomorphism. Identical `(mu, n, seed)` produce identical reports; each
/// sample uses its own generator stream.
pub fn sample_metrics(
    mu: &StructureTensor,
    algebra: &str,
    n: usize,
    seed: u64,
) -> Result<SampleReport> {
    sample_metrics_with_tol(mu, algebra, n, seed, SIGNATURE_REL_TOL)
}

/// As `sample_metrics`, with an explicit eigenvalue classification tolerance.
pub fn sample_metrics_with_tol(
    mu: &StructureTensor,
    algebra: &str,
    n: usize,
    seed: u64,
    sig_tol: f64,
) -> Result<SampleReport> {
    let p = profile(mu)?;
    let admissible = attainable_set(&p);
    let mut counts: BTreeMap<Signature, usize> = BTreeMap::new();
    let mut violations = Vec::new();
    for idx in 0..n {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(idx as u64);
        let frame = random_frame(mu.dim(), &mut rng);
        let nu = act(&frame, mu)?;
        let sig = signature(ricci(&nu).matrix(), sig_tol)?;
        *counts.entry(sig).or_insert(0) += 1;
        if !admissible.contains(&sig) {
            violations.push((idx, sig));
        }
    }
    Ok(SampleReport {
        algebra: algebra.to_string(),
        n_samples: n,
        seed,
        counts,
        violations,
    })
}

/// Random 2-step nilpotent bracket: `gens` generators mapping into a
/// `center_dim`-dimensional central block. Always satisfies the Jacobi
/// identity since all double brackets vanish.
pub fn random_two_step(gens: usize, center_dim: usize, rng: &mut ChaCha8Rng) -> StructureTensor {
    let dim = gens + center_dim;
    let mut entries = Vec::new();
    for i in 0..gens {
        for j in (i + 1)..gens {
            for k in gens..dim {
                let v: f64 = rng.sample(StandardNormal);
                entries.push((i, j, k, v));
            }
        }
    }
    StructureTensor::new(dim, &entries).expect("two-step tensors are nilpotent")
}

/// Ordered key-value report with stable field order; the machine-readable
/// output format of the command-line tools.
#[derive(Debug, Clone, Default)]
pub struct Report {
    fields: Vec<(String, String)>,
}

impl Report {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, key: &str, value: impl fmt::Display) {
        self.fields.push((key.to_string(), value.to_string()));
    }

    pub fn fields(&self) -> &[(String, String)] {
        &self.fields
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, v) in &self.fields {
            writeln!(f, "{k} = {v}")?;
        }
        Ok(())
    }
}
