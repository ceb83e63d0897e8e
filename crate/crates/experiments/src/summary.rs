//! Summary tables and property checks.

use std::fmt::Write;

use fplab_core::RunRecord;

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    pub fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Self { name: name.into(), passed, detail: detail.into() }
    }
}

/// Text table plus checks. Rendering is a pure function of the numbers, so identical
/// runs give byte-identical summaries.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Summary {
    pub experiment: String,
    pub config_hash: String,
    pub header: String,
    pub rows: Vec<String>,
    pub notes: Vec<String>,
    pub checks: Vec<Check>,
}

impl Summary {
    pub fn new(experiment: &str, config_hash: &str, header: impl Into<String>) -> Self {
        Self { experiment: experiment.into(), config_hash: config_hash.into(), header: header.into(), ..Self::default() }
    }

    pub fn row(&mut self, r: impl Into<String>) {
        self.rows.push(r.into());
    }

    pub fn note(&mut self, n: impl Into<String>) {
        self.notes.push(n.into());
    }

    pub fn check(&mut self, c: Check) {
        self.checks.push(c);
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "experiment {}  config {}", self.experiment, self.config_hash);
        if !self.header.is_empty() {
            let _ = writeln!(s, "{}", self.header);
        }
        for r in &self.rows {
            let _ = writeln!(s, "{r}");
        }
        for n in &self.notes {
            let _ = writeln!(s, "# {n}");
        }
        for c in &self.checks {
            let _ = writeln!(s, "check {:<28} {}  {}", c.name, if c.passed { "PASS" } else { "FAIL" }, c.detail);
        }
        s
    }
}

/// First-crossing epochs `T(k)` for each key.
pub fn crossings(r: &RunRecord, keys: &[f64], threshold: f64) -> Vec<Option<u64>> {
    keys.iter().map(|&k| r.first_crossing(k, threshold)).collect()
}

/// `None` (never crossed) counts as later than every epoch.
fn t_value(t: Option<u64>) -> f64 {
    t.map_or(f64::INFINITY, |v| v as f64)
}

/// `T(k_1) < T(k_2) < …` with every key crossed within the budget.
pub fn strictly_ordered(ts: &[Option<u64>]) -> bool {
    ts.iter().all(Option::is_some) && ts.windows(2).all(|w| w[0] < w[1])
}

pub fn fmt_t(t: Option<u64>) -> String {
    t.map_or_else(|| "-".to_string(), |v| v.to_string())
}

pub fn fmt_ts(ts: &[Option<u64>]) -> String {
    ts.iter().map(|t| format!("{:>8}", fmt_t(*t))).collect::<Vec<_>>().join(" ")
}

pub fn fmt_num(v: f64) -> String {
    format!("{v:.4e}")
}

/// Fraction of `true` entries.
pub fn fraction(flags: &[bool]) -> f64 {
    if flags.is_empty() {
        return 0.0;
    }
    flags.iter().filter(|&&f| f).count() as f64 / flags.len() as f64
}

/// Holds when at least `need` of the seeds satisfy the property.
pub fn seed_check(name: &str, flags: &[bool], need: f64) -> Check {
    let hits = flags.iter().filter(|&&f| f).count();
    Check::new(name, fraction(flags) >= need - 1e-12, format!("{hits}/{} seeds (need {:.0}%)", flags.len(), need * 100.0))
}

/// Median with the upper middle element for even counts; infinities sort last.
pub fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        let (a, b) = (v[n / 2 - 1], v[n / 2]);
        if a.is_infinite() || b.is_infinite() {
            b
        } else {
            0.5 * (a + b)
        }
    }
}

pub fn t_or_inf(t: Option<u64>) -> f64 {
    t_value(t)
}

/// Total variation `Σ |v_{i+1} − v_i|` of a sampled curve.
pub fn total_variation(v: &[f64]) -> f64 {
    v.windows(2).map(|w| (w[1] - w[0]).abs()).sum()
}

/// Ranks starting at 0, ties sharing their average rank.
pub fn ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut out = vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        for &k in &idx[i..=j] {
            out[k] = (i + j) as f64 / 2.0;
        }
        i = j + 1;
    }
    out
}

/// Spearman rank correlation.
pub fn spearman(a: &[f64], b: &[f64]) -> f64 {
    correlation(&ranks(a), &ranks(b))
}

/// Pearson correlation; zero when either side is constant.
pub fn correlation(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().min(b.len());
    if n == 0 {
        return 0.0;
    }
    let ma = a[..n].iter().sum::<f64>() / n as f64;
    let mb = b[..n].iter().sum::<f64>() / n as f64;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for i in 0..n {
        let (x, y) = (a[i] - ma, b[i] - mb);
        sab += x * y;
        saa += x * x;
        sbb += y * y;
    }
    if saa == 0.0 || sbb == 0.0 {
        0.0
    } else {
        sab / (saa * sbb).sqrt()
    }
}
