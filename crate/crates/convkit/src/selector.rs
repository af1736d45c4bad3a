//! Algorithm compatibility rules, ranked selection tables, and empirical
//! autotuning.
//!
//! Not every convolution algorithm can run with every parameter set: the
//! pointwise matmul path needs a 1x1 window, Winograd needs unstrided 3x3
//! windows, and the tiled kernel is specialized for a bounded set of window
//! and stride sizes. [`supports`] encodes those rules; [`SelectorTable`] maps
//! parameter tuples to ranked algorithm lists and always resolves to a
//! compatible algorithm; [`autotune`] builds such a table by timing every
//! compatible algorithm on a set of target configurations.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use crate::bench::{run_bench, BenchResult, ConvConfig};
use crate::error::{Error, Result};
use crate::tensor::ConvParams;

/// The interchangeable convolution implementations.
///
/// `Direct` is the scalar reference; the other five are the performance
/// variants. Enum order is the deterministic tie-breaker wherever rankings
/// have to be ordered.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Algorithm {
    Direct,
    NaiveVectorized,
    Tiled,
    Im2col,
    Matmul,
    Winograd,
}

impl Algorithm {
    pub const ALL: [Algorithm; 6] = [
        Algorithm::Direct,
        Algorithm::NaiveVectorized,
        Algorithm::Tiled,
        Algorithm::Im2col,
        Algorithm::Matmul,
        Algorithm::Winograd,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Algorithm::Direct => "direct",
            Algorithm::NaiveVectorized => "naive_vectorized",
            Algorithm::Tiled => "tiled",
            Algorithm::Im2col => "im2col",
            Algorithm::Matmul => "matmul",
            Algorithm::Winograd => "winograd",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "direct" => Ok(Algorithm::Direct),
            "naive_vectorized" | "naive" => Ok(Algorithm::NaiveVectorized),
            "tiled" => Ok(Algorithm::Tiled),
            "im2col" => Ok(Algorithm::Im2col),
            "matmul" => Ok(Algorithm::Matmul),
            "winograd" => Ok(Algorithm::Winograd),
            other => Err(Error::InvalidParams(format!("unknown algorithm `{other}`"))),
        }
    }
}

/// Whether `alg` can run a convolution with these parameters.
///
/// Direct, the vectorized naive kernel, and im2col are universal fallbacks.
/// The specialized paths:
/// - `Matmul`: 1x1 window, unit stride;
/// - `Winograd`: 3x3 window, unit stride;
/// - `Tiled`: square window in {1, 3, 5} with square stride in {1, 2}.
pub fn supports(alg: Algorithm, params: &ConvParams) -> bool {
    let square_window = params.window_rows == params.window_cols;
    let square_stride = params.stride_rows == params.stride_cols;
    match alg {
        Algorithm::Direct | Algorithm::NaiveVectorized | Algorithm::Im2col => true,
        Algorithm::Matmul => {
            square_window && square_stride && params.window_rows == 1 && params.stride_rows == 1
        }
        Algorithm::Winograd => {
            square_window && square_stride && params.window_rows == 3 && params.stride_rows == 1
        }
        Algorithm::Tiled => {
            square_window
                && square_stride
                && matches!(params.window_rows, 1 | 3 | 5)
                && matches!(params.stride_rows, 1 | 2)
        }
    }
}

/// Exact-match key over the square parameter tuple
/// (window, stride, rows, cols, input features, output features).
///
/// Batch and padding are not part of the key: tables tune per layer shape,
/// not per batch size. Non-square parameters never match any key.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ConfigKey {
    pub window: usize,
    pub stride: usize,
    pub rows: usize,
    pub cols: usize,
    pub cin: usize,
    pub cout: usize,
}

impl ConfigKey {
    /// Key of a square-window, square-stride parameter set.
    pub fn of(params: &ConvParams) -> Option<ConfigKey> {
        if params.window_rows != params.window_cols || params.stride_rows != params.stride_cols {
            return None;
        }
        Some(ConfigKey {
            window: params.window_rows,
            stride: params.stride_rows,
            rows: params.input.rows,
            cols: params.input.cols,
            cin: params.input.channels,
            cout: params.features,
        })
    }

    pub fn matches(&self, params: &ConvParams) -> bool {
        ConfigKey::of(params) == Some(*self)
    }
}

/// One table entry: an exact-match predicate and its ranked algorithm list.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SelectorRule {
    pub key: ConfigKey,
    pub ranking: Vec<Algorithm>,
}

/// Ordered selection rules plus a default ranking.
///
/// Resolution scans the first matching rule's ranking for a compatible
/// algorithm, then the default ranking, and finally falls back to im2col,
/// which runs everywhere. A table therefore always yields a result and never
/// an incompatible algorithm.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SelectorTable {
    rules: Vec<SelectorRule>,
    default_ranking: Vec<Algorithm>,
}

fn check_ranking(ranking: &[Algorithm]) -> Result<()> {
    for (i, a) in ranking.iter().enumerate() {
        if ranking[..i].contains(a) {
            return Err(Error::InvalidParams(format!(
                "ranking lists {a} more than once"
            )));
        }
    }
    Ok(())
}

impl SelectorTable {
    /// Rankings must not repeat an algorithm.
    pub fn new(rules: Vec<SelectorRule>, default_ranking: Vec<Algorithm>) -> Result<Self> {
        for rule in &rules {
            check_ranking(&rule.ranking)?;
        }
        check_ranking(&default_ranking)?;
        Ok(SelectorTable { rules, default_ranking })
    }

    pub fn rules(&self) -> &[SelectorRule] {
        &self.rules
    }

    pub fn default_ranking(&self) -> &[Algorithm] {
        &self.default_ranking
    }

    /// First compatible algorithm of the first matching rule, falling through
    /// to the default ranking and ultimately to im2col.
    pub fn select(&self, params: &ConvParams) -> Algorithm {
        let rule_ranking = self
            .rules
            .iter()
            .find(|rule| rule.key.matches(params))
            .map(|rule| rule.ranking.as_slice());
        for ranking in [rule_ranking.unwrap_or(&[]), self.default_ranking.as_slice()] {
            if let Some(&alg) = ranking.iter().find(|&&a| supports(a, params)) {
                return alg;
            }
        }
        Algorithm::Im2col
    }

    /// Render in the line-oriented table format (one `K S H W Cin Cout :
    /// ranking` line per rule, then a final `default :` line).
    pub fn to_file_string(&self) -> String {
        let mut out = String::new();
        out.push_str("# selector table: `window stride rows cols cin cout : ranked algorithms`\n");
        for rule in &self.rules {
            let k = &rule.key;
            out.push_str(&format!(
                "{} {} {} {} {} {} : {}\n",
                k.window,
                k.stride,
                k.rows,
                k.cols,
                k.cin,
                k.cout,
                join_ranking(&rule.ranking)
            ));
        }
        out.push_str(&format!("default : {}\n", join_ranking(&self.default_ranking)));
        out
    }

    /// Parse the format written by [`SelectorTable::to_file_string`].
    /// `#` starts a comment; blank lines are skipped.
    pub fn parse(text: &str) -> Result<Self> {
        let mut rules = Vec::new();
        let mut default_ranking: Option<Vec<Algorithm>> = None;
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (lhs, rhs) = line.split_once(':').ok_or_else(|| Error::Parse {
                line: line_no,
                message: "expected `key : ranking`".into(),
            })?;
            let ranking = parse_ranking(rhs, line_no)?;
            let lhs = lhs.trim();
            if lhs == "default" {
                if default_ranking.is_some() {
                    return Err(Error::Parse {
                        line: line_no,
                        message: "duplicate `default` line".into(),
                    });
                }
                default_ranking = Some(ranking);
                continue;
            }
            let fields: Vec<&str> = lhs.split_whitespace().collect();
            if fields.len() != 6 {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!("expected 6 key fields, found {}", fields.len()),
                });
            }
            let mut nums = [0usize; 6];
            for (slot, field) in nums.iter_mut().zip(&fields) {
                *slot = field.parse().map_err(|_| Error::Parse {
                    line: line_no,
                    message: format!("`{field}` is not a positive integer"),
                })?;
            }
            rules.push(SelectorRule {
                key: ConfigKey {
                    window: nums[0],
                    stride: nums[1],
                    rows: nums[2],
                    cols: nums[3],
                    cin: nums[4],
                    cout: nums[5],
                },
                ranking,
            });
        }
        let default_ranking = default_ranking.ok_or_else(|| {
            Error::InvalidParams("selector table has no `default` line".into())
        })?;
        SelectorTable::new(rules, default_ranking)
    }
}

fn join_ranking(ranking: &[Algorithm]) -> String {
    ranking.iter().map(Algorithm::name).collect::<Vec<_>>().join(",")
}

fn parse_ranking(text: &str, line_no: usize) -> Result<Vec<Algorithm>> {
    let mut ranking = Vec::new();
    for part in text.split(',') {
        let part = part.trim();
        if part.is_empty() {
            continue;
        }
        let alg = Algorithm::from_str(part).map_err(|e| Error::Parse {
            line: line_no,
            message: e.to_string(),
        })?;
        ranking.push(alg);
    }
    Ok(ranking)
}

/// Rank algorithms by best observed time, ascending; ties break by enum order.
///
/// Pure argmin over recorded measurements, factored out of [`autotune`] so it
/// can be checked against synthetic timings.
pub fn rank_by_time(measurements: &[(Algorithm, u64)]) -> Vec<Algorithm> {
    let mut sorted: Vec<(Algorithm, u64)> = measurements.to_vec();
    sorted.sort_by_key(|&(alg, best_ns)| (best_ns, alg));
    sorted.into_iter().map(|(alg, _)| alg).collect()
}

/// Output of [`autotune`]: the table, every timing it was built from, and
/// warnings for measurements that failed.
#[derive(Debug)]
pub struct AutotuneResult {
    pub table: SelectorTable,
    pub measurements: Vec<BenchResult>,
    pub warnings: Vec<String>,
}

impl AutotuneResult {
    /// How often each algorithm was ranked first, across the tuned configs.
    pub fn win_counts(&self) -> Vec<(Algorithm, usize)> {
        let mut wins: HashMap<Algorithm, usize> = HashMap::new();
        for rule in self.table.rules() {
            if let Some(&winner) = rule.ranking.first() {
                *wins.entry(winner).or_insert(0) += 1;
            }
        }
        let mut counts: Vec<(Algorithm, usize)> = Algorithm::ALL
            .iter()
            .map(|&a| (a, wins.get(&a).copied().unwrap_or(0)))
            .collect();
        counts.sort_by_key(|&(alg, wins)| (usize::MAX - wins, alg));
        counts
    }
}

/// Build a selector table by timing every compatible algorithm on each
/// config and ranking by best observed time.
///
/// One exact-match rule is emitted per config, in input order; the default
/// ranking orders all algorithms by win count (ties by enum order), so it
/// always contains the universal fallbacks. Identical configs share one set
/// of measurements and therefore get identical rankings. An algorithm whose
/// measurement fails is dropped from that config's ranking and reported in
/// the warnings list.
pub fn autotune(configs: &[ConvParams], reps: usize, seed: u64) -> Result<AutotuneResult> {
    if reps == 0 {
        return Err(Error::InvalidParams("autotune requires reps >= 1".into()));
    }
    const AUTOTUNE_WARMUPS: usize = 1;

    let mut measured: HashMap<ConvParams, Vec<(Algorithm, u64)>> = HashMap::new();
    let mut measurements = Vec::new();
    let mut warnings = Vec::new();
    let mut rules = Vec::new();
    let mut wins: HashMap<Algorithm, usize> = HashMap::new();

    for (idx, params) in configs.iter().enumerate() {
        params.validate()?;
        if !measured.contains_key(params) {
            let config = ConvConfig { label: format!("tune{idx}"), params: *params };
            let mut times = Vec::new();
            for &alg in Algorithm::ALL.iter().filter(|&&a| supports(a, params)) {
                match run_bench(&config, alg, reps, AUTOTUNE_WARMUPS, seed) {
                    Ok(result) => {
                        times.push((alg, result.best_time_ns));
                        measurements.push(result);
                    }
                    Err(e) => warnings.push(format!("{}: {alg}: {e}", config.label)),
                }
            }
            measured.insert(*params, times);
        }
        let ranking = rank_by_time(&measured[params]);
        if let Some(&winner) = ranking.first() {
            *wins.entry(winner).or_insert(0) += 1;
        }
        match ConfigKey::of(params) {
            Some(key) => rules.push(SelectorRule { key, ranking }),
            None => warnings.push(format!(
                "config {idx} has a non-square window or stride and cannot be keyed; rule skipped"
            )),
        }
    }

    let mut default_ranking: Vec<Algorithm> = Algorithm::ALL.to_vec();
    default_ranking.sort_by_key(|&alg| (usize::MAX - wins.get(&alg).copied().unwrap_or(0), alg));

    Ok(AutotuneResult {
        table: SelectorTable::new(rules, default_ranking)?,
        measurements,
        warnings,
    })
}
