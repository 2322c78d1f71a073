//! Shot-by-shot simulation of the experiment and the count-table file format.
//!
//! Each shot is one heralded photon. It produces at most one click, drawn
//! from the categorical distribution over the four detectors plus "no click".

use std::fmt::Write as _;
use std::path::Path;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rayon::prelude::*;

use crate::bench::{propagate, BenchConfig, DetectorProbs};
use crate::error::{Error, Result};
use crate::qcore::StateLabel;
use crate::rng::{child_rng, chunks, stream_id};

pub const CSV_HEADER: [&str; 5] = ["state", "N0_psi", "N0_perp", "N1_psi", "N1_perp"];

/// Counts for one input state: `[N0(ψ), N0(ψ⊥), N1(ψ), N1(ψ⊥)]`.
///
/// Raw counts are whole numbers; efficiency-corrected or averaged counts may
/// be fractional.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CountsRow {
    pub label: StateLabel,
    pub counts: [f64; 4],
}

impl CountsRow {
    pub fn n0_psi(&self) -> f64 {
        self.counts[0]
    }

    pub fn n0_perp(&self) -> f64 {
        self.counts[1]
    }

    pub fn n1_psi(&self) -> f64 {
        self.counts[2]
    }

    pub fn n1_perp(&self) -> f64 {
        self.counts[3]
    }

    pub fn total(&self) -> f64 {
        self.counts.iter().sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TableMeta {
    pub phi_deg: Option<f64>,
    pub shots_per_state: Option<u64>,
    pub seed: Option<u64>,
}

/// Six rows in the fixed order H, V, D, A, R, L.
#[derive(Debug, Clone, PartialEq)]
pub struct CountsTable {
    rows: [CountsRow; 6],
    pub meta: TableMeta,
}

/// Rounds a derived angle so that e.g. 22.499999999999996 is written as 22.5.
fn tidy_degrees(deg: f64) -> f64 {
    (deg * 1e9).round() / 1e9
}

impl CountsTable {
    /// Builds a table from rows in any order; every label must appear once.
    pub fn new(rows: Vec<CountsRow>, meta: TableMeta) -> Result<Self> {
        if rows.len() != 6 {
            return Err(Error::InvalidState(format!("count table needs 6 rows, got {}", rows.len())));
        }
        let mut slots: [Option<CountsRow>; 6] = [None; 6];
        for row in rows {
            if row.counts.iter().any(|c| !c.is_finite() || *c < 0.0) {
                return Err(Error::InvalidState(format!("row {} has a negative or non-finite count", row.label)));
            }
            let slot = &mut slots[row.label.index()];
            if slot.is_some() {
                return Err(Error::InvalidState(format!("duplicate row {}", row.label)));
            }
            *slot = Some(row);
        }
        Ok(Self { rows: slots.map(|r| r.expect("six distinct labels")), meta })
    }

    pub fn rows(&self) -> &[CountsRow; 6] {
        &self.rows
    }

    pub fn row(&self, label: StateLabel) -> &CountsRow {
        &self.rows[label.index()]
    }

    pub fn total_clicks(&self) -> f64 {
        self.rows.iter().map(CountsRow::total).sum()
    }

    /// Applies `f(column, count)` to every cell.
    pub fn map_counts(&self, f: impl Fn(usize, f64) -> f64) -> Self {
        let mut rows = self.rows;
        for row in &mut rows {
            for (i, c) in row.counts.iter_mut().enumerate() {
                *c = f(i, *c);
            }
        }
        Self { rows, meta: self.meta }
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        if let Some(phi) = self.meta.phi_deg {
            writeln!(out, "# phi_deg={}", tidy_degrees(phi)).unwrap();
        }
        if let Some(shots) = self.meta.shots_per_state {
            writeln!(out, "# shots={shots}").unwrap();
        }
        if let Some(seed) = self.meta.seed {
            writeln!(out, "# seed={seed}").unwrap();
        }
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(CSV_HEADER).unwrap();
        for row in &self.rows {
            let mut rec = vec![row.label.to_string()];
            rec.extend(row.counts.iter().map(|c| c.to_string()));
            w.write_record(&rec).unwrap();
        }
        out.push_str(&String::from_utf8(w.into_inner().expect("in-memory writer")).expect("ascii"));
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut meta = TableMeta::default();
        for (i, line) in text.lines().enumerate() {
            let Some(body) = line.trim_start().strip_prefix('#') else { continue };
            let Some((key, value)) = body.split_once('=') else { continue };
            let (key, value) = (key.trim(), value.trim());
            let line_no = i as u64 + 1;
            let parse_err = |what: &str| Error::Parse { line: line_no, msg: format!("bad {what} {value:?}") };
            match key {
                "phi_deg" => meta.phi_deg = Some(value.parse().map_err(|_| parse_err("phi_deg"))?),
                "shots" => meta.shots_per_state = Some(value.parse().map_err(|_| parse_err("shots"))?),
                "seed" => meta.seed = Some(value.parse().map_err(|_| parse_err("seed"))?),
                _ => {}
            }
        }

        let mut reader = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .flexible(true)
            .from_reader(text.as_bytes());
        let header = reader.headers().map_err(|e| csv_error(&e))?.clone();
        let header_line = header.position().map_or(1, |p| p.line());
        if header.iter().ne(CSV_HEADER) {
            return Err(Error::Parse {
                line: header_line,
                msg: format!("bad header {:?}, expected {:?}", header.iter().collect::<Vec<_>>().join(","), CSV_HEADER.join(",")),
            });
        }

        let mut rows = Vec::new();
        for rec in reader.records() {
            let rec = rec.map_err(|e| csv_error(&e))?;
            let line = rec.position().map_or(0, |p| p.line());
            let err = |msg: String| Error::Parse { line, msg };
            if rec.len() != 5 {
                return Err(err(format!("expected 5 fields, found {}", rec.len())));
            }
            let label: StateLabel = rec[0].parse().map_err(err)?;
            let mut counts = [0.0f64; 4];
            for (c, field) in counts.iter_mut().zip(rec.iter().skip(1)) {
                *c = field.parse().map_err(|_| err(format!("bad count {field:?}")))?;
                if !c.is_finite() || *c < 0.0 {
                    return Err(err(format!("count {field} must be a non-negative number")));
                }
            }
            rows.push(CountsRow { label, counts });
        }
        Self::new(rows, meta).map_err(|e| match e {
            Error::InvalidState(msg) => Error::Parse { line: 0, msg },
            other => other,
        })
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_csv(&std::fs::read_to_string(path)?)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_csv())?;
        Ok(())
    }
}

fn csv_error(e: &csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line());
    Error::Parse { line, msg: e.to_string() }
}

/// Detector probabilities for each of the six states under `config`, with
/// the preparation waveplates set per state.
pub fn state_probabilities(config: &BenchConfig) -> Result<[DetectorProbs; 6]> {
    let mut out = [DetectorProbs { p: [0.0; 4] }; 6];
    for (slot, label) in out.iter_mut().zip(StateLabel::ALL) {
        let psi = label.state();
        *slot = propagate(&config.prepared_for(&psi), &psi)?;
    }
    Ok(out)
}

/// Noise-free counts: `shots × probability` in every cell.
pub fn expected_counts(config: &BenchConfig, shots_per_state: u64) -> Result<CountsTable> {
    let probs = state_probabilities(config)?;
    let rows = StateLabel::ALL
        .iter()
        .zip(probs)
        .map(|(&label, p)| CountsRow { label, counts: p.p.map(|x| x * shots_per_state as f64) })
        .collect();
    CountsTable::new(rows, TableMeta { phi_deg: Some(config.phi.to_degrees()), shots_per_state: Some(shots_per_state), seed: None })
}

/// Samples `shots_per_state` heralded photons for each input state.
///
/// Shots are split into fixed chunks; chunk `c` of state `k` draws from the
/// stream `(seed, k, c)`, so the table does not depend on the thread count.
pub fn simulate_counts(config: &BenchConfig, shots_per_state: u64, seed: u64) -> Result<CountsTable> {
    let probs = state_probabilities(config)?;
    let tasks: Vec<(usize, u32, u64)> = (0..6)
        .flat_map(|k| chunks(shots_per_state).map(move |(c, len)| (k, c, len)))
        .collect();

    let partial: Vec<(usize, [u64; 4])> = tasks
        .into_par_iter()
        .map(|(k, chunk, len)| {
            let p = probs[k];
            let weights = [p.p[0], p.p[1], p.p[2], p.p[3], p.no_click()];
            let dist = WeightedIndex::new(weights).expect("probabilities sum to one");
            let mut rng = child_rng(seed, stream_id(k as u32, chunk));
            let mut clicks = [0u64; 4];
            for _ in 0..len {
                let outcome = dist.sample(&mut rng);
                if outcome < 4 {
                    clicks[outcome] += 1;
                }
            }
            (k, clicks)
        })
        .collect();

    let mut totals = [[0u64; 4]; 6];
    for (k, clicks) in partial {
        for i in 0..4 {
            totals[k][i] += clicks[i];
        }
    }
    let rows = StateLabel::ALL
        .iter()
        .zip(totals)
        .map(|(&label, c)| CountsRow { label, counts: c.map(|x| x as f64) })
        .collect();
    CountsTable::new(
        rows,
        TableMeta { phi_deg: Some(config.phi.to_degrees()), shots_per_state: Some(shots_per_state), seed: Some(seed) },
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_8;

    fn close(a: [f64; 4], b: [f64; 4]) -> bool {
        a.iter().zip(b).all(|(x, y)| (x - y).abs() < 1e-9)
    }

    #[test]
    fn zero_shots_give_empty_table() {
        let t = simulate_counts(&BenchConfig::ideal(0.2), 0, 1).unwrap();
        assert_eq!(t.total_clicks(), 0.0);
    }

    #[test]
    fn expected_counts_examples() {
        let t = expected_counts(&BenchConfig::ideal(0.0), 100).unwrap();
        assert!(close(t.row(StateLabel::D).counts, [25.0; 4]));
        let t = expected_counts(&BenchConfig::ideal(FRAC_PI_8), 100).unwrap();
        assert!(close(t.row(StateLabel::V).counts, [50.0, 0.0, 50.0, 0.0]));
        let mut cfg = BenchConfig::ideal(FRAC_PI_8);
        cfg.eta = [0.5, 1.0, 1.0, 1.0];
        let t = expected_counts(&cfg, 100).unwrap();
        assert!(close(t.row(StateLabel::H).counts, [25.0, 0.0, 50.0, 0.0]));
    }

    #[test]
    fn basis_state_counts_at_random_guess() {
        let shots = 100_000;
        let t = simulate_counts(&BenchConfig::ideal(FRAC_PI_8), shots, 42).unwrap();
        let h = t.row(StateLabel::H);
        assert_eq!(h.n0_perp(), 0.0);
        assert_eq!(h.n1_perp(), 0.0);
        let sigma = (shots as f64 * 0.25).sqrt();
        assert!((h.n0_psi() - 50_000.0).abs() < 3.0 * sigma);
        assert!((h.n1_psi() - 50_000.0).abs() < 3.0 * sigma);
    }

    #[test]
    fn simulation_is_deterministic_for_any_thread_count() {
        let mut cfg = BenchConfig::ideal(0.25);
        cfg.visibility = 0.93;
        cfg.eta = [0.9, 0.95, 1.0, 0.8];
        cfg.dark_rate = 0.001;
        let shots = 2 * crate::rng::CHUNK_LEN + 123;
        let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let many = rayon::ThreadPoolBuilder::new().num_threads(5).build().unwrap();
        let a = one.install(|| simulate_counts(&cfg, shots, 9)).unwrap();
        let b = many.install(|| simulate_counts(&cfg, shots, 9)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.to_csv(), simulate_counts(&cfg, shots, 9).unwrap().to_csv());
        assert_ne!(a, simulate_counts(&cfg, shots, 10).unwrap());
    }

    #[test]
    fn click_totals() {
        let shots = 20_000;
        let mut cfg = BenchConfig::ideal(0.3);
        cfg.visibility = 0.4;
        let t = simulate_counts(&cfg, shots, 3).unwrap();
        assert_eq!(t.total_clicks(), 6.0 * shots as f64);

        cfg.eta = [0.8, 1.0, 1.0, 1.0];
        let t = simulate_counts(&cfg, shots, 3).unwrap();
        assert!(t.total_clicks() < 6.0 * shots as f64);
        cfg.dark_rate = 0.05;
        let t = simulate_counts(&cfg, shots, 3).unwrap();
        assert!(t.total_clicks() < 6.0 * shots as f64);
    }

    #[test]
    fn csv_format() {
        let t = simulate_counts(&BenchConfig::ideal(FRAC_PI_8), 10, 7).unwrap();
        let text = t.to_csv();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], "# phi_deg=22.5");
        assert_eq!(lines[1], "# shots=10");
        assert_eq!(lines[2], "# seed=7");
        assert_eq!(lines[3], "state,N0_psi,N0_perp,N1_psi,N1_perp");
        let labels: Vec<_> = lines[4..].iter().map(|l| l.split(',').next().unwrap()).collect();
        assert_eq!(labels, ["H", "V", "D", "A", "R", "L"]);
        assert_eq!(CountsTable::from_csv(&text).unwrap(), t);
    }

    #[test]
    fn csv_errors_name_the_problem() {
        let bad_header = "state,N0,N0_perp,N1_psi,N1_perp\nH,1,0,1,0\n";
        match CountsTable::from_csv(bad_header) {
            Err(Error::Parse { line: 1, msg }) => assert!(msg.contains("state,N0,N0_perp"), "{msg}"),
            other => panic!("{other:?}"),
        }
        let bad_value = "# phi_deg=0\nstate,N0_psi,N0_perp,N1_psi,N1_perp\nH,1,0,1,0\nV,1,x,1,0\n";
        assert!(matches!(CountsTable::from_csv(bad_value), Err(Error::Parse { line: 4, .. })));
        let negative = "state,N0_psi,N0_perp,N1_psi,N1_perp\nH,-1,0,1,0\n";
        assert!(matches!(CountsTable::from_csv(negative), Err(Error::Parse { line: 2, .. })));
        let missing = "state,N0_psi,N0_perp,N1_psi,N1_perp\nH,1,0,1,0\n";
        assert!(matches!(CountsTable::from_csv(missing), Err(Error::Parse { .. })));
        let bad_meta = "# shots=lots\nstate,N0_psi,N0_perp,N1_psi,N1_perp\n";
        assert!(matches!(CountsTable::from_csv(bad_meta), Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn sampled_counts_follow_expected_counts() {
        // Binomial oracle per cell: |n − Np| < 5σ with σ = √(Np(1−p)).
        let shots = 1_000_000;
        let mut cfg = BenchConfig::ideal(0.2);
        cfg.visibility = 0.95;
        cfg.eta = [0.9, 1.0, 0.85, 0.95];
        let probs = state_probabilities(&cfg).unwrap();
        let expected = expected_counts(&cfg, shots).unwrap();
        let (mut cells, mut within) = (0, 0);
        #[allow(clippy::needless_range_loop)]
        for seed in 0..20 {
            let t = simulate_counts(&cfg, shots, seed).unwrap();
            for k in 0..6 {
                for i in 0..4 {
                    let p = probs[k].p[i];
                    let sigma = (shots as f64 * p * (1.0 - p)).sqrt();
                    let dev = (t.rows()[k].counts[i] - expected.rows()[k].counts[i]).abs();
                    cells += 1;
                    if dev <= 5.0 * sigma {
                        within += 1;
                    }
                }
            }
        }
        assert!(within as f64 >= 0.99 * cells as f64, "{within}/{cells}");
    }
}
