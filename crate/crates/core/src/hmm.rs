//! Discrete first-order hidden Markov models.
//!
//! State 0 is the virtual initial state and the last state is the virtual
//! terminal state; neither emits. Row 0 of the transition matrix is the
//! initial distribution over emitting states. Emitting rows distribute their
//! mass over emitting successors only, so the terminal state is a sequence
//! anchor that closes every path with probability one.
//!
//! Decoding and likelihoods run in log space with `-inf` for zero.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model_io::ModelFile;

pub const START: &str = "Start";
pub const END: &str = "End";

const BUILD_TOLERANCE: f64 = 1e-9;
const LOAD_TOLERANCE: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HmmModel {
    states: Vec<String>,
    symbols: Vec<String>,
    trans: Vec<Vec<f64>>,
    emit: Vec<Vec<f64>>,
}

/// A labeled training sequence: hidden state names aligned with symbols.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LabeledSequence {
    pub states: Vec<String>,
    pub symbols: Vec<String>,
}

impl LabeledSequence {
    pub fn new<S: Into<String>, T: Into<String>>(
        states: impl IntoIterator<Item = S>,
        symbols: impl IntoIterator<Item = T>,
    ) -> Self {
        LabeledSequence {
            states: states.into_iter().map(Into::into).collect(),
            symbols: symbols.into_iter().map(Into::into).collect(),
        }
    }
}

fn ln(p: f64) -> f64 {
    if p > 0.0 {
        p.ln()
    } else {
        f64::NEG_INFINITY
    }
}

fn log_sum_exp(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let max = values.clone().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + values.map(|v| (v - max).exp()).sum::<f64>().ln()
}

impl HmmModel {
    /// Builds a model from the emitting-state view: `initial` over emitting
    /// states, `trans` between emitting states, `emit` per emitting state.
    pub fn new(
        states: Vec<String>,
        symbols: Vec<String>,
        initial: Vec<f64>,
        trans: Vec<Vec<f64>>,
        emit: Vec<Vec<f64>>,
    ) -> Result<Self> {
        let k = states.len();
        let n = k + 2;
        let m = symbols.len();
        if initial.len() != k || trans.len() != k || emit.len() != k {
            return Err(Error::InvalidModel(format!(
                "{k} states but {} initial, {} transition and {} emission rows",
                initial.len(),
                trans.len(),
                emit.len()
            )));
        }
        let mut full_states = Vec::with_capacity(n);
        full_states.push(START.to_string());
        full_states.extend(states);
        full_states.push(END.to_string());

        let mut full_trans = vec![vec![0.0; n]; n];
        full_trans[0][1..=k].copy_from_slice(&initial);
        for (i, row) in trans.into_iter().enumerate() {
            if row.len() != k {
                return Err(Error::InvalidModel(format!("transition row {i} has {} entries", row.len())));
            }
            full_trans[i + 1][1..=k].copy_from_slice(&row);
        }
        full_trans[n - 1][n - 1] = 1.0;

        let mut full_emit = vec![vec![0.0; m]; n];
        for (i, row) in emit.into_iter().enumerate() {
            if row.len() != m {
                return Err(Error::InvalidModel(format!("emission row {i} has {} entries", row.len())));
            }
            full_emit[i + 1] = row;
        }
        let model = HmmModel {
            states: full_states,
            symbols,
            trans: full_trans,
            emit: full_emit,
        };
        model.check(BUILD_TOLERANCE)?;
        Ok(model)
    }

    fn check(&self, tol: f64) -> Result<()> {
        let n = self.states.len();
        let m = self.symbols.len();
        if n < 3 {
            return Err(Error::InvalidModel("a model needs at least one emitting state".into()));
        }
        if self.states.first().map(String::as_str) != Some(START)
            || self.states.last().map(String::as_str) != Some(END)
        {
            return Err(Error::InvalidModel("first and last states must be Start and End".into()));
        }
        let mut seen = std::collections::BTreeSet::new();
        if !self.states.iter().all(|s| seen.insert(s)) {
            return Err(Error::InvalidModel("duplicate state name".into()));
        }
        let mut seen = std::collections::BTreeSet::new();
        if m == 0 || !self.symbols.iter().all(|s| seen.insert(s)) {
            return Err(Error::InvalidModel("empty or duplicate symbol alphabet".into()));
        }
        if self.trans.len() != n
            || self.trans.iter().any(|r| r.len() != n)
            || self.emit.len() != n
            || self.emit.iter().any(|r| r.len() != m)
        {
            return Err(Error::InvalidModel("matrix dimensions do not match alphabets".into()));
        }
        let all = self.trans.iter().chain(&self.emit).flatten();
        if all.clone().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::InvalidModel("negative or non-finite probability".into()));
        }
        for i in 0..n - 1 {
            if self.trans[i][0] != 0.0 || self.trans[i][n - 1] != 0.0 {
                return Err(Error::InvalidModel(format!(
                    "state `{}` transitions into a virtual state",
                    self.states[i]
                )));
            }
        }
        if self.trans[n - 1][n - 1] != 1.0 || self.emit[0].iter().chain(&self.emit[n - 1]).any(|&p| p != 0.0) {
            return Err(Error::InvalidModel("virtual states must not emit and End must absorb".into()));
        }
        for i in 0..n - 1 {
            let sum: f64 = self.trans[i].iter().sum();
            if (sum - 1.0).abs() > tol {
                return Err(Error::NotStochastic {
                    matrix: "transition",
                    row: self.states[i].clone(),
                    sum,
                });
            }
        }
        for i in 1..n - 1 {
            let sum: f64 = self.emit[i].iter().sum();
            if (sum - 1.0).abs() > tol {
                return Err(Error::NotStochastic {
                    matrix: "emission",
                    row: self.states[i].clone(),
                    sum,
                });
            }
        }
        Ok(())
    }

    /// All state names, virtual states included.
    pub fn states(&self) -> &[String] {
        &self.states
    }

    pub fn symbols(&self) -> &[String] {
        &self.symbols
    }

    /// Indices of the emitting states.
    pub fn emitting(&self) -> std::ops::Range<usize> {
        1..self.states.len() - 1
    }

    pub fn state_index(&self, name: &str) -> Option<usize> {
        self.states.iter().position(|s| s == name)
    }

    pub fn symbol_index(&self, name: &str) -> Option<usize> {
        self.symbols.iter().position(|s| s == name)
    }

    /// a_ij between two full-matrix state indices.
    pub fn transition(&self, from: usize, to: usize) -> f64 {
        self.trans[from][to]
    }

    /// b_jk for a full-matrix state index and a symbol index.
    pub fn emission(&self, state: usize, symbol: usize) -> f64 {
        self.emit[state][symbol]
    }

    pub fn transition_by_name(&self, from: &str, to: &str) -> Option<f64> {
        Some(self.trans[self.state_index(from)?][self.state_index(to)?])
    }

    pub fn emission_by_name(&self, state: &str, symbol: &str) -> Option<f64> {
        Some(self.emit[self.state_index(state)?][self.symbol_index(symbol)?])
    }

    pub fn encode<S: AsRef<str>>(&self, obs: &[S]) -> Result<Vec<usize>> {
        obs.iter()
            .enumerate()
            .map(|(position, s)| {
                self.symbol_index(s.as_ref()).ok_or_else(|| Error::UnknownSymbol {
                    symbol: s.as_ref().to_string(),
                    position,
                })
            })
            .collect()
    }

    fn log_tables(&self) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
        let lt = self.trans.iter().map(|r| r.iter().map(|&p| ln(p)).collect()).collect();
        let le = self.emit.iter().map(|r| r.iter().map(|&p| ln(p)).collect()).collect();
        (lt, le)
    }

    /// Log forward variables α_t(j) over emitting states (full indices).
    fn forward_table(&self, obs: &[usize], lt: &[Vec<f64>], le: &[Vec<f64>]) -> Vec<Vec<f64>> {
        let n = self.states.len();
        let mut alpha = vec![vec![f64::NEG_INFINITY; n]; obs.len()];
        for (t, &o) in obs.iter().enumerate() {
            for j in self.emitting() {
                let incoming = if t == 0 {
                    lt[0][j]
                } else {
                    let prev = &alpha[t - 1];
                    log_sum_exp(self.emitting().map(|i| prev[i] + lt[i][j]))
                };
                alpha[t][j] = incoming + le[j][o];
            }
        }
        alpha
    }

    fn backward_table(&self, obs: &[usize], lt: &[Vec<f64>], le: &[Vec<f64>]) -> Vec<Vec<f64>> {
        let n = self.states.len();
        let len = obs.len();
        let mut beta = vec![vec![f64::NEG_INFINITY; n]; len];
        if len == 0 {
            return beta;
        }
        for j in self.emitting() {
            beta[len - 1][j] = 0.0;
        }
        for t in (0..len - 1).rev() {
            for i in self.emitting() {
                let next = &beta[t + 1];
                beta[t][i] = log_sum_exp(
                    self.emitting().map(|j| lt[i][j] + le[j][obs[t + 1]] + next[j]),
                );
            }
        }
        beta
    }

    /// log p(obs), summed over every state path.
    pub fn log_likelihood_indices(&self, obs: &[usize]) -> f64 {
        if obs.is_empty() {
            return 0.0;
        }
        let (lt, le) = self.log_tables();
        let alpha = self.forward_table(obs, &lt, &le);
        log_sum_exp(self.emitting().map(|j| alpha[obs.len() - 1][j]))
    }

    /// Probability of an observation sequence, summed over all state paths.
    pub fn forward_likelihood<S: AsRef<str>>(&self, obs: &[S]) -> Result<f64> {
        Ok(self.log_likelihood_indices(&self.encode(obs)?).exp())
    }

    pub fn log_likelihood<S: AsRef<str>>(&self, obs: &[S]) -> Result<f64> {
        Ok(self.log_likelihood_indices(&self.encode(obs)?))
    }

    /// Most probable emitting-state path (full indices) and its log
    /// probability. Ties go to the lowest state index.
    pub fn viterbi_indices(&self, obs: &[usize]) -> Result<(Vec<usize>, f64)> {
        if obs.is_empty() {
            return Err(Error::Decode {
                position: 0,
                reason: "empty observation sequence".into(),
            });
        }
        let n = self.states.len();
        let (lt, le) = self.log_tables();
        let mut delta = vec![f64::NEG_INFINITY; n];
        let mut back: Vec<Vec<usize>> = Vec::with_capacity(obs.len());
        for (t, &o) in obs.iter().enumerate() {
            if self.emitting().all(|j| self.emit[j][o] == 0.0) {
                return Err(Error::Decode {
                    position: t,
                    reason: format!("symbol `{}` is emitted by no state", self.symbols[o]),
                });
            }
            let mut next = vec![f64::NEG_INFINITY; n];
            let mut ptr = vec![0usize; n];
            for j in self.emitting() {
                let (best_i, best) = if t == 0 {
                    (0, lt[0][j])
                } else {
                    let mut best_i = 1;
                    let mut best = f64::NEG_INFINITY;
                    for i in self.emitting() {
                        let v = delta[i] + lt[i][j];
                        if v > best {
                            best = v;
                            best_i = i;
                        }
                    }
                    (best_i, best)
                };
                next[j] = best + le[j][o];
                ptr[j] = best_i;
            }
            if self.emitting().all(|j| next[j] == f64::NEG_INFINITY) {
                return Err(Error::Decode {
                    position: t,
                    reason: "no state path reaches this position".into(),
                });
            }
            delta = next;
            back.push(ptr);
        }
        let mut last = 1;
        let mut best = f64::NEG_INFINITY;
        for j in self.emitting() {
            if delta[j] > best {
                best = delta[j];
                last = j;
            }
        }
        let mut path = vec![last; obs.len()];
        for t in (1..obs.len()).rev() {
            path[t - 1] = back[t][path[t]];
        }
        Ok((path, best))
    }

    /// Viterbi decoding by name.
    pub fn viterbi<S: AsRef<str>>(&self, obs: &[S]) -> Result<(Vec<String>, f64)> {
        let (path, lp) = self.viterbi_indices(&self.encode(obs)?)?;
        Ok((path.into_iter().map(|i| self.states[i].clone()).collect(), lp))
    }

    /// Largest absolute difference between two models' transition entries.
    pub fn max_transition_change(&self, other: &HmmModel) -> f64 {
        self.trans
            .iter()
            .flatten()
            .zip(other.trans.iter().flatten())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

impl ModelFile for HmmModel {
    const FORMAT: &'static str = "rst-hmm";
    const VERSION: u32 = 1;

    fn validate(&self) -> Result<()> {
        self.check(LOAD_TOLERANCE)
    }
}

/// Maximum-likelihood counts from labeled sequences. Rows with no evidence
/// become uniform. `smoothing` adds a pseudo-count to every emission cell.
pub fn estimate_supervised(
    states: &[String],
    symbols: &[String],
    data: &[LabeledSequence],
    smoothing: f64,
) -> Result<HmmModel> {
    if data.iter().all(|s| s.states.is_empty()) {
        return Err(Error::invalid("empty training set"));
    }
    if !(smoothing >= 0.0 && smoothing.is_finite()) {
        return Err(Error::invalid("smoothing must be a finite non-negative number"));
    }
    let k = states.len();
    let m = symbols.len();
    let state_ix = |s: &str| {
        states.iter().position(|x| x == s).ok_or_else(|| Error::UnknownLabel {
            kind: "hidden state",
            value: s.to_string(),
        })
    };
    let symbol_ix = |s: &str, position: usize| {
        symbols.iter().position(|x| x == s).ok_or_else(|| Error::UnknownSymbol {
            symbol: s.to_string(),
            position,
        })
    };
    let mut init = vec![0.0; k];
    let mut trans = vec![vec![0.0; k]; k];
    let mut emit = vec![vec![smoothing; m]; k];
    for seq in data {
        if seq.states.len() != seq.symbols.len() {
            return Err(Error::invalid(format!(
                "state path of length {} does not align with {} symbols",
                seq.states.len(),
                seq.symbols.len()
            )));
        }
        let mut prev: Option<usize> = None;
        for (t, (s, o)) in seq.states.iter().zip(&seq.symbols).enumerate() {
            let j = state_ix(s)?;
            let o = symbol_ix(o, t)?;
            match prev {
                None => init[j] += 1.0,
                Some(i) => trans[i][j] += 1.0,
            }
            emit[j][o] += 1.0;
            prev = Some(j);
        }
    }
    let normalize = |row: &mut Vec<f64>| {
        let total: f64 = row.iter().sum();
        if total > 0.0 {
            row.iter_mut().for_each(|p| *p /= total);
        } else {
            let u = 1.0 / row.len() as f64;
            row.iter_mut().for_each(|p| *p = u);
        }
    };
    normalize(&mut init);
    trans.iter_mut().for_each(normalize);
    emit.iter_mut().for_each(normalize);
    HmmModel::new(states.to_vec(), symbols.to_vec(), init, trans, emit)
}

#[derive(Clone, Debug)]
pub struct BaumWelchConfig {
    /// Stop once no transition probability moves by more than this.
    pub epsilon: f64,
    /// Stop once Viterbi accuracy on `eval` reaches this fraction.
    pub target_accuracy: f64,
    pub max_iter: usize,
    /// Labeled sequences measured after every iteration.
    pub eval: Vec<LabeledSequence>,
    /// Keep the previous rows of states with zero expected occupancy
    /// instead of failing.
    pub keep_unused_states: bool,
}

impl Default for BaumWelchConfig {
    fn default() -> Self {
        BaumWelchConfig {
            epsilon: 0.02,
            target_accuracy: 0.98,
            max_iter: 100,
            eval: Vec::new(),
            keep_unused_states: false,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StopReason {
    Converged,
    TargetAccuracy,
    MaxIterations,
}

#[derive(Clone, Debug)]
pub struct TrainingReport {
    pub iterations: usize,
    /// Log-likelihood of the training set before each iteration, then under
    /// the returned model.
    pub log_likelihood: Vec<f64>,
    /// Max transition change produced by each iteration.
    pub deltas: Vec<f64>,
    pub final_delta: f64,
    pub accuracy: Option<f64>,
    pub stop: StopReason,
}

/// Token-level Viterbi accuracy against gold state paths.
pub fn labeled_accuracy(model: &HmmModel, data: &[LabeledSequence]) -> Result<f64> {
    let mut correct = 0usize;
    let mut total = 0usize;
    for seq in data {
        if seq.symbols.is_empty() {
            continue;
        }
        let (path, _) = model.viterbi(&seq.symbols)?;
        correct += path.iter().zip(&seq.states).filter(|(a, b)| a == b).count();
        total += path.len();
    }
    Ok(if total == 0 { 0.0 } else { correct as f64 / total as f64 })
}

/// Expectation-maximization refinement of every parameter.
pub fn baum_welch<S: AsRef<str>>(
    model: &HmmModel,
    observations: &[Vec<S>],
    config: &BaumWelchConfig,
) -> Result<(HmmModel, TrainingReport)> {
    let obs: Vec<Vec<usize>> = observations
        .iter()
        .map(|o| model.encode(o))
        .collect::<Result<_>>()?;
    if obs.iter().all(Vec::is_empty) {
        return Err(Error::invalid("empty observation set"));
    }
    let mut current = model.clone();
    let mut trace = Vec::new();
    let mut deltas = Vec::new();
    let mut accuracy = None;
    let mut stop = StopReason::MaxIterations;
    for iteration in 1..=config.max_iter {
        let (next, ll) = em_step(&current, &obs, iteration, config.keep_unused_states)?;
        trace.push(ll);
        let delta = next.max_transition_change(&current);
        deltas.push(delta);
        current = next;
        if !config.eval.is_empty() {
            let acc = labeled_accuracy(&current, &config.eval)?;
            accuracy = Some(acc);
            if acc >= config.target_accuracy {
                stop = StopReason::TargetAccuracy;
                break;
            }
        }
        if delta <= config.epsilon {
            stop = StopReason::Converged;
            break;
        }
    }
    let final_ll: f64 = obs.iter().map(|o| current.log_likelihood_indices(o)).sum();
    trace.push(final_ll);
    let report = TrainingReport {
        iterations: deltas.len(),
        final_delta: deltas.last().copied().unwrap_or(0.0),
        log_likelihood: trace,
        deltas,
        accuracy,
        stop,
    };
    Ok((current, report))
}

fn em_step(
    model: &HmmModel,
    obs: &[Vec<usize>],
    iteration: usize,
    keep_unused: bool,
) -> Result<(HmmModel, f64)> {
    let n = model.states.len();
    let m = model.symbols.len();
    let (lt, le) = model.log_tables();
    let mut init = vec![0.0; n];
    let mut trans = vec![vec![0.0; n]; n];
    let mut emit = vec![vec![0.0; m]; n];
    let mut total_ll = 0.0;
    let mut sequences = 0usize;

    // Sequences are reduced in input order so results are bit-reproducible.
    for o in obs.iter().filter(|o| !o.is_empty()) {
        let alpha = model.forward_table(o, &lt, &le);
        let beta = model.backward_table(o, &lt, &le);
        let len = o.len();
        let ll = log_sum_exp(model.emitting().map(|j| alpha[len - 1][j]));
        if ll == f64::NEG_INFINITY {
            return Err(Error::Degenerate {
                iteration,
                reason: "an observation sequence has zero probability".into(),
            });
        }
        total_ll += ll;
        sequences += 1;
        for t in 0..len {
            for j in model.emitting() {
                let g = (alpha[t][j] + beta[t][j] - ll).exp();
                if t == 0 {
                    init[j] += g;
                }
                emit[j][o[t]] += g;
            }
            if t + 1 < len {
                for i in model.emitting() {
                    if alpha[t][i] == f64::NEG_INFINITY {
                        continue;
                    }
                    for j in model.emitting() {
                        let x = alpha[t][i] + lt[i][j] + le[j][o[t + 1]] + beta[t + 1][j] - ll;
                        trans[i][j] += x.exp();
                    }
                }
            }
        }
    }

    let mut next = model.clone();
    let seqs = sequences as f64;
    for j in model.emitting() {
        next.trans[0][j] = init[j] / seqs;
    }
    renormalize(&mut next.trans[0]);
    for i in model.emitting() {
        let occupancy: f64 = emit[i].iter().sum();
        if occupancy <= 0.0 {
            if keep_unused {
                continue;
            }
            return Err(Error::Degenerate {
                iteration,
                reason: format!("state `{}` has zero responsibility", model.states[i]),
            });
        }
        next.emit[i] = emit[i].iter().map(|c| c / occupancy).collect();
        renormalize(&mut next.emit[i]);
        let out: f64 = trans[i].iter().sum();
        // A state seen only at sequence ends carries no transition evidence;
        // any row maximizes the expected log-likelihood, so the old one stays.
        if out > 0.0 {
            next.trans[i] = trans[i].iter().map(|c| c / out).collect();
            renormalize(&mut next.trans[i]);
        }
    }
    Ok((next, total_ll))
}

/// Removes floating-point drift so every row sums to one.
fn renormalize(row: &mut [f64]) {
    let s: f64 = row.iter().sum();
    if s > 0.0 {
        row.iter_mut().for_each(|p| *p /= s);
    }
}
