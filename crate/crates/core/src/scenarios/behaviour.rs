use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Party count with per-party setting and outcome counts.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Scenario {
    inputs: Vec<usize>,
    outputs: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
struct ScenarioJson {
    parties: usize,
    inputs: Vec<usize>,
    outputs: Vec<usize>,
}

impl Serialize for Scenario {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        ScenarioJson {
            parties: self.parties(),
            inputs: self.inputs.clone(),
            outputs: self.outputs.clone(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Scenario {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = ScenarioJson::deserialize(d)?;
        if raw.parties != raw.inputs.len() {
            return Err(serde::de::Error::custom("parties does not match inputs"));
        }
        Scenario::new(raw.inputs, raw.outputs).map_err(serde::de::Error::custom)
    }
}

impl Scenario {
    pub fn new(inputs: Vec<usize>, outputs: Vec<usize>) -> Result<Self> {
        if inputs.is_empty() {
            return Err(Error::Parameter("a scenario needs at least one party".into()));
        }
        if inputs.len() != outputs.len() {
            return Err(Error::Parameter(format!(
                "{} input counts but {} output counts",
                inputs.len(),
                outputs.len()
            )));
        }
        if inputs.iter().chain(&outputs).any(|&n| n == 0) {
            return Err(Error::Parameter("input and output counts must be >= 1".into()));
        }
        Ok(Self { inputs, outputs })
    }

    /// Every party with `m` binary-outcome settings.
    pub fn binary(inputs: &[usize]) -> Self {
        Self::new(inputs.to_vec(), vec![2; inputs.len()]).expect("valid binary scenario")
    }

    pub fn parties(&self) -> usize {
        self.inputs.len()
    }

    pub fn inputs(&self) -> &[usize] {
        &self.inputs
    }

    pub fn outputs(&self) -> &[usize] {
        &self.outputs
    }

    pub fn num_settings(&self) -> usize {
        self.inputs.iter().product()
    }

    pub fn num_outcomes(&self) -> usize {
        self.outputs.iter().product()
    }

    pub fn table_len(&self) -> usize {
        self.num_settings() * self.num_outcomes()
    }

    pub fn is_binary(&self) -> bool {
        self.outputs.iter().all(|&o| o == 2)
    }

    pub fn setting_index(&self, settings: &[usize]) -> usize {
        mixed_radix(settings, &self.inputs)
    }

    pub fn outcome_index(&self, outcomes: &[usize]) -> usize {
        mixed_radix(outcomes, &self.outputs)
    }

    /// Flat table index: outcomeIndex · #settings + settingIndex.
    pub fn index(&self, outcomes: &[usize], settings: &[usize]) -> usize {
        self.outcome_index(outcomes) * self.num_settings() + self.setting_index(settings)
    }

    pub fn setting_digits(&self, index: usize) -> Vec<usize> {
        digits(index, &self.inputs)
    }

    pub fn outcome_digits(&self, index: usize) -> Vec<usize> {
        digits(index, &self.outputs)
    }

    /// (outcomes, settings) for a flat table index.
    pub fn split_index(&self, index: usize) -> (Vec<usize>, Vec<usize>) {
        let s = self.num_settings();
        (self.outcome_digits(index / s), self.setting_digits(index % s))
    }

    /// Scenario restricted to `parties` (in the given order).
    pub fn restrict(&self, parties: &[usize]) -> Self {
        Self {
            inputs: parties.iter().map(|&k| self.inputs[k]).collect(),
            outputs: parties.iter().map(|&k| self.outputs[k]).collect(),
        }
    }
}

pub(crate) fn mixed_radix(digits: &[usize], radices: &[usize]) -> usize {
    debug_assert_eq!(digits.len(), radices.len());
    digits
        .iter()
        .zip(radices)
        .fold(0, |acc, (&d, &r)| acc * r + d)
}

pub(crate) fn digits(mut index: usize, radices: &[usize]) -> Vec<usize> {
    let mut out = vec![0; radices.len()];
    for k in (0..radices.len()).rev() {
        out[k] = index % radices[k];
        index /= radices[k];
    }
    out
}

/// Iterates all mixed-radix tuples in order, last digit fastest.
pub(crate) fn tuples(radices: &[usize]) -> impl Iterator<Item = Vec<usize>> + '_ {
    let total: usize = radices.iter().product();
    (0..total).map(move |i| digits(i, radices))
}

/// Conditional probability table p(outcomes | settings).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Behaviour {
    scenario: Scenario,
    table: Vec<f64>,
}

pub const PROBABILITY_TOL: f64 = 1e-12;
pub const NORMALIZATION_TOL: f64 = 1e-10;

impl Behaviour {
    pub fn new(scenario: Scenario, table: Vec<f64>) -> Result<Self> {
        let b = Self { scenario, table };
        b.validate()?;
        Ok(b)
    }

    pub(crate) fn new_unchecked(scenario: Scenario, table: Vec<f64>) -> Self {
        Self { scenario, table }
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.scenario.table_len();
        if self.table.len() != n {
            return Err(Error::ScenarioMismatch(format!(
                "table has {} entries, scenario needs {n}",
                self.table.len()
            )));
        }
        if let Some(p) = self
            .table
            .iter()
            .find(|&&p| !(-PROBABILITY_TOL..=1.0 + PROBABILITY_TOL).contains(&p))
        {
            return Err(Error::Parameter(format!("probability {p} outside [0, 1]")));
        }
        let s = self.scenario.num_settings();
        for x in 0..s {
            let total: f64 = (0..self.scenario.num_outcomes())
                .map(|a| self.table[a * s + x])
                .sum();
            if (total - 1.0).abs() > NORMALIZATION_TOL {
                return Err(Error::Parameter(format!(
                    "setting {:?} sums to {total}",
                    self.scenario.setting_digits(x)
                )));
            }
        }
        Ok(())
    }

    pub fn uniform(scenario: &Scenario) -> Self {
        let v = 1.0 / scenario.num_outcomes() as f64;
        Self {
            table: vec![v; scenario.table_len()],
            scenario: scenario.clone(),
        }
    }

    /// Deterministic behaviour: party k answers `responses[k][x_k]`.
    pub fn deterministic(scenario: &Scenario, responses: &[Vec<usize>]) -> Result<Self> {
        if responses.len() != scenario.parties()
            || responses
                .iter()
                .zip(scenario.inputs())
                .any(|(r, &m)| r.len() != m)
        {
            return Err(Error::ScenarioMismatch("response table shape".into()));
        }
        let s = scenario.num_settings();
        let mut table = vec![0.0; scenario.table_len()];
        for x in 0..s {
            let xs = scenario.setting_digits(x);
            let a: Vec<usize> = xs.iter().enumerate().map(|(k, &xk)| responses[k][xk]).collect();
            if a.iter().zip(scenario.outputs()).any(|(&ak, &o)| ak >= o) {
                return Err(Error::Parameter("response outside outcome range".into()));
            }
            table[scenario.outcome_index(&a) * s + x] = 1.0;
        }
        Ok(Self {
            scenario: scenario.clone(),
            table,
        })
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn table(&self) -> &[f64] {
        &self.table
    }

    pub fn get(&self, outcomes: &[usize], settings: &[usize]) -> f64 {
        self.table[self.scenario.index(outcomes, settings)]
    }

    /// λ·self + (1−λ)·other
    pub fn mix(&self, lambda: f64, other: &Self) -> Result<Self> {
        if self.scenario != other.scenario {
            return Err(Error::ScenarioMismatch("cannot mix different scenarios".into()));
        }
        Ok(Self {
            scenario: self.scenario.clone(),
            table: self
                .table
                .iter()
                .zip(&other.table)
                .map(|(p, q)| lambda * p + (1.0 - lambda) * q)
                .collect(),
        })
    }

    /// Marginal on `parties` with the other parties' settings fixed to `rest_settings`.
    fn marginal_at(&self, parties: &[usize], settings: &[usize], rest: &[usize]) -> Vec<f64> {
        let scen = &self.scenario;
        let n = scen.parties();
        let sub = scen.restrict(parties);
        let mut out = vec![0.0; sub.num_outcomes()];
        let mut full_x = vec![0; n];
        let others: Vec<usize> = (0..n).filter(|k| !parties.contains(k)).collect();
        for (i, &k) in parties.iter().enumerate() {
            full_x[k] = settings[i];
        }
        for (i, &k) in others.iter().enumerate() {
            full_x[k] = rest[i];
        }
        let x = scen.setting_index(&full_x);
        let s = scen.num_settings();
        for a in 0..scen.num_outcomes() {
            let ad = scen.outcome_digits(a);
            let sub_a: Vec<usize> = parties.iter().map(|&k| ad[k]).collect();
            out[sub.outcome_index(&sub_a)] += self.table[a * s + x];
        }
        out
    }

    /// Marginal on `parties`, averaged uniformly over the other parties' settings.
    pub fn marginal(&self, parties: &[usize]) -> Result<Behaviour> {
        let scen = &self.scenario;
        if parties.iter().any(|&k| k >= scen.parties()) {
            return Err(Error::ScenarioMismatch("party index out of range".into()));
        }
        let sub = scen.restrict(parties);
        let others: Vec<usize> = (0..scen.parties()).filter(|k| !parties.contains(k)).collect();
        let rest_radix: Vec<usize> = others.iter().map(|&k| scen.inputs()[k]).collect();
        let count: usize = rest_radix.iter().product();
        let ss = sub.num_settings();
        let mut table = vec![0.0; sub.table_len()];
        for xs in tuples(sub.inputs()) {
            let xi = sub.setting_index(&xs);
            for rest in tuples(&rest_radix) {
                for (a, p) in self.marginal_at(parties, &xs, &rest).into_iter().enumerate() {
                    table[a * ss + xi] += p / count as f64;
                }
            }
        }
        Ok(Behaviour::new_unchecked(sub, table))
    }

    /// ⟨∏_{k∈parties} A_k⟩ with outcome a ↦ (−1)^a; unlisted parties are marginalized.
    pub fn correlator(&self, parties: &[usize], settings: &[usize]) -> Result<f64> {
        if parties.len() != settings.len() {
            return Err(Error::ScenarioMismatch("one setting per listed party".into()));
        }
        for &k in parties {
            let o = *self
                .scenario
                .outputs()
                .get(k)
                .ok_or_else(|| Error::ScenarioMismatch("party index out of range".into()))?;
            if o != 2 {
                return Err(Error::NonBinary(k, o));
            }
        }
        let m = self.marginal(parties)?;
        let sub = m.scenario();
        let x = sub.setting_index(settings);
        let s = sub.num_settings();
        Ok((0..sub.num_outcomes())
            .map(|a| {
                let sign = if sub.outcome_digits(a).iter().sum::<usize>() % 2 == 0 {
                    1.0
                } else {
                    -1.0
                };
                sign * m.table[a * s + x]
            })
            .sum())
    }

    /// Largest dependence of any union of groups' marginal on the remaining settings.
    pub fn no_signalling_violation(&self, partition: &[Vec<usize>]) -> f64 {
        let scen = &self.scenario;
        let g = partition.len();
        let mut worst = 0.0f64;
        for mask in 1..(1usize << g).saturating_sub(1) {
            let mut parties: Vec<usize> = (0..g)
                .filter(|i| mask >> i & 1 == 1)
                .flat_map(|i| partition[i].iter().copied())
                .collect();
            parties.sort_unstable();
            let others: Vec<usize> =
                (0..scen.parties()).filter(|k| !parties.contains(k)).collect();
            if others.is_empty() {
                continue;
            }
            let sub = scen.restrict(&parties);
            let rest_radix: Vec<usize> = others.iter().map(|&k| scen.inputs()[k]).collect();
            for xs in tuples(sub.inputs()) {
                let mut lo = vec![f64::INFINITY; sub.num_outcomes()];
                let mut hi = vec![f64::NEG_INFINITY; sub.num_outcomes()];
                for rest in tuples(&rest_radix) {
                    for (a, p) in self.marginal_at(&parties, &xs, &rest).into_iter().enumerate() {
                        lo[a] = lo[a].min(p);
                        hi[a] = hi[a].max(p);
                    }
                }
                for (l, h) in lo.iter().zip(&hi) {
                    worst = worst.max(h - l);
                }
            }
        }
        worst
    }
}

/// Maximum no-signalling violation of `b` across all unions of the groups in `partition`.
pub fn check_no_signalling(b: &Behaviour, partition: &[Vec<usize>]) -> f64 {
    b.no_signalling_violation(partition)
}

/// Each party in its own group.
pub fn singleton_partition(parties: usize) -> Vec<Vec<usize>> {
    (0..parties).map(|k| vec![k]).collect()
}
