use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::auction::Mechanism;
use crate::flsim::SyntheticTaskSpec;
use crate::reputation::ReputationParams;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    AuctionSweepBudget,
    AuctionSweepWorkers,
    MultiTask,
    ContributionCase1,
    ContributionCase2,
    PropertySuite,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::AuctionSweepBudget => "auction_sweep_budget",
            ExperimentKind::AuctionSweepWorkers => "auction_sweep_workers",
            ExperimentKind::MultiTask => "multi_task",
            ExperimentKind::ContributionCase1 => "contribution_case1",
            ExperimentKind::ContributionCase2 => "contribution_case2",
            ExperimentKind::PropertySuite => "property_suite",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Range {
    pub low: f64,
    pub high: f64,
}

impl Range {
    pub const fn new(low: f64, high: f64) -> Self {
        Self { low, high }
    }

    fn check(&self, what: &str) -> Result<()> {
        if !(self.low.is_finite() && self.high.is_finite() && self.low <= self.high) {
            return Err(Error::Config(format!(
                "{what}: range [{}, {}] is not well ordered",
                self.low, self.high
            )));
        }
        Ok(())
    }
}

/// Draws of accumulated reputation, bid and realised internal reputation for
/// synthetic auction markets. Bids are `bid_slope * x + U[bid_offset]`, where
/// `x` is the worker's reputation (sweeps) or data accuracy (multi-task).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MarketGenerator {
    pub reputation: Range,
    pub bid_slope: f64,
    pub bid_offset: Range,
    /// Internal reputation is uniform within this distance of `Re`, clipped
    /// to `[0, 1]`.
    pub internal_spread: f64,
}

impl Default for MarketGenerator {
    fn default() -> Self {
        Self {
            reputation: Range::new(0.1, 1.0),
            bid_slope: 10.0 / 3.0,
            bid_offset: Range::new(2.0 / 3.0, 8.0 / 3.0),
            internal_spread: 0.1,
        }
    }
}

/// Data-accuracy group of the multi-task population.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AccuracyGroup {
    pub accuracy: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GroupWindow {
    /// Every task of the run.
    All,
    /// Tasks after the discarded prefix.
    Scored,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PropertySuiteConfig {
    pub budget_instances: usize,
    pub ir_instances: usize,
    pub truthfulness_instances: usize,
    pub deviations: Vec<f64>,
    pub max_workers: usize,
    pub max_workers_truthfulness: usize,
    pub budget_range: Range,
    pub cost_range: Range,
    pub measure_complexity: bool,
    pub complexity_sizes: [usize; 2],
    pub complexity_ratio_limit: f64,
    pub tolerance: f64,
}

impl Default for PropertySuiteConfig {
    fn default() -> Self {
        Self {
            budget_instances: 10_000,
            ir_instances: 10_000,
            truthfulness_instances: 2_000,
            deviations: vec![0.5, 0.8, 0.9, 1.1, 1.25, 2.0],
            max_workers: 200,
            max_workers_truthfulness: 40,
            budget_range: Range::new(5.0, 100.0),
            cost_range: Range::new(0.1, 10.0),
            measure_complexity: true,
            complexity_sizes: [10_000, 20_000],
            complexity_ratio_limit: 2.5,
            tolerance: 1e-9,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    /// Defaults to the kind's name.
    pub experiment_id: Option<String>,
    pub mechanisms: Vec<Mechanism>,
    pub seed: u64,
    pub output: Option<PathBuf>,

    /// Fixed budget; the sweep over worker counts and the multi-task run use
    /// it. Defaults to 125 for auctions and 80 for multi-task runs.
    pub budget: Option<f64>,
    pub budgets: Vec<f64>,
    pub workers: usize,
    pub worker_counts: Vec<usize>,
    pub repetitions: usize,
    pub market: MarketGenerator,

    pub tasks: usize,
    pub discard: usize,
    pub groups: Vec<AccuracyGroup>,
    pub group_window: GroupWindow,
    pub task: SyntheticTaskSpec,
    pub reputation: ReputationParams<f64>,
    /// Local epochs in the contribution-case studies, replacing
    /// `task.local_epochs` there. Long local training lets a missing label
    /// show up in the local model.
    pub case_local_epochs: usize,

    pub properties: PropertySuiteConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            kind: ExperimentKind::AuctionSweepBudget,
            experiment_id: None,
            mechanisms: vec![
                Mechanism::Ours,
                Mechanism::Rrafl,
                Mechanism::VanillaFl,
                Mechanism::ProportionalShare,
                Mechanism::BidGreedy,
                Mechanism::ReputationGreedy,
                Mechanism::ApproxOptimal,
            ],
            seed: 0,
            output: None,
            budget: None,
            budgets: vec![25.0, 50.0, 75.0, 100.0, 125.0, 150.0, 175.0, 200.0],
            workers: 100,
            worker_counts: vec![60, 80, 100, 120, 140, 160, 180, 200],
            repetitions: 30,
            market: MarketGenerator::default(),
            tasks: 50,
            discard: 5,
            groups: vec![
                AccuracyGroup {
                    accuracy: 1.0,
                    count: 15,
                },
                AccuracyGroup {
                    accuracy: 0.7,
                    count: 5,
                },
                AccuracyGroup {
                    accuracy: 0.4,
                    count: 5,
                },
                AccuracyGroup {
                    accuracy: 0.1,
                    count: 5,
                },
            ],
            group_window: GroupWindow::All,
            task: SyntheticTaskSpec::default(),
            reputation: ReputationParams::default(),
            case_local_epochs: 10,
            properties: PropertySuiteConfig::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn for_kind(kind: ExperimentKind) -> Self {
        Self {
            kind,
            ..Default::default()
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn id(&self) -> String {
        self.experiment_id
            .clone()
            .unwrap_or_else(|| self.kind.name().to_string())
    }

    pub fn effective_budget(&self) -> f64 {
        self.budget.unwrap_or(match self.kind {
            ExperimentKind::MultiTask => 80.0,
            _ => 125.0,
        })
    }

    /// Task spec with the experiment seed mixed in.
    pub fn task_spec(&self) -> SyntheticTaskSpec {
        SyntheticTaskSpec {
            seed: crate::seed::derive(self.seed, &[self.task.seed]),
            ..self.task.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        if self.mechanisms.is_empty() && self.kind != ExperimentKind::PropertySuite {
            return fail("at least one mechanism must be selected".into());
        }
        let b = self.effective_budget();
        if !(b > 0.0 && b.is_finite()) {
            return fail(format!("budget must be positive, got {b}"));
        }
        self.market.reputation.check("market.reputation")?;
        self.market.bid_offset.check("market.bid_offset")?;
        if self.market.reputation.low <= 0.0 || self.market.reputation.high > 1.0 {
            return fail("market.reputation must lie in (0, 1]".into());
        }
        if self.market.internal_spread < 0.0 {
            return fail("market.internal_spread must be non-negative".into());
        }
        self.reputation.validate()?;
        match self.kind {
            ExperimentKind::AuctionSweepBudget => {
                if self.budgets.is_empty()
                    || self.budgets.iter().any(|b| !(*b > 0.0 && b.is_finite()))
                {
                    return fail("budgets must be a non-empty list of positive values".into());
                }
                if self.workers == 0 || self.repetitions == 0 {
                    return fail("workers and repetitions must be positive".into());
                }
            }
            ExperimentKind::AuctionSweepWorkers => {
                if self.worker_counts.is_empty() || self.worker_counts.contains(&0) {
                    return fail(
                        "worker_counts must be a non-empty list of positive counts".into(),
                    );
                }
                if self.repetitions == 0 {
                    return fail("repetitions must be positive".into());
                }
            }
            ExperimentKind::MultiTask => {
                if self.tasks == 0 || self.discard >= self.tasks {
                    return fail("need tasks > discard".into());
                }
                if self.groups.is_empty() || self.groups.iter().all(|g| g.count == 0) {
                    return fail("multi-task population is empty".into());
                }
                self.task.validate()?;
            }
            ExperimentKind::ContributionCase1 | ExperimentKind::ContributionCase2 => {
                self.task.validate()?;
                if self.case_local_epochs == 0 {
                    return fail("case_local_epochs must be positive".into());
                }
            }
            ExperimentKind::PropertySuite => {
                let p = &self.properties;
                p.budget_range.check("properties.budget_range")?;
                p.cost_range.check("properties.cost_range")?;
                if p.cost_range.low <= 0.0 || p.budget_range.low <= 0.0 {
                    return fail("property suite costs and budgets must be positive".into());
                }
                if p.max_workers == 0 || p.max_workers_truthfulness < 2 {
                    return fail("property suite worker limits too small".into());
                }
            }
        }
        Ok(())
    }
}
