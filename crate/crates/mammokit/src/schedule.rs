//! Hard-sample dynamic-update training schedule.
//!
//! The training data is split once into a training and a validation set.
//! After every training epoch the validation set is scored; the hardest
//! failing samples (highest loss) are promoted into the training set and
//! an equal number of randomly chosen training samples take their place,
//! so the partition sizes never change. When a validation pass finds no
//! hard samples, the validation set is merged into the training set and
//! training finishes with a fixed number of epochs at a reduced learning
//! rate. A configurable epoch cap guards against trainers that never run
//! out of hard samples.
//!
//! The trainer itself sits behind [`Trainer`]; [`MockTrainer`] drives the
//! state machine deterministically from scripted per-epoch losses.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::SplitMix64;

/// Which side of the split a sample is on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Partition {
    Train,
    Validation,
}

/// Bookkeeping for one sample.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleRecord {
    pub sample_id: String,
    pub partition: Partition,
    /// Loss from the most recent pass that scored this sample.
    pub last_loss: Option<f64>,
    /// Set only for validation samples the trainer flagged on their last
    /// validation pass.
    pub is_hard: bool,
}

/// Schedule parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SchedulerConfig {
    /// Samples promoted per swap.
    pub swap_count: usize,
    /// Fraction of samples that start in the training set.
    pub initial_split_ratio: f64,
    pub initial_lr: f64,
    /// Final-phase learning rate as a fraction of `initial_lr`.
    pub final_lr_fraction: f64,
    /// Epochs to run after the merge.
    pub final_epochs: usize,
    /// Safety cap on swap-phase epochs.
    pub max_epochs: usize,
    pub seed: u64,
}

impl Default for SchedulerConfig {
    fn default() -> Self {
        SchedulerConfig {
            swap_count: 3,
            initial_split_ratio: 0.8,
            initial_lr: 1e-5,
            final_lr_fraction: 0.1,
            final_epochs: 10,
            max_epochs: 500,
            seed: 0,
        }
    }
}

impl SchedulerConfig {
    fn validate(&self) -> Result<()> {
        if self.swap_count == 0 {
            return Err(Error::param("swap_count must be >= 1"));
        }
        if !self.initial_split_ratio.is_finite()
            || self.initial_split_ratio <= 0.0
            || self.initial_split_ratio >= 1.0
        {
            return Err(Error::param(format!(
                "initial_split_ratio {} must lie in (0, 1)",
                self.initial_split_ratio
            )));
        }
        if !self.initial_lr.is_finite() || self.initial_lr <= 0.0 {
            return Err(Error::param(format!(
                "initial_lr {} must be positive",
                self.initial_lr
            )));
        }
        if !self.final_lr_fraction.is_finite()
            || self.final_lr_fraction <= 0.0
            || self.final_lr_fraction > 1.0
        {
            return Err(Error::param(format!(
                "final_lr_fraction {} must lie in (0, 1]",
                self.final_lr_fraction
            )));
        }
        if self.max_epochs == 0 {
            return Err(Error::param("max_epochs must be >= 1"));
        }
        Ok(())
    }
}

/// The partition plus per-sample records and the schedule's random stream.
#[derive(Debug, Clone)]
pub struct SplitState {
    train: BTreeSet<String>,
    validation: BTreeSet<String>,
    records: BTreeMap<String, SampleRecord>,
    rng: SplitMix64,
}

impl SplitState {
    /// Training-set ids in sorted order.
    pub fn train_ids(&self) -> Vec<String> {
        self.train.iter().cloned().collect()
    }

    /// Validation-set ids in sorted order.
    pub fn validation_ids(&self) -> Vec<String> {
        self.validation.iter().cloned().collect()
    }

    pub fn records(&self) -> &BTreeMap<String, SampleRecord> {
        &self.records
    }

    fn set_partition(&mut self, id: &str, partition: Partition) {
        match partition {
            Partition::Train => {
                self.validation.remove(id);
                self.train.insert(id.to_string());
            }
            Partition::Validation => {
                self.train.remove(id);
                self.validation.insert(id.to_string());
            }
        }
        let record = self.records.get_mut(id).expect("known sample id");
        record.partition = partition;
        record.is_hard = false;
    }
}

/// Events in the order the schedule emitted them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum ScheduleEvent {
    /// `ids_to_train` (hardest first) moved to training; `ids_to_val`
    /// replaced them.
    Swap {
        epoch: usize,
        ids_to_train: Vec<String>,
        ids_to_val: Vec<String>,
    },
    /// Validation merged into training and the learning rate dropped.
    PhaseChange { epoch: usize, new_lr: f64 },
    Termination {
        epoch: usize,
        reason: TerminationReason,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TerminationReason {
    Converged,
    EpochCap,
}

/// Full record of one schedule run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleLog {
    pub events: Vec<ScheduleEvent>,
}

/// The training loop behind the scheduler.
///
/// Both scoring calls must return exactly one entry per requested id; the
/// scheduler verifies this and fails the run otherwise.
pub trait Trainer {
    /// Trains one epoch on `ids` and returns per-sample losses.
    fn train_epoch(&mut self, ids: &[String]) -> Result<BTreeMap<String, f64>>;

    /// Scores `ids` without training; the flag marks hard samples.
    fn validate(&mut self, ids: &[String]) -> Result<BTreeMap<String, (f64, bool)>>;

    /// Learning-rate changes are advisory; trainers that manage their own
    /// rate may ignore them.
    fn set_learning_rate(&mut self, _lr: f64) {}
}

/// Shuffles `sample_ids` with the config seed and deals the first
/// `initial_split_ratio` share (at least 1, at most n-1) into training.
pub fn initial_split(sample_ids: &[String], cfg: &SchedulerConfig) -> Result<SplitState> {
    cfg.validate()?;
    if sample_ids.len() < 2 {
        return Err(Error::param(format!(
            "need at least 2 samples to split, got {}",
            sample_ids.len()
        )));
    }
    let unique: BTreeSet<&String> = sample_ids.iter().collect();
    if unique.len() != sample_ids.len() {
        return Err(Error::param("sample ids must be unique"));
    }

    let mut shuffled = sample_ids.to_vec();
    let mut rng = SplitMix64::new(cfg.seed);
    rng.shuffle(&mut shuffled);

    let n = shuffled.len();
    // The small guard keeps products like 0.7 * 10, which float arithmetic
    // puts just under the integer, on the intended side of floor.
    let n_train = ((cfg.initial_split_ratio * n as f64 + 1e-6).floor() as usize).clamp(1, n - 1);

    let mut state = SplitState {
        train: BTreeSet::new(),
        validation: BTreeSet::new(),
        records: BTreeMap::new(),
        rng,
    };
    for (i, id) in shuffled.iter().enumerate() {
        let partition = if i < n_train {
            Partition::Train
        } else {
            Partition::Validation
        };
        match partition {
            Partition::Train => state.train.insert(id.clone()),
            Partition::Validation => state.validation.insert(id.clone()),
        };
        state.records.insert(
            id.clone(),
            SampleRecord {
                sample_id: id.clone(),
                partition,
                last_loss: None,
                is_hard: false,
            },
        );
    }
    Ok(state)
}

/// Picks the hardest validation samples: among records flagged hard, sort
/// by loss descending (ties by id ascending) and take `swap_count`.
pub fn select_swap(state: &SplitState, swap_count: usize) -> Vec<String> {
    let mut hard: Vec<(&String, f64)> = state
        .records
        .values()
        .filter(|r| r.is_hard && r.partition == Partition::Validation)
        .map(|r| (&r.sample_id, r.last_loss.unwrap_or(0.0)))
        .collect();
    hard.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    hard.into_iter()
        .take(swap_count)
        .map(|(id, _)| id.clone())
        .collect()
}

/// Moves `to_train` into the training set and an equal number of randomly
/// chosen training samples (never the just-promoted ones) into validation.
/// Partition sizes are conserved.
pub fn apply_swap(
    state: &mut SplitState,
    epoch: usize,
    to_train: &[String],
) -> Result<ScheduleEvent> {
    for id in to_train {
        if !state.validation.contains(id) {
            return Err(Error::param(format!(
                "swap candidate {id} is not in the validation set"
            )));
        }
    }
    let unique: BTreeSet<&String> = to_train.iter().collect();
    if unique.len() != to_train.len() {
        return Err(Error::param("swap candidates must be distinct"));
    }
    if state.train.len() < to_train.len() {
        return Err(Error::param(format!(
            "training set holds {} samples, cannot counter-swap {}",
            state.train.len(),
            to_train.len()
        )));
    }

    // The counter-swap pool is frozen before promotion, so a just-promoted
    // sample cannot bounce straight back to validation.
    let mut pool: Vec<String> = state.train.iter().cloned().collect();
    for id in to_train {
        state.set_partition(id, Partition::Train);
    }

    let k = to_train.len();
    let mut ids_to_val = Vec::with_capacity(k);
    for i in 0..k {
        let j = i + state.rng.next_below((pool.len() - i) as u64) as usize;
        pool.swap(i, j);
        ids_to_val.push(pool[i].clone());
    }
    for id in &ids_to_val {
        state.set_partition(id, Partition::Validation);
    }

    Ok(ScheduleEvent::Swap {
        epoch,
        ids_to_train: to_train.to_vec(),
        ids_to_val,
    })
}

/// Verifies a trainer response covers exactly the requested ids.
fn check_contract<V>(
    returned: &BTreeMap<String, V>,
    requested: &[String],
    call: &str,
) -> Result<()> {
    for id in requested {
        if !returned.contains_key(id) {
            return Err(Error::TrainerContract(format!(
                "{call} returned no loss for {id}"
            )));
        }
    }
    if returned.len() != requested.len() {
        let requested: BTreeSet<&String> = requested.iter().collect();
        let stray = returned
            .keys()
            .find(|id| !requested.contains(id))
            .expect("length mismatch implies a stray id");
        return Err(Error::TrainerContract(format!(
            "{call} returned unknown id {stray}"
        )));
    }
    Ok(())
}

/// Runs the full dynamic-update schedule and returns its event log.
///
/// Epoch numbers in events count completed training epochs. Each loop
/// iteration trains once, validates, and either swaps (logging the swap at
/// the current epoch) or — when no hard samples remain — merges validation
/// into training, logs the phase change, runs `final_epochs` more epochs
/// at the reduced rate, and terminates as converged. If `max_epochs` swap-
/// phase epochs complete without convergence the run terminates with the
/// cap reason instead.
pub fn run_schedule(
    sample_ids: &[String],
    trainer: &mut dyn Trainer,
    cfg: &SchedulerConfig,
) -> Result<ScheduleLog> {
    let mut state = initial_split(sample_ids, cfg)?;
    trainer.set_learning_rate(cfg.initial_lr);

    let mut events = Vec::new();
    let mut epoch = 0usize;
    loop {
        if epoch == cfg.max_epochs {
            events.push(ScheduleEvent::Termination {
                epoch,
                reason: TerminationReason::EpochCap,
            });
            return Ok(ScheduleLog { events });
        }
        epoch += 1;

        let train_ids = state.train_ids();
        let losses = trainer.train_epoch(&train_ids)?;
        check_contract(&losses, &train_ids, "train_epoch")?;
        for (id, loss) in &losses {
            state.records.get_mut(id).expect("known id").last_loss = Some(*loss);
        }

        let val_ids = state.validation_ids();
        let scored = trainer.validate(&val_ids)?;
        check_contract(&scored, &val_ids, "validate")?;
        for (id, (loss, is_hard)) in &scored {
            let record = state.records.get_mut(id).expect("known id");
            record.last_loss = Some(*loss);
            record.is_hard = *is_hard;
        }

        let promote = select_swap(&state, cfg.swap_count);
        if promote.is_empty() {
            for id in state.validation_ids() {
                state.set_partition(&id, Partition::Train);
            }
            let new_lr = cfg.initial_lr * cfg.final_lr_fraction;
            events.push(ScheduleEvent::PhaseChange { epoch, new_lr });
            trainer.set_learning_rate(new_lr);

            let all_ids = state.train_ids();
            for _ in 0..cfg.final_epochs {
                epoch += 1;
                let losses = trainer.train_epoch(&all_ids)?;
                check_contract(&losses, &all_ids, "train_epoch")?;
                for (id, loss) in &losses {
                    state.records.get_mut(id).expect("known id").last_loss = Some(*loss);
                }
            }
            events.push(ScheduleEvent::Termination {
                epoch,
                reason: TerminationReason::Converged,
            });
            return Ok(ScheduleLog { events });
        }
        events.push(apply_swap(&mut state, epoch, &promote)?);
    }
}

/// Deterministic scripted trainer.
///
/// Each sample's loss at epoch `e` is entry `e - 1` of its profile (the
/// last entry repeats once the profile runs out); samples without a
/// profile score `0.0`. A sample is hard when its loss exceeds the
/// threshold. The epoch counter advances on `train_epoch` calls, so
/// validation reads the losses of the epoch just trained.
pub struct MockTrainer {
    profiles: BTreeMap<String, Vec<f64>>,
    hard_threshold: f64,
    epoch: usize,
}

impl MockTrainer {
    pub fn new(profiles: BTreeMap<String, Vec<f64>>, hard_threshold: f64) -> Self {
        MockTrainer {
            profiles,
            hard_threshold,
            epoch: 0,
        }
    }

    fn loss_of(&self, id: &str) -> f64 {
        let at = self.epoch.saturating_sub(1);
        match self.profiles.get(id) {
            Some(seq) if !seq.is_empty() => seq[at.min(seq.len() - 1)],
            _ => 0.0,
        }
    }
}

impl Trainer for MockTrainer {
    fn train_epoch(&mut self, ids: &[String]) -> Result<BTreeMap<String, f64>> {
        self.epoch += 1;
        Ok(ids
            .iter()
            .map(|id| (id.clone(), self.loss_of(id)))
            .collect())
    }

    fn validate(&mut self, ids: &[String]) -> Result<BTreeMap<String, (f64, bool)>> {
        Ok(ids
            .iter()
            .map(|id| {
                let loss = self.loss_of(id);
                (id.clone(), (loss, loss > self.hard_threshold))
            })
            .collect())
    }
}
