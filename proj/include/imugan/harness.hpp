#pragma once

// Extrinsic evaluation protocol: one RCGAN per run, fakes at several ratios,
// one autoencoder per run, and a grid-searched classifier for every
// (training source, validation source, ratio) cell, scored on all real trips.

#include "imugan/preprocess.hpp"
#include "imugan/rcgan.hpp"
#include "imugan/semisup.hpp"
#include "imugan/simulator.hpp"

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace imugan {

enum class Source { R, F, RF };

std::string_view to_string(Source s);
Source source_from_string(std::string_view name);

struct CombinationSpec {
    Source train = Source::R;
    Source validation = Source::R;
    double ratio = 0.0; // 0 marks the baseline

    bool is_baseline() const { return ratio == 0.0; }
    bool operator==(const CombinationSpec&) const = default;
};

std::string cell_label(const CombinationSpec& spec); // e.g. "RF_R_50"

/// Non-baseline (training, validation) pairs in report order.
inline constexpr std::array<std::pair<Source, Source>, 8> kSourcePairs = {{{Source::RF, Source::RF},
                                                                           {Source::R, Source::F},
                                                                           {Source::F, Source::R},
                                                                           {Source::RF, Source::R},
                                                                           {Source::F, Source::F},
                                                                           {Source::R, Source::RF},
                                                                           {Source::F, Source::RF},
                                                                           {Source::RF, Source::F}}};

inline const std::vector<double> kDefaultRatios = {0.5, 1.0, 1.5};

/// Baseline first, then every source pair crossed with every ratio.
std::vector<CombinationSpec> table_layout(std::span<const double> ratios = kDefaultRatios);

// ---------------------------------------------------------------------------
// Set construction

/// A stratified two-way split: for every class, ceil/floor halves alternate
/// between the sides so both halves have equal total size when possible.
struct HalfSplit {
    std::vector<Trip> first;
    std::vector<Trip> second;
};

HalfSplit stratified_halves(const std::vector<Trip>& trips, Rng& rng);

struct RunPartition {
    HalfSplit real;                  // first = R_tr, second = R_val
    std::vector<std::vector<Trip>> fakes; // per ratio index, all fakes
    std::vector<HalfSplit> fake_halves;   // per ratio index
    std::vector<double> ratios;
};

RunPartition make_partition(const std::vector<Trip>& real, const std::vector<std::vector<Trip>>& fakes,
                            std::span<const double> ratios, Rng& rng);

struct TrainValidation {
    std::vector<Trip> train;
    std::vector<Trip> validation;
};

/// "R" means R_tr on the training side and R_val on the validation side. F is
/// used whole when it appears on one side only and halved when on both.
TrainValidation build_sets(const RunPartition& partition, const CombinationSpec& spec);

/// Single-shot form: splits R (and F) with `rng`, then builds the cell.
TrainValidation build_sets(const std::vector<Trip>& real, const std::vector<Trip>& fake, const CombinationSpec& spec,
                           Rng& rng);

// ---------------------------------------------------------------------------
// Experiment

struct ExperimentData {
    std::vector<Trip> labeled;    // R: scaled, labeled
    std::vector<Trip> unlabeled;  // scaled, label stripped
    std::vector<Trip> test;       // every real trip with its ground-truth label
    /// Feature-space MinMax fitted on the unlabeled trips' features.
    ScalerParams feature_scaler;
    Matrix unlabeled_features;    // scaled
    Matrix test_features;         // scaled
    std::vector<int> test_labels;
};

/// Scaled feature rows and 0/1 labels for labeled trips.
LabeledSet labeled_features(std::span<const Trip> trips, const ScalerParams& feature_scaler);

/// Simulates, conditions and scales a dataset (MinMax fit on the labeled trips).
ExperimentData prepare_simulated(const SimulationSettings& settings);

/// Builds experiment inputs from already scaled trips and their ground truth.
ExperimentData prepare_from(std::vector<Trip> trips, const std::vector<DrivingStyle>& truth);

struct ExperimentConfig {
    int runs = 20;
    std::uint64_t seed = 1;
    RcganConfig rcgan;
    GridSpec grid;
    std::vector<double> ratios = kDefaultRatios;
    int ae_epochs = 100;
    double ae_learning_rate = 0.01;
    /// Only the baseline cell; no RCGAN is trained.
    bool baseline_only = false;
    int jobs = 1;

    void validate() const;
};

struct CellResult {
    CombinationSpec spec;
    double test_auroc = 0.0;
    GridEntry chosen;
    Index train_size = 0;
    Index validation_size = 0;
    Index test_size = 0;
    RocResult test_roc;
};

struct RunResult {
    int run = 0;
    std::uint64_t seed = 0;
    std::vector<CellResult> cells; // table_layout order
    std::vector<LossRecord> gan_history;

    const CellResult& baseline() const;
};

std::uint64_t run_seed(std::uint64_t base, int run);

RunResult run_experiment(const ExperimentData& data, const ExperimentConfig& config, int run);

using RunCallback = std::function<void(const RunResult&)>;

/// Runs 0..runs-1 on up to `config.jobs` threads; results are ordered by run.
std::vector<RunResult> run_experiments(const ExperimentData& data, const ExperimentConfig& config,
                                       const RunCallback& on_run = {});

// ---------------------------------------------------------------------------
// Aggregation

struct CellAggregate {
    CombinationSpec spec;
    int count = 0;      // runs strictly above their own baseline
    double mean = 0.0;  // of those above-baseline AUROCs, NaN when count = 0
    double sd = 0.0;    // sample SD, NaN when count < 2

    bool operator==(const CellAggregate& other) const;
};

struct AggregateReport {
    int runs = 0;
    int runs_with_any = 0; // runs with at least one cell above baseline
    double fraction = 0.0;
    std::vector<CellAggregate> cells; // non-baseline cells in table_layout order

    bool operator==(const AggregateReport& other) const;
};

AggregateReport aggregate(std::span<const RunResult> results);

/// Counts per ratio plus mean/SD pooled over all above-baseline AUROCs of one
/// source pair (recovered from per-cell count/mean/SD).
struct PairSummary {
    Source train = Source::R;
    Source validation = Source::R;
    std::vector<int> counts;
    int total = 0;
    double mean = 0.0;
    double sd = 0.0;
};

std::vector<PairSummary> pooled_by_pair(const AggregateReport& report);

} // namespace imugan
