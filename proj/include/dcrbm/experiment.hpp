#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "dcrbm/data.hpp"
#include "dcrbm/evaluator.hpp"
#include "dcrbm/trainers.hpp"

namespace dcrbm {

inline constexpr int kExperimentSchemaVersion = 1;
inline constexpr int kResultsSchemaVersion = 1;

/// Where a dataset comes from: a generator or a file.
struct DatasetSpec {
    std::string generator;  // "shifting-bar", "bars-stripes", "strokes" or empty for a file
    int n = 9;              // shifting-bar length
    int b = 1;              // shifting-bar bar width
    int d = 3;              // bars-stripes side
    int count = 1000;       // strokes image count
    std::filesystem::path path;
    MatrixFormat format = MatrixFormat::Csv;
    std::size_t dim = 0;
    bool binarize = false;  // statistical binarization of grayscale files
    std::size_t limit = 0;  // keep only the first `limit` samples (0 = all)
    std::uint64_t seed = 0; // binarization / generation seed
};

struct ArmSpec {
    std::string name;
    TrainConfig config;  // seed is overwritten per trial
};

struct ExperimentSpec {
    std::string name = "experiment";
    DatasetSpec dataset;
    std::optional<DatasetSpec> test_dataset;  // defaults to the training set
    std::size_t hidden = 4;
    int trials = 1;
    std::uint64_t seed_base = 1;
    bool allow_unmatched_budget = false;
    EvaluationConfig evaluation;
    std::vector<ArmSpec> arms;
};

/// Parses a spec document. Every validation failure is collected and
/// reported together in one ConfigError before anything runs.
ExperimentSpec parse_experiment(const nlohmann::json& doc, const std::filesystem::path& base_dir = {});
ExperimentSpec load_experiment(const std::filesystem::path& path);

/// Returns the list of violations (empty when valid).
std::vector<std::string> validate_experiment(const ExperimentSpec& spec);

BinaryDataset materialize_dataset(const DatasetSpec& spec);

struct ArmSummaryPoint {
    int epoch = 0;
    double mean = 0.0;
    double std = 0.0;
    int count = 0;
};

struct ArmResult {
    ArmSpec arm;
    std::vector<TrainingRun> trials;
    std::vector<ArmSummaryPoint> summary;
    std::optional<int> epoch_to_90pct;
    std::uint64_t transitions_per_epoch = 0;
};

struct ExperimentResult {
    std::vector<ArmResult> arms;
    bool budget_parity = true;
    bool init_equal_across_arms = true;
};

/// Runs every (arm, trial) pair on `workers` slots (0 = all cores).
ExperimentResult run_experiment(const ExperimentSpec& spec, int workers = 0);

/// Writes curves.csv, summary.json, summary.dat and checkpoints/ under `out`.
void write_experiment_outputs(const ExperimentSpec& spec, const ExperimentResult& result,
                              const std::filesystem::path& out);

/// Mean and sample standard deviation across trials at each eval epoch.
std::vector<ArmSummaryPoint> summarize_curves(const std::vector<TrainingRun>& trials);

/// First epoch whose mean ATLL recovers 90% of the gain from epoch 0 to
/// the best mean ATLL.
std::optional<int> epoch_to_ninety_percent(const std::vector<ArmSummaryPoint>& summary);

std::string curves_csv(const ExperimentResult& result);
nlohmann::json summary_json(const ExperimentSpec& spec, const ExperimentResult& result);

/// Evaluates a params file or checkpoint on a dataset.
EvaluationRecord evaluate_model_file(const std::filesystem::path& model, const Matrix& testset, AtllKind mode,
                                     const AisConfig& ais, std::uint64_t seed,
                                     int enumeration_cap = kDefaultEnumerationCap);

/// Worker count: DCRBM_THREADS overrides `requested`; 0 means all cores.
int resolve_worker_count(int requested);

} // namespace dcrbm
