#include "dcrbm/experiment.hpp"

#include <omp.h>

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <set>
#include <sstream>

#include "dcrbm/errors.hpp"
#include "dcrbm/kernels.hpp"
#include "dcrbm/serialize.hpp"
#include "io_util.hpp"

namespace dcrbm {

using nlohmann::json;

namespace {

std::string shortest(double x) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), x);
    return std::string(buf, res.ptr);
}

std::string fixed3(double x) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), x, std::chars_format::fixed, 3);
    return std::string(buf, res.ptr);
}

DatasetSpec parse_dataset(const json& j, const std::filesystem::path& base_dir) {
    DatasetSpec ds;
    if (j.contains("generator")) {
        ds.generator = j.at("generator").get<std::string>();
        ds.n = j.value("n", ds.n);
        ds.b = j.value("b", ds.b);
        ds.d = j.value("d", ds.d);
        ds.count = j.value("count", ds.count);
    } else if (j.contains("path")) {
        std::filesystem::path p = j.at("path").get<std::string>();
        ds.path = p.is_absolute() || base_dir.empty() ? p : base_dir / p;
        ds.format = parse_matrix_format(j.value("format", std::string("csv")));
        ds.dim = j.value("dim", std::size_t{0});
    } else {
        throw ConfigError("dataset needs either 'generator' or 'path'");
    }
    ds.binarize = j.value("binarize", ds.binarize);
    ds.limit = j.value("limit", ds.limit);
    ds.seed = j.value("seed", ds.seed);
    return ds;
}

// Visible dimension a generator will produce, or 0 when only known after loading.
std::size_t generator_dim(const DatasetSpec& ds) {
    if (ds.generator == "shifting-bar") {
        return static_cast<std::size_t>(std::max(ds.n, 0));
    }
    if (ds.generator == "bars-stripes") {
        return static_cast<std::size_t>(std::max(ds.d, 0) * std::max(ds.d, 0));
    }
    if (ds.generator == "strokes") {
        return 784;
    }
    return ds.dim;
}

void validate_dataset(const DatasetSpec& ds, const std::string& label, std::vector<std::string>& errors) {
    if (ds.generator.empty()) {
        if (!std::filesystem::exists(ds.path)) {
            errors.push_back(label + ": file not found: " + ds.path.string());
        }
        return;
    }
    if (ds.generator == "shifting-bar") {
        if (ds.b < 1 || ds.b >= ds.n) {
            errors.push_back(label + ": shifting-bar needs 1 <= b < n");
        }
    } else if (ds.generator == "bars-stripes") {
        if (ds.d < 1 || ds.d > 16) {
            errors.push_back(label + ": bars-stripes needs 1 <= d <= 16");
        }
    } else if (ds.generator == "strokes") {
        if (ds.count < 1) {
            errors.push_back(label + ": strokes needs count >= 1");
        }
    } else {
        errors.push_back(label + ": unknown generator '" + ds.generator + "'");
    }
}

EvaluationConfig parse_evaluation(const json& j) {
    EvaluationConfig ev;
    const std::string mode = j.value("mode", std::string("auto"));
    if (mode == "auto") {
        ev.mode = EvaluationMode::Auto;
    } else if (mode == "exact") {
        ev.mode = EvaluationMode::Exact;
    } else if (mode == "ais") {
        ev.mode = EvaluationMode::Ais;
    } else {
        throw ConfigError("unknown evaluation mode '" + mode + "'");
    }
    ev.enumeration_cap = j.value("enumeration_cap", ev.enumeration_cap);
    if (j.contains("ais")) {
        ev.ais.num_particles = j.at("ais").value("num_particles", ev.ais.num_particles);
        ev.ais.num_temps = j.at("ais").value("num_temps", ev.ais.num_temps);
    }
    return ev;
}

double sample_std(const std::vector<double>& xs, double mean) {
    if (xs.size() < 2) {
        return 0.0;
    }
    double ss = 0.0;
    for (double x : xs) {
        ss += (x - mean) * (x - mean);
    }
    return std::sqrt(ss / static_cast<double>(xs.size() - 1));
}

} // namespace

ExperimentSpec parse_experiment(const json& doc, const std::filesystem::path& base_dir) {
    ExperimentSpec spec;
    std::vector<std::string> errors;
    auto attempt = [&](const std::string& label, auto&& fn) {
        try {
            fn();
        } catch (const std::exception& e) {
            errors.push_back(label + ": " + e.what());
        }
    };

    if (!doc.is_object()) {
        throw ConfigError("experiment spec must be a JSON object");
    }
    attempt("schema_version", [&] {
        const int v = doc.value("schema_version", kExperimentSchemaVersion);
        if (v != kExperimentSchemaVersion) {
            throw ConfigError("unsupported schema_version " + std::to_string(v));
        }
    });
    attempt("name", [&] { spec.name = doc.value("name", spec.name); });
    attempt("dataset", [&] { spec.dataset = parse_dataset(doc.at("dataset"), base_dir); });
    attempt("test_dataset", [&] {
        if (doc.contains("test_dataset")) {
            spec.test_dataset = parse_dataset(doc.at("test_dataset"), base_dir);
        }
    });
    attempt("hidden", [&] { spec.hidden = doc.at("hidden").get<std::size_t>(); });
    attempt("trials", [&] { spec.trials = doc.at("trials").get<int>(); });
    attempt("seed_base", [&] { spec.seed_base = doc.value("seed_base", spec.seed_base); });
    attempt("allow_unmatched_budget",
            [&] { spec.allow_unmatched_budget = doc.value("allow_unmatched_budget", spec.allow_unmatched_budget); });
    attempt("evaluation", [&] {
        if (doc.contains("evaluation")) {
            spec.evaluation = parse_evaluation(doc.at("evaluation"));
        }
    });

    const json defaults = doc.value("defaults", json::object());
    if (!doc.contains("arms") || !doc.at("arms").is_array()) {
        errors.push_back("arms: missing or not an array");
    } else {
        std::size_t index = 0;
        for (const auto& arm_doc : doc.at("arms")) {
            const std::string label = "arms[" + std::to_string(index++) + "]";
            attempt(label, [&] {
                json merged = defaults;
                merged.update(arm_doc);
                ArmSpec arm;
                arm.config = config_from_json(merged);
                arm.name = merged.value("name", to_string(arm.config.algorithm));
                spec.arms.push_back(std::move(arm));
            });
        }
    }

    for (const auto& e : validate_experiment(spec)) {
        errors.push_back(e);
    }
    if (!errors.empty()) {
        std::ostringstream msg;
        msg << "invalid experiment spec (" << errors.size() << " problem" << (errors.size() == 1 ? "" : "s") << "):";
        for (const auto& e : errors) {
            msg << "\n  - " << e;
        }
        throw ConfigError(msg.str());
    }
    return spec;
}

ExperimentSpec load_experiment(const std::filesystem::path& path) {
    const std::string text = detail::read_file(path);
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(path.string() + ": " + e.what(), e.byte);
    }
    return parse_experiment(doc, path.parent_path());
}

std::vector<std::string> validate_experiment(const ExperimentSpec& spec) {
    std::vector<std::string> errors;
    if (spec.trials < 1) {
        errors.push_back("trials: must be >= 1");
    }
    if (spec.hidden < 1) {
        errors.push_back("hidden: must be >= 1");
    }
    if (spec.arms.empty()) {
        errors.push_back("arms: at least one arm is required");
    }
    validate_dataset(spec.dataset, "dataset", errors);
    if (spec.test_dataset) {
        validate_dataset(*spec.test_dataset, "test_dataset", errors);
    }
    try {
        spec.evaluation.ais.validate();
    } catch (const std::exception& e) {
        errors.push_back(std::string("evaluation.ais: ") + e.what());
    }
    const std::size_t m = generator_dim(spec.dataset);
    if (spec.evaluation.mode == EvaluationMode::Exact && m != 0 &&
        std::min(m, spec.hidden) > static_cast<std::size_t>(std::max(0, spec.evaluation.enumeration_cap))) {
        errors.push_back("evaluation: exact mode exceeds the enumeration cap; use ais");
    }

    std::set<std::string> names;
    for (const auto& arm : spec.arms) {
        if (!names.insert(arm.name).second) {
            errors.push_back("arm '" + arm.name + "': duplicate name");
        }
        try {
            arm.config.validate();
        } catch (const std::exception& e) {
            errors.push_back("arm '" + arm.name + "': " + e.what());
        }
    }
    if (!spec.allow_unmatched_budget && spec.arms.size() > 1) {
        const int budget = spec.arms.front().config.transitions_per_sample();
        for (const auto& arm : spec.arms) {
            const int b = arm.config.transitions_per_sample();
            if (b != budget) {
                errors.push_back("arm '" + arm.name + "': " + std::to_string(b) +
                                 " Gibbs transitions per sample, but '" + spec.arms.front().name + "' uses " +
                                 std::to_string(budget) + " (choose d * Kprime = K or set allow_unmatched_budget)");
            }
        }
    }
    return errors;
}

BinaryDataset materialize_dataset(const DatasetSpec& spec) {
    BinaryDataset ds;
    if (spec.generator == "shifting-bar") {
        ds = gen_shifting_bar(spec.n, spec.b);
    } else if (spec.generator == "bars-stripes") {
        ds = gen_bars_stripes(spec.d);
    } else if (spec.generator == "strokes") {
        RngStream rng(spec.seed, streams::kBinarize + 1);
        const Matrix gray = gen_stroke_images(spec.count, rng);
        RngStream bin_rng(spec.seed, streams::kBinarize);
        ds = binarize_statistical(gray, bin_rng, "strokes");
    } else if (spec.generator.empty()) {
        const Matrix values = load_matrix(spec.path, spec.format, spec.dim);
        if (spec.binarize) {
            RngStream rng(spec.seed, streams::kBinarize);
            ds = binarize_statistical(values, rng, spec.path.stem().string());
        } else {
            ds = BinaryDataset{spec.path.stem().string(), values};
            ds.validate();
        }
    } else {
        throw ConfigError("unknown generator '" + spec.generator + "'");
    }
    if (spec.limit > 0 && spec.limit < ds.size()) {
        ds.patterns = ds.patterns.leftCols(static_cast<Eigen::Index>(spec.limit)).eval();
    }
    return ds;
}

std::vector<ArmSummaryPoint> summarize_curves(const std::vector<TrainingRun>& trials) {
    std::vector<ArmSummaryPoint> out;
    if (trials.empty()) {
        return out;
    }
    const auto& ref = trials.front().curve;
    for (std::size_t k = 0; k < ref.size(); ++k) {
        std::vector<double> xs;
        for (const auto& t : trials) {
            if (k < t.curve.size()) {
                xs.push_back(t.curve[k].atll);
            }
        }
        double mean = 0.0;
        for (double x : xs) {
            mean += x;
        }
        mean /= static_cast<double>(xs.size());
        out.push_back(ArmSummaryPoint{ref[k].epoch, mean, sample_std(xs, mean), static_cast<int>(xs.size())});
    }
    return out;
}

std::optional<int> epoch_to_ninety_percent(const std::vector<ArmSummaryPoint>& summary) {
    if (summary.empty()) {
        return std::nullopt;
    }
    double best = summary.front().mean;
    for (const auto& p : summary) {
        best = std::max(best, p.mean);
    }
    const double start = summary.front().mean;
    if (!(best > start)) {
        return std::nullopt;
    }
    const double threshold = start + 0.9 * (best - start);
    for (const auto& p : summary) {
        if (p.mean >= threshold) {
            return p.epoch;
        }
    }
    return std::nullopt;
}

int resolve_worker_count(int requested) {
    if (const char* env = std::getenv("DCRBM_THREADS")) {
        int value = 0;
        const std::string text(env);
        const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
        if (res.ec == std::errc() && value > 0) {
            return value;
        }
    }
    return requested > 0 ? requested : omp_get_num_procs();
}

ExperimentResult run_experiment(const ExperimentSpec& spec, int workers) {
    const auto errors = validate_experiment(spec);
    if (!errors.empty()) {
        throw ConfigError("invalid experiment spec: " + errors.front());
    }
    const BinaryDataset train_set = materialize_dataset(spec.dataset);
    const BinaryDataset test_set = spec.test_dataset ? materialize_dataset(*spec.test_dataset) : train_set;
    if (test_set.dim() != train_set.dim()) {
        throw DimensionError("test set dimension differs from the training set");
    }

    ExperimentResult result;
    for (const auto& arm : spec.arms) {
        ArmResult ar;
        ar.arm = arm;
        ar.trials.resize(static_cast<std::size_t>(spec.trials));
        result.arms.push_back(std::move(ar));
    }

    const int arms = static_cast<int>(spec.arms.size());
    const int jobs = arms * spec.trials;
    const int slots = std::max(1, std::min(resolve_worker_count(workers), jobs));
    std::vector<std::exception_ptr> failures(static_cast<std::size_t>(jobs));

#pragma omp parallel for num_threads(slots) schedule(dynamic, 1)
    for (int job = 0; job < jobs; ++job) {
        const int a = job / spec.trials;
        const int t = job % spec.trials;
        try {
            TrainConfig cfg = spec.arms[static_cast<std::size_t>(a)].config;
            cfg.seed = spec.seed_base + static_cast<std::uint64_t>(t);
            result.arms[static_cast<std::size_t>(a)].trials[static_cast<std::size_t>(t)] =
                train(train_set.patterns, test_set.patterns, spec.hidden, cfg, spec.evaluation);
        } catch (...) {
            failures[static_cast<std::size_t>(job)] = std::current_exception();
        }
    }
    for (const auto& f : failures) {
        if (f) {
            std::rethrow_exception(f);
        }
    }

    std::optional<std::uint64_t> shared_budget;
    for (auto& ar : result.arms) {
        ar.summary = summarize_curves(ar.trials);
        ar.epoch_to_90pct = epoch_to_ninety_percent(ar.summary);
        std::set<std::uint64_t> seen;
        for (const auto& run : ar.trials) {
            seen.insert(run.epoch_transitions.begin(), run.epoch_transitions.end());
        }
        ar.transitions_per_epoch = seen.empty() ? 0 : *seen.begin();
        if (seen.size() > 1) {
            result.budget_parity = false;
        }
        if (!seen.empty()) {
            if (shared_budget && *shared_budget != ar.transitions_per_epoch) {
                result.budget_parity = false;
            }
            shared_budget = ar.transitions_per_epoch;
        }
    }
    for (int t = 0; t < spec.trials; ++t) {
        const auto& first = result.arms.front().trials[static_cast<std::size_t>(t)].initial_params;
        for (const auto& ar : result.arms) {
            if (!ar.trials[static_cast<std::size_t>(t)].initial_params.identical(first)) {
                result.init_equal_across_arms = false;
            }
        }
    }
    return result;
}

std::string curves_csv(const ExperimentResult& result) {
    std::string out = "arm,algorithm,trial,epoch,atll,atll_kind,wall_clock_s\n";
    for (const auto& ar : result.arms) {
        for (std::size_t t = 0; t < ar.trials.size(); ++t) {
            const TrainingRun& run = ar.trials[t];
            for (const auto& p : run.curve) {
                double elapsed = 0.0;
                for (int e = 0; e < p.epoch && e < static_cast<int>(run.epoch_seconds.size()); ++e) {
                    elapsed += run.epoch_seconds[static_cast<std::size_t>(e)];
                }
                out += ar.arm.name + "," + to_string(ar.arm.config.algorithm) + "," + std::to_string(t) + "," +
                       std::to_string(p.epoch) + "," + shortest(p.atll) + "," + to_string(p.kind) + "," +
                       fixed3(elapsed) + "\n";
            }
        }
    }
    return out;
}

json summary_json(const ExperimentSpec& spec, const ExperimentResult& result) {
    json arms = json::array();
    for (const auto& ar : result.arms) {
        json curve = json::array();
        for (const auto& p : ar.summary) {
            curve.push_back(json{{"epoch", p.epoch}, {"mean", p.mean}, {"std", p.std}, {"n", p.count}});
        }
        json cfg = config_to_json(ar.arm.config);
        cfg.erase("seed");
        json entry{{"name", ar.arm.name},
                   {"algorithm", to_string(ar.arm.config.algorithm)},
                   {"config", cfg},
                   {"trials", ar.trials.size()},
                   {"transitions_per_epoch", ar.transitions_per_epoch},
                   {"curve", curve},
                   {"final_mean", ar.summary.empty() ? 0.0 : ar.summary.back().mean},
                   {"final_std", ar.summary.empty() ? 0.0 : ar.summary.back().std},
                   {"epoch_to_90pct", ar.epoch_to_90pct ? json(*ar.epoch_to_90pct) : json(nullptr)}};
        arms.push_back(std::move(entry));
    }
    return json{{"schema_version", kResultsSchemaVersion},
                {"experiment", spec.name},
                {"hidden", spec.hidden},
                {"seed_base", spec.seed_base},
                {"budget_parity", result.budget_parity},
                {"init_equal_across_arms", result.init_equal_across_arms},
                {"arms", arms}};
}

void write_experiment_outputs(const ExperimentSpec& spec, const ExperimentResult& result,
                              const std::filesystem::path& out) {
    std::filesystem::create_directories(out);
    detail::write_file_atomic(out / "curves.csv", curves_csv(result));
    detail::write_file_atomic(out / "summary.json", summary_json(spec, result).dump(2) + "\n");

    // gnuplot: one index block per arm.
    std::string dat;
    for (const auto& ar : result.arms) {
        dat += "# " + ar.arm.name + "\n# epoch mean std n\n";
        for (const auto& p : ar.summary) {
            dat += std::to_string(p.epoch) + " " + shortest(p.mean) + " " + shortest(p.std) + " " +
                   std::to_string(p.count) + "\n";
        }
        dat += "\n\n";
    }
    detail::write_file_atomic(out / "summary.dat", dat);

    for (const auto& ar : result.arms) {
        const std::filesystem::path dir = out / "checkpoints" / ar.arm.name;
        for (std::size_t t = 0; t < ar.trials.size(); ++t) {
            save_params(dir / ("trial_" + std::to_string(t) + "_init.json"), ar.trials[t].initial_params);
            save_checkpoint(dir / ("trial_" + std::to_string(t) + "_final.json"), ar.trials[t].final_state);
        }
    }
}

EvaluationRecord evaluate_model_file(const std::filesystem::path& model, const Matrix& testset, AtllKind mode,
                                     const AisConfig& ais, std::uint64_t seed, int enumeration_cap) {
    const RbmParams params = load_model(model);
    if (static_cast<std::size_t>(testset.rows()) != params.dims.visible) {
        throw DimensionError("dataset dimension " + std::to_string(testset.rows()) +
                             " does not match the model's visible units " + std::to_string(params.dims.visible));
    }
    if (mode == AtllKind::Exact) {
        return evaluate_exact(params, testset, enumeration_cap);
    }
    return evaluate_ais(params, testset, ais, RngStream(seed, streams::kEvaluationBase));
}

} // namespace dcrbm
