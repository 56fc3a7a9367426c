#include "imugan/harness.hpp"

#include "imugan/features.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

namespace imugan {

std::string_view to_string(Source s) {
    switch (s) {
    case Source::R: return "R";
    case Source::F: return "F";
    case Source::RF: return "RF";
    }
    return "?";
}

Source source_from_string(std::string_view name) {
    if (name == "R") return Source::R;
    if (name == "F") return Source::F;
    if (name == "RF" || name == "R+F") return Source::RF;
    throw ContractViolation("unknown set source '" + std::string(name) + "'");
}

std::string cell_label(const CombinationSpec& spec) {
    return std::string(to_string(spec.train)) + "_" + std::string(to_string(spec.validation)) + "_" +
           std::to_string(static_cast<int>(std::lround(spec.ratio * 100)));
}

std::vector<CombinationSpec> table_layout(std::span<const double> ratios) {
    std::vector<CombinationSpec> out{{Source::R, Source::R, 0.0}};
    for (const auto& [train, validation] : kSourcePairs)
        for (double r : ratios) out.push_back(CombinationSpec{train, validation, r});
    return out;
}

// ---------------------------------------------------------------------------

HalfSplit stratified_halves(const std::vector<Trip>& trips, Rng& rng) {
    std::array<std::vector<std::size_t>, 2> by_class;
    for (std::size_t i = 0; i < trips.size(); ++i) {
        require(trips[i].label.has_value(), "split: trip '" + trips[i].id + "' has no label");
        by_class[static_cast<std::size_t>(*trips[i].label)].push_back(i);
    }
    HalfSplit out;
    bool extra_to_first = true;
    for (auto& members : by_class) {
        std::shuffle(members.begin(), members.end(), rng);
        std::size_t first_count = members.size() / 2;
        if (members.size() % 2 == 1) {
            first_count += extra_to_first ? 1 : 0;
            extra_to_first = !extra_to_first;
        }
        for (std::size_t k = 0; k < members.size(); ++k)
            (k < first_count ? out.first : out.second).push_back(trips[members[k]]);
    }
    return out;
}

namespace {

void require_balanced(const std::vector<Trip>& trips, const char* name) {
    std::size_t aggressive = 0;
    for (const Trip& t : trips) {
        require(t.label.has_value(), std::string(name) + ": unlabeled trip '" + t.id + "'");
        aggressive += *t.label == DrivingStyle::aggressive ? 1 : 0;
    }
    require(2 * aggressive == trips.size(), std::string(name) + ": classes must be balanced");
}

} // namespace

RunPartition make_partition(const std::vector<Trip>& real, const std::vector<std::vector<Trip>>& fakes,
                            std::span<const double> ratios, Rng& rng) {
    require(!real.empty(), "build_sets: R is empty");
    require_balanced(real, "build_sets: R");
    require(fakes.size() == ratios.size(), "build_sets: one fake set per ratio required");
    RunPartition p;
    p.real = stratified_halves(real, rng);
    p.ratios.assign(ratios.begin(), ratios.end());
    for (std::size_t k = 0; k < fakes.size(); ++k) {
        const double expected = ratios[k] * static_cast<double>(real.size());
        require(std::abs(static_cast<double>(fakes[k].size()) - expected) < 1e-9,
                "build_sets: |F| = " + std::to_string(fakes[k].size()) + " but ratio requires " +
                    std::to_string(expected));
        require_balanced(fakes[k], "build_sets: F");
        p.fake_halves.push_back(stratified_halves(fakes[k], rng));
    }
    p.fakes = fakes;
    return p;
}

TrainValidation build_sets(const RunPartition& partition, const CombinationSpec& spec) {
    TrainValidation out;
    if (spec.is_baseline()) {
        require(spec.train == Source::R && spec.validation == Source::R, "build_sets: baseline must be R/R");
        out.train = partition.real.first;
        out.validation = partition.real.second;
        return out;
    }
    std::size_t k = 0;
    while (k < partition.ratios.size() && partition.ratios[k] != spec.ratio) ++k;
    require(k < partition.ratios.size(), "build_sets: no fakes generated for ratio " + std::to_string(spec.ratio));

    const bool fake_train = spec.train != Source::R;
    const bool fake_val = spec.validation != Source::R;
    const bool halves = fake_train && fake_val;
    const std::vector<Trip>& f_train = halves ? partition.fake_halves[k].first : partition.fakes[k];
    const std::vector<Trip>& f_val = halves ? partition.fake_halves[k].second : partition.fakes[k];

    auto assemble = [](Source source, const std::vector<Trip>& r, const std::vector<Trip>& f) {
        std::vector<Trip> set;
        if (source != Source::F) set.insert(set.end(), r.begin(), r.end());
        if (source != Source::R) set.insert(set.end(), f.begin(), f.end());
        return set;
    };
    out.train = assemble(spec.train, partition.real.first, f_train);
    out.validation = assemble(spec.validation, partition.real.second, f_val);
    return out;
}

TrainValidation build_sets(const std::vector<Trip>& real, const std::vector<Trip>& fake, const CombinationSpec& spec,
                           Rng& rng) {
    if (spec.is_baseline()) return build_sets(make_partition(real, {}, {}, rng), spec);
    const std::vector<double> ratios{spec.ratio};
    return build_sets(make_partition(real, {fake}, ratios, rng), spec);
}

// ---------------------------------------------------------------------------

LabeledSet labeled_features(std::span<const Trip> trips, const ScalerParams& feature_scaler) {
    LabeledSet out{apply_minmax(feature_scaler, extract_features(trips)), {}};
    out.y.reserve(trips.size());
    for (const Trip& t : trips) {
        require(t.label.has_value(), "labeled_features: trip '" + t.id + "' has no label");
        out.y.push_back(*t.label == DrivingStyle::aggressive ? 1 : 0);
    }
    return out;
}

ExperimentData prepare_from(std::vector<Trip> trips, const std::vector<DrivingStyle>& truth) {
    require(trips.size() == truth.size(), "prepare: one ground-truth class per trip required");
    ExperimentData data;
    for (std::size_t i = 0; i < trips.size(); ++i) {
        Trip test = trips[i];
        test.label = truth[i];
        data.test.push_back(std::move(test));
        data.test_labels.push_back(truth[i] == DrivingStyle::aggressive ? 1 : 0);
        if (trips[i].label.has_value()) {
            require(*trips[i].label == truth[i], "prepare: label of '" + trips[i].id + "' disagrees with ground truth");
            data.labeled.push_back(std::move(trips[i]));
        } else {
            data.unlabeled.push_back(std::move(trips[i]));
        }
    }
    require(!data.labeled.empty(), "prepare: no labeled trips");
    require(!data.unlabeled.empty(), "prepare: no unlabeled trips for autoencoder pretraining");
    const Matrix raw_unlabeled = extract_features(data.unlabeled);
    data.feature_scaler = fit_minmax(std::span<const Matrix>(&raw_unlabeled, 1));
    data.unlabeled_features = apply_minmax(data.feature_scaler, raw_unlabeled);
    data.test_features = apply_minmax(data.feature_scaler, extract_features(data.test));
    return data;
}

ExperimentData prepare_simulated(const SimulationSettings& settings) {
    std::vector<Trip> conditioned;
    std::vector<DrivingStyle> truth;
    std::vector<std::size_t> fit;
    simulate_each(settings, [&](RawTrip&& raw, DrivingStyle style) {
        if (raw.label.has_value()) fit.push_back(conditioned.size());
        conditioned.push_back(condition_trip(raw));
        truth.push_back(style);
    });
    ProcessedDataset processed = scale_dataset(std::move(conditioned), fit);
    return prepare_from(std::move(processed.trips), truth);
}

void ExperimentConfig::validate() const {
    require(runs >= 1, "experiment: runs must be positive");
    require(jobs >= 1, "experiment: jobs must be positive");
    require(ae_epochs >= 0 && ae_learning_rate > 0, "experiment: invalid autoencoder settings");
    require(!ratios.empty() || baseline_only, "experiment: no ratios");
    for (double r : ratios) require(r > 0, "experiment: ratios must be positive");
    rcgan.validate();
}

std::uint64_t run_seed(std::uint64_t base, int run) {
    return derive_seed(base, static_cast<std::uint64_t>(run));
}

const CellResult& RunResult::baseline() const {
    for (const CellResult& c : cells)
        if (c.spec.is_baseline()) return c;
    throw ContractViolation("run result has no baseline cell");
}

RunResult run_experiment(const ExperimentData& data, const ExperimentConfig& config, int run) {
    config.validate();
    RunResult result;
    result.run = run;
    result.seed = run_seed(config.seed, run);

    std::vector<std::vector<Trip>> fakes;
    std::vector<double> ratios;
    if (!config.baseline_only) {
        RcganConfig gan_config = config.rcgan;
        gan_config.seed = derive_seed(result.seed, "rcgan");
        Rng gan_rng(gan_config.seed);
        RcganModel gan = train_rcgan(data.labeled, gan_config, gan_rng);
        result.gan_history = std::move(gan.history);
        Rng synth_rng(derive_seed(result.seed, "synthesize"));
        ratios = config.ratios;
        for (double ratio : ratios)
            fakes.push_back(synthesize(gan.generator, ratio, static_cast<int>(data.labeled.size()), synth_rng,
                                       "fake" + std::to_string(static_cast<int>(std::lround(ratio * 100))),
                                       gan_config.seq_len));
    }

    Rng ae_rng(derive_seed(result.seed, "autoencoder"));
    const AutoencoderFit ae =
        train_autoencoder(data.unlabeled_features, config.ae_epochs, config.ae_learning_rate, ae_rng);

    Rng split_rng(derive_seed(result.seed, "split"));
    const RunPartition partition = make_partition(data.labeled, fakes, ratios, split_rng);

    std::vector<CombinationSpec> layout =
        config.baseline_only ? std::vector<CombinationSpec>{{Source::R, Source::R, 0.0}} : table_layout(ratios);
    for (std::size_t cell = 0; cell < layout.size(); ++cell) {
        const CombinationSpec& spec = layout[cell];
        try {
            const TrainValidation sets = build_sets(partition, spec);
            const LabeledSet train = labeled_features(sets.train, data.feature_scaler);
            const LabeledSet validation = labeled_features(sets.validation, data.feature_scaler);
            const GridResult grid =
                grid_search(ae.params, train, validation, config.grid, derive_seed(result.seed, 1000 + cell));
            const Vector scores = predict_scores(grid.best, data.test_features);
            CellResult cr;
            cr.spec = spec;
            cr.chosen = grid.best_entry;
            cr.train_size = train.size();
            cr.validation_size = validation.size();
            cr.test_size = data.test_features.rows();
            cr.test_roc = auroc(std::span<const double>(scores.data(), static_cast<std::size_t>(scores.size())),
                                data.test_labels);
            cr.test_auroc = cr.test_roc.auc;
            result.cells.push_back(std::move(cr));
        } catch (const ContractViolation& e) {
            throw ContractViolation("cell " + cell_label(spec) + ": " + e.what());
        } catch (const NumericalError& e) {
            throw NumericalError("cell " + cell_label(spec) + ": " + e.what());
        }
    }
    return result;
}

std::vector<RunResult> run_experiments(const ExperimentData& data, const ExperimentConfig& config,
                                       const RunCallback& on_run) {
    config.validate();
    std::vector<RunResult> results(static_cast<std::size_t>(config.runs));
    std::atomic<int> next{0};
    std::mutex callback_mutex;
    std::exception_ptr failure;

    auto worker = [&] {
        for (int run = next++; run < config.runs; run = next++) {
            try {
                results[static_cast<std::size_t>(run)] = run_experiment(data, config, run);
                if (on_run) {
                    std::lock_guard lock(callback_mutex);
                    on_run(results[static_cast<std::size_t>(run)]);
                }
            } catch (...) {
                std::lock_guard lock(callback_mutex);
                if (!failure) failure = std::current_exception();
                next = config.runs;
            }
        }
    };
    const int threads = std::min(config.jobs, config.runs);
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    if (failure) std::rethrow_exception(failure);
    return results;
}

// ---------------------------------------------------------------------------

namespace {

bool same_or_both_nan(double a, double b) {
    return (std::isnan(a) && std::isnan(b)) || a == b;
}

} // namespace

bool CellAggregate::operator==(const CellAggregate& other) const {
    return spec == other.spec && count == other.count && same_or_both_nan(mean, other.mean) &&
           same_or_both_nan(sd, other.sd);
}

bool AggregateReport::operator==(const AggregateReport& other) const {
    return runs == other.runs && runs_with_any == other.runs_with_any && same_or_both_nan(fraction, other.fraction) &&
           cells == other.cells;
}

AggregateReport aggregate(std::span<const RunResult> results) {
    require(!results.empty(), "aggregate: no runs");
    AggregateReport report;
    report.runs = static_cast<int>(results.size());

    std::vector<CombinationSpec> specs;
    for (const CellResult& c : results.front().cells)
        if (!c.spec.is_baseline()) specs.push_back(c.spec);
    std::vector<std::vector<double>> above(specs.size());

    for (const RunResult& r : results) {
        const double baseline = r.baseline().test_auroc;
        bool any = false;
        std::size_t k = 0;
        for (const CellResult& c : r.cells) {
            if (c.spec.is_baseline()) continue;
            require(k < specs.size() && c.spec == specs[k], "aggregate: runs have different cell layouts");
            if (c.test_auroc > baseline) {
                above[k].push_back(c.test_auroc);
                any = true;
            }
            ++k;
        }
        require(k == specs.size(), "aggregate: runs have different cell layouts");
        report.runs_with_any += any ? 1 : 0;
    }
    report.fraction = static_cast<double>(report.runs_with_any) / static_cast<double>(report.runs);

    const double nan = std::numeric_limits<double>::quiet_NaN();
    for (std::size_t k = 0; k < specs.size(); ++k) {
        CellAggregate agg{specs[k], static_cast<int>(above[k].size()), nan, nan};
        if (!above[k].empty()) {
            double sum = 0.0;
            for (double v : above[k]) sum += v;
            agg.mean = sum / static_cast<double>(above[k].size());
        }
        if (above[k].size() >= 2) {
            double ss = 0.0;
            for (double v : above[k]) ss += (v - agg.mean) * (v - agg.mean);
            agg.sd = std::sqrt(ss / static_cast<double>(above[k].size() - 1));
        }
        report.cells.push_back(agg);
    }
    return report;
}

std::vector<PairSummary> pooled_by_pair(const AggregateReport& report) {
    std::vector<PairSummary> out;
    for (const CellAggregate& cell : report.cells) {
        auto it = std::find_if(out.begin(), out.end(), [&](const PairSummary& p) {
            return p.train == cell.spec.train && p.validation == cell.spec.validation;
        });
        if (it == out.end()) {
            out.push_back(PairSummary{cell.spec.train, cell.spec.validation, {}, 0, 0.0, 0.0});
            it = out.end() - 1;
        }
        it->counts.push_back(cell.count);
    }
    const double nan = std::numeric_limits<double>::quiet_NaN();
    for (PairSummary& pair : out) {
        double sum = 0.0, sum_sq = 0.0;
        int n = 0;
        for (const CellAggregate& cell : report.cells) {
            if (cell.spec.train != pair.train || cell.spec.validation != pair.validation || cell.count == 0) continue;
            n += cell.count;
            sum += cell.count * cell.mean;
            const double within = cell.count >= 2 ? (cell.count - 1) * cell.sd * cell.sd : 0.0;
            sum_sq += within + cell.count * cell.mean * cell.mean;
        }
        pair.total = n;
        pair.mean = n > 0 ? sum / n : nan;
        pair.sd = n > 1 ? std::sqrt(std::max(0.0, (sum_sq - n * pair.mean * pair.mean) / (n - 1))) : nan;
    }
    return out;
}

} // namespace imugan
