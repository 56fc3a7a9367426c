#pragma once

// File formats. Every CSV starts with a provenance comment line
// ("# imugan <version> seed=<n>"); readers skip lines starting with '#'.
// JSON documents carry the same text in a "provenance" field.

#include "imugan/harness.hpp"
#include "imugan/preprocess.hpp"
#include "imugan/rcgan.hpp"
#include "imugan/semisup.hpp"
#include "imugan/simulator.hpp"
#include "imugan/trip.hpp"

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace imugan {

inline constexpr const char* kVersion = "0.1.0";

/// Malformed or unreadable input; the message starts with "path:line:".
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

std::string provenance(std::uint64_t seed);

/// Shortest round-trip decimal form; NaN becomes the empty string.
std::string format_double(double value);

namespace fs = std::filesystem;
using Json = nlohmann::json;

std::ofstream open_output(const fs::path& path);
Json read_json(const fs::path& path);
void write_json(const fs::path& path, const Json& doc);

// ---------------------------------------------------------------------------
// Trips

/// Raw trips: trip_id,t,long_acc,lat_acc,pitch,yaw,roll,label (t = sample index).
class RawCsvWriter {
public:
    RawCsvWriter(const fs::path& path, std::uint64_t seed);
    void write(const RawTrip& trip);

private:
    std::ofstream out_;
};

/// Calls `sink` once per trip, in file order. Rows of one trip must be contiguous.
void read_raw_csv(const fs::path& path, const std::function<void(RawTrip&&)>& sink);
std::vector<RawTrip> read_raw_csv(const fs::path& path);

/// Processed trips: same columns, t in seconds.
void write_trips_csv(const fs::path& path, std::span<const Trip> trips, std::uint64_t seed);
std::vector<Trip> read_trips_csv(const fs::path& path);

/// trip_id,label with the hidden class of every trip.
void write_ground_truth(const fs::path& path, std::span<const std::string> ids, std::span<const DrivingStyle> truth,
                        std::uint64_t seed);
std::vector<std::pair<std::string, DrivingStyle>> read_ground_truth(const fs::path& path);

// ---------------------------------------------------------------------------
// Features

/// trip_id,label,f0..f44.
void write_features_csv(const fs::path& path, std::span<const Trip> trips, const Matrix& features,
                        std::uint64_t seed);

struct FeatureTable {
    std::vector<std::string> ids;
    std::vector<std::optional<DrivingStyle>> labels;
    Matrix features;
};

FeatureTable read_features_csv(const fs::path& path);

/// column,name,channel,statistic for every feature column.
void write_feature_legend(const fs::path& path, std::uint64_t seed);

// ---------------------------------------------------------------------------
// JSON encodings

Json to_json(const Matrix& m);
Json to_json(const Vector& v);
Matrix matrix_from_json(const Json& j, const std::string& what);
Vector vector_from_json(const Json& j, const std::string& what);

Json to_json(const ScalerParams& s);
ScalerParams scaler_from_json(const Json& j);

Json to_json(const RcganConfig& c);
/// Missing keys keep the values in `base`.
RcganConfig rcgan_config_from_json(const Json& j, RcganConfig base = {});

/// Gate blocks are stored separately as W_i, W_f, W_o, W_c, U_*, V_i/V_f/V_o, b_*.
Json to_json(const LstmParams& p);
LstmParams lstm_from_json(const Json& j);

Json checkpoint_json(const GeneratorNet& g, const RcganConfig& config, std::uint64_t seed);
Json checkpoint_json(const DiscriminatorNet& d, const RcganConfig& config, std::uint64_t seed);
GeneratorNet generator_from_json(const Json& j, RcganConfig* config = nullptr);
DiscriminatorNet discriminator_from_json(const Json& j, RcganConfig* config = nullptr);

void write_loss_history(const fs::path& path, std::span<const LossRecord> history, std::uint64_t seed);
std::vector<LossRecord> read_loss_history(const fs::path& path);

Json autoencoder_json(const AutoencoderParams& ae, const ScalerParams& feature_scaler, std::span<const double> losses,
                      std::uint64_t seed);
AutoencoderParams autoencoder_from_json(const Json& j, ScalerParams* feature_scaler = nullptr);

Json classifier_json(const ClassifierParams& c, const ScalerParams& feature_scaler, std::uint64_t seed);
ClassifierParams classifier_from_json(const Json& j, ScalerParams* feature_scaler = nullptr);

Json to_json(const StyleProfile& p);
StyleProfile style_profile_from_json(const Json& j, StyleProfile base);

Json to_json(const GridSpec& g);
GridSpec grid_from_json(const Json& j, GridSpec base = {});

// ---------------------------------------------------------------------------
// Experiment configuration and reports

struct ExperimentFile {
    ExperimentConfig config;
    SimulationSettings simulation;
    /// When set, trips come from these files instead of the simulator.
    std::optional<fs::path> dataset;
    std::optional<fs::path> ground_truth;
};

ExperimentFile experiment_from_json(const Json& j, ExperimentFile base = {});
Json to_json(const ExperimentFile& e);

void write_roc_csv(const fs::path& path, const RocResult& roc, std::uint64_t seed);
RocResult read_roc_csv(const fs::path& path);

/// One row per cell: train,val,ratio,auroc,above_baseline,lr,epochs,activation,
/// val_auroc,train_size,val_size,test_size.
void write_run_csv(const fs::path& path, const RunResult& run);
RunResult read_run_csv(const fs::path& path);
void write_run_markdown(const fs::path& path, const RunResult& run);

/// 24 cell rows then one row with train = "overall".
void write_aggregate_csv(const fs::path& path, const AggregateReport& report, std::uint64_t seed);
AggregateReport read_aggregate_csv(const fs::path& path);
void write_aggregate_markdown(const fs::path& path, const AggregateReport& report, std::uint64_t seed);

} // namespace imugan
