#include "imugan/io.hpp"

#include "imugan/features.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

namespace imugan {

std::string provenance(std::uint64_t seed) {
    return std::string("imugan ") + kVersion + " seed=" + std::to_string(seed);
}

std::string format_double(double value) {
    if (std::isnan(value)) return {};
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, value);
    return std::string(buf, end);
}

std::ofstream open_output(const fs::path& path) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError(path.string() + ": cannot open for writing");
    return out;
}

Json read_json(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError(path.string() + ": cannot open");
    try {
        return Json::parse(in);
    } catch (const Json::parse_error& e) {
        throw IoError(path.string() + ": byte " + std::to_string(e.byte) + ": malformed JSON");
    }
}

void write_json(const fs::path& path, const Json& doc) {
    std::ofstream out = open_output(path);
    out << doc.dump(2) << '\n';
}

// ---------------------------------------------------------------------------

namespace {

class CsvReader {
public:
    explicit CsvReader(const fs::path& path) : path_(path), in_(path) {
        if (!in_) throw IoError(path.string() + ": cannot open");
    }

    /// Next data row (comments and blank lines skipped); false at end of file.
    bool next(std::vector<std::string_view>& fields) {
        while (std::getline(in_, line_)) {
            ++line_no_;
            if (!line_.empty() && line_.back() == '\r') line_.pop_back();
            if (line_.empty()) continue;
            if (line_.front() == '#') {
                comments_.push_back(line_.substr(1));
                continue;
            }
            fields.clear();
            std::string_view rest(line_);
            for (;;) {
                const auto comma = rest.find(',');
                fields.push_back(rest.substr(0, comma));
                if (comma == std::string_view::npos) break;
                rest.remove_prefix(comma + 1);
            }
            return true;
        }
        return false;
    }

    void expect_header(const std::vector<std::string>& expected) {
        std::vector<std::string_view> fields;
        if (!next(fields)) fail("missing header");
        if (fields.size() != expected.size()) fail("expected " + std::to_string(expected.size()) + " columns");
        for (std::size_t k = 0; k < expected.size(); ++k)
            if (fields[k] != expected[k])
                fail("expected column '" + expected[k] + "', found '" + std::string(fields[k]) + "'");
    }

    void expect_fields(const std::vector<std::string_view>& fields, std::size_t n) {
        if (fields.size() != n)
            fail("expected " + std::to_string(n) + " fields, found " + std::to_string(fields.size()));
    }

    double number(std::string_view s, bool allow_empty = false) {
        if (s.empty()) {
            if (allow_empty) return std::numeric_limits<double>::quiet_NaN();
            fail("empty numeric field");
        }
        double v = 0.0;
        auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (ec != std::errc() || ptr != s.data() + s.size()) fail("not a number: '" + std::string(s) + "'");
        return v;
    }

    long long integer(std::string_view s) {
        long long v = 0;
        auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (s.empty() || ec != std::errc() || ptr != s.data() + s.size())
            fail("not an integer: '" + std::string(s) + "'");
        return v;
    }

    std::optional<DrivingStyle> label(std::string_view s) {
        try {
            return style_from_string(s);
        } catch (const ContractViolation&) {
            fail("unknown label '" + std::string(s) + "'");
        }
    }

    [[noreturn]] void fail(const std::string& message) const {
        throw IoError(path_.string() + ":" + std::to_string(line_no_) + ": " + message);
    }

    const std::vector<std::string>& comments() const { return comments_; }

private:
    fs::path path_;
    std::ifstream in_;
    std::string line_;
    std::size_t line_no_ = 0;
    std::vector<std::string> comments_;
};

std::vector<std::string> trip_header() {
    std::vector<std::string> h{"trip_id", "t"};
    for (auto name : kChannelNames) h.emplace_back(name);
    h.emplace_back("label");
    return h;
}

void append_trip_rows(std::string& buf, const std::string& id, const Matrix& values,
                      const std::optional<DrivingStyle>& label) {
    const std::string_view label_text = label_string(label);
    for (Index t = 0; t < values.rows(); ++t) {
        buf += id;
        buf += ',';
        buf += std::to_string(t);
        for (Index c = 0; c < values.cols(); ++c) {
            buf += ',';
            buf += format_double(values(t, c));
        }
        buf += ',';
        buf += label_text;
        buf += '\n';
    }
}

std::string join_header(const std::vector<std::string>& cols) {
    std::string s;
    for (std::size_t k = 0; k < cols.size(); ++k) s += (k ? "," : "") + cols[k];
    return s;
}

/// Reads contiguous per-trip row blocks of the shared trip format.
void read_trip_blocks(const fs::path& path,
                      const std::function<void(std::string&&, Matrix&&, std::optional<DrivingStyle>)>& sink) {
    CsvReader reader(path);
    reader.expect_header(trip_header());
    std::vector<std::string_view> fields;
    std::string current;
    std::optional<DrivingStyle> label;
    std::vector<double> values;
    std::vector<std::string> seen;
    long long expected_t = 0;

    auto flush = [&] {
        if (current.empty()) return;
        const auto rows = static_cast<Index>(values.size() / kChannels);
        Matrix m(rows, kChannels);
        for (Index r = 0; r < rows; ++r)
            for (Index c = 0; c < kChannels; ++c) m(r, c) = values[static_cast<std::size_t>(r * kChannels + c)];
        sink(std::move(current), std::move(m), label);
        current.clear();
        values.clear();
    };

    while (reader.next(fields)) {
        reader.expect_fields(fields, kChannels + 3);
        if (fields[0].empty()) reader.fail("empty trip_id");
        if (fields[0] != current) {
            flush();
            current = std::string(fields[0]);
            for (const std::string& s : seen)
                if (s == current) reader.fail("rows of trip '" + current + "' are not contiguous");
            seen.push_back(current);
            label = reader.label(fields[kChannels + 2]);
            expected_t = 0;
        } else if (reader.label(fields[kChannels + 2]) != label) {
            reader.fail("label changes within trip '" + current + "'");
        }
        if (reader.integer(fields[1]) != expected_t) reader.fail("expected t = " + std::to_string(expected_t));
        ++expected_t;
        for (int c = 0; c < kChannels; ++c) values.push_back(reader.number(fields[static_cast<std::size_t>(2 + c)]));
    }
    flush();
}

} // namespace

RawCsvWriter::RawCsvWriter(const fs::path& path, std::uint64_t seed) : out_(open_output(path)) {
    out_ << "# " << provenance(seed) << '\n' << join_header(trip_header()) << '\n';
}

void RawCsvWriter::write(const RawTrip& trip) {
    std::string buf;
    buf.reserve(static_cast<std::size_t>(trip.samples.rows()) * 96);
    append_trip_rows(buf, trip.id, trip.samples, trip.label);
    out_.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (!out_) throw IoError("raw CSV: write failed for trip '" + trip.id + "'");
}

void read_raw_csv(const fs::path& path, const std::function<void(RawTrip&&)>& sink) {
    read_trip_blocks(path, [&](std::string&& id, Matrix&& m, std::optional<DrivingStyle> label) {
        sink(RawTrip{std::move(id), std::move(m), label});
    });
}

std::vector<RawTrip> read_raw_csv(const fs::path& path) {
    std::vector<RawTrip> out;
    read_raw_csv(path, [&](RawTrip&& t) { out.push_back(std::move(t)); });
    return out;
}

void write_trips_csv(const fs::path& path, std::span<const Trip> trips, std::uint64_t seed) {
    std::ofstream out = open_output(path);
    out << "# " << provenance(seed) << '\n' << join_header(trip_header()) << '\n';
    std::string buf;
    for (const Trip& t : trips) {
        buf.clear();
        append_trip_rows(buf, t.id, t.values, t.label);
        out << buf;
    }
}

std::vector<Trip> read_trips_csv(const fs::path& path) {
    std::vector<Trip> out;
    read_trip_blocks(path, [&](std::string&& id, Matrix&& m, std::optional<DrivingStyle> label) {
        out.push_back(Trip{std::move(id), std::move(m), label});
    });
    return out;
}

void write_ground_truth(const fs::path& path, std::span<const std::string> ids, std::span<const DrivingStyle> truth,
                        std::uint64_t seed) {
    require(ids.size() == truth.size(), "ground truth: one class per trip id required");
    std::ofstream out = open_output(path);
    out << "# " << provenance(seed) << "\ntrip_id,label\n";
    for (std::size_t i = 0; i < ids.size(); ++i) out << ids[i] << ',' << to_string(truth[i]) << '\n';
}

std::vector<std::pair<std::string, DrivingStyle>> read_ground_truth(const fs::path& path) {
    CsvReader reader(path);
    reader.expect_header({"trip_id", "label"});
    std::vector<std::pair<std::string, DrivingStyle>> out;
    std::vector<std::string_view> fields;
    while (reader.next(fields)) {
        reader.expect_fields(fields, 2);
        const auto label = reader.label(fields[1]);
        if (!label) reader.fail("ground truth must be normal or aggressive");
        out.emplace_back(std::string(fields[0]), *label);
    }
    return out;
}

// ---------------------------------------------------------------------------

namespace {

std::vector<std::string> feature_header() {
    std::vector<std::string> h{"trip_id", "label"};
    for (int k = 0; k < kFeatureCount; ++k) h.push_back("f" + std::to_string(k));
    return h;
}

} // namespace

void write_features_csv(const fs::path& path, std::span<const Trip> trips, const Matrix& features,
                        std::uint64_t seed) {
    require(features.rows() == static_cast<Index>(trips.size()) && features.cols() == kFeatureCount,
            "features CSV: matrix must be trips x 45");
    std::ofstream out = open_output(path);
    out << "# " << provenance(seed) << '\n' << join_header(feature_header()) << '\n';
    for (std::size_t i = 0; i < trips.size(); ++i) {
        out << trips[i].id << ',' << label_string(trips[i].label);
        for (Index k = 0; k < features.cols(); ++k) out << ',' << format_double(features(static_cast<Index>(i), k));
        out << '\n';
    }
}

FeatureTable read_features_csv(const fs::path& path) {
    CsvReader reader(path);
    reader.expect_header(feature_header());
    FeatureTable table;
    std::vector<double> values;
    std::vector<std::string_view> fields;
    while (reader.next(fields)) {
        reader.expect_fields(fields, kFeatureCount + 2);
        table.ids.emplace_back(fields[0]);
        table.labels.push_back(reader.label(fields[1]));
        for (int k = 0; k < kFeatureCount; ++k) values.push_back(reader.number(fields[static_cast<std::size_t>(2 + k)]));
    }
    const auto n = static_cast<Index>(table.ids.size());
    table.features.resize(n, kFeatureCount);
    for (Index i = 0; i < n; ++i)
        for (Index k = 0; k < kFeatureCount; ++k) table.features(i, k) = values[static_cast<std::size_t>(i * kFeatureCount + k)];
    return table;
}

void write_feature_legend(const fs::path& path, std::uint64_t seed) {
    std::ofstream out = open_output(path);
    out << "# " << provenance(seed) << "\ncolumn,name,channel,statistic\n";
    int k = 0;
    for (auto channel : kChannelNames)
        for (auto stat : kStatNames) {
            out << 'f' << k << ',' << channel << '_' << stat << ',' << channel << ',' << stat << '\n';
            ++k;
        }
}

// ---------------------------------------------------------------------------
// JSON

namespace {

const Json& field(const Json& j, const char* key, const std::string& what) {
    if (!j.is_object() || !j.contains(key)) throw IoError(what + ": missing key '" + key + "'");
    return j.at(key);
}

template <class T>
T get_as(const Json& j, const char* key, const std::string& what) {
    try {
        return field(j, key, what).get<T>();
    } catch (const Json::type_error&) {
        throw IoError(what + ": key '" + key + "' has the wrong type");
    }
}

template <class T>
void merge(const Json& j, const char* key, T& target, const std::string& what) {
    if (j.is_object() && j.contains(key)) target = get_as<T>(j, key, what);
}

Json layer_json(const DenseLayer& l) { return Json{{"W", to_json(l.w)}, {"b", to_json(l.b)}}; }

DenseLayer layer_from_json(const Json& j, const std::string& what) {
    DenseLayer l{matrix_from_json(field(j, "W", what), what + ".W"), vector_from_json(field(j, "b", what), what + ".b")};
    if (l.b.size() != l.w.rows()) throw IoError(what + ": bias length does not match weight rows");
    return l;
}

constexpr std::array<const char*, 4> kGateSuffix = {"i", "f", "o", "c"};

} // namespace

Json to_json(const Matrix& m) {
    Json rows = Json::array();
    for (Index r = 0; r < m.rows(); ++r) {
        Json row = Json::array();
        for (Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        rows.push_back(std::move(row));
    }
    return Json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::move(rows)}};
}

Json to_json(const Vector& v) {
    Json data = Json::array();
    for (Index k = 0; k < v.size(); ++k) data.push_back(v(k));
    return Json{{"size", v.size()}, {"data", std::move(data)}};
}

Matrix matrix_from_json(const Json& j, const std::string& what) {
    const auto rows = get_as<Index>(j, "rows", what);
    const auto cols = get_as<Index>(j, "cols", what);
    const auto data = get_as<std::vector<std::vector<double>>>(j, "data", what);
    if (rows < 0 || cols < 0 || static_cast<Index>(data.size()) != rows)
        throw IoError(what + ": data has " + std::to_string(data.size()) + " rows, expected " + std::to_string(rows));
    Matrix m(rows, cols);
    for (Index r = 0; r < rows; ++r) {
        if (static_cast<Index>(data[static_cast<std::size_t>(r)].size()) != cols)
            throw IoError(what + ": row " + std::to_string(r) + " does not have " + std::to_string(cols) + " columns");
        for (Index c = 0; c < cols; ++c) m(r, c) = data[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
    }
    return m;
}

Vector vector_from_json(const Json& j, const std::string& what) {
    const auto size = get_as<Index>(j, "size", what);
    const auto data = get_as<std::vector<double>>(j, "data", what);
    if (static_cast<Index>(data.size()) != size)
        throw IoError(what + ": data has " + std::to_string(data.size()) + " entries, expected " + std::to_string(size));
    return Eigen::Map<const Vector>(data.data(), size);
}

Json to_json(const ScalerParams& s) {
    return Json{{"channels", s.channels()}, {"min", to_json(s.min)}, {"max", to_json(s.max)}, {"degenerate", s.degenerate}};
}

ScalerParams scaler_from_json(const Json& j) {
    const std::string what = "scaler";
    ScalerParams s{vector_from_json(field(j, "min", what), what + ".min"),
                   vector_from_json(field(j, "max", what), what + ".max"),
                   get_as<std::vector<bool>>(j, "degenerate", what)};
    if (s.max.size() != s.channels() || static_cast<Index>(s.degenerate.size()) != s.channels())
        throw IoError("scaler: min, max and degenerate must have the same length");
    return s;
}

Json to_json(const RcganConfig& c) {
    return Json{{"learning_rate", c.learning_rate}, {"d_learning_rate", c.d_learning_rate},
                {"batch_size", c.batch_size},       {"epochs", c.epochs},
                {"g_rounds", c.g_rounds},           {"d_rounds", c.d_rounds},
                {"hidden", c.hidden},               {"latent", c.latent},
                {"smooth", c.smooth},               {"seq_len", c.seq_len},
                {"channels", c.channels},           {"minimax_generator_loss", c.minimax_generator_loss},
                {"seed", c.seed}};
}

RcganConfig rcgan_config_from_json(const Json& j, RcganConfig c) {
    const std::string what = "rcgan config";
    if (!j.is_object()) throw IoError(what + ": expected an object");
    merge(j, "learning_rate", c.learning_rate, what);
    merge(j, "d_learning_rate", c.d_learning_rate, what);
    merge(j, "batch_size", c.batch_size, what);
    merge(j, "epochs", c.epochs, what);
    merge(j, "g_rounds", c.g_rounds, what);
    merge(j, "d_rounds", c.d_rounds, what);
    merge(j, "hidden", c.hidden, what);
    merge(j, "latent", c.latent, what);
    merge(j, "smooth", c.smooth, what);
    merge(j, "seq_len", c.seq_len, what);
    merge(j, "channels", c.channels, what);
    merge(j, "minimax_generator_loss", c.minimax_generator_loss, what);
    merge(j, "seed", c.seed, what);
    return c;
}

Json to_json(const LstmParams& p) {
    Json j{{"input_dim", p.input_dim()}, {"hidden", p.hidden()}};
    for (int g = 0; g < 4; ++g) {
        const auto gate = static_cast<Gate>(g);
        const std::string s = kGateSuffix[static_cast<std::size_t>(g)];
        j["W_" + s] = to_json(Matrix(p.w_gate(gate)));
        j["U_" + s] = to_json(Matrix(p.u_gate(gate)));
        if (gate != Gate::cell) j["V_" + s] = to_json(Vector(p.v_gate(gate)));
        j["b_" + s] = to_json(Vector(p.b_gate(gate)));
    }
    return j;
}

LstmParams lstm_from_json(const Json& j) {
    const std::string what = "lstm";
    const auto d_in = get_as<Index>(j, "input_dim", what);
    const auto h = get_as<Index>(j, "hidden", what);
    if (d_in <= 0 || h <= 0) throw IoError("lstm: dimensions must be positive");
    LstmParams p = LstmParams::zeros(d_in, h);
    auto load = [&](const std::string& key, auto block, Index rows, Index cols, bool vector) {
        if (vector) {
            Vector v = vector_from_json(field(j, key.c_str(), what), what + "." + key);
            if (v.size() != rows) throw IoError(what + "." + key + ": expected length " + std::to_string(rows));
            block = v;
        } else {
            Matrix m = matrix_from_json(field(j, key.c_str(), what), what + "." + key);
            if (m.rows() != rows || m.cols() != cols)
                throw IoError(what + "." + key + ": expected " + std::to_string(rows) + "x" + std::to_string(cols));
            block = m;
        }
    };
    for (int g = 0; g < 4; ++g) {
        const auto gate = static_cast<Gate>(g);
        const std::string s = kGateSuffix[static_cast<std::size_t>(g)];
        load("W_" + s, p.w_gate(gate), h, d_in, false);
        load("U_" + s, p.u_gate(gate), h, h, false);
        if (gate != Gate::cell) load("V_" + s, p.v_gate(gate), h, 1, true);
        load("b_" + s, p.b_gate(gate), h, 1, true);
    }
    return p;
}

namespace {

template <class Net>
Json net_checkpoint(const char* kind, const Net& net, const RcganConfig& config, std::uint64_t seed) {
    return Json{{"provenance", provenance(seed)}, {"kind", kind},
                {"config", to_json(config)},      {"lstm", to_json(net.lstm)},
                {"W_out", to_json(net.w_out)},    {"b_out", to_json(net.b_out)}};
}

template <class Net>
Net net_from_json(const Json& j, const char* kind, RcganConfig* config_out) {
    if (get_as<std::string>(j, "kind", "checkpoint") != kind)
        throw IoError(std::string("checkpoint: expected kind '") + kind + "'");
    const RcganConfig config = rcgan_config_from_json(field(j, "config", "checkpoint"));
    Net net = Net::zeros(config);
    const LstmParams lstm = lstm_from_json(field(j, "lstm", "checkpoint"));
    if (lstm.input_dim() != net.lstm.input_dim() || lstm.hidden() != net.lstm.hidden())
        throw IoError("checkpoint: LSTM dimensions disagree with the embedded config");
    net.lstm = lstm;
    const Matrix w_out = matrix_from_json(field(j, "W_out", "checkpoint"), "W_out");
    const Vector b_out = vector_from_json(field(j, "b_out", "checkpoint"), "b_out");
    if (w_out.rows() != net.w_out.rows() || w_out.cols() != net.w_out.cols() || b_out.size() != net.b_out.size())
        throw IoError("checkpoint: output layer dimensions disagree with the embedded config");
    net.w_out = w_out;
    net.b_out = b_out;
    if (config_out) *config_out = config;
    return net;
}

} // namespace

Json checkpoint_json(const GeneratorNet& g, const RcganConfig& config, std::uint64_t seed) {
    return net_checkpoint("generator", g, config, seed);
}

Json checkpoint_json(const DiscriminatorNet& d, const RcganConfig& config, std::uint64_t seed) {
    return net_checkpoint("discriminator", d, config, seed);
}

GeneratorNet generator_from_json(const Json& j, RcganConfig* config) {
    return net_from_json<GeneratorNet>(j, "generator", config);
}

DiscriminatorNet discriminator_from_json(const Json& j, RcganConfig* config) {
    return net_from_json<DiscriminatorNet>(j, "discriminator", config);
}

void write_loss_history(const fs::path& path, std::span<const LossRecord> history, std::uint64_t seed) {
    std::ofstream out = open_output(path);
    out << "# " << provenance(seed) << "\nepoch,d_loss,g_loss\n";
    for (const LossRecord& r : history)
        out << r.epoch << ',' << format_double(r.d_loss) << ',' << format_double(r.g_loss) << '\n';
}

std::vector<LossRecord> read_loss_history(const fs::path& path) {
    CsvReader reader(path);
    reader.expect_header({"epoch", "d_loss", "g_loss"});
    std::vector<LossRecord> out;
    std::vector<std::string_view> fields;
    while (reader.next(fields)) {
        reader.expect_fields(fields, 3);
        out.push_back(LossRecord{static_cast<int>(reader.integer(fields[0])), reader.number(fields[1]),
                                 reader.number(fields[2])});
    }
    return out;
}

Json autoencoder_json(const AutoencoderParams& ae, const ScalerParams& feature_scaler, std::span<const double> losses,
                      std::uint64_t seed) {
    Json layers = Json::array();
    for (const DenseLayer& l : ae.layers) layers.push_back(layer_json(l));
    return Json{{"provenance", provenance(seed)},
                {"kind", "autoencoder"},
                {"dims", ae.dims()},
                {"feature_scaler", to_json(feature_scaler)},
                {"loss_history", std::vector<double>(losses.begin(), losses.end())},
                {"layers", std::move(layers)}};
}

AutoencoderParams autoencoder_from_json(const Json& j, ScalerParams* feature_scaler) {
    if (get_as<std::string>(j, "kind", "autoencoder") != "autoencoder")
        throw IoError("autoencoder: expected kind 'autoencoder'");
    AutoencoderParams ae;
    const Json& layers = field(j, "layers", "autoencoder");
    if (!layers.is_array() || layers.empty()) throw IoError("autoencoder: 'layers' must be a non-empty array");
    for (std::size_t k = 0; k < layers.size(); ++k) {
        ae.layers.push_back(layer_from_json(layers[k], "autoencoder.layers[" + std::to_string(k) + "]"));
        if (k > 0 && ae.layers[k].in() != ae.layers[k - 1].out())
            throw IoError("autoencoder: layer " + std::to_string(k) + " input width does not match");
    }
    if (get_as<std::vector<int>>(j, "dims", "autoencoder") != ae.dims())
        throw IoError("autoencoder: 'dims' disagrees with the layer shapes");
    if (feature_scaler) *feature_scaler = scaler_from_json(field(j, "feature_scaler", "autoencoder"));
    return ae;
}

Json classifier_json(const ClassifierParams& c, const ScalerParams& feature_scaler, std::uint64_t seed) {
    Json hidden = Json::array();
    for (const DenseLayer& l : c.hidden) hidden.push_back(layer_json(l));
    return Json{{"provenance", provenance(seed)},
                {"kind", "classifier"},
                {"activation", to_string(c.activation)},
                {"feature_scaler", to_json(feature_scaler)},
                {"hidden", std::move(hidden)},
                {"output", layer_json(c.output)}};
}

ClassifierParams classifier_from_json(const Json& j, ScalerParams* feature_scaler) {
    if (get_as<std::string>(j, "kind", "classifier") != "classifier")
        throw IoError("classifier: expected kind 'classifier'");
    ClassifierParams c;
    try {
        c.activation = activation_from_string(get_as<std::string>(j, "activation", "classifier"));
    } catch (const ContractViolation& e) {
        throw IoError(std::string("classifier: ") + e.what());
    }
    const Json& hidden = field(j, "hidden", "classifier");
    if (!hidden.is_array()) throw IoError("classifier: 'hidden' must be an array");
    for (std::size_t k = 0; k < hidden.size(); ++k)
        c.hidden.push_back(layer_from_json(hidden[k], "classifier.hidden[" + std::to_string(k) + "]"));
    c.output = layer_from_json(field(j, "output", "classifier"), "classifier.output");
    if (feature_scaler) *feature_scaler = scaler_from_json(field(j, "feature_scaler", "classifier"));
    return c;
}

Json to_json(const StyleProfile& p) {
    Json channels = Json::array();
    for (const ChannelProfile& c : p.channels)
        channels.push_back(Json{{"amplitude", c.amplitude},
                                {"freq_lo", c.freq_lo},
                                {"freq_hi", c.freq_hi},
                                {"noise_std", c.noise_std},
                                {"event_amplitude", c.event_amplitude}});
    return Json{{"event_rate", p.event_rate},
                {"event_duration_ms", p.event_duration_ms},
                {"gain_spread", p.gain_spread},
                {"channels", std::move(channels)}};
}

StyleProfile style_profile_from_json(const Json& j, StyleProfile p) {
    const std::string what = "style profile";
    if (!j.is_object()) throw IoError(what + ": expected an object");
    merge(j, "event_rate", p.event_rate, what);
    merge(j, "event_duration_ms", p.event_duration_ms, what);
    merge(j, "gain_spread", p.gain_spread, what);
    if (j.contains("channels")) {
        const Json& channels = j.at("channels");
        if (!channels.is_array() || channels.size() != kChannels)
            throw IoError(what + ": 'channels' must list " + std::to_string(kChannels) + " channel profiles");
        for (std::size_t c = 0; c < kChannels; ++c) {
            const std::string w = what + ".channels[" + std::to_string(c) + "]";
            ChannelProfile& ch = p.channels[c];
            merge(channels[c], "amplitude", ch.amplitude, w);
            merge(channels[c], "freq_lo", ch.freq_lo, w);
            merge(channels[c], "freq_hi", ch.freq_hi, w);
            merge(channels[c], "noise_std", ch.noise_std, w);
            merge(channels[c], "event_amplitude", ch.event_amplitude, w);
        }
    }
    try {
        p.validate();
    } catch (const ContractViolation& e) {
        throw IoError(std::string(what) + ": " + e.what());
    }
    return p;
}

Json to_json(const GridSpec& g) {
    std::vector<std::string> acts;
    for (Activation a : g.activations) acts.emplace_back(to_string(a));
    return Json{{"learning_rates", g.learning_rates}, {"epochs", g.epochs}, {"activations", acts}};
}

GridSpec grid_from_json(const Json& j, GridSpec g) {
    const std::string what = "grid";
    if (!j.is_object()) throw IoError(what + ": expected an object");
    merge(j, "learning_rates", g.learning_rates, what);
    merge(j, "epochs", g.epochs, what);
    if (j.contains("activations")) {
        g.activations.clear();
        for (const std::string& name : get_as<std::vector<std::string>>(j, "activations", what)) {
            try {
                g.activations.push_back(activation_from_string(name));
            } catch (const ContractViolation& e) {
                throw IoError(what + ": " + e.what());
            }
        }
    }
    return g;
}

ExperimentFile experiment_from_json(const Json& j, ExperimentFile e) {
    const std::string what = "experiment config";
    if (!j.is_object()) throw IoError(what + ": expected an object");
    ExperimentConfig& c = e.config;
    merge(j, "runs", c.runs, what);
    merge(j, "seed", c.seed, what);
    merge(j, "jobs", c.jobs, what);
    merge(j, "ratios", c.ratios, what);
    merge(j, "ae_epochs", c.ae_epochs, what);
    merge(j, "ae_learning_rate", c.ae_learning_rate, what);
    merge(j, "baseline_only", c.baseline_only, what);
    if (j.contains("rcgan")) c.rcgan = rcgan_config_from_json(j.at("rcgan"), c.rcgan);
    if (j.contains("grid")) c.grid = grid_from_json(j.at("grid"), c.grid);
    if (j.contains("simulation")) {
        const Json& s = j.at("simulation");
        const std::string w = what + ".simulation";
        merge(s, "n", e.simulation.n, w);
        merge(s, "labeled", e.simulation.labeled, w);
        merge(s, "seed", e.simulation.seed, w);
        if (s.contains("normal")) e.simulation.normal = style_profile_from_json(s.at("normal"), e.simulation.normal);
        if (s.contains("aggressive"))
            e.simulation.aggressive = style_profile_from_json(s.at("aggressive"), e.simulation.aggressive);
    }
    if (j.contains("dataset")) e.dataset = get_as<std::string>(j, "dataset", what);
    if (j.contains("ground_truth")) e.ground_truth = get_as<std::string>(j, "ground_truth", what);
    return e;
}

Json to_json(const ExperimentFile& e) {
    const ExperimentConfig& c = e.config;
    Json j{{"runs", c.runs},
           {"seed", c.seed},
           {"jobs", c.jobs},
           {"ratios", c.ratios},
           {"ae_epochs", c.ae_epochs},
           {"ae_learning_rate", c.ae_learning_rate},
           {"baseline_only", c.baseline_only},
           {"rcgan", to_json(c.rcgan)},
           {"grid", to_json(c.grid)}};
    if (e.dataset) {
        j["dataset"] = e.dataset->string();
        if (e.ground_truth) j["ground_truth"] = e.ground_truth->string();
    } else {
        j["simulation"] = Json{{"n", e.simulation.n},
                               {"labeled", e.simulation.labeled},
                               {"seed", e.simulation.seed},
                               {"normal", to_json(e.simulation.normal)},
                               {"aggressive", to_json(e.simulation.aggressive)}};
    }
    return j;
}

// ---------------------------------------------------------------------------
// Reports

void write_roc_csv(const fs::path& path, const RocResult& roc, std::uint64_t seed) {
    std::ofstream out = open_output(path);
    out << "# " << provenance(seed) << " auroc=" << format_double(roc.auc) << "\nthreshold,fpr,tpr\n";
    for (const RocPoint& p : roc.curve)
        out << format_double(p.threshold) << ',' << format_double(p.fpr) << ',' << format_double(p.tpr) << '\n';
}

RocResult read_roc_csv(const fs::path& path) {
    CsvReader reader(path);
    reader.expect_header({"threshold", "fpr", "tpr"});
    RocResult roc;
    std::vector<std::string_view> fields;
    while (reader.next(fields)) {
        reader.expect_fields(fields, 3);
        roc.curve.push_back(RocPoint{reader.number(fields[0]), reader.number(fields[1]), reader.number(fields[2])});
    }
    for (std::size_t k = 1; k < roc.curve.size(); ++k)
        roc.auc += (roc.curve[k].fpr - roc.curve[k - 1].fpr) * (roc.curve[k].tpr + roc.curve[k - 1].tpr) / 2;
    return roc;
}

namespace {

const std::vector<std::string> kRunHeader = {"train",     "val",        "ratio",     "auroc",   "above_baseline",
                                             "lr",        "epochs",     "activation", "val_auroc", "train_size",
                                             "val_size",  "test_size"};

std::string set_name(Source s) { return s == Source::RF ? "R+F" : std::string(to_string(s)); }

std::string fixed(double v, int digits = 3) {
    if (std::isnan(v)) return "-";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

std::string percent(double ratio) { return std::to_string(static_cast<int>(std::lround(ratio * 100))) + "%"; }

} // namespace

void write_run_csv(const fs::path& path, const RunResult& run) {
    std::ofstream out = open_output(path);
    out << "# " << provenance(run.seed) << " run=" << run.run << '\n' << join_header(kRunHeader) << '\n';
    const double baseline = run.baseline().test_auroc;
    for (const CellResult& c : run.cells) {
        out << to_string(c.spec.train) << ',' << to_string(c.spec.validation) << ',' << format_double(c.spec.ratio)
            << ',' << format_double(c.test_auroc) << ',' << (!c.spec.is_baseline() && c.test_auroc > baseline ? 1 : 0)
            << ',' << format_double(c.chosen.learning_rate) << ',' << c.chosen.epochs << ','
            << to_string(c.chosen.activation) << ',' << format_double(c.chosen.validation_auroc) << ','
            << c.train_size << ',' << c.validation_size << ',' << c.test_size << '\n';
    }
}

RunResult read_run_csv(const fs::path& path) {
    CsvReader reader(path);
    reader.expect_header(kRunHeader);
    RunResult run;
    std::vector<std::string_view> fields;
    while (reader.next(fields)) {
        reader.expect_fields(fields, kRunHeader.size());
        CellResult c;
        try {
            c.spec = CombinationSpec{source_from_string(fields[0]), source_from_string(fields[1]),
                                     reader.number(fields[2])};
            c.chosen.activation = activation_from_string(fields[7]);
        } catch (const ContractViolation& e) {
            reader.fail(e.what());
        }
        c.test_auroc = reader.number(fields[3]);
        c.test_roc.auc = c.test_auroc;
        c.chosen.learning_rate = reader.number(fields[5]);
        c.chosen.epochs = static_cast<int>(reader.integer(fields[6]));
        c.chosen.validation_auroc = reader.number(fields[8]);
        c.train_size = reader.integer(fields[9]);
        c.validation_size = reader.integer(fields[10]);
        c.test_size = reader.integer(fields[11]);
        run.cells.push_back(std::move(c));
    }
    for (const std::string& comment : reader.comments()) {
        std::istringstream in(comment);
        std::string token;
        while (in >> token) {
            if (token.rfind("seed=", 0) == 0) run.seed = std::stoull(token.substr(5));
            if (token.rfind("run=", 0) == 0) run.run = std::stoi(token.substr(4));
        }
    }
    if (run.cells.empty() || !run.cells.front().spec.is_baseline())
        throw IoError(path.string() + ": first row must be the baseline cell");
    return run;
}

void write_run_markdown(const fs::path& path, const RunResult& run) {
    std::ofstream out = open_output(path);
    const CellResult& base = run.baseline();
    out << "<!-- " << provenance(run.seed) << " run=" << run.run << " -->\n\n"
        << "# Run " << run.run << "\n\n"
        << "Test AUROC on all " << base.test_size
        << " real trips. Note: this test set contains the labeled trips that the classifier was trained "
           "and validated on, so scores are not held-out estimates. Bold marks cells above the baseline (first "
           "row).\n\n"
        << "| Training set | Validation set | Ratio fake/real | AUROC | Learning rate | Epochs | Activation |\n"
        << "|---|---|---|---|---|---|---|\n";
    for (const CellResult& c : run.cells) {
        const std::string value = fixed(c.test_auroc);
        const bool bold = !c.spec.is_baseline() && c.test_auroc > base.test_auroc;
        out << "| " << set_name(c.spec.train) << " | " << set_name(c.spec.validation) << " | " << percent(c.spec.ratio)
            << " | " << (bold ? "**" + value + "**" : value) << " | " << format_double(c.chosen.learning_rate) << " | "
            << c.chosen.epochs << " | " << to_string(c.chosen.activation) << " |\n";
    }
}

void write_aggregate_csv(const fs::path& path, const AggregateReport& report, std::uint64_t seed) {
    std::ofstream out = open_output(path);
    out << "# " << provenance(seed) << "\ntrain,val,ratio,count,runs,mean,sd,fraction\n";
    for (const CellAggregate& c : report.cells)
        out << to_string(c.spec.train) << ',' << to_string(c.spec.validation) << ',' << format_double(c.spec.ratio)
            << ',' << c.count << ',' << report.runs << ',' << format_double(c.mean) << ',' << format_double(c.sd)
            << ",\n";
    out << "overall,,," << report.runs_with_any << ',' << report.runs << ",,," << format_double(report.fraction)
        << '\n';
}

AggregateReport read_aggregate_csv(const fs::path& path) {
    CsvReader reader(path);
    reader.expect_header({"train", "val", "ratio", "count", "runs", "mean", "sd", "fraction"});
    AggregateReport report;
    bool overall = false;
    std::vector<std::string_view> fields;
    while (reader.next(fields)) {
        reader.expect_fields(fields, 8);
        if (overall) reader.fail("rows after the overall row");
        if (fields[0] == "overall") {
            overall = true;
            report.runs_with_any = static_cast<int>(reader.integer(fields[3]));
            report.runs = static_cast<int>(reader.integer(fields[4]));
            report.fraction = reader.number(fields[7]);
            continue;
        }
        CellAggregate c;
        try {
            c.spec = CombinationSpec{source_from_string(fields[0]), source_from_string(fields[1]),
                                     reader.number(fields[2])};
        } catch (const ContractViolation& e) {
            reader.fail(e.what());
        }
        c.count = static_cast<int>(reader.integer(fields[3]));
        c.mean = reader.number(fields[5], true);
        c.sd = reader.number(fields[6], true);
        report.cells.push_back(c);
    }
    if (!overall) reader.fail("missing overall row");
    return report;
}

void write_aggregate_markdown(const fs::path& path, const AggregateReport& report, std::uint64_t seed) {
    std::ofstream out = open_output(path);
    std::vector<double> ratios;
    for (const CellAggregate& c : report.cells)
        if (std::find(ratios.begin(), ratios.end(), c.spec.ratio) == ratios.end()) ratios.push_back(c.spec.ratio);

    out << "<!-- " << provenance(seed) << " -->\n\n"
        << "# Runs outperforming the baseline\n\n"
        << "Counts of runs (out of " << report.runs
        << ") whose cell AUROC is strictly above that run's baseline, with mean and SD of those AUROCs pooled "
           "over ratios. Test AUROC is measured on all real trips, including those used for training and "
           "validation.\n\n"
        << "| Training set | Validation set |";
    for (double r : ratios) out << " Count " << percent(r) << " |";
    out << " Mean & SD |\n|---|---|";
    for (std::size_t k = 0; k < ratios.size(); ++k) out << "---|";
    out << "---|\n";
    for (const PairSummary& p : pooled_by_pair(report)) {
        out << "| " << set_name(p.train) << " | " << set_name(p.validation) << " |";
        for (int n : p.counts) out << ' ' << n << " |";
        out << ' ' << fixed(p.mean) << " ± " << fixed(p.sd) << " |\n";
    }
    out << "\nRuns with at least one cell above the baseline: " << report.runs_with_any << " of " << report.runs
        << " (" << fixed(100.0 * report.fraction, 1) << "%).\n\n"
        << "## Per cell\n\n"
        << "| Training set | Validation set | Ratio fake/real | Count | Mean | SD |\n|---|---|---|---|---|---|\n";
    for (const CellAggregate& c : report.cells)
        out << "| " << set_name(c.spec.train) << " | " << set_name(c.spec.validation) << " | " << percent(c.spec.ratio)
            << " | " << c.count << " | " << fixed(c.mean) << " | " << fixed(c.sd) << " |\n";
}

} // namespace imugan
