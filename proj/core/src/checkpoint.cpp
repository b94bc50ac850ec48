#include "predmon/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include <json.hpp>

#include "predmon/errors.hpp"
#include "predmon/rng.hpp"

namespace predmon::io {

using nlohmann::json;

namespace {

constexpr char kMagic[4] = {'P', 'M', 'C', 'P'};
constexpr std::uint8_t kKindForecaster = 1;
constexpr std::uint8_t kKindQNetwork = 2;

class Writer {
public:
    void u8(std::uint8_t v) { buf_.push_back(static_cast<char>(v)); }
    void u32(std::uint32_t v) { raw(&v, sizeof v); }
    void u64(std::uint64_t v) { raw(&v, sizeof v); }
    void doubles(const std::vector<double>& v) {
        u64(v.size());
        raw(v.data(), v.size() * sizeof(double));
    }
    void text(const std::string& s) {
        u64(s.size());
        buf_.append(s);
    }
    void raw(const void* data, std::size_t size) {
        buf_.append(static_cast<const char*>(data), size);
    }
    const std::string& bytes() const { return buf_; }

private:
    std::string buf_;
};

class Reader {
public:
    explicit Reader(std::string bytes) : buf_(std::move(bytes)) {}

    std::uint8_t u8() {
        need(1);
        return static_cast<std::uint8_t>(buf_[pos_++]);
    }
    std::uint32_t u32() {
        std::uint32_t v;
        copy(&v, sizeof v);
        return v;
    }
    std::uint64_t u64() {
        std::uint64_t v;
        copy(&v, sizeof v);
        return v;
    }
    double f64() {
        double v;
        copy(&v, sizeof v);
        return v;
    }
    std::vector<double> doubles() {
        const std::uint64_t n = u64();
        need(n * sizeof(double));
        std::vector<double> v(n);
        std::memcpy(v.data(), buf_.data() + pos_, n * sizeof(double));
        pos_ += n * sizeof(double);
        return v;
    }
    std::string text() {
        const std::uint64_t n = u64();
        need(n);
        std::string s = buf_.substr(pos_, n);
        pos_ += n;
        return s;
    }

private:
    void need(std::size_t n) const {
        if (pos_ + n > buf_.size()) throw IoError("checkpoint truncated");
    }
    void copy(void* out, std::size_t n) {
        need(n);
        std::memcpy(out, buf_.data() + pos_, n);
        pos_ += n;
    }
    std::string buf_;
    std::size_t pos_ = 0;
};

void write_adam(Writer& w, const neural::AdamState& adam) {
    json cfg = {{"learning_rate", adam.config.learning_rate},
                {"beta1", adam.config.beta1},
                {"beta2", adam.config.beta2},
                {"epsilon", adam.config.epsilon}};
    w.text(cfg.dump());
    w.doubles(adam.m);
    w.doubles(adam.v);
    w.u64(adam.step);
}

neural::AdamState read_adam(Reader& r) {
    const json cfg = json::parse(r.text());
    neural::AdamState adam;
    adam.config.learning_rate = cfg.at("learning_rate").get<double>();
    adam.config.beta1 = cfg.at("beta1").get<double>();
    adam.config.beta2 = cfg.at("beta2").get<double>();
    adam.config.epsilon = cfg.at("epsilon").get<double>();
    adam.m = r.doubles();
    adam.v = r.doubles();
    adam.step = r.u64();
    if (adam.m.size() != adam.v.size())
        throw IoError("checkpoint optimizer moments disagree in size");
    return adam;
}

void write_file(const std::filesystem::path& path, const Writer& w) {
    const std::uint64_t checksum = fnv1a64(w.bytes().data(), w.bytes().size());
    std::ofstream file(path, std::ios::binary | std::ios::trunc);
    if (!file) throw IoError("cannot write checkpoint '" + path.string() + "'");
    file.write(w.bytes().data(), static_cast<std::streamsize>(w.bytes().size()));
    file.write(reinterpret_cast<const char*>(&checksum), sizeof checksum);
    if (!file) throw IoError("short write to '" + path.string() + "'");
}

/// Validates checksum, magic and version; returns a reader positioned just
/// after the kind byte, which is also returned through `kind_out`.
Reader open_checked(const std::filesystem::path& path, std::uint8_t* kind_out) {
    if (!std::filesystem::exists(path))
        throw CheckpointMissing("checkpoint '" + path.string() + "' does not exist");
    std::ifstream file(path, std::ios::binary);
    if (!file) throw IoError("cannot open checkpoint '" + path.string() + "'");
    std::string bytes((std::istreambuf_iterator<char>(file)),
                      std::istreambuf_iterator<char>());
    if (bytes.size() < sizeof(kMagic) + sizeof(std::uint32_t) + 1 + sizeof(std::uint64_t))
        throw IoError("checkpoint '" + path.string() + "' is too small");

    std::uint64_t stored = 0;
    std::memcpy(&stored, bytes.data() + bytes.size() - sizeof stored, sizeof stored);
    bytes.resize(bytes.size() - sizeof stored);
    const std::uint64_t computed = fnv1a64(bytes.data(), bytes.size());
    if (stored != computed)
        throw ChecksumMismatch("checkpoint '" + path.string() +
                               "' failed its content checksum");

    Reader r(std::move(bytes));
    char magic[4];
    for (char& c : magic) c = static_cast<char>(r.u8());
    if (std::memcmp(magic, kMagic, sizeof kMagic) != 0)
        throw IoError("'" + path.string() + "' is not a checkpoint file");
    const std::uint32_t version = r.u32();
    if (version != kCheckpointVersion)
        throw VersionUnsupported("checkpoint version " + std::to_string(version) +
                                 " not supported (expected " +
                                 std::to_string(kCheckpointVersion) + ")");
    *kind_out = r.u8();
    return r;
}

Reader open_kind(const std::filesystem::path& path, std::uint8_t expected_kind) {
    std::uint8_t kind = 0;
    Reader r = open_checked(path, &kind);
    if (kind != expected_kind)
        throw IoError("checkpoint '" + path.string() + "' holds kind " +
                      std::to_string(kind) + ", expected " +
                      std::to_string(expected_kind));
    return r;
}

}  // namespace

void save_forecaster(const std::filesystem::path& path, const ForecasterCheckpoint& ckpt) {
    Writer w;
    w.raw(kMagic, sizeof kMagic);
    w.u32(kCheckpointVersion);
    w.u8(kKindForecaster);

    const auto& net = ckpt.network;
    json header = {{"window", net.window},
                   {"horizon", net.horizon},
                   {"channels", net.channels},
                   {"hidden", net.forward_cell.hidden_dim},
                   {"dropout", net.dropout_rate},
                   {"config", ckpt.config_snapshot}};
    w.text(header.dump());
    w.doubles(net.flatten_parameters());
    write_adam(w, ckpt.optimizer);

    w.u64(net.normalization.channel_count());
    w.raw(net.normalization.shift.data(), net.normalization.shift.size() * sizeof(double));
    w.raw(net.normalization.scale.data(), net.normalization.scale.size() * sizeof(double));
    w.u8(net.normalization.method == timeseries::NormMethod::MinMax ? 0 : 1);

    write_file(path, w);
}

ForecasterCheckpoint load_forecaster(const std::filesystem::path& path) {
    Reader r = open_kind(path, kKindForecaster);
    const json header = json::parse(r.text());

    forecaster::ForecasterConfig cfg;
    cfg.window = header.at("window").get<std::size_t>();
    cfg.horizon = header.at("horizon").get<std::size_t>();
    cfg.hidden = header.at("hidden").get<std::size_t>();
    cfg.dropout = header.at("dropout").get<double>();
    const auto channels = header.at("channels").get<std::size_t>();

    ForecasterCheckpoint ckpt;
    ckpt.config_snapshot = header.value("config", std::string{});
    ckpt.network =
        forecaster::ForecastNetwork::init(channels, cfg, timeseries::NormalizationSpec{});
    const auto params = r.doubles();
    if (params.size() != ckpt.network.parameter_count())
        throw IoError("checkpoint parameter count does not match its dimensions");
    ckpt.network.unflatten_parameters(params);
    ckpt.optimizer = read_adam(r);

    const std::uint64_t norm_channels = r.u64();
    timeseries::NormalizationSpec spec;
    spec.shift.resize(norm_channels);
    spec.scale.resize(norm_channels);
    for (auto& v : spec.shift) v = r.f64();
    for (auto& v : spec.scale) v = r.f64();
    spec.method =
        r.u8() == 0 ? timeseries::NormMethod::MinMax : timeseries::NormMethod::ZScore;
    ckpt.network.normalization = std::move(spec);
    return ckpt;
}

void save_qnetwork(const std::filesystem::path& path, const QNetworkCheckpoint& ckpt) {
    Writer w;
    w.raw(kMagic, sizeof kMagic);
    w.u32(kCheckpointVersion);
    w.u8(kKindQNetwork);

    const auto& net = ckpt.network;
    json header = {{"state_dim", net.state_dim},
                   {"hidden", net.has_hidden ? net.hidden.output_dim() : 0},
                   {"actions", net.action_count},
                   {"epsilon", ckpt.epsilon},
                   {"config", ckpt.config_snapshot}};
    w.text(header.dump());
    w.doubles(net.flatten_parameters());
    write_adam(w, ckpt.optimizer);
    write_file(path, w);
}

QNetworkCheckpoint load_qnetwork(const std::filesystem::path& path) {
    Reader r = open_kind(path, kKindQNetwork);
    const json header = json::parse(r.text());

    QNetworkCheckpoint ckpt;
    ckpt.epsilon = header.at("epsilon").get<double>();
    ckpt.config_snapshot = header.value("config", std::string{});
    Rng shape_rng(0);  // shapes only; weights are overwritten just below
    ckpt.network = agent::QNetwork::init(header.at("state_dim").get<std::size_t>(),
                                         header.at("hidden").get<std::size_t>(),
                                         header.at("actions").get<std::size_t>(),
                                         shape_rng);
    const auto params = r.doubles();
    if (params.size() != ckpt.network.parameter_count())
        throw IoError("checkpoint parameter count does not match its dimensions");
    ckpt.network.unflatten_parameters(params);
    ckpt.optimizer = read_adam(r);
    return ckpt;
}

std::string checkpoint_kind(const std::filesystem::path& path) {
    std::uint8_t kind = 0;
    open_checked(path, &kind);
    if (kind == kKindForecaster) return "forecaster";
    if (kind == kKindQNetwork) return "qnetwork";
    throw IoError("unknown checkpoint kind " + std::to_string(kind));
}

}  // namespace predmon::io
