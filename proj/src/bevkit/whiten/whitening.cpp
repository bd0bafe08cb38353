#include "bevkit/whiten/whitening.hpp"

#include <json.hpp>

#include <cmath>
#include <stdexcept>

namespace bevkit::whiten {

void accumulate_stats(ChannelStats& stats, const BevFeatureMap& map) {
    if (map.channels != stats.channels)
        throw std::invalid_argument("accumulate_stats: channel count mismatch");
    const size_t cells = map.cell_count();
    for (int d = 0; d < stats.channels; ++d) {
        const float* chan = map.data.data() + static_cast<size_t>(d) * cells;
        double mean = stats.mean[d];
        double m2 = stats.m2[d];
        uint64_t n = stats.count[d];
        for (size_t k = 0; k < cells; ++k) {
            const float v = chan[k];
            if (stats.nonzero_only && v == 0.0f) continue;
            ++n;
            const double delta = v - mean;
            mean += delta / static_cast<double>(n);
            m2 += delta * (v - mean);
        }
        stats.mean[d] = mean;
        stats.m2[d] = m2;
        stats.count[d] = n;
    }
}

void merge_stats(ChannelStats& into, const ChannelStats& other) {
    if (into.channels != other.channels)
        throw std::invalid_argument("merge_stats: channel count mismatch");
    for (int d = 0; d < into.channels; ++d) {
        const uint64_t na = into.count[d];
        const uint64_t nb = other.count[d];
        if (nb == 0) continue;
        if (na == 0) {
            into.mean[d] = other.mean[d];
            into.m2[d] = other.m2[d];
            into.count[d] = nb;
            continue;
        }
        const double delta = other.mean[d] - into.mean[d];
        const double n = static_cast<double>(na + nb);
        into.mean[d] += delta * static_cast<double>(nb) / n;
        into.m2[d] += other.m2[d] + delta * delta * static_cast<double>(na) *
                                        static_cast<double>(nb) / n;
        into.count[d] = na + nb;
    }
}

BevFeatureMap whiten(const BevFeatureMap& map, const ChannelStats& stats) {
    if (map.channels != stats.channels)
        throw std::invalid_argument("whiten: channel count mismatch");
    if (!stats.finalized()) throw std::invalid_argument("whiten: stats not finalized");
    BevFeatureMap out(map.spec, map.channels);
    const size_t cells = map.cell_count();
    for (int d = 0; d < map.channels; ++d) {
        const double inv_sd = 1.0 / std::sqrt(stats.variance(d) + stats.epsilon);
        const double mean = stats.mean[d];
        const float* src = map.data.data() + static_cast<size_t>(d) * cells;
        float* dst = out.data.data() + static_cast<size_t>(d) * cells;
        for (size_t k = 0; k < cells; ++k)
            dst[k] = static_cast<float>((src[k] - mean) * inv_sd);
    }
    return out;
}

std::string stats_to_json(const ChannelStats& stats) {
    nlohmann::json j;
    j["channels"] = stats.channels;
    j["epsilon"] = stats.epsilon;
    j["nonzero_only"] = stats.nonzero_only;
    j["mean"] = stats.mean;
    nlohmann::json var = nlohmann::json::array();
    for (int d = 0; d < stats.channels; ++d) var.push_back(stats.variance(d));
    j["variance"] = var;
    // Counts are uniform unless nonzero_only filtering was used.
    bool uniform = true;
    for (uint64_t c : stats.count)
        if (c != stats.count[0]) uniform = false;
    if (uniform)
        j["count"] = stats.count.empty() ? 0 : stats.count[0];
    else
        j["count"] = stats.count;
    return j.dump(2);
}

ChannelStats stats_from_json(const std::string& text) {
    const nlohmann::json j = nlohmann::json::parse(text);
    const int channels = j.at("channels").get<int>();
    ChannelStats stats(channels, j.at("epsilon").get<double>(),
                       j.value("nonzero_only", false));
    stats.mean = j.at("mean").get<std::vector<double>>();
    const auto variance = j.at("variance").get<std::vector<double>>();
    if (static_cast<int>(stats.mean.size()) != channels ||
        static_cast<int>(variance.size()) != channels)
        throw std::runtime_error("stats JSON: array length mismatch");
    const auto& count = j.at("count");
    if (count.is_array())
        stats.count = count.get<std::vector<uint64_t>>();
    else
        stats.count.assign(channels, count.get<uint64_t>());
    if (static_cast<int>(stats.count.size()) != channels)
        throw std::runtime_error("stats JSON: count length mismatch");
    for (int d = 0; d < channels; ++d)
        stats.m2[d] = variance[d] * static_cast<double>(stats.count[d]);
    return stats;
}

} // namespace bevkit::whiten
