#pragma once

#include "bevkit/core/tensor.hpp"

#include <string>
#include <vector>

namespace bevkit::whiten {

// Channel-wise dataset statistics, accumulated streaming (Welford) and
// mergeable across partials (Chan combination), so parallel accumulation
// is exact up to floating-point reassociation.
struct ChannelStats {
    int channels = 0;
    double epsilon = 1e-5;
    bool nonzero_only = false;
    std::vector<double> mean;
    std::vector<double> m2;
    std::vector<uint64_t> count;

    explicit ChannelStats(int d = 0, double eps = 1e-5, bool nonzero = false)
        : channels(d), epsilon(eps), nonzero_only(nonzero), mean(d, 0.0), m2(d, 0.0),
          count(d, 0) {}

    bool finalized() const {
        for (uint64_t c : count)
            if (c == 0) return false;
        return channels > 0;
    }

    double variance(int d) const { return count[d] > 0 ? m2[d] / static_cast<double>(count[d]) : 0.0; }
};

void accumulate_stats(ChannelStats& stats, const BevFeatureMap& map);
void merge_stats(ChannelStats& into, const ChannelStats& other);

// out[d,i,j] = (in[d,i,j] - mean[d]) / sqrt(variance[d] + epsilon). No
// learnable affine.
BevFeatureMap whiten(const BevFeatureMap& map, const ChannelStats& stats);

std::string stats_to_json(const ChannelStats& stats);
ChannelStats stats_from_json(const std::string& text);

} // namespace bevkit::whiten
