#pragma once

#include <cstdint>
#include <deque>
#include <random>
#include <vector>

#include "cmarl/envs/episode.hpp"
#include "cmarl/error.hpp"

namespace cmarl::marl {

// An episode plus its causality bits, mask[t][i] in {0,1}.
struct StoredEpisode {
    envs::EpisodeRecord episode;
    std::vector<std::vector<std::uint8_t>> mask;
};

class ReplayBuffer {
public:
    explicit ReplayBuffer(std::size_t capacity = 5000) : capacity_(capacity) {
        if (capacity == 0) throw ConfigError("replay capacity must be positive");
    }

    std::size_t size() const { return items_.size(); }
    std::size_t capacity() const { return capacity_; }
    std::uint64_t inserted() const { return inserted_; }
    const StoredEpisode& at(std::size_t k) const { return items_.at(k); }

    void push(StoredEpisode ep) {
        for (const auto& row : ep.mask)
            for (auto b : row)
                if (b > 1) throw UsageError("causality bit outside {0,1}");
        if (items_.size() == capacity_) items_.pop_front();
        items_.push_back(std::move(ep));
        ++inserted_;
    }

    // min(batch, size) distinct episodes, uniformly, by partial Fisher-Yates.
    std::vector<const StoredEpisode*> sample(std::size_t batch, std::mt19937_64& rng) const {
        if (items_.empty()) throw UsageError("sampling from an empty replay buffer");
        std::size_t k = std::min(batch, items_.size());
        std::vector<std::size_t> idx(items_.size());
        for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
        std::vector<const StoredEpisode*> out;
        out.reserve(k);
        for (std::size_t i = 0; i < k; ++i) {
            std::uniform_int_distribution<std::size_t> d(i, idx.size() - 1);
            std::swap(idx[i], idx[d(rng)]);
            out.push_back(&items_[idx[i]]);
        }
        return out;
    }

private:
    std::size_t capacity_;
    std::uint64_t inserted_ = 0;
    std::deque<StoredEpisode> items_;
};

} // namespace cmarl::marl
