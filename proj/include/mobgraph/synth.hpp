#ifndef MOBGRAPH_SYNTH_HPP
#define MOBGRAPH_SYNTH_HPP

#include "common.hpp"
#include "ingest.hpp"

#include <nlohmann/json.hpp>

#include <cstdio>
#include <map>
#include <optional>
#include <string>
#include <vector>

/**
 * @file synth.hpp
 *
 * @brief Seeded comment corpora with planted commenter mobs.
 *
 * Organic commenters belong to one channel and comment on each of its videos
 * independently. A mob comments as a unit: for every video of a channel it
 * covers, with its co-comment probability, all members comment on it.
 */

namespace mobgraph {

struct MobGroup {
    std::size_t size = 5;
    /// Indices of the channels this mob is active on.
    std::vector<std::size_t> channels;
    double co_comment_probability = 0.5;
};

struct ChannelSpec {
    std::string family;
    std::size_t videos = 30;
    std::size_t organic_commenters = 60;
    double organic_probability = 0.05;
};

struct SynthConfig {
    std::vector<ChannelSpec> channels;
    std::vector<MobGroup> mobs;
    /// Chance that a commenter who comments on a video posts a second comment there.
    double repeat_probability = 0.1;
    std::uint64_t seed = 42;

    /**
     * Two families: the first half of the channels each host several
     * sizeable mobs that comment often ("heavy"), the second half one small,
     * rarely active mob ("light").
     */
    static SynthConfig two_families(std::size_t n_channels = 20, std::uint64_t seed = 42) {
        SynthConfig config;
        config.seed = seed;
        const std::size_t heavy = n_channels / 2;
        for (std::size_t c = 0; c < n_channels; ++c) {
            const bool is_heavy = c < heavy;
            config.channels.push_back({is_heavy ? "heavy" : "light", 30, 60, 0.05});
            if (is_heavy) {
                for (int m = 0; m < 4; ++m) {
                    config.mobs.push_back({7, {c}, 0.35});
                }
            } else {
                config.mobs.push_back({5, {c}, 0.1});
            }
        }
        return config;
    }
};

inline std::string channel_name(std::size_t index) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "ch%02zu", index);
    return buf;
}

struct SynthCorpus {
    std::vector<CommentRecord> records;
    /// channel id -> family label
    std::map<std::string, std::string> channel_family;
    /// commenter id -> mob index; organic commenters map to nullopt
    std::map<std::string, std::optional<std::size_t>> commenter_mob;
};

inline void validate(const SynthConfig& config) {
    auto prob_ok = [](double p) { return p >= 0.0 && p <= 1.0; };
    if (config.channels.empty()) {
        throw Error(ErrorKind::InvalidConfig, "no channels");
    }
    if (!prob_ok(config.repeat_probability)) {
        throw Error(ErrorKind::InvalidConfig, "repeat_probability outside [0,1]");
    }
    for (std::size_t c = 0; c < config.channels.size(); ++c) {
        const auto& ch = config.channels[c];
        if (ch.videos == 0 || !prob_ok(ch.organic_probability)) {
            throw Error(ErrorKind::InvalidConfig, "channel " + std::to_string(c) + ": videos must be positive and probability in [0,1]");
        }
    }
    for (std::size_t m = 0; m < config.mobs.size(); ++m) {
        const auto& mob = config.mobs[m];
        if (mob.size == 0 || mob.channels.empty() || !prob_ok(mob.co_comment_probability)) {
            throw Error(ErrorKind::InvalidConfig, "mob " + std::to_string(m) + ": size and channel list must be non-empty, probability in [0,1]");
        }
        for (auto c : mob.channels) {
            if (c >= config.channels.size()) {
                throw Error(ErrorKind::InvalidConfig, "mob " + std::to_string(m) + " covers unknown channel " + std::to_string(c));
            }
        }
    }
}

/**
 * Generates the corpus. Each channel draws from its own sub-seed, so a
 * channel's comments do not depend on how many channels precede it.
 */
inline SynthCorpus generate_corpus(const SynthConfig& config) {
    validate(config);
    SynthCorpus corpus;

    std::vector<std::vector<std::size_t>> mobs_on(config.channels.size());
    for (std::size_t m = 0; m < config.mobs.size(); ++m) {
        for (auto c : config.mobs[m].channels) {
            mobs_on[c].push_back(m);
        }
        for (std::size_t i = 0; i < config.mobs[m].size; ++i) {
            corpus.commenter_mob["mob" + std::to_string(m) + "_m" + std::to_string(i)] = m;
        }
    }

    std::size_t next_comment = 0;
    for (std::size_t c = 0; c < config.channels.size(); ++c) {
        const auto& spec = config.channels[c];
        const auto channel = channel_name(c);
        corpus.channel_family[channel] = spec.family;
        Rng rng(derive_seed(config.seed, "channel:" + channel));

        std::vector<std::string> organic;
        for (std::size_t i = 0; i < spec.organic_commenters; ++i) {
            organic.push_back(channel + "_o" + std::to_string(i));
            corpus.commenter_mob[organic.back()] = std::nullopt;
        }

        for (std::size_t v = 0; v < spec.videos; ++v) {
            const auto video = channel + "_v" + std::to_string(v);
            auto comment = [&](const std::string& who) {
                const int copies = rng.bernoulli(config.repeat_probability) ? 2 : 1;
                for (int k = 0; k < copies; ++k) {
                    corpus.records.push_back({channel, video, who, "k" + std::to_string(next_comment++), std::nullopt, std::nullopt});
                }
            };
            for (const auto& who : organic) {
                if (rng.bernoulli(spec.organic_probability)) {
                    comment(who);
                }
            }
            for (auto m : mobs_on[c]) {
                if (rng.bernoulli(config.mobs[m].co_comment_probability)) {
                    for (std::size_t i = 0; i < config.mobs[m].size; ++i) {
                        comment("mob" + std::to_string(m) + "_m" + std::to_string(i));
                    }
                }
            }
        }
    }
    return corpus;
}

inline nlohmann::json ground_truth_json(const SynthCorpus& corpus) {
    nlohmann::json commenters = nlohmann::json::object();
    for (const auto& [id, mob] : corpus.commenter_mob) {
        commenters[id] = mob ? nlohmann::json(*mob) : nlohmann::json(nullptr);
    }
    return {{"channels", corpus.channel_family}, {"commenters", commenters}};
}

} // namespace mobgraph

#endif // MOBGRAPH_SYNTH_HPP
