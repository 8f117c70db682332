#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "attentrack/dataset.hpp"

namespace attentrack {

struct ResponseTimeLaw {
    std::array<double, 3> beta = {26.49, 18.82, -1.32};  // seconds: b0 + b1*A + b2*A^2
    double group_var = 648.27;
    double residual_var = 900.0;
    double floor_s = 1.0;
};

// Generating laws for synthetic ESM datasets. Distributions are probability
// vectors over the declared enum order.
struct SynthConfig {
    int n_users = 20;
    int records_min = 300;
    int records_max = 300;
    std::uint64_t seed = 42;
    std::vector<double> activity;                         // 9
    std::vector<std::vector<double>> attention_given_activity;  // 9 x 5
    std::vector<std::vector<double>> behavior_given_attention;  // 5 x 5 coarse behaviors
    std::vector<double> notif_category;                   // 22
    std::vector<double> foreground_category;              // 23, incl. home_screen
    ResponseTimeLaw response_time;
    Timestamp start = {1709517600, 8 * 3600};  // 2024-03-04T10:00:00+08:00
    double span_days = 14.0;
    double ignore_share = 0.8;   // no_response split into ignore / didnt_notice
    double sensor_rate = 0.9;    // records with accel/gyro present
    double motivation_rate = 0.3;

    // Planted-signal configuration: activity shifts attention and attention
    // drives the response behavior.
    static SynthConfig planted_default();
    static SynthConfig from_json(const nlohmann::json& j);  // missing keys take planted defaults
    static SynthConfig load(const std::string& path);
    nlohmann::json to_json() const;

    // Throws UsageError describing the first problem.
    void validate() const;
};

// Deterministic given the config (including its seed). The result passes
// validate_dataset.
Dataset generate(const SynthConfig& config, const CodeTaxonomy& taxonomy = CodeTaxonomy::default_taxonomy());

// Uniform permutation of the attention column; everything else is untouched.
Dataset shuffle_labels(const Dataset& d, std::uint64_t seed);

}  // namespace attentrack
