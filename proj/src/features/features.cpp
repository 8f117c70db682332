#include "attentrack/features.hpp"

#include <cmath>

#include "attentrack/error.hpp"

namespace attentrack {
namespace {

constexpr std::array<std::string_view, 5> kSchemeNames{"CONTEXT_ONLY", "DISTRACTION_ONLY", "FULL",
                                                       "FULL_FINE_RESPONSE", "FULL_WITH_FACTORS"};
constexpr std::array<std::string_view, 3> kLabelerNames{"ATTENTRACK_I", "ATTENTRACK_II", "ATTENTRACK_III"};

template <std::size_t N>
std::string join(const std::array<std::string_view, N>& names) {
    std::string s;
    for (auto n : names) {
        if (!s.empty()) s += ", ";
        s += n;
    }
    return s;
}

bool has_context(SchemeName s) { return s != SchemeName::DISTRACTION_ONLY; }
bool has_distraction(SchemeName s) { return s != SchemeName::CONTEXT_ONLY; }

}  // namespace

std::string_view to_string(SchemeName s) { return kSchemeNames[static_cast<std::size_t>(s)]; }
std::string_view to_string(LabelerName l) { return kLabelerNames[static_cast<std::size_t>(l)]; }

SchemeName parse_scheme(std::string_view s) {
    for (std::size_t i = 0; i < kSchemeNames.size(); ++i)
        if (kSchemeNames[i] == s) return static_cast<SchemeName>(i);
    throw UsageError("unknown scheme '" + std::string(s) + "'; valid: " + join(kSchemeNames));
}

LabelerName parse_labeler(std::string_view s) {
    for (std::size_t i = 0; i < kLabelerNames.size(); ++i)
        if (kLabelerNames[i] == s) return static_cast<LabelerName>(i);
    throw UsageError("unknown labeler '" + std::string(s) + "'; valid: " + join(kLabelerNames));
}

EncodingScheme::EncodingScheme(SchemeName name, const CodeTaxonomy& taxonomy, EncodingOptions options)
    : name_(name), taxonomy_(taxonomy), options_(options) {
    using Kind = FeatureDescriptor::Kind;
    auto one_hot = [&]<typename E>(std::string group, E, std::size_t count) {
        descriptors_.push_back({group, Kind::one_hot, count});
        for (std::size_t i = 0; i < count; ++i)
            columns_.push_back(group + "=" + std::string(to_token(static_cast<E>(i))));
    };
    if (has_context(name)) {
        one_hot("time_of_day", TimeOfDay{}, enum_size<TimeOfDay>());
        descriptors_.push_back({"weekday", Kind::numeric, 1});
        columns_.push_back("weekday");
        descriptors_.push_back({"day_of_week", Kind::one_hot, 7});
        for (int d = 0; d < 7; ++d) columns_.push_back("day_of_week=" + std::to_string(d));
        one_hot("activity", Activity{}, enum_size<Activity>());
        one_hot("foreground_category", AppCategory{}, kForegroundCategoryCount);
        descriptors_.push_back({"accel_magnitude", Kind::numeric, 1});
        columns_.push_back("accel_magnitude");
        descriptors_.push_back({"gyro_magnitude", Kind::numeric, 1});
        columns_.push_back("gyro_magnitude");
    }
    if (has_distraction(name)) {
        one_hot("notif_category", AppCategory{}, kNotifCategoryCount);
        if (name == SchemeName::FULL_FINE_RESPONSE)
            one_hot("response_behavior", ResponseBehavior{}, enum_size<ResponseBehavior>());
        else
            one_hot("coarse_behavior", CoarseBehavior{}, enum_size<CoarseBehavior>());
        descriptors_.push_back({"log1p_response_time", Kind::numeric, 1});
        columns_.push_back("log1p_response_time");
    }
    if (name == SchemeName::FULL_WITH_FACTORS) {
        const auto& factors = taxonomy.factors();
        descriptors_.push_back({"factors", Kind::multi_hot, factors.size()});
        for (const auto& f : factors) columns_.push_back("factor=" + f.id);
    }
    dimension_ = columns_.size();
}

void EncodingScheme::encode_into(const EsmRecord& r, std::span<double> out) const {
    if (out.size() != dimension_) throw UsageError("encode_into: output span has wrong dimension");
    std::fill(out.begin(), out.end(), 0.0);
    std::size_t at = 0;
    auto hot = [&](std::size_t index, std::size_t width) {
        out[at + index] = 1.0;
        at += width;
    };
    if (has_context(name_)) {
        hot(static_cast<std::size_t>(r.time_of_day), enum_size<TimeOfDay>());
        out[at++] = r.weekday ? 1.0 : 0.0;
        hot(static_cast<std::size_t>(r.day_of_week), 7);
        hot(static_cast<std::size_t>(r.activity), enum_size<Activity>());
        hot(static_cast<std::size_t>(r.foreground_category), kForegroundCategoryCount);
        out[at++] = (options_.use_sensors && r.accel) ? r.accel->norm() : 0.0;
        out[at++] = (options_.use_sensors && r.gyro) ? r.gyro->norm() : 0.0;
    }
    if (has_distraction(name_)) {
        if (r.notif_category == AppCategory::home_screen)
            throw UsageError("home_screen is not a notification category");
        hot(static_cast<std::size_t>(r.notif_category), kNotifCategoryCount);
        if (name_ == SchemeName::FULL_FINE_RESPONSE)
            hot(static_cast<std::size_t>(r.response_behavior), enum_size<ResponseBehavior>());
        else
            hot(static_cast<std::size_t>(coarsen_behavior(r.response_behavior)), enum_size<CoarseBehavior>());
        out[at++] = options_.use_response_time ? std::log1p(static_cast<double>(r.response_time_s)) : 0.0;
    }
    if (name_ == SchemeName::FULL_WITH_FACTORS) {
        for (const auto& code : r.codes) {
            auto idx = taxonomy_.code_index(code);
            if (!idx) throw UsageError("unknown code id '" + code + "'");
            out[at + taxonomy_.factor_of_code(*idx)] = 1.0;
        }
        at += taxonomy_.factors().size();
    }
}

std::vector<double> EncodingScheme::encode(const EsmRecord& r) const {
    std::vector<double> v(dimension_);
    encode_into(r, v);
    return v;
}

const std::vector<std::string>& Labeler::class_names() const {
    static const std::vector<std::string> one{"less_focused", "more_focused"};
    static const std::vector<std::string> two{"completely_unfocused", "somewhat_focused"};
    static const std::vector<std::string> three{"low", "medium", "high"};
    switch (name_) {
        case LabelerName::ATTENTRACK_I: return one;
        case LabelerName::ATTENTRACK_II: return two;
        case LabelerName::ATTENTRACK_III: return three;
    }
    throw UsageError("invalid labeler");
}

int Labeler::label(int attention) const {
    if (attention < 1 || attention > 5)
        throw UsageError("attention must be in 1-5, got " + std::to_string(attention));
    switch (name_) {
        case LabelerName::ATTENTRACK_I: return attention >= 3 ? 1 : 0;
        case LabelerName::ATTENTRACK_II: return attention > 1 ? 1 : 0;
        case LabelerName::ATTENTRACK_III: return attention == 1 ? 0 : (attention <= 3 ? 1 : 2);
    }
    throw UsageError("invalid labeler");
}

FeatureMatrix FeatureMatrix::subset(std::span<const std::size_t> row_ids) const {
    FeatureMatrix m;
    m.n_rows = row_ids.size();
    m.n_cols = n_cols;
    m.scheme = scheme;
    m.labeler = labeler;
    m.class_names = class_names;
    m.column_names = column_names;
    m.rows.reserve(m.n_rows * n_cols);
    for (auto i : row_ids) {
        auto r = row(i);
        m.rows.insert(m.rows.end(), r.begin(), r.end());
        m.labels.push_back(labels[i]);
        m.user_ids.push_back(user_ids[i]);
        m.record_index.push_back(record_index[i]);
    }
    return m;
}

FeatureMatrix build_matrix(const Dataset& d, const EncodingScheme& s, const Labeler& l) {
    if (d.records.empty()) throw UsageError("build_matrix: dataset is empty");
    FeatureMatrix m;
    m.n_rows = d.records.size();
    m.n_cols = s.dimension();
    m.scheme = s.name();
    m.labeler = l.name();
    m.class_names = l.class_names();
    m.column_names = s.column_names();
    m.rows.assign(m.n_rows * m.n_cols, 0.0);
    m.labels.reserve(m.n_rows);
    m.user_ids.reserve(m.n_rows);
    m.record_index.reserve(m.n_rows);
    for (std::size_t i = 0; i < m.n_rows; ++i) {
        const auto& r = d.records[i];
        s.encode_into(r, std::span<double>(m.rows.data() + i * m.n_cols, m.n_cols));
        m.labels.push_back(l.label(r.attention));
        m.user_ids.push_back(r.user_id);
        m.record_index.push_back(i);
    }
    return m;
}

}  // namespace attentrack
