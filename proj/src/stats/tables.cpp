#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include <boost/math/special_functions/gamma.hpp>

#include "attentrack/error.hpp"
#include "attentrack/stats.hpp"

namespace attentrack {

std::int64_t ContingencyTable::total() const { return std::accumulate(counts.begin(), counts.end(), std::int64_t{0}); }

ContingencyTable ContingencyTable::transpose() const {
    ContingencyTable t{col_labels, row_labels, std::vector<std::int64_t>(counts.size())};
    for (std::size_t r = 0; r < rows(); ++r)
        for (std::size_t c = 0; c < cols(); ++c) t.counts[c * rows() + r] = at(r, c);
    return t;
}

ChiSquareResult chi_square(const ContingencyTable& t) {
    const std::size_t R = t.rows(), C = t.cols();
    if (R < 2 || C < 2) throw UsageError("chi-square needs at least a 2x2 table");
    if (t.counts.size() != R * C) throw UsageError("contingency table counts do not match its labels");
    std::vector<double> row(R, 0.0), col(C, 0.0);
    for (std::size_t r = 0; r < R; ++r)
        for (std::size_t c = 0; c < C; ++c) {
            const auto v = t.at(r, c);
            if (v < 0) throw UsageError("negative count in contingency table");
            row[r] += static_cast<double>(v);
            col[c] += static_cast<double>(v);
        }
    for (std::size_t r = 0; r < R; ++r)
        if (row[r] == 0.0) throw UsageError("row '" + t.row_labels[r] + "' has a zero margin");
    for (std::size_t c = 0; c < C; ++c)
        if (col[c] == 0.0) throw UsageError("column '" + t.col_labels[c] + "' has a zero margin");
    const double n = static_cast<double>(t.total());
    ChiSquareResult res;
    res.n = t.total();
    // Terms are summed in sorted order so the statistic does not depend on orientation.
    std::vector<double> terms;
    terms.reserve(R * C);
    for (std::size_t r = 0; r < R; ++r)
        for (std::size_t c = 0; c < C; ++c) {
            const double e = row[r] * col[c] / n;
            const double d = static_cast<double>(t.at(r, c)) - e;
            terms.push_back(d * d / e);
        }
    std::sort(terms.begin(), terms.end());
    for (double v : terms) res.chi2 += v;
    res.df = static_cast<int>((R - 1) * (C - 1));
    res.p = boost::math::gamma_q(res.df / 2.0, res.chi2 / 2.0);
    return res;
}

namespace {

struct FieldInfo {
    GroupField field;
    std::string_view name;
};

constexpr std::array<FieldInfo, 10> kFields{{
    {GroupField::activity, "activity"},
    {GroupField::time_of_day, "time_of_day"},
    {GroupField::weekday, "weekday"},
    {GroupField::day_of_week, "day_of_week"},
    {GroupField::foreground_category, "foreground_category"},
    {GroupField::notif_category, "notif_category"},
    {GroupField::response_behavior, "response_behavior"},
    {GroupField::coarse_behavior, "coarse_behavior"},
    {GroupField::gender, "gender"},
    {GroupField::occupation, "occupation"},
}};

template <typename E>
std::vector<std::string> tokens() {
    std::vector<std::string> out;
    for (auto n : EnumTokens<E>::names) out.emplace_back(n);
    return out;
}

// Declared levels of a field and the level index of each record.
struct Levels {
    std::vector<std::string> names;
    std::vector<std::size_t> of_record;
};

Levels levels_of(const Dataset& d, GroupField f) {
    Levels lv;
    const auto profile_of = [&](const EsmRecord& r) -> const UserProfile& {
        const auto* p = d.profile(r.user_id);
        if (!p) throw UsageError("no profile for user '" + r.user_id + "' (needed to group by profile fields)");
        return *p;
    };
    switch (f) {
        case GroupField::activity: lv.names = tokens<Activity>(); break;
        case GroupField::time_of_day: lv.names = tokens<TimeOfDay>(); break;
        case GroupField::weekday: lv.names = {"weekend", "weekday"}; break;
        case GroupField::day_of_week:
            lv.names = {"monday", "tuesday", "wednesday", "thursday", "friday", "saturday", "sunday"};
            break;
        case GroupField::foreground_category:
        case GroupField::notif_category: lv.names = tokens<AppCategory>(); break;
        case GroupField::response_behavior: lv.names = tokens<ResponseBehavior>(); break;
        case GroupField::coarse_behavior: lv.names = tokens<CoarseBehavior>(); break;
        case GroupField::gender: lv.names = tokens<Gender>(); break;
        case GroupField::occupation: lv.names = tokens<Occupation>(); break;
    }
    for (const auto& r : d.records) {
        std::size_t i = 0;
        switch (f) {
            case GroupField::activity: i = static_cast<std::size_t>(r.activity); break;
            case GroupField::time_of_day: i = static_cast<std::size_t>(r.time_of_day); break;
            case GroupField::weekday: i = r.weekday ? 1 : 0; break;
            case GroupField::day_of_week: i = static_cast<std::size_t>(r.day_of_week); break;
            case GroupField::foreground_category: i = static_cast<std::size_t>(r.foreground_category); break;
            case GroupField::notif_category: i = static_cast<std::size_t>(r.notif_category); break;
            case GroupField::response_behavior: i = static_cast<std::size_t>(r.response_behavior); break;
            case GroupField::coarse_behavior: i = static_cast<std::size_t>(coarsen_behavior(r.response_behavior)); break;
            case GroupField::gender: i = static_cast<std::size_t>(profile_of(r).gender); break;
            case GroupField::occupation: i = static_cast<std::size_t>(profile_of(r).occupation); break;
        }
        lv.of_record.push_back(i);
    }
    return lv;
}

double median_sorted(std::span<const double> v) {
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : (v[n / 2 - 1] + v[n / 2]) / 2.0;
}

}  // namespace

GroupField parse_group_field(std::string_view s) {
    for (const auto& f : kFields)
        if (f.name == s) return f.field;
    std::string valid;
    for (const auto& f : kFields) valid += (valid.empty() ? "" : ", ") + std::string(f.name);
    throw UsageError("unknown group field '" + std::string(s) + "' (valid: " + valid + ")");
}

std::string_view to_string(GroupField f) {
    for (const auto& x : kFields)
        if (x.field == f) return x.name;
    return "?";
}

ContingencyTable crosstab(const Dataset& d, GroupField rows) {
    const auto lv = levels_of(d, rows);
    std::vector<std::array<std::int64_t, 5>> counts(lv.names.size());
    for (std::size_t i = 0; i < d.records.size(); ++i) ++counts[lv.of_record[i]][static_cast<std::size_t>(d.records[i].attention - 1)];
    ContingencyTable t;
    std::array<bool, 5> col_used{};
    for (const auto& c : counts)
        for (std::size_t a = 0; a < 5; ++a) col_used[a] = col_used[a] || c[a] > 0;
    for (std::size_t a = 0; a < 5; ++a)
        if (col_used[a]) t.col_labels.push_back(std::to_string(a + 1));
    for (std::size_t g = 0; g < counts.size(); ++g) {
        if (std::accumulate(counts[g].begin(), counts[g].end(), std::int64_t{0}) == 0) continue;
        t.row_labels.push_back(lv.names[g]);
        for (std::size_t a = 0; a < 5; ++a)
            if (col_used[a]) t.counts.push_back(counts[g][a]);
    }
    return t;
}

GroupStats describe_levels(std::span<const int> levels) {
    GroupStats s;
    s.total = levels.size();
    if (levels.empty()) return s;
    std::vector<double> v;
    for (int a : levels) {
        if (a < 1 || a > 5) throw UsageError("attention level out of range");
        v.push_back(a);
        s.level_share[static_cast<std::size_t>(a - 1)] += 1.0;
    }
    const double n = static_cast<double>(v.size());
    for (double& x : s.level_share) x /= n;
    s.mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
    double var = 0.0;
    for (double x : v) var += (x - s.mean) * (x - s.mean);
    s.sd = std::sqrt(var / n);
    std::sort(v.begin(), v.end());
    s.median = median_sorted(v);
    return s;
}

std::vector<GroupStats> describe_by_group(const Dataset& d, GroupField group_by) {
    const auto lv = levels_of(d, group_by);
    std::vector<std::vector<int>> by(lv.names.size());
    for (std::size_t i = 0; i < d.records.size(); ++i) by[lv.of_record[i]].push_back(d.records[i].attention);
    std::vector<GroupStats> out;
    for (std::size_t g = 0; g < by.size(); ++g) {
        if (by[g].empty()) continue;
        auto s = describe_levels(by[g]);
        s.group = lv.names[g];
        s.proportion = static_cast<double>(s.total) / static_cast<double>(d.records.size());
        out.push_back(std::move(s));
    }
    return out;
}

double cohens_kappa(std::span<const std::string> a, std::span<const std::string> b) {
    if (a.size() != b.size()) throw UsageError("cohens_kappa: coder lists differ in length");
    if (a.empty()) throw UsageError("cohens_kappa: no items");
    std::map<std::string_view, std::pair<double, double>> marg;
    double agree = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        marg[a[i]].first += 1.0;
        marg[b[i]].second += 1.0;
        if (a[i] == b[i]) agree += 1.0;
    }
    const double n = static_cast<double>(a.size());
    const double po = agree / n;
    double pe = 0.0;
    for (const auto& [_, m] : marg) pe += (m.first / n) * (m.second / n);
    if (pe == 1.0) return 1.0;
    return (po - pe) / (1.0 - pe);
}

Quartiles tukey_quartiles(std::vector<double> v) {
    if (v.empty()) throw UsageError("quartiles of an empty list");
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size(), half = n / 2;
    Quartiles q;
    q.median = median_sorted(v);
    if (half == 0) {
        q.q1 = q.q3 = q.median;
        return q;
    }
    q.q1 = median_sorted(std::span<const double>(v).first(half));
    q.q3 = median_sorted(std::span<const double>(v).last(half));
    return q;
}

std::vector<ResponseTimeRow> response_time_table(const Dataset& d) {
    std::array<std::vector<double>, 5> by;
    for (const auto& r : d.records) by[static_cast<std::size_t>(r.attention - 1)].push_back(static_cast<double>(r.response_time_s));
    std::vector<ResponseTimeRow> out;
    for (std::size_t a = 0; a < 5; ++a) {
        if (by[a].empty()) continue;
        ResponseTimeRow row;
        row.attention = static_cast<int>(a + 1);
        row.n = by[a].size();
        row.mean = std::accumulate(by[a].begin(), by[a].end(), 0.0) / static_cast<double>(row.n);
        row.q = tukey_quartiles(by[a]);
        out.push_back(row);
    }
    return out;
}

}  // namespace attentrack
