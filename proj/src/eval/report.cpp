#include <cstdio>
#include <ostream>
#include <string>

#include "attentrack/eval.hpp"

namespace attentrack {
namespace {

std::string num(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

std::string num(const std::optional<double>& v) { return v ? num(*v) : std::string(); }

std::string pct(double mean, double sd) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.2f%% ± %.2f", 100.0 * mean, 100.0 * sd);
    return buf;
}

std::string pct(const std::optional<double>& mean, const std::optional<double>& sd) {
    return mean ? pct(*mean, sd.value_or(0.0)) : std::string("n/a");
}

const char* kMetricHeader =
    "accuracy,precision_pos,recall_pos,f1_pos,precision_macro,recall_macro,f1_macro,"
    "precision_weighted,recall_weighted,f1_weighted,auc";

std::string metric_fields(const MetricSet& m) {
    std::string s;
    for (const auto& v : {num(m.accuracy), num(m.precision_pos), num(m.recall_pos), num(m.f1_pos),
                          num(m.precision_macro), num(m.recall_macro), num(m.f1_macro), num(m.precision_weighted),
                          num(m.recall_weighted), num(m.f1_weighted), num(m.auc)}) {
        if (!s.empty()) s += ',';
        s += v;
    }
    return s;
}

std::string prefixed_header(const std::string& prefix) {
    std::string out;
    std::string h = kMetricHeader;
    std::size_t start = 0;
    while (start <= h.size()) {
        const auto end = h.find(',', start);
        if (!out.empty()) out += ',';
        out += prefix + h.substr(start, end == std::string::npos ? std::string::npos : end - start);
        if (end == std::string::npos) break;
        start = end + 1;
    }
    return out;
}

std::string describe(const ModelSpec& m) {
    switch (m.kind) {
        case LearnerKind::forest: {
            const auto& p = m.forest;
            return "rf (n_estimators=" + std::to_string(p.n_estimators) + ", criterion=gini, max_depth=" +
                   (p.max_depth ? std::to_string(*p.max_depth) : std::string("none")) +
                   ", max_features=" + (p.max_features == MaxFeatures::sqrt ? "sqrt" : "all") +
                   ", class_weight=" + (p.class_weight == ClassWeight::balanced ? "balanced" : "none") +
                   ", bootstrap=" + (p.bootstrap ? "true" : "false") + ")";
        }
        case LearnerKind::gbm: {
            const auto& p = m.gbm;
            char lr[32];
            std::snprintf(lr, sizeof lr, "%g", p.learning_rate);
            char sub[32];
            std::snprintf(sub, sizeof sub, "%g", p.subsample);
            return "gb (n_estimators=" + std::to_string(p.n_estimators) + ", learning_rate=" + lr +
                   ", max_depth=" + std::to_string(p.max_depth) + ", criterion=friedman_mse, subsample=" + sub + ")";
        }
        case LearnerKind::majority: return "majority (training class priors)";
    }
    return "";
}

std::string model_label(const ModelSpec& m) {
    switch (m.kind) {
        case LearnerKind::forest: return "RF";
        case LearnerKind::gbm: return "GB";
        case LearnerKind::majority: return "Majority";
    }
    return "";
}

void settings(std::ostream& out, const EvalConfig& c, std::size_t users, bool show_scheme = true) {
    out << "| Setting | Value |\n|---|---|\n";
    out << "| Model | " << describe(c.model) << " |\n";
    if (show_scheme) out << "| Scheme | " << to_string(c.scheme) << " |\n";
    out << "| Labeler | " << to_string(c.labeler) << " |\n";
    out << "| Seed | " << c.seed << " |\n";
    out << "| Users | " << users << " |\n\n";
}

const char* kTableHeader = "| Model | Averaging | Acc. ± SD | Prec. ± SD | Rec. ± SD | F1 ± SD | AUC ± SD |\n"
                           "|---|---|---|---|---|---|---|\n";

void summary_rows(std::ostream& out, const std::string& label, const MetricSummary& s, bool binary) {
    const auto& m = s.mean;
    const auto& d = s.sd;
    const auto auc = pct(m.auc, d.auc);
    out << "| " << label << " | macro | " << pct(m.accuracy, d.accuracy) << " | "
        << pct(m.precision_macro, d.precision_macro) << " | " << pct(m.recall_macro, d.recall_macro) << " | "
        << pct(m.f1_macro, d.f1_macro) << " | " << auc << " |\n";
    out << "| " << label << " | weighted | " << pct(m.accuracy, d.accuracy) << " | "
        << pct(m.precision_weighted, d.precision_weighted) << " | " << pct(m.recall_weighted, d.recall_weighted)
        << " | " << pct(m.f1_weighted, d.f1_weighted) << " | " << auc << " |\n";
    if (binary)
        out << "| " << label << " | positive class | " << pct(m.accuracy, d.accuracy) << " | "
            << pct(m.precision_pos, d.precision_pos) << " | " << pct(m.recall_pos, d.recall_pos) << " | "
            << pct(m.f1_pos, d.f1_pos) << " | " << auc << " |\n";
}

bool is_binary(const EvalConfig& c) { return c.labeler != LabelerName::ATTENTRACK_III; }

}  // namespace

void write_louo_csv(std::ostream& out, const LouoReport& r) {
    out << "user_id,n_train,n_test,fallback," << kMetricHeader << ",baseline_accuracy,baseline_f1_macro,baseline_auc\n";
    for (const auto& f : r.folds)
        out << f.user_id << ',' << f.n_train << ',' << f.n_test << ',' << (f.fallback ? 1 : 0) << ','
            << metric_fields(f.model) << ',' << num(f.baseline.accuracy) << ',' << num(f.baseline.f1_macro) << ','
            << num(f.baseline.auc) << '\n';
}

void write_louo_markdown(std::ostream& out, const LouoReport& r) {
    out << "# Leave-one-user-out evaluation\n\n";
    settings(out, r.config, r.folds.size());
    out << kTableHeader;
    summary_rows(out, model_label(r.config.model), r.model, is_binary(r.config));
    summary_rows(out, "Baseline", r.baseline, is_binary(r.config));
    out << "\nMean AUC: " << num(r.model.mean.auc) << " over " << r.model.auc_n << " of " << r.model.folds
        << " users (others have single-class test labels).\n";
    out << "Headline averaging: macro. SD is the population SD across held-out users.\n";
}

void write_personalization_csv(std::ostream& out, const PersonalizationReport& r) {
    out << "user_id,n_personal_train,n_general_train,n_test,last_train_time,first_test_time,personal_fallback,"
        << prefixed_header("personal_") << ',' << prefixed_header("general_") << '\n';
    for (const auto& f : r.folds)
        out << f.user_id << ',' << f.n_personal_train << ',' << f.n_general_train << ',' << f.n_test << ','
            << f.last_train_time << ',' << f.first_test_time << ',' << (f.personal_fallback ? 1 : 0) << ','
            << metric_fields(f.personal) << ',' << metric_fields(f.general) << '\n';
}

void write_personalization_markdown(std::ostream& out, const PersonalizationReport& r) {
    out << "# Personalized vs. general model\n\n";
    settings(out, r.config, r.folds.size());
    out << "Personalized models train on each user's first 70% of records; general models train on all other "
           "users. Both are tested on the user's last 30%.\n\n";
    out << kTableHeader;
    summary_rows(out, "Personalized", r.personal, is_binary(r.config));
    summary_rows(out, "General", r.general, is_binary(r.config));
    if (!r.notices.empty()) {
        out << "\nNotices:\n\n";
        for (const auto& n : r.notices) out << "- " << n << '\n';
    }
}

void write_incremental_csv(std::ostream& out, const IncrementalReport& r) {
    out << "user_id,fraction,n_own_train,n_test," << kMetricHeader << '\n';
    for (const auto& p : r.points)
        out << p.user_id << ',' << num(p.fraction) << ',' << p.n_own_train << ',' << p.n_test << ','
            << metric_fields(p.metrics) << '\n';
}

void write_incremental_markdown(std::ostream& out, const IncrementalReport& r) {
    out << "# Incremental personal data\n\n";
    settings(out, r.config, r.curve.empty() ? 0 : r.curve.front().folds);
    out << "Each user's last 20% of records is the test set; the given fraction of the first 80% is added to the "
           "other users' training data.\n\n";
    out << "| Fraction | Acc. ± SD | F1 (macro) ± SD | AUC ± SD | Users with AUC |\n|---|---|---|---|---|\n";
    for (std::size_t j = 0; j < r.fractions.size(); ++j) {
        const auto& s = r.curve[j];
        out << "| " << num(r.fractions[j]) << " | " << pct(s.mean.accuracy, s.sd.accuracy) << " | "
            << pct(s.mean.f1_macro, s.sd.f1_macro) << " | " << pct(s.mean.auc, s.sd.auc) << " | " << s.auc_n
            << " |\n";
    }
    if (!r.notices.empty()) {
        out << "\nNotices:\n\n";
        for (const auto& n : r.notices) out << "- " << n << '\n';
    }
}

void write_ablation_csv(std::ostream& out, const AblationReport& r) {
    out << "scheme,user_id,n_train,n_test," << kMetricHeader << '\n';
    for (const auto& run : r.runs)
        for (const auto& f : run.folds)
            out << to_string(run.config.scheme) << ',' << f.user_id << ',' << f.n_train << ',' << f.n_test << ','
                << metric_fields(f.model) << '\n';
}

void write_ablation_markdown(std::ostream& out, const AblationReport& r) {
    out << "# Feature ablation\n\n";
    if (!r.runs.empty()) settings(out, r.runs.front().config, r.runs.front().folds.size(), false);
    out << "| Features | Acc. ± SD | F1 (macro) ± SD | AUC ± SD |\n|---|---|---|---|\n";
    for (const auto& run : r.runs) {
        const auto& s = run.model;
        out << "| " << to_string(run.config.scheme) << " | " << pct(s.mean.accuracy, s.sd.accuracy) << " | "
            << pct(s.mean.f1_macro, s.sd.f1_macro) << " | " << pct(s.mean.auc, s.sd.auc) << " |\n";
    }
}

void write_group_csv(std::ostream& out, const GroupReport& r) {
    out << "user_id,n_group_train,n_general_train,n_test," << prefixed_header("group_") << ','
        << prefixed_header("general_") << ",delta_auc,delta_f1_macro\n";
    for (const auto& f : r.folds) {
        std::optional<double> dauc;
        if (f.group.auc && f.general.auc) dauc = *f.group.auc - *f.general.auc;
        out << f.user_id << ',' << f.n_group_train << ',' << f.n_general_train << ',' << f.n_test << ','
            << metric_fields(f.group) << ',' << metric_fields(f.general) << ',' << num(dauc) << ','
            << num(f.group.f1_macro - f.general.f1_macro) << '\n';
    }
}

void write_group_markdown(std::ostream& out, const GroupReport& r) {
    out << "# Group model: " << r.group_name << "\n\n";
    settings(out, r.config, r.folds.size());
    out << "Group models train on the other members of the group; general models train on all other users. Both "
           "are tested on the held-out group member.\n\n";
    out << kTableHeader;
    summary_rows(out, "Group", r.group, is_binary(r.config));
    summary_rows(out, "General", r.general, is_binary(r.config));
}

}  // namespace attentrack
