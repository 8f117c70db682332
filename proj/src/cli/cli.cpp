#include "attentrack/cli.hpp"

#include <openssl/evp.h>

#include <CLI11.hpp>
#include <array>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <memory>
#include <sstream>

#include "attentrack/error.hpp"
#include "attentrack/stats.hpp"
#include "attentrack/synth.hpp"
#include "dataset/csv.hpp"

#ifndef ATTENTRACK_VERSION
#define ATTENTRACK_VERSION "0.0.0"
#endif

namespace attentrack::cli {
namespace fs = std::filesystem;

namespace {

constexpr std::array<std::string_view, 5> kStatsNames{"chi2", "tables", "kappa", "rtimes", "lmm"};
constexpr std::array<std::string_view, 5> kExperimentNames{"louo", "personalization", "incremental", "ablation",
                                                           "group"};

template <std::size_t N>
std::string join(const std::array<std::string_view, N>& names) {
    std::string s;
    for (auto n : names) s += (s.empty() ? "" : ", ") + std::string(n);
    return s;
}

std::string_view format_name(DataFormat f) { return f == DataFormat::csv ? "csv" : "jsonl"; }

void require_file(const std::string& path, const char* what) {
    std::error_code ec;
    if (path.empty()) throw UsageError(std::string("missing --") + what);
    if (!fs::is_regular_file(path, ec)) throw UsageError(std::string(what) + " file '" + path + "' does not exist");
}

// Output directory of one run: files are written through it and listed in the manifest.
class RunDir {
public:
    RunDir(const RunConfig& c, std::string command) : config_(c) {
        if (c.out.empty()) throw UsageError("missing --out");
        manifest_["tool"] = "attentrack";
        manifest_["version"] = ATTENTRACK_VERSION;
        manifest_["command"] = std::move(command);
        manifest_["seed"] = c.effective_seed();
        manifest_["config"] = c.to_json();
        manifest_["inputs"] = nlohmann::json::array();
        manifest_["outputs"] = nlohmann::json::array();
    }

    void add_input(const std::string& role, const std::string& path) {
        if (path.empty()) return;
        manifest_["inputs"].push_back({{"role", role}, {"path", path}, {"sha256", sha256_file(path)}});
        inputs_.push_back(fs::weakly_canonical(path));
    }

    nlohmann::json& manifest() { return manifest_; }

    void write(const std::string& name, const std::function<void(std::ostream&)>& body) {
        const fs::path dir(config_.out);
        fs::create_directories(dir);
        const fs::path path = dir / name;
        const auto canonical = fs::weakly_canonical(path);
        for (const auto& in : inputs_)
            if (in == canonical) throw UsageError("refusing to overwrite input file '" + path.string() + "'");
        {
            std::ofstream f(path, std::ios::binary | std::ios::trunc);
            if (!f) throw Error("cannot write '" + path.string() + "'");
            body(f);
            if (!f) throw Error("write failed for '" + path.string() + "'");
        }
        manifest_["outputs"].push_back({{"path", name}, {"sha256", sha256_file(path.string())}});
        written_.push_back(path.string());
    }

    void write_json(const std::string& name, const nlohmann::json& j) {
        write(name, [&](std::ostream& o) { o << j.dump(2) << '\n'; });
    }

    void finish(std::ostream& out) {
        const fs::path path = fs::path(config_.out) / "manifest.json";
        std::ofstream f(path, std::ios::binary | std::ios::trunc);
        if (!f) throw Error("cannot write '" + path.string() + "'");
        f << manifest_.dump(2) << '\n';
        for (const auto& w : written_) out << "wrote " << w << '\n';
        out << "wrote " << path.string() << '\n';
    }

private:
    const RunConfig& config_;
    nlohmann::json manifest_;
    std::vector<fs::path> inputs_;
    std::vector<std::string> written_;
};

Dataset load(const RunConfig& c, RunDir* run) {
    require_file(c.data, "data");
    if (!c.profiles.empty()) require_file(c.profiles, "profiles");
    if (!c.taxonomy.empty()) require_file(c.taxonomy, "taxonomy");
    if (run) {
        run->add_input("data", c.data);
        run->add_input("profiles", c.profiles);
        run->add_input("taxonomy", c.taxonomy);
    }
    return load_dataset(c.data, c.profiles, c.taxonomy);
}

Dataset load_filtered(const RunConfig& c, RunDir& run, std::ostream& out) {
    Dataset d = load(c, &run);
    auto r = filter_users(d, c.min_records, c.drop_constant);
    run.manifest()["filter"] = {{"min_records", c.min_records},
                                {"drop_constant", c.drop_constant},
                                {"removed_insufficient", r.report.removed_insufficient},
                                {"removed_constant", r.report.removed_constant},
                                {"kept_users", r.report.kept_users}};
    out << "users kept: " << r.report.kept_users << " (removed " << r.report.removed_insufficient.size()
        << " with < " << c.min_records << " records, " << r.report.removed_constant.size()
        << " with near-constant attention)\n";
    return std::move(r.dataset);
}

template <class F>
int guarded(std::ostream& err, F&& body) {
    try {
        return body();
    } catch (const SchemaError& e) {
        err << "invalid input: " << e.what() << '\n';
        return kExitInvalid;
    } catch (const ConvergenceError& e) {
        err << "error: " << e.what() << '\n';
        return kExitInvalid;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const fs::filesystem_error& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    }
}

std::pair<std::vector<std::string>, std::vector<std::string>> read_ratings(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open ratings file '" + path + "'");
    detail::CsvReader reader(in);
    std::vector<std::string> row;
    std::pair<std::vector<std::string>, std::vector<std::string>> out;
    if (!reader.next(row)) throw SchemaError(1, "", "ratings file is empty");
    if (row.size() < 2) throw SchemaError(1, "", "ratings need two columns, one per coder");
    while (reader.next(row)) {
        if (row.size() == 1 && row[0].empty()) continue;
        if (row.size() < 2) throw SchemaError(reader.line(), "", "expected two ratings");
        out.first.push_back(row[0]);
        out.second.push_back(row[1]);
    }
    return out;
}

std::string fixed(double v) {
    std::ostringstream s;
    s << std::fixed << std::setprecision(6) << v;
    return s.str();
}

}  // namespace

std::string_view to_string(StatsKind k) { return kStatsNames[static_cast<std::size_t>(k)]; }
std::string_view to_string(Experiment e) { return kExperimentNames[static_cast<std::size_t>(e)]; }

StatsKind parse_stats_kind(std::string_view s) {
    for (std::size_t i = 0; i < kStatsNames.size(); ++i)
        if (kStatsNames[i] == s) return static_cast<StatsKind>(i);
    throw UsageError("unknown statistic '" + std::string(s) + "'; expected one of: " + join(kStatsNames));
}

Experiment parse_experiment(std::string_view s) {
    for (std::size_t i = 0; i < kExperimentNames.size(); ++i)
        if (kExperimentNames[i] == s) return static_cast<Experiment>(i);
    throw UsageError("unknown experiment '" + std::string(s) + "'; expected one of: " + join(kExperimentNames));
}

ModelSpec RunConfig::model_spec() const {
    ModelSpec s;
    s.kind = model;
    if (trees) {
        if (*trees < 1) throw UsageError("--trees must be >= 1");
        s.forest.n_estimators = *trees;
        s.gbm.n_estimators = *trees;
    }
    s.forest.threads = threads;
    return s;
}

nlohmann::json RunConfig::to_json() const {
    nlohmann::json j{
        {"data", data},
        {"profiles", profiles},
        {"taxonomy", taxonomy},
        {"scheme", std::string(attentrack::to_string(scheme))},
        {"labeler", std::string(attentrack::to_string(labeler))},
        {"model", std::string(attentrack::to_string(model))},
        {"seed", effective_seed()},
        {"out", out},
        {"threads", threads},
        {"min_records", min_records},
        {"drop_constant", drop_constant},
        {"by", by},
        {"group", group},
        {"fractions", fractions},
        {"reml", reml},
        {"ratings", ratings},
        {"synth_config", synth_config},
        {"format", std::string(format_name(format))},
    };
    j["trees"] = trees ? nlohmann::json(*trees) : nlohmann::json();
    j["users"] = users ? nlohmann::json(*users) : nlohmann::json();
    j["records"] = records ? nlohmann::json(*records) : nlohmann::json();
    return j;
}

std::string sha256_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot read '" + path + "'");
    std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), &EVP_MD_CTX_free);
    if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) throw Error("sha256 init failed");
    std::array<char, 1 << 16> buf{};
    while (in) {
        in.read(buf.data(), buf.size());
        if (in.gcount() > 0) EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(in.gcount()));
    }
    std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx.get(), md.data(), &len);
    std::ostringstream hex;
    for (unsigned int i = 0; i < len; ++i) hex << std::hex << std::setw(2) << std::setfill('0') << int(md[i]);
    return hex.str();
}

int cmd_validate(const RunConfig& c, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        std::unique_ptr<RunDir> run;
        if (!c.out.empty()) run = std::make_unique<RunDir>(c, "validate");
        const Dataset d = load(c, run.get());
        const auto users = d.user_ids();
        out << "valid: " << d.records.size() << " records, " << users.size() << " users, " << d.profiles.size()
            << " profiles\n";
        if (run) {
            run->write_json("validation.json", {{"valid", true},
                                                {"records", d.records.size()},
                                                {"users", users.size()},
                                                {"profiles", d.profiles.size()}});
            run->finish(out);
        }
        return kExitOk;
    });
}

int cmd_stats(const RunConfig& c, StatsKind which, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        RunDir run(c, "stats " + std::string(to_string(which)));
        if (which == StatsKind::kappa) {
            require_file(c.ratings, "ratings");
            run.add_input("ratings", c.ratings);
            const auto [a, b] = read_ratings(c.ratings);
            const double k = cohens_kappa(a, b);
            out << "kappa = " << fixed(k) << " over " << a.size() << " items\n";
            run.write_json("kappa.json", {{"kappa", k}, {"n", a.size()}});
            run.finish(out);
            return kExitOk;
        }
        const Dataset d = load(c, &run);
        switch (which) {
            case StatsKind::chi2: {
                const auto field = parse_group_field(c.by);
                const auto t = crosstab(d, field);
                const auto r = chi_square(t);
                out << "chi2(" << r.df << ", N = " << r.n << ") = " << std::fixed << std::setprecision(2) << r.chi2
                    << ", p = " << std::scientific << std::setprecision(3) << r.p << std::defaultfloat << '\n';
                const std::string stem = "chi2_" + std::string(to_string(field));
                run.write(stem + ".csv", [&](std::ostream& o) { write_chi_square_csv(o, t, r); });
                run.write(stem + ".md", [&](std::ostream& o) { write_chi_square_markdown(o, t, r); });
                break;
            }
            case StatsKind::tables: {
                const auto field = parse_group_field(c.by);
                const auto rows = describe_by_group(d, field);
                const std::string stem = "table_" + std::string(to_string(field));
                run.write(stem + ".csv", [&](std::ostream& o) { write_group_table_csv(o, rows); });
                run.write(stem + ".md",
                          [&](std::ostream& o) { write_group_table_markdown(o, to_string(field), rows); });
                break;
            }
            case StatsKind::rtimes: {
                const auto rows = response_time_table(d);
                run.write("rtimes.csv", [&](std::ostream& o) { write_response_time_csv(o, rows); });
                run.write("rtimes.md", [&](std::ostream& o) { write_response_time_markdown(o, rows); });
                break;
            }
            case StatsKind::lmm: {
                LmmOptions opt;
                opt.reml = c.reml;
                const auto fit = fit_lmm(d, opt);
                out << "group variance " << fixed(fit.group_var) << ", residual variance " << fixed(fit.residual_var)
                    << (fit.converged ? "" : " (not converged)") << '\n';
                run.write_json("lmm.json", fit.to_json());
                run.write("lmm.md", [&](std::ostream& o) { write_lmm_markdown(o, fit); });
                break;
            }
            case StatsKind::kappa: break;
        }
        run.finish(out);
        return kExitOk;
    });
}

int cmd_train(const RunConfig& c, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        if (c.model == LearnerKind::majority) throw UsageError("train needs --model rf or gb");
        RunDir run(c, "train");
        const Dataset d = load_filtered(c, run, out);
        if (d.records.empty()) throw UsageError("no records left after filtering");
        const EncodingScheme scheme(c.scheme, d.taxonomy);
        const Labeler labeler(c.labeler);
        const auto m = build_matrix(d, scheme, labeler);
        std::vector<std::uint64_t> keys(m.record_index.begin(), m.record_index.end());
        const auto p = Predictor::fit(c.model_spec(), {m.rows, m.n_rows, m.n_cols}, m.labels, m.class_names,
                                      c.effective_seed(), keys);
        if (!p.ensemble()) throw UsageError("training labels hold a single class; nothing to learn");
        run.write_json("model.json", p.ensemble()->to_json());
        run.write_json("features.json", {{"scheme", std::string(to_string(c.scheme))},
                                         {"labeler", std::string(to_string(c.labeler))},
                                         {"columns", m.column_names},
                                         {"classes", m.class_names}});
        out << "trained " << to_string(c.model) << " on " << m.n_rows << " rows x " << m.n_cols << " features\n";
        run.finish(out);
        return kExitOk;
    });
}

int cmd_eval(const RunConfig& c, Experiment which, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        RunDir run(c, "eval " + std::string(to_string(which)));
        ProfilePredicate predicate;
        if (which == Experiment::group) {
            if (c.group.empty()) throw UsageError("eval group needs --group field=value");
            predicate = parse_group(c.group);
        }
        const Dataset d = load_filtered(c, run, out);
        EvalConfig ec;
        ec.model = c.model_spec();
        ec.model.forest.threads = 1;  // folds are the parallel unit
        ec.scheme = c.scheme;
        ec.labeler = c.labeler;
        ec.seed = c.effective_seed();
        ec.threads = c.threads;
        const std::string stem(to_string(which));
        switch (which) {
            case Experiment::louo: {
                const auto r = run_louo(d, ec);
                if (r.model.mean.auc)
                    out << "mean AUC " << fixed(*r.model.mean.auc) << " over " << r.model.auc_n << " of "
                        << r.folds.size() << " users\n";
                run.write(stem + ".csv", [&](std::ostream& o) { write_louo_csv(o, r); });
                run.write(stem + ".md", [&](std::ostream& o) { write_louo_markdown(o, r); });
                break;
            }
            case Experiment::personalization: {
                const auto r = run_personalization(d, ec);
                for (const auto& n : r.notices) out << "note: " << n << '\n';
                run.write(stem + ".csv", [&](std::ostream& o) { write_personalization_csv(o, r); });
                run.write(stem + ".md", [&](std::ostream& o) { write_personalization_markdown(o, r); });
                break;
            }
            case Experiment::incremental: {
                const auto r = run_incremental(d, ec, c.fractions);
                for (const auto& n : r.notices) out << "note: " << n << '\n';
                run.write(stem + ".csv", [&](std::ostream& o) { write_incremental_csv(o, r); });
                run.write(stem + ".md", [&](std::ostream& o) { write_incremental_markdown(o, r); });
                break;
            }
            case Experiment::ablation: {
                const auto r = run_ablation(d, ec);
                run.write(stem + ".csv", [&](std::ostream& o) { write_ablation_csv(o, r); });
                run.write(stem + ".md", [&](std::ostream& o) { write_ablation_markdown(o, r); });
                break;
            }
            case Experiment::group: {
                const auto r = run_group_model(d, predicate, ec, c.group);
                run.write(stem + ".csv", [&](std::ostream& o) { write_group_csv(o, r); });
                run.write(stem + ".md", [&](std::ostream& o) { write_group_markdown(o, r); });
                break;
            }
        }
        run.finish(out);
        return kExitOk;
    });
}

int cmd_synth(const RunConfig& c, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        RunDir run(c, "synth");
        SynthConfig cfg = SynthConfig::planted_default();
        if (!c.synth_config.empty()) {
            require_file(c.synth_config, "synth config");
            run.add_input("synth_config", c.synth_config);
            cfg = SynthConfig::load(c.synth_config);
        }
        if (c.seed) cfg.seed = *c.seed;
        if (c.users) cfg.n_users = *c.users;
        if (c.records) cfg.records_min = cfg.records_max = *c.records;
        cfg.validate();
        run.manifest()["seed"] = cfg.seed;
        CodeTaxonomy taxonomy = CodeTaxonomy::default_taxonomy();
        if (!c.taxonomy.empty()) {
            require_file(c.taxonomy, "taxonomy");
            run.add_input("taxonomy", c.taxonomy);
            taxonomy = CodeTaxonomy::load(c.taxonomy);
        }
        const Dataset d = generate(cfg, taxonomy);
        const std::string records = "records." + std::string(format_name(c.format));
        run.write(records, [&](std::ostream& o) { write_records(o, d.records, c.format); });
        run.write("profiles.csv", [&](std::ostream& o) { write_profiles(o, d.profiles); });
        run.write_json("synth_config.json", cfg.to_json());
        out << "generated " << d.records.size() << " records for " << d.profiles.size() << " users\n";
        run.finish(out);
        return kExitOk;
    });
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Attention-state analysis and prediction for in-the-wild notification data", "attentrack"};
    app.require_subcommand(1);
    app.set_config("--config", "", "TOML/INI file with option values; command-line flags take precedence");
    app.set_version_flag("--version", ATTENTRACK_VERSION);

    RunConfig c;
    std::string scheme = "FULL", labeler = "ATTENTRACK_I", model = "gb", stat, experiment, format = "csv";
    std::uint64_t seed = 42;

    auto add_data = [&](CLI::App* sub) {
        sub->add_option("--data", c.data, "Records file (.csv or .jsonl)")->required();
        sub->add_option("--profiles", c.profiles, "Profiles CSV");
        sub->add_option("--taxonomy", c.taxonomy, "Code taxonomy JSON");
    };
    auto add_out = [&](CLI::App* sub, bool required) {
        auto* o = sub->add_option("--out", c.out, "Output directory");
        if (required) o->required();
    };
    auto add_model = [&](CLI::App* sub) {
        sub->add_option("--scheme", scheme, "Encoding scheme")->capture_default_str();
        sub->add_option("--labeler", labeler, "Attention labeler")->capture_default_str();
        sub->add_option("--model", model, "Learner: rf | gb")->capture_default_str();
        sub->add_option("--trees", c.trees, "Number of trees / boosting stages");
        sub->add_option("--threads", c.threads, "Worker threads")->capture_default_str()->check(CLI::PositiveNumber);
        sub->add_option("--min-records", c.min_records, "Drop users with fewer records")->capture_default_str();
        sub->add_flag("!--keep-constant", c.drop_constant, "Keep users whose attention is nearly constant (one level on >= 95% of records)");
    };
    std::vector<CLI::Option*> seed_opts;
    auto add_seed = [&](CLI::App* sub) {
        seed_opts.push_back(sub->add_option("--seed", seed, "Seed for all randomness")->capture_default_str());
    };

    auto* validate = app.add_subcommand("validate", "Check records (and profiles) against the schema");
    add_data(validate);
    add_out(validate, false);

    auto* stats = app.add_subcommand("stats", "Descriptive statistics and tests");
    stats->add_option("which", stat, "chi2 | tables | kappa | rtimes | lmm")->required();
    stats->add_option("--data", c.data, "Records file (.csv or .jsonl)");
    stats->add_option("--profiles", c.profiles, "Profiles CSV");
    stats->add_option("--taxonomy", c.taxonomy, "Code taxonomy JSON");
    stats->add_option("--by", c.by, "Grouping field for chi2 / tables")->capture_default_str();
    stats->add_option("--ratings", c.ratings, "Two-coder ratings CSV for kappa");
    stats->add_flag("--reml", c.reml, "Restricted likelihood for lmm");
    add_out(stats, true);

    auto* train = app.add_subcommand("train", "Fit a model on the whole dataset");
    add_data(train);
    add_model(train);
    add_seed(train);
    add_out(train, true);

    auto* eval = app.add_subcommand("eval", "Run an evaluation experiment");
    eval->add_option("experiment", experiment, "louo | personalization | incremental | ablation | group")
        ->required();
    add_data(eval);
    add_model(eval);
    add_seed(eval);
    eval->add_option("--group", c.group, "Profile filter field=value for the group experiment");
    eval->add_option("--fractions", c.fractions, "Own-data fractions for the incremental experiment")
        ->delimiter(',');
    add_out(eval, true);

    auto* synth = app.add_subcommand("synth", "Generate a synthetic dataset");
    synth->add_option("--synth-config", c.synth_config, "SynthConfig JSON (planted default when omitted)");
    synth->add_option("--taxonomy", c.taxonomy, "Code taxonomy JSON");
    synth->add_option("--users", c.users, "Override the number of users");
    synth->add_option("--records", c.records, "Override records per user");
    synth->add_option("--format", format, "csv | jsonl")->capture_default_str();
    add_seed(synth);
    add_out(synth, true);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    }

    return guarded(err, [&] {
        for (auto* o : seed_opts)
            if (o->count() > 0) c.seed = seed;
        c.scheme = parse_scheme(scheme);
        c.labeler = parse_labeler(labeler);
        c.model = parse_learner(model);
        if (format == "csv")
            c.format = DataFormat::csv;
        else if (format == "jsonl")
            c.format = DataFormat::jsonl;
        else
            throw UsageError("unknown format '" + format + "'; expected one of: csv, jsonl");

        if (*validate) return cmd_validate(c, out, err);
        if (*stats) {
            const auto kind = parse_stats_kind(stat);
            if (kind != StatsKind::kappa && c.data.empty()) throw UsageError("stats " + stat + " needs --data");
            return cmd_stats(c, kind, out, err);
        }
        if (*train) return cmd_train(c, out, err);
        if (*eval) return cmd_eval(c, parse_experiment(experiment), out, err);
        return cmd_synth(c, out, err);
    });
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    std::vector<const char*> argv{"attentrack"};
    for (const auto& a : args) argv.push_back(a.c_str());
    return run(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace attentrack::cli
