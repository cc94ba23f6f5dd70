#pragma once

#include <cstdio>
#include <filesystem>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "fairrank/csv.hpp"
#include "fairrank/experiments.hpp"

namespace fairrank {

namespace detail {

inline std::string fmt4(double value) {
    if (value == 0.0) value = 0.0;  // normalize -0
    char buffer[64];
    std::snprintf(buffer, sizeof buffer, "%.4f", value);
    return buffer;
}

inline std::string fmt2(double value) {
    if (value == 0.0) value = 0.0;
    char buffer[64];
    std::snprintf(buffer, sizeof buffer, "%.2f", value);
    return buffer;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// CSV emission
// ---------------------------------------------------------------------------

inline std::string sweep_csv(const SweepResult& result) {
    std::string out =
        "mode,lambda,w_race,w_country,seed,macro_race,macro_country,micro_race,micro_country,"
        "utility_gain,diversity_gain,f_measure,stopped_epoch,best_valid_loss,"
        "empty_group_batches\n";
    for (const CellRun& run : result.runs) {
        if (!run.ok()) continue;  // failures live in report.json
        std::vector<std::string> fields = {to_string(run.key.mode), detail::fmt4(run.key.lambda),
                                           detail::fmt4(run.key.w_race),
                                           detail::fmt4(run.key.w_country),
                                           std::to_string(run.seed)};
        for (const std::string& name : aggregated_metric_names())
            fields.push_back(detail::fmt4(round4(run_metric(run, name))));
        fields.push_back(std::to_string(run.train_summary.stopped_epoch));
        fields.push_back(detail::fmt4(run.train_summary.best_valid_loss));
        fields.push_back(std::to_string(run.train_summary.empty_group_batches));
        out += csv_row(fields);
    }
    return out;
}

inline std::string aggregate_csv(const SweepResult& result) {
    std::string out = "mode,lambda,w_race,w_country,n_seeds";
    for (const std::string& name : aggregated_metric_names())
        out += "," + name + "_mean," + name + "_std";
    out += "\n";
    for (const CellAggregate& agg : aggregate_runs(result.runs)) {
        std::vector<std::string> fields = {to_string(agg.key.mode), detail::fmt4(agg.key.lambda),
                                           detail::fmt4(agg.key.w_race),
                                           detail::fmt4(agg.key.w_country),
                                           std::to_string(agg.n_seeds)};
        for (const std::string& name : aggregated_metric_names()) {
            fields.push_back(detail::fmt4(round4(agg.mean.at(name))));
            fields.push_back(detail::fmt4(round4(agg.stddev.at(name))));
        }
        out += csv_row(fields);
    }
    return out;
}

// ---------------------------------------------------------------------------
// JSON round trip
// ---------------------------------------------------------------------------

inline nlohmann::ordered_json plan_to_json(const ExperimentPlan& plan) {
    nlohmann::ordered_json j;
    j["data"] = {{"kind", plan.data.kind == DataSource::Kind::synthetic ? "synthetic" : "files"},
                 {"regime", to_string(plan.data.regime)},
                 {"n_papers", plan.data.n_papers},
                 {"papers_path", plan.data.papers_path.string()},
                 {"authors_path", plan.data.authors_path.string()}};
    std::vector<std::string> modes;
    for (FairnessMode mode : plan.modes) modes.emplace_back(to_string(mode));
    j["modes"] = modes;
    j["lambda_grid"] = plan.lambda_grid;
    j["include_lambda_zero"] = plan.include_lambda_zero;
    j["weight_grid"] = plan.weight_grid;
    j["n_seeds"] = plan.n_seeds;
    j["base_seed"] = plan.base_seed;
    j["n_accept"] = plan.n_accept;
    j["train"] = {{"epochs", plan.train.epochs},
                  {"batch_size", plan.train.batch_size},
                  {"learning_rate", plan.train.learning_rate},
                  {"patience", plan.train.patience},
                  {"hidden", plan.train.hidden}};
    j["stage_weights"] = plan.stage_weights;
    j["generator"] = {{"tier_top", plan.generator.tier_top},
                      {"tier_mid", plan.generator.tier_mid},
                      {"accept_quota", plan.generator.accept_quota},
                      {"h_mean_top", plan.generator.h_mean_top},
                      {"h_mean_mid", plan.generator.h_mean_mid},
                      {"h_mean_low", plan.generator.h_mean_low},
                      {"h_sd_ratio", plan.generator.h_sd_ratio},
                      {"quality_noise_sd", plan.generator.quality_noise_sd},
                      {"penalty_high", plan.generator.penalty_high},
                      {"penalty_moderate", plan.generator.penalty_moderate},
                      {"penalty_fair", plan.generator.penalty_fair},
                      {"min_authors", plan.generator.min_authors},
                      {"max_authors", plan.generator.max_authors},
                      {"homophily", plan.generator.homophily},
                      {"conference_mix", plan.generator.conference_mix},
                      {"junior_stage_mix", plan.generator.junior_stage_mix},
                      {"senior_stage_mix", plan.generator.senior_stage_mix}};
    return j;
}

inline ExperimentPlan plan_from_json(const nlohmann::json& j) {
    ExperimentPlan plan;
    const auto& data = j.at("data");
    plan.data.kind = data.at("kind").get<std::string>() == "files" ? DataSource::Kind::files
                                                                   : DataSource::Kind::synthetic;
    plan.data.regime = bias_level_from_string(data.at("regime").get<std::string>());
    plan.data.n_papers = data.at("n_papers").get<std::size_t>();
    plan.data.papers_path = data.at("papers_path").get<std::string>();
    plan.data.authors_path = data.at("authors_path").get<std::string>();
    plan.modes.clear();
    for (const auto& mode : j.at("modes"))
        plan.modes.push_back(fairness_mode_from_string(mode.get<std::string>()));
    plan.lambda_grid = j.at("lambda_grid").get<std::vector<double>>();
    plan.include_lambda_zero = j.at("include_lambda_zero").get<bool>();
    plan.weight_grid = j.at("weight_grid").get<std::vector<std::pair<double, double>>>();
    plan.n_seeds = j.at("n_seeds").get<std::size_t>();
    plan.base_seed = j.at("base_seed").get<std::uint64_t>();
    plan.n_accept = j.at("n_accept").get<std::size_t>();
    const auto& train = j.at("train");
    plan.train.epochs = train.at("epochs").get<std::size_t>();
    plan.train.batch_size = train.at("batch_size").get<std::size_t>();
    plan.train.learning_rate = train.at("learning_rate").get<double>();
    plan.train.patience = train.at("patience").get<std::size_t>();
    plan.train.hidden = train.at("hidden").get<std::vector<std::size_t>>();
    plan.stage_weights = j.at("stage_weights").get<StageWeights>();
    const auto& gen = j.at("generator");
    plan.generator.tier_top = gen.at("tier_top").get<double>();
    plan.generator.tier_mid = gen.at("tier_mid").get<double>();
    plan.generator.accept_quota = gen.at("accept_quota").get<double>();
    plan.generator.h_mean_top = gen.at("h_mean_top").get<double>();
    plan.generator.h_mean_mid = gen.at("h_mean_mid").get<double>();
    plan.generator.h_mean_low = gen.at("h_mean_low").get<double>();
    plan.generator.h_sd_ratio = gen.at("h_sd_ratio").get<double>();
    plan.generator.quality_noise_sd = gen.at("quality_noise_sd").get<double>();
    plan.generator.penalty_high = gen.at("penalty_high").get<double>();
    plan.generator.penalty_moderate = gen.at("penalty_moderate").get<double>();
    plan.generator.penalty_fair = gen.at("penalty_fair").get<double>();
    plan.generator.min_authors = gen.at("min_authors").get<std::size_t>();
    plan.generator.max_authors = gen.at("max_authors").get<std::size_t>();
    plan.generator.homophily = gen.at("homophily").get<double>();
    plan.generator.conference_mix = gen.at("conference_mix").get<std::array<double, 3>>();
    plan.generator.junior_stage_mix =
        gen.at("junior_stage_mix").get<std::array<double, kCareerStageCount>>();
    plan.generator.senior_stage_mix =
        gen.at("senior_stage_mix").get<std::array<double, kCareerStageCount>>();
    return plan;
}

inline nlohmann::ordered_json result_to_json(const SweepResult& result) {
    nlohmann::ordered_json j;
    j["plan"] = plan_to_json(result.plan);
    nlohmann::ordered_json runs = nlohmann::ordered_json::array();
    for (const CellRun& run : result.runs) {
        nlohmann::ordered_json r;
        r["mode"] = to_string(run.key.mode);
        r["lambda"] = run.key.lambda;
        r["w_race"] = run.key.w_race;
        r["w_country"] = run.key.w_country;
        r["seed"] = run.seed;
        if (!run.ok()) {
            r["error"] = run.error;
        } else {
            r["error"] = nullptr;
            r["metrics"] = {{"macro_gain", run.metrics.macro_gain},
                            {"micro_gain", run.metrics.micro_gain},
                            {"utility_gain", run.metrics.utility_gain},
                            {"diversity_gain", run.metrics.diversity_gain},
                            {"f_measure", run.metrics.f_measure},
                            {"distribution", run.metrics.distribution},
                            {"n_features", run.metrics.n_features}};
            r["train"] = {{"stopped_epoch", run.train_summary.stopped_epoch},
                          {"best_epoch", run.train_summary.best_epoch},
                          {"best_valid_loss", run.train_summary.best_valid_loss},
                          {"first_train_total_loss", run.train_summary.first_train_total_loss},
                          {"best_train_total_loss", run.train_summary.best_train_total_loss},
                          {"final_train_pred_loss", run.train_summary.final_train_pred_loss},
                          {"final_train_fair_loss", run.train_summary.final_train_fair_loss},
                          {"empty_group_batches", run.train_summary.empty_group_batches}};
            r["selection"] = {{"threshold", run.selection_threshold},
                              {"n_accepted", run.n_accepted},
                              {"selected_race_share", run.selected_race_share},
                              {"selected_country_share", run.selected_country_share}};
        }
        runs.push_back(std::move(r));
    }
    j["runs"] = std::move(runs);
    return j;
}

inline SweepResult result_from_json(const nlohmann::json& j) {
    SweepResult result;
    result.plan = plan_from_json(j.at("plan"));
    for (const auto& r : j.at("runs")) {
        CellRun run;
        run.key.mode = fairness_mode_from_string(r.at("mode").get<std::string>());
        run.key.lambda = r.at("lambda").get<double>();
        run.key.w_race = r.at("w_race").get<double>();
        run.key.w_country = r.at("w_country").get<double>();
        run.seed = r.at("seed").get<std::uint64_t>();
        if (!r.at("error").is_null()) {
            run.error = r.at("error").get<std::string>();
        } else {
            const auto& m = r.at("metrics");
            run.metrics.macro_gain = m.at("macro_gain").get<std::map<std::string, double>>();
            run.metrics.micro_gain = m.at("micro_gain").get<std::map<std::string, double>>();
            run.metrics.utility_gain = m.at("utility_gain").get<double>();
            run.metrics.diversity_gain = m.at("diversity_gain").get<double>();
            run.metrics.f_measure = m.at("f_measure").get<double>();
            run.metrics.distribution =
                m.at("distribution").get<std::map<std::string, double>>();
            run.metrics.n_features = m.at("n_features").get<std::size_t>();
            const auto& t = r.at("train");
            run.train_summary.stopped_epoch = t.at("stopped_epoch").get<std::size_t>();
            run.train_summary.best_epoch = t.at("best_epoch").get<std::size_t>();
            run.train_summary.best_valid_loss = t.at("best_valid_loss").get<double>();
            run.train_summary.first_train_total_loss =
                t.at("first_train_total_loss").get<double>();
            run.train_summary.best_train_total_loss =
                t.at("best_train_total_loss").get<double>();
            run.train_summary.final_train_pred_loss =
                t.at("final_train_pred_loss").get<double>();
            run.train_summary.final_train_fair_loss =
                t.at("final_train_fair_loss").get<double>();
            run.train_summary.empty_group_batches =
                t.at("empty_group_batches").get<std::size_t>();
            const auto& s = r.at("selection");
            run.selection_threshold = s.at("threshold").get<double>();
            run.n_accepted = s.at("n_accepted").get<std::size_t>();
            run.selected_race_share = s.at("selected_race_share").get<double>();
            run.selected_country_share = s.at("selected_country_share").get<double>();
        }
        result.runs.push_back(std::move(run));
    }
    return result;
}

inline SweepResult load_report(const std::filesystem::path& path) {
    std::ifstream input(path);
    if (!input) throw IoError("cannot open '" + path.string() + "'");
    nlohmann::json j;
    try {
        input >> j;
        return result_from_json(j);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
}

// ---------------------------------------------------------------------------
// SVG line charts: mean gain vs lambda with +-1 std bands, one polyline per
// metric (macro, micro, utility).
// ---------------------------------------------------------------------------

namespace detail {

struct ChartSeries {
    std::string label;
    std::string color;
    std::vector<double> mean;
    std::vector<double> stddev;
};

inline std::string render_gain_chart(const std::string& title, const std::vector<double>& lambdas,
                                     const std::vector<ChartSeries>& series) {
    const double width = 640.0, height = 420.0;
    const double left = 64.0, right = 610.0, top = 40.0, bottom = 370.0;

    double lo = 0.0, hi = 0.0;
    for (const ChartSeries& s : series)
        for (std::size_t i = 0; i < s.mean.size(); ++i) {
            lo = std::min(lo, s.mean[i] - s.stddev[i]);
            hi = std::max(hi, s.mean[i] + s.stddev[i]);
        }
    if (hi - lo < 1e-9) hi = lo + 1.0;
    const double pad = 0.06 * (hi - lo);
    lo -= pad;
    hi += pad;
    const double x_min = lambdas.front(), x_max = lambdas.back();
    const auto x_of = [&](double lambda) {
        if (x_max == x_min) return (left + right) / 2.0;
        return left + (right - left) * (lambda - x_min) / (x_max - x_min);
    };
    const auto y_of = [&](double value) {
        return bottom - (bottom - top) * (value - lo) / (hi - lo);
    };

    std::ostringstream svg;
    svg << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
        << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
        << height << "\" viewBox=\"0 0 " << width << " " << height << "\">\n"
        << "<rect x=\"0\" y=\"0\" width=\"" << width << "\" height=\"" << height
        << "\" fill=\"white\"/>\n"
        << "<text x=\"" << (left + right) / 2.0 << "\" y=\"22\" text-anchor=\"middle\" "
        << "font-family=\"sans-serif\" font-size=\"15\">" << title << "</text>\n";

    // Axes and ticks.
    svg << "<line x1=\"" << left << "\" y1=\"" << bottom << "\" x2=\"" << right << "\" y2=\""
        << bottom << "\" stroke=\"black\"/>\n"
        << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\"" << bottom
        << "\" stroke=\"black\"/>\n";
    for (double lambda : lambdas) {
        const double x = x_of(lambda);
        svg << "<line x1=\"" << fmt2(x) << "\" y1=\"" << bottom << "\" x2=\"" << fmt2(x)
            << "\" y2=\"" << bottom + 5 << "\" stroke=\"black\"/>\n"
            << "<text x=\"" << fmt2(x) << "\" y=\"" << bottom + 20
            << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">"
            << fmt4(lambda) << "</text>\n";
    }
    for (int tick = 0; tick <= 4; ++tick) {
        const double value = lo + (hi - lo) * tick / 4.0;
        const double y = y_of(value);
        svg << "<line x1=\"" << left - 5 << "\" y1=\"" << fmt2(y) << "\" x2=\"" << right
            << "\" y2=\"" << fmt2(y) << "\" stroke=\"#dddddd\"/>\n"
            << "<text x=\"" << left - 9 << "\" y=\"" << fmt2(y + 4)
            << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" << fmt4(value)
            << "</text>\n";
    }
    svg << "<text x=\"" << (left + right) / 2.0 << "\" y=\"" << bottom + 38
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">lambda</text>\n"
        << "<text x=\"16\" y=\"" << (top + bottom) / 2.0 << "\" text-anchor=\"middle\" "
        << "font-family=\"sans-serif\" font-size=\"12\" transform=\"rotate(-90 16 "
        << (top + bottom) / 2.0 << ")\">gain (%)</text>\n";

    // +-1 std bands first, the lines on top.
    for (const ChartSeries& s : series) {
        svg << "<polygon fill=\"" << s.color << "\" fill-opacity=\"0.15\" stroke=\"none\" points=\"";
        for (std::size_t i = 0; i < lambdas.size(); ++i)
            svg << fmt2(x_of(lambdas[i])) << "," << fmt2(y_of(s.mean[i] + s.stddev[i])) << " ";
        for (std::size_t i = lambdas.size(); i-- > 0;)
            svg << fmt2(x_of(lambdas[i])) << "," << fmt2(y_of(s.mean[i] - s.stddev[i])) << " ";
        svg << "\"/>\n";
    }
    double legend_y = top + 8;
    for (const ChartSeries& s : series) {
        svg << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"2\" points=\"";
        for (std::size_t i = 0; i < lambdas.size(); ++i)
            svg << fmt2(x_of(lambdas[i])) << "," << fmt2(y_of(s.mean[i])) << " ";
        svg << "\"/>\n";
        svg << "<rect x=\"" << right - 120 << "\" y=\"" << legend_y - 9
            << "\" width=\"12\" height=\"4\" fill=\"" << s.color << "\"/>\n"
            << "<text x=\"" << right - 104 << "\" y=\"" << legend_y
            << "\" font-family=\"sans-serif\" font-size=\"11\">" << s.label << "</text>\n";
        legend_y += 16;
    }
    svg << "</svg>\n";
    return svg.str();
}

}  // namespace detail

// One chart per (mode, attribute): the lambda sweep of macro/micro/utility
// for the mode's base weight cell.
inline std::map<std::string, std::string> render_charts(const SweepResult& result) {
    const auto aggregates = aggregate_runs(result.runs);
    const auto [w_race0, w_country0] =
        result.plan.weight_grid.empty() ? std::make_pair(0.32, 0.68)
                                        : result.plan.weight_grid.front();

    std::map<std::string, std::string> charts;
    for (FairnessMode mode : result.plan.modes) {
        std::vector<ProtectedAttribute> attrs = active_attributes(mode);
        for (ProtectedAttribute attr : attrs) {
            std::vector<double> lambdas;
            detail::ChartSeries macro{"macro gain", "#1f77b4", {}, {}};
            detail::ChartSeries micro{"micro gain", "#ff7f0e", {}, {}};
            detail::ChartSeries utility{"utility gain", "#2ca02c", {}, {}};
            for (const CellAggregate& agg : aggregates) {
                if (agg.key.mode != mode) continue;
                if (mode == FairnessMode::combined &&
                    (agg.key.w_race != w_race0 || agg.key.w_country != w_country0))
                    continue;
                lambdas.push_back(agg.key.lambda);
                const std::string macro_name =
                    attr == ProtectedAttribute::race ? "macro_race" : "macro_country";
                const std::string micro_name =
                    attr == ProtectedAttribute::race ? "micro_race" : "micro_country";
                macro.mean.push_back(agg.mean.at(macro_name));
                macro.stddev.push_back(agg.stddev.at(macro_name));
                micro.mean.push_back(agg.mean.at(micro_name));
                micro.stddev.push_back(agg.stddev.at(micro_name));
                utility.mean.push_back(agg.mean.at("utility_gain"));
                utility.stddev.push_back(agg.stddev.at("utility_gain"));
            }
            if (lambdas.empty()) continue;
            std::string name = std::string("gains_") + to_string(mode);
            if (mode == FairnessMode::combined) name += std::string("_") + to_string(attr);
            const std::string title =
                std::string(to_string(mode)) + " mode: " + to_string(attr) + " gains vs lambda";
            charts[name + ".svg"] = detail::render_gain_chart(title, lambdas,
                                                              {macro, micro, utility});
        }
    }
    return charts;
}

// Writes sweep.csv, aggregate.csv, the SVG charts and (optionally)
// report.json into out_dir. All writes are atomic. Returns the manifest.
inline std::vector<std::filesystem::path> emit_reports(const SweepResult& result,
                                                       const std::filesystem::path& out_dir,
                                                       bool write_json = true) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (!fs::is_directory(out_dir))
        throw IoError("cannot create output directory '" + out_dir.string() + "'");

    std::vector<fs::path> manifest;
    const auto put = [&](const std::string& name, const std::string& content) {
        const fs::path path = out_dir / name;
        atomic_write(path, content);
        manifest.push_back(path);
    };
    put("sweep.csv", sweep_csv(result));
    put("aggregate.csv", aggregate_csv(result));
    if (write_json) put("report.json", result_to_json(result).dump(2) + "\n");
    for (const auto& [name, content] : render_charts(result)) put(name, content);
    return manifest;
}

// Fixed-width aggregate table for stdout, sorted by (mode, lambda, weights).
inline std::string aggregate_table(const SweepResult& result) {
    std::ostringstream out;
    char line[512];
    std::snprintf(line, sizeof line, "%-9s %9s %7s %9s | %12s %12s %12s %12s %12s %12s %12s\n",
                  "mode", "lambda", "w_race", "w_country", "macro_race", "macro_cntry",
                  "micro_race", "micro_cntry", "utility", "diversity", "f_measure");
    out << line;
    for (const CellAggregate& agg : aggregate_runs(result.runs)) {
        std::snprintf(line, sizeof line,
                      "%-9s %9.4f %7.4f %9.4f | %12.4f %12.4f %12.4f %12.4f %12.4f %12.4f %12.4f\n",
                      to_string(agg.key.mode), agg.key.lambda, agg.key.w_race, agg.key.w_country,
                      agg.mean.at("macro_race"), agg.mean.at("macro_country"),
                      agg.mean.at("micro_race"), agg.mean.at("micro_country"),
                      agg.mean.at("utility_gain"), agg.mean.at("diversity_gain"),
                      agg.mean.at("f_measure"));
        out << line;
    }
    return out.str();
}

}  // namespace fairrank
