// fairrank: fairness-aware paper selection engine.
//
// Subcommands:
//   generate  write a synthetic corpus (papers.csv / authors.csv)
//   run       one train -> select -> score pass against the baseline
//   sweep     full lambda/mode/weight grid across seeds, with file reports
//   report    re-render sweep.csv / aggregate.csv / charts from report.json
//
// Exit codes: 0 success, 1 runtime or data failure, 2 usage or config error.

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>

#include "fairrank/csv.hpp"
#include "fairrank/dataset.hpp"
#include "fairrank/experiments.hpp"
#include "fairrank/report.hpp"
#include "fairrank/synthetic.hpp"

namespace fs = std::filesystem;
using namespace fairrank;

namespace {

std::string format4(double value) { return detail::fmt4(value); }

void write_corpus_csv(const Corpus& corpus, const fs::path& out_dir) {
    std::string papers = csv_row(kPapersHeader);
    for (const PaperRecord& p : corpus.papers) {
        std::string ids;
        for (std::size_t i = 0; i < p.author_ids.size(); ++i)
            ids += (i ? ";" : "") + p.author_ids[i];
        papers += csv_row({p.paper_id, p.title, std::to_string(p.conference),
                           std::to_string(p.accepted), ids,
                           p.tier ? to_string(*p.tier) : ""});
    }
    std::string authors = csv_row(kAuthorsHeader);
    for (const AuthorRecord& a : corpus.authors)
        authors += csv_row({a.author_id, std::to_string(a.gender), to_string(a.race),
                            to_string(a.country_class), to_string(a.career_stage),
                            format4(a.h_index)});
    atomic_write(out_dir / "papers.csv", papers);
    atomic_write(out_dir / "authors.csv", authors);
}

// Options shared by run and sweep.
struct DataOptions {
    std::string regime = "high";
    std::size_t n_papers = 530;
    std::string papers_path;
    std::string authors_path;

    DataSource resolve() const {
        DataSource source;
        if (papers_path.empty() != authors_path.empty())
            throw ConfigError("--papers and --authors must be given together");
        if (!papers_path.empty()) {
            source.kind = DataSource::Kind::files;
            source.papers_path = papers_path;
            source.authors_path = authors_path;
        } else {
            source.kind = DataSource::Kind::synthetic;
            source.regime = bias_level_from_string(regime);
            source.n_papers = n_papers;
        }
        return source;
    }
};

struct TrainOptions {
    std::size_t epochs = 50;
    std::size_t batch_size = 384;
    double learning_rate = 0.001;
    std::size_t patience = 10;
    std::vector<std::size_t> hidden = {64, 32};

    void apply(TrainConfig& config) const {
        config.epochs = epochs;
        config.batch_size = batch_size;
        config.learning_rate = learning_rate;
        config.patience = patience;
        config.hidden = hidden;
    }
};

void add_data_options(CLI::App* cmd, DataOptions& opts) {
    cmd->add_option("--regime", opts.regime, "Synthetic bias regime")
        ->check(CLI::IsMember({"fair", "moderate", "high"}))
        ->capture_default_str();
    cmd->add_option("--n", opts.n_papers, "Synthetic corpus size (papers)")
        ->capture_default_str();
    cmd->add_option("--papers", opts.papers_path, "papers.csv path (real-format data)")
        ->capture_default_str();
    cmd->add_option("--authors", opts.authors_path, "authors.csv path (real-format data)")
        ->capture_default_str();
}

void add_train_options(CLI::App* cmd, TrainOptions& opts) {
    cmd->add_option("--epochs", opts.epochs, "Training epochs")->capture_default_str();
    cmd->add_option("--batch-size", opts.batch_size, "Mini-batch size (>= 2)")
        ->capture_default_str();
    cmd->add_option("--learning-rate", opts.learning_rate, "Adam learning rate")
        ->capture_default_str();
    cmd->add_option("--patience", opts.patience, "Early-stopping patience (epochs)")
        ->capture_default_str();
    cmd->add_option("--hidden", opts.hidden, "Hidden layer widths")
        ->delimiter(',')
        ->capture_default_str();
}

std::vector<std::pair<double, double>> parse_weight_grid(const std::vector<std::string>& items) {
    std::vector<std::pair<double, double>> grid;
    for (const std::string& item : items) {
        const auto colon = item.find(':');
        if (colon == std::string::npos)
            throw ConfigError("--weights expects w_race:w_country pairs, got '" + item + "'");
        try {
            grid.emplace_back(std::stod(item.substr(0, colon)), std::stod(item.substr(colon + 1)));
        } catch (const std::exception&) {
            throw ConfigError("--weights expects numeric w_race:w_country pairs, got '" + item +
                              "'");
        }
    }
    return grid;
}

void check_lambda(double lambda) {
    if (lambda < 0.0)
        throw ConfigError("--lambda must satisfy lambda >= 0, got " + format4(lambda));
}

// Flat TOML-style config: `key = value` lines, `#` comments, optional quotes
// around values. Keys mirror the long option names one-to-one.
std::vector<std::pair<std::string, std::string>> parse_config_file(const std::string& path) {
    std::ifstream input(path);
    if (!input) throw ConfigError("cannot open config file '" + path + "'");
    std::vector<std::pair<std::string, std::string>> entries;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(input, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const auto trim = [](std::string s) {
            const auto begin = s.find_first_not_of(" \t\r");
            if (begin == std::string::npos) return std::string();
            const auto end = s.find_last_not_of(" \t\r");
            return s.substr(begin, end - begin + 1);
        };
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[')
            throw ConfigError(path + " line " + std::to_string(line_no) +
                              ": sections are not supported; use flat keys");
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError(path + " line " + std::to_string(line_no) + ": expected key = value");
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (key.empty())
            throw ConfigError(path + " line " + std::to_string(line_no) + ": empty key");
        if (value.size() >= 2 && ((value.front() == '"' && value.back() == '"') ||
                                  (value.front() == '\'' && value.back() == '\'')))
            value = value.substr(1, value.size() - 2);
        entries.emplace_back(std::move(key), std::move(value));
    }
    return entries;
}

// Splices config-file and FAIRRANK_SEED values into the token stream right
// after the subcommand, so the precedence is: flags > FAIRRANK_SEED (seed
// only) > config file > defaults. Keys already given as flags are skipped,
// and unknown config keys surface as ordinary unexpected-argument errors.
std::vector<std::string> preprocess_args(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    if (args.empty()) return args;
    const std::string& sub = args.front();
    const bool has_config = sub == "run" || sub == "sweep";
    const bool has_seed = has_config || sub == "generate";
    if (!has_seed) return args;

    std::set<std::string> user_keys;
    std::string config_path;
    for (std::size_t i = 1; i < args.size(); ++i) {
        if (args[i].rfind("--", 0) != 0) continue;
        const std::string name = args[i].substr(0, args[i].find('='));
        user_keys.insert(name);
        if (name == "--config") {
            if (args[i].find('=') != std::string::npos)
                config_path = args[i].substr(args[i].find('=') + 1);
            else if (i + 1 < args.size())
                config_path = args[i + 1];
        }
    }

    const char* env_seed = std::getenv("FAIRRANK_SEED");
    const bool seed_from_env = env_seed != nullptr && *env_seed != '\0' &&
                               !user_keys.contains("--seed");

    std::vector<std::string> out = {sub};
    if (has_config && !config_path.empty()) {
        for (const auto& [key, value] : parse_config_file(config_path)) {
            if (key == "config") continue;
            if (user_keys.contains("--" + key)) continue;       // flags win
            if (key == "seed" && seed_from_env) continue;       // env beats the file
            out.push_back("--" + key + "=" + value);
        }
    }
    if (seed_from_env) out.push_back(std::string("--seed=") + env_seed);
    out.insert(out.end(), args.begin() + 1, args.end());
    return out;
}

void print_run_report(const SweepResult& result) {
    std::cout << aggregate_table(result);
    for (const CellRun& run : result.runs) {
        if (!run.ok()) {
            std::cout << "seed " << run.seed << ": FAILED: " << run.error << "\n";
            continue;
        }
        std::cout << "seed " << run.seed << ": stopped epoch " << run.train_summary.stopped_epoch
                  << ", best epoch " << run.train_summary.best_epoch << ", best valid loss "
                  << format4(run.train_summary.best_valid_loss) << "\n";
        std::cout << "  selected protected shares: race " << format4(run.selected_race_share)
                  << " %, country " << format4(run.selected_country_share) << " %\n";
        std::cout << "  distribution:";
        for (const auto& [category, share] : run.metrics.distribution)
            std::cout << " " << category << " " << format4(share) << " %";
        std::cout << "\n";
    }
}

int dispatch(CLI::App& app, std::vector<std::string> tokens);

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"fairrank: fairness-aware paper selection engine"};
    app.require_subcommand(1);
    try {
        return dispatch(app, preprocess_args(argc, argv));
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

namespace {

int dispatch(CLI::App& app, std::vector<std::string> tokens) {
    // --- generate ---------------------------------------------------------
    auto* generate = app.add_subcommand("generate", "Write a synthetic corpus as CSV files");
    std::string gen_regime = "high";
    std::size_t gen_n = 530;
    std::uint64_t gen_seed = 1;
    std::string gen_out = "data";
    generate->add_option("--regime", gen_regime, "Bias regime")
        ->check(CLI::IsMember({"fair", "moderate", "high"}))
        ->capture_default_str();
    generate->add_option("--n", gen_n, "Number of papers (>= 50)")->capture_default_str();
    generate->add_option("--seed", gen_seed, "Generator seed (env: FAIRRANK_SEED)")
        ->capture_default_str();
    generate->add_option("--out", gen_out, "Output directory")->capture_default_str();

    // --- run ---------------------------------------------------------------
    auto* run = app.add_subcommand("run", "One train -> select -> score pass");
    std::string run_config;
    run->add_option("--config", run_config,
                    "Flat TOML-style config file; keys mirror the long option names");
    DataOptions run_data;
    TrainOptions run_train;
    std::string run_mode = "race";
    double run_lambda = 1.0;
    double run_w_race = 0.32, run_w_country = 0.68;
    std::uint64_t run_seed = 1;
    std::size_t run_n_accept = 0;
    std::size_t run_threads = 0;
    std::string run_out = "out";
    add_data_options(run, run_data);
    add_train_options(run, run_train);
    run->add_option("--mode", run_mode, "Fairness mode")
        ->check(CLI::IsMember({"race", "country", "combined"}))
        ->capture_default_str();
    run->add_option("--lambda", run_lambda, "Fairness regularization strength (>= 0)")
        ->capture_default_str();
    run->add_option("--w-race", run_w_race, "Combined-mode race weight")->capture_default_str();
    run->add_option("--w-country", run_w_country, "Combined-mode country weight")
        ->capture_default_str();
    run->add_option("--seed", run_seed, "Run seed (env: FAIRRANK_SEED)")->capture_default_str();
    run->add_option("--n-accept", run_n_accept,
                    "Selection quota (0 = source default: 280 synthetic / 351 files)")
        ->capture_default_str();
    run->add_option("--threads", run_threads, "Worker threads (0 = machine parallelism)")
        ->capture_default_str();
    run->add_option("--out", run_out, "Output directory for report.json")->capture_default_str();

    // --- sweep --------------------------------------------------------------
    auto* sweep = app.add_subcommand("sweep", "Full lambda/mode/weight grid across seeds");
    std::string sweep_config;
    sweep->add_option("--config", sweep_config,
                      "Flat TOML-style config file; keys mirror the long option names");
    DataOptions sweep_data;
    TrainOptions sweep_train;
    std::vector<std::string> sweep_modes = {"race", "country", "combined"};
    std::vector<double> sweep_lambdas = {1.0, 2.0, 2.5, 3.0, 5.0, 10.0};
    std::vector<std::string> sweep_weights = {"0.32:0.68", "0.32:1.36", "0.64:0.68"};
    std::size_t sweep_seeds = 5;
    std::uint64_t sweep_base_seed = 1;
    std::size_t sweep_n_accept = 0;
    std::size_t sweep_threads = 0;
    std::string sweep_out = "out";
    add_data_options(sweep, sweep_data);
    add_train_options(sweep, sweep_train);
    sweep->add_option("--modes", sweep_modes, "Fairness modes to sweep")
        ->delimiter(',')
        ->check(CLI::IsMember({"race", "country", "combined"}))
        ->capture_default_str();
    sweep->add_option("--lambdas", sweep_lambdas,
                      "Lambda grid (lambda = 0 is always added as the baseline column)")
        ->delimiter(',')
        ->capture_default_str();
    sweep->add_option("--weights", sweep_weights, "Combined-mode w_race:w_country pairs")
        ->delimiter(',')
        ->capture_default_str();
    sweep->add_option("--seeds", sweep_seeds, "Number of seeds")->capture_default_str();
    sweep->add_option("--seed", sweep_base_seed, "Base seed, seed i = base + i (env: FAIRRANK_SEED)")
        ->capture_default_str();
    sweep->add_option("--n-accept", sweep_n_accept,
                      "Selection quota (0 = source default: 280 synthetic / 351 files)")
        ->capture_default_str();
    sweep->add_option("--threads", sweep_threads, "Worker threads (0 = machine parallelism)")
        ->capture_default_str();
    sweep->add_option("--out", sweep_out, "Output directory")->capture_default_str();

    // --- report --------------------------------------------------------------
    auto* report = app.add_subcommand("report", "Re-render CSV/SVG outputs from report.json");
    std::string report_input = "out/report.json";
    std::string report_out;
    report->add_option("--input", report_input, "Path to report.json")->capture_default_str();
    report->add_option("--out", report_out, "Output directory (default: alongside the input)")
        ->capture_default_str();

    std::reverse(tokens.begin(), tokens.end());  // CLI11's vector overload wants reversed args
    app.parse(tokens);

    if (generate->parsed()) {
        if (gen_n < 50)
            throw ConfigError("--n must be >= 50 for a meaningful corpus, got " +
                              std::to_string(gen_n));
        Rng rng(gen_seed);
        const Corpus corpus =
            generate_synthetic(BiasRegime::preset(bias_level_from_string(gen_regime)), gen_n, rng);
        const fs::path out_dir(gen_out);
        std::error_code ec;
        fs::create_directories(out_dir, ec);
        write_corpus_csv(corpus, out_dir);
        const RealizedShares shares = protected_shares(corpus);
        std::cout << "wrote " << (out_dir / "papers.csv").string() << " and "
                  << (out_dir / "authors.csv").string() << "\n";
        std::cout << "realized protected paper shares (%): gender " << format4(shares.gender)
                  << ", race " << format4(shares.race) << ", country " << format4(shares.country)
                  << "\n";
        return 0;
    }

    if (run->parsed()) {
        check_lambda(run_lambda);
        ExperimentPlan plan;
        plan.data = run_data.resolve();
        plan.modes = {fairness_mode_from_string(run_mode)};
        plan.lambda_grid = {run_lambda};
        plan.include_lambda_zero = false;
        plan.weight_grid = {{run_w_race, run_w_country}};
        plan.n_seeds = 1;
        plan.base_seed = run_seed;
        plan.n_accept = run_n_accept;
        run_train.apply(plan.train);
        plan.threads = run_threads;
        plan.validate();

        const SweepResult result = run_plan(plan);
        print_run_report(result);
        const fs::path out_dir(run_out);
        atomic_write(out_dir / "report.json", result_to_json(result).dump(2) + "\n");
        std::cout << "wrote " << (out_dir / "report.json").string() << "\n";
        for (const CellRun& cell_run : result.runs)
            if (!cell_run.ok()) return 1;
        return 0;
    }

    if (sweep->parsed()) {
        for (double lambda : sweep_lambdas) check_lambda(lambda);
        ExperimentPlan plan;
        plan.data = sweep_data.resolve();
        plan.modes.clear();
        for (const std::string& mode : sweep_modes)
            plan.modes.push_back(fairness_mode_from_string(mode));
        plan.lambda_grid = sweep_lambdas;
        plan.weight_grid = parse_weight_grid(sweep_weights);
        plan.n_seeds = sweep_seeds;
        plan.base_seed = sweep_base_seed;
        plan.n_accept = sweep_n_accept;
        sweep_train.apply(plan.train);
        plan.threads = sweep_threads;
        plan.validate();

        const SweepResult result = run_plan(plan);
        std::cout << aggregate_table(result);
        const auto manifest = emit_reports(result, sweep_out);
        for (const auto& path : manifest) std::cout << "wrote " << path.string() << "\n";
        std::size_t failures = 0;
        for (const CellRun& cell_run : result.runs) failures += cell_run.ok() ? 0 : 1;
        if (failures > 0) {
            std::cerr << failures << " of " << result.runs.size()
                      << " runs failed; see report.json for details\n";
            return 1;
        }
        return 0;
    }

    // report
    const fs::path input(report_input);
    const SweepResult loaded = load_report(input);
    const fs::path out_dir = report_out.empty()
                                 ? (input.has_parent_path() ? input.parent_path() : fs::path("."))
                                 : fs::path(report_out);
    const auto manifest = emit_reports(loaded, out_dir, /*write_json=*/false);
    for (const auto& path : manifest) std::cout << "wrote " << path.string() << "\n";
    return 0;
}

}  // namespace
