#include <atomic>
#include <chrono>
#include <csignal>
#include <fstream>
#include <iostream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "flockplan/condosim/condominium.hpp"
#include "flockplan/dataset/generator.hpp"
#include "flockplan/dataset/io.hpp"
#include "flockplan/dataset/partition.hpp"
#include "flockplan/planner/oracle.hpp"
#include "flockplan/planner/report.hpp"
#include "flockplan/supervisor/api.hpp"
#include "flockplan/supervisor/service.hpp"
#include "plot.hpp"

using namespace flockplan;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::atomic<bool> g_stop{false};

void on_signal(int) { g_stop = true; }

json read_json(const fs::path& p) {
    std::ifstream in(p);
    if (!in) throw ConfigDomain("cannot open " + p.string());
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ParseError(p.string() + ": " + e.what(), 0, "");
    }
}

void write_json(const json& j, const fs::path& p) {
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    std::ofstream out(p);
    if (!out) throw ConfigDomain("cannot write " + p.string());
    out << j.dump(2) << '\n';
}

void require_dir(const fs::path& p, const char* what) {
    if (p.empty() || !fs::is_directory(p)) throw ConfigDomain(std::string(what) + " directory '" + p.string() + "' does not exist");
}

// train copies its corpus next to the models so later commands can rebuild
// the search space without being told where the data came from.
fs::path corpus_for(const fs::path& models, const std::string& samples) {
    fs::path p = samples.empty() ? models / "corpus.csv" : fs::path(samples);
    if (!fs::exists(p)) throw ConfigDomain("corpus '" + p.string() + "' not found; pass --samples");
    return p;
}

void run_until_stopped(double seconds) {
    const auto until = std::chrono::steady_clock::now() + std::chrono::duration<double>(seconds);
    while (!g_stop && (seconds <= 0.0 || std::chrono::steady_clock::now() < until))
        std::this_thread::sleep_for(std::chrono::milliseconds(50));
}

std::vector<std::uint8_t> parse_houses(const std::string& list) {
    std::vector<std::uint8_t> out;
    std::stringstream ss(list);
    for (std::string item; std::getline(ss, item, ',');) {
        const int a = std::stoi(item);
        if (a < 1 || a > 247) throw OutOfRange("house address " + item + " outside 1..247");
        out.push_back(static_cast<std::uint8_t>(a));
    }
    return out;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Climate-plan optimisation and supervision for broiler houses"};
    app.require_subcommand(1);
    std::string log_level = "info";
    app.add_option("--log-level", log_level, "trace, debug, info, warn, error or off");

    // gen-data
    auto* gen = app.add_subcommand("gen-data", "Generate a synthetic flock corpus");
    std::string gen_config, gen_out;
    int gen_flocks = 12;
    std::optional<std::uint64_t> gen_seed;
    gen->add_option("--config", gen_config, "generator config JSON");
    gen->add_option("--flocks", gen_flocks)->check(CLI::PositiveNumber);
    gen->add_option("--seed", gen_seed);
    gen->add_option("--out", gen_out)->required();

    // train
    auto* train = app.add_subcommand("train", "Train the six week models");
    std::string tr_samples, tr_out, tr_hp;
    std::uint64_t tr_seed = 7;
    int tr_test = 2;
    std::optional<int> tr_epochs;
    train->add_option("--samples", tr_samples)->required();
    train->add_option("--out", tr_out)->required();
    train->add_option("--seed", tr_seed);
    train->add_option("--hp", tr_hp, "hyperparameter JSON");
    train->add_option("--test", tr_test, "flocks held out (the last ones) for R2")->check(CLI::NonNegativeNumber);
    train->add_option("--epochs", tr_epochs);

    // optimize
    auto* opt = app.add_subcommand("optimize", "Search a 40-day plan");
    std::string op_models, op_samples, op_out, op_report, op_ga;
    std::optional<std::uint64_t> op_seed;
    double op_coverage = 0.8;
    opt->add_option("--models", op_models)->required();
    opt->add_option("--samples", op_samples, "corpus (default: models/corpus.csv)");
    opt->add_option("--out", op_out)->required();
    opt->add_option("--report", op_report, "report JSON (default: next to --out)");
    opt->add_option("--ga", op_ga, "GA config JSON");
    opt->add_option("--seed", op_seed);
    opt->add_option("--coverage", op_coverage)->check(CLI::Range(0.01, 1.0));

    // rollout
    auto* roll = app.add_subcommand("rollout", "Chain the week models over a plan");
    std::string ro_models, ro_plan, ro_out;
    roll->add_option("--models", ro_models)->required();
    roll->add_option("--plan", ro_plan)->required();
    roll->add_option("--out", ro_out, "trajectory CSV (default: stdout)");

    // oracle
    auto* orc = app.add_subcommand("oracle", "Exhaustive baseline on a small instance");
    std::string or_models, or_samples, or_grid = "0.5,1";
    int or_days = 2;
    orc->add_option("--models", or_models)->required();
    orc->add_option("--samples", or_samples);
    orc->add_option("--days", or_days)->check(CLI::Range(1, 7));
    orc->add_option("--grid", or_grid, "temperature,humidity steps");

    // benchmark
    auto* bench = app.add_subcommand("benchmark", "Random feasible plans through the models");
    std::string be_models, be_samples, be_plan, be_kind = "specialist";
    int be_n = 1000;
    std::uint64_t be_seed = 5;
    bench->add_option("--models", be_models)->required();
    bench->add_option("--samples", be_samples);
    bench->add_option("--n", be_n)->check(CLI::PositiveNumber);
    bench->add_option("--seed", be_seed);
    bench->add_option("--plan", be_plan, "compare against this plan");
    bench->add_option("--kind", be_kind)->check(CLI::IsMember({"specialist", "uniform"}));

    // simulate
    auto* sim = app.add_subcommand("simulate", "Run a condominium behind a protocol endpoint");
    std::string si_condo, si_serve = "127.0.0.1:5020";
    std::optional<int> si_tick;
    double si_seconds = 0.0;
    sim->add_option("--condo", si_condo, "condominium JSON (default: three houses)");
    sim->add_option("--serve", si_serve);
    sim->add_option("--tick-ms", si_tick);
    sim->add_option("--duration", si_seconds, "seconds to run (0: until interrupted)");

    // serve
    auto* srv = app.add_subcommand("serve", "Run the supervision service and its API");
    std::string sv_api = "127.0.0.1:8080", sv_condo, sv_models, sv_samples, sv_db = "flockplan.db", sv_houses = "1,2,3";
    int sv_every = 1000;
    double sv_seconds = 0.0;
    srv->add_option("--api", sv_api);
    srv->add_option("--condo", sv_condo, "protocol endpoint host:port, or a condominium JSON to run in-process")->required();
    srv->add_option("--models", sv_models);
    srv->add_option("--samples", sv_samples);
    srv->add_option("--db", sv_db);
    srv->add_option("--houses", sv_houses, "comma-separated addresses");
    srv->add_option("--poll-ms", sv_every);
    srv->add_option("--duration", sv_seconds, "seconds to run (0: until interrupted)");

    // plot
    auto* plot = app.add_subcommand("plot", "Write SVG charts for a report");
    std::string pl_report, pl_out, pl_samples;
    plot->add_option("--report", pl_report)->required();
    plot->add_option("--out", pl_out)->required();
    plot->add_option("--samples", pl_samples, "corpus for the range charts");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << json{{"error", {{"kind", "UsageError"}, {"message", e.what()}}}}.dump() << '\n';
        return 2;
    }
    spdlog::set_level(spdlog::level::from_str(log_level));
    spdlog::set_default_logger(spdlog::stderr_color_mt("flockplan"));
    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);

    try {
        if (*gen) {
            dataset::GeneratorConfig cfg;
            if (!gen_config.empty()) cfg = read_json(gen_config).get<dataset::GeneratorConfig>();
            if (gen_seed) cfg.seed = *gen_seed;
            auto corpus = dataset::generate_corpus(cfg, gen_flocks);
            dataset::store_samples(corpus, gen_out);
            std::cout << json{{"flocks", corpus.size()}, {"out", gen_out}, {"seed", cfg.seed}}.dump() << '\n';
        } else if (*train) {
            auto corpus = dataset::load_samples(tr_samples);
            if (tr_test >= static_cast<int>(corpus.size())) throw InsufficientData("no flocks left to train on");
            surrogate::Hyperparams hp;
            if (!tr_hp.empty()) hp = read_json(tr_hp).get<surrogate::Hyperparams>();
            hp.seed = tr_seed;
            if (tr_epochs) hp.epochs = *tr_epochs;
            std::vector<FlockSample> fit(corpus.begin(), corpus.end() - tr_test);
            std::vector<FlockSample> test(corpus.end() - tr_test, corpus.end());
            auto models = surrogate::train_models(fit, corpus, hp);
            surrogate::save_models(models, tr_out);
            dataset::store_samples(corpus, fs::path(tr_out) / "corpus.csv");
            json r2 = json::array();
            if (!test.empty()) {
                auto weeks = dataset::partition_weeks(test);
                for (int w = 0; w < kWeeks; ++w) {
                    auto r = surrogate::evaluate_r2(models[static_cast<std::size_t>(w)], weeks[static_cast<std::size_t>(w)]);
                    r2.push_back({{"week", w + 1}, {"mdw", r.mdw}, {"dfcpb", r.dfcpb}, {"nlbpa", r.nlbpa}});
                }
            }
            json out{{"train_flocks", fit.size()}, {"test_flocks", test.size()}, {"hyperparams", hp}, {"r2", r2}};
            write_json(out, fs::path(tr_out) / "r2.json");
            std::cout << out.dump(2) << '\n';
        } else if (*opt) {
            require_dir(op_models, "models");
            auto models = surrogate::load_models(op_models);
            auto corpus = dataset::load_samples(corpus_for(op_models, op_samples));
            evolve::GaConfig ga;
            if (!op_ga.empty()) ga = read_json(op_ga).get<evolve::GaConfig>();
            if (op_seed) ga.seed = *op_seed;
            auto space = planner::tighten_to_reachable(models, planner::derive_search_space(corpus), op_coverage);
            auto res = planner::optimize_flock(models, space, ga, [](int week, const evolve::GenerationStats& g) {
                if (g.generation % 100 == 0) spdlog::info("week {} generation {} best {:.6f}", week, g.generation, g.best);
            });
            planner::save_plan(res.plan, res.report.fcr_est, res.report.fcr_res, op_out);
            const fs::path report_path = op_report.empty() ? fs::path(op_out).replace_extension(".report.json") : fs::path(op_report);
            json doc{{"plan", planner::plan_to_json(res.plan, res.report.fcr_est, res.report.fcr_res)},
                     {"report", planner::report_to_json(res.report)},
                     {"ga", ga},
                     {"coverage", op_coverage}};
            write_json(doc, report_path);
            std::cout << json{{"fcr_est", res.report.fcr_est},
                              {"fcr_res", res.report.fcr_res},
                              {"gap_relative", res.report.gap_relative()},
                              {"worst_boundary_relative_pct", res.report.worst_relative_pct()},
                              {"seconds", res.report.seconds},
                              {"plan", op_out},
                              {"report", report_path.string()}}
                             .dump(2)
                      << '\n';
        } else if (*roll) {
            require_dir(ro_models, "models");
            auto models = surrogate::load_models(ro_models);
            auto plan = planner::load_plan(ro_plan);
            auto r = planner::rollout_progressive(models, plan);
            if (ro_out.empty()) {
                planner::write_trajectory_csv(r.days, std::cout);
            } else {
                std::ofstream out(ro_out);
                planner::write_trajectory_csv(r.days, out);
            }
            std::cerr << json{{"fcr_res", r.fcr}, {"clamped", r.clamped}}.dump() << '\n';
        } else if (*orc) {
            require_dir(or_models, "models");
            auto models = surrogate::load_models(or_models);
            auto corpus = dataset::load_samples(corpus_for(or_models, or_samples));
            const double t_step = std::stod(or_grid.substr(0, or_grid.find(',')));
            auto space = planner::derive_search_space(corpus);
            auto base = dataset::week_vector(corpus.front(), 1);
            auto inst = planner::surrogate_instance(models[0], space.boxes[0], base, or_days);
            for (auto& a : inst.axes) a.step = t_step;
            auto exact = planner::exhaustive_oracle(inst.axes, inst.objective);
            evolve::GaConfig ga;
            ga.pop_size = 60;
            ga.max_generations = 300;
            ga.stall_generations = 60;
            auto gr = evolve::run_ga(inst.objective, inst.box(), ga);
            std::cout << json{{"instance", inst.name},
                              {"grid_points", planner::grid_cardinality(inst.axes)},
                              {"oracle", {{"point", exact.point}, {"value", exact.value}, {"evaluations", exact.evaluations}}},
                              {"ga", {{"point", gr.best}, {"value", gr.best_fitness}}},
                              {"relative_gap", (gr.best_fitness - exact.value) / std::abs(exact.value)},
                              {"full_plan_grid_points", planner::grid_cardinality(planner::full_plan_grid(space.boxes))}}
                             .dump(2)
                      << '\n';
        } else if (*bench) {
            require_dir(be_models, "models");
            auto models = surrogate::load_models(be_models);
            auto corpus = dataset::load_samples(corpus_for(be_models, be_samples));
            auto space = planner::derive_search_space(corpus);
            InitialConditions ic = corpus.front().initial;
            std::optional<double> plan_fcr;
            if (!be_plan.empty()) {
                auto plan = planner::load_plan(be_plan);
                ic = plan.i_c;
                plan_fcr = planner::rollout_progressive(models, plan).fcr;
            }
            auto kind = be_kind == "uniform" ? planner::RandomPlanKind::Uniform : planner::RandomPlanKind::Specialist;
            auto b = planner::benchmark_random_specialists(models, be_n, space.boxes, be_seed, ic, kind);
            json out{{"kind", be_kind}, {"n", be_n}, {"best", b.best}, {"mean", b.mean}, {"sd", b.sd}, {"best_index", b.best_index}};
            if (plan_fcr) {
                out["plan_fcr_res"] = *plan_fcr;
                out["plan_dominates"] = *plan_fcr <= b.best;
            }
            std::cout << out.dump(2) << '\n';
        } else if (*sim) {
            auto cfg = si_condo.empty() ? condosim::CondoConfig::default_condo(3) : read_json(si_condo).get<condosim::CondoConfig>();
            if (si_tick) cfg.tick_ms = *si_tick;
            condosim::Condominium condo(cfg);
            auto ep = condo.serve(protocol::Endpoint::parse(si_serve));
            condo.start_ticking();
            std::cout << json{{"endpoint", ep.str()}, {"houses", condo.addresses()}, {"tick_ms", cfg.tick_ms}}.dump() << std::endl;
            run_until_stopped(si_seconds);
            condo.stop();
        } else if (*srv) {
            std::unique_ptr<condosim::Condominium> condo;
            protocol::Endpoint bus;
            supervisor::ServiceConfig cfg;
            if (fs::is_regular_file(sv_condo)) {
                condo = std::make_unique<condosim::Condominium>(read_json(sv_condo).get<condosim::CondoConfig>());
                bus = condo->serve({"127.0.0.1", 0});
                condo->start_ticking();
                cfg.houses = condo->addresses();
            } else {
                bus = protocol::Endpoint::parse(sv_condo);
                cfg.houses = parse_houses(sv_houses);
            }
            cfg.db_path = sv_db;
            cfg.master.endpoint = bus;
            if (!sv_models.empty()) {
                require_dir(sv_models, "models");
                cfg.models_dir = sv_models;
                cfg.samples_path = corpus_for(sv_models, sv_samples);
            }
            supervisor::Service service(cfg);
            supervisor::ApiServer api(service, protocol::Endpoint::parse(sv_api));
            service.start_autopilot(std::chrono::milliseconds(sv_every));
            std::cout << json{{"api", "http://" + protocol::Endpoint::parse(sv_api).host + ":" + std::to_string(api.port()) + "/api/v1"},
                              {"bus", bus.str()},
                              {"houses", cfg.houses}}
                             .dump()
                      << std::endl;
            run_until_stopped(sv_seconds);
            api.stop();
            if (condo) condo->stop();
        } else if (*plot) {
            std::vector<FlockSample> corpus;
            if (!pl_samples.empty()) corpus = dataset::load_samples(pl_samples);
            auto files = tools::write_plots(read_json(pl_report), corpus, pl_out);
            json names = json::array();
            for (const auto& f : files) names.push_back(f.string());
            std::cout << json{{"files", names}}.dump(2) << '\n';
        }
    } catch (const Error& e) {
        json err{{"kind", e.kind()}, {"message", e.what()}};
        if (auto* pe = dynamic_cast<const ParseError*>(&e)) {
            err["line"] = pe->line();
            err["field"] = pe->field();
        }
        std::cerr << json{{"error", err}}.dump() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << json{{"error", {{"kind", "InternalError"}, {"message", e.what()}}}}.dump() << '\n';
        return 1;
    }
    return 0;
}
