// Runs every primary acceptance criterion once and prints one PASS/FAIL line
// per criterion. Exits non-zero when any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <thread>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "flockplan/condosim/condominium.hpp"
#include "flockplan/dataset/stats.hpp"
#include "flockplan/planner/oracle.hpp"
#include "flockplan/planner/report.hpp"
#include "flockplan/supervisor/service.hpp"

using namespace flockplan;
using nlohmann::json;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

int failures = 0;

void criterion(const std::string& name, const std::function<Outcome()>& body) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
        o = body();
    } catch (const std::exception& e) {
        o = {false, std::string("threw ") + e.what()};
    }
    const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("%s  %-28s %s (%.1fs)\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str(), s);
    std::fflush(stdout);
    if (!o.pass) ++failures;
}

// Shared by the criteria that need trained models: the default 12-flock
// corpus, the last two flocks held out.
struct Shared {
    dataset::GeneratorConfig generator;
    std::vector<FlockSample> corpus;
    std::vector<FlockSample> train;
    std::vector<FlockSample> test;
    surrogate::ModelSet models;
    double train_seconds = 0.0;

    Shared() {
        corpus = dataset::generate_corpus(generator, 12);
        train.assign(corpus.begin(), corpus.begin() + 10);
        test.assign(corpus.begin() + 10, corpus.end());
        const auto t0 = std::chrono::steady_clock::now();
        models = surrogate::train_models(train, corpus, surrogate::Hyperparams{});
        train_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }
};

void fill_formula(surrogate::LstmNetwork& net) {
    auto ts = surrogate::tensors(net);
    for (std::size_t ti = 0; ti < ts.size(); ++ti) {
        const double shift = ti + 1 == ts.size() ? 0.5 : 0.0;
        for (std::size_t e = 0; e < ts[ti].values.size(); ++e)
            ts[ti].values[e] = 0.3 * std::sin(1.7 * static_cast<double>(ti) + 0.37 * static_cast<double>(e) + 0.5) + shift;
    }
}

// Multiplies the deaths of days [first, last] and carries the losses forward.
FlockSample with_mortality_burst(FlockSample s, int first, int last, int factor) {
    std::int64_t lost = 0;
    for (auto& o : s.outcomes) {
        if (o.day >= first && o.day <= last) {
            const auto extra = o.dm * (factor - 1);
            o.dm += extra;
            lost += extra;
        }
        o.nlb -= lost;
        auto an = normalize_by_area(static_cast<double>(o.dm), static_cast<double>(o.nlb), o.dfc, s.geometry,
                                    static_cast<double>(o.nlb));
        o.dmpa = an.dmpa;
        o.nlbpa = an.nlbpa;
        o.dfcpb = an.dfcpb;
    }
    return s;
}

} // namespace

int main() {
    spdlog::set_level(spdlog::level::warn);

    criterion("fcr algebra", [] {
        std::mt19937_64 rng(1);
        std::uniform_real_distribution<double> u(1e-3, 1e3);
        double worst = 0.0, worst_basic = 0.0;
        for (int k = 0; k < 10000; ++k) {
            const double a = u(rng), b = u(rng), c = u(rng);
            const double ref = 1000.0 * a / c;
            worst = std::max(worst, std::abs(fcr_normalized(a, b, c) - ref) / ref);
            const double area = 2000.0 + u(rng), nlb = b * area;
            worst_basic = std::max(worst_basic, std::abs(fcr_basic(a * nlb, nlb, c) - ref) / ref);
        }
        const bool example = std::abs(fcr_normalized(4.3708, 14.735, 2800.0) - 1.5610) < 1e-4;
        return Outcome{worst <= 1e-12 && worst_basic <= 1e-12 && example,
                       fmt::format("max rel err normalized {:.2e}, basic {:.2e}, worked example {}", worst, worst_basic,
                                   example ? "ok" : "off")};
    });

    criterion("norm roundtrip", [] {
        std::mt19937_64 rng(2);
        std::uniform_real_distribution<double> u(-100.0, 100.0), w(0.01, 50.0), f(0.0, 1.0);
        double worst = 0.0;
        for (int k = 0; k < 10000; ++k) {
            std::vector<double> lo(10), hi(10), v(10);
            for (int i = 0; i < 10; ++i) {
                lo[i] = u(rng);
                hi[i] = lo[i] + w(rng);
                v[i] = lo[i] + f(rng) * (hi[i] - lo[i]);
            }
            auto back = minmax_denorm(minmax_norm(v, hi, lo), hi, lo);
            for (int i = 0; i < 10; ++i) worst = std::max(worst, std::abs(back[i] - v[i]));
        }
        const std::vector<double> x{24}, mx{28}, mn{23};
        const double n = minmax_norm(x, mx, mn)[0];
        const bool example = std::abs(n - 0.2) <= 1e-15;
        return Outcome{worst <= 1e-12 && example, fmt::format("max abs err {:.2e}, N([24],[28],[23]) = {:.17g}", worst, n)};
    });

    criterion("lstm gradient check", [] {
        surrogate::LstmNetwork net(10, 2, 3, 3);
        fill_formula(net);
        Matrix in, tg;
        std::vector<double> v(17);
        for (std::size_t k = 0; k < v.size(); ++k) v[k] = 0.5 + 0.4 * std::cos(0.9 * static_cast<double>(k));
        in.append_row(v);
        tg.append_row(std::vector<double>{0.2, 0.4, 0.6, 0.3, 0.5, 0.7});
        surrogate::LstmNetwork grad;
        surrogate::loss_and_gradient(net, in, tg, 2, 0.001, grad);
        auto p = surrogate::tensors(net);
        auto g = surrogate::tensors(grad);
        double worst = 0.0;
        std::size_t n = 0;
        for (std::size_t t = 0; t < p.size(); ++t)
            for (std::size_t e = 0; e < p[t].values.size(); ++e, ++n) {
                double& x = p[t].values[e];
                const double keep = x;
                x = keep + 1e-5;
                const double up = surrogate::sequence_loss(net, in, tg, 2, 0.001);
                x = keep - 1e-5;
                const double down = surrogate::sequence_loss(net, in, tg, 2, 0.001);
                x = keep;
                const double num = (up - down) / 2e-5;
                const double rel = std::abs(num - g[t].values[e]) / std::max(1e-8, std::abs(num) + std::abs(g[t].values[e]));
                worst = std::max(worst, rel);
            }
        return Outcome{worst < 1e-4, fmt::format("{} parameters, worst relative error {:.2e}", n, worst)};
    });

    std::printf("training the shared week models on 10 of 12 flocks...\n");
    std::fflush(stdout);
    Shared shared;
    std::printf("trained in %.1fs\n", shared.train_seconds);

    criterion("surrogate quality", [&] {
        auto weeks = dataset::partition_weeks(shared.test);
        double min_mdw = 1.0, min_feed = 1.0, min_nlb = 1.0;
        std::string per_week;
        for (int w = 0; w < kWeeks; ++w) {
            auto r = surrogate::evaluate_r2(shared.models[static_cast<std::size_t>(w)], weeks[static_cast<std::size_t>(w)]);
            min_mdw = std::min(min_mdw, r.mdw);
            min_feed = std::min(min_feed, r.dfcpb);
            min_nlb = std::min(min_nlb, r.nlbpa);
            per_week += fmt::format(" w{}:{:.3f}/{:.3f}/{:.3f}", w + 1, r.mdw, r.dfcpb, r.nlbpa);
        }
        return Outcome{min_mdw >= 0.95 && min_feed >= 0.95 && min_nlb >= 0.80,
                       fmt::format("min R2 mdw {:.4f} dfcpb {:.4f} nlbpa {:.4f};{}", min_mdw, min_feed, min_nlb, per_week)};
    });

    criterion("ga vs oracle", [&] {
        auto house = dataset::default_houses()[0];
        auto space = planner::derive_search_space(shared.corpus);
        std::vector<planner::TinyInstance> instances{
            planner::generator_instance(shared.generator, house, 1, false),
            planner::generator_instance(shared.generator, house, 1, true),
            planner::surrogate_instance(shared.models[0], space.boxes[0], dataset::week_vector(shared.corpus.front(), 1), 2)};
        int ok = 0, total = 0;
        double worst = -1.0;
        for (const auto& inst : instances) {
            auto exact = planner::exhaustive_oracle(inst.axes, inst.objective);
            for (std::uint64_t seed = 1; seed <= 5; ++seed) {
                evolve::GaConfig ga;
                ga.seed = seed;
                auto r = evolve::run_ga(inst.objective, inst.box(), ga);
                const double gap = (r.best_fitness - exact.value) / std::abs(exact.value);
                worst = std::max(worst, gap);
                ++total;
                ok += gap <= 0.01;
            }
        }
        return Outcome{ok == total, fmt::format("{}/{} runs within 1% of the grid optimum, worst gap {:+.4f}%", ok, total,
                                                100.0 * worst)};
    });

    std::printf("optimising a flock plan...\n");
    std::fflush(stdout);
    auto space = planner::tighten_to_reachable(shared.models, planner::derive_search_space(shared.corpus));
    auto result = planner::optimize_flock(shared.models, space, evolve::GaConfig{});
    const auto& report = result.report;

    criterion("integration stitching", [&] {
        std::string per;
        for (const auto& b : report.boundary) {
            const double w = std::max({b.relative_pct[0], b.relative_pct[1], b.relative_pct[2]});
            per += fmt::format(" w{}|{}:{:.3f}%", b.week, b.week + 1, w);
        }
        return Outcome{report.worst_relative_pct() <= 2.5,
                       fmt::format("worst boundary error {:.3f}% (limit 2.5%);{} ; optimize took {:.1f}s",
                                   report.worst_relative_pct(), per, report.seconds)};
    });

    criterion("estimate/realisation gap", [&] {
        const double gap = std::abs(report.gap_relative());
        return Outcome{gap <= 0.005, fmt::format("fcr_est {:.6f} fcr_res {:.6f} |gap| {:.4f}% (limit 0.5%)", report.fcr_est,
                                                 report.fcr_res, 100.0 * gap)};
    });

    criterion("optimizer dominance", [&] {
        auto full = planner::derive_search_space(shared.corpus);
        auto bench = planner::benchmark_random_specialists(shared.models, 1000, full.boxes, 5, result.plan.i_c);
        auto comfort = planner::rollout_progressive(shared.models, dataset::comfort_plans(shared.generator), result.plan.i_c);
        auto house = dataset::default_houses()[0];
        auto truth = dataset::ground_truth_optimum(shared.generator, house);
        const double realised = dataset::noiseless_fcr(shared.generator, result.plan.expand(), house);
        const double vs_truth_model = (report.fcr_res - truth.fcr) / truth.fcr;
        const double vs_truth_gen = (realised - truth.fcr) / truth.fcr;
        const bool pass = report.fcr_res <= bench.best && report.fcr_res <= comfort.fcr && std::abs(vs_truth_model) <= 0.03 &&
                          std::abs(vs_truth_gen) <= 0.03;
        return Outcome{pass, fmt::format("fcr_res {:.5f}; best of 1000 random {:.5f}; comfort plan {:.5f}; ground truth {:.5f} "
                                         "(plan on the generator {:.5f}, {:+.2f}%; fcr_res {:+.2f}%)",
                                         report.fcr_res, bench.best, comfort.fcr, truth.fcr, realised, 100.0 * vs_truth_gen,
                                         100.0 * vs_truth_model)};
    });

    criterion("ga operators", [] {
        std::mt19937_64 rng(9);
        std::uniform_real_distribution<double> u(-10.0, 10.0);
        bool exact = true;
        for (int k = 0; k < 1000; ++k) {
            std::vector<double> p1(8), p2(8);
            for (auto& x : p1) x = u(rng);
            for (auto& x : p2) x = u(rng);
            for (double beta : {0.0, 0.6, 1.0}) {
                auto c = evolve::crossover_heuristic(p1, p2, beta);
                for (int i = 0; i < 8; ++i) exact = exact && c[i] == p2[i] + beta * (p1[i] - p2[i]);
            }
        }
        evolve::Restrictions box(std::vector<double>(6, 0.0), std::vector<double>(6, 1.0));
        evolve::GaConfig cfg;
        cfg.mutation_probability = 0.5;
        cfg.mutation_scale = 0.5;
        std::uniform_real_distribution<double> f(0.0, 1.0);
        int violations = 0;
        for (int k = 0; k < 100000; ++k) {
            std::vector<double> g(6);
            for (auto& x : g) x = f(rng);
            evolve::mutate_adaptive(g, box, cfg, rng);
            violations += !evolve::check_restrictions(g, box);
        }
        bool monotone = true;
        auto rastrigin = [](std::span<const double> x) {
            double s = 10.0 * static_cast<double>(x.size());
            for (double v : x) s += v * v - 10.0 * std::cos(2.0 * M_PI * v);
            return s;
        };
        evolve::Restrictions rb(std::vector<double>(5, -5.12), std::vector<double>(5, 5.12));
        for (std::uint64_t seed = 1; seed <= 10; ++seed) {
            evolve::GaConfig ga;
            ga.pop_size = 50;
            ga.max_generations = 200;
            ga.seed = seed;
            auto r = evolve::run_ga(rastrigin, rb, ga);
            for (std::size_t k = 1; k < r.history.size(); ++k) monotone = monotone && r.history[k].best <= r.history[k - 1].best;
        }
        return Outcome{exact && violations == 0 && monotone,
                       fmt::format("crossover exact {}; {} violations in 1e5 mutations; elitist curve non-increasing on 10 seeds {}",
                                   exact ? "yes" : "no", violations, monotone ? "yes" : "no")};
    });

    criterion("protocol", [] {
        using namespace protocol;
        std::mt19937_64 rng(4);
        std::uniform_int_distribution<std::uint32_t> u32;
        std::uniform_int_distribution<int> tenth(-400, 600);
        bool identity = true;
        for (int k = 0; k < 1000; ++k) {
            Telemetry t{u32(rng), static_cast<std::uint16_t>(k % 41), tenth(rng) / 10.0, tenth(rng) / 10.0, tenth(rng) / 10.0,
                        (k % 1000) / 10.0, 50.0, 99.9, u32(rng), u32(rng), u32(rng), u32(rng)};
            Frame f{static_cast<std::uint8_t>(1 + k % 247), 0x01, encode(t)};
            auto back = decode_frame(encode_frame(f));
            identity = identity && back == f && decode_telemetry(back.payload) == t;
            PlanMessage p{u32(rng), DayPlan{1 + k % 40, 20.5, 25.0, 30.1, 40.0, 60.0, 80.0}};
            identity = identity && decode_plan(encode(p)) == p;
        }

        const Frame ref{5, 0x02, encode(PlanMessage{3, DayPlan{12, 26.0, 28.0, 30.0, 60.0, 65.0, 70.0}})};
        const auto bytes = encode_frame(ref);
        int caught = 0, flips = 0;
        for (std::size_t b = 0; b < bytes.size(); ++b)
            for (int bit = 0; bit < 8; ++bit, ++flips) {
                auto bad = bytes;
                bad[b] ^= static_cast<std::uint8_t>(1u << bit);
                try {
                    decode_frame(bad);
                } catch (const CrcMismatch&) {
                    ++caught;
                }
            }

        condosim::Condominium condo(condosim::CondoConfig::default_condo(3));
        auto ep = condo.serve({"127.0.0.1", 0});
        Master master({ep, std::chrono::milliseconds(300), 2});
        std::vector<std::thread> callers;
        for (int c = 0; c < 4; ++c)
            callers.emplace_back([&, c] {
                for (int j = 0; j < 25; ++j) master.try_transact(make_request(static_cast<std::uint8_t>(1 + (c + j) % 3), Function::ReadTelemetry));
            });
        for (auto& t : callers) t.join();
        const bool ordered = single_outstanding(master.events());

        auto plan = quantize(dataset::comfort_plans(condo.config().generator)[4]);
        auto req = make_request(2, Function::WriteDayPlan, encode(PlanMessage{condo.house(2).flock_id(), plan}));
        auto r1 = master.transact(req);
        auto r2 = master.transact(req);
        auto stored = condo.house(2).plan_for(5);
        const bool idempotent = r1 == r2 && stored && *stored == plan;
        condo.stop();

        return Outcome{identity && caught == flips && ordered && idempotent,
                       fmt::format("round-trip {}; {}/{} bit flips caught; single outstanding {}; idempotent write {}",
                                   identity ? "ok" : "broken", caught, flips, ordered ? "yes" : "no", idempotent ? "yes" : "no")};
    });

    criterion("end to end", [&] {
        condosim::Condominium condo(condosim::CondoConfig::default_condo(3));
        supervisor::ServiceConfig cfg;
        cfg.master.endpoint = condo.serve({"127.0.0.1", 0});
        cfg.houses = condo.addresses();
        supervisor::Service service(cfg, shared.models, shared.corpus);
        service.poll();
        const auto job = service.start_optimize();
        auto done = service.wait_job(job);
        if (done["status"] != "done") return Outcome{false, "optimize job " + done.dump()};
        const double fcr_res = done["result"]["plan"]["fcr_res"];
        auto acks = service.approve(job);
        int sent = static_cast<int>(acks.entries.size()), failed = acks.failures();
        for (int day = 1; day <= kFlockDays; ++day) {
            condo.advance_day();
            if (auto r = service.tick()) {
                sent += static_cast<int>(r->entries.size());
                failed += r->failures();
            }
        }
        std::string per;
        bool pass = failed == 0 && sent == 3 * kFlockDays;
        int complete = 0;
        for (const auto& f : service.store().flocks()) {
            auto rep = service.flock_report(f.id);
            if (!rep.contains("fcr_measured")) {
                pass = false;
                continue;
            }
            ++complete;
            const double measured = rep["fcr_measured"];
            const double rel = (measured - fcr_res) / fcr_res;
            pass = pass && std::abs(rel) <= 0.05 && rep["applied_plans"].size() == 40;
            per += fmt::format(" house {} {:.4f} ({:+.2f}%)", f.house, measured, 100.0 * rel);
        }
        pass = pass && complete == 3;
        condo.stop();
        return Outcome{pass, fmt::format("{} day plans acked, {} failed; fcr_res {:.4f}; measured{}", sent - failed, failed,
                                         fcr_res, per)};
    });

    criterion("adaptive cycle", [&] {
        const auto houses = dataset::default_houses();
        auto fresh = shared.generator;
        fresh.seed = 99;
        auto same = dataset::generate_corpus(fresh, 3, houses, 13);
        auto shifted_cfg = fresh;
        shifted_cfg.comfort_shift_c = 2.0;
        auto shifted = dataset::generate_corpus(shifted_cfg, 3, houses, 13);
        auto sick = with_mortality_burst(same[0], 12, 20, 20);
        sick.flock_id = 20;

        auto two = supervisor::adaptive_cycle({same[0], same[1]}, shared.corpus, shared.models);
        auto three = supervisor::adaptive_cycle(same, shared.corpus, shared.models);
        auto drift = supervisor::adaptive_cycle(shifted, shared.corpus, shared.models);
        auto burst = supervisor::adaptive_cycle({shifted[0], shifted[1], sick}, shared.corpus, shared.models);

        const bool keep = !two.retrain() && !three.retrain();
        const bool retrain = drift.retrain();
        const bool rejected = burst.rejected == std::vector<int>{20} && burst.accepted.size() == 2 && !burst.retrain() &&
                              !burst.evaluated;
        return Outcome{keep && retrain && rejected,
                       fmt::format("2 new: {} ({}); 3 same-generator: {} (max MARE {:.2f}%); +2C shift: {} (MARE mdw {:.2f}%); "
                                   "x20 burst rejected {}, {} accepted of {} required",
                                   two.retrain() ? "retrain" : "keep", two.reason, three.retrain() ? "retrain" : "keep",
                                   100.0 * std::max({three.mare[0], three.mare[1], three.mare[2]}),
                                   drift.retrain() ? "retrain" : "keep", 100.0 * drift.mare[0],
                                   burst.rejected.size() == 1 ? "yes" : "no", burst.accepted.size(), burst.required)};
    });

    std::printf("%d criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
