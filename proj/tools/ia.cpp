// ia: interference-alignment toolkit for the constant K-user MIMO channel.
//
// Subcommands: gen-channels, feasibility, solve, verify, count, witness,
// enumerate, dof, region-map. File formats are the JSON schemas of
// ia/json_io.hpp. Exit codes: 0 success, 1 usage, 2 negative outcome
// (verification failed / no convergence), 3 domain error.

#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "ia/ia.hpp"

namespace {

using namespace ia;

struct SpecOptions {
    std::string spec_file;
    int K = 0, M = 0, N = 0, d = 0;

    void attach(CLI::App* cmd, bool with_file = true) {
        if (with_file) cmd->add_option("--spec", spec_file, "problem spec JSON file");
        cmd->add_option("--K", K, "number of users (symmetric spec)");
        cmd->add_option("--M", M, "transmit antennas per user");
        cmd->add_option("--N", N, "receive antennas per user");
        cmd->add_option("--d", d, "streams per user");
    }

    ProblemSpec resolve() const {
        if (!spec_file.empty()) return spec_from_json(load_json(spec_file));
        if (K >= 2 && M >= 1 && N >= 1 && d >= 1) return ProblemSpec::make_symmetric(K, M, N, d);
        throw std::invalid_argument("provide either --spec FILE or all of --K --M --N --d");
    }
};

int common_d(const ProblemSpec& spec) {
    for (int i = 2; i <= spec.K; ++i)
        if (spec.d(i) != spec.d(1))
            throw AsymmetricSpec("this operation needs equal d_i across users");
    return spec.d(1);
}

// ---------------------------------------------------------------------------

int run_gen_channels(const SpecOptions& so, std::uint64_t seed, const std::string& out,
                     bool no_direct, bool as_json) {
    const ProblemSpec spec = so.resolve();
    ChannelSet ch = generate_channels(spec, seed);
    if (no_direct) ch.direct.clear();
    save_json(out, channels_to_json(ch));
    if (as_json)
        std::cout << Json{{"out", out}, {"K", spec.K}, {"seed", seed}}.dump(2) << "\n";
    else
        std::cout << "wrote " << out << " (K=" << spec.K << ", seed=" << seed << ")\n";
    return 0;
}

int run_feasibility(const SpecOptions& so, bool all_path_bounds, int max_r) {
    const ProblemSpec spec = so.resolve();
    Json out;
    out["spec"] = spec_to_json(spec);

    const FeasibilityVerdict counting = check_counting(spec);
    out["counting"] = verdict_to_json(counting);

    FeasibilityVerdict overall;
    overall.status = counting.status;
    overall.dimension = counting.dimension;
    overall.certificates = counting.certificates;

    auto adopt_infeasible = [&](const FeasibilityVerdict& v) {
        if (v.infeasible() && !overall.infeasible()) {
            overall.status = FeasStatus::Infeasible;
            overall.dimension.reset();
            overall.certificates.insert(overall.certificates.end(), v.certificates.begin(),
                                        v.certificates.end());
        }
    };
    auto adopt_feasible = [&](const FeasibilityVerdict& v) {
        if (v.feasible() && overall.status == FeasStatus::NecessaryConditionsPassOnly)
            overall.status = FeasStatus::Feasible;
    };

    Json triples = Json::array();
    for (int i = 1; i <= spec.K; ++i)
        for (int j = 1; j <= spec.K; ++j)
            for (int k = 1; k <= spec.K; ++k) {
                if (i == j || j == k || i == k) continue;
                if (!check_triple(spec, i, j, k)) {
                    triples.push_back({{"i", i}, {"j", j}, {"k", k}});
                    FeasibilityVerdict v;
                    v.status = FeasStatus::Infeasible;
                    v.certificates.push_back({"triple-bound", {i, j, k}, 0});
                    adopt_infeasible(v);
                }
            }
    out["triple_violations"] = triples;

    if (const auto divisible = decide_divisible(spec)) {
        out["divisible"] = verdict_to_json(*divisible);
        adopt_infeasible(*divisible);
        adopt_feasible(*divisible);
    } else {
        out["divisible"] = nullptr;
    }

    if (spec.K == 3 && spec.symmetric()) {
        const auto v = decide_3user_symmetric(spec.M(1), spec.N(1), spec.d(1));
        out["three_user_symmetric"] = verdict_to_json(v);
        adopt_infeasible(v);
        adopt_feasible(v);
    }
    if (spec.K >= 3 && spec.symmetric() && spec.M(1) == spec.N(1)) {
        const auto v = decide_fully_symmetric(spec.K, spec.N(1), spec.d(1));
        out["fully_symmetric"] = verdict_to_json(v);
        adopt_infeasible(v);
        adopt_feasible(v);
    }

    if (all_path_bounds) {
        const auto violations = path_bound_violations(spec, max_r + 2);
        Json arr = Json::array();
        for (const auto& v : violations) {
            arr.push_back({{"seq", v.seq}, {"lhs", v.lhs}, {"rhs", v.rhs}});
            FeasibilityVerdict fv;
            fv.status = FeasStatus::Infeasible;
            fv.certificates.push_back({"path-bound", v.seq, v.rhs - v.lhs});
            adopt_infeasible(fv);
        }
        out["path_bound_violations"] = arr;
    }

    out["overall"] = verdict_to_json(overall);
    std::cout << out.dump(2) << "\n";
    return 0;
}

int run_solve(const std::string& channels_file, const std::string& method,
              const std::string& selection_csv, bool enumerate_all, int limit, int restarts,
              std::uint64_t seed, int max_iters, double tol, const std::string& out_file) {
    const ChannelSet ch = channels_from_json(load_json(channels_file));
    const int d = common_d(ch.spec);
    Json out;
    out["method"] = method;
    int rc = 0;

    auto report_one = [&](const Strategy& s) {
        const auto rep = check_orthogonality(ch, s, tol);
        if (!rep.passed) rc = 2;
        return report_to_json(rep);
    };

    if (method == "eigen") {
        if (enumerate_all) {
            const auto sols = enumerate_square_solutions(ch, d, limit);
            Json arr = Json::array(), reps = Json::array();
            for (const auto& s : sols) {
                arr.push_back(strategy_to_json(s));
                reps.push_back(report_one(s));
            }
            out["count"] = sols.size();
            out["strategies"] = arr;
            out["verification"] = reps;
        } else {
            std::vector<int> selection;
            if (selection_csv.empty()) {
                for (int k = 0; k < d; ++k) selection.push_back(k);
            } else {
                std::stringstream ss(selection_csv);
                std::string tok;
                while (std::getline(ss, tok, ',')) selection.push_back(std::stoi(tok));
            }
            const Strategy s = solve_square(ch, d, selection);
            out["strategy"] = strategy_to_json(s);
            out["verification"] = report_one(s);
        }
    } else if (method == "paths") {
        const int M = ch.spec.M(1), N = ch.spec.N(1);
        const Strategy s =
            (M < N) ? solve_paths(ch, d) : dual_strategy(solve_paths(dual_channels(ch), d));
        out["strategy"] = strategy_to_json(s);
        out["verification"] = report_one(s);
    } else if (method == "newton") {
        NewtonOptions opt;
        opt.seed = seed;
        opt.restarts = restarts;
        opt.max_iters = max_iters;
        const NewtonResult res = solve_newton(ch, opt);
        out["newton"] = Json{{"success", res.success},
                             {"restarts_used", res.restarts_used},
                             {"iterations", res.iterations},
                             {"residual_inf", res.residual_inf}};
        if (res.success) {
            out["strategy"] = strategy_to_json(res.strategy);
            out["verification"] = report_one(res.strategy);
        } else {
            std::cerr << "NoConvergence: no start reached the residual tolerance after "
                      << restarts << " restarts\n";
            rc = 2;
        }
    } else {
        throw std::invalid_argument("unknown method: " + method);
    }

    if (!out_file.empty() && rc == 0) {
        if (out.contains("strategy"))
            save_json(out_file, out["strategy"]);
        else if (out.contains("strategies"))
            save_json(out_file, Json{{"strategies", out["strategies"]}});
    }
    std::cout << out.dump(2) << "\n";
    return rc;
}

int run_verify(const std::string& channels_file, const std::string& strategy_file, double tol) {
    const ChannelSet ch = channels_from_json(load_json(channels_file));
    const Strategy s = strategy_from_json(load_json(strategy_file));
    const auto rep = check_orthogonality(ch, s, tol);
    std::cout << report_to_json(rep).dump(2) << "\n";
    return rep.passed ? 0 : 2;
}

int run_count(int K, int d, int N, long long budget, bool as_json) {
    const BigInt c = count_solutions(K, d, N, budget);
    if (as_json)
        std::cout << Json{{"K", K}, {"d", d}, {"N", N}, {"count", c.str()}}.dump(2) << "\n";
    else
        std::cout << c.str() << "\n";
    return 0;
}

int run_witness(int K, int d, int N) {
    const Witness w = existence_witness(K, d, N);
    std::cout << witness_to_json(w).dump(2) << "\n";
    return w.verified ? 0 : 2;
}

int run_enumerate(const std::string& channels_file, int attempts, std::uint64_t seed,
                  const std::string& out_file) {
    const ChannelSet ch = channels_from_json(load_json(channels_file));
    const DistinctSolutions sols = find_distinct_solutions(ch, attempts, seed);
    Json arr = Json::array();
    for (const auto& s : sols.strategies) arr.push_back(strategy_to_json(s));
    const Json summary{{"attempts", attempts},
                       {"converged", sols.attempts_converged},
                       {"distinct", sols.strategies.size()}};
    if (!out_file.empty()) {
        Json file = summary;
        file["strategies"] = arr;
        save_json(out_file, file);
        std::cout << summary.dump(2) << "\n";
    } else {
        Json out = summary;
        out["strategies"] = arr;
        std::cout << out.dump(2) << "\n";
    }
    return 0;
}

int run_dof(int K, int N, bool as_json) {
    const MaxDof all = max_dof_fully_symmetric(K, N);
    const SubsetDof best = best_subset_dof(K, N);
    if (as_json) {
        std::cout
            << Json{{"K", K},
                    {"N", N},
                    {"all_users",
                     Json{{"d", all.d},
                          {"total", all.total},
                          {"normalized",
                           std::to_string(all.num) + "/" + std::to_string(all.den)}}},
                    {"best_subset", Json{{"k", best.k}, {"d", best.d}, {"total", best.total}}}}
                   .dump(2)
            << "\n";
    } else {
        std::cout << "all " << K << " users: d=" << all.d << ", total dof " << all.total
                  << ", normalized " << all.num << "/" << all.den << "\n";
        std::cout << "best subset: k=" << best.k << " users, d=" << best.d << ", total dof "
                  << best.total << "\n";
    }
    return 0;
}

int run_region_map(int d, int max_M, int max_N, bool as_json) {
    auto label = [&](int M, int N) -> int {  // max alignment path length, capped at 9
        if (M == N) return 9;
        const int lo = std::min(M, N), hi = std::max(M, N);
        return std::min(path_parameter(lo, hi) + 1, 9);
    };
    if (as_json) {
        Json cells = Json::array();
        for (int M = 1; M <= max_M; ++M)
            for (int N = 1; N <= max_N; ++N)
                cells.push_back({{"M", M},
                                 {"N", N},
                                 {"feasible", decide_3user_symmetric(M, N, d).feasible()},
                                 {"path_length", label(M, N)}});
        std::cout << Json{{"d", d}, {"cells", cells}}.dump(2) << "\n";
    } else {
        std::cout << "d=" << d << "; rows N=" << max_N << "..1, cols M=1.." << max_M
                  << "; '.' infeasible, digit = max alignment path length (9 = cap)\n";
        for (int N = max_N; N >= 1; --N) {
            for (int M = 1; M <= max_M; ++M)
                std::cout << (decide_3user_symmetric(M, N, d).feasible()
                                  ? static_cast<char>('0' + label(M, N))
                                  : '.');
            std::cout << "\n";
        }
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"interference alignment for the constant MIMO interference channel"};
    app.require_subcommand(1);
    int rc = 0;

    SpecOptions gen_spec;
    std::uint64_t gen_seed = 0;
    std::string gen_out = "channels.json";
    bool gen_no_direct = false, gen_json = false;
    auto* gen = app.add_subcommand("gen-channels", "draw a random channel set");
    gen_spec.attach(gen);
    gen->add_option("--seed", gen_seed, "PRNG seed")->capture_default_str();
    gen->add_option("--out", gen_out, "output file")->capture_default_str();
    gen->add_flag("--no-direct", gen_no_direct, "omit the direct channels H_ii");
    gen->add_flag("--json", gen_json, "JSON output");
    gen->callback(
        [&] { rc = run_gen_channels(gen_spec, gen_seed, gen_out, gen_no_direct, gen_json); });

    SpecOptions feas_spec;
    bool feas_paths = false;
    int feas_max_r = 6;
    auto* feas = app.add_subcommand("feasibility", "closed-form feasibility verdict");
    feas_spec.attach(feas);
    feas->add_flag("--all-path-bounds", feas_paths, "search alignment-path bounds exhaustively");
    feas->add_option("--max-r", feas_max_r, "path-bound sequence cap (length r+2)")
        ->capture_default_str();
    feas->callback([&] { rc = run_feasibility(feas_spec, feas_paths, feas_max_r); });

    std::string solve_channels, solve_method, solve_selection, solve_out;
    bool solve_enum = false;
    int solve_limit = -1, solve_restarts = 100, solve_max_iters = 200;
    std::uint64_t solve_seed = 0;
    double solve_tol = 1e-8;
    auto* solve = app.add_subcommand("solve", "construct an alignment strategy");
    solve->add_option("--channels", solve_channels, "channel JSON file")->required();
    solve->add_option("--method", solve_method, "eigen|paths|newton")->required();
    solve->add_option("--selection", solve_selection, "eigen: comma list of eigenvector indices");
    solve->add_flag("--enumerate", solve_enum, "eigen: enumerate all d-subsets");
    solve->add_option("--limit", solve_limit, "eigen enumerate: stop after this many");
    solve->add_option("--restarts", solve_restarts, "newton restarts")->capture_default_str();
    solve->add_option("--seed", solve_seed, "newton start seed")->capture_default_str();
    solve->add_option("--max-iters", solve_max_iters, "newton iteration cap per start")
        ->capture_default_str();
    solve->add_option("--tol", solve_tol, "verification tolerance")->capture_default_str();
    solve->add_option("--out", solve_out, "write the strategy JSON here");
    solve->callback([&] {
        rc = run_solve(solve_channels, solve_method, solve_selection, solve_enum, solve_limit,
                       solve_restarts, solve_seed, solve_max_iters, solve_tol, solve_out);
    });

    std::string verify_channels, verify_strategy;
    double verify_tol = 1e-8;
    auto* verify = app.add_subcommand("verify", "certify a strategy against a channel set");
    verify->add_option("--channels", verify_channels, "channel JSON file")->required();
    verify->add_option("--strategy", verify_strategy, "strategy JSON file")->required();
    verify->add_option("--tol", verify_tol, "orthogonality tolerance")->capture_default_str();
    verify->callback([&] { rc = run_verify(verify_channels, verify_strategy, verify_tol); });

    int count_K = 0, count_d = 0, count_N = 0;
    long long count_budget = 20'000'000;
    bool count_json = false;
    auto* count = app.add_subcommand("count", "exact solution count via Schubert calculus");
    count->add_option("--K", count_K, "users")->required();
    count->add_option("--d", count_d, "streams per user")->required();
    count->add_option("--N", count_N, "antennas (M = N)")->required();
    count->add_option("--budget", count_budget, "sparse term budget")->capture_default_str();
    count->add_flag("--json", count_json, "JSON output");
    count->callback([&] { rc = run_count(count_K, count_d, count_N, count_budget, count_json); });

    int wit_K = 0, wit_d = 0, wit_N = 0;
    auto* wit = app.add_subcommand("witness", "non-vanishing term choice for existence");
    wit->add_option("--K", wit_K, "users")->required();
    wit->add_option("--d", wit_d, "streams per user")->required();
    wit->add_option("--N", wit_N, "antennas (M = N)")->required();
    wit->callback([&] { rc = run_witness(wit_K, wit_d, wit_N); });

    std::string enum_channels, enum_out;
    int enum_attempts = 100;
    std::uint64_t enum_seed = 0;
    auto* enm = app.add_subcommand("enumerate", "multi-start lower bound on the solution set");
    enm->add_option("--channels", enum_channels, "channel JSON file")->required();
    enm->add_option("--attempts", enum_attempts, "independent starts")->capture_default_str();
    enm->add_option("--seed", enum_seed, "start seed")->capture_default_str();
    enm->add_option("--out", enum_out, "write strategies JSON here");
    enm->callback([&] { rc = run_enumerate(enum_channels, enum_attempts, enum_seed, enum_out); });

    int dof_K = 0, dof_N = 0;
    bool dof_json = false;
    auto* dof = app.add_subcommand("dof", "achievable degrees of freedom (M = N)");
    dof->add_option("--K", dof_K, "users")->required();
    dof->add_option("--N", dof_N, "antennas per node")->required();
    dof->add_flag("--json", dof_json, "JSON output");
    dof->callback([&] { rc = run_dof(dof_K, dof_N, dof_json); });

    int rm_d = 0, rm_max_M = 12, rm_max_N = 12;
    bool rm_json = false;
    auto* rm =
        app.add_subcommand("region-map", "3-user symmetric feasible region in the (M,N) plane");
    rm->add_option("--d", rm_d, "streams per user")->required();
    rm->add_option("--max-M", rm_max_M, "grid width")->capture_default_str();
    rm->add_option("--max-N", rm_max_N, "grid height")->capture_default_str();
    rm->add_flag("--json", rm_json, "JSON output");
    rm->callback([&] { rc = run_region_map(rm_d, rm_max_M, rm_max_N, rm_json); });

    try {
        CLI11_PARSE(app, argc, argv);
    } catch (const ia::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return rc;
}
