// Copyright 2026 The dsrestore Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "cli.hpp"

#include <csignal>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <thread>

#include <pthread.h>

#include <CLI11.hpp>
#include <json.hpp>

#include "dsr/error.hpp"
#include "dsr/fragility.hpp"
#include "dsr/mdp.hpp"
#include "dsr/network.hpp"
#include "dsr/simulator.hpp"
#include "dsr/solver.hpp"

#ifdef DSR_CLI_WITH_SERVICE
#include "dsr/http_api.hpp"
#include "dsr/session_service.hpp"
#endif

namespace dsr::cli {

namespace fs = std::filesystem;
using nlohmann::json;

void RunConfig::validate() const {
    if (network.empty() && model.empty()) throw ValidationError("no network given (--network)");
    if (horizon && *horizon < 1) throw ValidationError("horizon must be at least 1");
    if (trials < 1) throw ValidationError("trials must be at least 1");
    if (!(vmin < vmax)) throw ValidationError("vmin must be below vmax");
    if (!(relax_cap >= 0.0)) throw ValidationError("relax-cap must be non-negative");
    if (state_budget < 1) throw ValidationError("state-budget must be at least 1");
    if (threads < 1) throw ValidationError("threads must be at least 1");
    if (pf_uniform && !(*pf_uniform >= 0.0 && *pf_uniform <= 1.0)) throw ValidationError("pf-uniform must lie in [0,1]");
    for (const auto& [branch, p] : pf_override) {
        if (!(p >= 0.0 && p <= 1.0)) throw ValidationError("pf override for branch " + std::to_string(branch) + " outside [0,1]");
    }
    if (fragility.empty() != exposure.empty()) throw ValidationError("--fragility and --exposure go together");
    if (!fragility.empty() && pf_uniform) throw ValidationError("give either --pf-uniform or --fragility/--exposure");
    if (policy != "optimal") parse_baseline_kind(policy);
}

namespace {

std::pair<int, double> parse_override(const std::string& text) {
    const auto eq = text.find('=');
    try {
        if (eq == std::string::npos) throw std::invalid_argument(text);
        std::size_t used = 0;
        const int branch = std::stoi(text.substr(0, eq), &used);
        if (used != eq) throw std::invalid_argument(text);
        const std::string rest = text.substr(eq + 1);
        const double p = std::stod(rest, &used);
        if (used != rest.size()) throw std::invalid_argument(text);
        return {branch, p};
    } catch (const std::logic_error&) {
        throw ValidationError("pf override '" + text + "' is not branch=p");
    }
}

std::string resolve(const fs::path& base, const std::string& path) {
    if (path.empty() || fs::path(path).is_absolute()) return path;
    return (base / path).lexically_normal().string();
}

}  // namespace

RunConfig load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file '" + path + "'");
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ParseError("config file '" + path + "': " + e.what());
    }
    if (!doc.is_object()) throw ParseError("config file '" + path + "' must hold a JSON object");
    const fs::path base = fs::path(path).parent_path();
    RunConfig c;
    try {
        for (const auto& [key, value] : doc.items()) {
            if (key == "network") c.network = resolve(base, value.get<std::string>());
            else if (key == "fragility") c.fragility = resolve(base, value.get<std::string>());
            else if (key == "exposure") c.exposure = resolve(base, value.get<std::string>());
            else if (key == "model") c.model = resolve(base, value.get<std::string>());
            else if (key == "pf_uniform") c.pf_uniform = value.get<double>();
            else if (key == "pf_override") {
                for (const auto& [branch, p] : value.items()) c.pf_override[std::stoi(branch)] = p.get<double>();
            }
            else if (key == "horizon") c.horizon = value.get<int>();
            else if (key == "vmin") c.vmin = value.get<double>();
            else if (key == "vmax") c.vmax = value.get<double>();
            else if (key == "relax_cap") c.relax_cap = value.get<double>();
            else if (key == "state_budget") c.state_budget = value.get<std::size_t>();
            else if (key == "trials") c.trials = value.get<int>();
            else if (key == "seed") c.seed = value.get<std::uint64_t>();
            else if (key == "out_dir") c.out_dir = resolve(base, value.get<std::string>());
            else if (key == "listen") c.listen = value.get<std::string>();
            else if (key == "threads") c.threads = value.get<unsigned>();
            else if (key == "policy") c.policy = value.get<std::string>();
            else if (key == "store") c.store = resolve(base, value.get<std::string>());
            else if (key == "console_dir") c.console_dir = resolve(base, value.get<std::string>());
            else throw ParseError("config file '" + path + "': unknown key '" + key + "'");
        }
    } catch (const json::exception& e) {
        throw ParseError("config file '" + path + "': " + e.what());
    } catch (const std::logic_error& e) {
        throw ParseError("config file '" + path + "': bad branch id in pf_override");
    }
    return c;
}

namespace {

struct Inputs {
    std::shared_ptr<const Network> network;
    PfAssignment pf;
};

Inputs load_inputs(const RunConfig& c) {
    Inputs in;
    in.network = std::make_shared<const Network>(load_network_file(c.network));
    if (!c.fragility.empty()) {
        in.pf = assign_pf(*in.network, load_fragility_file(c.fragility), load_exposure_file(c.exposure));
    } else if (c.pf_uniform) {
        in.pf = PfAssignment::uniform(*in.network, *c.pf_uniform);
    } else if (c.pf_override.size() == static_cast<std::size_t>(in.network->branch_count())) {
        in.pf = PfAssignment::uniform(*in.network, 0.0);
    } else {
        throw ValidationError("no failure probabilities given (--pf-uniform, --fragility/--exposure or --pf-override per branch)");
    }
    for (const auto& [branch, p] : c.pf_override) {
        if (branch < 1 || branch > in.network->branch_count()) {
            throw ValidationError("pf override names unknown branch " + std::to_string(branch));
        }
        in.pf.pf[static_cast<std::size_t>(branch - 1)] = p;
    }
    return in;
}

BuildOptions build_options(const RunConfig& c) {
    BuildOptions o;
    o.feasibility.limits = {c.vmin, c.vmax};
    o.feasibility.limits.validate();
    o.feasibility.relax_cap = c.relax_cap;
    o.state_budget = c.state_budget;
    o.threads = c.threads;
    return o;
}

/// Imports --model when given (it carries its own pf), otherwise builds.
MdpModel obtain_model(const RunConfig& c) {
    if (!c.model.empty()) {
        if (c.network.empty()) throw ValidationError("--model needs the matching --network");
        auto net = std::make_shared<const Network>(load_network_file(c.network));
        std::ifstream in(c.model);
        if (!in) throw IoError("cannot open model file '" + c.model + "'");
        return import_model_json(in, net);
    }
    const Inputs in = load_inputs(c);
    return build_mdp(in.network, in.pf, build_options(c));
}

fs::path prepare_out_dir(const RunConfig& c) {
    std::error_code ec;
    fs::create_directories(c.out_dir, ec);
    if (ec) throw IoError("cannot create output directory '" + c.out_dir + "': " + ec.message());
    return fs::path(c.out_dir);
}

void write_file(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write '" + path.string() + "'");
    out << text;
    if (!out) throw IoError("cannot write '" + path.string() + "'");
}

std::string with_seed(const std::string& doc_text, std::uint64_t seed) {
    json doc = json::parse(doc_text);
    doc["seed"] = seed;
    return doc.dump(2);
}

std::string sequence_text(const std::vector<ActionSet>& seq) {
    if (seq.empty()) return "(none)";
    std::string out;
    for (std::size_t i = 0; i < seq.size(); ++i) out += (i ? " -> " : "") + seq[i].to_string();
    return out;
}

struct PolicyChoice {
    Policy policy;
    ValueTable values;
};

PolicyChoice choose_policy(const MdpModel& model, const RunConfig& c, int horizon) {
    if (c.policy == "optimal") {
        SolveResult r = solve(model, horizon);
        return {std::move(r.policy), std::move(r.values)};
    }
    Policy p = baseline_policy(model, parse_baseline_kind(c.policy), horizon);
    ValueTable v = evaluate_policy(model, p, horizon);
    return {std::move(p), std::move(v)};
}

int cmd_build(const RunConfig& c, std::ostream& out) {
    const MdpModel model = obtain_model(c);
    const fs::path dir = prepare_out_dir(c);
    write_file(dir / "model.json", with_seed(export_model_json(model), c.seed));
    out << "states: " << model.size() << '\n'
        << "actions: " << model.action_count() << '\n'
        << "transitions: " << model.transition_count() << '\n'
        << "relaxed states: " << model.relaxed_count() << '\n'
        << "model: " << (dir / "model.json").string() << '\n'
        << "seed: " << c.seed << '\n';
    return kOk;
}

int cmd_solve(const RunConfig& c, std::ostream& out) {
    const MdpModel model = obtain_model(c);
    const int horizon = c.horizon.value_or(model.network().branch_count());
    const PolicyChoice choice = choose_policy(model, c, horizon);
    const double v0 = choice.values.value(0, horizon);
    const int n_bus = model.network().bus_count();

    json doc = json::parse(export_policy_json(model, SolveResult{choice.values, choice.policy}));
    json wrapped = {{"policy", c.policy},
                    {"horizon", horizon},
                    {"value", v0},
                    {"average_restoration_time", average_restoration_time(v0, n_bus)},
                    {"states", doc},
                    {"seed", c.seed}};
    const fs::path dir = prepare_out_dir(c);
    write_file(dir / "policy.json", wrapped.dump(2));

    out << std::setprecision(10);
    out << "policy: " << c.policy << '\n'
        << "horizon: " << horizon << '\n'
        << "states: " << model.size() << '\n'
        << "value: " << v0 << '\n'
        << "average restoration time: " << average_restoration_time(v0, n_bus) << '\n'
        << "nominal sequence: " << sequence_text(nominal_sequence(model, choice.policy)) << '\n'
        << "policy file: " << (dir / "policy.json").string() << '\n'
        << "seed: " << c.seed << '\n';
    return kOk;
}

int cmd_simulate(const RunConfig& c, std::ostream& out) {
    const MdpModel model = obtain_model(c);
    const int horizon = c.horizon.value_or(model.network().branch_count());
    const PolicyChoice choice = choose_policy(model, c, horizon);
    MonteCarloOptions mc;
    mc.trials = c.trials;
    mc.horizon = horizon;
    mc.seed = c.seed;
    mc.threads = c.threads;
    const SimulationReport report = monte_carlo(model, choice.policy, mc);
    json doc = json::parse(report_to_json(report));
    doc["policy"] = c.policy;
    doc["expected_average_restoration_time"] =
        average_restoration_time(choice.values.value(0, horizon), model.network().bus_count());
    const fs::path dir = prepare_out_dir(c);
    write_file(dir / "report.json", doc.dump(2));
    write_file(dir / "report.csv", report_to_csv(report));

    out << std::setprecision(10);
    out << "policy: " << c.policy << '\n'
        << "trials: " << report.trials << '\n'
        << "horizon: " << report.horizon << '\n'
        << "mean: " << report.mean << " +/- " << report.standard_error << '\n'
        << "expected: " << doc["expected_average_restoration_time"].get<double>() << '\n'
        << "report: " << (dir / "report.json").string() << ", " << (dir / "report.csv").string() << '\n'
        << "seed: " << c.seed << '\n';
    return kOk;
}

int cmd_serve(const RunConfig& c, std::ostream& out, std::ostream& err) {
#ifdef DSR_CLI_WITH_SERVICE
    const auto colon = c.listen.rfind(':');
    if (colon == std::string::npos) throw ValidationError("--listen expects addr:port");
    const std::string host = c.listen.substr(0, colon);
    int port = 0;
    try {
        port = std::stoi(c.listen.substr(colon + 1));
    } catch (const std::logic_error&) {
        throw ValidationError("--listen expects addr:port");
    }
    ServiceConfig sc;
    sc.store_path = c.store.empty() ? (prepare_out_dir(c) / "sessions.db").string() : c.store;
    sc.build_threads = c.threads;

    // Block the stop signals before any thread starts so only sigwait sees them.
    sigset_t stop_signals;
    sigemptyset(&stop_signals);
    sigaddset(&stop_signals, SIGINT);
    sigaddset(&stop_signals, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &stop_signals, nullptr);

    SessionService service(sc);
    HttpApi api(service, c.console_dir.empty() ? std::nullopt : std::optional<std::string>(c.console_dir));
    const int bound = api.bind(host, port);
    if (bound < 0) {
        err << "error: cannot bind " << c.listen << '\n';
        return kIo;
    }
    std::thread server([&api] { api.serve(); });
    api.wait_until_ready();
    out << "listening on " << host << ':' << bound << '\n'
        << "sessions: " << service.session_ids().size() << " restored from " << sc.store_path << '\n'
        << "seed: " << c.seed << '\n'
        << std::flush;
    int sig = 0;
    sigwait(&stop_signals, &sig);
    api.stop();
    server.join();
    out << "stopped\n";
    return kOk;
#else
    (void)c;
    (void)out;
    err << "error: restorectl was built without the session service\n";
    return kValidation;
#endif
}

/// Flag values plus the override step that copies a given flag onto the config.
struct FlagSet {
    RunConfig values;
    std::string config_path;
    std::vector<std::string> overrides;
    std::vector<std::pair<CLI::Option*, std::function<void(RunConfig&)>>> apply;

    void add(CLI::App& app) {
        app.add_option("--config", config_path, "JSON run configuration")->check(CLI::ExistingFile);
        field(app.add_option("--network", values.network, "network JSON file"), &RunConfig::network);
        field(app.add_option("--fragility", values.fragility, "fragility curves JSON file"), &RunConfig::fragility);
        field(app.add_option("--exposure", values.exposure, "per-branch exposure JSON file"), &RunConfig::exposure);
        field(app.add_option("--model", values.model, "prebuilt model export (solve/simulate)"), &RunConfig::model);
        field(app.add_option("--pf-uniform", values.pf_uniform, "same failure probability on every branch"),
              &RunConfig::pf_uniform);
        auto* ov = app.add_option("--pf-override", overrides, "branch=p, repeatable");
        apply.emplace_back(ov, [this](RunConfig& c) {
            for (const auto& text : overrides) {
                const auto [branch, p] = parse_override(text);
                c.pf_override[branch] = p;
            }
        });
        field(app.add_option("--horizon", values.horizon, "steps to plan over (default: branch count)"),
              &RunConfig::horizon);
        field(app.add_option("--vmin", values.vmin, "lower voltage limit, pu"), &RunConfig::vmin);
        field(app.add_option("--vmax", values.vmax, "upper voltage limit, pu"), &RunConfig::vmax);
        field(app.add_option("--relax-cap", values.relax_cap, "maximum voltage-limit widening, pu"),
              &RunConfig::relax_cap);
        field(app.add_option("--state-budget", values.state_budget, "maximum states to explore"),
              &RunConfig::state_budget);
        field(app.add_option("--trials", values.trials, "Monte Carlo trials"), &RunConfig::trials);
        field(app.add_option("--seed", values.seed, "random seed"), &RunConfig::seed);
        field(app.add_option("--out-dir", values.out_dir, "output directory"), &RunConfig::out_dir);
        field(app.add_option("--listen", values.listen, "addr:port for serve"), &RunConfig::listen);
        field(app.add_option("--threads", values.threads, "worker threads"), &RunConfig::threads);
        field(app.add_option("--policy", values.policy, "optimal, greedy-max-energize or min-total-time"),
              &RunConfig::policy);
        field(app.add_option("--store", values.store, "session log file for serve"), &RunConfig::store);
        field(app.add_option("--console-dir", values.console_dir, "operator console assets for serve"),
              &RunConfig::console_dir);
    }

    template <typename T>
    void field(CLI::Option* opt, T RunConfig::*member) {
        apply.emplace_back(opt, [this, member](RunConfig& c) { c.*member = values.*member; });
    }

    RunConfig resolve() const {
        RunConfig c = config_path.empty() ? RunConfig{} : load_config_file(config_path);
        for (const auto& [opt, fn] : apply) {
            if (opt->count() > 0) fn(c);
        }
        c.validate();
        return c;
    }
};

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Restoration planning for damaged distribution feeders", "restorectl"};
    app.require_subcommand(1);
    struct Command {
        const char* name;
        const char* help;
        FlagSet flags;
        CLI::App* app = nullptr;
    };
    std::vector<Command> commands;
    commands.push_back({"build", "explore the restoration model and write model.json", {}});
    commands.push_back({"solve", "compute the policy, write policy.json, print value and nominal sequence", {}});
    commands.push_back({"simulate", "Monte Carlo rollouts of the policy, write report.json and report.csv", {}});
    commands.push_back({"serve", "run the session HTTP API", {}});
    for (Command& cmd : commands) {
        cmd.app = app.add_subcommand(cmd.name, cmd.help);
        cmd.flags.add(*cmd.app);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        std::ostringstream o, e2;
        const int code = app.exit(e, o, e2);
        out << o.str();
        err << e2.str();
        return code == 0 ? kOk : kValidation;
    }

    try {
        for (Command& cmd : commands) {
            if (!cmd.app->parsed()) continue;
            const RunConfig c = cmd.flags.resolve();
            const std::string name = cmd.name;
            if (name == "build") return cmd_build(c, out);
            if (name == "solve") return cmd_solve(c, out);
            if (name == "simulate") return cmd_simulate(c, out);
            return cmd_serve(c, out, err);
        }
    } catch (const BudgetExceeded& e) {
        err << "error: " << e.what() << '\n';
        return kBudget;
    } catch (const ConvergenceError& e) {
        err << "error: " << e.what() << '\n';
        return kBudget;
    } catch (const IoError& e) {
        err << "error: " << e.what() << '\n';
        return kIo;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kValidation;
    }
    return kValidation;
}

}  // namespace dsr::cli
