#include "pilotkey/cli.hpp"

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <memory>
#include <numbers>
#include <optional>
#include <sstream>

#include "pilotkey/adversary.hpp"
#include "pilotkey/errors.hpp"
#include "pilotkey/rng.hpp"
#include "pilotkey/trajectories.hpp"
#include "pilotkey/verification.hpp"

namespace pilotkey {

using nlohmann::json;

void to_json(json& j, const PhysParams& p) {
    j = json{{"hbar", p.hbar}, {"mass", p.mass}, {"mu", p.mu},         {"B0", p.B0}, {"B", p.B},
             {"K", p.K},       {"T", p.T},       {"sigma0", p.sigma0}, {"d", p.d}};
}

void from_json(const json& j, PhysParams& p) {
    p.hbar = j.value("hbar", p.hbar);
    p.mass = j.value("mass", p.mass);
    p.mu = j.value("mu", p.mu);
    p.B0 = j.value("B0", p.B0);
    p.B = j.value("B", p.B);
    p.K = j.value("K", p.K);
    p.T = j.value("T", p.T);
    p.sigma0 = j.value("sigma0", p.sigma0);
    p.d = j.value("d", p.d);
}

void to_json(json& j, const RunConfig& c) {
    j = json{{"params", c.params},
             {"seed", c.master_seed},
             {"mode", to_string(c.mode)},
             {"t_end", c.t_end},
             {"dt", c.dt},
             {"pairs", c.n_pairs},
             {"output", c.output_path},
             {"test_fraction", c.test_fraction},
             {"bell_tolerance", c.bell_tolerance},
             {"variant", to_string(c.variant)},
             {"knows_s", c.knows_s},
             {"intercept_fraction", c.intercept_fraction},
             {"inject_violation", c.inject_violation},
             {"reveal_hidden", c.reveal_hidden},
             {"samples", c.samples},
             {"t_probe", c.t_probe},
             {"preset", c.preset}};
}

void from_json(const json& j, RunConfig& c) {
    c.preset = j.value("preset", c.preset);
    if (c.preset == "strong_field") c.params = strong_field_params();
    if (j.contains("params")) from_json(j.at("params"), c.params);
    c.master_seed = j.value("seed", c.master_seed);
    if (j.contains("mode")) c.mode = parse_outcome_mode(j.at("mode").get<std::string>());
    c.t_end = j.value("t_end", c.t_end);
    c.dt = j.value("dt", c.dt);
    c.n_pairs = j.value("pairs", c.n_pairs);
    c.output_path = j.value("output", c.output_path);
    c.test_fraction = j.value("test_fraction", c.test_fraction);
    c.bell_tolerance = j.value("bell_tolerance", c.bell_tolerance);
    if (j.contains("variant")) c.variant = parse_variant(j.at("variant").get<std::string>());
    c.knows_s = j.value("knows_s", c.knows_s);
    c.intercept_fraction = j.value("intercept_fraction", c.intercept_fraction);
    c.inject_violation = j.value("inject_violation", c.inject_violation);
    c.reveal_hidden = j.value("reveal_hidden", c.reveal_hidden);
    c.samples = j.value("samples", c.samples);
    c.t_probe = j.value("t_probe", c.t_probe);
}

std::string config_to_json(const RunConfig& config) { return json(config).dump(); }

RunConfig config_from_json(const std::string& text) {
    try {
        RunConfig c;
        from_json(json::parse(text), c);
        return c;
    } catch (const json::exception& e) {
        throw std::invalid_argument(std::string("malformed config: ") + e.what());
    }
}

namespace {

int sign_json(Sign s) { return to_int(s); }

json report_json(const CheckReport& r) {
    json j{{"record", "check"},
           {"check_name", r.check_name},
           {"max_abs_error", r.max_abs_error},
           {"max_rel_error", r.max_rel_error},
           {"tolerance", r.tolerance},
           {"points", r.points},
           {"pass", r.pass}};
    if (r.convergence_ratio) j["convergence_ratio"] = *r.convergence_ratio;
    return j;
}

json chsh_json(const ChshEstimate& e) {
    return json{{"S", e.S},
                {"std_error", e.std_error},
                {"correlation", e.correlation},
                {"counts", e.counts},
                {"angles", {e.angles.a, e.angles.a_prime, e.angles.b, e.angles.b_prime}}};
}

std::string bits_string(const KeyBits& bits) {
    std::string s;
    s.reserve(bits.size());
    for (auto b : bits) s.push_back(b ? '1' : '0');
    return s;
}

json round_json(const ProtocolRound& r, bool reveal) {
    json j{{"record", "round"},
           {"index", r.index},
           {"delta", alignment_angle(r.settings.delta)},
           {"lost", r.lost},
           {"filtered_out", r.filtered_out},
           {"announced_for_test", r.announced_for_test}};
    if (r.announced_WB) j["announced_WB"] = sign_json(*r.announced_WB);
    if (r.announced_s) j["announced_s"] = sign_json(*r.announced_s);
    if (r.announced_WA) j["announced_WA"] = sign_json(*r.announced_WA);
    if (reveal) {
        j["z10"] = r.initial.z10;
        j["z20"] = r.initial.z20;
        j["s"] = sign_json(r.settings.s);
        j["intercepted"] = r.intercepted;
        if (r.outcome) {
            j["W_A"] = sign_json(r.outcome->W_A);
            j["W_B"] = sign_json(r.outcome->W_B);
        }
        if (r.bell) {
            j["bell"] = {{"alice_setting", r.bell->alice_setting},
                         {"bob_setting", r.bell->bob_setting},
                         {"W_A", sign_json(r.bell->W_A)},
                         {"W_B", sign_json(r.bell->W_B)}};
        }
    }
    return j;
}

// Writes to the configured file, or to `out` when no path is set.
class Sink {
public:
    Sink(const std::string& path, std::ostream& fallback) {
        if (!path.empty()) {
            file_ = std::make_unique<std::ofstream>(path, std::ios::binary);
            if (!*file_) throw std::runtime_error("cannot open output file " + path);
        }
        stream_ = file_ ? file_.get() : &fallback;
    }
    std::ostream& stream() { return *stream_; }

private:
    std::unique_ptr<std::ofstream> file_;
    std::ostream* stream_;
};

double resolved_t_end(const RunConfig& c) { return c.t_end > 0.0 ? c.t_end : default_t_end(c.params); }

int cmd_trajectories(const RunConfig& c, std::ostream& out, std::ostream& err) {
    c.params.validate();
    const double t_end = resolved_t_end(c);
    const std::string config_text = config_to_json(c);
    struct Pending {
        std::string name;
        TrajectoryPair traj;
        std::size_t pair;
    };
    std::vector<Pending> pending;
    bool failed = false;
    for (std::size_t i = 0; i < c.n_pairs; ++i) {
        auto rng = make_stream(c.master_seed, i, Stream::source);
        const auto x0 = sample_admissible(c.params, rng);
        for (Sign s : {Sign::plus, Sign::minus}) {
            try {
                auto traj = integrate(x0, {s, Alignment::aligned}, c.params, t_end, c.dt);
                std::ostringstream name;
                name << "traj_" << i << (s == Sign::plus ? "_s+1" : "_s-1") << ".csv";
                pending.push_back({name.str(), std::move(traj), i});
            } catch (const IntegrationError& e) {
                err << "pair " << i << " s=" << to_int(s) << ": " << e.what() << '\n';
                failed = true;
            }
        }
    }

    const std::filesystem::path dir = c.output_path.empty() ? std::filesystem::path(".") : std::filesystem::path(c.output_path);
    std::filesystem::create_directories(dir);
    for (const auto& p : pending) {
        std::ofstream f(dir / p.name, std::ios::binary);
        if (!f) throw std::runtime_error("cannot write " + (dir / p.name).string());
        write_trajectory_csv(f, p.traj,
                             {{"config", config_text},
                              {"pair", std::to_string(p.pair)},
                              {"s", std::to_string(to_int(p.traj.settings.s))},
                              {"z10", format_double(p.traj.initial.z10)},
                              {"z20", format_double(p.traj.initial.z20)}});
        out << (dir / p.name).string() << '\n';
    }
    return failed ? exit_code::integration_failure : exit_code::success;
}

SessionConfig session_config(const RunConfig& c) {
    SessionConfig sc;
    sc.pairs = c.n_pairs;
    sc.seed = c.master_seed;
    sc.round.mode = c.mode;
    sc.round.variant = c.variant;
    sc.round.intercept_fraction = c.intercept_fraction;
    sc.round.t_end = c.t_end;
    sc.round.dt = c.dt;
    sc.sift.test_fraction = c.test_fraction;
    sc.sift.bell_tolerance = c.bell_tolerance;
    sc.inject_violation = c.inject_violation;
    return sc;
}

int cmd_session(const RunConfig& c, std::ostream& out) {
    const auto tr = run_session(c.params, session_config(c));
    Sink sink(c.output_path, out);
    auto& os = sink.stream();
    os << json{{"record", "config"}, {"config", c}}.dump() << '\n';
    std::size_t lost = 0;
    std::size_t filtered = 0;
    std::size_t tested = 0;
    for (const auto& r : tr.rounds) {
        lost += r.lost;
        filtered += r.filtered_out;
        tested += r.announced_for_test;
        os << round_json(r, c.reveal_hidden).dump() << '\n';
    }
    json chsh = json::object();
    for (const auto& [s, est] : tr.chsh) chsh[s > 0 ? "+1" : "-1"] = chsh_json(est);
    os << json{{"record", "summary"},
               {"pairs", tr.rounds.size()},
               {"lost", lost},
               {"filtered_out", filtered},
               {"test_rounds", tested},
               {"aborted", tr.aborted},
               {"abort_reason", to_string(tr.abort_reason)},
               {"chsh", chsh},
               {"key_length", tr.alice_key.size()},
               {"alice_key", bits_string(tr.alice_key)},
               {"bob_key", bits_string(tr.bob_key)},
               {"keys_equal", tr.alice_key == tr.bob_key}}
              .dump()
       << '\n';
    switch (tr.abort_reason) {
        case AbortReason::anticorrelation_violation: return exit_code::anticorrelation_abort;
        case AbortReason::bell_violation: return exit_code::bell_abort;
        case AbortReason::none: break;
    }
    return exit_code::success;
}

int cmd_verify(const RunConfig& c, std::ostream& out) {
    c.params.validate();
    // Probe times in units of the branch-separation time m sigma0 / (B mu T),
    // when the packet displacement equals sigma0.
    const double t_sep = c.params.mass * c.params.sigma0 / c.params.kick();
    const auto grid = default_grid(c.params, {0.0, t_sep, 4.0 * t_sep}, 201);
    const auto cont_grid = default_grid(c.params, {t_sep, 4.0 * t_sep}, 41);
    // Step h resolves the branch transition, whose width in z2 shrinks as 1/K.
    const double h = std::min(1e-3, 1e-2 / c.params.K) * c.params.sigma0;

    std::vector<CheckReport> reports;
    for (Sign s : {Sign::plus, Sign::minus}) {
        reports.push_back(check_density_oracle(grid, c.params, s));
        reports.push_back(check_current_consistency(grid, c.params, s));
        reports.push_back(check_continuity(cont_grid, c.params, s, h));
        EquivarianceOptions eq;
        eq.seed = c.master_seed;
        eq.dt = c.dt;
        reports.push_back(check_equivariance(c.samples, c.t_probe, c.params, {s, Alignment::aligned}, eq));
    }

    Sink sink(c.output_path, out);
    auto& os = sink.stream();
    os << json{{"record", "config"}, {"config", c}}.dump() << '\n';
    bool all = true;
    for (const auto& r : reports) {
        all = all && r.pass;
        os << report_json(r).dump() << '\n';
    }
    return all ? exit_code::success : exit_code::failure;
}

int cmd_attack(const RunConfig& c, std::ostream& out) {
    AttackConfig ac;
    ac.variant = c.variant;
    ac.pairs = c.n_pairs;
    ac.seed = c.master_seed;
    ac.knows_s = c.knows_s;
    ac.mode = c.mode;
    ac.sift.test_fraction = c.test_fraction;
    ac.sift.bell_tolerance = c.bell_tolerance;
    const auto rep = run_attack(c.params, ac);
    Sink sink(c.output_path, out);
    sink.stream() << json{{"record", "attack"},
                          {"variant", to_string(rep.variant)},
                          {"knows_s", rep.knows_s},
                          {"n_key_bits", rep.n_key_bits},
                          {"n_correct", rep.n_correct},
                          {"eve_accuracy", rep.eve_accuracy},
                          {"binomial_ci", {rep.ci_low, rep.ci_high}},
                          {"confidence", rep.confidence},
                          {"config", c}}
                         .dump()
                  << '\n';
    return exit_code::success;
}

int cmd_chsh(const RunConfig& c, std::ostream& out) {
    const AngleSet angles;
    std::vector<BellSample> all;
    std::map<int, std::vector<BellSample>> by_s;
    all.reserve(c.n_pairs);
    for (std::size_t i = 0; i < c.n_pairs; ++i) {
        ProtocolRound r;
        r.index = i;
        auto bob = make_stream(c.master_seed, i, Stream::bob);
        r.settings.s = c.variant == ProtocolVariant::baseline ? Sign::plus : fair_sign(bob);
        auto channel = make_stream(c.master_seed, i, Stream::channel);
        r.intercepted = unit_uniform(channel) < c.intercept_fraction;
        if (r.intercepted) r.eve_resent = fair_sign(channel);
        const auto b = bell_sample(r, angles, c.master_seed);
        all.push_back(b);
        by_s[to_int(b.s)].push_back(b);
    }
    json per_s = json::object();
    for (const auto& [s, samples] : by_s) per_s[s > 0 ? "+1" : "-1"] = chsh_json(chsh_estimate(samples, angles));
    Sink sink(c.output_path, out);
    sink.stream() << json{{"record", "chsh"},
                          {"rounds", c.n_pairs},
                          {"combined", chsh_json(chsh_estimate(all, angles))},
                          {"per_s", per_s},
                          {"target", 2.0 * std::numbers::sqrt2},
                          {"config", c}}
                         .dump()
                  << '\n';
    return exit_code::success;
}

// Options shared by every subcommand. Flags are applied on top of the
// config file, so only options actually given on the command line count.
struct CommonFlags {
    std::string config_path;
    std::string preset;
    std::uint64_t seed = 0;
    std::size_t pairs = 0;
    std::string mode;
    std::string out;
    double t_end = 0, dt = 0;
    double hbar = 0, mass = 0, mu = 0, B0 = 0, B = 0, K = 0, T = 0, sigma0 = 0, d = 0;
    std::map<std::string, CLI::Option*> opts;

    void attach(CLI::App* app) {
        opts["config"] = app->add_option("--config", config_path, "JSON run configuration");
        opts["preset"] = app->add_option("--preset", preset, "parameter preset: default | strong_field");
        opts["seed"] = app->add_option("--seed", seed, "master seed");
        opts["pairs"] = app->add_option("--pairs,-n", pairs, "number of pairs / rounds");
        opts["mode"] = app->add_option("--mode", mode, "full_ode | sign_law | quantum_oracle");
        opts["out"] = app->add_option("--out,-o", out, "output file (directory for trajectories)");
        opts["t_end"] = app->add_option("--t-end", t_end, "integration horizon");
        opts["dt"] = app->add_option("--dt", dt, "RK4 step");
        opts["hbar"] = app->add_option("--hbar", hbar);
        opts["mass"] = app->add_option("--mass", mass);
        opts["mu"] = app->add_option("--mu", mu);
        opts["B0"] = app->add_option("--B0", B0);
        opts["B"] = app->add_option("--B", B, "field gradient");
        opts["K"] = app->add_option("--K", K, "Bob's field scale");
        opts["T"] = app->add_option("--T", T, "field interaction time");
        opts["sigma0"] = app->add_option("--sigma0", sigma0);
        opts["d"] = app->add_option("--d", d, "entrance slit width");
    }

    bool given(const std::string& name) const {
        auto it = opts.find(name);
        return it != opts.end() && it->second->count() > 0;
    }

    RunConfig resolve() const {
        RunConfig c;
        if (given("config")) {
            std::ifstream f(config_path);
            if (!f) throw std::invalid_argument("cannot read config file " + config_path);
            std::stringstream ss;
            ss << f.rdbuf();
            c = config_from_json(ss.str());
        }
        if (given("preset")) {
            if (preset == "strong_field") {
                c.params = strong_field_params();
            } else if (preset == "default") {
                c.params = PhysParams{};
            } else {
                throw std::invalid_argument("unknown preset: " + preset);
            }
            c.preset = preset;
        }
        if (given("seed")) c.master_seed = seed;
        if (given("pairs")) c.n_pairs = pairs;
        if (given("mode")) c.mode = parse_outcome_mode(mode);
        if (given("out")) c.output_path = out;
        if (given("t_end")) c.t_end = t_end;
        if (given("dt")) c.dt = dt;
        if (given("hbar")) c.params.hbar = hbar;
        if (given("mass")) c.params.mass = mass;
        if (given("mu")) c.params.mu = mu;
        if (given("B0")) c.params.B0 = B0;
        if (given("B")) c.params.B = B;
        if (given("K")) c.params.K = K;
        if (given("T")) c.params.T = T;
        if (given("sigma0")) c.params.sigma0 = sigma0;
        if (given("d")) c.params.d = d;
        return c;
    }
};

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Double Stern-Gerlach pilot-wave simulator and s-flip key distribution"};
    app.require_subcommand(1);

    auto* traj = app.add_subcommand("trajectories", "integrate sampled pairs for s = +1 and s = -1");
    auto* session = app.add_subcommand("session", "run the key-distribution protocol");
    auto* verify = app.add_subcommand("verify", "run the numerical oracle checks");
    auto* attack = app.add_subcommand("attack", "measure a position-aware eavesdropper");
    auto* chsh = app.add_subcommand("chsh", "estimate the CHSH value with the statistics oracle");

    std::map<CLI::App*, CommonFlags> flags;
    for (auto* sub : {traj, session, verify, attack, chsh}) flags[sub].attach(sub);

    double bell_tolerance = 0, test_fraction = 0, intercept = 0, t_probe = 0;
    std::size_t samples = 0;
    bool inject = false, reveal = false, knows_s = false;
    std::string variant;
    auto* o_bell = session->add_option("--bell-tolerance", bell_tolerance, "allowed |S - 2 sqrt 2|");
    auto* o_test = session->add_option("--test-fraction", test_fraction, "fraction of rounds announced");
    auto* o_icpt = session->add_option("--intercept-fraction", intercept, "intercept-resend probability per pair");
    auto* o_inj = session->add_flag("--inject-violation", inject, "flip W_A in one aligned test round");
    auto* o_rev = session->add_flag("--reveal-hidden", reveal, "include hidden variables in round records");
    auto* o_svar = session->add_option("--variant", variant, "s_flip | baseline");
    auto* o_avar = attack->add_option("--variant", variant, "s_flip | baseline");
    auto* o_know = attack->add_flag("--knows-s", knows_s, "Eve also learns s (broken RNG)");
    auto* o_ci = chsh->add_option("--intercept-fraction", intercept, "intercept-resend probability per round");
    auto* o_samp = verify->add_option("--samples", samples, "equivariance ensemble size");
    auto* o_probe = verify->add_option("--t-probe", t_probe, "equivariance probe time");

    try {
        std::vector<std::string> rest(args.begin() + (args.empty() ? 0 : 1), args.end());
        std::reverse(rest.begin(), rest.end());
        app.parse(rest);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) {
            out << app.help();
            return exit_code::success;
        }
        err << e.what() << '\n';
        return exit_code::usage;
    }

    CLI::App* active = app.get_subcommands().front();
    RunConfig c;
    try {
        c = flags[active].resolve();
        if (o_bell->count()) c.bell_tolerance = bell_tolerance;
        if (o_test->count()) c.test_fraction = test_fraction;
        if (o_icpt->count() || o_ci->count()) c.intercept_fraction = intercept;
        if (o_inj->count()) c.inject_violation = inject;
        if (o_rev->count()) c.reveal_hidden = reveal;
        if (o_svar->count() || o_avar->count()) c.variant = parse_variant(variant);
        if (o_know->count()) c.knows_s = knows_s;
        if (o_samp->count()) c.samples = samples;
        if (o_probe->count()) c.t_probe = t_probe;
        c.params.validate_kinematics();
    } catch (const std::invalid_argument& e) {
        err << "usage error: " << e.what() << '\n';
        return exit_code::usage;
    }

    try {
        if (active == traj) return cmd_trajectories(c, out, err);
        if (active == session) return cmd_session(c, out);
        if (active == verify) return cmd_verify(c, out);
        if (active == attack) return cmd_attack(c, out);
        return cmd_chsh(c, out);
    } catch (const IntegrationError& e) {
        err << "integration failure: " << e.what() << '\n';
        return exit_code::integration_failure;
    } catch (const std::invalid_argument& e) {
        err << "usage error: " << e.what() << '\n';
        return exit_code::usage;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return exit_code::failure;
    }
}

}  // namespace pilotkey
