// mbp: command-line front end for the marked binomial toolkit.

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "mbp/basis.hpp"
#include "mbp/chaos.hpp"
#include "mbp/config_space.hpp"
#include "mbp/hedging.hpp"
#include "mbp/identities.hpp"
#include "mbp/measure_change.hpp"
#include "mbp/stein.hpp"
#include "mbp/util.hpp"

using json = nlohmann::ordered_json;

namespace {

// nlohmann prints the shortest round-trip form; output here uses 17 significant digits.
void dump17(const json& j, std::ostream& os, int indent, int depth) {
    const std::string pad(static_cast<std::size_t>(indent * (depth + 1)), ' ');
    const std::string close(static_cast<std::size_t>(indent * depth), ' ');
    switch (j.type()) {
        case json::value_t::object: {
            if (j.empty()) {
                os << "{}";
                return;
            }
            os << "{\n";
            bool first = true;
            for (auto it = j.begin(); it != j.end(); ++it) {
                if (!first) os << ",\n";
                first = false;
                os << pad << json(it.key()).dump() << ": ";
                dump17(it.value(), os, indent, depth + 1);
            }
            os << "\n" << close << "}";
            return;
        }
        case json::value_t::array: {
            if (j.empty()) {
                os << "[]";
                return;
            }
            const bool flat = std::none_of(j.begin(), j.end(), [](const json& e) { return e.is_structured(); });
            if (flat) {
                os << "[";
                for (std::size_t i = 0; i < j.size(); ++i) {
                    if (i) os << ", ";
                    dump17(j[i], os, indent, depth + 1);
                }
                os << "]";
                return;
            }
            os << "[\n";
            for (std::size_t i = 0; i < j.size(); ++i) {
                if (i) os << ",\n";
                os << pad;
                dump17(j[i], os, indent, depth + 1);
            }
            os << "\n" << close << "]";
            return;
        }
        case json::value_t::number_float: {
            const double x = j.get<double>();
            os << (std::isfinite(x) ? mbp::format_double(x) : "null");
            return;
        }
        default:
            os << j.dump();
    }
}

struct Common {
    std::string output;
    std::string format = "json";
    bool no_timestamp = false;
    bool verbose = false;
};

struct ModelFlags {
    std::string config;
    std::optional<int> T;
    std::string marks, Q;
    std::optional<double> lambda;
    std::optional<std::uint64_t> seed;

    void attach(CLI::App* app) {
        app->add_option("--config", config, "key=value file with T, marks, lambda, Q, seed");
        app->add_option("--T", T, "horizon");
        app->add_option("--marks", marks, "comma-separated marks");
        app->add_option("--lambda", lambda, "jump probability per step");
        app->add_option("--Q", Q, "comma-separated mark probabilities");
        app->add_option("--seed", seed, "64-bit seed");
    }

    mbp::ModelParams build() const {
        mbp::ModelParams p;
        bool have_T = false, have_marks = false, have_lambda = false, have_Q = false;
        if (!config.empty()) {
            p = mbp::ModelParams::from_file(config);
            have_T = have_marks = have_lambda = have_Q = true;
        }
        if (T) p.T = *T, have_T = true;
        if (!marks.empty()) p.marks = mbp::parse_list(marks), have_marks = true;
        if (lambda) p.lambda = *lambda, have_lambda = true;
        if (!Q.empty()) p.Q = mbp::parse_list(Q), have_Q = true;
        if (seed) p.seed = *seed;
        if (!have_T) throw std::invalid_argument("missing --T (or --config)");
        if (!have_marks) throw std::invalid_argument("missing --marks (or --config)");
        if (!have_lambda) throw std::invalid_argument("missing --lambda (or --config)");
        if (!have_Q) throw std::invalid_argument("missing --Q (or --config)");
        p.validate();
        return p;
    }
};

json params_json(const mbp::ModelParams& p) {
    return {{"T", p.T}, {"marks", p.marks}, {"lambda", p.lambda}, {"Q", p.Q}};
}

std::string utc_timestamp() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

void emit_text(const Common& c, const std::string& text) {
    if (c.output.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream out(c.output);
    if (!out) throw std::invalid_argument("cannot write " + c.output);
    out << text;
}

void emit(const Common& c, json j) {
    if (!c.no_timestamp) j["timestamp"] = utc_timestamp();
    std::ostringstream os;
    dump17(j, os, 2, 0);
    os << "\n";
    emit_text(c, os.str());
}

std::string csv_row(const std::vector<std::string>& cells) {
    std::string s;
    for (std::size_t i = 0; i < cells.size(); ++i) s += (i ? "," : "") + cells[i];
    return s + "\n";
}

// ---------------------------------------------------------------------------

int cmd_simulate(const Common& c, const ModelFlags& mf, std::size_t paths) {
    const auto p = mf.build();
    json rows = json::array();
    std::string csv = "path,digits,N_T,Y_T,Ybar_T\n";
    for (std::size_t i = 0; i < paths; ++i) {
        auto rng = mbp::make_stream(p.seed, i);
        const auto w = mbp::sample_path(p, rng);
        const auto v = mbp::compound_value(p, w, p.T);
        std::string digits;
        for (int d : w.digits) digits += std::to_string(d);
        csv += csv_row({std::to_string(i), digits, std::to_string(v.N), mbp::format_double(v.Y),
                        mbp::format_double(v.Ybar)});
        rows.push_back({{"digits", w.digits}, {"N_T", v.N}, {"Y_T", v.Y}, {"Ybar_T", v.Ybar}});
    }
    if (c.format == "csv") {
        emit_text(c, csv);
        return 0;
    }
    emit(c, {{"command", "simulate"}, {"seed", p.seed}, {"params", params_json(p)}, {"paths", rows}});
    return 0;
}

mbp::PathFunctional named_functional(const std::string& name, const mbp::SpacePtr& space, std::uint64_t seed) {
    const int T = space->horizon();
    if (name == "N") return mbp::jump_count(space, T);
    if (name == "Y") return mbp::compound_sum(space, T);
    if (name == "Ybar") return mbp::compensated_sum(space, T);
    if (name == "random") {
        auto rng = mbp::make_stream(seed, 0);
        return mbp::random_functional(space, rng);
    }
    throw std::invalid_argument("unknown functional '" + name + "' (expected N, Y, Ybar or random)");
}

int cmd_decompose(const Common& c, const ModelFlags& mf, const std::string& functional, bool pseudo) {
    const auto p = mf.build();
    const auto space = mbp::make_space(p);
    const auto basis = mbp::build_basis(p);
    const auto F = named_functional(functional, space, p.seed);
    const auto coeffs = pseudo ? mbp::pseudo_chaos_decompose(F) : mbp::stroock_decompose(basis, F);
    if (c.format == "csv") {
        emit_text(c, mbp::to_csv(coeffs));
        return 0;
    }
    json orders = json::array();
    for (int n = 1; n <= coeffs.max_order(); ++n)
        for (const auto& [s, v] : coeffs.order(n)) {
            if (v == 0.0) continue;
            orders.push_back({{"order", n}, {"support", mbp::to_string(s)}, {"value", v}});
        }
    const auto back = pseudo ? F : mbp::reconstruct(basis, space, coeffs);
    emit(c, {{"command", "decompose"},
             {"seed", p.seed},
             {"params", params_json(p)},
             {"functional", functional},
             {"family", pseudo ? "Z" : "R"},
             {"f0", coeffs.f0},
             {"coefficients", orders},
             {"reconstruction_residual", mbp::max_abs_diff(back, F)}});
    return 0;
}

int cmd_headrun(const Common& c, int n, int m, double p, std::uint64_t seed) {
    const auto U = mbp::head_run_functional(n, m, p);
    const double l0 = mbp::head_run_lambda0(n, m, p);
    const double mean = mbp::expectation(U);
    const double var_enum = mbp::expectation(U * U) - mean * mean;
    const auto pmf = mbp::pmf_of(U);
    const double tv = mbp::exact_tv(pmf, mbp::poisson_pmf(l0, static_cast<int>(pmf.size()) + 60));
    const double bound = mbp::head_run_bound(n, m, p);
    emit(c, {{"command", "stein headrun"},
             {"seed", seed},
             {"n", n},
             {"m", m},
             {"p", p},
             {"lambda0", l0},
             {"mean_enumeration", mean},
             {"variance", mbp::head_run_variance_identity(n, m, p)},
             {"variance_enumeration", var_enum},
             {"variance_pairs", mbp::head_run_variance_pairs(n, m, p)},
             {"bound", bound},
             {"exact_tv", tv},
             {"dominates", tv <= bound}});
    return 0;
}

int cmd_dna(const Common& c, int n, int h, double alpha, double mu, int cutoff, std::uint64_t seed) {
    const double l0 = mbp::dna_lambda0(n, h, alpha, mu);
    const auto H = mbp::dna_functional(n, h, alpha, mu, cutoff);
    const auto pa = mbp::polya_aeppli(l0, alpha);
    const double tv = mbp::exact_tv(H, pa.pmf);
    const double term = mbp::dna_compound_term(n, h, alpha, mu);
    emit(c, {{"command", "stein dna"},
             {"seed", seed},
             {"n", n},
             {"h", h},
             {"alpha", alpha},
             {"mu", mu},
             {"cutoff", cutoff},
             {"lambda0", l0},
             {"d_pc", mbp::dna_d_pc(n, h, alpha, mu)},
             {"compound_term", term},
             {"bound", mbp::dna_bound(n, h, alpha, mu)},
             {"exact_tv", tv},
             {"dominates", tv <= term}});
    return 0;
}

struct MarketFlags {
    std::string config;
    std::optional<double> a, b, r, lambda, p, x;
    std::optional<int> T;

    void attach(CLI::App* app) {
        app->add_option("--config", config, "key=value file with a, b, r, lambda, p, T, x");
        app->add_option("--a", a, "down return");
        app->add_option("--b", b, "up return");
        app->add_option("--r", r, "riskless rate");
        app->add_option("--lambda", lambda, "jump probability");
        app->add_option("--p", p, "probability of an up move given a jump");
        app->add_option("--T", T, "horizon");
        app->add_option("--x", x, "initial capital");
    }

    mbp::MarketParams build() const {
        mbp::MarketParams m;
        if (!config.empty()) m = mbp::MarketParams::from_text(mbp::read_file(config));
        if (a) m.a = *a;
        if (b) m.b = *b;
        if (r) m.r = *r;
        if (lambda) m.lambda = *lambda;
        if (p) m.p = *p;
        if (T) m.T = *T;
        if (x) m.x = *x;
        m.validate();
        return m;
    }
};

int cmd_hedge(const Common& c, const MarketFlags& mf, const std::string& claim, double strike, std::uint64_t seed) {
    const auto m = mf.build();
    const auto prices = mbp::price_paths(m);
    mbp::PathFunctional F = prices.X.back();
    if (claim == "call") F = mbp::european_call(prices, strike);
    else if (claim == "random") {
        auto rng = mbp::make_stream(seed, 0);
        F = mbp::random_functional(prices.space, rng);
    } else if (claim != "discounted") throw std::invalid_argument("unknown claim '" + claim + "'");

    const auto diag = mbp::martingale_diagnostics(m);
    const auto res = mbp::optimal_strategy(m, prices, F, m.x);
    json out{{"command", "hedge"},
             {"seed", seed},
             {"market", {{"a", m.a}, {"b", m.b}, {"r", m.r}, {"lambda", m.lambda}, {"p", m.p}, {"T", m.T}, {"x", m.x}}},
             {"claim", claim},
             {"gap", diag.gap},
             {"K", diag.K},
             {"K_exact", diag.K_exact},
             {"phi", res.strategy.phi.values},
             {"alpha", res.strategy.alpha},
             {"residual_risk", res.residual_risk},
             {"residual_risk_printed_conditioning", res.residual_printed},
             {"self_financing_residual", mbp::self_financing_residual(res.strategy, prices)}};
    if (m.T <= 8) out["oracle_residual_risk"] = mbp::ls_oracle(m, prices, F, m.x).residual_risk;
    if (c.format == "csv") {
        std::string csv = "t,atom,phi\n";
        for (std::size_t t = 0; t < res.strategy.phi.values.size(); ++t)
            for (std::size_t a = 0; a < res.strategy.phi.values[t].size(); ++a)
                csv += csv_row({std::to_string(t + 1), std::to_string(a), mbp::format_double(res.strategy.phi.values[t][a])});
        emit_text(c, csv);
        return 0;
    }
    emit(c, out);
    return 0;
}

int cmd_girsanov(const Common& c, const ModelFlags& mf, double target_lambda, const std::string& target_Q) {
    const auto p = mf.build();
    mbp::TargetMeasure tgt;
    tgt.lambda = target_lambda;
    tgt.Q = target_Q.empty() ? p.Q : mbp::parse_list(target_Q);
    tgt.validate(p);
    const auto space = mbp::make_space(p);
    const auto basis = mbp::build_basis(p);
    const auto L = mbp::girsanov_density(space, tgt, p.T);
    if (c.format == "csv") {
        std::string csv = "rank,probability,density\n";
        for (std::size_t w = 0; w < space->size(); ++w)
            csv += csv_row({std::to_string(w), mbp::format_double(space->probability(w)), mbp::format_double(L.at(w))});
        emit_text(c, csv);
        return 0;
    }
    json drift = json::array();
    for (const auto& [s, v] : mbp::girsanov_drift(p, tgt)) drift.push_back({{"point", mbp::to_string(s)}, {"value", v}});
    emit(c, {{"command", "girsanov"},
             {"seed", p.seed},
             {"params", params_json(p)},
             {"target", {{"lambda", tgt.lambda}, {"Q", tgt.Q}}},
             {"varphi", mbp::girsanov_varphi(p, tgt)},
             {"drift", drift},
             {"expectation_L_T", mbp::expectation(L)},
             {"doleans_residual", mbp::max_abs_diff(mbp::girsanov_density_doleans(basis, space, tgt), L)},
             {"compound_residual", mbp::max_abs_diff(mbp::girsanov_density_compound(space, tgt, p.T), L)}});
    return 0;
}

int cmd_verify(const Common& c, const ModelFlags& mf, int samples) {
    const auto p = mf.build();
    const auto report = mbp::verify_suite(p, p.seed, samples);
    json checks = json::array();
    if (c.verbose)
        for (const auto& chk : report.checks)
            std::cerr << (chk.pass() ? "ok   " : "FAIL ") << chk.name << " " << mbp::format_double(chk.residual) << "\n";
    for (const auto& chk : report.checks)
        checks.push_back({{"name", chk.name},
                          {"residual", chk.residual},
                          {"tolerance", chk.tolerance},
                          {"gating", chk.gating},
                          {"pass", chk.pass()}});
    json out{{"command", "verify"},
             {"seed", p.seed},
             {"params", params_json(p)},
             {"samples", samples},
             {"passed", report.passed()},
             {"checks", checks},
             {"basis_csv", mbp::to_csv(mbp::build_basis(p))}};
    if (const auto* w = report.worst()) out["worst"] = {{"name", w->name}, {"residual", w->residual}, {"tolerance", w->tolerance}};
    emit(c, out);
    if (!report.passed()) {
        const auto* w = report.worst();
        std::cerr << "verify failed: worst offender '" << w->name << "' residual " << mbp::format_double(w->residual)
                  << " > tolerance " << mbp::format_double(w->tolerance) << "\n";
        return 1;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Malliavin calculus on marked binomial processes"};
    app.name("mbp");
    Common common;
    app.add_option("-o,--output", common.output, "write output to a file instead of stdout");
    app.add_option("--format", common.format, "json or csv")->check(CLI::IsMember({"json", "csv"}));
    app.add_flag("--no-timestamp", common.no_timestamp, "omit the timestamp field from JSON output");
    app.add_flag("-v,--verbose", common.verbose, "report progress on stderr");
    app.require_subcommand(1);
    app.fallthrough();

    ModelFlags sim_flags, dec_flags, gir_flags, ver_flags;
    std::size_t paths = 10;
    auto* sim = app.add_subcommand("simulate", "sample paths of the marked binomial process");
    sim_flags.attach(sim);
    sim->add_option("--paths", paths, "number of sampled paths");

    std::string functional = "N";
    bool pseudo = false;
    auto* dec = app.add_subcommand("decompose", "chaos coefficients of a named functional");
    dec_flags.attach(dec);
    dec->add_option("--functional", functional, "N, Y, Ybar or random");
    dec->add_flag("--pseudo", pseudo, "expand in the dZ family instead of dR");

    auto* stein = app.add_subcommand("stein", "Stein bounds");
    stein->require_subcommand(1);
    int hr_n = 10, hr_m = 2;
    double hr_p = 0.5;
    std::uint64_t stein_seed = 0;
    auto* hr = stein->add_subcommand("headrun", "head-run count vs Poisson");
    hr->add_option("--n", hr_n);
    hr->add_option("--m", hr_m);
    hr->add_option("--p", hr_p);
    hr->add_option("--seed", stein_seed, "64-bit seed, echoed in the output");
    int dna_n = 50, dna_h = 5, dna_cut = 40;
    double dna_alpha = 0.2, dna_mu = 0.02;
    auto* dna = stein->add_subcommand("dna", "word clump counts vs Polya-Aeppli");
    dna->set_help_flag("--help", "Print this help message and exit");  // frees --h for the word length
    dna->add_option("--n", dna_n);
    dna->add_option("--h", dna_h);
    dna->add_option("--alpha", dna_alpha);
    dna->add_option("--mu", dna_mu);
    dna->add_option("--cutoff", dna_cut);
    dna->add_option("--seed", stein_seed, "64-bit seed, echoed in the output");

    MarketFlags market;
    std::string claim = "call";
    double strike = 1.05;
    std::uint64_t hedge_seed = 0;
    auto* hedge = app.add_subcommand("hedge", "quadratic hedge in the ternary market");
    market.attach(hedge);
    hedge->add_option("--claim", claim, "call, discounted or random");
    hedge->add_option("--strike", strike, "call strike (default 1.05)");
    hedge->add_option("--seed", hedge_seed, "64-bit seed for --claim random");

    double target_lambda = 0.5;
    std::string target_Q;
    auto* gir = app.add_subcommand("girsanov", "density of a target marked binomial law");
    gir_flags.attach(gir);
    gir->add_option("--target-lambda", target_lambda)->required();
    gir->add_option("--target-Q", target_Q);

    int samples = 5;
    auto* ver = app.add_subcommand("verify", "run the enumeration identity suite");
    ver_flags.attach(ver);
    ver->add_option("--samples", samples, "random functionals per identity group");

    if (argc <= 1) {
        std::cerr << app.help();
        return 2;
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (*sim) return cmd_simulate(common, sim_flags, paths);
        if (*dec) return cmd_decompose(common, dec_flags, functional, pseudo);
        if (*hr) return cmd_headrun(common, hr_n, hr_m, hr_p, stein_seed);
        if (*dna) return cmd_dna(common, dna_n, dna_h, dna_alpha, dna_mu, dna_cut, stein_seed);
        if (*hedge) return cmd_hedge(common, market, claim, strike, hedge_seed);
        if (*gir) return cmd_girsanov(common, gir_flags, target_lambda, target_Q);
        if (*ver) return cmd_verify(common, ver_flags, samples);
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::length_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::domain_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::out_of_range& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 2;
}
