// Command-line surface for the matrix-product measure library: dominant
// eigendata, word measures, bridge sampling, empirical measures, rate
// functionals and the desk-scale verification probes.

#include <iostream>
#include <map>

#include <CLI11.hpp>
#include <json.hpp>

#include "ldmp/empirical.hpp"
#include "ldmp/model_io.hpp"
#include "ldmp/perron.hpp"
#include "ldmp/rate_finite.hpp"
#include "ldmp/rate_tasep.hpp"
#include "ldmp/rational.hpp"
#include "ldmp/tasep.hpp"
#include "ldmp/verify.hpp"

using namespace ldmp;
using io::fmt;

namespace {

struct GlobalOpts {
    std::uint64_t seed = 0;
    int bins = 100;
    int grid = 1000;
    double tol = 1e-10;
    int bmax = 0;  // 0 means automatic truncation
};

struct ModelArgs {
    std::string model_path;
    bool tasep = false;
    double alpha = 0.0, beta = 0.0;
    int n = 0;
};

io::ModelFile resolve_model(const ModelArgs& args) {
    if (!args.model_path.empty()) return io::load_model_file(args.model_path);
    if (args.tasep) {
        io::ModelFile mf;
        mf.is_tasep = true;
        mf.alpha = args.alpha;
        mf.beta = args.beta;
        return mf;
    }
    throw ValidationError("either --model or --tasep with --alpha/--beta is required");
}

tasep::TruncatedTasepModel build_truncated(const io::ModelFile& mf, int n, const GlobalOpts& g) {
    tasep::TasepParams p{mf.alpha, mf.beta, n};
    return g.bmax > 0 ? tasep::build_tasep_fixed(p, g.bmax) : tasep::build_tasep(p, 1e-12);
}

void add_model_flags(CLI::App* cmd, ModelArgs& args) {
    cmd->add_option("--model", args.model_path, "model file (JSON)");
    cmd->add_flag("--tasep", args.tasep, "use the exclusion-process model");
    cmd->add_option("--alpha", args.alpha, "entry rate");
    cmd->add_option("--beta", args.beta, "exit rate");
    cmd->add_option("--n", args.n, "word / system size");
}

std::vector<int> parse_ns(const std::string& s) {
    std::vector<int> ns;
    std::string cur;
    for (char c : s) {
        if (c == ',') {
            ns.push_back(std::stoi(cur));
            cur.clear();
        } else
            cur += c;
    }
    if (!cur.empty()) ns.push_back(std::stoi(cur));
    if (ns.empty()) throw ValidationError("--ns needs a comma-separated list");
    return ns;
}

void enumerate_words(int alphabet, int n, const std::function<void(const std::vector<int>&)>& fn) {
    std::vector<int> word(n, 0);
    while (true) {
        fn(word);
        int i = n - 1;
        while (i >= 0 && word[i] == alphabet - 1) word[i--] = 0;
        if (i < 0) break;
        ++word[i];
    }
}

std::string word_str(const std::vector<int>& w) {
    std::string s;
    for (int c : w) s += static_cast<char>('0' + c);
    return s;
}

// ------------------------------------------------------------- commands

int cmd_perron(const ModelArgs& margs, const GlobalOpts& g, bool enlarged) {
    io::ModelFile mf = resolve_model(margs);
    rational::RationalModel model;
    if (mf.is_tasep) {
        if (margs.n < 1) throw ValidationError("perron: --tasep requires --n");
        model = build_truncated(mf, margs.n, g).to_rational_model();
    } else {
        model = mf.model;
    }
    perron::PerronData pd = perron::perron_finite(model.symbol_sum(), g.tol);
    std::cout << "lambda = " << fmt(pd.value) << "\n";
    std::cout << "residual = " << fmt(pd.residual) << "\n";
    std::cout << "e =";
    for (double v : pd.right_vector) std::cout << " " << fmt(v);
    std::cout << "\n";
    if (enlarged) {
        rational::EnlargedChain chain = rational::build_enlarged(model, g.tol);
        std::cout << "Lambda = " << fmt(chain.lambda) << "\n";
        double dev = 0.0;
        for (int b = 0; b < chain.matrix_dim; ++b) {
            double s = 0.0;
            for (int a = 0; a < chain.alphabet_size; ++a) s += chain.epsilon[chain.state(a, b)];
            dev = std::max(dev, std::fabs(s - chain.e[b]));
        }
        std::cout << "epsilon_sum_dev = " << fmt(dev) << "\n";
        double rowdev = 0.0;
        for (int r = 0; r < chain.states(); ++r) {
            double s = 0.0;
            for (int c = 0; c < chain.states(); ++c) s += chain.S_frak(r, c);
            rowdev = std::max(rowdev, std::fabs(s - 1.0));
        }
        std::cout << "frak_row_sum_dev = " << fmt(rowdev) << "\n";
        for (int a = 0; a < chain.alphabet_size; ++a) {
            std::cout << "epsilon[" << a << "] =";
            for (int b = 0; b < chain.matrix_dim; ++b)
                std::cout << " " << fmt(chain.epsilon[chain.state(a, b)]);
            std::cout << "\n";
        }
    }
    return 0;
}

int cmd_measure(const ModelArgs& margs, const GlobalOpts& g, const std::string& word,
                bool enumerate) {
    io::ModelFile mf = resolve_model(margs);
    std::cout << "word,probability\n";
    if (mf.is_tasep) {
        int n = margs.n >= 1 ? margs.n : static_cast<int>(word.size());
        if (n < 1) throw ValidationError("measure: need --n or --word");
        tasep::TruncatedTasepModel model = build_truncated(mf, n, g);
        auto emit = [&](const std::vector<int>& w) {
            std::cout << word_str(w) << "," << fmt(tasep::tasep_probability(model, w)) << "\n";
        };
        if (enumerate) {
            if (n > 20) throw SizeLimitError("measure: enumeration capped at N = 20");
            enumerate_words(2, n, emit);
        } else {
            if (word.empty()) throw ValidationError("measure: need --word or --enumerate");
            emit(io::word_from_string(word, 2).symbols);
        }
        return 0;
    }
    const rational::RationalModel& model = mf.model;
    auto emit = [&](const std::vector<int>& w) {
        rational::Word wd(model.alphabet_size, w);
        std::cout << word_str(w) << "," << fmt(rational::word_probability(model, wd)) << "\n";
    };
    if (enumerate) {
        int n = margs.n;
        if (n < 1) throw ValidationError("measure: --enumerate requires --n");
        if (std::pow(model.alphabet_size, n) > (1 << 20))
            throw SizeLimitError("measure: enumeration table too large");
        enumerate_words(model.alphabet_size, n, emit);
    } else {
        if (word.empty()) throw ValidationError("measure: need --word or --enumerate");
        emit(io::word_from_string(word, model.alphabet_size).symbols);
    }
    return 0;
}

int cmd_sample_bridge(const ModelArgs& margs, const GlobalOpts& g, int samples, bool summary) {
    io::ModelFile mf = resolve_model(margs);
    if (margs.n < 1) throw ValidationError("sample-bridge: requires --n");
    const int n = margs.n;
    std::mt19937_64 rng(g.seed);

    std::map<std::pair<int, int>, long long> counts;
    bool header_done = false;
    auto emit = [&](int s, const std::vector<int>& a, const std::vector<int>& b) {
        if (summary) {
            for (size_t i = 0; i < a.size(); ++i) ++counts[{a[i], b[i]}];
            return;
        }
        if (!header_done) {
            std::cout << "sample,step,a,b\n";
            header_done = true;
        }
        for (size_t i = 0; i < a.size(); ++i)
            std::cout << s << "," << i << "," << a[i] << "," << b[i] << "\n";
    };

    if (mf.is_tasep) {
        tasep::TruncatedTasepModel model = build_truncated(mf, n, g);
        tasep::TasepBridge br = tasep::make_tasep_bridge(model, n);
        for (int s = 0; s < samples; ++s) {
            auto path = tasep::sample_tasep_bridge(br, rng);
            emit(s, path.eta, path.zeta);
        }
    } else {
        rational::EnlargedChain chain = rational::build_enlarged(mf.model, g.tol);
        rational::BridgeLaw law = rational::enlarged_bridge(chain, n);
        for (int s = 0; s < samples; ++s) {
            auto xi = rational::sample_bridge(law, rng);
            std::vector<int> a(xi.size()), b(xi.size());
            for (size_t i = 0; i < xi.size(); ++i) {
                a[i] = xi[i] / chain.matrix_dim;
                b[i] = xi[i] % chain.matrix_dim;
            }
            emit(s, a, b);
        }
    }
    if (summary) {
        std::cout << "a,b,frequency\n";
        double total = static_cast<double>(samples) * (n + 1);
        for (const auto& [key, c] : counts)
            std::cout << key.first << "," << key.second << "," << fmt(c / total) << "\n";
    }
    return 0;
}

int cmd_empirical(const std::string& words_path, int alphabet, int k, int bins,
                  const std::string& what) {
    auto words = io::read_words_csv(words_path);
    rational::Word w = io::word_from_string(words.front(), alphabet);
    std::cout << "bin_left,bin_right,word,mass\n";
    if (what == "nu") {
        auto nu = empirical::empirical_k(w, k);
        for (size_t i = 0; i < nu.table_size(); ++i)
            if (nu.weights[i] > 0.0)
                std::cout << "0,1," << nu.word_string(i) << "," << fmt(nu.weights[i]) << "\n";
    } else if (what == "pi") {
        auto sp = empirical::spatial_empirical(w, bins);
        for (int j = 0; j < bins; ++j)
            std::cout << fmt(static_cast<double>(j) / bins) << ","
                      << fmt(static_cast<double>(j + 1) / bins) << ",*," << fmt(sp.masses[j])
                      << "\n";
    } else if (what == "gsm") {
        auto gs = empirical::generalized_spatial(w, k, bins);
        empirical::KWordMeasure codec = empirical::KWordMeasure::zero(alphabet, k);
        for (int j = 0; j < bins; ++j)
            for (size_t i = 0; i < gs.words(); ++i)
                if (gs.at(j, i) > 0.0)
                    std::cout << fmt(static_cast<double>(j) / bins) << ","
                              << fmt(static_cast<double>(j + 1) / bins) << ","
                              << codec.word_string(i) << "," << fmt(gs.at(j, i)) << "\n";
    } else {
        throw ValidationError("empirical: --what must be nu, pi or gsm");
    }
    return 0;
}

int cmd_rate_pair(const std::string& model_path, const std::string& nu2_path) {
    io::ModelFile mf = io::load_model_file(model_path);
    if (mf.is_tasep) throw ValidationError("rate-pair: needs an explicit finite model");
    auto nu2 = io::read_kword_csv(nu2_path, mf.model.alphabet_size, 2);
    rate_finite::PairRateOptions opts;
    auto dual = rate_finite::pair_rate_dual(mf.model, nu2, opts);
    opts.compute_gap = false;
    auto primal = rate_finite::pair_rate_primal(mf.model, nu2, opts);
    std::cout << "primal_value = " << fmt(primal.value) << "\n";
    std::cout << "dual_value = " << fmt(dual.value) << "\n";
    std::cout << "gap = " << fmt(primal.value - dual.value) << "\n";
    std::cout << "primal_iterations = " << primal.iterations << "\n";
    std::cout << "dual_iterations = " << dual.iterations << "\n";
    const int na = mf.model.alphabet_size;
    for (int a = 0; a < na; ++a) {
        std::cout << "p[" << a << "] =";
        for (int ap = 0; ap < na; ++ap) std::cout << " " << fmt(dual.minimizer[a * na + ap]);
        std::cout << "\n";
    }
    return 0;
}

int cmd_rate_profile(double alpha, double beta, const std::string& profile_path, int grid) {
    auto rows = io::read_profile_csv(profile_path);
    rate_tasep::Profile profile{io::resample_profile(rows, grid)};
    tasep::TasepParams params{alpha, beta, std::max(grid, 1)};
    auto rep = rate_tasep::rate_profile(profile, params);
    std::cout << "x,rho,F,G_opt,integrand\n";
    double f = 0.0;
    for (int j = 0; j < grid; ++j) {
        f += profile.rho[j] / grid;
        double integrand = hbin(std::clamp(profile.rho[j], 0.0, 1.0)) + hbin(rep.gdot[j]);
        std::cout << fmt((j + 0.5) / grid) << "," << fmt(profile.rho[j]) << "," << fmt(f) << ","
                  << fmt(rep.g_cum[j + 1]) << "," << fmt(integrand) << "\n";
    }
    std::cout << "value = " << fmt(rep.value) << "\n";
    std::cout << "argmin_x = " << fmt(static_cast<double>(rep.argmin_index) / grid) << "\n";
    std::cout << "iterations = " << rep.iterations << "\n";
    return 0;
}

int cmd_verify_ldp(const ModelArgs& margs, const GlobalOpts& g, const std::string& center,
                   double radius, const std::string& ns_list, const std::string& profile_path,
                   int event_bins, long long samples) {
    io::ModelFile mf = resolve_model(margs);
    auto ns = parse_ns(ns_list);
    verify::LdCurveOptions opts;
    opts.seed = g.seed;
    opts.mc_samples = samples;
    verify::LDEstimate est;
    nlohmann::json params;
    if (mf.is_tasep) {
        if (profile_path.empty()) throw ValidationError("verify-ldp: --tasep requires --profile");
        auto rows = io::read_profile_csv(profile_path);
        Vec rho = io::resample_profile(rows, event_bins);
        Vec masses(event_bins, 0.0);
        for (int j = 0; j < event_bins; ++j) masses[j] = rho[j] / event_bins;
        verify::ProfileBall ball{masses, radius};
        est = verify::ld_curve(tasep::TasepParams{mf.alpha, mf.beta, ns.front()}, ball, ns, opts);
        params = {{"alpha", mf.alpha}, {"beta", mf.beta}, {"radius", radius}, {"bins", event_bins}};
    } else {
        if (center.empty()) throw ValidationError("verify-ldp: needs --center word");
        int k = static_cast<int>(center.size());
        auto nu = empirical::KWordMeasure::zero(mf.model.alphabet_size, k);
        nu.weights[nu.encode(io::word_from_string(center, mf.model.alphabet_size).symbols)] = 1.0;
        verify::KWordBall ball{nu, radius};
        est = verify::ld_curve(mf.model, ball, ns, opts);
        params = {{"center", center}, {"radius", radius}, {"k", k}};
    }
    for (size_t i = 0; i < est.ns.size(); ++i) {
        nlohmann::json rec = {
            {"command", "verify-ldp"},
            {"params", params},
            {"n", est.ns[i]},
            {"probability", est.probability[i]},
            {"wilson_lo", est.wilson_lo[i]},
            {"wilson_hi", est.wilson_hi[i]},
            {"rate", est.empty[i] ? nlohmann::json() : nlohmann::json(est.rate[i])},
            {"exact", static_cast<bool>(est.exact[i])},
            {"empty", static_cast<bool>(est.empty[i])},
        };
        std::cout << rec.dump() << "\n";
    }
    return 0;
}

int cmd_stationary_check(double alpha, double beta, int n, const GlobalOpts& g) {
    tasep::TasepParams params{alpha, beta, n};
    tasep::TruncatedTasepModel model =
        g.bmax > 0 ? tasep::build_tasep_fixed(params, g.bmax) : tasep::build_tasep(params, 1e-12);
    Vec pi = tasep::generator_stationary(params);
    double worst = 0.0;
    std::vector<int> word(n, 0);
    for (size_t idx = 0; idx < pi.size(); ++idx) {
        for (int i = 0; i < n; ++i) word[i] = static_cast<int>((idx >> (n - 1 - i)) & 1u);
        worst = std::max(worst, std::fabs(pi[idx] - tasep::tasep_probability(model, word)));
    }
    std::cout << "max_abs_deviation = " << fmt(worst) << "\n";
    return 0;
}

int cmd_fluid_check(const std::string& mode, int n, int runs, const GlobalOpts& g) {
    std::vector<tasep::StepLaw> gi(1), gb(1);
    double z0 = 0.0;
    if (mode == "zero-drift") {
        gi[0] = tasep::mu_interior();
        gb[0] = tasep::mu_boundary();
        z0 = 0.3;
    } else if (mode == "neg-drift") {
        tasep::StepLaw t;
        t.at(0, 0) = 0.25;
        t.at(0, -1) = 0.35;
        t.at(1, 0) = 0.25;
        t.at(1, 1) = 0.15;
        gi[0] = t;
        gb[0] = tasep::mu_boundary();
        z0 = 0.0;
    } else {
        throw ValidationError("fluid-check: --case must be zero-drift or neg-drift");
    }
    auto ode = tasep::fluid_limit_ode(gi, gb, z0, g.grid);
    std::cout << "run,sup_distance\n";
    int within = 0;
    for (int r = 0; r < runs; ++r) {
        std::mt19937_64 rng(g.seed + static_cast<std::uint64_t>(r) * 0x9e3779b97f4a7c15ull);
        auto path = tasep::sample_tilted(gi, gb, n, static_cast<int>(std::lround(z0 * n)), rng);
        auto triple = tasep::triple_empirical(path.eta, path.zeta, g.bins);
        double sup = 0.0;
        for (int j = 0; j <= g.grid; ++j) {
            double x = static_cast<double>(j) / g.grid;
            sup = std::max(sup, std::fabs(triple.z_at(x) - ode.z[j]));
        }
        if (sup < 0.02) ++within;
        std::cout << r << "," << fmt(sup) << "\n";
    }
    std::cout << "fraction_within_002 = " << fmt(static_cast<double>(within) / runs) << "\n";
    return 0;
}

void error_record(const std::string& kind, const std::string& message) {
    nlohmann::json rec = {{"error", kind}, {"message", message}};
    std::cerr << rec.dump() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"matrix-product measures, bridges and rate functionals"};
    app.require_subcommand(1);

    GlobalOpts g;
    app.add_option("--seed", g.seed, "random seed")->capture_default_str();
    app.add_option("--bins", g.bins, "spatial bins")->capture_default_str();
    app.add_option("--grid", g.grid, "profile grid cells")->capture_default_str();
    app.add_option("--tol", g.tol, "numeric tolerance")->capture_default_str();
    app.add_option("--bmax", g.bmax, "fixed label truncation (0 = auto)")->capture_default_str();

    ModelArgs perron_args;
    bool perron_enlarged = false;
    auto* c_perron = app.add_subcommand("perron", "dominant eigendata of a model");
    add_model_flags(c_perron, perron_args);
    c_perron->add_flag("--enlarged", perron_enlarged, "include the enlarged-chain data");

    ModelArgs measure_args;
    std::string measure_word;
    bool measure_enum = false;
    auto* c_measure = app.add_subcommand("measure", "word probabilities");
    add_model_flags(c_measure, measure_args);
    c_measure->add_option("--word", measure_word, "compact word like 0110");
    c_measure->add_flag("--enumerate", measure_enum, "full table over A^N");

    ModelArgs bridge_args;
    int bridge_samples = 1;
    bool bridge_summary = false;
    auto* c_bridge = app.add_subcommand("sample-bridge", "exact bridge samples");
    add_model_flags(c_bridge, bridge_args);
    c_bridge->add_option("--samples", bridge_samples, "number of samples")->capture_default_str();
    c_bridge->add_flag("--summary", bridge_summary, "emit state frequencies instead of paths");

    std::string emp_words, emp_what = "gsm";
    int emp_k = 2, emp_alphabet = 2;
    auto* c_emp = app.add_subcommand("empirical", "empirical measures of a word file");
    c_emp->add_option("--words", emp_words, "word CSV file")->required();
    c_emp->add_option("--k", emp_k, "block order")->capture_default_str();
    c_emp->add_option("--alphabet", emp_alphabet, "alphabet size")->capture_default_str();
    c_emp->add_option("--what", emp_what, "nu | pi | gsm")->capture_default_str();

    std::string rp_model, rp_nu2;
    auto* c_rate_pair = app.add_subcommand("rate-pair", "pair rate functional, primal and dual");
    c_rate_pair->add_option("--model", rp_model, "model file")->required();
    c_rate_pair->add_option("--nu2", rp_nu2, "pair measure CSV (word,mass)")->required();

    double prof_alpha = 0.0, prof_beta = 0.0;
    std::string prof_path;
    auto* c_rate_profile = app.add_subcommand("rate-profile", "density profile rate functional");
    c_rate_profile->add_option("--alpha", prof_alpha, "entry rate")->required();
    c_rate_profile->add_option("--beta", prof_beta, "exit rate")->required();
    c_rate_profile->add_option("--profile", prof_path, "profile CSV (x,rho)")->required();

    ModelArgs ldp_args;
    std::string ldp_center, ldp_ns = "8,12,16", ldp_profile;
    double ldp_radius = 0.1;
    int ldp_event_bins = 8;
    long long ldp_samples = 200000;
    auto* c_ldp = app.add_subcommand("verify-ldp", "finite-size decay-rate curve");
    add_model_flags(c_ldp, ldp_args);
    c_ldp->add_option("--center", ldp_center, "ball center word (order from its length)");
    c_ldp->add_option("--radius", ldp_radius, "event radius")->capture_default_str();
    c_ldp->add_option("--ns", ldp_ns, "comma-separated sizes")->capture_default_str();
    c_ldp->add_option("--profile", ldp_profile, "profile CSV for the spatial event");
    c_ldp->add_option("--event-bins", ldp_event_bins, "bins of the spatial event")
        ->capture_default_str();
    c_ldp->add_option("--samples", ldp_samples, "Monte Carlo sample count")->capture_default_str();

    double sc_alpha = 0.0, sc_beta = 0.0;
    int sc_n = 0;
    auto* c_sc = app.add_subcommand("stationary-check", "matrix measure against the generator");
    c_sc->add_option("--alpha", sc_alpha, "entry rate")->required();
    c_sc->add_option("--beta", sc_beta, "exit rate")->required();
    c_sc->add_option("--n", sc_n, "system size")->required();

    std::string fc_case = "zero-drift";
    int fc_n = 10000, fc_runs = 20;
    auto* c_fc = app.add_subcommand("fluid-check", "tilted walk against its limit path");
    c_fc->add_option("--case", fc_case, "zero-drift | neg-drift")->capture_default_str();
    c_fc->add_option("--n", fc_n, "walk length")->capture_default_str();
    c_fc->add_option("--runs", fc_runs, "repetitions")->capture_default_str();

    for (CLI::App* sub : app.get_subcommands([](CLI::App*) { return true; })) sub->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        error_record("usage", e.what());
        return 1;
    }

    try {
        if (c_perron->parsed()) return cmd_perron(perron_args, g, perron_enlarged);
        if (c_measure->parsed()) return cmd_measure(measure_args, g, measure_word, measure_enum);
        if (c_bridge->parsed()) return cmd_sample_bridge(bridge_args, g, bridge_samples, bridge_summary);
        if (c_emp->parsed()) return cmd_empirical(emp_words, emp_alphabet, emp_k, g.bins, emp_what);
        if (c_rate_pair->parsed()) return cmd_rate_pair(rp_model, rp_nu2);
        if (c_rate_profile->parsed())
            return cmd_rate_profile(prof_alpha, prof_beta, prof_path, g.grid);
        if (c_ldp->parsed())
            return cmd_verify_ldp(ldp_args, g, ldp_center, ldp_radius, ldp_ns, ldp_profile,
                                  ldp_event_bins, ldp_samples);
        if (c_sc->parsed()) return cmd_stationary_check(sc_alpha, sc_beta, sc_n, g);
        if (c_fc->parsed()) return cmd_fluid_check(fc_case, fc_n, fc_runs, g);
        error_record("usage", "no subcommand given");
        return 1;
    } catch (const ValidationError& e) {
        error_record("validation", e.what());
        return 2;
    } catch (const RegionViolationError& e) {
        error_record("validation", e.what());
        return 2;
    } catch (const SupportViolationError& e) {
        error_record("validation", e.what());
        return 2;
    } catch (const SizeLimitError& e) {
        error_record("validation", e.what());
        return 2;
    } catch (const Error& e) {
        error_record("numerical", e.what());
        return 3;
    } catch (const std::exception& e) {
        error_record("internal", e.what());
        return 3;
    }
}
