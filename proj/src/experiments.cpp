#include "msieve/experiments.hpp"
#include "msieve/approximation.hpp"
#include "msieve/holder.hpp"
#include "msieve/kernel.hpp"
#include "msieve/select.hpp"
#include "msieve/util.hpp"

#include <chrono>
#include <fstream>
#include <random>
#include <sstream>

namespace msieve {

namespace fs = std::filesystem;
using nlohmann::json;

command_kind parse_command(const std::string& name)
{
    if (name == "select")
        return command_kind::select;
    if (name == "cluster")
        return command_kind::cluster;
    if (name == "rate")
        return command_kind::rate;
    if (name == "approx")
        return command_kind::approx;
    if (name == "lowerbound")
        return command_kind::lowerbound;
    if (name == "audit")
        return command_kind::audit;
    throw config_error("unknown command '" + name + "'");
}

std::string to_string(command_kind c)
{
    switch (c) {
    case command_kind::select: return "select";
    case command_kind::cluster: return "cluster";
    case command_kind::rate: return "rate";
    case command_kind::approx: return "approx";
    case command_kind::lowerbound: return "lowerbound";
    case command_kind::audit: return "audit";
    }
    return "?";
}

namespace {

template <class T>
T value_or(const json& j, const char* key, T fallback)
{
    if (!j.is_object() || !j.contains(key) || j[key].is_null())
        return fallback;
    try {
        return j[key].get<T>();
    } catch (const json::exception& e) {
        throw config_error(std::string("field '") + key + "': " + e.what());
    }
}

const json& require(const json& j, const char* key)
{
    if (!j.is_object() || !j.contains(key))
        throw config_error(std::string("missing field '") + key + "'");
    return j[key];
}

json section(const json& j, const char* key)
{
    return j.is_object() && j.contains(key) ? j[key] : json::object();
}

fs::path resolve(const experiment_config& cfg, const std::string& p)
{
    fs::path path(p);
    return path.is_absolute() ? path : cfg.base_dir / path;
}

void emit(const experiment_config& cfg, run_output& out, const std::string& name, const std::string& contents)
{
    write_file_atomic((cfg.out_dir / name).string(), contents);
    out.files.push_back(name);
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

std::vector<std::size_t> size_list(const json& j, const char* key)
{
    auto v = value_or<std::vector<std::size_t>>(j, key, {});
    if (v.empty())
        throw config_error(std::string("'") + key + "' must be a nonempty list");
    return v;
}

std::pair<int, int> m_range(const json& raw, const sieve_config& sc)
{
    auto r = value_or<std::vector<int>>(raw, "m_range", {2, sc.m_max});
    if (r.size() != 2 || r[0] < 2 || r[1] < r[0])
        throw config_error("m_range must be [lo, hi] with 2 <= lo <= hi");
    if (r[1] > sc.m_max)
        throw config_error("m_range exceeds sieve.m_max");
    return {r[0], r[1]};
}

json kappa_json(const kappa_calibration& k)
{
    return {{"kappa_hat", k.kappa_hat},       {"slope", k.slope},
            {"slope_se", k.slope_se},         {"ci_low", k.ci_low},
            {"ci_high", k.ci_high},           {"rows_used", k.rows_used},
            {"jump_kappa", k.jump_kappa},     {"jump_from_m", k.jump_from_m},
            {"jump_to_m", k.jump_to_m},       {"selected_m_at_kappa_hat", k.selected_m_at_kappa_hat}};
}

json clause_json(const clause_result& c)
{
    return {{"name", c.name},           {"pass", c.pass},          {"worst", c.worst},
            {"witness_x", c.witness_x}, {"witness_y", c.witness_y}, {"detail", c.detail}};
}

std::vector<int> parse_bits(const std::string& s)
{
    std::vector<int> th;
    for (char c : s) {
        if (c != '0' && c != '1')
            throw config_error("theta must be a string of 0/1");
        th.push_back(c - '0');
    }
    return th;
}

}  // namespace

sieve_config sieve_from_json(const json& j)
{
    sieve_config c;
    c.beta_low = value_or(j, "beta_low", c.beta_low);
    c.beta_high = value_or(j, "beta_high", c.beta_high);
    c.a_bar = value_or(j, "a_bar", c.a_bar);
    c.g_tilde = value_or(j, "g_tilde", c.g_tilde);
    c.lambda_bar = value_or(j, "lambda_bar", c.lambda_bar);
    c.kappa = value_or(j, "kappa", c.kappa);
    c.c1 = value_or(j, "c1", c.c1);
    c.m_max = value_or(j, "m_max", c.m_max);
    validate(c);
    return c;
}

em_config em_from_json(const json& j, std::uint64_t seed)
{
    em_config c;
    c.max_iterations = value_or(j, "max_iterations", c.max_iterations);
    c.rel_tolerance = value_or(j, "rel_tolerance", c.rel_tolerance);
    c.n_starts = value_or(j, "n_starts", c.n_starts);
    c.strategy = parse_init_strategy(value_or<std::string>(j, "init_strategy", to_string(c.strategy)));
    c.seed = seed;
    validate(c);
    return c;
}

truth_model truth_from_json(const json& j)
{
    const std::string family = value_or<std::string>(j, "family", "");
    truth_model t;
    t.name = family;
    if (family == "mixture") {
        const mixture mix = mixture_from_json(j);
        t.density = mixture_density(mix);
        t.sampler = [mix](std::size_t n, std::uint64_t seed) { return draw_sample(mix, n, seed); };
    } else if (family == "split_gaussian") {
        split_gaussian g;
        g.s_left = value_or(j, "s_left", g.s_left);
        g.s_right = value_or(j, "s_right", g.s_right);
        t.density = split_gaussian_density(g).density;
        t.sampler = [g](std::size_t n, std::uint64_t seed) { return g.draw(n, seed); };
    } else if (family == "perturbation" || family == "omega") {
        const double alpha = value_or(j, "alpha", 1.0), xi = value_or(j, "xi", 0.2);
        const double beta = value_or(j, "beta", 2.0);
        const base_density base = build_omega(alpha, xi, beta);
        if (family == "omega") {
            t.density = omega_density(base).density;
            t.sampler = [base](std::size_t n, std::uint64_t seed) {
                std::mt19937_64 gen(seed);
                std::normal_distribution<double> z(0.0, draw_sd(1.0));
                std::uniform_real_distribution<double> u(0.0, 1.0);
                sample s;
                s.seed = seed;
                while (s.values.size() < n) {
                    const double x = z(gen);
                    if (u(gen) * base.M_tilde * psi(x) <= base.omega(x))
                        s.values.push_back(x);
                }
                return s;
            };
        } else {
            const int D = require(j, "D").get<int>();
            const auto theta = parse_bits(require(j, "theta").get<std::string>());
            const perturbation_family fam =
                make_family(beta, D, theta, base, build_bump(value_or(j, "beta_high", beta)));
            t.density = family_density(fam).density;
            t.sampler = [fam](std::size_t n, std::uint64_t seed) { return draw_from_family(fam, n, seed).values; };
        }
    } else {
        throw config_error("truth.family must be mixture, split_gaussian, perturbation or omega");
    }
    return t;
}

experiment_config config_from_json(const json& j, command_kind command, const fs::path& base_dir,
                                   const fs::path& out_dir)
{
    if (!j.is_object())
        throw config_error("config must be a JSON object");
    experiment_config cfg;
    cfg.command = command;
    if (j.contains("command") && parse_command(j["command"].get<std::string>()) != command)
        throw config_error("config command does not match the CLI command");
    if (!j.contains("seed") || !j["seed"].is_number_integer())
        throw config_error("config needs an integer seed");
    cfg.seed = j["seed"].get<std::uint64_t>();
    cfg.threads = value_or<unsigned>(j, "threads", 0);
    cfg.raw = j;
    cfg.raw.erase("out");
    cfg.raw["command"] = to_string(command);
    cfg.base_dir = base_dir;
    cfg.out_dir = out_dir;
    return cfg;
}

experiment_config load_config(const fs::path& path, command_kind command, std::optional<std::uint64_t> seed_override,
                              std::optional<fs::path> out_override)
{
    std::ifstream in(path);
    if (!in)
        throw config_error("cannot read config " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw config_error("config is not valid JSON: " + std::string(e.what()));
    }
    if (seed_override)
        j["seed"] = *seed_override;
    const fs::path base = path.parent_path().empty() ? fs::path(".") : path.parent_path();
    fs::path out = out_override ? *out_override
                                : fs::path(value_or<std::string>(j, "out", "out"));
    if (!out.is_absolute() && !out_override)
        out = base / out;
    return config_from_json(j, command, base, out);
}

run_output run_select(const experiment_config& cfg)
{
    run_output out;
    const json& raw = cfg.raw;
    const sample s = read_sample(resolve(cfg, require(raw, "sample").get<std::string>()).string());
    const sieve_config sc = sieve_from_json(section(raw, "sieve"));
    const em_config em = em_from_json(section(raw, "em"), derive_seed(cfg.seed, "em"));
    const auto [lo, hi] = m_range(raw, sc);
    selection_table t = select_model(s, lo, hi, sc, em, thread_budget(cfg.threads));
    out.seeds.emplace_back("em", em.seed);
    for (int m = lo; m <= hi; ++m)
        out.seeds.emplace_back("select/" + std::to_string(m), derive_seed(em.seed, "select", {std::uint64_t(m)}));
    if (value_or(raw, "calibrate_kappa", false)) {
        const kappa_calibration k = calibrate_kappa(t);
        emit(cfg, out, "kappa.json", dump(kappa_json(k)));
        if (value_or(raw, "use_calibrated_kappa", false))
            t = reselect(t, k.kappa_hat);
    }
    emit(cfg, out, "selection.csv", selection_csv(t));
    emit(cfg, out, "selection.json", dump(selection_json(t)));
    emit(cfg, out, "mixture.json", dump(mixture_to_json(t.selected().fit->fitted)));
    out.summary = {{"selected_m", t.selected_m}, {"n", t.n}, {"kappa", t.kappa}};
    return out;
}

run_output run_cluster(const experiment_config& cfg)
{
    run_output out;
    const json& raw = cfg.raw;
    const sample s = read_sample(resolve(cfg, require(raw, "sample").get<std::string>()).string());
    mixture mix;
    if (raw.contains("mixture")) {
        std::ifstream in(resolve(cfg, raw["mixture"].get<std::string>()));
        if (!in)
            throw input_error("cannot read mixture file");
        json mj;
        try {
            in >> mj;
        } catch (const json::exception& e) {
            throw input_error("mixture file is not valid JSON: " + std::string(e.what()));
        }
        mix = mixture_from_json(mj);
    } else {
        run_output sel = run_select(cfg);
        out.files = sel.files;
        out.seeds = sel.seeds;
        std::ifstream in(cfg.out_dir / "mixture.json");
        json mj;
        in >> mj;
        mix = mixture_from_json(mj);
    }
    const clustering c = map_cluster(mix, s);
    std::string csv = "index,label";
    for (std::size_t u = 0; u < mix.size(); ++u)
        csv += ",p" + std::to_string(u);
    csv += "\n";
    for (std::size_t i = 0; i < c.labels.size(); ++i) {
        csv += std::to_string(i) + "," + std::to_string(c.labels[i]);
        for (double p : c.posteriors[i])
            csv += "," + format_double(p);
        csv += "\n";
    }
    emit(cfg, out, "labels.csv", csv);
    out.summary = {{"n", s.values.size()}, {"components", mix.size()}};
    return out;
}

namespace {

procedure_fn penalized_procedure(const json& raw, unsigned threads)
{
    const sieve_config sc = sieve_from_json(section(raw, "sieve"));
    const auto [lo, hi] = m_range(raw, sc);
    const json emj = section(raw, "em");
    em_from_json(emj, 0);
    const bool calibrate = value_or(raw, "calibrate_kappa", false);
    return [sc, lo = lo, hi = hi, emj, calibrate, threads](const sample& s) {
        const em_config em = em_from_json(emj, derive_seed(s.seed.value_or(0), "rate-fit"));
        selection_table t = select_model(s, lo, hi, sc, em, threads);
        if (calibrate)
            t = reselect(t, calibrate_kappa(t).kappa_hat);
        return mixture_density(t.selected().fit->fitted);
    };
}

}  // namespace

run_output run_rate(const experiment_config& cfg)
{
    run_output out;
    const json& raw = cfg.raw;
    const truth_model truth = truth_from_json(require(raw, "truth"));
    const auto n_grid = size_list(raw, "n_grid");
    const int reps = value_or(raw, "reps", 0);
    if (reps < 1)
        throw config_error("reps must be >= 1");
    const double beta = value_or(raw, "beta", 2.0);
    risk_options ro;
    ro.threads = thread_budget(cfg.threads);
    ro.tol = value_or(raw, "hellinger_tol", ro.tol);
    const std::uint64_t seed = derive_seed(cfg.seed, "rate");
    risk_report r = mc_hellinger_risk(truth.density, truth.sampler, penalized_procedure(raw, 1), n_grid, reps, seed, ro);
    out.seeds.emplace_back("rate", seed);
    emit(cfg, out, "risk.csv", risk_csv(r));
    json rows = json::array();
    for (const auto& row : r.rows)
        rows.push_back({{"n", row.n},
                        {"reps", row.reps},
                        {"failures", row.failures},
                        {"mean_risk", row.mean_risk},
                        {"stderr", row.stderr_risk}});
    json j = {{"truth", truth.name},
              {"beta", beta},
              {"target_slope", -2.0 * beta / (2.0 * beta + 1.0)},
              {"rows", rows},
              {"note", r.note}};
    j["slope"] = r.slope ? json(*r.slope) : json(nullptr);
    j["ci_low"] = r.ci_low ? json(*r.ci_low) : json(nullptr);
    j["ci_high"] = r.ci_high ? json(*r.ci_high) : json(nullptr);
    emit(cfg, out, "rate.json", dump(j));
    out.summary = j;
    out.summary.erase("rows");
    return out;
}

run_output run_approx(const experiment_config& cfg)
{
    run_output out;
    const json& raw = cfg.raw;
    const truth_model truth = truth_from_json(require(raw, "truth"));
    const double beta = require(raw, "beta").get<double>();
    const auto grid = value_or<std::vector<double>>(raw, "sigma_grid", {});
    if (grid.empty())
        throw config_error("sigma_grid must be nonempty");
    double M = value_or(raw, "M", truth.density.envelope_M.value_or(0.0));
    if (!(M > 0))
        throw config_error("approx needs an envelope M (config field M)");
    decay_options opt;
    opt.threads = thread_budget(cfg.threads);
    opt.wp.epsilon_floor = value_or(raw, "epsilon_floor", opt.wp.epsilon_floor);
    const decay_curve c = kl_decay_curve(truth.density, beta, M, grid, opt);
    emit(cfg, out, "decay.csv", decay_csv(c));
    json rows = json::array();
    for (const auto& r : c.rows) {
        json row = {{"sigma", r.sigma}, {"components", r.components}, {"ok", r.ok}};
        row["kl"] = r.ok ? json(r.kl) : json(nullptr);
        if (!r.ok)
            row["error"] = r.error;
        rows.push_back(row);
    }
    json j = {{"truth", truth.name}, {"beta", beta}, {"rows", rows}, {"min_slope", 2.0 * beta - 0.5}};
    j["slope"] = c.slope ? json(*c.slope) : json(nullptr);
    emit(cfg, out, "decay.json", dump(j));
    out.summary = {{"slope", j["slope"]}, {"points", c.rows.size()}};
    return out;
}

run_output run_lowerbound(const experiment_config& cfg)
{
    run_output out;
    const json lb = cfg.raw.contains("lowerbound") ? cfg.raw["lowerbound"] : cfg.raw;
    const std::size_t n = value_or<std::size_t>(lb, "n", 100);
    const double beta = value_or(lb, "beta", 1.0);
    const double alpha = value_or(lb, "alpha", 1.0), xi = value_or(lb, "xi", 0.2);
    const double alpha_code = value_or(lb, "alpha_code", 0.5);
    const int D = value_or(lb, "D", choose_D(n, beta));
    const base_density base = build_omega(alpha, xi, beta);
    const bump_spec bump = build_bump(std::max(beta, value_or(lb, "beta_high", beta)));
    const std::uint64_t code_seed = derive_seed(cfg.seed, "vg", {std::uint64_t(D)});
    const auto Theta = vg_subset(D, alpha_code, code_seed);
    out.seeds.emplace_back("vg", code_seed);
    audit_options ao;
    ao.n = n;
    ao.kappa = value_or(lb, "kappa", ao.kappa);
    ao.slack = value_or(lb, "slack", ao.slack);
    ao.threads = thread_budget(cfg.threads);
    const audit_report rep = audit_separation(
        [&](const std::vector<int>& th) { return make_family(beta, D, th, base, bump); }, Theta, beta, D, ao);
    std::string codes;
    for (const auto& th : Theta)
        codes += bits(th) + "\n";
    emit(cfg, out, "theta.txt", codes);
    json aj = audit_json(rep);
    aj["code_size"] = Theta.size();
    emit(cfg, out, "audit.json", dump(aj));
    json s = {{"n", n},
              {"beta", beta},
              {"D", D},
              {"code_size", Theta.size()},
              {"A", rep.A},
              {"lower_bound_value", rep.lower_bound_value},
              {"pass", rep.pass}};
    emit(cfg, out, "lowerbound.json", dump(s));
    out.summary = s;
    out.exit_code = rep.pass ? 0 : 4;
    return out;
}

run_output run_audit(const experiment_config& cfg)
{
    run_output out;
    const json a = cfg.raw.contains("audit") ? cfg.raw["audit"] : cfg.raw;
    const double alpha = value_or(a, "alpha", 1.0), xi = value_or(a, "xi", 0.2);
    const double beta_low = value_or(a, "beta_low", 0.5), beta_high = value_or(a, "beta_high", 2.0);
    const double beta = value_or(a, "beta", beta_high);
    const int D = value_or(a, "D", 8);
    const int n_theta = value_or(a, "n_theta", 10);
    const base_density base = build_omega(alpha, xi, beta_high);
    const bump_spec bump = build_bump(beta_high);
    const class_params P = family_class_params(base, bump, beta_low, beta_high);
    bool pass = true;
    json members = json::array();
    for (int t = 0; t < n_theta; ++t) {
        const std::uint64_t sd = derive_seed(cfg.seed, "audit-theta", {std::uint64_t(t)});
        out.seeds.emplace_back("audit-theta/" + std::to_string(t), sd);
        std::mt19937_64 gen(sd);
        std::vector<int> th(D);
        for (int& b : th)
            b = static_cast<int>(gen() & 1U);
        const class_report r = verify_class_conditions(family_density(make_family(beta, D, th, base, bump)), beta, P);
        json clauses = json::array();
        for (const auto& c : r.clauses)
            clauses.push_back(clause_json(c));
        members.push_back({{"theta", bits(th)}, {"pass", r.pass}, {"clauses", clauses}});
        pass = pass && r.pass;
    }
    json dom = json::array();
    if (value_or(a, "domination", true)) {
        const numeric_density w = omega_density(base).density;
        const double M = base.M_tilde;
        std::vector<clause_result> cs;
        cs.push_back(check_convolution_floor(w, xi, M, floor_sigma_bar(alpha, value_or(a, "kernel_reading", false)) / 2));
        for (const auto& c : check_iterate_envelopes(w, M, 0.1, 1, 0.5))
            cs.push_back(c);
        cs.push_back(check_convolution_envelope(w, M, 1.0, 0.5, 0.5));
        for (int k = 0; k <= 3; ++k)
            cs.push_back(check_iterate_bound(w, M, 0.1, k));
        for (const auto& c : cs) {
            dom.push_back(clause_json(c));
            pass = pass && c.pass;
        }
    }
    json params = {{"gamma", P.gamma}, {"l_plus", P.l_plus}, {"L", P.L},   {"epsilon", P.epsilon},
                   {"C", P.C},         {"alpha", P.alpha},   {"xi", P.xi}, {"M", P.M}};
    json j = {{"beta", beta}, {"D", D}, {"params", params}, {"members", members}, {"domination", dom}, {"pass", pass}};
    emit(cfg, out, "class_audit.json", dump(j));
    out.summary = {{"pass", pass}, {"members", n_theta}};
    out.exit_code = pass ? 0 : 4;
    return out;
}

run_output run_experiment(const experiment_config& cfg)
{
    fs::create_directories(cfg.out_dir);
    const auto t0 = std::chrono::steady_clock::now();
    run_output out;
    switch (cfg.command) {
    case command_kind::select: out = run_select(cfg); break;
    case command_kind::cluster: out = run_cluster(cfg); break;
    case command_kind::rate: out = run_rate(cfg); break;
    case command_kind::approx: out = run_approx(cfg); break;
    case command_kind::lowerbound: out = run_lowerbound(cfg); break;
    case command_kind::audit: out = run_audit(cfg); break;
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    json files = json::array();
    for (const auto& f : out.files)
        files.push_back({{"file", f}, {"sha256", sha256_file((cfg.out_dir / f).string())}});
    json seeds = json::object();
    seeds["root"] = cfg.seed;
    for (const auto& [k, v] : out.seeds)
        seeds[k] = v;
    json manifest = {{"tool", "msieve"},
                     {"version", tool_version},
                     {"command", to_string(cfg.command)},
                     {"config_sha256", sha256_hex(cfg.raw.dump())},
                     {"seeds", seeds},
                     {"wall_clock_seconds", secs},
                     {"outputs", files},
                     {"summary", out.summary},
                     {"exit_code", out.exit_code}};
    write_file_atomic((cfg.out_dir / "manifest.json").string(), dump(manifest));
    return out;
}

json error_json(const std::exception& e)
{
    json j = {{"message", e.what()}};
    if (const auto* me = dynamic_cast<const error*>(&e)) {
        j["error"] = me->kind();
        j["exit_code"] = me->exit_code();
        if (const auto* q = dynamic_cast<const quadrature_error*>(&e)) {
            j["estimate"] = q->estimate();
            j["error_estimate"] = q->error_estimate();
        }
        if (const auto* n = dynamic_cast<const numeric_error*>(&e))
            j["index"] = n->index();
        if (const auto* d = dynamic_cast<const discretization_error*>(&e))
            j["achieved"] = d->achieved();
    } else {
        j["error"] = "internal_error";
        j["exit_code"] = 3;
    }
    return j;
}

}  // namespace msieve
