#include "latentpath/cli.hpp"

#include "latentpath/dataset.hpp"
#include "latentpath/efa.hpp"
#include "latentpath/error.hpp"
#include "latentpath/fit_indices.hpp"
#include "latentpath/mediation.hpp"
#include "latentpath/model_spec.hpp"
#include "latentpath/psychometrics.hpp"
#include "latentpath/report.hpp"
#include "latentpath/sem.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>
#include <openssl/evp.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

namespace latentpath {

using nlohmann::ordered_json;

std::string sha256_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open '" + path + "'");
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
    char buf[1 << 15];
    while (in) {
        in.read(buf, sizeof buf);
        if (in.gcount() > 0) EVP_DigestUpdate(ctx, buf, static_cast<std::size_t>(in.gcount()));
    }
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx, digest, &len);
    EVP_MD_CTX_free(ctx);
    std::string hex;
    for (unsigned int i = 0; i < len; ++i) hex += fmt::format("{:02x}", digest[i]);
    return hex;
}

namespace {

/// Input problems that map to the usage exit status.
class UsageError : public Error {
public:
    using Error::Error;
};

std::uint64_t default_seed() {
    if (const char* env = std::getenv("LATENTPATH_SEED")) {
        try {
            return std::stoull(env);
        } catch (const std::exception&) {
            throw UsageError(fmt::format("LATENTPATH_SEED='{}' is not an unsigned integer", env));
        }
    }
    return 1;
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::stringstream in(s);
    std::string part;
    while (std::getline(in, part, sep)) {
        if (!part.empty()) out.push_back(part);
    }
    return out;
}

struct Options {
    std::string model;
    std::string data;
    std::string delimiter = ",";
    bool tab = false;
    std::string divisor = "n-1";
    std::string format = "text";
    std::string json_path;
    std::string stars = "default";
    int max_iter = 500;
    double gtol = 1e-6;
    std::string chisq_n = "n-1";
    std::string identification = "marker";
    std::uint64_t seed = 0;
    int jobs = 1;

    // efa
    std::string retain = "kaiser";
    double suppress = 0.4;
    std::string rotation = "varimax";
    std::string extraction = "pc";
    std::string items;

    // reliability
    std::vector<std::string> constructs;

    // mediate
    std::vector<std::string> effects;
    int boot = 2000;
    double level = 0.95;
    std::string method = "bootstrap";
    double alpha = 0.05;

    // simulate
    std::string config;
    int n = 0;
    std::string out_path;

    // report
    std::vector<std::string> frequencies;

    StarConvention star_convention() const {
        return stars == "conventional" ? StarConvention::Conventional : StarConvention::Default;
    }
    TableOptions table() const {
        if (tab) return {'\t'};
        if (delimiter == "\\t" || delimiter == "tab") return {'\t'};
        if (delimiter.size() != 1) throw UsageError("--delimiter takes a single character");
        return {delimiter[0]};
    }
    Divisor moment_divisor() const { return divisor == "n" ? Divisor::N : Divisor::NMinusOne; }
    EstimationOptions estimation() const {
        EstimationOptions o;
        o.max_iter = max_iter;
        o.gtol = gtol;
        o.multiplier = chisq_n == "n" ? ChiSquareMultiplier::N : ChiSquareMultiplier::NMinusOne;
        o.identification =
            identification == "std" ? Identification::VarianceStandardized : Identification::Marker;
        return o;
    }
    ordered_json estimation_json() const {
        return ordered_json{{"max_iter", max_iter},   {"gtol", gtol},          {"chisq_n", chisq_n},
                            {"divisor", divisor},     {"identification", identification}};
    }
};

/// Collected output of one subcommand.
struct Run {
    ordered_json doc;
    std::string text;
    int status = kSuccess;

    void table(const TextTable& t) { text += t.render() + "\n"; }
    void note(const std::string& s) { text += s + "\n"; }
};

ordered_json file_entry(const std::string& path) {
    if (path.empty()) return nullptr;
    return ordered_json{{"path", path}, {"sha256", sha256_file(path)}};
}

void provenance(Run& run, const std::string& command, const Options& o, const ordered_json& options) {
    ordered_json p;
    p["tool"] = "latentpath";
    p["version"] = "0.1.0";
    p["command"] = command;
    p["model"] = file_entry(o.model);
    p["data"] = file_entry(o.data);
    p["seed"] = o.seed;
    p["options"] = options;
    run.doc = make_document(p);

    run.text += fmt::format("# latentpath {}\n", command);
    if (!o.model.empty()) run.text += fmt::format("# model: {} sha256={}\n", o.model, p["model"]["sha256"].get<std::string>());
    if (!o.data.empty()) run.text += fmt::format("# data: {} sha256={}\n", o.data, p["data"]["sha256"].get<std::string>());
    run.text += fmt::format("# seed: {}\n", o.seed);
    std::string opts;
    for (const auto& [k, v] : options.items()) opts += fmt::format(" {}={}", k, v.is_string() ? v.get<std::string>() : v.dump());
    run.text += fmt::format("# options:{}\n\n", opts);
}

Dataset load_data(const Options& o) { return load_table(o.data, o.table()); }

SampleMoments model_moments(const Dataset& data, const ModelSpec& spec, const Options& o) {
    return covariance(data.select(spec.indicators()), o.moment_divisor());
}

void require(const std::string& value, const char* flag) {
    if (value.empty()) throw UsageError(fmt::format("{} is required", flag));
}

/// Fit, fit indices and tables shared by `fit`, `cfa` and `report`.
FitResult run_fit(Run& run, const ModelSpec& spec, const SampleMoments& moments, const Options& o,
                  const std::string& key, const std::string& title) {
    FitResult r = fit(spec, moments, o.estimation());
    run.doc[key] = to_json(r);
    run.note(fmt::format("== {} ==", title));
    run.note(fmt::format("n = {}, free parameters = {}, df = {}, chi-square = {} (multiplier {}), iterations = {}", r.n,
                         r.model.free_count(), r.df, fixed(r.chi_square), o.chisq_n, r.iterations));
    if (!r.converged) {
        run.note("WARNING: estimation did not converge: " + r.message);
        run.status = kDomainError;
    }
    if (!r.heywood.empty()) {
        std::string names;
        for (const auto& h : r.heywood) names += " " + h;
        run.note("WARNING: negative variance estimates (Heywood cases):" + names);
    }
    run.note("");
    run.table(regression_weights(r, o.star_convention()));
    if (r.df > 0) {
        const FitIndexReport idx = indices(r, moments.covariance);
        run.doc[key]["indices"] = to_json(idx);
        run.table(fit_summary(idx));
    } else {
        run.doc[key]["indices"] = nullptr;
        run.note("Saturated model (df = 0): fit indices are not defined.\n");
    }
    return r;
}

ordered_json with_estimation(const Options& o, ordered_json extra = ordered_json::object()) {
    ordered_json j = o.estimation_json();
    for (const auto& [k, v] : extra.items()) j[k] = v;
    return j;
}

// -- reliability ------------------------------------------------------------

std::vector<LatentDefinition> parse_constructs(const std::vector<std::string>& flags) {
    std::vector<LatentDefinition> out;
    for (const auto& f : flags) {
        const auto eq = f.find('=');
        if (eq == std::string::npos || eq == 0) throw UsageError(fmt::format("--construct '{}' is not Name=a,b,c", f));
        LatentDefinition d{f.substr(0, eq), split(f.substr(eq + 1), ',')};
        if (d.indicators.size() < 2) throw UsageError(fmt::format("construct '{}' needs at least two items", d.name));
        out.push_back(std::move(d));
    }
    return out;
}

void run_reliability(Run& run, const Dataset& data, const std::vector<LatentDefinition>& constructs,
                     const Options& o) {
    std::vector<ConstructReliability> rows;
    for (const auto& c : constructs) {
        const Dataset block = data.select(c.indicators);
        ConstructReliability r;
        r.name = c.name;
        r.items = c.indicators;
        r.alpha = cronbach_alpha(block.values);
        const SampleMoments m = covariance(block, o.moment_divisor());
        try {
            r.kmo = kmo(m.correlation);
        } catch (const NumericalError&) {
        }
        try {
            r.bartlett = bartlett(m.correlation, m.n);
        } catch (const Error&) {
        }
        rows.push_back(std::move(r));
    }

    // Joint confirmatory model for standardized loadings and latent correlations.
    const ModelSpec joint = make_measurement_model(constructs);
    const SampleMoments moments = model_moments(data, joint, o);
    EstimationOptions est = o.estimation();
    est.standard_errors = false;
    const FitResult cfa = fit(joint, moments, est);
    if (!cfa.converged) {
        run.note("WARNING: measurement model did not converge: " + cfa.message);
        run.status = kDomainError;
    }
    std::vector<std::string> latents = cfa.model.eta;
    latents.insert(latents.end(), cfa.model.xi.begin(), cfa.model.xi.end());
    std::vector<double> aves;
    std::vector<std::string> names;
    Eigen::MatrixXd corr(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.size()));
    for (auto& r : rows) {
        for (const auto& item : r.items) r.loadings.push_back(standardized_loading(cfa, item));
        r.cr = composite_reliability(r.loadings);
        r.ave = average_variance_extracted(r.loadings);
        aves.push_back(r.ave);
        names.push_back(r.name);
    }
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t j = 0; j < rows.size(); ++j) {
            const auto a = std::find(latents.begin(), latents.end(), rows[i].name) - latents.begin();
            const auto b = std::find(latents.begin(), latents.end(), rows[j].name) - latents.begin();
            corr(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = cfa.standardized.latent_correlation(a, b);
        }
    }
    const FornellLarcker fl = fornell_larcker(names, aves, corr);

    ordered_json list = ordered_json::array();
    for (const auto& r : rows) list.push_back(to_json(r));
    run.doc["reliability"] = {{"constructs", list}, {"fornell_larcker", to_json(fl)},
                              {"measurement_converged", cfa.converged}};
    run.table(reliability_table(rows, o.star_convention()));
    run.table(convergent_validity(rows));
    run.table(discriminant_validity(fl));
}

// -- mediation --------------------------------------------------------------

std::vector<EffectDecomposition> run_mediation(Run& run, const Dataset& data, const ModelSpec& spec,
                                               const FitResult* fitted, const Options& o) {
    std::vector<EffectPath> effects;
    for (const auto& e : o.effects) {
        try {
            effects.push_back(EffectPath::parse(e));
        } catch (const Error& ex) {
            throw UsageError(ex.what());
        }
    }
    std::vector<EffectDecomposition> out;
    if (o.method == "delta") {
        FitResult own;
        if (!fitted) {
            own = fit(spec, model_moments(data, spec, o), o.estimation());
            fitted = &own;
        }
        for (const auto& e : effects) out.push_back(delta_interval(*fitted, e, o.level));
    } else {
        BootstrapOptions b;
        b.replicates = o.boot;
        b.level = o.level;
        b.seed = o.seed;
        b.workers = o.jobs;
        b.estimation = o.estimation();
        out = bootstrap_ci(data, spec, effects, b);
    }
    ordered_json list = ordered_json::array();
    for (const auto& d : out) list.push_back(to_json(d));
    run.doc["effects"] = list;
    const auto checks = check_additivity(out);
    ordered_json add = ordered_json::array();
    for (const auto& c : checks) add.push_back(to_json(c));
    run.doc["additivity"] = add;
    run.table(effects_table(out));
    run.table(additivity_table(checks));
    return out;
}

void run_hypotheses(Run& run, const FitResult& result, const std::vector<EffectDecomposition>& effects,
                    const Options& o) {
    const bool labelled = std::any_of(result.estimates.begin(), result.estimates.end(), [](const auto& e) {
        return e.kind == ParameterKind::Path && !e.label.empty();
    });
    if (!labelled && effects.empty()) return;
    const auto verdicts = classify_hypotheses(result, effects, o.alpha);
    ordered_json list = ordered_json::array();
    for (const auto& v : verdicts) list.push_back(to_json(v));
    run.doc["hypotheses"] = list;
    run.table(hypotheses_table(verdicts));
}

// -- subcommands --------------------------------------------------------------

void cmd_fit(Run& run, const Options& o, bool measurement) {
    require(o.model, "--model");
    require(o.data, "--data");
    provenance(run, measurement ? "cfa" : "fit", o, with_estimation(o));
    ModelSpec spec = load_model(o.model);
    if (measurement) spec = measurement_only(spec);
    const Dataset data = load_data(o);
    const SampleMoments moments = model_moments(data, spec, o);
    const FitResult r = run_fit(run, spec, moments, o, "fit", measurement ? "Measurement model" : "Structural model");
    if (measurement) {
        std::vector<LatentDefinition> constructs = spec.latents;
        run_reliability(run, data, constructs, o);
    }
}

void cmd_efa(Run& run, const Options& o) {
    require(o.data, "--data");
    provenance(run, "efa", o,
               ordered_json{{"retain", o.retain}, {"suppress", o.suppress}, {"rotation", o.rotation},
                            {"extraction", o.extraction}, {"items", o.items}, {"divisor", o.divisor}});
    const Dataset data = load_data(o);
    std::vector<std::string> items = split(o.items, ',');
    if (items.empty()) {
        for (int j = 0; j < data.cols(); ++j) {
            if (data.values.col(j).array().isFinite().any()) items.push_back(data.names[static_cast<std::size_t>(j)]);
        }
    }
    const SampleMoments m = covariance(data.select(items), o.moment_divisor());
    if (m.has_zero_variance()) throw DataError("items with zero variance cannot enter a correlation-based analysis");

    Retention retention = Retention::kaiser();
    if (o.retain.rfind("m=", 0) == 0) {
        try {
            retention = Retention::count(std::stoi(o.retain.substr(2)));
        } catch (const std::exception&) {
            throw UsageError("--retain expects kaiser or m=<k>");
        }
    } else if (o.retain != "kaiser") {
        throw UsageError("--retain expects kaiser or m=<k>");
    }
    ExtractionOptions eo;
    eo.method = o.extraction == "paf" ? Extraction::PrincipalAxis : Extraction::PrincipalComponents;

    ordered_json adequacy;
    try {
        adequacy["kmo"] = kmo(m.correlation);
    } catch (const NumericalError&) {
        adequacy["kmo"] = nullptr;
    }
    const BartlettResult b = bartlett(m.correlation, m.n);
    adequacy["bartlett"] = {{"chi_square", b.chi_square}, {"df", b.df}, {"p_value", b.p_value}};
    run.doc["adequacy"] = adequacy;
    run.note(fmt::format("KMO = {}, Bartlett chi-square = {} (df {}, p = {}) {}",
                         adequacy["kmo"].is_null() ? "undefined" : fixed(adequacy["kmo"].get<double>()),
                         fixed(b.chi_square), b.df, fixed(b.p_value), stars(b.p_value, o.star_convention())));
    run.note("");

    LoadingMatrix l = extract(m.correlation, retention, items, eo);
    if (o.rotation == "varimax") l = varimax(l);
    run.doc["efa"] = to_json(l);
    run.table(variance_explained(l));
    run.table(component_matrix(l, o.suppress));
}

void cmd_reliability(Run& run, const Options& o) {
    require(o.data, "--data");
    provenance(run, "reliability", o, with_estimation(o, {{"constructs", o.constructs}}));
    std::vector<LatentDefinition> constructs = parse_constructs(o.constructs);
    if (constructs.empty()) {
        if (o.model.empty()) throw UsageError("reliability needs --construct or --model");
        constructs = load_model(o.model).latents;
    }
    run_reliability(run, load_data(o), constructs, o);
}

void cmd_mediate(Run& run, const Options& o) {
    require(o.model, "--model");
    require(o.data, "--data");
    if (o.effects.empty()) throw UsageError("mediate needs at least one --effect");
    provenance(run, "mediate", o,
               with_estimation(o, {{"effects", o.effects}, {"method", o.method}, {"boot", o.boot}, {"level", o.level}}));
    const ModelSpec spec = load_model(o.model);
    const Dataset data = load_data(o);
    const SampleMoments moments = model_moments(data, spec, o);
    EstimationOptions est = o.estimation();
    const FitResult r = fit(spec, moments, est);
    if (!r.converged) {
        run.note("WARNING: estimation did not converge: " + r.message);
        run.status = kDomainError;
        return;
    }
    const auto effects = run_mediation(run, data, spec, &r, o);
    run_hypotheses(run, r, effects, o);
}

void cmd_simulate(Run& run, const Options& o) {
    require(o.model, "--model");
    ordered_json config = ordered_json::object();
    if (!o.config.empty()) {
        std::ifstream in(o.config);
        try {
            config = ordered_json::parse(in);
        } catch (const nlohmann::json::exception& e) {
            throw UsageError(fmt::format("cannot parse simulation config '{}': {}", o.config, e.what()));
        }
    }
    Options eff = o;
    if (eff.n <= 0) eff.n = config.value("n", 500);
    if (eff.n <= 0) throw UsageError("--n must be positive");
    provenance(run, "simulate", eff,
               ordered_json{{"n", eff.n}, {"config", file_entry(o.config)}, {"out", o.out_path}});
    const ModelSpec spec = load_model(o.model);
    const ParamMatrices m = build_matrices(spec, spec.indicators());

    ParameterDefaults defaults;
    if (config.contains("defaults")) {
        const auto& d = config["defaults"];
        defaults.loading = d.value("loading", defaults.loading);
        defaults.path = d.value("path", defaults.path);
        defaults.latent_variance = d.value("latent_variance", defaults.latent_variance);
        defaults.latent_covariance = d.value("latent_covariance", defaults.latent_covariance);
        defaults.disturbance_variance = d.value("disturbance_variance", defaults.disturbance_variance);
        defaults.error_variance = d.value("error_variance", defaults.error_variance);
    }
    std::vector<std::pair<std::string, double>> values;
    if (config.contains("parameters")) {
        for (const auto& [k, v] : config["parameters"].items()) values.emplace_back(k, v.get<double>());
    }
    const std::vector<double> theta = assign_parameters(m, values, defaults);
    const Dataset sim = simulate(m, theta, eff.n, o.seed);

    ordered_json planted = ordered_json::object();
    for (std::size_t i = 0; i < theta.size(); ++i) planted[m.parameters[i].name] = theta[i];
    run.doc["planted"] = planted;
    run.doc["rows"] = sim.rows();
    run.doc["columns"] = sim.names;
    if (!o.out_path.empty()) {
        write_table(sim, o.out_path);
        run.doc["out"] = o.out_path;
        run.note(fmt::format("wrote {} rows x {} columns to {}", sim.rows(), sim.cols(), o.out_path));
    } else {
        std::string csv;
        for (std::size_t j = 0; j < sim.names.size(); ++j) csv += (j ? "," : "") + sim.names[j];
        csv += "\n";
        for (int i = 0; i < sim.rows(); ++i) {
            for (int j = 0; j < sim.cols(); ++j) csv += fmt::format("{}{}", j ? "," : "", sim.values(i, j));
            csv += "\n";
        }
        run.text += csv;
    }
}

void cmd_report(Run& run, const Options& o) {
    require(o.model, "--model");
    require(o.data, "--data");
    provenance(run, "report", o,
               with_estimation(o, {{"effects", o.effects}, {"method", o.method}, {"boot", o.boot}, {"level", o.level},
                                   {"frequencies", o.frequencies}}));
    const ModelSpec spec = load_model(o.model);
    const Dataset data = load_data(o);

    if (!o.frequencies.empty()) {
        ordered_json freq = ordered_json::object();
        for (const auto& v : o.frequencies) {
            const auto rows = frequency_table(data, v);
            ordered_json list = ordered_json::array();
            for (const auto& r : rows) list.push_back({{"level", r.level}, {"count", r.count}, {"percentage", r.percentage}});
            freq[v] = list;
            run.table(frequency_table_text(v, rows));
        }
        run.doc["frequencies"] = freq;
    }

    run_reliability(run, data, spec.latents, o);
    const ModelSpec cfa_spec = measurement_only(spec);
    run_fit(run, cfa_spec, model_moments(data, cfa_spec, o), o, "cfa", "Measurement model");
    const FitResult r = run_fit(run, spec, model_moments(data, spec, o), o, "fit", "Structural model");
    std::vector<EffectDecomposition> effects;
    if (!o.effects.empty()) effects = run_mediation(run, data, spec, &r, o);
    run_hypotheses(run, r, effects, o);
}

void add_io(CLI::App* sub, Options& o, bool model, bool data) {
    if (model) sub->add_option("--model", o.model, "Model file")->check(CLI::ExistingFile);
    if (data) {
        sub->add_option("--data", o.data, "Data table with a header row")->check(CLI::ExistingFile);
        auto* d = sub->add_option("--delimiter", o.delimiter, "Field delimiter (default ',')");
        sub->add_flag("--tab", o.tab, "Tab-separated data")->excludes(d);
        sub->add_option("--divisor", o.divisor, "Covariance divisor")->check(CLI::IsMember({"n", "n-1"}));
    }
    sub->add_option("--format", o.format, "Standard output format")->check(CLI::IsMember({"text", "json"}));
    sub->add_option("--json", o.json_path, "Also write the JSON report to this path");
    sub->add_option("--stars", o.stars, "Significance star convention")
        ->check(CLI::IsMember({"default", "conventional"}));
    sub->add_option("--seed", o.seed, "Random seed (default: LATENTPATH_SEED or 1)");
}

void add_estimation(CLI::App* sub, Options& o) {
    sub->add_option("--max-iter", o.max_iter, "Optimizer iteration limit")->check(CLI::PositiveNumber);
    sub->add_option("--gtol", o.gtol, "Gradient-norm tolerance")->check(CLI::PositiveNumber);
    sub->add_option("--chisq-n", o.chisq_n, "Chi-square multiplier")->check(CLI::IsMember({"n", "n-1"}));
    sub->add_option("--identification", o.identification, "Scale setting")
        ->check(CLI::IsMember({"marker", "std"}));
}

void add_effects(CLI::App* sub, Options& o) {
    sub->add_option("--effect", o.effects, "[LABEL=]SRC:MED:DST (repeatable)");
    sub->add_option("--boot", o.boot, "Bootstrap replicates")->check(CLI::Range(100, 1000000));
    sub->add_option("--level", o.level, "Confidence level")->check(CLI::Range(0.5, 0.9999));
    sub->add_option("--method", o.method, "Interval method")->check(CLI::IsMember({"bootstrap", "delta"}));
    sub->add_option("--jobs", o.jobs, "Worker threads")->check(CLI::PositiveNumber);
    sub->add_option("--alpha", o.alpha, "Significance level for path hypotheses")->check(CLI::Range(0.0, 1.0));
}

}  // namespace

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    Options o;
    try {
        o.seed = default_seed();
    } catch (const UsageError& e) {
        err << "error: " << e.what() << "\n";
        return kUsageError;
    }

    CLI::App app{"Structural equation modeling toolkit", "latentpath"};
    app.require_subcommand(1);
    auto* fit_cmd = app.add_subcommand("fit", "Estimate a structural model");
    auto* cfa_cmd = app.add_subcommand("cfa", "Estimate the measurement part with reliability and validity");
    auto* efa_cmd = app.add_subcommand("efa", "Exploratory factor analysis");
    auto* rel_cmd = app.add_subcommand("reliability", "Cronbach's alpha, KMO, Bartlett, CR, AVE, Fornell-Larcker");
    auto* med_cmd = app.add_subcommand("mediate", "Effect decomposition with confidence intervals");
    auto* sim_cmd = app.add_subcommand("simulate", "Draw multivariate normal data from a model");
    auto* rep_cmd = app.add_subcommand("report", "Full analysis pipeline");

    for (auto* s : {fit_cmd, cfa_cmd}) {
        add_io(s, o, true, true);
        add_estimation(s, o);
    }
    add_io(efa_cmd, o, false, true);
    efa_cmd->add_option("--retain", o.retain, "kaiser or m=<k>");
    efa_cmd->add_option("--suppress", o.suppress, "Blank loadings below this magnitude");
    efa_cmd->add_option("--rotation", o.rotation, "Rotation")->check(CLI::IsMember({"varimax", "none"}));
    efa_cmd->add_option("--extraction", o.extraction, "pc or paf")->check(CLI::IsMember({"pc", "paf"}));
    efa_cmd->add_option("--items", o.items, "Comma-separated item columns (default: all)");

    add_io(rel_cmd, o, true, true);
    add_estimation(rel_cmd, o);
    rel_cmd->add_option("--construct", o.constructs, "Name=item1,item2,... (repeatable)");

    add_io(med_cmd, o, true, true);
    add_estimation(med_cmd, o);
    add_effects(med_cmd, o);

    add_io(sim_cmd, o, true, false);
    sim_cmd->add_option("--config", o.config, "JSON with n, parameters and defaults")->check(CLI::ExistingFile);
    sim_cmd->add_option("--n", o.n, "Rows to draw (overrides the config)");
    sim_cmd->add_option("--out", o.out_path, "Write the table here instead of standard output");

    add_io(rep_cmd, o, true, true);
    add_estimation(rep_cmd, o);
    add_effects(rep_cmd, o);
    rep_cmd->add_option("--frequency", o.frequencies, "Tabulate a variable (repeatable)");

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kSuccess : kUsageError;
    }

    Run run;
    try {
        if (*fit_cmd) cmd_fit(run, o, false);
        else if (*cfa_cmd) cmd_fit(run, o, true);
        else if (*efa_cmd) cmd_efa(run, o);
        else if (*rel_cmd) cmd_reliability(run, o);
        else if (*med_cmd) cmd_mediate(run, o);
        else if (*sim_cmd) cmd_simulate(run, o);
        else if (*rep_cmd) cmd_report(run, o);
    } catch (const UsageError& e) {
        err << "error: " << e.what() << "\n";
        return kUsageError;
    } catch (const SyntaxError& e) {
        err << "model syntax error: " << e.what() << "\n";
        return kUsageError;
    } catch (const ModelError& e) {
        err << "model error: " << e.what() << "\n";
        return kUsageError;
    } catch (const DataError& e) {
        err << "data error: " << e.what() << "\n";
        return kUsageError;
    } catch (const IdentificationError& e) {
        err << "identification error: " << e.what() << "\n";
        return kDomainError;
    } catch (const ConvergenceError& e) {
        err << "convergence error: " << e.what() << "\n";
        return kDomainError;
    } catch (const NumericalError& e) {
        err << "numerical error: " << e.what() << "\n";
        return kDomainError;
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return kDomainError;
    }

    run.doc["status"] = run.status;
    const std::string json = run.doc.dump(2) + "\n";
    if (!o.json_path.empty()) {
        std::ofstream f(o.json_path, std::ios::binary);
        if (!f) {
            err << "error: cannot write '" << o.json_path << "'\n";
            return kUsageError;
        }
        f << json;
    }
    out << (o.format == "json" ? json : run.text);
    return run.status;
}

}  // namespace latentpath
