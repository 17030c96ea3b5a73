#include "latentpath/mediation.hpp"

#include "latentpath/distributions.hpp"
#include "latentpath/error.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <random>
#include <set>
#include <thread>

namespace latentpath {

EffectMatrices decompose(const Eigen::MatrixXd& beta, const Eigen::MatrixXd& gamma) {
    const Eigen::Index k = beta.rows();
    if (beta.cols() != k) throw Error("path matrix among endogenous latents must be square");
    if (gamma.rows() != k) throw Error("path matrices disagree on the number of endogenous latents");
    const Eigen::MatrixXd ib = Eigen::MatrixXd::Identity(k, k) - beta;
    Eigen::FullPivLU<Eigen::MatrixXd> lu(ib);
    if (k > 0 && !lu.isInvertible()) throw NumericalError("I - B is singular; total effects are undefined");
    const Eigen::MatrixXd inv = k > 0 ? lu.inverse() : Eigen::MatrixXd(0, 0);

    EffectMatrices out;
    out.total_xi = inv * gamma;
    out.direct_xi = gamma;
    out.indirect_xi = out.total_xi - out.direct_xi;
    out.total_eta = inv - Eigen::MatrixXd::Identity(k, k);
    out.direct_eta = beta;
    out.indirect_eta = out.total_eta - out.direct_eta;
    return out;
}

double delta_variance(double gamma, double b, double var_gamma, double var_b) {
    if (var_gamma < 0.0 || var_b < 0.0) throw Error("variances must be non-negative");
    return gamma * gamma * var_b + b * b * var_gamma + var_gamma * var_b;
}

EffectPath EffectPath::parse(const std::string& text) {
    EffectPath out;
    std::string rest = text;
    if (const auto eq = rest.find('='); eq != std::string::npos) {
        out.label = rest.substr(0, eq);
        rest = rest.substr(eq + 1);
        if (out.label.empty()) throw Error(fmt::format("empty label in effect '{}'", text));
    }
    std::vector<std::string> parts;
    std::size_t start = 0;
    while (true) {
        const auto colon = rest.find(':', start);
        parts.push_back(rest.substr(start, colon == std::string::npos ? std::string::npos : colon - start));
        if (colon == std::string::npos) break;
        start = colon + 1;
    }
    if (parts.size() != 3 || std::any_of(parts.begin(), parts.end(), [](const auto& s) { return s.empty(); }))
        throw Error(fmt::format("effect '{}' is not of the form SRC:MED:DST", text));
    out.source = parts[0];
    out.mediator = parts[1];
    out.target = parts[2];
    return out;
}

std::string EffectPath::describe() const { return fmt::format("{} -> {} -> {}", source, mediator, target); }

namespace {

int position(const std::vector<std::string>& names, const std::string& name) {
    const auto it = std::find(names.begin(), names.end(), name);
    return it == names.end() ? -1 : static_cast<int>(it - names.begin());
}

bool has_edge(const MatrixPattern& p, int row, int col) {
    return p.index(row, col) >= 0 || p.value(row, col) != 0.0;
}

/// Latents reachable from `from` along structural paths, stacked (eta, xi) indexing.
std::set<int> reachable(const ParamMatrices& m, int from) {
    const int ne = static_cast<int>(m.eta.size());
    std::set<int> seen;
    std::vector<int> stack{from};
    while (!stack.empty()) {
        const int node = stack.back();
        stack.pop_back();
        for (int i = 0; i < ne; ++i) {
            const bool edge = node < ne ? has_edge(m.beta, i, node) : has_edge(m.gamma, i, node - ne);
            if (edge && seen.insert(i).second) stack.push_back(i);
        }
    }
    return seen;
}

int stacked_index(const ParamMatrices& m, const std::string& name) {
    if (const int i = position(m.eta, name); i >= 0) return i;
    if (const int j = position(m.xi, name); j >= 0) return static_cast<int>(m.eta.size()) + j;
    return -1;
}

}  // namespace

void validate_effect(const ParamMatrices& m, const EffectPath& path) {
    const int src = stacked_index(m, path.source);
    const int med = stacked_index(m, path.mediator);
    const int dst = stacked_index(m, path.target);
    for (const auto& [name, idx] : {std::pair{path.source, src}, {path.mediator, med}, {path.target, dst}}) {
        if (idx < 0) throw ModelError(fmt::format("'{}' is not a latent variable of the model", name));
    }
    const int ne = static_cast<int>(m.eta.size());
    if (med >= ne || dst >= ne)
        throw ModelError(fmt::format("mediator and target of {} must be endogenous", path.describe()));
    if (!reachable(m, src).contains(med) || !reachable(m, med).contains(dst))
        throw ModelError(fmt::format("no directed path {}", path.describe()));
}

EffectPoint effect_of(const ParamMatrices& m, std::span<const double> theta, const EffectPath& path) {
    const int src = stacked_index(m, path.source);
    const int dst = position(m.eta, path.target);
    if (src < 0 || dst < 0) throw ModelError(fmt::format("unknown latent in {}", path.describe()));
    const LisrelMatrices mat = evaluate(m, theta);
    const EffectMatrices e = decompose(mat.beta, mat.gamma);
    const int ne = static_cast<int>(m.eta.size());
    EffectPoint out;
    if (src < ne) {
        out.total = e.total_eta(dst, src);
        out.direct = e.direct_eta(dst, src);
    } else {
        out.total = e.total_xi(dst, src - ne);
        out.direct = e.direct_xi(dst, src - ne);
    }
    out.indirect = out.total - out.direct;
    return out;
}

double quantile(std::vector<double> values, double q) {
    if (values.empty()) throw Error("quantile of an empty sample");
    std::sort(values.begin(), values.end());
    const double h = (static_cast<double>(values.size()) - 1.0) * std::clamp(q, 0.0, 1.0);
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

std::vector<EffectDecomposition> bootstrap_ci(const Dataset& data, const ModelSpec& spec,
                                              const std::vector<EffectPath>& effects, const BootstrapOptions& options) {
    if (options.replicates < 100) throw Error("bootstrap needs at least 100 replicates");
    if (!(options.level > 0.0 && options.level < 1.0)) throw Error("confidence level must lie in (0, 1)");
    if (effects.empty()) throw Error("no effects requested");

    const Dataset observed = data.select(spec.indicators());
    std::vector<int> complete;
    for (int i = 0; i < observed.rows(); ++i) {
        if (observed.values.row(i).allFinite()) complete.push_back(i);
    }
    const Dataset cases = observed.take_rows(complete);
    const int n = cases.rows();

    const SampleMoments full = covariance(cases);
    const ParamMatrices m = build_matrices(spec, full.names, options.estimation.identification);
    for (const auto& e : effects) validate_effect(m, e);

    EstimationOptions est = options.estimation;
    est.standard_errors = false;
    const FitResult base = fit(m, full, est);
    if (!base.converged) throw ConvergenceError("full-sample fit did not converge: " + base.message);

    const std::size_t ne = effects.size();
    const auto reps = static_cast<std::size_t>(options.replicates);
    std::vector<std::vector<EffectPoint>> draws(reps);
    std::vector<char> ok(reps, 0);
    std::vector<std::string> why(reps);

    EstimationOptions rep_opts = est;
    rep_opts.start = base.theta;

    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t r = next++; r < reps; r = next++) {
            std::seed_seq sequence{static_cast<std::uint32_t>(options.seed), static_cast<std::uint32_t>(options.seed >> 32),
                                   static_cast<std::uint32_t>(r)};
            std::mt19937_64 rng(sequence);
            std::uniform_int_distribution<int> pick(0, n - 1);
            std::vector<int> rows(static_cast<std::size_t>(n));
            for (auto& row : rows) row = pick(rng);
            try {
                const SampleMoments s = covariance(cases.take_rows(rows));
                const FitResult f = fit(m, s, rep_opts);
                if (!f.converged) {
                    why[r] = f.message;
                    continue;
                }
                draws[r].reserve(ne);
                for (const auto& e : effects) draws[r].push_back(effect_of(m, f.theta, e));
                ok[r] = 1;
            } catch (const Error& ex) {
                why[r] = ex.what();
            }
        }
    };
    const int workers = std::max(1, options.workers);
    if (workers == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
    }

    const int failed = static_cast<int>(std::count(ok.begin(), ok.end(), 0));
    if (failed > options.max_failure_fraction * options.replicates) {
        std::string first;
        for (std::size_t r = 0; r < reps; ++r) {
            if (!ok[r]) {
                first = fmt::format("replicate {}: {}", r, why[r]);
                break;
            }
        }
        throw ConvergenceError(fmt::format("{} of {} bootstrap replicates failed (limit {:.0f}%); first failure: {}",
                                           failed, options.replicates, 100.0 * options.max_failure_fraction, first));
    }

    const double lo_q = (1.0 - options.level) / 2.0;
    const double hi_q = 1.0 - lo_q;
    std::vector<EffectDecomposition> out;
    for (std::size_t k = 0; k < ne; ++k) {
        std::vector<double> t, d, i;
        for (std::size_t r = 0; r < reps; ++r) {
            if (!ok[r]) continue;
            t.push_back(draws[r][k].total);
            d.push_back(draws[r][k].direct);
            i.push_back(draws[r][k].indirect);
        }
        const EffectPoint point = effect_of(m, base.theta, effects[k]);
        EffectDecomposition dec;
        dec.path = effects[k];
        dec.total = {point.total, quantile(t, lo_q), quantile(t, hi_q)};
        dec.direct = {point.direct, quantile(d, lo_q), quantile(d, hi_q)};
        dec.indirect = {point.indirect, quantile(i, lo_q), quantile(i, hi_q)};
        dec.level = options.level;
        dec.method = "percentile bootstrap";
        dec.replicates = options.replicates;
        dec.failed = failed;
        out.push_back(std::move(dec));
    }
    return out;
}

EffectDecomposition delta_interval(const FitResult& result, const EffectPath& path, double level) {
    if (!(level > 0.0 && level < 1.0)) throw Error("confidence level must lie in (0, 1)");
    const ParamMatrices& m = result.model;
    validate_effect(m, path);
    const ParameterEstimate* a = result.find(path.mediator + "~" + path.source);
    const ParameterEstimate* b = result.find(path.target + "~" + path.mediator);
    if (!a || !b) throw ModelError(fmt::format("delta interval needs free paths along {}", path.describe()));
    const ParameterEstimate* c = result.find(path.target + "~" + path.source);

    const EffectPoint point = effect_of(m, result.theta, path);
    const double z = normal_quantile(0.5 + level / 2.0);
    auto around = [z](double est, double se) { return Interval{est, est - z * se, est + z * se}; };

    EffectDecomposition out;
    out.path = path;
    const double ab = a->estimate * b->estimate;
    const double var_ab = delta_variance(a->estimate, b->estimate, a->se * a->se, b->se * b->se);
    out.indirect = around(point.indirect, std::sqrt(var_ab));
    // Only the single-mediator product is covered by the variance formula.
    if (std::abs(point.indirect - ab) > 1e-12 * std::max(1.0, std::abs(ab)))
        throw ModelError(fmt::format("delta interval needs a single-mediator path for {}", path.describe()));
    const double se_direct = c ? c->se : 0.0;
    out.direct = around(point.direct, se_direct);
    double cov_ac = 0.0;
    if (c) {
        const int ia = m.find(a->name), ib = m.find(b->name), ic = m.find(c->name);
        const Eigen::MatrixXd& v = result.parameter_covariance;
        if (v.size() > 0) cov_ac = b->estimate * v(ia, ic) + a->estimate * v(ib, ic);
    }
    out.total = around(point.total, std::sqrt(std::max(var_ab + se_direct * se_direct + 2.0 * cov_ac, 0.0)));
    out.level = level;
    out.method = "delta";
    return out;
}

const char* to_string(Mediation m) {
    switch (m) {
        case Mediation::None: return "none";
        case Mediation::Partial: return "partial";
        case Mediation::Full: return "full";
    }
    return "none";
}

Mediation classify_mediation(const EffectDecomposition& d) {
    if (!d.indirect.excludes_zero()) return Mediation::None;
    return d.direct.excludes_zero() ? Mediation::Partial : Mediation::Full;
}

std::vector<HypothesisVerdict> classify_hypotheses(const FitResult& result,
                                                   const std::vector<EffectDecomposition>& decompositions,
                                                   double alpha) {
    std::vector<HypothesisVerdict> out;
    for (const auto& e : result.estimates) {
        if (e.label.empty() || e.kind != ParameterKind::Path) continue;
        HypothesisVerdict v;
        v.label = e.label;
        v.description = fmt::format("{} -> {}", e.rhs, e.lhs);
        v.kind = "path";
        v.estimate = e.estimate;
        v.p_value = e.p_value;
        v.supported = e.p_value < alpha;
        out.push_back(std::move(v));
    }
    for (const auto& d : decompositions) {
        if (d.path.label.empty())
            throw ModelError(fmt::format("mediation hypothesis {} has no label", d.path.describe()));
        HypothesisVerdict v;
        v.label = d.path.label;
        v.description = d.path.describe();
        v.kind = "mediation";
        v.estimate = d.indirect.estimate;
        v.mediation = classify_mediation(d);
        v.supported = *v.mediation != Mediation::None;
        out.push_back(std::move(v));
    }
    if (out.empty()) throw ModelError("no labelled paths or effects to test");
    return out;
}

std::vector<AdditivityCheck> check_additivity(const std::vector<EffectDecomposition>& decompositions,
                                              double tolerance) {
    std::vector<AdditivityCheck> out;
    for (const auto& d : decompositions) {
        AdditivityCheck c;
        c.label = d.path.label.empty() ? d.path.describe() : d.path.label;
        c.gap = d.total.estimate - d.direct.estimate - d.indirect.estimate;
        c.ok = std::abs(c.gap) <= tolerance;
        out.push_back(std::move(c));
    }
    return out;
}

}  // namespace latentpath
