#include "latentpath/param_matrices.hpp"

#include "latentpath/error.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <queue>
#include <set>

namespace latentpath {

namespace {

int position(const std::vector<std::string>& names, const std::string& name) {
    auto it = std::find(names.begin(), names.end(), name);
    return it == names.end() ? -1 : static_cast<int>(it - names.begin());
}

/// Endogenous latents in topological order, ties broken by name.
std::vector<std::string> order_endogenous(const ModelSpec& spec) {
    std::set<std::string> endogenous;
    for (const auto& r : spec.regressions) endogenous.insert(r.dependent);

    std::map<std::string, int> pending;
    std::map<std::string, std::vector<std::string>> children;
    for (const auto& name : endogenous) pending[name] = 0;
    for (const auto& r : spec.regressions) {
        if (endogenous.count(r.predictor)) {
            ++pending[r.dependent];
            children[r.predictor].push_back(r.dependent);
        }
    }
    std::priority_queue<std::string, std::vector<std::string>, std::greater<>> ready;
    for (const auto& [name, count] : pending) {
        if (count == 0) ready.push(name);
    }
    std::vector<std::string> order;
    while (!ready.empty()) {
        auto next = ready.top();
        ready.pop();
        order.push_back(next);
        for (const auto& child : children[next]) {
            if (--pending[child] == 0) ready.push(child);
        }
    }
    if (order.size() != endogenous.size()) throw ModelError("cyclic regression graph");
    return order;
}

class Builder {
public:
    explicit Builder(ParamMatrices& m) : m_(m) {}

    void set_fixed(MatrixPattern& mat, int i, int j, double value, bool symmetric = false) {
        mat.value(i, j) = value;
        mat.index(i, j) = -1;
        if (symmetric) {
            mat.value(j, i) = value;
            mat.index(j, i) = -1;
        }
    }

    void set_free(MatrixPattern& mat, int i, int j, FreeParameter p, bool symmetric = false) {
        const int k = static_cast<int>(m_.parameters.size());
        m_.theta_index[p.name] = k;
        m_.parameters.push_back(std::move(p));
        mat.value(i, j) = 0.0;
        mat.index(i, j) = k;
        if (symmetric) {
            mat.value(j, i) = 0.0;
            mat.index(j, i) = k;
        }
    }

private:
    ParamMatrices& m_;
};

}  // namespace

const char* to_string(ParameterKind kind) {
    switch (kind) {
        case ParameterKind::Loading: return "loading";
        case ParameterKind::Path: return "path";
        case ParameterKind::LatentVariance: return "latent_variance";
        case ParameterKind::LatentCovariance: return "latent_covariance";
        case ParameterKind::DisturbanceVariance: return "disturbance_variance";
        case ParameterKind::DisturbanceCovariance: return "disturbance_covariance";
        case ParameterKind::ErrorVariance: return "error_variance";
        case ParameterKind::ErrorCovariance: return "error_covariance";
    }
    return "unknown";
}

Eigen::MatrixXd MatrixPattern::evaluate(std::span<const double> theta) const {
    Eigen::MatrixXd out = value;
    for (Eigen::Index j = 0; j < index.cols(); ++j) {
        for (Eigen::Index i = 0; i < index.rows(); ++i) {
            if (const int k = index(i, j); k >= 0) out(i, j) = theta[static_cast<std::size_t>(k)];
        }
    }
    return out;
}

int ParamMatrices::find(const std::string& name_or_label) const {
    if (auto it = theta_index.find(name_or_label); it != theta_index.end()) return it->second;
    for (std::size_t k = 0; k < parameters.size(); ++k) {
        if (!parameters[k].label.empty() && parameters[k].label == name_or_label) return static_cast<int>(k);
    }
    return -1;
}

ParamMatrices build_matrices(const ModelSpec& spec, const std::vector<std::string>& variable_order,
                             Identification identification) {
    ParamMatrices m;
    m.identification = identification;
    m.eta = order_endogenous(spec);
    for (const auto& l : spec.latents) {
        if (position(m.eta, l.name) < 0) m.xi.push_back(l.name);
    }
    for (const auto& name : m.eta) {
        const auto& ind = spec.find_latent(name)->indicators;
        m.y.insert(m.y.end(), ind.begin(), ind.end());
    }
    for (const auto& name : m.xi) {
        const auto& ind = spec.find_latent(name)->indicators;
        m.x.insert(m.x.end(), ind.begin(), ind.end());
    }

    // Variable order must be a permutation of the model's indicators.
    {
        std::set<std::string> wanted(m.y.begin(), m.y.end());
        wanted.insert(m.x.begin(), m.x.end());
        std::set<std::string> given;
        for (const auto& v : variable_order) {
            if (!given.insert(v).second) throw ModelError(fmt::format("variable order lists '{}' twice", v));
        }
        std::vector<std::string> missing, extra;
        std::set_difference(wanted.begin(), wanted.end(), given.begin(), given.end(), std::back_inserter(missing));
        std::set_difference(given.begin(), given.end(), wanted.begin(), wanted.end(), std::back_inserter(extra));
        if (!missing.empty() || !extra.empty()) {
            throw ModelError(fmt::format("variable order mismatch: missing [{}], unexpected [{}]",
                                         fmt::join(missing, ", "), fmt::join(extra, ", ")));
        }
    }
    m.variable_order = variable_order;
    for (const auto& v : m.y) m.observed_position.push_back(position(variable_order, v));
    for (const auto& v : m.x) m.observed_position.push_back(position(variable_order, v));

    const auto ne = static_cast<Eigen::Index>(m.eta.size());
    const auto nx = static_cast<Eigen::Index>(m.xi.size());
    const auto ny = static_cast<Eigen::Index>(m.y.size());
    const auto nobs_x = static_cast<Eigen::Index>(m.x.size());
    m.lambda_y = MatrixPattern(ny, ne);
    m.lambda_x = MatrixPattern(nobs_x, nx);
    m.beta = MatrixPattern(ne, ne);
    m.gamma = MatrixPattern(ne, nx);
    m.phi = MatrixPattern(nx, nx);
    m.psi = MatrixPattern(ne, ne);
    m.theta_eps = MatrixPattern(ny, ny);
    m.theta_delta = MatrixPattern(nobs_x, nobs_x);

    Builder b(m);
    const bool marker = identification == Identification::Marker;

    auto label_of = [&](const std::string& indicator) {
        auto it = spec.loading_labels.find(indicator);
        return it == spec.loading_labels.end() ? std::string() : it->second;
    };

    // Loadings.
    auto add_loadings = [&](const std::vector<std::string>& latents, const std::vector<std::string>& observed,
                            MatrixPattern& lambda) {
        for (std::size_t j = 0; j < latents.size(); ++j) {
            const auto& def = *spec.find_latent(latents[j]);
            const bool any_fixed = std::any_of(def.indicators.begin(), def.indicators.end(),
                                               [&](const auto& ind) { return spec.fixed_loadings.count(ind) > 0; });
            for (std::size_t k = 0; k < def.indicators.size(); ++k) {
                const auto& ind = def.indicators[k];
                const int i = position(observed, ind);
                if (auto it = spec.fixed_loadings.find(ind); it != spec.fixed_loadings.end()) {
                    b.set_fixed(lambda, i, static_cast<int>(j), it->second);
                } else if (marker && k == 0 && !any_fixed) {
                    b.set_fixed(lambda, i, static_cast<int>(j), 1.0);
                } else {
                    b.set_free(lambda, i, static_cast<int>(j),
                               {def.name + "=~" + ind, label_of(ind), ParameterKind::Loading, def.name, ind});
                }
            }
        }
    };
    add_loadings(m.eta, m.y, m.lambda_y);
    add_loadings(m.xi, m.x, m.lambda_x);

    // Structural paths, ordered by dependent (topological) then predictor name.
    std::vector<const Regression*> regressions;
    for (const auto& r : spec.regressions) regressions.push_back(&r);
    std::stable_sort(regressions.begin(), regressions.end(), [&](const auto* a, const auto* c) {
        return position(m.eta, a->dependent) < position(m.eta, c->dependent);
    });
    for (const auto* r : regressions) {
        const int i = position(m.eta, r->dependent);
        const int from_eta = position(m.eta, r->predictor);
        MatrixPattern& target = from_eta >= 0 ? m.beta : m.gamma;
        const int j = from_eta >= 0 ? from_eta : position(m.xi, r->predictor);
        if (r->fixed) {
            b.set_fixed(target, i, j, *r->fixed);
        } else {
            b.set_free(target, i, j, {r->dependent + "~" + r->predictor, r->label, ParameterKind::Path,
                                      r->dependent, r->predictor});
        }
    }

    // Explicit (co)variance statements, keyed by normalised pair.
    std::map<std::pair<std::string, std::string>, const Covariance*> explicit_cov;
    for (const auto& c : spec.covariances) explicit_cov[{c.lhs, c.rhs}] = &c;
    auto lookup = [&](const std::string& a, const std::string& c) -> const Covariance* {
        auto key = std::minmax(a, c);
        auto it = explicit_cov.find({key.first, key.second});
        return it == explicit_cov.end() ? nullptr : it->second;
    };
    std::set<const Covariance*> consumed;

    // Symmetric block: lower triangle in column-major order.
    auto add_symmetric = [&](const std::vector<std::string>& names, MatrixPattern& mat, ParameterKind var_kind,
                             ParameterKind cov_kind, bool default_var_free, double default_var_value,
                             bool default_cov_free) {
        for (std::size_t j = 0; j < names.size(); ++j) {
            for (std::size_t i = j; i < names.size(); ++i) {
                const bool diagonal = i == j;
                const auto* stmt = lookup(names[i], names[j]);
                if (stmt) consumed.insert(stmt);
                const auto key = std::minmax(names[i], names[j]);
                const auto ii = static_cast<int>(i), jj = static_cast<int>(j);
                if (stmt && stmt->fixed) {
                    b.set_fixed(mat, ii, jj, *stmt->fixed, true);
                } else if (stmt || (diagonal ? default_var_free : default_cov_free)) {
                    b.set_free(mat, ii, jj,
                               {key.first + "~~" + key.second, stmt ? stmt->label : std::string(),
                                diagonal ? var_kind : cov_kind, key.first, key.second},
                               true);
                } else {
                    b.set_fixed(mat, ii, jj, diagonal ? default_var_value : 0.0, true);
                }
            }
        }
    };
    add_symmetric(m.xi, m.phi, ParameterKind::LatentVariance, ParameterKind::LatentCovariance, marker, 1.0, true);
    add_symmetric(m.eta, m.psi, ParameterKind::DisturbanceVariance, ParameterKind::DisturbanceCovariance, marker,
                  1.0, false);
    add_symmetric(m.y, m.theta_eps, ParameterKind::ErrorVariance, ParameterKind::ErrorCovariance, true, 0.0, false);
    add_symmetric(m.x, m.theta_delta, ParameterKind::ErrorVariance, ParameterKind::ErrorCovariance, true, 0.0,
                  false);

    for (const auto& c : spec.covariances) {
        if (!consumed.count(&c)) {
            throw ModelError(fmt::format(
                "covariance {} ~~ {} crosses the exogenous/endogenous split and cannot be represented", c.lhs,
                c.rhs));
        }
    }
    return m;
}

LisrelMatrices evaluate(const ParamMatrices& m, std::span<const double> theta) {
    return {m.lambda_y.evaluate(theta), m.lambda_x.evaluate(theta), m.beta.evaluate(theta),
            m.gamma.evaluate(theta),    m.phi.evaluate(theta),      m.psi.evaluate(theta),
            m.theta_eps.evaluate(theta), m.theta_delta.evaluate(theta)};
}

DegreesOfFreedom count_df(const ParamMatrices& m, int p) {
    DegreesOfFreedom out;
    out.moments = p * (p + 1) / 2;
    out.parameters = m.free_count();
    out.df = out.moments - out.parameters;
    out.under_identified = out.df < 0;
    return out;
}

}  // namespace latentpath
