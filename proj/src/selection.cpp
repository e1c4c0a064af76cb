#include "splitinf/selection.hpp"

#include <json.hpp>

#include <algorithm>
#include <cassert>
#include <cmath>
#include <mutex>
#include <numeric>
#include <sstream>

#include "splitinf/error.hpp"
#include "splitinf/projection.hpp"

namespace splitinf {

// ---------------------------------------------------------------- selector config

void SelectorSpec::validate() const {
    if (k < 1) throw InvalidArgument("selector: k must be at least 1");
    if (method == "lasso") {
        if (folds < 2) throw InvalidArgument("selector: lasso needs at least 2 folds");
        if (lasso_grid < 2) throw InvalidArgument("selector: lasso grid needs at least 2 values");
        if (!(lasso_span > 0.0 && lasso_span < 1.0))
            throw InvalidArgument("selector: lasso span must lie in (0, 1)");
    }
    if (!has_selector(method)) throw InvalidArgument("selector: unknown method '" + method + "'");
}

namespace {

void assign_key(SelectorSpec& spec, const std::string& key, const std::string& value) {
    try {
        if (key == "method" || key == "selector") {
            spec.method = value;
        } else if (key == "k") {
            spec.k = std::stoll(value);
        } else if (key == "lasso_grid") {
            spec.lasso_grid = std::stoll(value);
        } else if (key == "lasso_span") {
            spec.lasso_span = std::stod(value);
        } else if (key == "folds") {
            spec.folds = std::stoll(value);
        } else {
            throw InvalidArgument("selector spec: unknown key '" + key + "'");
        }
    } catch (const std::logic_error&) {
        throw InvalidArgument("selector spec: bad value for '" + key + "'");
    }
}

std::string strip(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

} // namespace

SelectorSpec parse_selector_spec(const std::string& text) {
    SelectorSpec spec;
    const std::string body = strip(text);
    if (!body.empty() && body.front() == '{') {
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(body);
        } catch (const nlohmann::json::exception& e) {
            throw InvalidArgument(std::string("selector spec: ") + e.what());
        }
        for (auto it = j.begin(); it != j.end(); ++it) {
            const std::string value =
                it.value().is_string() ? it.value().get<std::string>() : it.value().dump();
            assign_key(spec, it.key(), value);
        }
    } else {
        std::istringstream in(body);
        std::string line;
        while (std::getline(in, line)) {
            line = strip(line);
            if (line.empty() || line.front() == '#') continue;
            const auto eq = line.find('=');
            if (eq == std::string::npos) throw InvalidArgument("selector spec: expected key=value");
            assign_key(spec, strip(line.substr(0, eq)), strip(line.substr(eq + 1)));
        }
    }
    spec.validate();
    return spec;
}

std::string to_json(const SelectorSpec& spec) {
    nlohmann::json j;
    j["method"] = spec.method;
    j["k"] = spec.k;
    j["lasso_grid"] = spec.lasso_grid;
    j["lasso_span"] = spec.lasso_span;
    j["folds"] = spec.folds;
    return j.dump();
}

// ---------------------------------------------------------------- model

Eigen::VectorXd SelectedModel::predict(const Eigen::MatrixXd& x) const {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(x.rows());
    for (Index c = 0; c < size(); ++c) out += coefficients(c) * x.col(selected[static_cast<std::size_t>(c)]);
    return out;
}

Eigen::VectorXd SelectedModel::predict_without(Index covariate, const Eigen::MatrixXd& x) const {
    const auto it = leaveout.find(covariate);
    if (it == leaveout.end()) {
        throw InvalidArgument("leave-out model missing for covariate " + std::to_string(covariate));
    }
    Eigen::VectorXd out = Eigen::VectorXd::Zero(x.rows());
    const auto& lo = it->second;
    for (Index c = 0; c < static_cast<Index>(lo.selected.size()); ++c)
        out += lo.coefficients(c) * x.col(lo.selected[static_cast<std::size_t>(c)]);
    return out;
}

void SelectedModel::check_invariants() const {
    if (selected.empty() || size() > k_max) throw Error("selected model: size outside (0, k]");
    if (coefficients.size() != size()) throw Error("selected model: coefficient count mismatch");
    for (Index j : selected) {
        const auto it = leaveout.find(j);
        if (it == leaveout.end()) throw Error("selected model: missing leave-out refit");
        const auto& lo = it->second;
        if (lo.selected.empty() || static_cast<Index>(lo.selected.size()) > k_max)
            throw Error("selected model: leave-out size outside (0, k]");
        if (std::find(lo.selected.begin(), lo.selected.end(), j) != lo.selected.end())
            throw Error("selected model: leave-out model contains its own covariate");
        if (lo.coefficients.size() != static_cast<Index>(lo.selected.size()))
            throw Error("selected model: leave-out coefficient count mismatch");
    }
}

// ---------------------------------------------------------------- top-k

Support topk_support(const Dataset& data, Index k) {
    const Index d = data.cols();
    if (k < 1 || k > d) throw InvalidArgument("topk: need 1 <= k <= d");
    const Eigen::VectorXd yc = data.y().array() - data.y().mean();
    const double y_norm = yc.norm();
    Support out;
    std::vector<std::pair<double, Index>> scored;
    for (Index j = 0; j < d; ++j) {
        const Eigen::VectorXd xc = data.x().col(j).array() - data.x().col(j).mean();
        const double x_norm = xc.norm();
        if (!(x_norm > 0.0)) {
            out.warnings.push_back("topk: column " + std::to_string(j) + " has zero variance; excluded");
            continue;
        }
        const double corr = y_norm > 0.0 ? xc.dot(yc) / (x_norm * y_norm) : 0.0;
        scored.emplace_back(std::fabs(corr), j);
    }
    if (scored.empty()) throw Error("topk: every column has zero variance");
    std::stable_sort(scored.begin(), scored.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    const auto take = std::min<std::size_t>(static_cast<std::size_t>(k), scored.size());
    for (std::size_t i = 0; i < take; ++i) out.selected.push_back(scored[i].second);
    out.coefficients = ols(data, out.selected);
    return out;
}

// ---------------------------------------------------------------- stepwise

Support stepwise_support(const Dataset& data, Index k) {
    const Index n = data.rows();
    const Index d = data.cols();
    if (k < 1 || k > std::min(d, n - 1)) throw InvalidArgument("stepwise: need 1 <= k <= min(d, n-1)");
    const Eigen::MatrixXd& x = data.x();
    Eigen::VectorXd resid = data.y();
    const double floor = 1e-13 * std::max(data.y().squaredNorm(), 1e-300);
    Eigen::MatrixXd basis(n, 0);
    std::vector<bool> used(static_cast<std::size_t>(d), false);
    Support out;
    for (Index step = 0; step < k; ++step) {
        double best = 0.0;
        Index best_j = -1;
        Eigen::VectorXd best_dir;
        for (Index j = 0; j < d; ++j) {
            if (used[static_cast<std::size_t>(j)]) continue;
            Eigen::VectorXd v = x.col(j);
            const double original = v.squaredNorm();
            if (!(original > 0.0)) continue;
            if (basis.cols() > 0) {
                v -= basis * (basis.transpose() * v);
                v -= basis * (basis.transpose() * v);
            }
            const double norm2 = v.squaredNorm();
            if (norm2 <= 1e-12 * original) continue;  // collinear with the current model
            const double proj = v.dot(resid);
            const double reduction = proj * proj / norm2;
            if (reduction > best) {
                best = reduction;
                best_j = j;
                best_dir = v / std::sqrt(norm2);
            }
        }
        if (best_j < 0 || best <= floor) break;
        used[static_cast<std::size_t>(best_j)] = true;
        out.selected.push_back(best_j);
        basis.conservativeResize(n, basis.cols() + 1);
        basis.col(basis.cols() - 1) = best_dir;
        resid -= best_dir * best_dir.dot(resid);
    }
    if (out.selected.empty()) throw Error("stepwise: no covariate reduces the residual sum of squares");
    if (static_cast<Index>(out.selected.size()) < k) {
        out.warnings.push_back("stepwise: stopped after " + std::to_string(out.selected.size()) +
                               " of " + std::to_string(k) + " steps");
    }
    out.coefficients = ols(data, out.selected);
    return out;
}

// ---------------------------------------------------------------- lasso

namespace {

constexpr Index kMaxSweeps = 10000;
constexpr double kTolerance = 1e-8;
constexpr Index kNewtonEvery = 5;

struct ScaledProblem {
    Eigen::MatrixXd gram;   // X~^T X~ / n
    Eigen::VectorXd cross;  // X~^T y / n
    Eigen::VectorXd scale;  // 0 for excluded columns
};

ScaledProblem scaled_problem(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
    const Index n = x.rows();
    ScaledProblem p;
    p.scale = (x.colwise().squaredNorm() / static_cast<double>(n)).cwiseSqrt().transpose();
    Eigen::MatrixXd xs = x;
    for (Index j = 0; j < x.cols(); ++j) {
        if (p.scale(j) > 0.0) {
            xs.col(j) /= p.scale(j);
        } else {
            xs.col(j).setZero();
        }
    }
    p.gram = (xs.transpose() * xs) / static_cast<double>(n);
    p.cross = (xs.transpose() * y) / static_cast<double>(n);
    return p;
}

double soft_threshold(double z, double lambda) {
    if (z > lambda) return z - lambda;
    if (z < -lambda) return z + lambda;
    return 0.0;
}

[[maybe_unused]] double objective(const ScaledProblem& p, const Eigen::VectorXd& b, double lambda) {
    return 0.5 * b.dot(p.gram * b) - p.cross.dot(b) + lambda * b.lpNorm<1>();
}

// Moves toward the minimizer over the current support with the current signs
// fixed, clipped at the first sign change. The objective is a convex quadratic
// along that segment, so it cannot increase; the sweeps still decide convergence.
bool newton_step(const ScaledProblem& p, double lambda, Eigen::VectorXd& beta, Eigen::VectorXd& gb) {
    IndexList support;
    for (Index j = 0; j < beta.size(); ++j)
        if (beta(j) != 0.0) support.push_back(j);
    const auto m = static_cast<Index>(support.size());
    if (m == 0) return false;
    Eigen::MatrixXd gram(m, m);
    Eigen::VectorXd rhs(m);
    for (Index a = 0; a < m; ++a) {
        const Index ja = support[static_cast<std::size_t>(a)];
        rhs(a) = p.cross(ja) - lambda * (beta(ja) > 0.0 ? 1.0 : -1.0);
        for (Index b = 0; b < m; ++b) gram(a, b) = p.gram(ja, support[static_cast<std::size_t>(b)]);
    }
    const Eigen::LLT<Eigen::MatrixXd> llt(gram);
    if (llt.info() != Eigen::Success) return false;
    const Eigen::VectorXd next = llt.solve(rhs);
    if (!next.allFinite()) return false;
    // Step toward the minimizer, stopping where the first coefficient hits zero.
    double step = 1.0;
    Index blocking = -1;
    for (Index a = 0; a < m; ++a) {
        const double now = beta(support[static_cast<std::size_t>(a)]);
        if (next(a) * now <= 0.0) {
            const double t = now / (now - next(a));
            if (t < step) {
                step = t;
                blocking = a;
            }
        }
    }
    if (!(step > 0.0)) return false;
    for (Index a = 0; a < m; ++a) {
        double& b = beta(support[static_cast<std::size_t>(a)]);
        b = a == blocking ? 0.0 : b + step * (next(a) - b);
    }
    gb = p.gram * beta;
    return true;
}

// Cyclic coordinate descent from the warm start `beta`; gb tracks gram * beta.
Index coordinate_descent(const ScaledProblem& p, double lambda, Eigen::VectorXd& beta,
                         Eigen::VectorXd& gb) {
    const Index d = beta.size();
    Index sweeps = 0;
    auto sweep = [&](bool active_only) {
        double max_change = 0.0;
        for (Index j = 0; j < d; ++j) {
            if (!(p.scale(j) > 0.0)) continue;
            if (active_only && beta(j) == 0.0) continue;
            const double gjj = p.gram(j, j);
            const double z = p.cross(j) - gb(j) + gjj * beta(j);
            const double updated = soft_threshold(z, lambda) / gjj;
            const double delta = updated - beta(j);
            if (delta != 0.0) {
                gb += delta * p.gram.col(j);
                beta(j) = updated;
                max_change = std::max(max_change, std::fabs(delta));
            }
        }
        ++sweeps;
        return max_change;
    };
#ifndef NDEBUG
    double previous = objective(p, beta, lambda);
    auto check_descent = [&] {
        const double now = objective(p, beta, lambda);
        assert(now <= previous + 1e-12 * (1.0 + std::fabs(previous)));
        previous = now;
    };
#else
    auto check_descent = [] {};
#endif
    while (sweeps < kMaxSweeps) {
        const double full = sweep(false);
        check_descent();
        if (full < kTolerance) break;
        for (Index inner = 1; sweeps < kMaxSweeps; ++inner) {
            const double active = sweep(true);
            check_descent();
            if (active < kTolerance) break;
            if (inner % kNewtonEvery == 0 && newton_step(p, lambda, beta, gb)) check_descent();
        }
    }
    return sweeps;
}

std::vector<LassoFit> path_on(const ScaledProblem& p, const std::vector<double>& lambdas) {
    const Index d = p.scale.size();
    Eigen::VectorXd beta = Eigen::VectorXd::Zero(d);
    Eigen::VectorXd gb = Eigen::VectorXd::Zero(d);
    std::vector<LassoFit> fits;
    fits.reserve(lambdas.size());
    for (double lambda : lambdas) {
        LassoFit fit;
        fit.sweeps = coordinate_descent(p, lambda, beta, gb);
        fit.scaled = beta;
        fit.coefficients = Eigen::VectorXd::Zero(d);
        for (Index j = 0; j < d; ++j)
            if (p.scale(j) > 0.0) fit.coefficients(j) = beta(j) / p.scale(j);
        fits.push_back(std::move(fit));
    }
    return fits;
}

std::vector<double> lambda_grid(double lambda_max, Index size, double span) {
    std::vector<double> grid(static_cast<std::size_t>(size));
    for (Index m = 0; m < size; ++m) {
        grid[static_cast<std::size_t>(m)] =
            lambda_max * std::pow(span, static_cast<double>(m) / static_cast<double>(size - 1));
    }
    return grid;
}

} // namespace

double lasso_lambda_max(const Dataset& data) {
    return scaled_problem(data.x(), data.y()).cross.cwiseAbs().maxCoeff();
}

std::vector<LassoFit> lasso_path(const Dataset& data, const std::vector<double>& lambdas) {
    return path_on(scaled_problem(data.x(), data.y()), lambdas);
}

LassoFit lasso_fit(const Dataset& data, double lambda) { return lasso_path(data, {lambda}).front(); }

double lasso_kkt_violation(const Dataset& data, const LassoFit& fit, double lambda) {
    const ScaledProblem p = scaled_problem(data.x(), data.y());
    const Eigen::VectorXd grad = p.cross - p.gram * fit.scaled;  // X~^T r / n
    double worst = 0.0;
    for (Index j = 0; j < grad.size(); ++j) {
        if (!(p.scale(j) > 0.0)) continue;
        const double b = fit.scaled(j);
        const double v = b != 0.0 ? std::fabs(grad(j) - lambda * (b > 0 ? 1.0 : -1.0))
                                  : std::max(0.0, std::fabs(grad(j)) - lambda);
        worst = std::max(worst, v);
    }
    return worst;
}

Support lasso_cv_support(const Dataset& data, const SelectorSpec& spec, SeededRng rng) {
    const Index n = data.rows();
    const Index d = data.cols();
    if (n < spec.folds) throw InvalidArgument("lasso: fewer rows than folds");
    const ScaledProblem full = scaled_problem(data.x(), data.y());
    const double lambda_max = full.cross.cwiseAbs().maxCoeff();

    Support out;
    auto fall_back = [&](const std::string& why) {
        Support s = topk_support(data, 1);
        s.warnings.insert(s.warnings.begin(), out.warnings.begin(), out.warnings.end());
        s.warnings.push_back("lasso: " + why + "; falling back to top-1 correlation");
        return s;
    };
    if (!(lambda_max > 0.0)) return fall_back("empty support at every lambda");

    const std::vector<double> grid = lambda_grid(lambda_max, spec.lasso_grid, spec.lasso_span);
    const IndexList order = random_permutation(n, rng);
    std::vector<Index> fold_of(static_cast<std::size_t>(n));
    for (Index pos = 0; pos < n; ++pos)
        fold_of[static_cast<std::size_t>(order[static_cast<std::size_t>(pos)])] = pos % spec.folds;

    std::vector<double> sse(grid.size(), 0.0);
    for (Index f = 0; f < spec.folds; ++f) {
        IndexList train, test;
        for (Index i = 0; i < n; ++i) (fold_of[static_cast<std::size_t>(i)] == f ? test : train).push_back(i);
        const Dataset tr = data.select_rows(train);
        const Dataset te = data.select_rows(test);
        const auto fits = path_on(scaled_problem(tr.x(), tr.y()), grid);
        for (std::size_t m = 0; m < grid.size(); ++m)
            sse[m] += (te.y() - te.x() * fits[m].coefficients).squaredNorm();
    }
    const auto best = static_cast<std::size_t>(std::min_element(sse.begin(), sse.end()) - sse.begin());
    const std::vector<double> chosen(grid.begin(), grid.begin() + static_cast<std::ptrdiff_t>(best) + 1);
    const LassoFit fit = path_on(full, chosen).back();

    std::vector<std::pair<double, Index>> support;
    for (Index j = 0; j < d; ++j)
        if (fit.scaled(j) != 0.0) support.emplace_back(std::fabs(fit.scaled(j)), j);
    if (support.empty()) return fall_back("empty support at the cross-validated lambda");
    std::stable_sort(support.begin(), support.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    if (static_cast<Index>(support.size()) > spec.k) {
        out.warnings.push_back("lasso: support of " + std::to_string(support.size()) +
                               " truncated to k=" + std::to_string(spec.k));
        support.resize(static_cast<std::size_t>(spec.k));
    }
    out.coefficients.resize(static_cast<Index>(support.size()));
    for (std::size_t i = 0; i < support.size(); ++i) {
        out.selected.push_back(support[i].second);
        out.coefficients(static_cast<Index>(i)) = fit.coefficients(support[i].second);
    }
    return out;
}

// ---------------------------------------------------------------- registry

namespace {

struct Registry {
    std::mutex mutex;
    std::map<std::string, SelectorFn> selectors;

    Registry() {
        selectors["topk"] = [](const Dataset& d, Index k, const SelectorSpec&, SeededRng) {
            return topk_support(d, k);
        };
        selectors["stepwise"] = [](const Dataset& d, Index k, const SelectorSpec&, SeededRng) {
            return stepwise_support(d, std::min(k, d.rows() - 1));
        };
        selectors["lasso"] = [](const Dataset& d, Index k, const SelectorSpec& spec, SeededRng rng) {
            SelectorSpec local = spec;
            local.k = k;
            return lasso_cv_support(d, local, rng);
        };
    }
};

Registry& registry() {
    static Registry r;
    return r;
}

SelectorFn lookup(const std::string& name) {
    auto& r = registry();
    std::lock_guard<std::mutex> lock(r.mutex);
    const auto it = r.selectors.find(name);
    if (it == r.selectors.end()) throw InvalidArgument("selector: unknown method '" + name + "'");
    return it->second;
}

} // namespace

void register_selector(const std::string& name, SelectorFn fn) {
    auto& r = registry();
    std::lock_guard<std::mutex> lock(r.mutex);
    r.selectors[name] = std::move(fn);
}

bool has_selector(const std::string& name) {
    auto& r = registry();
    std::lock_guard<std::mutex> lock(r.mutex);
    return r.selectors.count(name) != 0;
}

SelectedModel select_model(const Dataset& data, const SelectorSpec& spec, SeededRng rng) {
    spec.validate();
    const Index d = data.cols();
    if (spec.k > d) throw InvalidArgument("selector: k exceeds the number of covariates");
    if (d < 2) throw InvalidArgument("selector: leave-out refits need at least two covariates");
    const SelectorFn fn = lookup(spec.method);

    Support base = fn(data, spec.k, spec, rng);
    SelectedModel model;
    model.k_max = spec.k;
    model.selected = std::move(base.selected);
    model.coefficients = std::move(base.coefficients);
    model.warnings = std::move(base.warnings);
    if (model.selected.empty()) throw Error("selector returned an empty model");

    const Index k_leave = std::min(spec.k, d - 1);
    for (Index j : model.selected) {
        Support s = fn(data.without_column(j), k_leave, spec, rng);
        LeaveOut lo;
        for (Index idx : s.selected) lo.selected.push_back(idx >= j ? idx + 1 : idx);
        lo.coefficients = std::move(s.coefficients);
        for (auto& w : s.warnings) model.warnings.push_back("leave-out " + std::to_string(j) + ": " + w);
        model.leaveout.emplace(j, std::move(lo));
    }
    model.check_invariants();
    return model;
}

SelectedModel select_topk(const Dataset& data, Index k) {
    SelectorSpec spec;
    spec.method = "topk";
    spec.k = k;
    return select_model(data, spec, SeededRng(0));
}

SelectedModel select_stepwise(const Dataset& data, Index k) {
    if (k < 1 || k > std::min(data.cols(), data.rows() - 1))
        throw InvalidArgument("stepwise: need 1 <= k <= min(d, n-1)");
    SelectorSpec spec;
    spec.method = "stepwise";
    spec.k = k;
    return select_model(data, spec, SeededRng(0));
}

SelectedModel select_lasso_cv(const Dataset& data, const SelectorSpec& spec, SeededRng rng) {
    SelectorSpec local = spec;
    local.method = "lasso";
    return select_model(data, local, rng);
}

} // namespace splitinf
