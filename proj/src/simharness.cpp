#include "splitinf/simharness.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <random>
#include <set>

#include "splitinf/bootstrap.hpp"
#include "splitinf/csv_io.hpp"
#include "splitinf/error.hpp"
#include "splitinf/loco.hpp"
#include "splitinf/projection.hpp"

namespace splitinf {

namespace {

constexpr Index kActive = 5;
constexpr Index kOracleChunk = 8192;

Eigen::VectorXd additive_alpha(Index p) {
    // E[Z_j mu_B(Z)] for Z ~ N(0, I): E Z^4 = 3, E Z^3 = 0, E Z^2 = 1.
    Eigen::VectorXd a = Eigen::VectorXd::Zero(p);
    a(0) = 3.0;
    a(2) = a(3) = a(4) = 1.0;
    return a;
}

double additive_mean(double z1, double z2, double z3, double z4, double z5) {
    return z1 * z1 * z1 + z2 * z2 + z3 + z4 + z5;
}

} // namespace

std::string_view to_string(Setting setting) noexcept {
    switch (setting) {
    case Setting::A: return "A";
    case Setting::B: return "B";
    case Setting::C: return "C";
    }
    return "?";
}

std::optional<Setting> parse_setting(std::string_view name) noexcept {
    if (name == "A" || name == "a") return Setting::A;
    if (name == "B" || name == "b") return Setting::B;
    if (name == "C" || name == "c") return Setting::C;
    return std::nullopt;
}

void SettingSpec::validate() const {
    if (n < 4) throw InvalidArgument("setting: n must be at least 4");
    if (p < kActive) throw InvalidArgument("setting: p must be at least 5");
    if (!(noise_variance >= 0.0) || !std::isfinite(noise_variance))
        throw InvalidArgument("setting: noise variance must be finite and non-negative");
}

Truth::Truth(Setting setting, Index p, double noise_variance, Eigen::VectorXd beta,
             Eigen::MatrixXd rotation)
    : setting_(setting), p_(p), noise_variance_(noise_variance), beta_(std::move(beta)),
      rotation_(std::move(rotation)) {
    if (setting_ == Setting::A && beta_.size() != p_) throw InvalidArgument("truth: beta length must equal p");
    if (setting_ == Setting::C && (rotation_.rows() != p_ || rotation_.cols() != p_))
        throw InvalidArgument("truth: rotation must be p x p");
}

Eigen::VectorXd Truth::mean(const Eigen::MatrixXd& x) const {
    if (x.cols() != p_) throw InvalidArgument("truth: covariate dimension mismatch");
    switch (setting_) {
    case Setting::A: return x * beta_;
    case Setting::B: {
        Eigen::VectorXd mu(x.rows());
        for (Index i = 0; i < x.rows(); ++i) mu(i) = additive_mean(x(i, 0), x(i, 1), x(i, 2), x(i, 3), x(i, 4));
        return mu;
    }
    case Setting::C: {
        const Eigen::MatrixXd z = x * rotation_.topRows(kActive).transpose();
        Eigen::VectorXd mu(x.rows());
        for (Index i = 0; i < x.rows(); ++i) mu(i) = additive_mean(z(i, 0), z(i, 1), z(i, 2), z(i, 3), z(i, 4));
        return mu;
    }
    }
    return {};
}

Eigen::VectorXd Truth::population_alpha() const {
    switch (setting_) {
    case Setting::A: return beta_;
    case Setting::B: return additive_alpha(p_);
    case Setting::C: return rotation_.transpose() * additive_alpha(p_);
    }
    return {};
}

Eigen::VectorXd Truth::projection_beta(std::span<const Index> s) const {
    const Eigen::VectorXd a = population_alpha();
    Eigen::VectorXd out(static_cast<Index>(s.size()));
    for (std::size_t c = 0; c < s.size(); ++c) {
        if (s[c] < 0 || s[c] >= p_) throw InvalidArgument("truth: subset index out of range");
        out(static_cast<Index>(c)) = a(s[c]);
    }
    return out;
}

IndexList Truth::required_columns(std::span<const Index> extra) const {
    std::set<Index> cols(extra.begin(), extra.end());
    if (setting_ == Setting::C) {
        for (Index j = 0; j < p_; ++j) cols.insert(j);
    } else {
        for (Index j = 0; j < kActive; ++j) cols.insert(j);
    }
    return {cols.begin(), cols.end()};
}

void Truth::draw(Index rows, SeededRng& rng, Eigen::MatrixXd& x, Eigen::VectorXd& y,
                 const IndexList* columns) const {
    std::normal_distribution<double> normal;
    std::student_t_distribution<double> student(5.0);
    x.setZero(rows, p_);
    for (Index i = 0; i < rows; ++i) {
        if (columns) {
            for (Index j : *columns) x(i, j) = normal(rng);
        } else {
            for (Index j = 0; j < p_; ++j) x(i, j) = normal(rng);
        }
    }
    y = mean(x);
    if (setting_ == Setting::A) {
        const double sd = std::sqrt(noise_variance_);
        for (Index i = 0; i < rows; ++i) y(i) += sd * normal(rng);
    } else {
        const double scale = std::sqrt(noise_variance_ * 3.0 / 5.0);
        for (Index i = 0; i < rows; ++i) y(i) += scale * student(rng);
    }
}

Eigen::MatrixXd haar_orthogonal(Index p, SeededRng rng) {
    std::normal_distribution<double> normal;
    Eigen::MatrixXd m(p, p);
    for (Index j = 0; j < p; ++j)
        for (Index i = 0; i < p; ++i) m(i, j) = normal(rng);
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(m);
    Eigen::MatrixXd q = qr.householderQ();
    const Eigen::MatrixXd r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (Index j = 0; j < p; ++j)
        if (r(j, j) < 0.0) q.col(j) = -q.col(j);
    return q;
}

Generated generate(const SettingSpec& spec) {
    spec.validate();
    SeededRng params = spec.rng.child(0);
    Eigen::VectorXd beta;
    Eigen::MatrixXd rotation;
    if (spec.setting == Setting::A) {
        beta = Eigen::VectorXd::Zero(spec.p);
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        for (Index j = 0; j < kActive; ++j) beta(j) = unit(params);
    } else if (spec.setting == Setting::C) {
        rotation = haar_orthogonal(spec.p, params);
    }
    Truth truth(spec.setting, spec.p, spec.noise_variance, std::move(beta), std::move(rotation));
    SeededRng obs = spec.rng.child(1);
    Eigen::MatrixXd x;
    Eigen::VectorXd y;
    truth.draw(spec.n, obs, x, y);
    return {Dataset(std::move(x), std::move(y)), std::move(truth)};
}

std::string_view to_string(Family family) noexcept {
    switch (family) {
    case Family::normal: return "normal";
    case Family::boot: return "boot";
    case Family::image: return "image";
    case Family::median: return "median";
    }
    return "?";
}

std::optional<Family> parse_family(std::string_view name) noexcept {
    if (name == "normal") return Family::normal;
    if (name == "boot") return Family::boot;
    if (name == "image") return Family::image;
    if (name == "median") return Family::median;
    return std::nullopt;
}

Method method_for(const MethodChoice& choice) {
    switch (choice.parameter) {
    case Parameter::beta:
        if (choice.family == Family::normal) return Method::normal_bonferroni;
        if (choice.family == Family::boot) return Method::boot_cube;
        if (choice.family == Family::image) return Method::image_boot;
        break;
    case Parameter::gamma:
        if (choice.family == Family::normal) return Method::normal_bonferroni;
        if (choice.family == Family::boot) return Method::boot_cube;
        break;
    case Parameter::phi:
        if (choice.family == Family::median) return Method::median_order;
        break;
    case Parameter::rho:
        if (choice.family == Family::normal) return Method::prediction;
        break;
    }
    throw InvalidArgument("method " + std::string(to_string(choice.family)) + " is not available for " +
                          std::string(to_string(choice.parameter)));
}

double CoverageCell::joint_coverage() const {
    const Index m = successes();
    return m > 0 ? static_cast<double>(joint_hits) / static_cast<double>(m) : 0.0;
}

double CoverageCell::coordinate_coverage() const {
    return coordinates > 0 ? static_cast<double>(coordinate_hits) / static_cast<double>(coordinates) : 0.0;
}

double CoverageCell::mean_width() const {
    const Index m = successes();
    return m > 0 ? width_sum / static_cast<double>(m) : 0.0;
}

double CoverageCell::mc_se() const {
    const Index m = successes();
    if (m == 0) return 0.0;
    const double c = joint_coverage();
    return std::sqrt(c * (1.0 - c) / static_cast<double>(m));
}

OracleTargets oracle_targets(const Truth& truth, const SelectedModel& model,
                             const OracleRequest& request, std::int64_t draws,
                             const SeededRng& rng, Exec exec) {
    if (draws < 2) throw InvalidArgument("oracle: need at least two draws");
    OracleTargets out;
    out.beta = truth.projection_beta(model.selected);
    const Index k = model.size();
    if (!request.gamma && !request.phi && !request.rho) return out;

    IndexList used(model.selected.begin(), model.selected.end());
    for (const auto& [j, lo] : model.leaveout) used.insert(used.end(), lo.selected.begin(), lo.selected.end());
    const IndexList columns = truth.required_columns(used);

    const std::int64_t chunks = (draws + kOracleChunk - 1) / kOracleChunk;
    // Per chunk: gamma sums (k), gamma squares (k), rho sum, rho square.
    Eigen::MatrixXd partial = Eigen::MatrixXd::Zero(2 * k + 2, chunks);
    std::vector<std::vector<double>> phi_values;
    if (request.phi) phi_values.assign(static_cast<std::size_t>(k), std::vector<double>(static_cast<std::size_t>(draws)));
    const double tau = request.tau.value_or(std::numeric_limits<double>::infinity());

    for_each_index(exec, chunks, [&](std::int64_t c) {
        SeededRng local = rng.child(static_cast<std::uint64_t>(c));
        const std::int64_t begin = c * kOracleChunk;
        const Index rows = static_cast<Index>(std::min<std::int64_t>(draws, begin + kOracleChunk) - begin);
        Eigen::MatrixXd x;
        Eigen::VectorXd y;
        truth.draw(rows, local, x, y, &columns);
        const Eigen::VectorXd full = model.predict(x);
        if (request.rho) {
            const Eigen::ArrayXd a = (y - full).array().abs();
            partial(2 * k, c) = a.sum();
            partial(2 * k + 1, c) = a.square().sum();
        }
        if (!request.gamma && !request.phi) return;
        for (Index j = 0; j < k; ++j) {
            const Index cov = model.selected[static_cast<std::size_t>(j)];
            const Eigen::VectorXd without = model.predict_without(cov, x);
            double s = 0.0, s2 = 0.0;
            for (Index i = 0; i < rows; ++i) {
                if (request.gamma) {
                    const double d = std::abs(y(i) - hard_threshold(without(i), tau)) -
                                     std::abs(y(i) - hard_threshold(full(i), tau));
                    s += d;
                    s2 += d * d;
                }
                if (request.phi) {
                    phi_values[static_cast<std::size_t>(j)][static_cast<std::size_t>(begin + i)] =
                        std::abs(y(i) - without(i)) - std::abs(y(i) - full(i));
                }
            }
            partial(j, c) = s;
            partial(k + j, c) = s2;
        }
    });

    Eigen::VectorXd total = Eigen::VectorXd::Zero(2 * k + 2);
    for (std::int64_t c = 0; c < chunks; ++c) total += partial.col(c);
    const auto m = static_cast<double>(draws);
    auto se_of = [m](double sum, double sq) {
        const double mean = sum / m;
        const double var = std::max(0.0, (sq - m * mean * mean) / (m - 1.0));
        return std::sqrt(var / m);
    };
    if (request.gamma) {
        out.gamma.resize(k);
        out.gamma_se.resize(k);
        for (Index j = 0; j < k; ++j) {
            out.gamma(j) = total(j) / m;
            out.gamma_se(j) = se_of(total(j), total(k + j));
        }
    }
    if (request.rho) {
        out.rho = total(2 * k) / m;
        out.rho_se = se_of(total(2 * k), total(2 * k + 1));
    }
    if (request.phi) {
        out.phi.resize(k);
        for (Index j = 0; j < k; ++j) {
            auto& v = phi_values[static_cast<std::size_t>(j)];
            const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
            std::nth_element(v.begin(), mid, v.end());
            double med = *mid;
            if (v.size() % 2 == 0) med = 0.5 * (med + *std::max_element(v.begin(), mid));
            out.phi(j) = med;
        }
    }
    return out;
}

namespace {

struct CellOutcome {
    bool failed = false;
    bool joint = false;
    Index hits = 0;
    Index coords = 0;
    double width = 0.0;
};

struct RepOutcome {
    bool selection_failed = false;
    std::vector<CellOutcome> cells;
    std::optional<double> oracle_z;
};

void score(CellOutcome& cell, const ConfidenceRectangle& rect, const Eigen::VectorXd& target) {
    cell.coords = target.size();
    cell.hits = 0;
    for (Index j = 0; j < target.size(); ++j)
        if (rect.contains(j, target(j))) ++cell.hits;
    cell.joint = cell.hits == cell.coords;
    cell.width = target.size() > 0 ? rect.widths().mean() : 0.0;
}

} // namespace

CoverageResult run_coverage(const SettingSpec& spec, const SelectorSpec& selector,
                            const std::vector<MethodChoice>& methods, double alpha, Index reps,
                            const CoverageOptions& options, const SeededRng& rng) {
    spec.validate();
    selector.validate();
    if (reps < 1) throw InvalidArgument("coverage: need at least one replication");
    if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidArgument("alpha must lie in (0, 1)");
    if (methods.empty()) throw InvalidArgument("coverage: no methods requested");
    std::vector<Method> rect_methods;
    OracleRequest request;
    for (const auto& m : methods) {
        rect_methods.push_back(method_for(m));
        request.gamma |= m.parameter == Parameter::gamma;
        request.phi |= m.parameter == Parameter::phi;
        request.rho |= m.parameter == Parameter::rho;
    }
    if ((request.gamma || request.phi || request.rho) && options.oracle_draws < 100000)
        throw InvalidArgument("coverage: oracle_draws must be at least 1e5");

    std::vector<RepOutcome> outcomes(static_cast<std::size_t>(reps));
    for_each_index(options.exec, reps, [&](std::int64_t r) {
        RepOutcome& out = outcomes[static_cast<std::size_t>(r)];
        out.cells.resize(methods.size());
        const SeededRng rep = rng.child(static_cast<std::uint64_t>(r));
        SettingSpec local = spec;
        local.rng = rep.child(0);
        const Generated gen = generate(local);
        const DataSplit parts = split(gen.data, rep.child(1));
        SelectedModel model;
        try {
            model = select_model(parts.first, selector, rep.child(2));
        } catch (const InvalidArgument&) {
            throw;
        } catch (const Error&) {
            out.selection_failed = true;
            return;
        }
        const Dataset& d2 = parts.second;
        const Index n2 = d2.rows();

        LocoConfig loco = LocoConfig::defaults_for(parts.first, rep.child(3));
        loco.exec = Exec::serial;
        OracleRequest req = request;
        req.tau = loco.tau;
        const OracleTargets truth =
            oracle_targets(gen.truth, model, req, options.oracle_draws, rep.child(6), options.exec);
        if (r == 0 && options.check_oracle && request.gamma) {
            OracleRequest g_only;
            g_only.gamma = true;
            g_only.tau = loco.tau;
            const OracleTargets twice =
                oracle_targets(gen.truth, model, g_only, 2 * options.oracle_draws, rep.child(7), options.exec);
            double z = 0.0;
            for (Index j = 0; j < model.size(); ++j) {
                const double se = std::hypot(truth.gamma_se(j), twice.gamma_se(j));
                const double diff = std::abs(truth.gamma(j) - twice.gamma(j));
                z = std::max(z, se > 0.0 ? diff / se : (diff > 0.0 ? INFINITY : 0.0));
            }
            out.oracle_z = z;
        }

        BootstrapConfig boot;
        boot.replicates = options.boot_reps;
        boot.alpha = alpha;
        boot.rng = rep.child(4);
        boot.exec = Exec::serial;

        std::optional<DeltaMatrix> deltas;
        for (std::size_t c = 0; c < methods.size(); ++c) {
            CellOutcome& cell = out.cells[c];
            const MethodChoice& m = methods[c];
            BootstrapConfig bcfg = boot;
            bcfg.rng = boot.rng.child(c);
            try {
                switch (m.parameter) {
                case Parameter::beta: {
                    if (m.family == Family::normal) {
                        const PluginCovariance cov = plugin_covariance(d2, model.selected);
                        const Eigen::VectorXd est = ols(d2, model.selected);
                        score(cell, ci_normal_bonferroni(est, cov, n2, alpha), truth.beta);
                    } else if (m.family == Family::boot) {
                        score(cell, boot_ci_beta(d2, model.selected, bcfg).cube, truth.beta);
                    } else {
                        score(cell, image_boot_ci(d2, model.selected, bcfg, options.image_samples).ci, truth.beta);
                    }
                    break;
                }
                case Parameter::gamma: {
                    if (!deltas) deltas = delta_matrix(model, d2, loco);
                    if (m.family == Family::normal) {
                        score(cell, loco_ci_normal(*deltas, alpha, options.mc_draws, rep.child(5), Exec::serial).rect,
                              truth.gamma);
                    } else {
                        score(cell, loco_ci_boot(*deltas, bcfg).cube, truth.gamma);
                    }
                    break;
                }
                case Parameter::phi:
                    score(cell, median_loco_ci(model, d2, alpha).ci, truth.phi);
                    break;
                case Parameter::rho: {
                    Eigen::VectorXd target(1);
                    target << truth.rho;
                    score(cell, prediction_ci(model, d2, alpha).ci, target);
                    break;
                }
                }
            } catch (const InvalidArgument&) {
                throw;
            } catch (const Error&) {
                cell = CellOutcome{};
                cell.failed = true;
            }
        }
    });

    CoverageResult result;
    result.spec = spec;
    result.selector = selector;
    result.alpha = alpha;
    result.reps = reps;
    for (std::size_t c = 0; c < methods.size(); ++c) {
        CoverageCell cell;
        cell.choice = methods[c];
        cell.method = rect_methods[c];
        cell.reps = reps;
        result.cells.push_back(cell);
    }
    for (const auto& out : outcomes) {
        if (out.oracle_z) {
            result.oracle.performed = true;
            result.oracle.max_z = *out.oracle_z;
        }
        if (out.selection_failed) {
            ++result.selection_failures;
            for (auto& cell : result.cells) ++cell.failures;
            continue;
        }
        for (std::size_t c = 0; c < methods.size(); ++c) {
            const CellOutcome& o = out.cells[c];
            CoverageCell& cell = result.cells[c];
            if (o.failed) {
                ++cell.failures;
                continue;
            }
            cell.joint_hits += o.joint ? 1 : 0;
            cell.coordinate_hits += o.hits;
            cell.coordinates += o.coords;
            cell.width_sum += o.width;
        }
    }
    result.config_echo = {
        "setting=" + std::string(to_string(spec.setting)),
        "n=" + std::to_string(spec.n),
        "p=" + std::to_string(spec.p),
        "noise_variance=" + format_double(spec.noise_variance),
        "selector=" + to_json(selector),
        "alpha=" + format_double(alpha),
        "reps=" + std::to_string(reps),
        "boot_reps=" + std::to_string(options.boot_reps),
        "mc_draws=" + std::to_string(options.mc_draws),
        "image_samples=" + std::to_string(options.image_samples),
        "oracle_draws=" + std::to_string(options.oracle_draws),
        "seed=" + std::to_string(rng.seed()) + " stream=" + std::to_string(rng.stream_id()),
    };
    return result;
}

void write_coverage_header(std::ostream& out) {
    out << "setting,n,p,parameter,method,level,reps,joint_coverage,mean_width,mc_se\n";
}

void write_coverage_rows(std::ostream& out, const CoverageResult& result) {
    for (const auto& cell : result.cells) {
        out << to_string(result.spec.setting) << ',' << result.spec.n << ',' << result.spec.p << ','
            << to_string(cell.choice.parameter) << ',' << to_string(cell.method) << ','
            << format_double(1.0 - result.alpha) << ',' << cell.successes() << ','
            << format_double(cell.joint_coverage()) << ',' << format_double(cell.mean_width()) << ','
            << format_double(cell.mc_se()) << '\n';
    }
}

} // namespace splitinf
