#pragma once

#include <Eigen/Dense>

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "splitinf/confidence.hpp"
#include "splitinf/core.hpp"
#include "splitinf/parallel.hpp"
#include "splitinf/rng.hpp"
#include "splitinf/selection.hpp"

namespace splitinf {

enum class Setting { A, B, C };

std::string_view to_string(Setting setting) noexcept;
std::optional<Setting> parse_setting(std::string_view name) noexcept;

struct SettingSpec {
    Setting setting = Setting::B;
    Index n = 100;  // before splitting
    Index p = 50;
    double noise_variance = 0.5;
    SeededRng rng{};

    void validate() const;
};

/// Everything needed to draw fresh observations and to evaluate population
/// targets. Covariates are N(0, I_p) in every setting.
///   A: Y = X beta + N(0, s2), beta_j ~ U[0, 1] for the first five coordinates.
///   B: Y = X1^3 + X2^2 + X3 + X4 + X5 + sqrt(3 s2 / 5) t_5.
///   C: Y = mu_B(R X) + noise, R Haar-distributed orthogonal.
class Truth {
public:
    Truth(Setting setting, Index p, double noise_variance, Eigen::VectorXd beta,
          Eigen::MatrixXd rotation);

    [[nodiscard]] Setting setting() const noexcept { return setting_; }
    [[nodiscard]] Index dim() const noexcept { return p_; }
    [[nodiscard]] double noise_variance() const noexcept { return noise_variance_; }
    [[nodiscard]] const Eigen::VectorXd& linear_beta() const noexcept { return beta_; }
    [[nodiscard]] const Eigen::MatrixXd& rotation() const noexcept { return rotation_; }

    /// Regression function evaluated on each row of x.
    [[nodiscard]] Eigen::VectorXd mean(const Eigen::MatrixXd& x) const;

    /// alpha = E[X Y]; with Sigma = I the projection parameter of any subset
    /// S is alpha restricted to S.
    [[nodiscard]] Eigen::VectorXd population_alpha() const;
    [[nodiscard]] Eigen::VectorXd projection_beta(std::span<const Index> s) const;

    /// Columns a draw must populate for mean() plus `extra`; other columns
    /// may be left at zero when only these are read.
    [[nodiscard]] IndexList required_columns(std::span<const Index> extra) const;

    /// rows fresh observations. Only `columns` are drawn when given (other
    /// entries stay zero); all p otherwise.
    void draw(Index rows, SeededRng& rng, Eigen::MatrixXd& x, Eigen::VectorXd& y,
              const IndexList* columns = nullptr) const;

private:
    Setting setting_;
    Index p_;
    double noise_variance_;
    Eigen::VectorXd beta_;
    Eigen::MatrixXd rotation_;
};

/// Haar orthogonal matrix: QR of a Gaussian matrix with R's diagonal signs
/// folded into Q.
Eigen::MatrixXd haar_orthogonal(Index p, SeededRng rng);

struct Generated {
    Dataset data;
    Truth truth;
};

/// Parameters (beta or R) come from spec.rng.child(0), observations from
/// spec.rng.child(1).
Generated generate(const SettingSpec& spec);

/// Interval family requested per parameter.
enum class Family { normal, boot, image, median };

std::string_view to_string(Family family) noexcept;
std::optional<Family> parse_family(std::string_view name) noexcept;

struct MethodChoice {
    Parameter parameter;
    Family family;
};

/// The rectangle a (parameter, family) pair reports; throws InvalidArgument
/// for unsupported pairs (for example phi with boot).
Method method_for(const MethodChoice& choice);

struct CoverageOptions {
    Index boot_reps = 1000;
    std::int64_t mc_draws = 10000;  // Gaussian sup-norm draws
    Index image_samples = 5000;
    std::int64_t oracle_draws = 100000;
    Exec exec = Exec::parallel;
    /// Re-estimate the gamma oracle of replication 0 with twice the draws.
    bool check_oracle = true;
};

struct CoverageCell {
    MethodChoice choice;
    Method method;
    Index reps = 0;
    Index failures = 0;
    Index joint_hits = 0;
    Index coordinate_hits = 0;
    Index coordinates = 0;
    double width_sum = 0.0;  // per replication, mean width over coordinates

    [[nodiscard]] Index successes() const noexcept { return reps - failures; }
    [[nodiscard]] double joint_coverage() const;
    [[nodiscard]] double coordinate_coverage() const;
    [[nodiscard]] double mean_width() const;
    [[nodiscard]] double mc_se() const;
};

struct OracleCheck {
    bool performed = false;
    double max_z = 0.0;  // max_j |gamma_2N(j) - gamma_N(j)| / combined SE
    [[nodiscard]] bool stable() const noexcept { return !performed || max_z < 3.0; }
};

struct CoverageResult {
    SettingSpec spec;
    SelectorSpec selector;
    double alpha = 0.05;
    Index reps = 0;
    Index selection_failures = 0;
    std::vector<CoverageCell> cells;
    OracleCheck oracle;
    std::vector<std::string> config_echo;
};

/// Population targets of one fitted model: gamma, phi and rho use fresh draws
/// conditional on the model; beta is exact.
struct OracleTargets {
    Eigen::VectorXd beta;
    Eigen::VectorXd gamma;
    Eigen::VectorXd gamma_se;
    Eigen::VectorXd phi;
    double rho = 0.0;
    double rho_se = 0.0;
};

struct OracleRequest {
    bool gamma = false;
    bool phi = false;
    bool rho = false;
    std::optional<double> tau;  // truncation used by gamma
};

OracleTargets oracle_targets(const Truth& truth, const SelectedModel& model,
                             const OracleRequest& request, std::int64_t draws,
                             const SeededRng& rng, Exec exec = Exec::parallel);

/// Replication r uses rng.child(r): data from child(0), split child(1),
/// selection child(2), LOCO noise child(3), bootstrap child(4), Gaussian
/// draws child(5), oracle child(6).
CoverageResult run_coverage(const SettingSpec& spec, const SelectorSpec& selector,
                            const std::vector<MethodChoice>& methods, double alpha, Index reps,
                            const CoverageOptions& options, const SeededRng& rng);

/// setting,n,p,parameter,method,level,reps,joint_coverage,mean_width,mc_se
void write_coverage_header(std::ostream& out);
void write_coverage_rows(std::ostream& out, const CoverageResult& result);

} // namespace splitinf
