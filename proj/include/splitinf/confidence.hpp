#pragma once

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <string_view>

namespace splitinf {

enum class Method {
    normal_cube,
    normal_bonferroni,
    boot_cube,
    boot_rect,
    image_boot,
    median_order,
    prediction,
};

enum class Parameter { beta, gamma, phi, rho };

std::string_view to_string(Method method) noexcept;
std::string_view to_string(Parameter parameter) noexcept;
std::optional<Parameter> parse_parameter(std::string_view name) noexcept;

/// Per-coordinate closed intervals with nominal level 1 - alpha.
class ConfidenceRectangle {
public:
    ConfidenceRectangle(Eigen::VectorXd lower, Eigen::VectorXd upper, double level, Method method);

    /// center +- radius(j) for every coordinate.
    static ConfidenceRectangle around(const Eigen::VectorXd& center, const Eigen::VectorXd& radius,
                                      double level, Method method);

    [[nodiscard]] const Eigen::VectorXd& lower() const noexcept { return lower_; }
    [[nodiscard]] const Eigen::VectorXd& upper() const noexcept { return upper_; }
    [[nodiscard]] double level() const noexcept { return level_; }
    [[nodiscard]] Method method() const noexcept { return method_; }
    [[nodiscard]] Eigen::Index size() const noexcept { return lower_.size(); }

    [[nodiscard]] Eigen::VectorXd widths() const { return upper_ - lower_; }
    [[nodiscard]] bool contains(Eigen::Index j, double value) const noexcept {
        return lower_(j) <= value && value <= upper_(j);
    }
    [[nodiscard]] bool contains(const Eigen::VectorXd& point) const;

private:
    Eigen::VectorXd lower_;
    Eigen::VectorXd upper_;
    double level_;
    Method method_;
};

} // namespace splitinf
