#include "splitinf/confidence.hpp"

#include "splitinf/error.hpp"

namespace splitinf {

std::string_view to_string(Method method) noexcept {
    switch (method) {
    case Method::normal_cube: return "normal_cube";
    case Method::normal_bonferroni: return "normal_bonferroni";
    case Method::boot_cube: return "boot_cube";
    case Method::boot_rect: return "boot_rect";
    case Method::image_boot: return "image_boot";
    case Method::median_order: return "median_order";
    case Method::prediction: return "prediction";
    }
    return "unknown";
}

std::string_view to_string(Parameter parameter) noexcept {
    switch (parameter) {
    case Parameter::beta: return "beta";
    case Parameter::gamma: return "gamma";
    case Parameter::phi: return "phi";
    case Parameter::rho: return "rho";
    }
    return "unknown";
}

std::optional<Parameter> parse_parameter(std::string_view name) noexcept {
    if (name == "beta") return Parameter::beta;
    if (name == "gamma") return Parameter::gamma;
    if (name == "phi") return Parameter::phi;
    if (name == "rho") return Parameter::rho;
    return std::nullopt;
}

ConfidenceRectangle::ConfidenceRectangle(Eigen::VectorXd lower, Eigen::VectorXd upper, double level,
                                         Method method)
    : lower_(std::move(lower)), upper_(std::move(upper)), level_(level), method_(method) {
    if (lower_.size() != upper_.size()) throw InvalidArgument("confidence rectangle: size mismatch");
    if (!(level_ > 0.0 && level_ < 1.0)) throw InvalidArgument("confidence rectangle: level outside (0, 1)");
    for (Eigen::Index j = 0; j < lower_.size(); ++j) {
        if (!(lower_(j) <= upper_(j))) throw InvalidArgument("confidence rectangle: lower exceeds upper");
    }
}

ConfidenceRectangle ConfidenceRectangle::around(const Eigen::VectorXd& center,
                                                const Eigen::VectorXd& radius, double level,
                                                Method method) {
    return ConfidenceRectangle(center - radius, center + radius, level, method);
}

bool ConfidenceRectangle::contains(const Eigen::VectorXd& point) const {
    if (point.size() != size()) return false;
    for (Eigen::Index j = 0; j < size(); ++j)
        if (!contains(j, point(j))) return false;
    return true;
}

} // namespace splitinf
