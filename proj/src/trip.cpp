#include "imugan/trip.hpp"

namespace imugan {

std::string_view to_string(DrivingStyle style) {
    return style == DrivingStyle::aggressive ? "aggressive" : "normal";
}

std::optional<DrivingStyle> style_from_string(std::string_view name) {
    if (name == "normal") return DrivingStyle::normal;
    if (name == "aggressive") return DrivingStyle::aggressive;
    if (name == "unlabeled" || name.empty()) return std::nullopt;
    throw ContractViolation("unknown label '" + std::string(name) + "'");
}

std::string_view label_string(const std::optional<DrivingStyle>& label) {
    return label ? to_string(*label) : "unlabeled";
}

} // namespace imugan
