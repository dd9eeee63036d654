#include "mdopf/types.hpp"

namespace mdopf {

std::optional<Phase> parse_phase(std::string_view s) {
    if (s == "a" || s == "A") return Phase::a;
    if (s == "b" || s == "B") return Phase::b;
    if (s == "c" || s == "C") return Phase::c;
    return std::nullopt;
}

std::string PhaseSet::to_string() const {
    std::string out = "{";
    for (Phase p : kAllPhases) {
        if (!contains(p)) continue;
        if (out.size() > 1) out += ',';
        out += phase_name(p);
    }
    out += '}';
    return out;
}

Vec3c balanced_pattern(double magnitude) {
    return Vec3c{Complex{magnitude, 0.0}, magnitude * kGamma, magnitude * kGamma * kGamma};
}

} // namespace mdopf
