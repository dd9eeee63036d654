#pragma once

#include <array>
#include <complex>
#include <cstdint>
#include <initializer_list>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>

#include <Eigen/Dense>

namespace mdopf {

using Complex = std::complex<double>;
using Vec3 = Eigen::Vector3d;
using Vec3c = Eigen::Vector3cd;
using Mat3c = Eigen::Matrix3cd;

/// Phase a, b, c coded as 0, 1, 2.
enum class Phase : std::uint8_t { a = 0, b = 1, c = 2 };

inline constexpr std::array<Phase, 3> kAllPhases{Phase::a, Phase::b, Phase::c};

constexpr int index(Phase p) { return static_cast<int>(p); }
constexpr Phase phase_at(int i) { return static_cast<Phase>(((i % 3) + 3) % 3); }

/// phi+ = (phi + 1) mod 3
constexpr Phase successor(Phase p) { return phase_at(index(p) + 1); }
/// phi- = (phi + 2) mod 3
constexpr Phase predecessor(Phase p) { return phase_at(index(p) + 2); }

constexpr char phase_name(Phase p) { return static_cast<char>('a' + index(p)); }
std::optional<Phase> parse_phase(std::string_view s);

/// Subset of {a, b, c} stored as a bit mask.
class PhaseSet {
public:
    constexpr PhaseSet() = default;
    constexpr PhaseSet(std::initializer_list<Phase> phases) {
        for (Phase p : phases) insert(p);
    }

    static constexpr PhaseSet all() { return PhaseSet{Phase::a, Phase::b, Phase::c}; }
    static constexpr PhaseSet from_mask(std::uint8_t mask) {
        PhaseSet s;
        s.mask_ = mask & 0x7u;
        return s;
    }

    constexpr bool contains(Phase p) const { return (mask_ >> index(p)) & 1u; }
    constexpr bool contains(int i) const { return contains(phase_at(i)); }
    constexpr void insert(Phase p) { mask_ |= static_cast<std::uint8_t>(1u << index(p)); }
    constexpr bool empty() const { return mask_ == 0; }
    constexpr int size() const { return (mask_ & 1) + ((mask_ >> 1) & 1) + ((mask_ >> 2) & 1); }
    constexpr std::uint8_t mask() const { return mask_; }
    constexpr bool is_subset_of(PhaseSet other) const { return (mask_ & ~other.mask_) == 0; }
    constexpr PhaseSet operator|(PhaseSet o) const { return from_mask(mask_ | o.mask_); }
    constexpr bool operator==(const PhaseSet&) const = default;

    /// e.g. "{a,b}"
    std::string to_string() const;

private:
    std::uint8_t mask_ = 0;
};

/// gamma = exp(-i 2 pi / 3)
inline const Complex kGamma{-0.5, -std::numbers::sqrt3 / 2.0};

/// Balanced positive-sequence pattern (1, gamma, gamma^2).
Vec3c balanced_pattern(double magnitude = 1.0);

} // namespace mdopf
