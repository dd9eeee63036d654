#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "mdopf/errors.hpp"
#include "mdopf/types.hpp"

namespace mdopf {

struct Bus {
    std::string id;
    PhaseSet phases;
    Vec3 vmin = Vec3::Constant(0.8);  // p.u. magnitude
    Vec3 vmax = Vec3::Constant(1.2);
    bool is_slack = false;
    std::optional<Vec3c> vref;
};

struct Line {
    std::string id;
    std::string from_bus;
    std::string to_bus;
    PhaseSet phases;
    Mat3c z_series = Mat3c::Zero();
    Mat3c ysh_from = Mat3c::Zero();
    Mat3c ysh_to = Mat3c::Zero();
};

struct ShuntDevice {
    std::string id;
    std::string bus;
    Mat3c y = Mat3c::Zero();
};

enum class Configuration { wye, delta };
enum class LoadModel { constant_power, exponential };

/// For delta loads, slot phi describes the branch between phi and phi+.
struct LoadSpec {
    std::string id;
    std::string bus;
    Configuration configuration = Configuration::wye;
    PhaseSet phases;
    LoadModel model = LoadModel::constant_power;
    Vec3c s0 = Vec3c::Zero();
    Vec3 v0mag = Vec3::Ones();
    Vec3 alpha = Vec3::Zero();
    Vec3 beta = Vec3::Zero();
};

/// Dispatchable source other than the slack. Only recorded so that solvers can
/// refuse networks that carry them.
struct Generator {
    std::string id;
    std::string bus;
    PhaseSet phases;
};

struct Network {
    std::vector<Bus> buses;
    std::vector<Line> lines;
    std::vector<ShuntDevice> shunts;
    std::vector<LoadSpec> loads;
    std::vector<Generator> generators;
    std::string root;
    double sbase_kva = 1.0;

    std::optional<std::size_t> bus_index(const std::string& id) const;
    const Bus& bus(const std::string& id) const;
    std::size_t root_index() const;
};

struct Violation {
    std::string element_id;
    std::string message;
};

struct ValidationReport {
    std::vector<Violation> violations;

    bool ok() const { return violations.empty(); }
    std::string to_string() const;
};

class ValidationError : public InputError {
public:
    explicit ValidationError(ValidationReport report);
    const ValidationReport& report() const { return report_; }

private:
    ValidationReport report_;
};

/// Checks every structural and domain invariant of the network. Never throws.
ValidationReport validate(const Network& network);

/// Parent/child structure of the network hanging from its root.
struct OrientedTree {
    static constexpr std::size_t npos = static_cast<std::size_t>(-1);

    std::vector<std::size_t> parent;       // by bus index; npos for the root
    std::vector<std::size_t> parent_line;  // by bus index; npos for the root
    std::vector<std::vector<std::size_t>> children;
    std::vector<std::size_t> order;        // root first, every bus after its parent
    std::vector<std::size_t> position;     // inverse of order
    std::vector<Line> lines;               // same indexing as network.lines, from_bus is the parent side
    std::vector<std::size_t> line_child;   // bus index of each line's child end
};

OrientedTree orient_toward_root(const Network& network);

/// Degree-one buses other than the root.
std::vector<std::string> leaf_buses(const Network& network);

/// Bus phases touched by a load: the load phases for wye, {phi, phi+} per branch for delta.
PhaseSet load_footprint(const LoadSpec& load);

} // namespace mdopf
