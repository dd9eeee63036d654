#pragma once

#include <string>

#include <json.hpp>

#include "mdopf/ac_oracle.hpp"
#include "mdopf/lp_solver.hpp"
#include "mdopf/network.hpp"

namespace mdopf::io {

/// Per-unit conversions; vbase_kv is the phase-to-neutral base, sbase_kva the
/// per-phase power base.
Complex impedance_to_pu(Complex z_ohm, double sbase_kva, double vbase_kv);
Complex impedance_to_ohm(Complex z_pu, double sbase_kva, double vbase_kv);
Complex admittance_to_pu(Complex y_s, double sbase_kva, double vbase_kv);
Complex admittance_to_siemens(Complex y_pu, double sbase_kva, double vbase_kv);

/// Parses a feeder document into a validated per-unit network.
/// Throws ParseError (with a JSON path), UnitError or ValidationError.
Network parse_feeder(const nlohmann::json& doc);
Network parse_feeder(const std::string& path);

/// Serialises a network back to the feeder format with all values in p.u.
nlohmann::json to_json(const Network& network);
void write_feeder(const Network& network, const std::string& path);

/// Bus rows `bus,phase,vm_pu,va_deg,w_pu`, then load rows
/// `load,phase,pd_pu,qd_pu,pb_pu,qb_pu`. The linear model has no absolute
/// angle, so its va_deg fields are empty.
void write_solution_csv(const lp::LinearSolution& solution, const Network& network, const std::string& path);
void write_solution_csv(const ac::PhasorState& state, const Network& network, const std::string& path);

} // namespace mdopf::io
