#pragma once

#include "phtopo/features.hpp"
#include "phtopo/sweeps.hpp"
#include "phtopo/tracking.hpp"

#include <json.hpp>

#include <iosfwd>
#include <string>

namespace phtopo {

/// Keys sorted, floats as %.17g, two-space indent, trailing newline. The same
/// value always produces the same bytes.
std::string dump_json(const nlohmann::json& j);

/// Shortest form used for CSV cells (%.17g).
std::string format_double(double v);

nlohmann::json to_json(const EP& ep);
nlohmann::json to_json(const PHL& phl);
nlohmann::json to_json(const FeatureSet& fs);

/// {cycle_type, permutation, cycles, windings, basepoint, loop}
nlohmann::json to_json(const LoopClass& lc, const TrackedBands& tb);

nlohmann::json to_json(const SweepResult& r);

/// Observable names in the order of the spec.
std::vector<std::string> sweep_columns(const SweepResult& r);

/// kx,ky,band,re_e,im_e over the scan nodes, ky-major (rows of constant ky).
/// Bands carry labels continued from node (0, 0) along the first row and
/// then up each column.
void write_spectrum_csv(std::ostream& out, const GridScan& gs);

/// step,t,kx,ky,band,re_e,im_e along a tracked loop.
void write_trajectory_csv(std::ostream& out, const TrackedBands& tb);

/// parameter,valid,<observable columns>
void write_sweep_csv(std::ostream& out, const SweepResult& r);

} // namespace phtopo
