#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "specklerc/modes.hpp"

namespace specklerc {

/// Streaming FNV-1a over the file contents. Throws on unreadable files.
std::uint64_t fnv1a64_file(const std::string& path);

void write_text(const std::string& path, const std::string& content);

/// Header row from `columns`, then one CSV row per matrix row (%.12g).
void write_csv(const std::string& path, const std::vector<std::string>& columns,
               const Eigen::MatrixXd& rows);

/// Columns: m, beta_rad_per_um, group_delay_ns, then one profile sample per
/// grid position (position in the header).
void write_basis_csv(const ModeBasis& basis, const std::string& path);

}  // namespace specklerc
