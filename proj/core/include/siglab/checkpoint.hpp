#pragma once

#include <Eigen/Dense>

#include <string>
#include <utility>
#include <vector>

namespace siglab {

/// Binary tensor bundle: magic, format version, a JSON manifest of names and
/// shapes, then raw column-major f64 payloads in manifest order.
void save_checkpoint(const std::string& path,
                     const std::vector<std::pair<std::string, const Eigen::MatrixXd*>>& tensors);

/// Loads into the given tensors. The checkpoint must contain exactly the
/// requested names with exactly the requested shapes; anything else is a
/// ParseError (corrupt file) or ValidationError (mismatched architecture).
void load_checkpoint(const std::string& path,
                     const std::vector<std::pair<std::string, Eigen::MatrixXd*>>& tensors);

} // namespace siglab
