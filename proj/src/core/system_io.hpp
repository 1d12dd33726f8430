#pragma once

#include "core/partition.hpp"
#include "core/tensor_ortho.hpp"

#include <json.hpp>

#include <string>

namespace osp {

constexpr int kFormatVersion = 1;

nlohmann::json filtration_to_json(const TensorFiltration &f);
/// Accepts {"dim", "intervals", "schedule"} plus optional "breakpoints" for a nontrivial base.
TensorFiltration filtration_from_json(const nlohmann::json &j);

nlohmann::json system_to_json(const OrthoSystem &sys);
OrthoSystem system_from_json(const nlohmann::json &j);

/// Paths ending in ".bin" use the binary layout, anything else JSON.
void save_system(const OrthoSystem &sys, const std::string &path);
OrthoSystem load_system(const std::string &path);

std::string read_text_file(const std::string &path);
void write_text_file(const std::string &path, const std::string &text);

} // namespace osp
