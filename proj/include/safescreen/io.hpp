#pragma once

#include <iosfwd>
#include <string>
#include <string_view>

#include "safescreen/dataset.hpp"
#include "safescreen/kernel.hpp"
#include "safescreen/path.hpp"
#include "safescreen/screening.hpp"
#include "safescreen/solver.hpp"

namespace safescreen {

/// A trained dual solution with enough context to reuse it safely.
struct Model {
  DualSolution solution;  // margins are not serialized
  Kernel kernel;
  std::string dataset_hash;
  double kkt_tolerance = 0.0;
};

/// {"C", "alpha", "kernel", "gamma" (rbf only), "dataset_hash", "kkt_tolerance"}
std::string model_to_json(const Model& model);
Model model_from_json(std::string_view text);

void save_model(const std::string& path, const Model& model);
Model load_model(const std::string& path);

/// {"generator", "seed", "n", "d"}
std::string metadata_to_json(const Dataset& data);

/// Statuses as "R"/"L"/"U", bounds as parallel "lower"/"upper" arrays.
std::string report_to_json(const ScreeningReport& report);
/// Columns index (1-based), lower, upper, status.
void write_report_csv(std::ostream& out, const ScreeningReport& report);

/// Columns C, n_screened_R, n_screened_L, n_kept, rate_all, dual_obj,
/// primal_obj, gap, verified.
void write_path_csv(std::ostream& out, const PathResult& result);

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view contents);

}  // namespace safescreen
