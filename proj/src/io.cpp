#include "safescreen/io.hpp"

#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>

#include "json.hpp"
#include "safescreen/errors.hpp"

namespace safescreen {

using nlohmann::json;

namespace {

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

char status_code(SampleStatus s) {
  switch (s) {
    case SampleStatus::ScreenedR: return 'R';
    case SampleStatus::ScreenedL: return 'L';
    case SampleStatus::Unknown: return 'U';
  }
  return '?';
}

}  // namespace

std::string model_to_json(const Model& model) {
  json j;
  j["C"] = model.solution.C;
  j["alpha"] = model.solution.alpha;
  j["kernel"] = model.kernel.name();
  if (model.kernel.type == Kernel::Type::Rbf) j["gamma"] = model.kernel.gamma;
  j["dataset_hash"] = model.dataset_hash;
  j["kkt_tolerance"] = model.kkt_tolerance;
  return j.dump(2);
}

Model model_from_json(std::string_view text) {
  try {
    const json j = json::parse(text);
    Model model;
    model.solution.C = j.at("C").get<double>();
    model.solution.alpha = j.at("alpha").get<std::vector<double>>();
    const auto kernel = j.at("kernel").get<std::string>();
    if (kernel == "linear") {
      model.kernel = Kernel::linear();
    } else if (kernel == "rbf") {
      model.kernel = Kernel::rbf(j.at("gamma").get<double>());
    } else {
      throw DataError("unknown kernel '" + kernel + "' in model");
    }
    model.dataset_hash = j.value("dataset_hash", "");
    model.kkt_tolerance = j.value("kkt_tolerance", 0.0);
    if (!(model.solution.C > 0.0)) throw DataError("model C must be positive");
    for (double a : model.solution.alpha)
      if (!(a >= 0.0 && a <= model.solution.C)) throw DataError("model alpha outside [0, C]");
    return model;
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed model JSON: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw DataError(std::string("malformed model JSON: ") + e.what());
  }
}

void save_model(const std::string& path, const Model& model) {
  write_file(path, model_to_json(model) + "\n");
}

Model load_model(const std::string& path) { return model_from_json(read_file(path)); }

std::string metadata_to_json(const Dataset& data) {
  json j;
  j["generator"] = data.metadata().generator;
  j["seed"] = data.metadata().seed;
  j["n"] = data.size();
  j["d"] = data.dim();
  return j.dump(2);
}

std::string report_to_json(const ScreeningReport& report) {
  json j;
  j["test"] = std::string(test_name(report.test));
  j["C"] = report.C;
  j["C_ref"] = report.C_ref;
  j["screened_R"] = report.screened_R;
  j["screened_L"] = report.screened_L;
  j["rate_all"] = report.rate_all;
  j["rate_nonsv"] = report.rate_nonsv ? json(*report.rate_nonsv) : json(nullptr);
  auto statuses = json::array();
  auto lower = json::array();
  auto upper = json::array();
  for (std::size_t i = 0; i < report.size(); ++i) {
    statuses.push_back(std::string(1, status_code(report.statuses[i])));
    lower.push_back(report.bounds[i].lower);
    upper.push_back(report.bounds[i].upper);
  }
  j["statuses"] = std::move(statuses);
  j["lower"] = std::move(lower);
  j["upper"] = std::move(upper);
  return j.dump(2);
}

void write_report_csv(std::ostream& out, const ScreeningReport& report) {
  out << "index,lower,upper,status\n";
  for (std::size_t i = 0; i < report.size(); ++i)
    out << i + 1 << ',' << format_double(report.bounds[i].lower) << ','
        << format_double(report.bounds[i].upper) << ',' << status_code(report.statuses[i])
        << '\n';
}

void write_path_csv(std::ostream& out, const PathResult& result) {
  out << "C,n_screened_R,n_screened_L,n_kept,rate_all,dual_obj,primal_obj,gap,verified\n";
  for (const PathStep& s : result.steps)
    out << format_double(s.C) << ',' << s.screened_R << ',' << s.screened_L << ',' << s.kept
        << ',' << format_double(s.rate_all) << ',' << format_double(s.objective.dual_value) << ','
        << format_double(s.objective.primal_value) << ',' << format_double(s.objective.gap) << ','
        << (s.verified ? 1 : 0) << '\n';
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const std::string& path, std::string_view contents) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path + "'");
  out << contents;
  if (!out) throw DataError("write to '" + path + "' failed");
}

}  // namespace safescreen
