#include "coorbit/io.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace coorbit::io {

namespace {

[[noreturn]] void parse_fail(const std::string& what) { throw Error(Errc::parse_error, what); }

Eigen::MatrixXd matrix_from_json(const Json& j, int dim, std::size_t index) {
  const std::string where = "matrices[" + std::to_string(index) + "]";
  if (!j.is_array()) parse_fail(where + " is not an array");
  Eigen::MatrixXd m(dim, dim);
  if (!j.empty() && j.front().is_array()) {
    if (j.size() != static_cast<std::size_t>(dim)) parse_fail(where + " does not have dim rows");
    for (int r = 0; r < dim; ++r) {
      const auto& row = j[static_cast<std::size_t>(r)];
      if (!row.is_array() || row.size() != static_cast<std::size_t>(dim)) {
        parse_fail(where + " row " + std::to_string(r) + " does not have dim entries");
      }
      for (int c = 0; c < dim; ++c) {
        const auto& v = row[static_cast<std::size_t>(c)];
        if (!v.is_number()) parse_fail(where + " has a non-numeric entry");
        m(r, c) = v.get<double>();
      }
    }
    return m;
  }
  if (j.size() != static_cast<std::size_t>(dim) * dim) parse_fail(where + " does not have dim^2 entries");
  for (int r = 0; r < dim; ++r) {
    for (int c = 0; c < dim; ++c) {
      const auto& v = j[static_cast<std::size_t>(r * dim + c)];
      if (!v.is_number()) parse_fail(where + " has a non-numeric entry");
      m(r, c) = v.get<double>();
    }
  }
  return m;
}

Json pair_json(const std::pair<std::string, std::string>& p) { return Json::array({p.first, p.second}); }

}  // namespace

GroupSpec parse_group_spec(const Json& j) {
  if (!j.is_object()) parse_fail("group spec must be a JSON object");
  GroupSpec spec;
  if (!j.contains("type") || !j["type"].is_string()) parse_fail("group spec needs a string \"type\"");
  spec.type = j["type"].get<std::string>();
  static const std::vector<std::string> kTypes{"cyclic", "sign_flip", "dihedral", "custom", "generated"};
  if (std::find(kTypes.begin(), kTypes.end(), spec.type) == kTypes.end()) {
    parse_fail("unknown group type \"" + spec.type + "\"");
  }
  if (!j.contains("dim") || !j["dim"].is_number_integer()) parse_fail("group spec needs an integer \"dim\"");
  spec.dim = j["dim"].get<int>();
  if (spec.dim < 1) parse_fail("\"dim\" must be positive");
  if (j.contains("n_max")) {
    if (!j["n_max"].is_number_integer()) parse_fail("\"n_max\" must be an integer");
    spec.n_max = j["n_max"].get<int>();
  }
  if (j.contains("tol")) {
    if (!j["tol"].is_number()) parse_fail("\"tol\" must be a number");
    spec.tol = j["tol"].get<double>();
  }
  if (spec.type == "custom" || spec.type == "generated") {
    if (!j.contains("matrices") || !j["matrices"].is_array() || j["matrices"].empty()) {
      parse_fail("\"" + spec.type + "\" group needs a nonempty \"matrices\" list");
    }
    const auto& list = j["matrices"];
    for (std::size_t k = 0; k < list.size(); ++k) spec.matrices.push_back(matrix_from_json(list[k], spec.dim, k));
  }
  return spec;
}

Json to_json(const GroupSpec& spec) {
  Json j;
  j["type"] = spec.type;
  j["dim"] = spec.dim;
  if (!spec.matrices.empty()) {
    Json list = Json::array();
    for (const auto& m : spec.matrices) list.push_back(matrix_json(m));
    j["matrices"] = list;
  }
  j["n_max"] = spec.n_max;
  j["tol"] = spec.tol;
  return j;
}

GroupSpec load_group_spec(const std::string& path) {
  const std::string text = read_file(path);
  Json j;
  try {
    j = Json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    parse_fail(path + ": " + e.what());
  }
  return parse_group_spec(j);
}

GroupActiond build_group(const GroupSpec& spec) {
  if (spec.type == "cyclic") return build_cyclic_shift(spec.dim);
  if (spec.type == "sign_flip") return build_sign_flip(spec.dim);
  if (spec.type == "dihedral") return build_dihedral(spec.dim);
  if (spec.type == "custom") return GroupActiond::from_elements(spec.matrices, spec.tol);
  return close_under_product(spec.matrices, spec.n_max, spec.tol);
}

Datasetd read_dataset_csv(std::istream& in, bool has_ids) {
  std::vector<Eigen::VectorXd> points;
  std::vector<std::string> ids;
  std::string line;
  std::size_t line_no = 0;
  Eigen::Index dim = -1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string::npos || line[first] == '#') continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (has_ids) {
      if (cells.empty()) parse_fail("line " + std::to_string(line_no) + ": missing id");
      std::string id = cells.front();
      id.erase(0, id.find_first_not_of(" \t"));
      id.erase(id.find_last_not_of(" \t") + 1);
      ids.push_back(id);
      cells.erase(cells.begin());
    }
    Eigen::VectorXd p(static_cast<Eigen::Index>(cells.size()));
    for (std::size_t k = 0; k < cells.size(); ++k) {
      const char* begin = cells[k].c_str();
      char* end = nullptr;
      const double v = std::strtod(begin, &end);
      while (end && (*end == ' ' || *end == '\t')) ++end;
      if (end == begin || *end != '\0') {
        parse_fail("line " + std::to_string(line_no) + ": bad number \"" + cells[k] + "\"");
      }
      p(static_cast<Eigen::Index>(k)) = v;
    }
    if (dim < 0) dim = p.size();
    if (p.size() != dim || dim == 0) {
      parse_fail("line " + std::to_string(line_no) + ": expected " + std::to_string(dim) + " values");
    }
    points.push_back(std::move(p));
  }
  if (dim < 0) return Datasetd(0);
  try {
    return Datasetd(dim, std::move(points), std::move(ids));
  } catch (const Error& e) {
    parse_fail(e.what());
  }
}

Datasetd load_dataset_csv(const std::string& path, bool has_ids) {
  std::istringstream in(read_file(path));
  return read_dataset_csv(in, has_ids);
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_csv(std::ostream& out, const Eigen::MatrixXd& rows, const std::vector<std::string>& ids) {
  for (Eigen::Index r = 0; r < rows.rows(); ++r) {
    bool first = true;
    if (!ids.empty()) {
      out << ids[static_cast<std::size_t>(r)];
      first = false;
    }
    for (Eigen::Index c = 0; c < rows.cols(); ++c) {
      if (!first) out << ',';
      out << format_double(rows(r, c));
      first = false;
    }
    out << '\n';
  }
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::io_error, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw Error(Errc::io_error, "cannot read " + path);
  return ss.str();
}

void write_file(const std::string& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::io_error, "cannot open " + path + " for writing");
  out << contents;
  if (!out) throw Error(Errc::io_error, "cannot write " + path);
}

std::string digest(const std::string& contents) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : contents) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

Json vector_json(const Eigen::VectorXd& v) {
  Json j = Json::array();
  for (Eigen::Index k = 0; k < v.size(); ++k) j.push_back(v(k));
  return j;
}

Json matrix_json(const Eigen::MatrixXd& m) {
  Json j = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) j.push_back(vector_json(m.row(r).transpose()));
  return j;
}

Json to_json(const VerificationReport& report) {
  Json j;
  j["passed"] = report.passed();
  j["checks"] = {
      {"orthogonality", {{"ok", report.orthogonality_ok}, {"max_residual", report.orthogonality_residual}}},
      {"identity", {{"ok", report.identity_ok}, {"residual", report.identity_residual}}},
      {"closure", {{"ok", report.closure_ok}, {"max_residual", report.closure_residual}}},
      {"inverse", {{"ok", report.inverse_ok}, {"max_residual", report.inverse_residual}}},
      {"duplicates", {{"ok", report.duplicates_ok}, {"min_separation", report.min_element_separation}}},
  };
  j["failures"] = report.failures;
  return j;
}

Json to_json(const GammaProfile& profile) {
  Json j;
  j["dim"] = profile.dim;
  j["order"] = profile.order;
  j["gamma"] = profile.gamma;
  Json elements = Json::array();
  for (const auto& e : profile.per_element) {
    elements.push_back({{"element", e.element}, {"label", e.label}, {"spectrum", e.spectrum}, {"min_rank", e.min_rank}});
  }
  j["per_element"] = elements;
  Json table = Json::object();
  for (const auto& [n, pn] : profile.p_table) table[std::to_string(n)] = pn;
  j["p_table"] = table;
  j["window_bound_holds"] = profile.window_bound_holds();
  return j;
}

Json to_json(const BoundsReport& report) {
  Json j;
  j["a_w"] = report.a_w;
  j["b_w"] = report.b_w;
  j["trivial_upper"] = report.trivial_upper;
  j["witness_lower"] = pair_json(report.witness_lower);
  j["witness_upper"] = pair_json(report.witness_upper);
  j["pair_count"] = report.pair_count;
  j["orbit_count"] = report.orbit_count;
  j["separated"] = report.separated();
  return j;
}

Json to_json(const std::vector<UnseparatedPair>& pairs) {
  Json j = Json::array();
  for (const auto& p : pairs) j.push_back({{"first", p.first}, {"second", p.second}, {"gap", p.gap}});
  return j;
}

Json to_json(const CollisionReport<double>& report) {
  Json j;
  j["x"] = vector_json(report.x);
  j["y"] = vector_json(report.y);
  j["orbit_distance"] = report.orbit_distance;
  j["embedding_gap"] = report.embedding_gap;
  j["ratio"] = report.ratio;
  j["trials"] = report.trials;
  j["seed"] = report.seed;
  return j;
}

Json to_json(const SelectionSet& sel) {
  Json j;
  j["per_window"] = sel.per_window();
  j["sizes"] = sel.sizes();
  j["m"] = sel.m();
  return j;
}

Json to_json(const WindowBankd& bank) {
  Json j = Json::array();
  for (int i = 0; i < bank.size(); ++i) j.push_back(vector_json(bank.window(i)));
  return j;
}

Json to_json(const LinearReduction<double>& reduction) {
  return {{"seed", reduction.seed}, {"matrix", matrix_json(reduction.matrix)}};
}

Json to_json(const EmbeddingConfig<double>& config) {
  Json j;
  j["seed"] = config.seed;
  j["windows"] = to_json(config.bank);
  j["selection"] = to_json(config.sel);
  j["reduction"] = config.reduction ? to_json(*config.reduction) : Json(nullptr);
  return j;
}

SelectionSet selection_from_json(const Json& j) {
  try {
    return SelectionSet(j.at("per_window").get<std::vector<std::vector<int>>>());
  } catch (const nlohmann::json::exception& e) {
    parse_fail(std::string("selection: ") + e.what());
  }
}

WindowBankd bank_from_json(const Json& j) {
  try {
    std::vector<Eigen::VectorXd> windows;
    for (const auto& w : j) {
      const auto values = w.get<std::vector<double>>();
      windows.push_back(Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size())));
    }
    return WindowBankd::from_list(windows);
  } catch (const nlohmann::json::exception& e) {
    parse_fail(std::string("windows: ") + e.what());
  }
}

LinearReduction<double> reduction_from_json(const Json& j) {
  try {
    const auto rows = j.at("matrix").get<std::vector<std::vector<double>>>();
    if (rows.empty()) parse_fail("reduction matrix is empty");
    Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
    for (std::size_t r = 0; r < rows.size(); ++r) {
      if (rows[r].size() != rows.front().size()) parse_fail("reduction matrix is ragged");
      for (std::size_t c = 0; c < rows[r].size(); ++c) {
        m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
      }
    }
    return {std::move(m), j.at("seed").get<std::uint64_t>()};
  } catch (const nlohmann::json::exception& e) {
    parse_fail(std::string("reduction: ") + e.what());
  }
}

EmbeddingConfig<double> config_from_json(const Json& j) {
  try {
    std::optional<LinearReduction<double>> reduction;
    if (j.contains("reduction") && !j["reduction"].is_null()) reduction = reduction_from_json(j["reduction"]);
    return {bank_from_json(j.at("windows")), selection_from_json(j.at("selection")), std::move(reduction),
            j.at("seed").get<std::uint64_t>()};
  } catch (const nlohmann::json::exception& e) {
    parse_fail(std::string("config: ") + e.what());
  }
}

}  // namespace coorbit::io
