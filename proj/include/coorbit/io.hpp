#pragma once

// Group spec JSON, dataset CSV and report serialization.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "coorbit/analysis.hpp"
#include "coorbit/embed.hpp"
#include "coorbit/group.hpp"
#include "coorbit/metric.hpp"

namespace coorbit::io {

using Json = nlohmann::ordered_json;

/// {"type": cyclic|sign_flip|dihedral|custom|generated, "dim", "matrices",
/// "n_max", "tol"}. Matrices are row-major, either nested rows or flat.
struct GroupSpec {
  std::string type;
  int dim = 0;
  std::vector<Eigen::MatrixXd> matrices;
  int n_max = kDefaultClosureCap;
  double tol = kDefaultGroupTol;
};

GroupSpec parse_group_spec(const Json& j);
Json to_json(const GroupSpec& spec);
GroupSpec load_group_spec(const std::string& path);
GroupActiond build_group(const GroupSpec& spec);

/// One point per row; with `has_ids` the first column is the point id.
/// Blank lines and lines starting with '#' are skipped.
Datasetd read_dataset_csv(std::istream& in, bool has_ids);
Datasetd load_dataset_csv(const std::string& path, bool has_ids);

/// %.17g rendering.
std::string format_double(double v);
void write_csv(std::ostream& out, const Eigen::MatrixXd& rows, const std::vector<std::string>& ids = {});

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& contents);
/// FNV-1a 64 of the file bytes, as 16 hex digits.
std::string digest(const std::string& contents);

Json to_json(const VerificationReport& report);
Json to_json(const GammaProfile& profile);
Json to_json(const BoundsReport& report);
Json to_json(const std::vector<UnseparatedPair>& pairs);
Json to_json(const CollisionReport<double>& report);
Json to_json(const SelectionSet& sel);
Json to_json(const WindowBankd& bank);
Json to_json(const LinearReduction<double>& reduction);
Json to_json(const EmbeddingConfig<double>& config);

Json vector_json(const Eigen::VectorXd& v);
Json matrix_json(const Eigen::MatrixXd& m);

SelectionSet selection_from_json(const Json& j);
WindowBankd bank_from_json(const Json& j);
LinearReduction<double> reduction_from_json(const Json& j);
EmbeddingConfig<double> config_from_json(const Json& j);

}  // namespace coorbit::io
