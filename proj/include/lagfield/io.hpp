#pragma once

#include <filesystem>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "lagfield/datagen.hpp"
#include "lagfield/del.hpp"
#include "lagfield/density.hpp"
#include "lagfield/grid.hpp"
#include "lagfield/solver.hpp"
#include "lagfield/train.hpp"
#include "lagfield/twave.hpp"

// Text formats. Every floating value is written with 17 significant digits,
// so reading a written file reproduces the values bit for bit.
namespace lagfield::io {

using json = nlohmann::json;

inline constexpr const char* kVersion = "0.1.0";

/// "%.17g".
std::string format_double(double v);

// Grid files:
//   lagfield-grid
//   T=<T> l=<l> N=<N> M=<M> d=<d> [RESIDUAL=1]
//   then one line per (i, j), row-major, with d comma-separated values.
void write_grid(std::ostream& os, const FieldGrid& U);
FieldGrid read_grid(std::istream& is);
void write_grid(const std::filesystem::path& p, const FieldGrid& U);
FieldGrid read_grid(const std::filesystem::path& p);

/// Residual fields share the grid layout: header flag RESIDUAL=1 and rows 1..N-1.
void write_residual(std::ostream& os, const ResidualField& R);
ResidualField read_residual(std::istream& is);

// Checkpoints:
//   lagfield-checkpoint
//   kind=neural|wave|constant
//   neural:   architecture=<descriptor>, params=<P>, then P values one per line
//   wave:     dt=, dx=, d=, potential=<name>
//   constant: d=, value=
void write_checkpoint(const std::filesystem::path& p, const DensityModel& Ld);
std::shared_ptr<DensityModel> read_checkpoint(const std::filesystem::path& p);
/// Throws FormatError unless the file holds a neural density of this architecture.
NeuralDensity read_neural_checkpoint(const std::filesystem::path& p);

/// CSV: epoch,l_del,l_reg,seconds,floored.
void write_train_log(const std::filesystem::path& p, const TrainRecord& rec);

// Travelling-wave results:
//   lagfield-tw
//   T= l= N= M=
//   c=<speed>  period=<l>  loss=<final loss>
//   m,re,im lines for m = m_min..m_max
void write_tw(const std::filesystem::path& p, const TravellingWaveState& s, const Mesh& mesh, double loss);
TravellingWaveState read_tw(const std::filesystem::path& p, Mesh* mesh = nullptr);

/// <dir>/traj_<k>.grid for every k plus <dir>/manifest.json.
void write_dataset(const std::filesystem::path& dir, const std::vector<FieldGrid>& data, const json& manifest);
/// Reads traj_0.grid, traj_1.grid, ... as listed by the manifest's "K"
/// entry; throws FormatError if a file is missing or the meshes disagree.
std::vector<FieldGrid> read_dataset(const std::filesystem::path& dir, json* manifest = nullptr);

// JSON configs. Unknown keys are errors (FormatError).
Mesh mesh_from_json(const json& j);
json to_json(const Mesh& m);
GenConfig gen_config_from_json(const json& j);
json to_json(const GenConfig& c);
TrainConfig train_config_from_json(const json& j);
json to_json(const TrainConfig& c);
SolverConfig solver_config_from_json(const json& j);
json to_json(const SolverConfig& c);
FindTwConfig find_tw_config_from_json(const json& j);
json to_json(const FindTwConfig& c);

json read_json(const std::filesystem::path& p);
void write_json(const std::filesystem::path& p, const json& j);

/// Throws FormatError naming the first key of j not in `allowed`.
void require_keys(const json& j, std::initializer_list<const char*> allowed, const char* what);

}  // namespace lagfield::io
