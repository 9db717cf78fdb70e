#pragma once

#include <string>
#include <vector>

#include "agfem/amr.hpp"
#include "agfem/partition_sim.hpp"

namespace agfem {

enum class Experiment : std::uint8_t { Converge, SweepCut, PartitionCheck, Eta0Sweep };

struct GeometryConfig {
  std::string id = "pacman";  // pacman | circle | annulus
  double radius = 0.8;
  double wedge_angle = M_PI / 2.0;
  double r_inner = 0.4;
  Vec2 center{0.0, 0.0};
  Vec2 translation{0.0, 0.0};
  double rotation = 0.0;

  LevelSet build() const;
};

/// Experiment description; round-trips a JSON document (see from_json_file).
struct RunDescriptor {
  Experiment experiment = Experiment::Converge;
  GeometryConfig geometry;
  std::string benchmark = "fichera";  // fichera | shock2d | affine
  SpaceKind space = SpaceKind::Aggregated;
  CriterionKind criterion = CriterionKind::LiBettess;
  double eta0 = 0.25;
  double beta = 25.0;      // Nitsche coefficient of the aggregated space
  double beta_std = 2.0;   // multiplies the per-cell eigenvalue bound instead
  std::vector<double> gamma_sequence;
  int mesh_level = 3;
  std::vector<int> partitions{2, 4, 8};
  int seeds = 50;
  BoxDomain domain{Vec2{-1.0, -1.0}, Vec2{1.0, 1.0}};
  std::string output_dir = ".";
  unsigned seed = 0;
  int quad_order = 2;
  int max_subdiv = 5;
  int sweep_steps = 64;
  bool record_kappa = true;
  bool write_vtk = false;
  bool debug_dumps = false;

  ProblemSetup make_setup() const;
};

/// Parses and validates a descriptor; throws ParameterError with the field
/// name on schema violations.
RunDescriptor parse_descriptor(const std::string& json_text);
RunDescriptor parse_descriptor_file(const std::string& path);

/// Runs the experiment, writing CSV (and optional VTK) artifacts into
/// output_dir. Returns the paths of the files written.
std::vector<std::string> run(const RunDescriptor& rd);

}  // namespace agfem
